use std::sync::Arc;

use super::{Arr, FinCategory, SetValuedFunctor};

/// All set-valued functors on `cat` with every carrier of size at most `k`,
/// one per isomorphism class, in canonical order.
pub fn enumerate_set_valued_functors(cat: &Arc<FinCategory>, k: usize) -> Vec<SetValuedFunctor> {
    let ranges = vec![(0, k); cat.num_objects()];
    enumerate_functors_in_ranges(cat, &ranges)
}

/// As `enumerate_set_valued_functors`, with an inclusive size range per
/// object.
pub fn enumerate_functors_in_ranges(
    cat: &Arc<FinCategory>,
    ranges: &[(usize, usize)],
) -> Vec<SetValuedFunctor> {
    let c = &**cat;
    let free: Vec<Arr> = c.arrows().filter(|&a| !c.is_identity(a)).collect();
    let pos = {
        let mut pos = vec![usize::MAX; c.num_arrows()];
        for (i, &a) in free.iter().enumerate() {
            pos[a] = i;
        }
        pos
    };
    // composition constraints, attached to the last free arrow they mention
    let mut checks: Vec<Vec<(Arr, Arr, Arr)>> = vec![Vec::new(); free.len()];
    for &g in &free {
        for &f in &free {
            if c.cod(f) == c.dom(g) {
                let h = c.compose(g, f);
                let mut last = pos[g].max(pos[f]);
                if !c.is_identity(h) {
                    last = last.max(pos[h]);
                }
                checks[last].push((g, f, h));
            }
        }
    }
    let mut out: Vec<SetValuedFunctor> = Vec::new();
    let mut group_start = 0;
    let mut sizes: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return out;
    }
    loop {
        let mut actions: Vec<Vec<usize>> = vec![Vec::new(); c.num_arrows()];
        for o in c.objects() {
            actions[c.identity(o)] = (0..sizes[o]).collect();
        }
        let mut found = Vec::new();
        fill(c, &free, &checks, &sizes, 0, &mut actions, &mut found);
        for acts in found {
            let cand = SetValuedFunctor::new(cat.clone(), sizes.clone(), acts);
            if !out[group_start..].iter().any(|r| find_natural_iso(r, &cand).is_some()) {
                out.push(cand);
            }
        }
        group_start = out.len();
        // next size vector, last object varies fastest
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if sizes[i] < ranges[i].1 {
                sizes[i] += 1;
                for j in i + 1..sizes.len() {
                    sizes[j] = ranges[j].0;
                }
                break;
            }
        }
    }
}

fn fill(
    c: &FinCategory,
    free: &[Arr],
    checks: &[Vec<(Arr, Arr, Arr)>],
    sizes: &[usize],
    i: usize,
    actions: &mut Vec<Vec<usize>>,
    found: &mut Vec<Vec<Vec<usize>>>,
) {
    if i == free.len() {
        found.push(actions.clone());
        return;
    }
    let a = free[i];
    let (d, e) = (sizes[c.dom(a)], sizes[c.cod(a)]);
    if d > 0 && e == 0 {
        return;
    }
    let mut table = vec![0; d];
    loop {
        actions[a] = table.clone();
        let ok = checks[i].iter().all(|&(g, f, h)| {
            (0..sizes[c.dom(f)]).all(|x| actions[g][actions[f][x]] == actions[h][x])
        });
        if ok {
            fill(c, free, checks, sizes, i + 1, actions, found);
        }
        // increment the table as a base-e counter, first entry slowest
        let mut j = d;
        loop {
            if j == 0 {
                actions[a].clear();
                return;
            }
            j -= 1;
            if table[j] + 1 < e {
                table[j] += 1;
                for t in table.iter_mut().skip(j + 1) {
                    *t = 0;
                }
                break;
            }
        }
    }
}

/// A natural isomorphism `F ⇒ G`, as one bijection per object, if any.
pub fn find_natural_iso(f: &SetValuedFunctor, g: &SetValuedFunctor) -> Option<Vec<Vec<usize>>> {
    let c = &*f.source;
    if f.carriers != g.carriers {
        return None;
    }
    let n = c.num_objects();
    // arrows checked once both endpoints have a chosen bijection
    let mut ready: Vec<Vec<Arr>> = vec![Vec::new(); n];
    for a in c.arrows() {
        if !c.is_identity(a) {
            ready[c.dom(a).max(c.cod(a))].push(a);
        }
    }
    let mut sigma: Vec<Vec<usize>> = vec![Vec::new(); n];
    if iso_search(f, g, &ready, 0, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

fn iso_search(
    f: &SetValuedFunctor,
    g: &SetValuedFunctor,
    ready: &[Vec<Arr>],
    o: usize,
    sigma: &mut Vec<Vec<usize>>,
) -> bool {
    if o == ready.len() {
        return true;
    }
    let c = &*f.source;
    let n = f.carriers[o];
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        sigma[o] = perm.clone();
        let ok = ready[o].iter().all(|&u| {
            let (d, e) = (c.dom(u), c.cod(u));
            (0..f.carriers[d]).all(|x| sigma[e][f.act(u, x)] == g.act(u, sigma[d][x]))
        });
        if ok && iso_search(f, g, ready, o + 1, sigma) {
            return true;
        }
        if !next_permutation(&mut perm) {
            sigma[o].clear();
            return false;
        }
    }
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::validate_set_functor;

    #[test]
    fn terminal_counts() {
        let t = Arc::new(FinCategory::terminal());
        assert_eq!(enumerate_set_valued_functors(&t, 1).len(), 2);
        assert_eq!(enumerate_set_valued_functors(&t, 2).len(), 3);
    }

    /// Independent count for a → b: every pair of sizes and every function
    /// table, deduplicated by trying all relabelings of both carriers.
    fn brute_force_arrow(k: usize) -> usize {
        let mut classes: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for m in 0..=k {
            for n in 0..=k {
                let total = if m == 0 { 1 } else { n.pow(m as u32) };
                for code in 0..total {
                    let mut t = Vec::new();
                    let mut c = code;
                    for _ in 0..m {
                        t.push(c % n.max(1));
                        c /= n.max(1);
                    }
                    let iso = classes.iter().any(|(m2, n2, t2)| {
                        if *m2 != m || *n2 != n {
                            return false;
                        }
                        let mut p: Vec<usize> = (0..m).collect();
                        loop {
                            let mut q: Vec<usize> = (0..n).collect();
                            loop {
                                if (0..m).all(|x| q[t[x]] == t2[p[x]]) {
                                    return true;
                                }
                                if !next_permutation(&mut q) {
                                    break;
                                }
                            }
                            if !next_permutation(&mut p) {
                                return false;
                            }
                        }
                    });
                    if !iso {
                        classes.push((m, n, t));
                    }
                }
            }
        }
        classes.len()
    }

    #[test]
    fn arrow_category_counts_match_brute_force() {
        let c = Arc::new(FinCategory::arrow_category());
        for k in 0..=2 {
            let e = enumerate_set_valued_functors(&c, k);
            assert_eq!(e.len(), brute_force_arrow(k), "k = {k}");
            assert!(e.iter().all(|m| validate_set_functor(m).is_empty()));
        }
        // frozen: k = 1 gives 0→0, 0→1, 1→1; k = 2 adds sizes with 2
        assert_eq!(enumerate_set_valued_functors(&c, 1).len(), 3);
        assert_eq!(enumerate_set_valued_functors(&c, 2).len(), 8);
    }

    #[test]
    fn enumeration_is_stable() {
        let c = Arc::new(FinCategory::arrow_category());
        assert_eq!(enumerate_set_valued_functors(&c, 2), enumerate_set_valued_functors(&c, 2));
    }
}
