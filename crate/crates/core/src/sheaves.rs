use std::collections::BTreeSet;
use std::sync::Arc;

use crate::coverage::{CoverageBasis, Presieve};
use crate::fincat::{
    category_of_elements, is_limit_cone, pullback, terminal_object, Arr, Diagram, FinCategory, FinFunctor, Obj,
    SetValuedFunctor,
};

/// A presheaf with finite carriers. `restrictions[u]` for `u: c → d` maps
/// `P(d)` to `P(c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinPresheaf {
    pub category: Arc<FinCategory>,
    pub carriers: Vec<usize>,
    pub restrictions: Vec<Vec<usize>>,
}

impl FinPresheaf {
    pub fn restrict(&self, u: Arr, x: usize) -> usize {
        self.restrictions[u][x]
    }

    /// `hom(-, c)`; elements of `P(x)` index `cat.hom(x, c)`.
    pub fn representable(cat: Arc<FinCategory>, c: Obj) -> FinPresheaf {
        let carriers = cat.objects().map(|x| cat.hom(x, c).len()).collect();
        let restrictions = cat
            .arrows()
            .map(|u| {
                let (x, y) = (cat.dom(u), cat.cod(u));
                cat.hom(y, c)
                    .iter()
                    .map(|&h| {
                        let hu = cat.compose(h, u);
                        cat.hom(x, c).iter().position(|&a| a == hu).expect("composite in hom")
                    })
                    .collect()
            })
            .collect();
        FinPresheaf { category: cat, carriers, restrictions }
    }

    pub fn constant(cat: Arc<FinCategory>, n: usize) -> FinPresheaf {
        let carriers = vec![n; cat.num_objects()];
        let restrictions = cat.arrows().map(|_| (0..n).collect()).collect();
        FinPresheaf { category: cat, carriers, restrictions }
    }

    /// The presheaf `P(c) = F(c)` for a set-valued functor on the opposite
    /// category, reindexed along `opposite`'s naming of arrows.
    pub fn from_opposite(cat: Arc<FinCategory>, f: &SetValuedFunctor) -> FinPresheaf {
        let op = &*f.source;
        let carriers = cat.objects().map(|c| f.carriers[op.object_by_name(cat.object_name(c)).unwrap()]).collect();
        let restrictions = cat
            .arrows()
            .map(|u| f.actions[op.arrow_by_name(cat.arrow_name(u)).unwrap()].clone())
            .collect();
        FinPresheaf { category: cat, carriers, restrictions }
    }

    /// Functoriality problems.
    pub fn validate(&self) -> Vec<String> {
        let c = &*self.category;
        let mut out = Vec::new();
        for u in c.arrows() {
            let (x, y) = (c.dom(u), c.cod(u));
            let r = &self.restrictions[u];
            if r.len() != self.carriers[y] || r.iter().any(|&v| v >= self.carriers[x]) {
                out.push(format!("restriction along {} is not a function", c.arrow_name(u)));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for o in c.objects() {
            if self.restrictions[c.identity(o)] != (0..self.carriers[o]).collect::<Vec<_>>() {
                out.push(format!("restriction along the identity of {} is not the identity", c.object_name(o)));
            }
        }
        for g in c.arrows() {
            for f in c.arrows().filter(|&f| c.cod(f) == c.dom(g)) {
                let h = c.compose(g, f);
                for x in 0..self.carriers[c.cod(g)] {
                    if self.restrict(f, self.restrict(g, x)) != self.restrict(h, x) {
                        out.push(format!(
                            "restriction along {} differs from {} then {}",
                            c.arrow_name(h),
                            c.arrow_name(g),
                            c.arrow_name(f)
                        ));
                        break;
                    }
                }
            }
        }
        out
    }
}

/// A family of elements over a presieve, one per arrow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingFamily {
    pub presieve: Presieve,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SheafFailure {
    /// Two sections with the same restrictions.
    NotSeparated { presieve: Presieve, first: usize, second: usize },
    /// A matching family with no amalgamation.
    NoAmalgamation(MatchingFamily),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SheafReport {
    pub families_checked: usize,
    pub failures: Vec<SheafFailure>,
}

impl SheafReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All matching families for `p` in `P`. Compatibility is checked on every
/// commuting pair `f_i ∘ g = f_j ∘ g'`.
pub fn matching_families(pre: &FinPresheaf, p: &Presieve) -> Vec<MatchingFamily> {
    let c = &*pre.category;
    let n = p.arrows.len();
    // constraints[i]: (j, g, g') with j ≤ i
    let mut constraints: Vec<Vec<(usize, Arr, Arr)>> = vec![Vec::new(); n];
    for i in 0..n {
        let fi = p.arrows[i];
        for j in 0..=i {
            let fj = p.arrows[j];
            for d in c.objects() {
                for &g in c.hom(d, c.dom(fi)) {
                    for &h in c.hom(d, c.dom(fj)) {
                        if c.compose(fi, g) == c.compose(fj, h) && !(i == j && g == h) {
                            constraints[i].push((j, g, h));
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut elems = vec![0; n];
    fn go(
        pre: &FinPresheaf,
        p: &Presieve,
        constraints: &[Vec<(usize, Arr, Arr)>],
        i: usize,
        elems: &mut Vec<usize>,
        out: &mut Vec<MatchingFamily>,
    ) {
        if i == elems.len() {
            out.push(MatchingFamily { presieve: p.clone(), elements: elems.clone() });
            return;
        }
        let ci = pre.category.dom(p.arrows[i]);
        'x: for x in 0..pre.carriers[ci] {
            elems[i] = x;
            for &(j, g, h) in &constraints[i] {
                if pre.restrict(g, elems[i]) != pre.restrict(h, elems[j]) {
                    continue 'x;
                }
            }
            go(pre, p, constraints, i + 1, elems, out);
        }
    }
    go(pre, p, &constraints, 0, &mut elems, &mut out);
    out
}

/// Every matching family for every basis presieve has exactly one
/// amalgamation.
pub fn is_sheaf(pre: &FinPresheaf, b: &CoverageBasis) -> SheafReport {
    let c = &*pre.category;
    let mut report = SheafReport::default();
    for o in c.objects() {
        for p in b.at(o) {
            let mut seen: std::collections::BTreeMap<Vec<usize>, usize> = std::collections::BTreeMap::new();
            for x in 0..pre.carriers[o] {
                let r: Vec<usize> = p.arrows.iter().map(|&f| pre.restrict(f, x)).collect();
                if let Some(&y) = seen.get(&r) {
                    report.failures.push(SheafFailure::NotSeparated { presieve: p.clone(), first: y, second: x });
                } else {
                    seen.insert(r, x);
                }
            }
            for m in matching_families(pre, p) {
                report.families_checked += 1;
                if !seen.contains_key(&m.elements) {
                    report.failures.push(SheafFailure::NoAmalgamation(m));
                }
            }
        }
    }
    report
}

/// A natural transformation between presheaves on one category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresheafMap {
    pub source: FinPresheaf,
    pub target: FinPresheaf,
    pub components: Vec<Vec<usize>>,
}

impl PresheafMap {
    pub fn identity(p: &FinPresheaf) -> PresheafMap {
        PresheafMap {
            source: p.clone(),
            target: p.clone(),
            components: p.carriers.iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn is_natural(&self) -> bool {
        let c = &*self.source.category;
        c.arrows().all(|u| {
            (0..self.source.carriers[c.cod(u)]).all(|x| {
                self.components[c.dom(u)][self.source.restrict(u, x)]
                    == self.target.restrict(u, self.components[c.cod(u)][x])
            })
        })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &PresheafMap) -> PresheafMap {
        PresheafMap {
            source: self.source.clone(),
            target: other.target.clone(),
            components: self
                .components
                .iter()
                .enumerate()
                .map(|(o, comp)| comp.iter().map(|&x| other.components[o][x]).collect())
                .collect(),
        }
    }
}

/// Every section of the target, restricted along some basis family, lands
/// in the image.
pub fn is_locally_surjective(alpha: &PresheafMap, b: &CoverageBasis) -> bool {
    let c = &*alpha.target.category;
    let images: Vec<BTreeSet<usize>> =
        alpha.components.iter().map(|comp| comp.iter().copied().collect()).collect();
    c.objects().all(|o| {
        (0..alpha.target.carriers[o]).all(|y| {
            b.at(o).iter().any(|p| {
                p.arrows.iter().all(|&f| images[c.dom(f)].contains(&alpha.target.restrict(f, y)))
            })
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CartesianError {
    #[error("source category has no terminal object")]
    NoTerminal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CartesianReport {
    pub preserves_terminal: bool,
    pub pullbacks_checked: usize,
    /// Cospans in the source without a pullback; not counted as failures.
    pub pullbacks_missing: usize,
    /// Cospans `(f, g)` whose pullback is not preserved.
    pub failures: Vec<(Arr, Arr)>,
}

impl CartesianReport {
    pub fn holds(&self) -> bool {
        self.preserves_terminal && self.failures.is_empty()
    }
}

/// Whether `f` preserves the terminal object and every pullback that exists
/// in its source.
pub fn is_cartesian_functor(f: &FinFunctor) -> Result<CartesianReport, CartesianError> {
    let s = &*f.source;
    let t = &*f.target;
    let one = terminal_object(s).ok_or(CartesianError::NoTerminal)?;
    let mut r = CartesianReport {
        preserves_terminal: is_limit_cone(t, &Diagram::empty(), f.obj(one), &[]).is_ok(),
        ..Default::default()
    };
    for (a, b) in cospans(s) {
        match pullback(s, a, b) {
            None => r.pullbacks_missing += 1,
            Some((p, l, rr)) => {
                r.pullbacks_checked += 1;
                let d = Diagram::cospan(t, f.arr(a), f.arr(b));
                let mut legs = vec![0; 3];
                legs[d.shape_object("l").unwrap()] = f.arr(l);
                legs[d.shape_object("r").unwrap()] = f.arr(rr);
                legs[d.shape_object("z").unwrap()] = f.arr(s.compose(a, l));
                if is_limit_cone(t, &d, f.obj(p), &legs).is_err() {
                    r.failures.push((a, b));
                }
            }
        }
    }
    Ok(r)
}

fn cospans(s: &FinCategory) -> Vec<(Arr, Arr)> {
    let mut out = Vec::new();
    for a in s.arrows() {
        for b in s.arrows().filter(|&b| b >= a && s.cod(b) == s.cod(a)) {
            out.push((a, b));
        }
    }
    out
}

/// Whether the square `p1, p2` over `f, g` is sent by `m` to a pullback of
/// sets.
pub fn preserves_square(m: &SetValuedFunctor, p1: Arr, p2: Arr, f: Arr, g: Arr) -> bool {
    let c = &*m.source;
    let p = c.dom(p1);
    let mut seen = BTreeSet::new();
    for z in 0..m.carriers[p] {
        if !seen.insert((m.act(p1, z), m.act(p2, z))) {
            return false;
        }
    }
    let (x, y) = (c.dom(f), c.dom(g));
    let fibre = (0..m.carriers[x])
        .flat_map(|a| (0..m.carriers[y]).map(move |b| (a, b)))
        .filter(|&(a, b)| m.act(f, a) == m.act(g, b))
        .count();
    fibre == seen.len()
}

/// As `is_cartesian_functor` for a set-valued functor: the terminal goes to
/// a singleton and existing pullbacks go to fiber products.
pub fn is_cartesian_set_functor(m: &SetValuedFunctor) -> Result<CartesianReport, CartesianError> {
    let s = &*m.source;
    let one = terminal_object(s).ok_or(CartesianError::NoTerminal)?;
    let mut r = CartesianReport { preserves_terminal: m.carriers[one] == 1, ..Default::default() };
    for (a, b) in cospans(s) {
        match pullback(s, a, b) {
            None => r.pullbacks_missing += 1,
            Some((_, l, rr)) => {
                r.pullbacks_checked += 1;
                if !preserves_square(m, l, rr, a, b) {
                    r.failures.push((a, b));
                }
            }
        }
    }
    Ok(r)
}

/// Whether the category of elements of `m` is cofiltered: nonempty, any
/// two objects have a common source, and any parallel pair is equalized.
pub fn elements_cofiltered(m: &SetValuedFunctor) -> bool {
    let e = category_of_elements(m);
    let c = &*e.category;
    if c.num_objects() == 0 {
        return false;
    }
    for x in c.objects() {
        for y in c.objects() {
            if !c.objects().any(|z| !c.hom(z, x).is_empty() && !c.hom(z, y).is_empty()) {
                return false;
            }
            for &u in c.hom(x, y) {
                for &v in c.hom(x, y) {
                    if u < v && !c.arrows_into(x).into_iter().any(|w| c.compose(u, w) == c.compose(v, w)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}
