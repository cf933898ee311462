use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::{check_continuous, is_point_cartesian, OverError, OverSite};
use crate::coverage::full_subcategory;
use crate::fincat::{enumerate_functors_in_ranges, find_natural_iso, Arr, FinCategory, FinFunctor, Obj, SetValuedFunctor};
use crate::logic::{
    check_hom, check_model, diagonal_formula, FinStructure, Formula, FormulaInContext, FragmentSite, ModelHom, Sort,
    Term, Theory,
};

/// A set-valued functor on an over-site with its two point conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointCandidate {
    pub functor: SetValuedFunctor,
    pub cartesian: bool,
    pub continuous: bool,
}

impl PointCandidate {
    pub fn new(frag: &FragmentSite, over: &OverSite, functor: SetValuedFunctor) -> PointCandidate {
        let cartesian = is_point_cartesian(frag, over, &functor).is_ok();
        let continuous = check_continuous(&functor, &over.basis);
        PointCandidate { functor, cartesian, continuous }
    }

    pub fn is_point(&self) -> bool {
        self.cartesian && self.continuous
    }
}

fn formula_name(frag: &FragmentSite, o: Obj) -> String {
    frag.formulas[o].0.clone()
}

/// The functor of fibers of `g`: `(φ, a)` goes to the tuples of `⟦φ⟧_N`
/// over `a`, and each arrow acts as the restriction of its graph in `N`.
pub fn hom_to_point(
    frag: &FragmentSite,
    over: &OverSite,
    n: &FinStructure,
    g: &ModelHom,
) -> Result<PointCandidate, OverError> {
    let m = &frag.model;
    let report = check_hom(n, m, g)?;
    if !report.holds() {
        return Err(OverError::NotAHom(format!("{:?}", report.failures[0])));
    }
    let inn = frag.interpret(n)?;
    let im = &frag.interp;
    let fc = &*frag.category;
    // fiber_of[φ][i]: the element of ⟦φ⟧_M under the i-th tuple of ⟦φ⟧_N
    let mut fiber_of = Vec::with_capacity(fc.num_objects());
    let mut local = Vec::with_capacity(fc.num_objects());
    let mut fibers: Vec<Vec<Vec<usize>>> = Vec::with_capacity(fc.num_objects());
    for phi in fc.objects() {
        let ctx = &frag.formula(phi).context;
        let index: HashMap<&Vec<usize>, usize> = im.tuples[phi].iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut over_a = vec![Vec::new(); im.tuples[phi].len()];
        let mut of = Vec::new();
        let mut loc = Vec::new();
        for (i, t) in inn.tuples[phi].iter().enumerate() {
            let a = *index
                .get(&g.apply_tuple(ctx, t))
                .ok_or_else(|| OverError::NotNatural { formula: formula_name(frag, phi) })?;
            of.push(a);
            loc.push(over_a[a].len());
            over_a[a].push(i);
        }
        fiber_of.push(of);
        local.push(loc);
        fibers.push(over_a);
    }
    let cat = &over.category;
    let mut carriers = Vec::with_capacity(cat.num_objects());
    let mut labels = Vec::with_capacity(cat.num_objects());
    for k in &over.objects {
        let fib = &fibers[k.formula][k.element];
        carriers.push(fib.len());
        let ctx = &frag.formula(k.formula).context;
        labels.push(fib.iter().map(|&i| n.tuple_label(ctx, &inn.tuples[k.formula][i])).collect());
    }
    let mut actions = Vec::with_capacity(cat.num_arrows());
    for a in cat.arrows() {
        let theta = over.projection.arr(a);
        let src = over.objects[cat.dom(a)];
        let tgt = over.objects[cat.cod(a)];
        let mut table = Vec::new();
        for &i in &fibers[src.formula][src.element] {
            let j = inn.functor.act(theta, i);
            if fiber_of[tgt.formula][j] != tgt.element {
                return Err(OverError::NotNatural { formula: formula_name(frag, tgt.formula) });
            }
            table.push(local[tgt.formula][j]);
        }
        actions.push(table);
    }
    let functor = SetValuedFunctor::new(cat.clone(), carriers, actions).with_labels(labels);
    Ok(PointCandidate::new(frag, over, functor))
}

fn find_formula(frag: &FragmentSite, phi: &FormulaInContext) -> Option<Obj> {
    frag.formulas.iter().position(|(_, f)| f == phi)
}

fn require_formula(frag: &FragmentSite, phi: FormulaInContext) -> Result<Obj, OverError> {
    find_formula(frag, &phi).ok_or_else(|| OverError::MissingFormula(phi.display(&frag.theory.signature)))
}

fn require_arrow(frag: &FragmentSite, dom: Obj, cod: Obj, theta: Formula, what: String) -> Result<Arr, OverError> {
    frag.arrow_for_graph(dom, cod, &theta).ok_or(OverError::MissingArrow(what))
}

/// The arrow of the over-site above `theta` out of `src`.
fn lift(over: &OverSite, theta: Arr, src: Obj) -> Arr {
    over.category
        .arrows_from(src)
        .into_iter()
        .find(|&a| over.projection.arr(a) == theta)
        .expect("arrow of the over-site")
}

/// Reads `G` at `⊤[A⃗]` over each tuple as tuples of `N`, via the
/// projections. Fails unless this is a bijection onto the product of the
/// fibers.
struct ProductReader {
    object: Obj,
    /// Per M-tuple index: for each element of G there, the N-tuple.
    decoded: Vec<Vec<Vec<usize>>>,
}

fn read_product(
    frag: &FragmentSite,
    over: &OverSite,
    g: &SetValuedFunctor,
    sorts: &[Sort],
    sort_objects: &[Obj],
    offsets: &[Vec<usize>],
) -> Result<ProductReader, OverError> {
    let sig = &frag.theory.signature;
    let object = require_formula(frag, FormulaInContext::top(sorts.to_vec()))?;
    let n = sorts.len();
    let mut projections = Vec::new();
    for (i, &s) in sorts.iter().enumerate() {
        let theta = Formula::Eq(Term::Var(n), Term::Var(i));
        projections.push(require_arrow(
            frag,
            object,
            sort_objects[s],
            theta,
            format!("projection {} of {}", i, frag.formula(object).display(sig)),
        )?);
    }
    let m = &frag.interp;
    let mut decoded = Vec::new();
    for (ti, t) in m.tuples[object].iter().enumerate() {
        let e = over.object_of(0, object, ti).expect("element");
        let mut seen = BTreeSet::new();
        let mut rows = Vec::new();
        let mut expected = 1;
        for (i, &s) in sorts.iter().enumerate() {
            let ei = over.object_of(0, sort_objects[s], t[i]).expect("element");
            expected *= g.carriers[ei];
        }
        for z in 0..g.carriers[e] {
            let row: Vec<usize> = (0..n)
                .map(|i| offsets[sorts[i]][t[i]] + g.act(lift(over, projections[i], e), z))
                .collect();
            seen.insert(row.clone());
            rows.push(row);
        }
        if seen.len() != rows.len() || rows.len() != expected {
            return Err(OverError::NotCartesian(format!(
                "{} is not the product of its projections",
                over.category.object_name(e)
            )));
        }
        decoded.push(rows);
    }
    Ok(ProductReader { object, decoded })
}

/// The structure `N` whose carrier at `A` is the disjoint union of `G` at
/// `(⊤[x:A], a)`, with the homomorphism sending that summand to `a`.
/// Functions are read off the graph arrows and relations off the formulas
/// `R(x⃗)` with their inclusions, so those must be in the fragment.
pub fn point_to_hom(
    frag: &FragmentSite,
    over: &OverSite,
    g: &SetValuedFunctor,
) -> Result<(FinStructure, ModelHom), OverError> {
    let sig = frag.theory.signature.clone();
    let m = &frag.model;
    let sort_objects: Vec<Obj> =
        (0..sig.sorts.len()).map(|s| require_formula(frag, FormulaInContext::top(vec![s]))).collect::<Result<_, _>>()?;
    let im = &frag.interp;
    let mut carriers = vec![0; sig.sorts.len()];
    let mut offsets = vec![Vec::new(); sig.sorts.len()];
    let mut labels = vec![Vec::new(); sig.sorts.len()];
    let mut maps = vec![Vec::new(); sig.sorts.len()];
    for (s, &o) in sort_objects.iter().enumerate() {
        for a in 0..m.carriers[s] {
            let ti = im.tuples[o].iter().position(|t| t == &vec![a]).expect("every element satisfies top");
            let e = over.object_of(0, o, ti).expect("element");
            offsets[s].push(carriers[s]);
            for i in 0..g.carriers[e] {
                labels[s].push(format!("{}.{}", m.label(s, a), i));
                maps[s].push(a);
            }
            carriers[s] += g.carriers[e];
        }
    }
    let mut n = FinStructure::blank(sig.clone(), carriers);
    n.labels = labels;
    for (f, sym) in sig.functions.iter().enumerate() {
        let reader = read_product(frag, over, g, &sym.args, &sort_objects, &offsets)?;
        let k = sym.args.len();
        let theta = Formula::Eq(Term::Var(k), Term::App(f, (0..k).map(Term::Var).collect()));
        let graph = require_arrow(frag, reader.object, sort_objects[sym.result], theta, format!("graph of {}", sym.name))?;
        for (ti, t) in im.tuples[reader.object].iter().enumerate() {
            let e = over.object_of(0, reader.object, ti).expect("element");
            let b = m.apply(f, t);
            let u = lift(over, graph, e);
            for (z, args) in reader.decoded[ti].iter().enumerate() {
                n.set_function(f, args, offsets[sym.result][b] + g.act(u, z));
            }
        }
    }
    for (r, sym) in sig.relations.iter().enumerate() {
        let reader = read_product(frag, over, g, &sym.args, &sort_objects, &offsets)?;
        let k = sym.args.len();
        let rel = require_formula(frag, FormulaInContext::new(sym.args.clone(), Formula::Rel(r, (0..k).map(Term::Var).collect())))?;
        let incl = require_arrow(frag, rel, reader.object, diagonal_formula(k), format!("inclusion of {}", sym.name))?;
        for (ti, t) in im.tuples[rel].iter().enumerate() {
            let e = over.object_of(0, rel, ti).expect("element");
            let pi = im.tuples[reader.object].iter().position(|p| p == t).expect("relation tuple in the product");
            let u = lift(over, incl, e);
            for w in 0..g.carriers[e] {
                n.relations[r].insert(reader.decoded[pi][g.act(u, w)].clone());
            }
        }
    }
    if let Some(p) = n.validate().first() {
        return Err(OverError::Invalid(p.clone()));
    }
    let h = ModelHom { maps };
    let report = check_hom(&n, m, &h)?;
    if !report.holds() {
        return Err(OverError::NotAHom(format!("{:?}", report.failures[0])));
    }
    if let Some(&i) = check_model(&n, &frag.theory)?.first() {
        return Err(OverError::NotAModel(frag.theory.axioms[i].display(&sig)));
    }
    Ok((n, h))
}

/// `hom_to_point ∘ point_to_hom` is naturally isomorphic to the identity
/// at `g`.
pub fn round_trip_point(frag: &FragmentSite, over: &OverSite, g: &SetValuedFunctor) -> Result<bool, OverError> {
    let (n, h) = point_to_hom(frag, over, g)?;
    let back = hom_to_point(frag, over, &n, &h)?;
    Ok(find_natural_iso(g, &back.functor).is_some())
}

/// `point_to_hom ∘ hom_to_point` gives a structure isomorphic to `n` over
/// the model.
pub fn round_trip_hom(frag: &FragmentSite, over: &OverSite, n: &FinStructure, g: &ModelHom) -> Result<bool, OverError> {
    let p = hom_to_point(frag, over, n, g)?;
    let (n2, g2) = point_to_hom(frag, over, &p.functor)?;
    Ok(find_iso_over(n, g, &n2, &g2, frag.model.carriers.len()).is_some())
}

fn fibers_of(n: &FinStructure, g: &ModelHom, s: Sort, size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); size];
    for x in 0..n.carriers[s] {
        out[g.maps[s][x]].push(x);
    }
    out
}

/// Every bijection of a sort's carrier that maps each fiber of `g` onto
/// the matching fiber of `g2`.
fn fiber_bijections(f1: &[Vec<usize>], f2: &[Vec<usize>], size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![usize::MAX; size]];
    for (a, b) in f1.iter().zip(f2) {
        let mut perm: Vec<usize> = (0..a.len()).collect();
        let mut next = Vec::new();
        loop {
            for partial in &out {
                let mut p = partial.clone();
                for (i, &x) in a.iter().enumerate() {
                    p[x] = b[perm[i]];
                }
                next.push(p);
            }
            if !crate::fincat::next_permutation(&mut perm) {
                break;
            }
        }
        out = next;
    }
    out
}

/// An isomorphism `σ: n → n2` with `g2 ∘ σ = g`, by exhaustive search over
/// fiber-preserving bijections.
pub fn find_iso_over(
    n: &FinStructure,
    g: &ModelHom,
    n2: &FinStructure,
    g2: &ModelHom,
    num_sorts: usize,
) -> Option<ModelHom> {
    if n.carriers != n2.carriers || n.relations.iter().zip(&n2.relations).any(|(a, b)| a.len() != b.len()) {
        return None;
    }
    let mut choices = Vec::with_capacity(num_sorts);
    for s in 0..num_sorts {
        let size = g.maps[s].iter().chain(&g2.maps[s]).map(|&a| a + 1).max().unwrap_or(0);
        let f1 = fibers_of(n, g, s, size);
        let f2 = fibers_of(n2, g2, s, size);
        if f1.iter().zip(&f2).any(|(a, b)| a.len() != b.len()) {
            return None;
        }
        choices.push(fiber_bijections(&f1, &f2, n.carriers[s]));
    }
    let sig = &n.signature;
    let mut idx = vec![0; num_sorts];
    loop {
        let h = ModelHom { maps: (0..num_sorts).map(|s| choices[s][idx[s]].clone()).collect() };
        let functions_ok = sig.functions.iter().enumerate().all(|(f, sym)| {
            crate::logic::product_tuples(n, &sym.args)
                .into_iter()
                .all(|t| h.maps[sym.result][n.apply(f, &t)] == n2.apply(f, &h.apply_tuple(&sym.args, &t)))
        });
        let relations_ok = sig.relations.iter().enumerate().all(|(r, sym)| {
            n.relations[r].iter().all(|t| n2.relations[r].contains(&h.apply_tuple(&sym.args, t)))
        });
        if functions_ok && relations_ok {
            return Some(h);
        }
        let mut s = 0;
        loop {
            if s == num_sorts {
                return None;
            }
            idx[s] += 1;
            if idx[s] < choices[s].len() {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

fn odometer(digits: &mut [usize], bound: impl Fn(usize) -> usize) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < bound(i) {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Homomorphisms `N → M` of models of `theory` with every fiber of size at
/// most `k`, one per isomorphism class over `M`. Built directly from fiber
/// sizes, function tables and relation subsets, without the fragment.
pub fn enumerate_homs(
    theory: &Theory,
    m: &FinStructure,
    k: usize,
    cap: usize,
) -> Result<Vec<(FinStructure, ModelHom)>, OverError> {
    let sig = theory.signature.clone();
    let ns = sig.sorts.len();
    let slots: Vec<(Sort, usize)> = (0..ns).flat_map(|s| (0..m.carriers[s]).map(move |a| (s, a))).collect();
    let mut sizes = vec![0; slots.len()];
    let mut out: Vec<(FinStructure, ModelHom)> = Vec::new();
    let mut by_sizes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut examined = 0usize;
    loop {
        let mut carriers = vec![0; ns];
        let mut maps = vec![Vec::new(); ns];
        let mut labels = vec![Vec::new(); ns];
        for (&(s, a), &n) in slots.iter().zip(&sizes) {
            for i in 0..n {
                maps[s].push(a);
                labels[s].push(format!("{}.{}", m.label(s, a), i));
            }
            carriers[s] += n;
        }
        let mut base = FinStructure::blank(sig.clone(), carriers);
        base.labels = labels;
        let g = ModelHom { maps };
        // per function and argument tuple, the admissible values
        let mut cells: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        let mut possible = true;
        for (f, sym) in sig.functions.iter().enumerate() {
            for t in crate::logic::product_tuples(&base, &sym.args) {
                let target = m.apply(f, &g.apply_tuple(&sym.args, &t));
                let options: Vec<usize> = (0..base.carriers[sym.result]).filter(|&y| g.maps[sym.result][y] == target).collect();
                if options.is_empty() {
                    possible = false;
                }
                cells.push((f, t, options));
            }
        }
        let mut rel_cells: Vec<(usize, Vec<usize>)> = Vec::new();
        for (r, sym) in sig.relations.iter().enumerate() {
            for t in crate::logic::product_tuples(&base, &sym.args) {
                if m.relations[r].contains(&g.apply_tuple(&sym.args, &t)) {
                    rel_cells.push((r, t));
                }
            }
        }
        if possible {
            if rel_cells.len() >= 32 {
                return Err(OverError::Invalid("too many relation tuples to enumerate".into()));
            }
            let mut choice = vec![0; cells.len()];
            loop {
                for mask in 0u64..(1u64 << rel_cells.len()) {
                    examined += 1;
                    if examined > cap {
                        return Err(OverError::Invalid(format!("more than {cap} candidate structures")));
                    }
                    let mut n = base.clone();
                    for ((f, t, options), &c) in cells.iter().zip(&choice) {
                        n.set_function(*f, t, options[c]);
                    }
                    for (i, (r, t)) in rel_cells.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            n.relations[*r].insert(t.clone());
                        }
                    }
                    if !check_model(&n, theory)?.is_empty() {
                        continue;
                    }
                    let same = by_sizes.entry(sizes.clone()).or_default();
                    if same.iter().any(|&j| find_iso_over(&n, &g, &out[j].0, &out[j].1, ns).is_some()) {
                        continue;
                    }
                    same.push(out.len());
                    out.push((n, g.clone()));
                }
                if !odometer(&mut choice, |i| cells[i].2.len()) {
                    break;
                }
            }
        }
        if !odometer(&mut sizes, |_| k + 1) {
            break;
        }
    }
    Ok(out)
}

/// Over-site objects whose fragment formula is the apex of a designated
/// pullback with no invertible leg; a cartesian point is determined by its
/// values elsewhere.
fn derived_objects(frag: &FragmentSite, over: &OverSite) -> BTreeSet<Obj> {
    let apexes: BTreeSet<Obj> =
        frag.pullbacks.iter().filter(|p| p.is_proper(&frag.category)).map(|p| p.apex).collect();
    over.category.objects().filter(|&o| apexes.contains(&over.objects[o].formula)).collect()
}

/// Extends a functor on a full subcategory to the whole category as the
/// limit over arrows into the subcategory, keeping it unchanged on the
/// subcategory.
pub fn right_kan_extend(cat: &Arc<FinCategory>, incl: &FinFunctor, g: &SetValuedFunctor) -> SetValuedFunctor {
    let c = &**cat;
    let mut sub_obj = vec![None; c.num_objects()];
    for o in incl.source.objects() {
        sub_obj[incl.obj(o)] = Some(o);
    }
    let mut sub_arr = vec![None; c.num_arrows()];
    for a in incl.source.arrows() {
        sub_arr[incl.arr(a)] = Some(a);
    }
    // legs[x]: arrows from x into the subcategory; families[x]: compatible
    // choices, one value per leg
    let mut legs: Vec<Vec<Arr>> = vec![Vec::new(); c.num_objects()];
    let mut families: Vec<Vec<Vec<usize>>> = vec![Vec::new(); c.num_objects()];
    let mut index: Vec<HashMap<Vec<usize>, usize>> = vec![HashMap::new(); c.num_objects()];
    for x in c.objects().filter(|&x| sub_obj[x].is_none()) {
        let l: Vec<Arr> = c.arrows_from(x).into_iter().filter(|&u| sub_obj[c.cod(u)].is_some()).collect();
        let pos: HashMap<Arr, usize> = l.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        // constraints s[j] = G(w)(s[i]) for w∘l[i] = l[j], checked when the
        // later of i, j is assigned
        let mut checks: Vec<Vec<(usize, Arr, usize)>> = vec![Vec::new(); l.len()];
        for (i, &u) in l.iter().enumerate() {
            for w in c.arrows_from(c.cod(u)) {
                if let (Some(sw), Some(&j)) = (sub_arr[w], pos.get(&c.compose(w, u))) {
                    checks[i.max(j)].push((i, sw, j));
                }
            }
        }
        let sizes: Vec<usize> = l.iter().map(|&u| g.carriers[sub_obj[c.cod(u)].unwrap()]).collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        extend_families(g, &sizes, &checks, &mut cur, &mut out);
        index[x] = out.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        families[x] = out;
        legs[x] = l;
    }
    let carriers: Vec<usize> =
        c.objects().map(|x| sub_obj[x].map_or(families[x].len(), |s| g.carriers[s])).collect();
    let leg_pos: Vec<HashMap<Arr, usize>> =
        legs.iter().map(|l| l.iter().enumerate().map(|(i, &u)| (u, i)).collect()).collect();
    let mut actions = Vec::with_capacity(c.num_arrows());
    for v in c.arrows() {
        let (x, y) = (c.dom(v), c.cod(v));
        let table: Vec<usize> = (0..carriers[x])
            .map(|e| match (sub_obj[x], sub_obj[y]) {
                (Some(_), Some(_)) => g.act(sub_arr[v].unwrap(), e),
                (Some(_), None) => {
                    let fam: Vec<usize> =
                        legs[y].iter().map(|&u| g.act(sub_arr[c.compose(u, v)].unwrap(), e)).collect();
                    index[y][&fam]
                }
                (None, Some(_)) => families[x][e][leg_pos[x][&v]],
                (None, None) => {
                    let fam: Vec<usize> =
                        legs[y].iter().map(|&u| families[x][e][leg_pos[x][&c.compose(u, v)]]).collect();
                    index[y][&fam]
                }
            })
            .collect();
        actions.push(table);
    }
    SetValuedFunctor::new(cat.clone(), carriers, actions)
}

fn extend_families(
    g: &SetValuedFunctor,
    sizes: &[usize],
    checks: &[Vec<(usize, Arr, usize)>],
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let i = cur.len();
    if i == sizes.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..sizes[i] {
        cur.push(v);
        if checks[i].iter().all(|&(a, w, b)| g.act(w, cur[a]) == cur[b]) {
            extend_families(g, sizes, checks, cur, out);
        }
        cur.pop();
    }
}

/// The cartesian continuous functors on the over-site, up to isomorphism,
/// with every fiber at most `k` away from the terminal element and the
/// apexes of designated pullbacks. The terminal fiber is a singleton and
/// apex values are forced by cartesianness, so they may exceed `k`.
pub fn enumerate_points(frag: &FragmentSite, over: &OverSite, k: usize) -> Vec<PointCandidate> {
    let derived = derived_objects(frag, over);
    let keep: Vec<Obj> = over.category.objects().filter(|o| !derived.contains(o)).collect();
    let (sub, incl) = full_subcategory(&over.category, &keep);
    let ranges: Vec<(usize, usize)> = sub
        .objects()
        .map(|o| if over.objects[incl.obj(o)].formula == frag.terminal { (1, 1) } else { (0, k) })
        .collect();
    enumerate_functors_in_ranges(&sub, &ranges)
        .into_iter()
        .map(|g| PointCandidate::new(frag, over, right_kan_extend(&over.category, &incl, &g)))
        .filter(PointCandidate::is_point)
        .collect()
}
