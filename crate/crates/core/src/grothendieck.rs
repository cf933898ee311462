use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coverage::Presieve;
use crate::fincat::{
    compute_limit, is_limit_cone, terminal_object, validate_functor, Arr, CategoryBuilder,
    ConeWitness, Diagram, FinCategory, FinFunctor, Obj,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrothendieckError {
    #[error("invalid indexed category: {0}")]
    Invalid(String),
    #[error("fiber over {0} has no terminal object")]
    MissingFiberTerminal(String),
    #[error("base limit missing: {0}")]
    MissingBaseLimit(String),
    #[error("fiber limit missing over {0}")]
    MissingFiberLimit(String),
    #[error("too many descent data (more than {0})")]
    TooLarge(usize),
}

/// A strict contravariant functor from `base` to finite categories.
/// `transitions[u]` maps the fiber over `cod u` to the fiber over `dom u`.
#[derive(Debug, Clone)]
pub struct IndexedCategory {
    pub base: Arc<FinCategory>,
    pub fibers: Vec<Arc<FinCategory>>,
    pub transitions: Vec<FinFunctor>,
}

impl IndexedCategory {
    pub fn transition(&self, u: Arr) -> &FinFunctor {
        &self.transitions[u]
    }

    /// Problems with shapes, functoriality of the transitions and strictness.
    pub fn validate(&self) -> Vec<String> {
        let b = &*self.base;
        let mut out = Vec::new();
        if self.fibers.len() != b.num_objects() || self.transitions.len() != b.num_arrows() {
            out.push("fiber or transition count does not match the base".into());
            return out;
        }
        for u in b.arrows() {
            let t = &self.transitions[u];
            if t.source != self.fibers[b.cod(u)] || t.target != self.fibers[b.dom(u)] {
                out.push(format!("transition {} has the wrong fibers", b.arrow_name(u)));
                continue;
            }
            for e in validate_functor(t) {
                out.push(format!("transition {}: {}", b.arrow_name(u), e));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for c in b.objects() {
            let t = &self.transitions[b.identity(c)];
            if *t != FinFunctor::identity(self.fibers[c].clone()) {
                out.push(format!("transition of identity at {} is not the identity", b.object_name(c)));
            }
        }
        for g in b.arrows() {
            for f in b.arrows().filter(|&f| b.cod(f) == b.dom(g)) {
                let h = b.compose(g, f);
                // I(g∘f) = I(f) ∘ I(g)
                let composed = self.transitions[f].compose_after(&self.transitions[g]);
                if composed != self.transitions[h] {
                    out.push(format!(
                        "transition of {} differs from the composite for {} then {}",
                        b.arrow_name(h),
                        b.arrow_name(g),
                        b.arrow_name(f)
                    ));
                }
            }
        }
        out
    }
}

/// The total category of an indexed category.
#[derive(Debug, Clone)]
pub struct TotalCategory {
    pub category: Arc<FinCategory>,
    pub projection: FinFunctor,
    /// `(c, a)` per object.
    pub objects: Vec<(Obj, Obj)>,
    /// `(u, m)` per arrow, with `m: a → I(u)(a')`.
    pub arrows: Vec<(Arr, Arr)>,
    /// `(u, a')` to the cartesian arrow `(u, id)`.
    pub lifts: BTreeMap<(Arr, Obj), Arr>,
}

impl TotalCategory {
    pub fn object_of(&self, c: Obj, a: Obj) -> Option<Obj> {
        self.objects.iter().position(|&p| p == (c, a))
    }

    /// The arrow with components `(u, m)` out of `source`.
    pub fn arrow_of(&self, source: Obj, u: Arr, m: Arr, target: Obj) -> Option<Arr> {
        self.category.hom(source, target).iter().copied().find(|&x| self.arrows[x] == (u, m))
    }

    /// The cartesian lift of `u` at `a` in the fiber over `cod u`.
    pub fn lift(&self, u: Arr, a: Obj) -> Option<Arr> {
        self.lifts.get(&(u, a)).copied()
    }
}

pub fn grothendieck_construction(ic: &IndexedCategory) -> Result<TotalCategory, GrothendieckError> {
    let problems = ic.validate();
    if !problems.is_empty() {
        return Err(GrothendieckError::Invalid(problems.join("; ")));
    }
    let b = &*ic.base;
    let oname = |c: Obj, a: Obj| format!("{}|{}", b.object_name(c), ic.fibers[c].object_name(a));
    let mut builder = CategoryBuilder::new().raw();
    // (source, target, u, m, name)
    let mut arrs: Vec<((Obj, Obj), (Obj, Obj), Arr, Arr, String)> = Vec::new();
    for c in b.objects() {
        for a in ic.fibers[c].objects() {
            let fc = &*ic.fibers[c];
            builder.object_with_identity(
                &oname(c, a),
                &format!("{}|{}|{}", b.arrow_name(b.identity(c)), fc.arrow_name(fc.identity(a)), fc.object_name(a)),
            );
        }
    }
    for u in b.arrows() {
        let (c, c2) = (b.dom(u), b.cod(u));
        let fc = &*ic.fibers[c];
        let t = &ic.transitions[u];
        for a2 in ic.fibers[c2].objects() {
            let image = t.obj(a2);
            for a in fc.objects() {
                for &m in fc.hom(a, image) {
                    let name = format!("{}|{}|{}", b.arrow_name(u), fc.arrow_name(m), ic.fibers[c2].object_name(a2));
                    arrs.push(((c, a), (c2, a2), u, m, name));
                }
            }
        }
    }
    for x in &arrs {
        if !(b.is_identity(x.2) && ic.fibers[x.0 .0].is_identity(x.3)) {
            builder.arrow(&x.4, &oname(x.0 .0, x.0 .1), &oname(x.1 .0, x.1 .1));
        }
    }
    let mut by_key: BTreeMap<((Obj, Obj), (Obj, Obj), Arr, Arr), String> = BTreeMap::new();
    for x in &arrs {
        by_key.insert((x.0, x.1, x.2, x.3), x.4.clone());
    }
    for g in &arrs {
        for f in arrs.iter().filter(|f| f.1 == g.0) {
            // (u', m') ∘ (u, m) = (u' ∘ u, I(u)(m') ∘ m)
            let fc = &*ic.fibers[f.0 .0];
            let m = fc.compose(ic.transitions[f.2].arr(g.3), f.3);
            let key = (f.0, g.1, b.compose(g.2, f.2), m);
            let h = by_key.get(&key).expect("composite lies in the total category");
            builder.compose_entry(&g.4, &f.4, h);
        }
    }
    let cat = Arc::new(builder.build().map_err(|e| GrothendieckError::Invalid(e.to_string()))?);
    let mut objects = vec![(0, 0); cat.num_objects()];
    for c in b.objects() {
        for a in ic.fibers[c].objects() {
            objects[cat.object_by_name(&oname(c, a)).unwrap()] = (c, a);
        }
    }
    let mut arrows = vec![(0, 0); cat.num_arrows()];
    let mut lifts = BTreeMap::new();
    for x in &arrs {
        let i = cat.arrow_by_name(&x.4).unwrap();
        arrows[i] = (x.2, x.3);
        if ic.fibers[x.0 .0].is_identity(x.3) {
            lifts.insert((x.2, x.1 .1), i);
        }
    }
    let projection = FinFunctor {
        source: cat.clone(),
        target: ic.base.clone(),
        on_objects: objects.iter().map(|p| p.0).collect(),
        on_arrows: arrows.iter().map(|p| p.0).collect(),
    };
    Ok(TotalCategory { category: cat, projection, objects, arrows, lifts })
}

/// Whether every recorded lift is cartesian: each arrow into its target
/// whose base component factors through the lift's base arrow factors
/// uniquely through the lift over that base factorization.
pub fn check_lifts_cartesian(ic: &IndexedCategory, total: &TotalCategory) -> bool {
    let b = &*ic.base;
    let t = &*total.category;
    total.lifts.values().all(|&l| {
        let (u, _) = total.arrows[l];
        t.arrows_into(t.cod(l)).into_iter().all(|h| {
            let (v, _) = total.arrows[h];
            b.hom(b.dom(v), b.dom(u)).iter().all(|&w| {
                if b.compose(u, w) != v {
                    return true;
                }
                let n = t
                    .hom(t.dom(h), t.dom(l))
                    .iter()
                    .filter(|&&k| total.arrows[k].0 == w && t.compose(l, k) == h)
                    .count();
                n == 1
            })
        })
    })
}

/// The square from a lift of `u` at `a` to the lift of `u` at the fiber
/// terminal, with the two vertical arrows to terminals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftSquare {
    pub base_arrow: Arr,
    pub fiber_object: Obj,
    pub is_pullback: bool,
}

/// Checks, for every base arrow `u: c1 → c2` and object `a` over `c2`, that
/// the lift of `u` at `a` is the pullback of the lift at the terminal
/// along `a → 1`.
pub fn check_terminal_lift_pullback(
    ic: &IndexedCategory,
    total: &TotalCategory,
) -> Result<Vec<LiftSquare>, GrothendieckError> {
    let b = &*ic.base;
    let t = &*total.category;
    let mut terminals = Vec::new();
    for c in b.objects() {
        terminals.push(
            terminal_object(&ic.fibers[c])
                .ok_or_else(|| GrothendieckError::MissingFiberTerminal(b.object_name(c).into()))?,
        );
    }
    let bang = |c: Obj, a: Obj| ic.fibers[c].hom(a, terminals[c])[0];
    let mut out = Vec::new();
    for u in b.arrows() {
        let (c1, c2) = (b.dom(u), b.cod(u));
        for a in ic.fibers[c2].objects() {
            let ua = ic.transitions[u].obj(a);
            let top = total.lift(u, a).expect("lift recorded");
            let right = total
                .arrow_of(total.object_of(c2, a).unwrap(), b.identity(c2), bang(c2, a), total.object_of(c2, terminals[c2]).unwrap())
                .unwrap();
            let left = total
                .arrow_of(total.object_of(c1, ua).unwrap(), b.identity(c1), bang(c1, ua), total.object_of(c1, terminals[c1]).unwrap())
                .unwrap();
            // bottom: (u, 1 → I(u)(1)), the unique such arrow when I(u)
            // preserves the terminal
            let image_top = ic.transitions[u].obj(terminals[c2]);
            let bottom_m = ic.fibers[c1].hom(terminals[c1], image_top);
            let is_pullback = if bottom_m.len() != 1 {
                false
            } else {
                let bottom = total
                    .arrow_of(
                        total.object_of(c1, terminals[c1]).unwrap(),
                        u,
                        bottom_m[0],
                        total.object_of(c2, terminals[c2]).unwrap(),
                    )
                    .unwrap();
                let d = Diagram::cospan(t, right, bottom);
                let l = d.shape_object("l").unwrap();
                let r = d.shape_object("r").unwrap();
                let z = d.shape_object("z").unwrap();
                let mut legs = vec![0; 3];
                legs[l] = top;
                legs[r] = left;
                legs[z] = t.compose(right, top);
                t.compose(right, top) == t.compose(bottom, left)
                    && is_limit_cone(t, &d, t.dom(top), &legs).is_ok()
            };
            out.push(LiftSquare { base_arrow: u, fiber_object: a, is_pullback });
        }
    }
    Ok(out)
}

/// A limit in the total category assembled from a base limit and a fiber
/// limit, with the direct search result for comparison.
#[derive(Debug, Clone)]
pub struct TotalLimit {
    pub witness: ConeWitness,
    /// Apex found by exhaustive search in the total category.
    pub direct_apex: Option<Obj>,
    /// Whether the assembled apex is isomorphic to the direct one.
    pub agrees: bool,
}

pub fn limit_in_total(
    ic: &IndexedCategory,
    total: &TotalCategory,
    d: &Diagram,
) -> Result<TotalLimit, GrothendieckError> {
    let b = &*ic.base;
    let t = &*total.category;
    let base_d = Diagram {
        shape: d.shape.clone(),
        objects: d.objects.iter().map(|&o| total.objects[o].0).collect(),
        arrows: d.arrows.iter().map(|&a| total.arrows[a].0).collect(),
    };
    let bl = compute_limit(b, &base_d).ok_or_else(|| GrothendieckError::MissingBaseLimit(format!("{} objects", d.objects.len())))?;
    let l = bl.apex;
    let fiber = &*ic.fibers[l];
    // I(p_i)(a_i) and, for s: i → j with (u, m), I(p_i)(m)
    let fd = Diagram {
        shape: d.shape.clone(),
        objects: d
            .objects
            .iter()
            .enumerate()
            .map(|(i, &o)| ic.transitions[bl.legs[i]].obj(total.objects[o].1))
            .collect(),
        arrows: d
            .shape
            .arrows()
            .map(|s| ic.transitions[bl.legs[d.shape.dom(s)]].arr(total.arrows[d.arrows[s]].1))
            .collect(),
    };
    let fl = compute_limit(fiber, &fd).ok_or_else(|| GrothendieckError::MissingFiberLimit(b.object_name(l).into()))?;
    let apex = total.object_of(l, fl.apex).unwrap();
    let legs: Vec<Arr> = d
        .objects
        .iter()
        .enumerate()
        .map(|(i, &o)| total.arrow_of(apex, bl.legs[i], fl.legs[i], o).expect("leg lies in the total category"))
        .collect();
    let cones_checked = is_limit_cone(t, d, apex, &legs)
        .map_err(|e| GrothendieckError::Invalid(format!("assembled cone is not a limit: {e:?}")))?;
    let direct = compute_limit(t, d);
    let agrees = match &direct {
        Some(w) => t.find_iso(w.apex, apex).is_some(),
        None => false,
    };
    Ok(TotalLimit {
        witness: ConeWitness { apex, legs, cones_checked, candidates_examined: 1 },
        direct_apex: direct.map(|w| w.apex),
        agrees,
    })
}

/// Objects over each arrow of a family with gluing isomorphisms on pairwise
/// pullbacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentDatum {
    pub objects: Vec<Obj>,
    /// `isos[i][j]: I(p1)(x_i) → I(p2)(x_j)` over `c_i ×_c c_j`.
    pub isos: Vec<Vec<Arr>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescentFailure {
    NoAmalgamation(DescentDatum),
    /// Two amalgamations with no compatible isomorphism between them.
    NotEssentiallyUnique { datum: DescentDatum, first: Obj, second: Obj },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DescentReport {
    pub data_checked: usize,
    pub failures: Vec<DescentFailure>,
}

impl DescentReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Pair {
    apex: Obj,
    p1: Arr,
    p2: Arr,
}

/// Exhaustive descent check for one family: every descent datum has an
/// amalgamation, unique up to a compatible isomorphism.
pub fn check_descent(
    ic: &IndexedCategory,
    family: &Presieve,
    max_data: usize,
) -> Result<DescentReport, GrothendieckError> {
    let b = &*ic.base;
    let us = &family.arrows;
    let n = us.len();
    let mut pairs: Vec<Vec<Pair>> = Vec::new();
    for &ui in us {
        let mut row = Vec::new();
        for &uj in us {
            let d = Diagram::cospan(b, ui, uj);
            let w = compute_limit(b, &d).ok_or_else(|| {
                GrothendieckError::MissingBaseLimit(format!("{} x {}", b.arrow_name(ui), b.arrow_name(uj)))
            })?;
            row.push(Pair {
                apex: w.apex,
                p1: w.legs[d.shape_object("l").unwrap()],
                p2: w.legs[d.shape_object("r").unwrap()],
            });
        }
        pairs.push(row);
    }
    // triple pullbacks with the comparison arrows to each pairwise apex
    let mut triples: Vec<(usize, usize, usize, Obj, Arr, Arr, Arr)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (apex, legs) = wide_pullback(b, &[us[i], us[j], us[k]])?;
                let find = |x: usize, y: usize, lx: Arr, ly: Arr| -> Arr {
                    let p = &pairs[x][y];
                    b.hom(apex, p.apex)
                        .iter()
                        .copied()
                        .find(|&h| b.compose(p.p1, h) == lx && b.compose(p.p2, h) == ly)
                        .expect("comparison arrow")
                };
                let qij = find(i, j, legs[0], legs[1]);
                let qjk = find(j, k, legs[1], legs[2]);
                let qik = find(i, k, legs[0], legs[2]);
                triples.push((i, j, k, apex, qij, qjk, qik));
            }
        }
    }
    // diagonals c_i → c_i ×_c c_i
    let diag: Vec<Arr> = (0..n)
        .map(|i| {
            let p = &pairs[i][i];
            let ci = b.dom(us[i]);
            b.hom(ci, p.apex)
                .iter()
                .copied()
                .find(|&h| b.compose(p.p1, h) == b.identity(ci) && b.compose(p.p2, h) == b.identity(ci))
                .expect("diagonal")
        })
        .collect();
    let mut report = DescentReport::default();
    let mut objects = vec![0; n];
    enumerate_objects(ic, family, &pairs, &diag, &triples, 0, &mut objects, &mut report, max_data)?;
    Ok(report)
}

fn wide_pullback(b: &FinCategory, arrows: &[Arr]) -> Result<(Obj, Vec<Arr>), GrothendieckError> {
    let mut builder = CategoryBuilder::new();
    builder.object("z");
    for (i, _) in arrows.iter().enumerate() {
        builder.object(&format!("x{i}"));
        builder.arrow(&format!("f{i}"), &format!("x{i}"), "z");
    }
    let shape = Arc::new(builder.build().expect("wide cospan"));
    let z = shape.object_by_name("z").unwrap();
    let mut objects = vec![0; shape.num_objects()];
    objects[z] = b.cod(arrows[0]);
    let mut shape_arrows = vec![0; shape.num_arrows()];
    for (i, &f) in arrows.iter().enumerate() {
        let x = shape.object_by_name(&format!("x{i}")).unwrap();
        objects[x] = b.dom(f);
        shape_arrows[shape.arrow_by_name(&format!("f{i}")).unwrap()] = f;
    }
    for o in shape.objects() {
        shape_arrows[shape.identity(o)] = b.identity(objects[o]);
    }
    let d = Diagram { shape: shape.clone(), objects, arrows: shape_arrows };
    let w = compute_limit(b, &d).ok_or_else(|| GrothendieckError::MissingBaseLimit("triple pullback".into()))?;
    let legs = (0..arrows.len()).map(|i| w.legs[shape.object_by_name(&format!("x{i}")).unwrap()]).collect();
    Ok((w.apex, legs))
}

#[allow(clippy::too_many_arguments)]
fn enumerate_objects(
    ic: &IndexedCategory,
    family: &Presieve,
    pairs: &[Vec<Pair>],
    diag: &[Arr],
    triples: &[(usize, usize, usize, Obj, Arr, Arr, Arr)],
    i: usize,
    objects: &mut Vec<Obj>,
    report: &mut DescentReport,
    max_data: usize,
) -> Result<(), GrothendieckError> {
    let b = &*ic.base;
    let n = objects.len();
    if i < n {
        for x in ic.fibers[b.dom(family.arrows[i])].objects() {
            objects[i] = x;
            enumerate_objects(ic, family, pairs, diag, triples, i + 1, objects, report, max_data)?;
        }
        return Ok(());
    }
    // candidate isos per pair
    let mut options: Vec<Vec<Arr>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = &pairs[i][j];
            let f = &*ic.fibers[p.apex];
            let s = ic.transitions[p.p1].obj(objects[i]);
            let t = ic.transitions[p.p2].obj(objects[j]);
            let mut opts: Vec<Arr> = f.hom(s, t).iter().copied().filter(|&a| f.is_iso(a)).collect();
            if i == j {
                let ci = &*ic.fibers[b.dom(family.arrows[i])];
                opts.retain(|&a| ci.is_identity(ic.transitions[diag[i]].arr(a)));
            }
            options.push(opts);
        }
    }
    let mut choice = vec![0; n * n];
    enumerate_isos(ic, family, pairs, triples, objects, &options, 0, &mut choice, report, max_data)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_isos(
    ic: &IndexedCategory,
    family: &Presieve,
    pairs: &[Vec<Pair>],
    triples: &[(usize, usize, usize, Obj, Arr, Arr, Arr)],
    objects: &[Obj],
    options: &[Vec<Arr>],
    k: usize,
    choice: &mut Vec<Arr>,
    report: &mut DescentReport,
    max_data: usize,
) -> Result<(), GrothendieckError> {
    if k < options.len() {
        for &a in &options[k] {
            choice[k] = a;
            enumerate_isos(ic, family, pairs, triples, objects, options, k + 1, choice, report, max_data)?;
        }
        return Ok(());
    }
    let n = objects.len();
    let iso = |i: usize, j: usize| choice[i * n + j];
    // cocycle: I(q_jk)(f_jk) ∘ I(q_ij)(f_ij) = I(q_ik)(f_ik)
    for &(i, j, k, apex, qij, qjk, qik) in triples {
        let f = &*ic.fibers[apex];
        let lhs = f.compose(ic.transitions[qjk].arr(iso(j, k)), ic.transitions[qij].arr(iso(i, j)));
        if lhs != ic.transitions[qik].arr(iso(i, k)) {
            return Ok(());
        }
    }
    report.data_checked += 1;
    if report.data_checked > max_data {
        return Err(GrothendieckError::TooLarge(max_data));
    }
    let datum = DescentDatum { objects: objects.to_vec(), isos: (0..n).map(|i| (0..n).map(|j| iso(i, j)).collect()).collect() };
    let amalgamations = amalgamations(ic, family, pairs, &datum);
    if amalgamations.is_empty() {
        report.failures.push(DescentFailure::NoAmalgamation(datum));
        return Ok(());
    }
    let (x0, phi0) = &amalgamations[0];
    for (x1, phi1) in &amalgamations[1..] {
        if !compatible_iso_exists(ic, family, *x0, phi0, *x1, phi1) {
            report.failures.push(DescentFailure::NotEssentiallyUnique { datum: datum.clone(), first: *x0, second: *x1 });
            break;
        }
    }
    Ok(())
}

/// Every `(x, φ)` with `φ_i: I(u_i)(x) → x_i` isomorphisms compatible with
/// the gluing isomorphisms.
fn amalgamations(
    ic: &IndexedCategory,
    family: &Presieve,
    pairs: &[Vec<Pair>],
    datum: &DescentDatum,
) -> Vec<(Obj, Vec<Arr>)> {
    let b = &*ic.base;
    let c = family.codomain;
    let n = family.arrows.len();
    let mut out = Vec::new();
    for x in ic.fibers[c].objects() {
        let options: Vec<Vec<Arr>> = (0..n)
            .map(|i| {
                let u = family.arrows[i];
                let f = &*ic.fibers[b.dom(u)];
                f.hom(ic.transitions[u].obj(x), datum.objects[i]).iter().copied().filter(|&a| f.is_iso(a)).collect()
            })
            .collect();
        let mut phi = vec![0; n];
        fn go(
            ic: &IndexedCategory,
            pairs: &[Vec<Pair>],
            datum: &DescentDatum,
            options: &[Vec<Arr>],
            i: usize,
            phi: &mut Vec<Arr>,
            found: &mut Option<Vec<Arr>>,
        ) {
            if found.is_some() {
                return;
            }
            if i == options.len() {
                found.replace(phi.clone());
                return;
            }
            'opt: for &a in &options[i] {
                phi[i] = a;
                for j in 0..=i {
                    for (s, t) in [(i, j), (j, i)] {
                        // f_st ∘ I(p1)(φ_s) = I(p2)(φ_t)
                        let p = &pairs[s][t];
                        let f = &*ic.fibers[p.apex];
                        let lhs = f.compose(datum.isos[s][t], ic.transitions[p.p1].arr(phi[s]));
                        if lhs != ic.transitions[p.p2].arr(phi[t]) {
                            continue 'opt;
                        }
                    }
                }
                go(ic, pairs, datum, options, i + 1, phi, found);
            }
        }
        let mut found = None;
        go(ic, pairs, datum, &options, 0, &mut phi, &mut found);
        if let Some(phi) = found {
            out.push((x, phi));
        }
    }
    out
}

fn compatible_iso_exists(
    ic: &IndexedCategory,
    family: &Presieve,
    x0: Obj,
    phi0: &[Arr],
    x1: Obj,
    phi1: &[Arr],
) -> bool {
    let b = &*ic.base;
    let fc = &*ic.fibers[family.codomain];
    fc.hom(x0, x1).iter().any(|&psi| {
        fc.is_iso(psi)
            && family.arrows.iter().enumerate().all(|(i, &u)| {
                let f = &*ic.fibers[b.dom(u)];
                f.compose(phi1[i], ic.transitions[u].arr(psi)) == phi0[i]
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Constant indexed category at a fixed fiber.
    pub(crate) fn constant(base: Arc<FinCategory>, fiber: Arc<FinCategory>) -> IndexedCategory {
        let n = base.num_objects();
        let transitions = base.arrows().map(|_| FinFunctor::identity(fiber.clone())).collect();
        IndexedCategory { base, fibers: vec![fiber; n], transitions }
    }

    fn two_element_chain() -> Arc<FinCategory> {
        Arc::new(FinCategory::preorder(&["0".to_string(), "1".to_string()], |i, j| i <= j))
    }

    #[test]
    fn terminal_fibers_give_the_base() {
        let base = Arc::new(FinCategory::arrow_category());
        let ic = constant(base.clone(), Arc::new(FinCategory::terminal()));
        let t = grothendieck_construction(&ic).unwrap();
        assert_eq!(t.category.num_objects(), base.num_objects());
        assert_eq!(t.category.num_arrows(), base.num_arrows());
        assert!(check_lifts_cartesian(&ic, &t));
        assert!(check_terminal_lift_pullback(&ic, &t).unwrap().iter().all(|s| s.is_pullback));
    }

    #[test]
    fn terminal_base_gives_the_fiber() {
        let fiber = two_element_chain();
        let ic = constant(Arc::new(FinCategory::terminal()), fiber.clone());
        let t = grothendieck_construction(&ic).unwrap();
        assert_eq!(t.category.num_objects(), 2);
        assert_eq!(t.category.num_arrows(), 3);
        assert!(check_terminal_lift_pullback(&ic, &t).unwrap().iter().all(|s| s.is_pullback));
    }

    /// Base a → b, fiber 1 over a and the chain 0 ≤ 1 over b, with the
    /// transition sending both objects to the point.
    fn one_two() -> IndexedCategory {
        let base = Arc::new(FinCategory::arrow_category());
        let point = Arc::new(FinCategory::terminal());
        let chain = two_element_chain();
        let a = base.object_by_name("a").unwrap();
        let f = base.arrow_by_name("f").unwrap();
        let mut fibers = vec![chain.clone(); 2];
        fibers[a] = point.clone();
        let mut transitions = Vec::new();
        for u in base.arrows() {
            if u == f {
                transitions.push(FinFunctor {
                    source: chain.clone(),
                    target: point.clone(),
                    on_objects: vec![0; 2],
                    on_arrows: vec![0; chain.num_arrows()],
                });
            } else {
                transitions.push(FinFunctor::identity(fibers[base.dom(u)].clone()));
            }
        }
        IndexedCategory { base, fibers, transitions }
    }

    #[test]
    fn one_and_two_fiber_counts() {
        // objects: 1 + 2; arrows: fiber arrows 1 + 3, plus one arrow over
        // f for each of the 2 objects over b
        let ic = one_two();
        let t = grothendieck_construction(&ic).unwrap();
        assert_eq!(t.category.num_objects(), 3);
        assert_eq!(t.category.num_arrows(), 6);
        assert!(crate::fincat::validate_category(&t.category).is_valid());
        assert!(validate_functor(&t.projection).is_empty());
        assert!(check_lifts_cartesian(&ic, &t));
        let squares = check_terminal_lift_pullback(&ic, &t).unwrap();
        assert!(squares.iter().all(|s| s.is_pullback));
    }

    #[test]
    fn limits_assemble_from_base_and_fiber() {
        let ic = one_two();
        let t = grothendieck_construction(&ic).unwrap();
        let empty = limit_in_total(&ic, &t, &Diagram::empty()).unwrap();
        assert!(empty.agrees);
        let cat = &*t.category;
        for f in cat.arrows() {
            for g in cat.arrows().filter(|&g| cat.cod(g) == cat.cod(f)) {
                let r = limit_in_total(&ic, &t, &Diagram::cospan(cat, f, g)).unwrap();
                assert!(r.agrees);
            }
        }
    }

    #[test]
    fn identity_family_descends() {
        let ic = one_two();
        for c in ic.base.objects() {
            let r = check_descent(&ic, &Presieve::identity(&ic.base, c), 1000).unwrap();
            assert!(r.holds());
            assert_eq!(r.data_checked, ic.fibers[c].num_objects());
        }
    }

    #[test]
    fn missing_gluing_object_is_reported() {
        // base: two incomparable points l, r covered by the top t, with a
        // bottom b as their meet; fiber over t is a point but over l and r
        // there are two objects each, restricting to two objects over b.
        // Data (x_l, x_r) agreeing over b have no amalgamation over t
        // unless they come from the point.
        let names: Vec<String> = ["b", "l", "r", "t"].iter().map(|s| s.to_string()).collect();
        let leq = |i: usize, j: usize| i == j || i == 0 || j == 3;
        let base = Arc::new(FinCategory::preorder(&names, leq));
        let two = Arc::new(FinCategory::preorder(&["p".to_string(), "q".to_string()], |i, j| i == j));
        let point = Arc::new(FinCategory::terminal());
        let o = |n: &str| base.object_by_name(n).unwrap();
        let mut fibers = vec![two.clone(); 4];
        fibers[o("t")] = point.clone();
        let mut transitions = Vec::new();
        for u in base.arrows() {
            let (d, c) = (base.dom(u), base.cod(u));
            let (src, tgt) = (fibers[c].clone(), fibers[d].clone());
            if c == o("t") && d != o("t") {
                // the point restricts to p
                transitions.push(FinFunctor { source: src, target: tgt.clone(), on_objects: vec![0], on_arrows: vec![tgt.identity(0)] });
            } else {
                transitions.push(FinFunctor::identity(src));
            }
        }
        let ic = IndexedCategory { base: base.clone(), fibers, transitions };
        assert!(ic.validate().is_empty());
        let fam = Presieve::new(&base, o("t"), [base.hom(o("l"), o("t"))[0], base.hom(o("r"), o("t"))[0]]).unwrap();
        let r = check_descent(&ic, &fam, 1000).unwrap();
        assert!(!r.holds());
        assert!(r.failures.iter().all(|f| matches!(f, DescentFailure::NoAmalgamation(_))));
    }
}
