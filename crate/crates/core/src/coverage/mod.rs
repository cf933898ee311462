use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::fincat::{Arr, FinCategory, Obj};

mod giraud;
mod induced;
mod lifted;

pub use giraud::giraud_basis;
pub use induced::{full_subcategory, induce_on_subcategory, InducedBasis};
pub use lifted::{lifted_basis, LiftedSite};

/// Presieves with more candidate arrows than this are not enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("arrow {arrow} does not have codomain {codomain}")]
    IllTyped { codomain: String, arrow: String },
    #[error("inner presieve for {arrow} sits on the wrong object")]
    DomainMismatch { arrow: String },
    #[error("no inner presieve given for {arrow}")]
    MissingInner { arrow: String },
    #[error("{what} at {object} exceeds the limit of {limit}")]
    TooLarge { what: String, object: String, limit: usize },
    #[error("pullback of {left} and {right} does not exist")]
    MissingPullback { left: String, right: String },
    #[error("{0}")]
    Other(String),
}

/// A finite family of arrows with a common codomain, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Presieve {
    pub codomain: Obj,
    pub arrows: Vec<Arr>,
}

impl Presieve {
    pub fn new(cat: &FinCategory, codomain: Obj, arrows: impl IntoIterator<Item = Arr>) -> Result<Presieve, CoverageError> {
        let arrows: BTreeSet<Arr> = arrows.into_iter().collect();
        for &a in &arrows {
            if cat.cod(a) != codomain {
                return Err(CoverageError::IllTyped {
                    codomain: cat.object_name(codomain).to_string(),
                    arrow: cat.arrow_name(a).to_string(),
                });
            }
        }
        Ok(Presieve { codomain, arrows: arrows.into_iter().collect() })
    }

    /// Builds without type checking; callers guarantee the codomains.
    pub(crate) fn from_set(codomain: Obj, arrows: BTreeSet<Arr>) -> Presieve {
        Presieve { codomain, arrows: arrows.into_iter().collect() }
    }

    pub fn identity(cat: &FinCategory, c: Obj) -> Presieve {
        Presieve { codomain: c, arrows: vec![cat.identity(c)] }
    }

    pub fn contains(&self, a: Arr) -> bool {
        self.arrows.binary_search(&a).is_ok()
    }

    pub fn is_subset_of(&self, other: &[Arr]) -> bool {
        self.arrows.iter().all(|a| other.binary_search(a).is_ok())
    }

    pub fn names(&self, cat: &FinCategory) -> Vec<String> {
        self.arrows.iter().map(|&a| cat.arrow_name(a).to_string()).collect()
    }
}

/// A presieve closed under precomposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sieve {
    pub codomain: Obj,
    pub arrows: Vec<Arr>,
}

impl Sieve {
    pub fn contains(&self, a: Arr) -> bool {
        self.arrows.binary_search(&a).is_ok()
    }

    pub fn maximal(cat: &FinCategory, c: Obj) -> Sieve {
        Sieve { codomain: c, arrows: cat.arrows_into(c) }
    }

    pub fn is_closed(&self, cat: &FinCategory) -> bool {
        self.arrows.iter().all(|&f| {
            cat.arrows_into(cat.dom(f)).into_iter().all(|g| self.contains(cat.compose(f, g)))
        })
    }
}

/// Smallest sieve containing `p`.
pub fn sieve_closure(cat: &FinCategory, p: &Presieve) -> Sieve {
    let mut out = BTreeSet::new();
    for &f in &p.arrows {
        for g in cat.arrows_into(cat.dom(f)) {
            out.insert(cat.compose(f, g));
        }
    }
    Sieve { codomain: p.codomain, arrows: out.into_iter().collect() }
}

/// Per-object sets of presieves, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageBasis {
    pub families: Vec<Vec<Presieve>>,
}

impl CoverageBasis {
    pub fn empty(cat: &FinCategory) -> CoverageBasis {
        CoverageBasis { families: vec![Vec::new(); cat.num_objects()] }
    }

    /// `{id_c}` at every object.
    pub fn trivial(cat: &FinCategory) -> CoverageBasis {
        CoverageBasis { families: cat.objects().map(|c| vec![Presieve::identity(cat, c)]).collect() }
    }

    pub fn at(&self, c: Obj) -> &[Presieve] {
        &self.families[c]
    }

    /// Inserts `p` keeping the order; returns whether it was new.
    pub fn insert(&mut self, p: Presieve) -> bool {
        let fam = &mut self.families[p.codomain];
        match fam.binary_search(&p) {
            Ok(_) => false,
            Err(i) => {
                fam.insert(i, p);
                true
            }
        }
    }

    pub fn contains(&self, p: &Presieve) -> bool {
        self.families[p.codomain].binary_search(p).is_ok()
    }

    pub fn num_families(&self) -> usize {
        self.families.iter().map(Vec::len).sum()
    }

    /// Every presieve at every object whose closure covers for `self`.
    /// Fails when an object has more than `cap` arrows into it.
    pub fn all_covering_presieves(&self, cat: &FinCategory, cap: usize) -> Result<CoverageBasis, CoverageError> {
        let mut out = CoverageBasis::empty(cat);
        for c in cat.objects() {
            for p in covering_presieves_at(cat, self, c, cap)? {
                out.insert(p);
            }
        }
        Ok(out)
    }
}

/// All presieves at `c` whose sieve closure is covering for `b`.
pub fn covering_presieves_at(
    cat: &FinCategory,
    b: &CoverageBasis,
    c: Obj,
    cap: usize,
) -> Result<Vec<Presieve>, CoverageError> {
    let into = cat.arrows_into(c);
    if into.len() > cap {
        return Err(CoverageError::TooLarge {
            what: "arrows into object".into(),
            object: cat.object_name(c).to_string(),
            limit: cap,
        });
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << into.len()) {
        let arrows: BTreeSet<Arr> =
            into.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect();
        let p = Presieve::from_set(c, arrows);
        if covers(cat, b, &sieve_closure(cat, &p)) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// True iff `s` contains some presieve of `b` at its codomain.
pub fn covers(_cat: &FinCategory, b: &CoverageBasis, s: &Sieve) -> bool {
    b.at(s.codomain).iter().any(|p| p.is_subset_of(&s.arrows))
}

/// True iff the sieve generated by `p` covers.
pub fn covers_presieve(cat: &FinCategory, b: &CoverageBasis, p: &Presieve) -> bool {
    covers(cat, b, &sieve_closure(cat, p))
}

/// `{ f ∘ g : f ∈ outer, g ∈ inners[f] }`.
pub fn multicompose(
    cat: &FinCategory,
    outer: &Presieve,
    inners: &BTreeMap<Arr, Presieve>,
) -> Result<Presieve, CoverageError> {
    let mut out = BTreeSet::new();
    for &f in &outer.arrows {
        let inner = inners
            .get(&f)
            .ok_or_else(|| CoverageError::MissingInner { arrow: cat.arrow_name(f).to_string() })?;
        if inner.codomain != cat.dom(f) {
            return Err(CoverageError::DomainMismatch { arrow: cat.arrow_name(f).to_string() });
        }
        for &g in &inner.arrows {
            out.insert(cat.compose(f, g));
        }
    }
    Ok(Presieve::from_set(outer.codomain, out))
}

/// A multicomposite of `outer` with one choice of inner family per arrow,
/// remembered as indices into `b.at(dom f)`.
struct Multicomposite {
    arrows: BTreeSet<Arr>,
    choice: Vec<usize>,
}

/// Every distinct multicomposite of `outer` with inner families from `b`.
/// Partial unions are deduplicated as the fold proceeds.
fn multicomposites(cat: &FinCategory, b: &CoverageBasis, outer: &Presieve) -> Vec<Multicomposite> {
    let mut partial: BTreeMap<BTreeSet<Arr>, Vec<usize>> = BTreeMap::new();
    partial.insert(BTreeSet::new(), Vec::new());
    for &f in &outer.arrows {
        let inner = b.at(cat.dom(f));
        let mut next: BTreeMap<BTreeSet<Arr>, Vec<usize>> = BTreeMap::new();
        for (u, choice) in &partial {
            for (k, t) in inner.iter().enumerate() {
                let mut v = u.clone();
                v.extend(t.arrows.iter().map(|&g| cat.compose(f, g)));
                next.entry(v).or_insert_with(|| {
                    let mut ch = choice.clone();
                    ch.push(k);
                    ch
                });
            }
        }
        partial = next;
    }
    partial.into_iter().map(|(arrows, choice)| Multicomposite { arrows, choice }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisViolation {
    IllTyped { object: Obj, family: Vec<Arr>, arrow: Arr },
    /// (a): `{id_c}` missing.
    MissingIdentity { object: Obj },
    /// (b): no family at `dom g` whose composites with `g` factor through
    /// the family.
    NoRefinement { object: Obj, family: Vec<Arr>, along: Arr },
    /// (c): a multicomposite that is not itself a family.
    NotClosed { object: Obj, outer: Vec<Arr>, inners: Vec<(Arr, Vec<Arr>)>, composite: Vec<Arr> },
    /// Weak (c): a multicomposite whose closure contains no family.
    CompositeNotCovering { object: Obj, outer: Vec<Arr>, inners: Vec<(Arr, Vec<Arr>)>, composite: Vec<Arr> },
}

impl BasisViolation {
    pub fn describe(&self, cat: &FinCategory) -> String {
        let names = |v: &[Arr]| {
            let n: Vec<&str> = v.iter().map(|&a| cat.arrow_name(a)).collect();
            format!("{{{}}}", n.join(", "))
        };
        let inner_names = |v: &[(Arr, Vec<Arr>)]| {
            let n: Vec<String> =
                v.iter().map(|(f, t)| format!("{} <- {}", cat.arrow_name(*f), names(t))).collect();
            n.join("; ")
        };
        match self {
            BasisViolation::IllTyped { object, family, arrow } => format!(
                "ill-typed: {} in {} at {}",
                cat.arrow_name(*arrow),
                names(family),
                cat.object_name(*object)
            ),
            BasisViolation::MissingIdentity { object } => {
                format!("(a) identity family missing at {}", cat.object_name(*object))
            }
            BasisViolation::NoRefinement { object, family, along } => format!(
                "(b) no refinement of {} at {} along {}",
                names(family),
                cat.object_name(*object),
                cat.arrow_name(*along)
            ),
            BasisViolation::NotClosed { object, outer, inners, composite } => format!(
                "(c) multicomposite {} of {} at {} [{}] is not a family",
                names(composite),
                names(outer),
                cat.object_name(*object),
                inner_names(inners)
            ),
            BasisViolation::CompositeNotCovering { object, outer, inners, composite } => format!(
                "(c') multicomposite {} of {} at {} [{}] does not cover",
                names(composite),
                names(outer),
                cat.object_name(*object),
                inner_names(inners)
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BasisReport {
    pub violations: Vec<BasisViolation>,
    /// Number of multicomposites examined for (c).
    pub multicomposites_checked: usize,
}

impl BasisReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Closure condition used by `check_basis_with`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureMode {
    /// Every multicomposite is itself a family.
    Strict,
    /// Every multicomposite generates a covering sieve.
    Covering,
}

/// Checks conditions (a), (b) and strict (c).
pub fn check_basis(cat: &FinCategory, b: &CoverageBasis) -> BasisReport {
    check_basis_with(cat, b, ClosureMode::Strict, usize::MAX)
}

/// Checks (a), (b) and the chosen form of (c), stopping after `limit`
/// violations.
pub fn check_basis_with(cat: &FinCategory, b: &CoverageBasis, mode: ClosureMode, limit: usize) -> BasisReport {
    let mut r = BasisReport::default();
    let full = |r: &BasisReport| r.violations.len() >= limit;
    for c in cat.objects() {
        for p in b.at(c) {
            for &a in &p.arrows {
                if cat.cod(a) != c || p.codomain != c {
                    r.violations.push(BasisViolation::IllTyped { object: c, family: p.arrows.clone(), arrow: a });
                }
            }
        }
    }
    if !r.is_valid() {
        r.violations.truncate(limit);
        return r;
    }
    for c in cat.objects() {
        if !b.contains(&Presieve::identity(cat, c)) {
            r.violations.push(BasisViolation::MissingIdentity { object: c });
            if full(&r) {
                return r;
            }
        }
    }
    for c in cat.objects() {
        for p in b.at(c) {
            let closure = sieve_closure(cat, p);
            for g in cat.arrows_into(c) {
                let ok = b.at(cat.dom(g)).iter().any(|t| t.arrows.iter().all(|&x| closure.contains(cat.compose(g, x))));
                if !ok {
                    r.violations.push(BasisViolation::NoRefinement { object: c, family: p.arrows.clone(), along: g });
                    if full(&r) {
                        return r;
                    }
                }
            }
        }
    }
    for c in cat.objects() {
        for p in b.at(c) {
            for m in multicomposites(cat, b, p) {
                r.multicomposites_checked += 1;
                let q = Presieve::from_set(c, m.arrows.clone());
                let bad = match mode {
                    ClosureMode::Strict => !b.contains(&q),
                    ClosureMode::Covering => !covers_presieve(cat, b, &q),
                };
                if bad {
                    let inners = p
                        .arrows
                        .iter()
                        .zip(&m.choice)
                        .map(|(&f, &k)| (f, b.at(cat.dom(f))[k].arrows.clone()))
                        .collect();
                    let (outer, composite) = (p.arrows.clone(), q.arrows);
                    r.violations.push(match mode {
                        ClosureMode::Strict => BasisViolation::NotClosed { object: c, outer, inners, composite },
                        ClosureMode::Covering => {
                            BasisViolation::CompositeNotCovering { object: c, outer, inners, composite }
                        }
                    });
                    if full(&r) {
                        return r;
                    }
                }
            }
        }
    }
    r
}

/// Adds every multicomposite until the families are closed under
/// multicomposition. Fails if some object ends up with more than `cap`
/// families.
pub fn close_under_multicomposition(
    cat: &FinCategory,
    b: &CoverageBasis,
    cap: usize,
) -> Result<CoverageBasis, CoverageError> {
    let mut out = b.clone();
    loop {
        let mut changed = false;
        for c in cat.objects() {
            let outers: Vec<Presieve> = out.at(c).to_vec();
            for p in outers {
                for m in multicomposites(cat, &out, &p) {
                    if out.insert(Presieve::from_set(c, m.arrows)) {
                        changed = true;
                        if out.at(c).len() > cap {
                            return Err(CoverageError::TooLarge {
                                what: "families".into(),
                                object: cat.object_name(c).to_string(),
                                limit: cap,
                            });
                        }
                    }
                }
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

/// Every sieve on `c`, as unions of principal sieves. `None` if there are
/// more than `cap` of them.
pub fn all_sieves(cat: &FinCategory, c: Obj, cap: usize) -> Option<Vec<Sieve>> {
    let principal: Vec<BTreeSet<Arr>> = cat
        .arrows_into(c)
        .into_iter()
        .map(|f| sieve_closure(cat, &Presieve { codomain: c, arrows: vec![f] }).arrows.into_iter().collect())
        .collect();
    let mut seen: BTreeSet<BTreeSet<Arr>> = BTreeSet::new();
    let mut queue = vec![BTreeSet::new()];
    seen.insert(BTreeSet::new());
    while let Some(s) = queue.pop() {
        for p in &principal {
            if p.is_subset(&s) {
                continue;
            }
            let u: BTreeSet<Arr> = s.union(p).copied().collect();
            if seen.insert(u.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push(u);
            }
        }
    }
    Some(seen.into_iter().map(|s| Sieve { codomain: c, arrows: s.into_iter().collect() }).collect())
}

/// The covering sieves of the topology generated by `b`, per object.
pub fn covering_sieves(cat: &FinCategory, b: &CoverageBasis, cap: usize) -> Option<Vec<Vec<Sieve>>> {
    cat.objects()
        .map(|c| all_sieves(cat, c, cap).map(|v| v.into_iter().filter(|s| covers(cat, b, s)).collect()))
        .collect()
}

/// Whether two bases generate the same covering sieves, decided by checking
/// that every family of each is covering for the other.
pub fn same_topology(cat: &FinCategory, b1: &CoverageBasis, b2: &CoverageBasis) -> bool {
    let within = |x: &CoverageBasis, y: &CoverageBasis| {
        x.families.iter().flatten().all(|p| covers_presieve(cat, y, p))
    };
    within(b1, b2) && within(b2, b1)
}

/// As `same_topology`, decided sieve by sieve over every sieve of `cat`.
/// `None` if some object has more than `cap` sieves.
pub fn same_topology_extensional(
    cat: &FinCategory,
    b1: &CoverageBasis,
    b2: &CoverageBasis,
    cap: usize,
) -> Option<bool> {
    for c in cat.objects() {
        for s in all_sieves(cat, c, cap)? {
            if covers(cat, b1, &s) != covers(cat, b2, &s) {
                return Some(false);
            }
        }
    }
    Some(true)
}

impl fmt::Display for Presieve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{}", self.arrows, self.codomain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::CategoryBuilder;

    fn chain3() -> FinCategory {
        // x → y → z
        let mut b = CategoryBuilder::new();
        b.object("x").object("y").object("z");
        b.arrow("f", "x", "y").arrow("g", "y", "z").arrow("gf", "x", "z");
        b.compose_entry("g", "f", "gf");
        b.build().unwrap()
    }

    #[test]
    fn closure_of_identity_is_maximal() {
        let c = chain3();
        let z = c.object_by_name("z").unwrap();
        let s = sieve_closure(&c, &Presieve::identity(&c, z));
        assert_eq!(s, Sieve::maximal(&c, z));
        let e = sieve_closure(&c, &Presieve::new(&c, z, []).unwrap());
        assert!(e.arrows.is_empty());
    }

    #[test]
    fn closure_of_single_arrow_out_of_initial_object() {
        let c = FinCategory::arrow_category();
        let f = c.arrow_by_name("f").unwrap();
        let p = Presieve::new(&c, c.cod(f), [f]).unwrap();
        assert_eq!(sieve_closure(&c, &p).arrows, vec![f]);
    }

    #[test]
    fn trivial_basis_is_valid() {
        let c = chain3();
        assert!(check_basis(&c, &CoverageBasis::trivial(&c)).is_valid());
    }

    #[test]
    fn omitted_identity_on_domain_violates_a() {
        let c = FinCategory::arrow_category();
        let f = c.arrow_by_name("f").unwrap();
        let b_obj = c.cod(f);
        let mut basis = CoverageBasis::empty(&c);
        basis.insert(Presieve::identity(&c, b_obj));
        basis.insert(Presieve::new(&c, b_obj, [f]).unwrap());
        let r = check_basis(&c, &basis);
        assert!(r.violations.contains(&BasisViolation::MissingIdentity { object: c.dom(f) }));
    }

    #[test]
    fn multicompose_identities() {
        let c = chain3();
        let z = c.object_by_name("z").unwrap();
        let g = c.arrow_by_name("g").unwrap();
        let gf = c.arrow_by_name("gf").unwrap();
        let outer = Presieve::new(&c, z, [g, gf]).unwrap();
        let inners: BTreeMap<Arr, Presieve> =
            outer.arrows.iter().map(|&a| (a, Presieve::identity(&c, c.dom(a)))).collect();
        assert_eq!(multicompose(&c, &outer, &inners).unwrap(), outer);
        let r = Presieve::new(&c, z, [g]).unwrap();
        let one: BTreeMap<Arr, Presieve> = [(c.identity(z), r.clone())].into();
        assert_eq!(multicompose(&c, &Presieve::identity(&c, z), &one).unwrap(), r);
    }

    #[test]
    fn multicompose_two_levels_by_table() {
        let c = chain3();
        let (y, z) = (c.object_by_name("y").unwrap(), c.object_by_name("z").unwrap());
        let (f, g, gf) = (c.arrow_by_name("f").unwrap(), c.arrow_by_name("g").unwrap(), c.arrow_by_name("gf").unwrap());
        let outer = Presieve::new(&c, z, [g]).unwrap();
        let inners = [(g, Presieve::new(&c, y, [f]).unwrap())].into();
        assert_eq!(multicompose(&c, &outer, &inners).unwrap().arrows, vec![gf]);
        let bad = [(g, Presieve::identity(&c, z))].into();
        assert!(matches!(multicompose(&c, &outer, &bad), Err(CoverageError::DomainMismatch { .. })));
    }

    #[test]
    fn maximal_and_empty_sieves() {
        let c = chain3();
        let b = CoverageBasis::trivial(&c);
        for o in c.objects() {
            assert!(covers(&c, &b, &Sieve::maximal(&c, o)));
            assert!(!covers(&c, &b, &Sieve { codomain: o, arrows: vec![] }));
        }
    }

    #[test]
    fn all_sieves_on_chain() {
        // sieves on z in x → y → z: ∅, {gf}, {g, gf}, maximal
        let c = chain3();
        let z = c.object_by_name("z").unwrap();
        let s = all_sieves(&c, z, 100).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| x.is_closed(&c)));
    }

    #[test]
    fn saturation_of_generating_family_is_a_basis() {
        // covering z by {g} and y by {f}: the multicomposite {gf} is missing
        // until saturation adds it
        let c = chain3();
        let (y, z) = (c.object_by_name("y").unwrap(), c.object_by_name("z").unwrap());
        let (f, g) = (c.arrow_by_name("f").unwrap(), c.arrow_by_name("g").unwrap());
        let mut b = CoverageBasis::trivial(&c);
        b.insert(Presieve::new(&c, z, [g]).unwrap());
        b.insert(Presieve::new(&c, y, [f]).unwrap());
        let r = check_basis(&c, &b);
        assert!(r.violations.iter().any(|v| matches!(v, BasisViolation::NotClosed { .. })));
        let weak = check_basis_with(&c, &b, ClosureMode::Covering, usize::MAX);
        assert!(weak.violations.iter().any(|v| matches!(v, BasisViolation::CompositeNotCovering { .. })));
        let s = close_under_multicomposition(&c, &b, 100).unwrap();
        assert!(check_basis(&c, &s).is_valid());
        // {gf} now covers z, so the topology grew
        assert!(!same_topology(&c, &b, &s));
        assert_eq!(same_topology_extensional(&c, &b, &s, 100), Some(false));
        let again = close_under_multicomposition(&c, &s, 100).unwrap();
        assert_eq!(again, s);
    }
}
