//! Sites over a model: the category of elements of a fragment's
//! interpretation with the antecedent topology, and the translation
//! between its points and model homomorphisms.

mod general;
mod morphism;
mod points;

use std::sync::Arc;

use thiserror::Error;

use crate::coverage::{
    check_basis, close_under_multicomposition, CoverageBasis, CoverageError, Presieve,
};
use crate::fincat::{is_limit_cone, Arr, Diagram, FinCategory, FinFunctor, Obj, SetValuedFunctor};
use crate::grothendieck::GrothendieckError;
use crate::logic::{FragmentError, FragmentSite, Interpretation, LogicError};
use crate::sheaves::{is_sheaf, preserves_square, FinPresheaf};

pub use general::{agrees_with_set_based, antecedent_basis_general, element_stack, ElementStack, PresheafModel, MINIMAL_SEARCH_CAP};
pub use morphism::{hom_to_site_morphism, SiteMorphism};
pub use points::{
    enumerate_homs, enumerate_points, find_iso_over, hom_to_point, point_to_hom, right_kan_extend, round_trip_hom,
    round_trip_point,
    PointCandidate,
};

/// Bound on families per object when saturating a basis.
pub const FAMILY_CAP: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverError {
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Grothendieck(#[from] GrothendieckError),
    #[error("the map does not send `{formula}` into its interpretation in the target")]
    NotNatural { formula: String },
    #[error("not a homomorphism: {0}")]
    NotAHom(String),
    #[error("the fragment has no formula `{0}`")]
    MissingFormula(String),
    #[error("the fragment has no arrow with graph `{0}`")]
    MissingArrow(String),
    #[error("point is not cartesian: {0}")]
    NotCartesian(String),
    #[error("point is not continuous")]
    NotContinuous,
    #[error("the result is not a model: axiom {0} fails")]
    NotAModel(String),
    #[error("interpretation of `{formula}` is not a sheaf")]
    NotSheaf { formula: String },
    #[error("family at `{formula}` is not locally surjective at {object}")]
    NotCovering { formula: String, object: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Which object of the base and which fragment element an object of the
/// over-site sits on. Set-based sites have a single base object 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementKey {
    pub base: Obj,
    pub formula: Obj,
    pub element: usize,
}

#[derive(Debug, Clone)]
pub struct OverSite {
    pub category: Arc<FinCategory>,
    /// Saturated basis.
    pub basis: CoverageBasis,
    /// The antecedent families before saturation.
    pub raw: CoverageBasis,
    pub projection: FinFunctor,
    pub base_projection: Option<FinFunctor>,
    pub objects: Vec<ElementKey>,
    pub notes: Vec<String>,
}

impl OverSite {
    pub fn object_of(&self, base: Obj, formula: Obj, element: usize) -> Option<Obj> {
        self.objects.iter().position(|k| *k == ElementKey { base, formula, element })
    }
}

/// The antecedent site of the fragment's own model.
pub fn antecedent_basis(frag: &FragmentSite) -> Result<OverSite, OverError> {
    antecedent_site(frag, &frag.interp)
}

/// One family per element `a` of `φ` and basis family `{θ_i}` at `φ`,
/// holding every arrow `θ_i: (φ_i, b) → (φ, a)`, then closed under
/// multicomposition. Families at elements with no antecedents are empty.
pub fn antecedent_site(frag: &FragmentSite, interp: &Interpretation) -> Result<OverSite, OverError> {
    let m = &interp.functor;
    let el = crate::fincat::category_of_elements(m);
    let cat = el.category.clone();
    let fc = &*frag.category;
    let mut raw = CoverageBasis::empty(&cat);
    let mut notes = Vec::new();
    for (e, &(phi, a)) in el.objects.iter().enumerate() {
        for fam in frag.basis.at(phi) {
            let mut members = Vec::new();
            for &t in &fam.arrows {
                let d = fc.dom(t);
                for b in (0..m.carriers[d]).filter(|&b| m.act(t, b) == a) {
                    members.push(el.arrow_of(t, b).expect("element arrow"));
                }
            }
            if members.is_empty() {
                notes.push(format!("empty antecedent family at {}", cat.object_name(e)));
            }
            raw.insert(Presieve::new(&cat, e, members)?);
        }
    }
    let basis = close_under_multicomposition(&cat, &raw, FAMILY_CAP)?;
    let objects = el.objects.iter().map(|&(formula, element)| ElementKey { base: 0, formula, element }).collect();
    notes.sort();
    notes.dedup();
    Ok(OverSite { category: cat, basis, raw, projection: el.projection, base_projection: None, objects, notes })
}

/// The image of every basis family is jointly surjective.
pub fn check_continuous(g: &SetValuedFunctor, basis: &CoverageBasis) -> bool {
    let c = &*g.source;
    c.objects().all(|o| {
        basis.at(o).iter().all(|p| {
            let mut hit = vec![false; g.carriers[o]];
            for &a in &p.arrows {
                for x in 0..g.carriers[c.dom(a)] {
                    hit[g.act(a, x)] = true;
                }
            }
            hit.into_iter().all(|h| h)
        })
    })
}

/// The squares of the over-site lying over designated pullbacks of the
/// fragment: `(left leg, right leg, left, right)` in the over-site.
pub fn designated_squares(frag: &FragmentSite, over: &OverSite, interp: &Interpretation) -> Vec<[Arr; 4]> {
    let m = &interp.functor;
    let fc = &*frag.category;
    let cat = &*over.category;
    let arrow_of = |u: Arr, x: usize| {
        let src = over.object_of(0, fc.dom(u), x).expect("element");
        cat.hom(src, over.object_of(0, fc.cod(u), m.act(u, x)).expect("element"))
            .iter()
            .copied()
            .find(|&a| over.projection.arr(a) == u)
            .expect("element arrow")
    };
    let mut out = Vec::new();
    for pb in &frag.pullbacks {
        for z in 0..m.carriers[pb.apex] {
            let (a1, a2) = (m.act(pb.left_leg, z), m.act(pb.right_leg, z));
            out.push([arrow_of(pb.left_leg, z), arrow_of(pb.right_leg, z), arrow_of(pb.left, a1), arrow_of(pb.right, a2)]);
        }
    }
    out
}

/// The terminal element goes to a singleton and every square over a
/// designated pullback goes to a pullback of sets.
pub fn is_point_cartesian(frag: &FragmentSite, over: &OverSite, g: &SetValuedFunctor) -> Result<(), String> {
    let m = &frag.interp.functor;
    for x in 0..m.carriers[frag.terminal] {
        let t = over.object_of(0, frag.terminal, x).expect("terminal element");
        if g.carriers[t] != 1 {
            return Err(format!("{} has {} elements", over.category.object_name(t), g.carriers[t]));
        }
    }
    for [l, r, f, h] in designated_squares(frag, over, &frag.interp) {
        if !preserves_square(g, l, r, f, h) {
            let c = &*over.category;
            return Err(format!("square over {} and {} is not a pullback", c.arrow_name(f), c.arrow_name(h)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteChecks {
    pub basis_valid: bool,
    pub terminal: bool,
    pub squares_checked: usize,
    /// Squares over designated pullbacks that are not pullbacks in the
    /// over-site.
    pub square_failures: Vec<String>,
    pub factorizations_checked: usize,
    /// Fragment arrows without an image formula.
    pub factorizations_skipped: usize,
    pub factorization_failures: Vec<String>,
}

impl SiteChecks {
    pub fn holds(&self) -> bool {
        self.basis_valid && self.terminal && self.square_failures.is_empty() && self.factorization_failures.is_empty()
    }
}

/// Basis axioms, the terminal element, pullbacks over designated squares,
/// and the lifted image factorizations, each checked in the over-site.
pub fn check_over_site(frag: &FragmentSite, over: &OverSite) -> SiteChecks {
    let cat = &*over.category;
    let fc = &*frag.category;
    let m = &frag.interp.functor;
    let terminal = m.carriers[frag.terminal] == 1 && {
        let t = over.object_of(0, frag.terminal, 0).expect("terminal element");
        is_limit_cone(cat, &Diagram::empty(), t, &[]).is_ok()
    };
    let mut square_failures = Vec::new();
    let squares = designated_squares(frag, over, &frag.interp);
    for &[l, r, f, h] in &squares {
        let d = Diagram::cospan(cat, f, h);
        let mut legs = vec![0; 3];
        legs[d.shape_object("l").unwrap()] = l;
        legs[d.shape_object("r").unwrap()] = r;
        legs[d.shape_object("z").unwrap()] = cat.compose(f, l);
        if is_limit_cone(cat, &d, cat.dom(l), &legs).is_err() {
            square_failures.push(format!("{} x {}", cat.arrow_name(f), cat.arrow_name(h)));
        }
    }
    let mut checked = 0;
    let mut skipped = 0;
    let mut factorization_failures = Vec::new();
    for a in cat.arrows() {
        let t = over.projection.arr(a);
        if fc.is_identity(t) {
            continue;
        }
        let Some(im) = frag.image_factorization(t) else {
            skipped += 1;
            continue;
        };
        checked += 1;
        let b = over.objects[cat.dom(a)].element;
        let mid = over.object_of(0, im.object, m.act(im.epi, b)).expect("image element");
        let e = cat.hom(cat.dom(a), mid).iter().copied().find(|&x| over.projection.arr(x) == im.epi);
        let mono = cat.hom(mid, cat.cod(a)).iter().copied().find(|&x| over.projection.arr(x) == im.mono);
        match (e, mono) {
            (Some(e), Some(mono)) if cat.compose(mono, e) == a && cat.is_monic(mono) => {}
            _ => factorization_failures.push(cat.arrow_name(a).to_string()),
        }
    }
    SiteChecks {
        basis_valid: check_basis(cat, &over.basis).is_valid(),
        terminal,
        squares_checked: squares.len(),
        square_failures,
        factorizations_checked: checked,
        factorizations_skipped: skipped,
        factorization_failures,
    }
}

/// Objects whose representable presheaf fails the sheaf condition.
pub fn non_sheaf_representables(over: &OverSite) -> Vec<Obj> {
    over.category
        .objects()
        .filter(|&c| !is_sheaf(&FinPresheaf::representable(over.category.clone(), c), &over.basis).holds())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::same_topology;
    use crate::logic::{
        compile_fragment, parse_arrow_formula, parse_formula_in_context, ArrowDecl, CoverDecl, FinStructure,
        FragmentSpec, Signature, Theory,
    };

    /// One sort, a unary `s`, the formulas ⊤[], ⊤[x], the image of `s` and
    /// its kernel pair, with `s` declared as a cover of its image.
    fn image_fragment(carrier: usize, table: Vec<usize>) -> FragmentSite {
        let mut sig = Signature::new();
        let a = sig.add_sort("A").unwrap();
        sig.add_function("s", &[a], a).unwrap();
        let t = Theory::empty(Arc::new(sig));
        let mut m = FinStructure::blank(t.signature.clone(), vec![carrier]);
        m.functions[0] = table;
        let f = |s: &str| parse_formula_in_context(&t.signature, s).unwrap();
        let arrow = |name: &str, dom: &str, cod: &str, text: &str| ArrowDecl {
            name: name.into(),
            dom: dom.into(),
            cod: cod.into(),
            theta: parse_arrow_formula(&t.signature, text).unwrap().2,
        };
        let spec = FragmentSpec {
            formulas: vec![
                ("T0".into(), f("[] top")),
                ("T1".into(), f("[x:A] top")),
                ("Im".into(), f("[x:A] exists([y:A], eq(s(y), x))")),
                ("K".into(), f("[x:A, y:A] eq(s(x), s(y))")),
            ],
            arrows: vec![
                arrow("e", "T1", "Im", "[x:A ; y:A] eq(y, s(x))"),
                arrow("k1", "K", "T1", "[x:A, y:A ; z:A] eq(z, x)"),
                arrow("k2", "K", "T1", "[x:A, y:A ; z:A] eq(z, y)"),
                arrow("d", "T1", "K", "[x:A ; y:A, z:A] and(eq(y, x), eq(z, x))"),
                arrow("w", "K", "K", "[x:A, y:A ; u:A, v:A] and(eq(u, y), eq(v, x))"),
            ],
            covers: vec![CoverDecl { codomain: "Im".into(), arrows: vec!["e".into()] }],
            witnesses: vec![],
        };
        compile_fragment(&t, &m, &spec).unwrap()
    }

    #[test]
    fn trivial_fragment_basis_gives_trivial_antecedents() {
        let mut sig = Signature::new();
        sig.add_sort("X").unwrap();
        let t = Theory::empty(Arc::new(sig));
        let m = FinStructure::blank(t.signature.clone(), vec![2]);
        let spec = FragmentSpec {
            formulas: vec![
                ("T0".into(), parse_formula_in_context(&t.signature, "[] top").unwrap()),
                ("T1".into(), parse_formula_in_context(&t.signature, "[x:X] top").unwrap()),
            ],
            ..Default::default()
        };
        let frag = compile_fragment(&t, &m, &spec).unwrap();
        let over = antecedent_basis(&frag).unwrap();
        assert_eq!(over.category.num_objects(), 3);
        assert!(same_topology(&over.category, &over.basis, &CoverageBasis::trivial(&over.category)));
        assert!(check_over_site(&frag, &over).holds());
    }

    /// s(0) = s(1) = 0, s(2) = 2: the element 0 of the image has the two
    /// antecedents 0 and 1, and 2 has one.
    #[test]
    fn antecedents_of_an_image_cover() {
        let frag = image_fragment(3, vec![0, 0, 2]);
        let over = antecedent_basis(&frag).unwrap();
        let im = frag.object_by_name("Im").unwrap();
        let e = frag.arrow_by_name("e").unwrap();
        let at0 = over.object_of(0, im, 0).unwrap();
        let lifts: Vec<Arr> =
            over.category.arrows_into(at0).into_iter().filter(|&a| over.projection.arr(a) == e).collect();
        assert_eq!(lifts.len(), 2);
        assert!(over.raw.at(at0).iter().any(|p| p.arrows == lifts));
        let checks = check_over_site(&frag, &over);
        assert!(checks.holds(), "{checks:?}");
        assert!(non_sheaf_representables(&over).is_empty());
    }

    #[test]
    fn continuity_examples() {
        let frag = image_fragment(3, vec![0, 0, 2]);
        let over = antecedent_basis(&frag).unwrap();
        let one = SetValuedFunctor::constant(over.category.clone(), 1);
        assert!(check_continuous(&one, &over.basis));
        assert!(is_point_cartesian(&frag, &over, &one).is_ok());
        // one extra element at the image of 2, hit by nothing
        let im = frag.object_by_name("Im").unwrap();
        let at2 = over.object_of(0, im, 1).unwrap();
        let mut g = one.clone();
        g.carriers[at2] = 2;
        for a in over.category.arrows() {
            if over.category.dom(a) == at2 {
                g.actions[a] = if over.category.cod(a) == at2 { vec![0, 1] } else { vec![0, 0] };
            }
        }
        assert!(!check_continuous(&g, &over.basis));
    }
}
