use std::collections::HashMap;

use super::{antecedent_site, OverError, OverSite};
use crate::coverage::{covers_presieve, Presieve};
use crate::fincat::{validate_functor, FinFunctor};
use crate::logic::{check_hom, FinStructure, FragmentSite, ModelHom};

/// The functor between antecedent sites induced by a homomorphism, with
/// the antecedent families whose image does not cover.
#[derive(Debug, Clone)]
pub struct SiteMorphism {
    pub source: OverSite,
    pub target: OverSite,
    pub functor: FinFunctor,
    pub cover_failures: Vec<String>,
}

impl SiteMorphism {
    pub fn preserves_covers(&self) -> bool {
        self.cover_failures.is_empty()
    }
}

/// `(φ, a) ↦ (φ, f(a))` from the antecedent site of `m1` to that of `m2`.
pub fn hom_to_site_morphism(
    frag: &FragmentSite,
    m1: &FinStructure,
    m2: &FinStructure,
    f: &ModelHom,
) -> Result<SiteMorphism, OverError> {
    let report = check_hom(m1, m2, f)?;
    if !report.holds() {
        return Err(OverError::NotAHom(format!("{:?}", report.failures[0])));
    }
    let (i1, i2) = (frag.interpret(m1)?, frag.interpret(m2)?);
    let source = antecedent_site(frag, &i1)?;
    let target = antecedent_site(frag, &i2)?;
    let mut on_objects = Vec::with_capacity(source.objects.len());
    for k in &source.objects {
        let ctx = &frag.formula(k.formula).context;
        let image = f.apply_tuple(ctx, &i1.tuples[k.formula][k.element]);
        let b = i2.tuples[k.formula]
            .iter()
            .position(|t| *t == image)
            .ok_or_else(|| OverError::NotNatural { formula: frag.formulas[k.formula].0.clone() })?;
        on_objects.push(target.object_of(0, k.formula, b).expect("element"));
    }
    let (sc, tc) = (&*source.category, &*target.category);
    let mut by_lift: HashMap<(usize, usize), usize> = HashMap::new();
    for a in tc.arrows() {
        by_lift.insert((target.projection.arr(a), tc.dom(a)), a);
    }
    let mut on_arrows = Vec::with_capacity(sc.num_arrows());
    for a in sc.arrows() {
        let key = (source.projection.arr(a), on_objects[sc.dom(a)]);
        on_arrows.push(*by_lift.get(&key).ok_or_else(|| OverError::NotNatural {
            formula: frag.formulas[frag.category.cod(key.0)].0.clone(),
        })?);
    }
    let functor = FinFunctor { source: source.category.clone(), target: target.category.clone(), on_objects, on_arrows };
    if let Some(p) = validate_functor(&functor).first() {
        return Err(OverError::Invalid(p.clone()));
    }
    let mut cover_failures = Vec::new();
    for p in source.raw.families.iter().flatten() {
        let image = Presieve::new(tc, functor.obj(p.codomain), p.arrows.iter().map(|&a| functor.arr(a)))?;
        if !covers_presieve(tc, &target.basis, &image) {
            cover_failures.push(format!("{{{}}} at {}", p.names(sc).join(", "), sc.object_name(p.codomain)));
        }
    }
    Ok(SiteMorphism { source, target, functor, cover_failures })
}
