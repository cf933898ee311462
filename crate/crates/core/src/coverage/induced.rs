use std::collections::BTreeSet;
use std::sync::Arc;

use crate::fincat::{Arr, CategoryBuilder, FinCategory, FinFunctor, Obj};

use super::{covers_presieve, CoverageBasis, CoverageError, Presieve};

/// The full subcategory on `objects`, with its inclusion.
pub fn full_subcategory(cat: &Arc<FinCategory>, objects: &[Obj]) -> (Arc<FinCategory>, FinFunctor) {
    let keep: BTreeSet<Obj> = objects.iter().copied().collect();
    let mut b = CategoryBuilder::new().raw();
    for &o in &keep {
        b.object_with_identity(cat.object_name(o), cat.arrow_name(cat.identity(o)));
    }
    let inside = |a: Arr| keep.contains(&cat.dom(a)) && keep.contains(&cat.cod(a));
    for a in cat.arrows().filter(|&a| inside(a) && !cat.is_identity(a)) {
        b.arrow(cat.arrow_name(a), cat.object_name(cat.dom(a)), cat.object_name(cat.cod(a)));
    }
    for g in cat.arrows().filter(|&g| inside(g)) {
        for f in cat.arrows().filter(|&f| inside(f) && cat.cod(f) == cat.dom(g)) {
            b.compose_entry(cat.arrow_name(g), cat.arrow_name(f), cat.arrow_name(cat.compose(g, f)));
        }
    }
    let sub = Arc::new(b.build().expect("full subcategory is a category"));
    let inclusion = FinFunctor {
        source: sub.clone(),
        target: cat.clone(),
        on_objects: sub.objects().map(|o| cat.object_by_name(sub.object_name(o)).unwrap()).collect(),
        on_arrows: sub.arrows().map(|a| cat.arrow_by_name(sub.arrow_name(a)).unwrap()).collect(),
    };
    (sub, inclusion)
}

#[derive(Debug, Clone)]
pub struct InducedBasis {
    pub subcategory: Arc<FinCategory>,
    pub inclusion: FinFunctor,
    pub basis: CoverageBasis,
    /// Whether every object of the ambient category is covered by the
    /// arrows out of the subcategory.
    pub dense: bool,
    /// Ambient objects where density fails.
    pub undense_objects: Vec<Obj>,
}

/// Presieves on the full subcategory whose image generates a covering sieve
/// in `cat`. Density is computed and reported, not assumed.
pub fn induce_on_subcategory(
    cat: &Arc<FinCategory>,
    b: &CoverageBasis,
    objects: &[Obj],
    cap: usize,
) -> Result<InducedBasis, CoverageError> {
    let (sub, inclusion) = full_subcategory(cat, objects);
    let mut basis = CoverageBasis::empty(&sub);
    for s in sub.objects() {
        let into = sub.arrows_into(s);
        if into.len() > cap {
            return Err(CoverageError::TooLarge {
                what: "arrows into object".into(),
                object: sub.object_name(s).to_string(),
                limit: cap,
            });
        }
        for mask in 0u64..(1u64 << into.len()) {
            let chosen: Vec<Arr> =
                into.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect();
            let image = Presieve::new(cat, inclusion.obj(s), chosen.iter().map(|&a| inclusion.arr(a)))?;
            if covers_presieve(cat, b, &image) {
                basis.insert(Presieve::new(&sub, s, chosen)?);
            }
        }
    }
    let keep: BTreeSet<Obj> = objects.iter().copied().collect();
    let undense_objects: Vec<Obj> = cat
        .objects()
        .filter(|&x| {
            let from_sub = cat.arrows_into(x).into_iter().filter(|&a| keep.contains(&cat.dom(a)));
            let p = Presieve::new(cat, x, from_sub).expect("arrows into x");
            !covers_presieve(cat, b, &p)
        })
        .collect();
    Ok(InducedBasis { subcategory: sub, inclusion, basis, dense: undense_objects.is_empty(), undense_objects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{check_basis, same_topology};

    fn chain3() -> Arc<FinCategory> {
        let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        Arc::new(FinCategory::preorder(&names, |i, j| i <= j))
    }

    #[test]
    fn whole_category_gives_the_same_topology() {
        let c = chain3();
        let z = c.object_by_name("z").unwrap();
        let y = c.object_by_name("y").unwrap();
        let mut b = CoverageBasis::trivial(&c);
        b.insert(Presieve::new(&c, z, [c.hom(y, z)[0]]).unwrap());
        let b = crate::coverage::close_under_multicomposition(&c, &b, 100).unwrap();
        let all: Vec<Obj> = c.objects().collect();
        let ind = induce_on_subcategory(&c, &b, &all, 10).unwrap();
        assert!(ind.dense);
        assert_eq!(*ind.subcategory, *c);
        assert!(same_topology(&c, &b, &ind.basis));
        assert!(check_basis(&c, &ind.basis).is_valid());
    }

    #[test]
    fn single_object_trivial_basis() {
        let c = chain3();
        let y = c.object_by_name("y").unwrap();
        let ind = induce_on_subcategory(&c, &CoverageBasis::trivial(&c), &[y], 10).unwrap();
        assert_eq!(ind.basis, CoverageBasis::trivial(&ind.subcategory));
        // x is not covered by arrows out of y, and neither is z
        assert!(!ind.dense);
        assert_eq!(ind.undense_objects.len(), 2);
    }
}
