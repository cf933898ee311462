use crate::grothendieck::TotalCategory;

use super::{CoverageBasis, CoverageError, Presieve};

/// Families at `(c, a)` are the cartesian lifts at `a` of the base families
/// at `c`.
pub fn giraud_basis(total: &TotalCategory, base_basis: &CoverageBasis) -> Result<CoverageBasis, CoverageError> {
    let t = &*total.category;
    let mut out = CoverageBasis::empty(t);
    for o in t.objects() {
        let (c, a) = total.objects[o];
        for r in base_basis.at(c) {
            let mut arrows = Vec::new();
            for &u in &r.arrows {
                let l = total.lift(u, a).ok_or_else(|| {
                    CoverageError::Other(format!("no cartesian lift recorded for arrow {u} at {}", t.object_name(o)))
                })?;
                arrows.push(l);
            }
            out.insert(Presieve::new(t, o, arrows)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::coverage::{check_basis, same_topology};
    use crate::fincat::{FinCategory, FinFunctor};
    use crate::grothendieck::{grothendieck_construction, IndexedCategory};

    fn constant(base: Arc<FinCategory>, fiber: Arc<FinCategory>) -> IndexedCategory {
        let n = base.num_objects();
        let transitions = base.arrows().map(|_| FinFunctor::identity(fiber.clone())).collect();
        IndexedCategory { base, fibers: vec![fiber; n], transitions }
    }

    #[test]
    fn trivial_base_gives_identity_lifts() {
        let base = Arc::new(FinCategory::arrow_category());
        let chain = Arc::new(FinCategory::preorder(&["0".into(), "1".into()], |i, j| i <= j));
        let ic = constant(base.clone(), chain);
        let t = grothendieck_construction(&ic).unwrap();
        let g = giraud_basis(&t, &CoverageBasis::trivial(&base)).unwrap();
        assert_eq!(g, CoverageBasis::trivial(&t.category));
    }

    #[test]
    fn terminal_fibers_reproduce_the_base_basis() {
        let base = Arc::new(FinCategory::arrow_category());
        let f = base.arrow_by_name("f").unwrap();
        let mut bb = CoverageBasis::trivial(&base);
        bb.insert(Presieve::new(&base, base.cod(f), [f]).unwrap());
        let ic = constant(base.clone(), Arc::new(FinCategory::terminal()));
        let t = grothendieck_construction(&ic).unwrap();
        let g = giraud_basis(&t, &bb).unwrap();
        // objects and arrows correspond one to one, by construction order
        assert_eq!(g.num_families(), bb.num_families());
        for o in t.category.objects() {
            let c = t.objects[o].0;
            let mapped: Vec<Vec<usize>> =
                g.at(o).iter().map(|p| p.arrows.iter().map(|&x| t.arrows[x].0).collect()).collect();
            let expected: Vec<Vec<usize>> = bb.at(c).iter().map(|p| p.arrows.clone()).collect();
            assert_eq!(mapped, expected);
        }
        assert!(check_basis(&t.category, &g).is_valid());
    }

    #[test]
    fn lifts_enumerated_per_fiber_object() {
        // base a → b with {f} covering b; fibers 1 over a, 2 over b: each of
        // the two objects over b gets its own one-arrow family
        let base = Arc::new(FinCategory::arrow_category());
        let f = base.arrow_by_name("f").unwrap();
        let a = base.dom(f);
        let point = Arc::new(FinCategory::terminal());
        let two = Arc::new(FinCategory::preorder(&["p".into(), "q".into()], |i, j| i == j));
        let mut fibers = vec![two.clone(); 2];
        fibers[a] = point.clone();
        let transitions = base
            .arrows()
            .map(|u| {
                if u == f {
                    FinFunctor { source: two.clone(), target: point.clone(), on_objects: vec![0, 0], on_arrows: vec![0, 0] }
                } else {
                    FinFunctor::identity(fibers[base.dom(u)].clone())
                }
            })
            .collect();
        let ic = IndexedCategory { base: base.clone(), fibers, transitions };
        let t = grothendieck_construction(&ic).unwrap();
        let mut bb = CoverageBasis::trivial(&base);
        bb.insert(Presieve::new(&base, base.cod(f), [f]).unwrap());
        let g = giraud_basis(&t, &bb).unwrap();
        for o in t.category.objects() {
            let (c, _) = t.objects[o];
            let expected = if c == a { 1 } else { 2 };
            assert_eq!(g.at(o).len(), expected);
        }
        assert!(check_basis(&t.category, &g).is_valid());
        assert!(!same_topology(&t.category, &g, &CoverageBasis::trivial(&t.category)));
    }
}
