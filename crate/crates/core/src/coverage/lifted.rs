use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use crate::fincat::{comma_category, pullback, Arr, Comma, FinFunctor, Obj};

use super::{close_under_multicomposition, covering_presieves_at, CoverageBasis, CoverageError, Presieve};

/// Families per object allowed after closure.
pub const FAMILY_CAP: usize = 1 << 14;

/// The comma site `(1_D ↓ f*)` with its lifted basis.
#[derive(Debug, Clone)]
pub struct LiftedSite {
    pub comma: Comma,
    /// Multicomposites of lifted `C`-covers with fiberwise `D`-covers.
    pub raw: CoverageBasis,
    /// `raw` closed under multicomposition.
    pub basis: CoverageBasis,
}

/// Lifted basis on `(1_D ↓ fstar)` for `fstar: C → D`.
///
/// At `(F, c, ξ: F → f*c)` a family is chosen by a covering presieve
/// `{ξ_i: c_i → c}` of `C` and, for each `i`, a covering presieve
/// `{b_ij}` of `D` on `P_i = f*(c_i) ×_{f*c} F`; it consists of the arrows
/// `(π_i ∘ b_ij, ξ_i)`. `cap` bounds the arrows into any object whose
/// subsets are enumerated.
pub fn lifted_basis(
    fstar: &FinFunctor,
    b_c: &CoverageBasis,
    b_d: &CoverageBasis,
    cap: usize,
) -> Result<LiftedSite, CoverageError> {
    let c_cat = &*fstar.source;
    let d_cat = &*fstar.target;
    let comma = comma_category(&FinFunctor::identity(fstar.target.clone()), fstar)
        .map_err(|e| CoverageError::Other(e.to_string()))?;
    let k = &*comma.category;
    let mut c_covers: BTreeMap<Obj, Vec<Presieve>> = BTreeMap::new();
    let mut d_covers: BTreeMap<Obj, Vec<Presieve>> = BTreeMap::new();
    let mut raw = CoverageBasis::empty(k);
    for o in k.objects() {
        let (f_obj, c, xi) = comma.objects[o];
        if let Entry::Vacant(v) = c_covers.entry(c) {
            v.insert(covering_presieves_at(c_cat, b_c, c, cap)?);
        }
        for outer in &c_covers[&c] {
            // per outer arrow: the comma arrows for each choice of D-cover
            let mut options: Vec<Vec<BTreeSet<Arr>>> = Vec::new();
            for &xi_i in &outer.arrows {
                let (p, q_i, pi_i) = pullback(d_cat, fstar.arr(xi_i), xi).ok_or_else(|| {
                    CoverageError::MissingPullback {
                        left: d_cat.arrow_name(fstar.arr(xi_i)).to_string(),
                        right: d_cat.arrow_name(xi).to_string(),
                    }
                })?;
                debug_assert_eq!(d_cat.cod(pi_i), f_obj);
                if let Entry::Vacant(v) = d_covers.entry(p) {
                    v.insert(covering_presieves_at(d_cat, b_d, p, cap)?);
                }
                let c_i = c_cat.dom(xi_i);
                let mut per_cover = Vec::new();
                for cover in &d_covers[&p] {
                    let mut arrows = BTreeSet::new();
                    for &bij in &cover.arrows {
                        let src = comma
                            .object_of(d_cat.dom(bij), c_i, d_cat.compose(q_i, bij))
                            .expect("comma object over the pullback");
                        let comp = (d_cat.compose(pi_i, bij), xi_i);
                        let arrow = k
                            .hom(src, o)
                            .iter()
                            .copied()
                            .find(|&x| comma.arrows[x] == comp)
                            .expect("lifted arrow lies in the comma category");
                        arrows.insert(arrow);
                    }
                    per_cover.push(arrows);
                }
                options.push(per_cover);
            }
            let mut partial: BTreeSet<BTreeSet<Arr>> = BTreeSet::new();
            partial.insert(BTreeSet::new());
            for opts in &options {
                let mut next = BTreeSet::new();
                for u in &partial {
                    for s in opts {
                        next.insert(u.union(s).copied().collect::<BTreeSet<Arr>>());
                    }
                }
                partial = next;
            }
            for arrows in partial {
                raw.insert(Presieve::from_set(o, arrows));
            }
        }
    }
    let basis = close_under_multicomposition(k, &raw, FAMILY_CAP)?;
    Ok(LiftedSite { comma, raw, basis })
}
