use std::collections::HashMap;
use std::sync::Arc;

use super::{ElementKey, OverError, OverSite, FAMILY_CAP};
use crate::coverage::{
    close_under_multicomposition, same_topology_extensional, CoverageBasis, Presieve,
};
use crate::fincat::{category_of_elements, Arr, Elements, FinCategory, FinFunctor, Obj};
use crate::grothendieck::{grothendieck_construction, IndexedCategory, TotalCategory};
use crate::logic::{check_hom, FinStructure, FragmentSite, Interpretation, ModelHom};
use crate::sheaves::{is_locally_surjective, is_sheaf, FinPresheaf, PresheafMap};

/// Above this many candidate arrows per family member, the full candidate
/// set is used instead of its minimal locally surjective subsets.
pub const MINIMAL_SEARCH_CAP: usize = 12;

/// Above this many combinations of minimal subsets, a single family with
/// every candidate is used.
const CHOICE_CAP: usize = 256;

/// A model in presheaves on a finite site: one structure per object and
/// a homomorphism `M(d) → M(c)` for each arrow `u: c → d`.
#[derive(Debug, Clone)]
pub struct PresheafModel {
    pub base: Arc<FinCategory>,
    pub basis: CoverageBasis,
    pub structures: Vec<FinStructure>,
    pub restrictions: Vec<ModelHom>,
}

impl PresheafModel {
    /// The same structure at every object, with identity restrictions.
    pub fn constant(base: Arc<FinCategory>, basis: CoverageBasis, m: &FinStructure) -> PresheafModel {
        PresheafModel {
            structures: vec![m.clone(); base.num_objects()],
            restrictions: vec![ModelHom::identity(m); base.num_arrows()],
            base,
            basis,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let b = &*self.base;
        let mut out = Vec::new();
        if self.structures.len() != b.num_objects() || self.restrictions.len() != b.num_arrows() {
            return vec!["structure or restriction count does not match the base".into()];
        }
        for u in b.arrows() {
            let (c, d) = (b.dom(u), b.cod(u));
            match check_hom(&self.structures[d], &self.structures[c], &self.restrictions[u]) {
                Ok(r) if r.holds() => {}
                _ => out.push(format!("restriction along {} is not a homomorphism", b.arrow_name(u))),
            }
        }
        if !out.is_empty() {
            return out;
        }
        for c in b.objects() {
            if self.restrictions[b.identity(c)] != ModelHom::identity(&self.structures[c]) {
                out.push(format!("restriction along the identity of {} is not the identity", b.object_name(c)));
            }
        }
        for g in b.arrows() {
            for f in b.arrows().filter(|&f| b.cod(f) == b.dom(g)) {
                let h = b.compose(g, f);
                if self.restrictions[g].then(&self.restrictions[f]) != self.restrictions[h] {
                    out.push(format!(
                        "restriction along {} differs from the composite of {} and {}",
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

/// The stack `c ↦ ∫M(c)` of elements of a presheaf model, with the data
/// used to build it.
#[derive(Debug, Clone)]
pub struct ElementStack {
    pub indexed: IndexedCategory,
    pub elements: Vec<Elements>,
    pub interps: Vec<Interpretation>,
    /// The presheaf `⟦φ⟧_M` on the base, per fragment object.
    pub presheaves: Vec<FinPresheaf>,
}

/// Interprets the fragment at every object and restricts elements along
/// the model's homomorphisms.
pub fn element_stack(frag: &FragmentSite, model: &PresheafModel) -> Result<ElementStack, OverError> {
    let problems = model.validate();
    if !problems.is_empty() {
        return Err(OverError::Invalid(problems.join("; ")));
    }
    let b = &*model.base;
    let fc = &*frag.category;
    let interps: Vec<Interpretation> =
        model.structures.iter().map(|s| frag.interpret(s)).collect::<Result<_, _>>()?;
    let mut presheaves = Vec::new();
    for phi in fc.objects() {
        let ctx = &frag.formula(phi).context;
        let index: Vec<HashMap<&Vec<usize>, usize>> =
            interps.iter().map(|i| i.tuples[phi].iter().enumerate().map(|(k, t)| (t, k)).collect()).collect();
        let mut restrictions = Vec::new();
        for u in b.arrows() {
            let (c, d) = (b.dom(u), b.cod(u));
            let table = interps[d].tuples[phi]
                .iter()
                .map(|t| {
                    index[c]
                        .get(&model.restrictions[u].apply_tuple(ctx, t))
                        .copied()
                        .ok_or_else(|| OverError::NotNatural { formula: frag.formulas[phi].0.clone() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            restrictions.push(table);
        }
        presheaves.push(FinPresheaf {
            category: model.base.clone(),
            carriers: interps.iter().map(|i| i.tuples[phi].len()).collect(),
            restrictions,
        });
    }
    let elements: Vec<Elements> = interps.iter().map(|i| category_of_elements(&i.functor)).collect();
    let mut transitions = Vec::new();
    for u in b.arrows() {
        let (c, d) = (b.dom(u), b.cod(u));
        let (src, tgt) = (&elements[d], &elements[c]);
        let on_objects = src
            .objects
            .iter()
            .map(|&(phi, x)| tgt.object_of(phi, presheaves[phi].restrict(u, x)).expect("restricted element"))
            .collect();
        let on_arrows = src
            .arrows
            .iter()
            .map(|&(t, x)| tgt.arrow_of(t, presheaves[fc.dom(t)].restrict(u, x)).expect("restricted arrow"))
            .collect();
        transitions.push(FinFunctor { source: src.category.clone(), target: tgt.category.clone(), on_objects, on_arrows });
    }
    let indexed = IndexedCategory {
        base: model.base.clone(),
        fibers: elements.iter().map(|e| e.category.clone()).collect(),
        transitions,
    };
    Ok(ElementStack { indexed, elements, interps, presheaves })
}

/// `Q(d) = {(u: d → c, b ∈ ⟦φ_i⟧(d)) : θ_i(b) = a·u}` with its elements.
struct FiberPresheaf {
    presheaf: FinPresheaf,
    elements: Vec<Vec<(Arr, usize)>>,
}

fn fiber_presheaf(stack: &ElementStack, base: &Arc<FinCategory>, theta: Arr, dom: Obj, cod: Obj, c: Obj, a: usize) -> FiberPresheaf {
    let elements: Vec<Vec<(Arr, usize)>> = base
        .objects()
        .map(|d| {
            let mut out = Vec::new();
            for &u in base.hom(d, c) {
                let target = stack.presheaves[cod].restrict(u, a);
                for b in 0..stack.presheaves[dom].carriers[d] {
                    if stack.interps[d].functor.act(theta, b) == target {
                        out.push((u, b));
                    }
                }
            }
            out
        })
        .collect();
    let index: Vec<HashMap<(Arr, usize), usize>> =
        elements.iter().map(|v| v.iter().enumerate().map(|(i, &p)| (p, i)).collect()).collect();
    let restrictions = base
        .arrows()
        .map(|w| {
            let (d2, d) = (base.dom(w), base.cod(w));
            elements[d]
                .iter()
                .map(|&(u, b)| index[d2][&(base.compose(u, w), stack.presheaves[dom].restrict(w, b))])
                .collect()
        })
        .collect();
    let presheaf = FinPresheaf {
        category: base.clone(),
        carriers: elements.iter().map(Vec::len).collect(),
        restrictions,
    };
    FiberPresheaf { presheaf, elements }
}

/// Whether the chosen sections `(d, element)` of `q` are jointly locally
/// surjective onto it.
fn jointly_locally_surjective(q: &FinPresheaf, chosen: &[(Obj, usize)], basis: &CoverageBasis) -> bool {
    let c = &*q.category;
    // the coproduct of the representables at the chosen objects
    let mut offsets = Vec::new();
    let carriers: Vec<usize> = c
        .objects()
        .map(|e| {
            let mut off = Vec::new();
            let mut n = 0;
            for &(d, _) in chosen {
                off.push(n);
                n += c.hom(e, d).len();
            }
            offsets.push(off);
            n
        })
        .collect();
    let restrictions = c
        .arrows()
        .map(|w| {
            let (e2, e) = (c.dom(w), c.cod(w));
            let mut table = Vec::new();
            for (k, &(d, _)) in chosen.iter().enumerate() {
                for &v in c.hom(e, d) {
                    let vw = c.compose(v, w);
                    table.push(offsets[e2][k] + c.hom(e2, d).iter().position(|&x| x == vw).unwrap());
                }
            }
            table
        })
        .collect();
    let components = c
        .objects()
        .map(|e| {
            let mut comp = Vec::new();
            for &(d, x) in chosen {
                for &v in c.hom(e, d) {
                    comp.push(q.restrict(v, x));
                }
            }
            comp
        })
        .collect();
    let source = FinPresheaf { category: q.category.clone(), carriers, restrictions };
    is_locally_surjective(&PresheafMap { source, target: q.clone(), components }, basis)
}

fn minimal_subsets(q: &FinPresheaf, candidates: &[(Obj, usize)], basis: &CoverageBasis) -> Vec<Vec<usize>> {
    let n = candidates.len();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut found: Vec<u32> = Vec::new();
    for m in masks {
        if found.iter().any(|&f| f & m == f) {
            continue;
        }
        let chosen: Vec<(Obj, usize)> = (0..n).filter(|i| m >> i & 1 == 1).map(|i| candidates[i]).collect();
        if jointly_locally_surjective(q, &chosen, basis) {
            found.push(m);
        }
    }
    found.into_iter().map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

/// The antecedent site of a model in presheaves on `(C, J)`: the total
/// category of the element stack, with a family at `(c, φ, a)` for each
/// fragment family `{θ_i}` at `φ` and each choice, per `i`, of arrows into
/// `θ_i⁻¹(a)` that are jointly locally surjective onto it.
pub fn antecedent_basis_general(frag: &FragmentSite, model: &PresheafModel) -> Result<OverSite, OverError> {
    let stack = element_stack(frag, model)?;
    let base = &*model.base;
    let fc = &*frag.category;
    for phi in fc.objects() {
        if !is_sheaf(&stack.presheaves[phi], &model.basis).holds() {
            return Err(OverError::NotSheaf { formula: frag.formulas[phi].0.clone() });
        }
        for fam in frag.basis.at(phi) {
            // ∐ ⟦φ_i⟧ → ⟦φ⟧
            let mut offsets = Vec::new();
            let carriers: Vec<usize> = base
                .objects()
                .map(|c| {
                    let mut off = Vec::new();
                    let mut n = 0;
                    for &t in &fam.arrows {
                        off.push(n);
                        n += stack.presheaves[fc.dom(t)].carriers[c];
                    }
                    offsets.push(off);
                    n
                })
                .collect();
            let restrictions = base
                .arrows()
                .map(|u| {
                    let (c, d) = (base.dom(u), base.cod(u));
                    let mut table = Vec::new();
                    for (k, &t) in fam.arrows.iter().enumerate() {
                        let p = &stack.presheaves[fc.dom(t)];
                        table.extend((0..p.carriers[d]).map(|x| offsets[c][k] + p.restrict(u, x)));
                    }
                    table
                })
                .collect();
            let components = base
                .objects()
                .map(|c| {
                    let mut comp = Vec::new();
                    for &t in &fam.arrows {
                        let n = stack.presheaves[fc.dom(t)].carriers[c];
                        comp.extend((0..n).map(|x| stack.interps[c].functor.act(t, x)));
                    }
                    comp
                })
                .collect();
            let source = FinPresheaf { category: model.base.clone(), carriers, restrictions };
            let alpha = PresheafMap { source, target: stack.presheaves[phi].clone(), components };
            if !is_locally_surjective(&alpha, &model.basis) {
                return Err(OverError::NotCovering {
                    formula: frag.formulas[phi].0.clone(),
                    object: fam.names(fc).join(", "),
                });
            }
        }
    }
    let total = grothendieck_construction(&stack.indexed)?;
    let cat = total.category.clone();
    let keys: Vec<ElementKey> = total
        .objects
        .iter()
        .map(|&(c, x)| {
            let (formula, element) = stack.elements[c].objects[x];
            ElementKey { base: c, formula, element }
        })
        .collect();
    let key_index: HashMap<ElementKey, Obj> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut raw = CoverageBasis::empty(&cat);
    let mut notes = Vec::new();
    for (o, key) in keys.iter().enumerate() {
        for fam in frag.basis.at(key.formula) {
            let mut per_member: Vec<Vec<Vec<Arr>>> = Vec::new();
            for &t in &fam.arrows {
                let dom = fc.dom(t);
                let q = fiber_presheaf(&stack, &model.base, t, dom, key.formula, key.base, key.element);
                let candidates: Vec<(Obj, usize)> =
                    base.objects().flat_map(|d| (0..q.elements[d].len()).map(move |i| (d, i))).collect();
                let arrows: Vec<Arr> = candidates
                    .iter()
                    .map(|&(d, i)| {
                        let (u, b) = q.elements[d][i];
                        let src = key_index[&ElementKey { base: d, formula: dom, element: b }];
                        let m = stack.elements[d].arrow_of(t, b).expect("element arrow");
                        total_arrow(&total, src, u, m, o)
                    })
                    .collect();
                let subsets = if candidates.len() > MINIMAL_SEARCH_CAP {
                    notes.push(format!(
                        "{} candidates at {}: using the full set",
                        candidates.len(),
                        cat.object_name(o)
                    ));
                    vec![(0..candidates.len()).collect()]
                } else {
                    minimal_subsets(&q.presheaf, &candidates, &model.basis)
                };
                per_member.push(subsets.into_iter().map(|s| s.into_iter().map(|i| arrows[i]).collect()).collect());
            }
            let combos: usize = per_member.iter().map(Vec::len).product();
            if combos > CHOICE_CAP {
                notes.push(format!("{combos} family choices at {}: using one family", cat.object_name(o)));
                let all: Vec<Arr> = per_member.iter().flatten().flatten().copied().collect();
                raw.insert(Presieve::new(&cat, o, all)?);
                continue;
            }
            let mut idx = vec![0; per_member.len()];
            loop {
                let members: Vec<Arr> =
                    per_member.iter().zip(&idx).flat_map(|(s, &i)| s[i].iter().copied()).collect();
                raw.insert(Presieve::new(&cat, o, members)?);
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < per_member[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
    }
    let basis = close_under_multicomposition(&cat, &raw, FAMILY_CAP)?;
    let projection = FinFunctor {
        source: cat.clone(),
        target: frag.category.clone(),
        on_objects: keys.iter().map(|k| k.formula).collect(),
        on_arrows: total
            .arrows
            .iter()
            .enumerate()
            .map(|(x, &(_, m))| {
                let c = total.objects[cat.dom(x)].0;
                stack.elements[c].arrows[m].0
            })
            .collect(),
    };
    notes.sort();
    notes.dedup();
    Ok(OverSite {
        category: cat,
        basis,
        raw,
        projection,
        base_projection: Some(total.projection.clone()),
        objects: keys,
        notes,
    })
}

fn total_arrow(total: &TotalCategory, src: Obj, u: Arr, m: Arr, tgt: Obj) -> Arr {
    total.arrow_of(src, u, m, tgt).expect("arrow of the total category")
}

/// Over a terminal base, compares the general antecedent site with the
/// set-based one after matching objects and arrows by their elements.
/// `None` if the sites do not match up or some object has too many sieves.
pub fn agrees_with_set_based(general: &OverSite, set_based: &OverSite, cap: usize) -> Option<bool> {
    let g = &*general.category;
    let s = &*set_based.category;
    if g.num_objects() != s.num_objects() || g.num_arrows() != s.num_arrows() {
        return None;
    }
    let obj: Vec<Obj> = general
        .objects
        .iter()
        .map(|k| set_based.object_of(0, k.formula, k.element))
        .collect::<Option<_>>()?;
    let arr: Vec<Arr> = g
        .arrows()
        .map(|a| {
            s.hom(obj[g.dom(a)], obj[g.cod(a)])
                .iter()
                .copied()
                .find(|&b| set_based.projection.arr(b) == general.projection.arr(a))
        })
        .collect::<Option<_>>()?;
    let mut moved = CoverageBasis::empty(s);
    for p in general.basis.families.iter().flatten() {
        moved.insert(Presieve::new(s, obj[p.codomain], p.arrows.iter().map(|&a| arr[a])).ok()?);
    }
    same_topology_extensional(s, &moved, &set_based.basis, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{
        compile_fragment, parse_arrow_formula, parse_formula_in_context, ArrowDecl, CoverDecl, FragmentSpec, Signature,
        Theory,
    };
    use crate::overtopos::antecedent_basis;

    fn union_fragment() -> FragmentSite {
        let mut sig = Signature::new();
        let a = sig.add_sort("A").unwrap();
        sig.add_relation("P", &[a]).unwrap();
        sig.add_relation("Q", &[a]).unwrap();
        let t = Theory::empty(Arc::new(sig));
        let mut m = FinStructure::blank(t.signature.clone(), vec![3]);
        m.relations[0] = [vec![0], vec![1]].into_iter().collect();
        m.relations[1] = [vec![1], vec![2]].into_iter().collect();
        let f = |s: &str| parse_formula_in_context(&t.signature, s).unwrap();
        let inc = |name: &str, dom: &str, cod: &str| ArrowDecl {
            name: name.into(),
            dom: dom.into(),
            cod: cod.into(),
            theta: parse_arrow_formula(&t.signature, "[x:A ; y:A] eq(x, y)").unwrap().2,
        };
        let spec = FragmentSpec {
            formulas: vec![
                ("T0".into(), f("[] top")),
                ("P".into(), f("[x:A] P(x)")),
                ("Q".into(), f("[x:A] Q(x)")),
                ("PQ".into(), f("[x:A] or(P(x), Q(x))")),
                ("M".into(), f("[x:A] and(P(x), Q(x))")),
            ],
            arrows: vec![inc("i", "P", "PQ"), inc("j", "Q", "PQ"), inc("k", "M", "P"), inc("l", "M", "Q")],
            covers: vec![CoverDecl { codomain: "PQ".into(), arrows: vec!["i".into(), "j".into()] }],
            witnesses: vec![],
        };
        compile_fragment(&t, &m, &spec).unwrap()
    }

    #[test]
    fn terminal_site_recovers_the_set_based_topology() {
        let frag = union_fragment();
        let one = Arc::new(FinCategory::terminal());
        let model = PresheafModel::constant(one.clone(), CoverageBasis::trivial(&one), &frag.model);
        let general = antecedent_basis_general(&frag, &model).unwrap();
        let set_based = antecedent_basis(&frag).unwrap();
        assert_eq!(agrees_with_set_based(&general, &set_based, 1 << 12), Some(true));
    }

    /// Base `c → d` with the arrow covering `d` and a constant model: the
    /// only antecedents are horizontal, along the base arrow.
    #[test]
    fn constant_model_over_an_arrow() {
        let frag = union_fragment();
        let base = Arc::new(FinCategory::arrow_category());
        let (c, d) = (0, 1);
        let u = base.hom(c, d)[0];
        let mut basis = CoverageBasis::trivial(&base);
        basis.insert(Presieve::new(&base, d, [u]).unwrap());
        let model = PresheafModel::constant(base.clone(), basis, &frag.model);
        let over = antecedent_basis_general(&frag, &model).unwrap();
        assert!(crate::coverage::check_basis(&over.category, &over.basis).is_valid());
        let bp = over.base_projection.as_ref().unwrap();
        // at an element over d, some raw family lies entirely over u
        let pq = frag.object_by_name("PQ").unwrap();
        let top = over.objects.iter().position(|k| k.base == d && k.formula == pq).unwrap();
        assert!(over.raw.at(top).iter().any(|p| !p.arrows.is_empty() && p.arrows.iter().all(|&a| bp.arr(a) == u)));
    }
}
