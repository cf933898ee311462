mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use common::*;
use overtopos::coverage::{
    all_sieves, check_basis, close_under_multicomposition, covers, giraud_basis, lifted_basis, multicompose,
    sieve_closure, CoverageBasis, Presieve, DEFAULT_ENUMERATION_CAP,
};
use overtopos::fincat::{
    category_of_elements, comma_category, compute_limit, enumerate_set_valued_functors, find_natural_iso,
    is_limit_cone, validate_category, validate_functor, validate_set_functor, Diagram, FinCategory,
    SetValuedFunctor,
};
use overtopos::grothendieck::{check_lifts_cartesian, grothendieck_construction, limit_in_total};
use overtopos::logic::{
    check_functional, check_sequent, emit_tm_axioms, eval_formula, parse_formula_in_context, sigma_structure,
    FinStructure, FragmentSite, Signature,
};
use overtopos::overtopos::{antecedent_basis, check_over_site, enumerate_homs, hom_to_point, point_to_hom};
use overtopos::sheaves::{
    elements_cofiltered, is_cartesian_set_functor, is_locally_surjective, is_sheaf, FinPresheaf, PresheafMap,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn random_presieve(r: &mut TestRng, cat: &FinCategory, c: usize) -> Presieve {
    let arrows: Vec<usize> = cat.arrows_into(c).into_iter().filter(|_| r.gen_bool(0.4)).collect();
    Presieve::new(cat, c, arrows).unwrap()
}

/// Presheaves on `cat` with carriers at most `k`.
fn presheaves(cat: &Arc<FinCategory>, k: usize) -> Vec<FinPresheaf> {
    let op = Arc::new(cat.opposite());
    enumerate_set_valued_functors(&op, k).iter().map(|f| FinPresheaf::from_opposite(cat.clone(), f)).collect()
}

/// Every natural transformation `p → q`, by brute force over components.
fn natural_maps(p: &FinPresheaf, q: &FinPresheaf) -> Vec<PresheafMap> {
    let slots: Vec<(usize, usize)> =
        (0..p.carriers.len()).flat_map(|o| (0..p.carriers[o]).map(move |x| (o, x))).collect();
    if slots.iter().any(|&(o, _)| q.carriers[o] == 0) {
        return vec![];
    }
    let mut out = Vec::new();
    let mut choice = vec![0; slots.len()];
    loop {
        let mut components: Vec<Vec<usize>> = p.carriers.iter().map(|&n| vec![0; n]).collect();
        for (&(o, x), &y) in slots.iter().zip(&choice) {
            components[o][x] = y;
        }
        let m = PresheafMap { source: p.clone(), target: q.clone(), components };
        if m.is_natural() {
            out.push(m);
        }
        let mut i = 0;
        loop {
            if i == slots.len() {
                return out;
            }
            choice[i] += 1;
            if choice[i] < q.carriers[slots[i].0] {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn random_fragment_from(seed: u64) -> Option<FragmentSite> {
    random_fragment(&mut rng(seed))
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn valid_tables_validate_and_mutations_are_caught(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 5);
        prop_assert!(validate_category(&cat).is_valid());
        let arrows: Vec<usize> = cat.arrows().collect();
        let f = *arrows.choose(&mut r).unwrap();
        let g = *cat.arrows_from(cat.cod(f)).choose(&mut r).unwrap();
        let undefined = cat.with_compose_entry(g, f, None);
        prop_assert!(!validate_category(&undefined).is_valid());
        let ill_typed: Vec<usize> =
            cat.arrows().filter(|&h| cat.dom(h) != cat.dom(f) || cat.cod(h) != cat.cod(g)).collect();
        if let Some(&h) = ill_typed.choose(&mut r) {
            prop_assert!(!validate_category(&cat.with_compose_entry(g, f, Some(h))).is_valid());
        }
    }

    #[test]
    fn comma_categories_validate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_semilattice(&mut r, 3), random_semilattice(&mut r, 3), random_semilattice(&mut r, 4));
        let f = random_monotone_functor(&mut r, &a, &c);
        let g = random_monotone_functor(&mut r, &b, &c);
        let k = comma_category(&f, &g).unwrap();
        prop_assert!(validate_category(&k.category).is_valid());
        prop_assert!(validate_functor(&k.left).is_empty());
        prop_assert!(validate_functor(&k.right).is_empty());
    }

    #[test]
    fn computed_limits_have_unique_factorizations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 5);
        let mut ds = vec![Diagram::empty()];
        for f in cat.arrows() {
            for g in cat.arrows().filter(|&g| cat.cod(g) == cat.cod(f)) {
                ds.push(Diagram::cospan(&cat, f, g));
            }
        }
        for d in &ds {
            let w = compute_limit(&cat, d);
            prop_assert!(w.is_some(), "meets and top exist in a semilattice");
            let w = w.unwrap();
            prop_assert!(is_limit_cone(&cat, d, w.apex, &w.legs).is_ok());
        }
    }

    #[test]
    fn elements_count_and_enumeration_is_up_to_iso(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 3);
        let all = enumerate_set_valued_functors(&cat, 2);
        prop_assert_eq!(&all, &enumerate_set_valued_functors(&cat, 2));
        for (i, m) in all.iter().enumerate() {
            prop_assert!(validate_set_functor(m).is_empty());
            let e = category_of_elements(m);
            prop_assert_eq!(e.category.num_objects(), m.carriers.iter().sum::<usize>());
            for n in &all[i + 1..] {
                prop_assert!(find_natural_iso(m, n).is_none());
            }
        }
    }

    #[test]
    fn sieve_closure_is_idempotent_and_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 5);
        let c = r.gen_range(0..cat.num_objects());
        let p = random_presieve(&mut r, &cat, c);
        let extra = random_presieve(&mut r, &cat, c);
        let q = Presieve::new(&cat, c, p.arrows.iter().chain(&extra.arrows).copied()).unwrap();
        let s = sieve_closure(&cat, &p);
        prop_assert!(s.is_closed(&cat));
        let again = sieve_closure(&cat, &Presieve::new(&cat, c, s.arrows.clone()).unwrap());
        prop_assert_eq!(&again, &s);
        let t = sieve_closure(&cat, &q);
        prop_assert!(s.arrows.iter().all(|&a| t.contains(a)));
    }

    #[test]
    fn identity_inners_and_nested_multicomposition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 4);
        let b = random_preorder_basis(&mut r, &cat);
        // a family chosen per arrow, so the composite arrow determines the inner family
        let pick: Vec<Presieve> = cat.arrows().map(|a| b.at(cat.dom(a)).choose(&mut r).unwrap().clone()).collect();
        for c in cat.objects() {
            for p in b.at(c) {
                let ids: BTreeMap<usize, Presieve> =
                    p.arrows.iter().map(|&f| (f, Presieve::identity(&cat, cat.dom(f)))).collect();
                prop_assert_eq!(&multicompose(&cat, p, &ids).unwrap(), p);
                let outer_id = BTreeMap::from([(cat.identity(c), p.clone())]);
                prop_assert_eq!(&multicompose(&cat, &Presieve::identity(&cat, c), &outer_id).unwrap(), p);

                let inner: BTreeMap<usize, Presieve> = p.arrows.iter().map(|&f| (f, pick[f].clone())).collect();
                let pq = multicompose(&cat, p, &inner).unwrap();
                let flat: BTreeMap<usize, Presieve> = pq.arrows.iter().map(|&h| (h, pick[h].clone())).collect();
                let left = multicompose(&cat, &pq, &flat).unwrap();
                let nested: BTreeMap<usize, Presieve> = p
                    .arrows
                    .iter()
                    .map(|&f| {
                        let inner2: BTreeMap<usize, Presieve> =
                            pick[f].arrows.iter().map(|&g| (g, pick[cat.compose(f, g)].clone())).collect();
                        (f, multicompose(&cat, &pick[f], &inner2).unwrap())
                    })
                    .collect();
                prop_assert_eq!(left, multicompose(&cat, p, &nested).unwrap());
            }
        }
    }

    #[test]
    fn covers_is_monotone_and_depends_only_on_the_topology(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 4);
        let b = random_preorder_basis(&mut r, &cat);
        let mut sieved = CoverageBasis::empty(&cat);
        for c in cat.objects() {
            for p in b.at(c) {
                sieved.insert(Presieve::new(&cat, c, sieve_closure(&cat, p).arrows).unwrap());
            }
        }
        let closed = close_under_multicomposition(&cat, &b, 1 << 12).unwrap();
        for c in cat.objects() {
            let sieves = all_sieves(&cat, c, 1 << 10).unwrap();
            for s in &sieves {
                let cov = covers(&cat, &b, s);
                prop_assert_eq!(cov, covers(&cat, &sieved, s));
                prop_assert_eq!(cov, covers(&cat, &closed, s));
                if cov {
                    for t in sieves.iter().filter(|t| s.arrows.iter().all(|&a| t.contains(a))) {
                        prop_assert!(covers(&cat, &b, t));
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn giraud_and_lifted_bases_are_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..=3);
        let ic = random_indexed(&mut r, 4, len);
        let total = grothendieck_construction(&ic).unwrap();
        let base_basis = random_preorder_basis(&mut r, &ic.base);
        prop_assert!(check_basis(&ic.base, &base_basis).is_valid());
        let g = giraud_basis(&total, &base_basis).unwrap();
        prop_assert!(check_basis(&total.category, &g).is_valid());

        let c = random_semilattice(&mut r, 3);
        let d = random_semilattice(&mut r, 3);
        let f = random_monotone_functor(&mut r, &c, &d);
        let (bc, bd) = (random_preorder_basis(&mut r, &c), random_preorder_basis(&mut r, &d));
        let site = lifted_basis(&f, &bc, &bd, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!(check_basis(&site.comma.category, &site.basis).is_valid());
    }

    #[test]
    fn total_categories_validate_and_lifts_are_cartesian(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..=3);
        let ic = random_indexed(&mut r, 3, len);
        let total = grothendieck_construction(&ic).unwrap();
        prop_assert!(validate_category(&total.category).is_valid());
        prop_assert!(validate_functor(&total.projection).is_empty());
        prop_assert!(check_lifts_cartesian(&ic, &total));
        let t = &*total.category;
        let f = r.gen_range(0..t.num_arrows());
        let g = *t.arrows_into(t.cod(f)).choose(&mut r).unwrap();
        let l = limit_in_total(&ic, &total, &Diagram::cospan(t, f, g)).unwrap();
        prop_assert!(l.agrees);
    }

    #[test]
    fn sheaf_condition_is_trivial_then_antitone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 3);
        let small = random_preorder_basis(&mut r, &cat);
        let mut big = small.clone();
        for _ in 0..2 {
            let c = r.gen_range(0..cat.num_objects());
            big.insert(random_presieve(&mut r, &cat, c));
        }
        let trivial = CoverageBasis::trivial(&cat);
        for p in presheaves(&cat, 2) {
            prop_assert!(is_sheaf(&p, &trivial).holds());
            if is_sheaf(&p, &big).holds() {
                prop_assert!(is_sheaf(&p, &small).holds());
            }
        }
    }

    #[test]
    fn local_surjectivity_composes_and_is_surjectivity_when_trivial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 3);
        let b = random_preorder_basis(&mut r, &cat);
        let trivial = CoverageBasis::trivial(&cat);
        let ps = presheaves(&cat, 2);
        let p = ps.choose(&mut r).unwrap();
        let q = ps.choose(&mut r).unwrap();
        let s = ps.choose(&mut r).unwrap();
        for alpha in natural_maps(p, q) {
            let surjective = alpha.components.iter().enumerate().all(|(o, comp)| {
                comp.iter().collect::<BTreeSet<_>>().len() == q.carriers[o]
            });
            prop_assert_eq!(is_locally_surjective(&alpha, &trivial), surjective);
            if !is_locally_surjective(&alpha, &b) {
                continue;
            }
            for beta in natural_maps(q, s).into_iter().filter(|m| is_locally_surjective(m, &b)) {
                prop_assert!(is_locally_surjective(&alpha.then(&beta), &b));
            }
        }
    }

    #[test]
    fn cartesian_set_functors_have_cofiltered_elements(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cat = random_semilattice(&mut r, 3);
        for m in enumerate_set_valued_functors(&cat, 2) {
            let cartesian = is_cartesian_set_functor(&m).unwrap().holds();
            prop_assert_eq!(cartesian, elements_cofiltered(&m), "{:?}", m.carriers);
        }
    }

    #[test]
    fn positive_formulas_grow_with_relations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut sig = Signature::new();
        let a = sig.add_sort("A").unwrap();
        sig.add_relation("R", &[a, a]).unwrap();
        sig.add_relation("P", &[a]).unwrap();
        let sig = Arc::new(sig);
        let n = r.gen_range(1..=3);
        let mut m = FinStructure::blank(sig.clone(), vec![n]);
        for x in 0..n {
            if r.gen_bool(0.4) {
                m.relations[1].insert(vec![x]);
            }
            for y in 0..n {
                if r.gen_bool(0.3) {
                    m.relations[0].insert(vec![x, y]);
                }
            }
        }
        let mut bigger = m.clone();
        let (x, y) = (r.gen_range(0..n), r.gen_range(0..n));
        if r.gen_bool(0.5) {
            bigger.relations[0].insert(vec![x, y]);
        } else {
            bigger.relations[1].insert(vec![x]);
        }
        for text in [
            "[x:A, y:A] R(x, y)",
            "[x:A] exists([z:A], and(R(x, z), P(z)))",
            "[x:A, y:A] or(R(y, x), and(P(x), eq(x, y)))",
            "[x:A] exists([z:A], exists([w:A], and(R(x, z), R(z, w), P(w))))",
        ] {
            let phi = parse_formula_in_context(&sig, text).unwrap();
            let before: BTreeSet<Vec<usize>> = eval_formula(&m, &phi).unwrap().into_iter().collect();
            let after: BTreeSet<Vec<usize>> = eval_formula(&bigger, &phi).unwrap().into_iter().collect();
            prop_assert!(before.is_subset(&after), "{}", text);
        }
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn compiled_fragments_satisfy_their_invariants(seed in any::<u64>()) {
        let Some(frag) = random_fragment_from(seed) else { return Ok(()) };
        prop_assert!(validate_category(&frag.category).is_valid());
        let interp = &frag.interp.functor;
        prop_assert!(validate_set_functor(interp).is_empty());
        for (a, arrow) in frag.arrows.iter().enumerate() {
            if frag.category.is_identity(a) {
                continue;
            }
            let (dom, cod) = (frag.formula(arrow.dom), frag.formula(arrow.cod));
            prop_assert!(check_functional(&frag.model, dom, cod, &arrow.theta).unwrap());
        }
        for c in frag.category.objects() {
            for p in frag.basis.at(c) {
                let hit: BTreeSet<usize> = p.arrows.iter().flat_map(|&f| interp.actions[f].iter().copied()).collect();
                prop_assert_eq!(hit.len(), interp.carriers[c]);
            }
        }
    }

    #[test]
    fn antecedent_sites_are_cartesian_bases(seed in any::<u64>()) {
        let Some(frag) = random_fragment_from(seed) else { return Ok(()) };
        let over = antecedent_basis(&frag).unwrap();
        let checks = check_over_site(&frag, &over);
        prop_assert!(checks.holds(), "{:?}", checks);
    }

    #[test]
    fn homs_give_points_satisfying_the_emitted_theory(seed in any::<u64>()) {
        let Some(frag) = random_fragment_from(seed) else { return Ok(()) };
        let over = antecedent_basis(&frag).unwrap();
        let tm = emit_tm_axioms(&frag).unwrap();
        let homs = enumerate_homs(&frag.theory, &frag.model, 1, 1 << 16).unwrap();
        for (n, g) in homs.iter().take(12) {
            let p = hom_to_point(&frag, &over, n, g).unwrap();
            prop_assert!(p.cartesian && p.continuous);
            let s = sigma_structure(&tm, &p.functor);
            for ax in &tm.theory.axioms {
                prop_assert!(check_sequent(&s, ax).unwrap(), "{}", ax.display(&tm.theory.signature));
            }
        }
    }
}

#[test]
fn points_of_the_objects_fragment_give_valid_homs() {
    for n in 1..=3 {
        let frag = objects_fragment(n);
        let over = antecedent_basis(&frag).unwrap();
        for p in overtopos::overtopos::enumerate_points(&frag, &over, 2) {
            let (dom, g) = point_to_hom(&frag, &over, &p.functor).unwrap();
            let rep = overtopos::logic::check_hom(&dom, &frag.model, &g).unwrap();
            assert!(rep.holds());
        }
    }
}

#[test]
fn constant_functors_on_a_semilattice_are_cartesian_only_when_singleton() {
    let cat = random_semilattice(&mut rng(7), 4);
    for k in 0..=2 {
        let m = SetValuedFunctor::constant(cat.clone(), k);
        assert_eq!(is_cartesian_set_functor(&m).unwrap().holds(), k == 1);
    }
}
