#![allow(dead_code)]

use std::sync::Arc;

use overtopos::coverage::{close_under_multicomposition, CoverageBasis, Presieve};
use overtopos::fincat::{pullback, FinCategory, FinFunctor, Obj};
use overtopos::grothendieck::IndexedCategory;
use overtopos::logic::{
    compile_fragment, parse_arrow_formula, parse_formula_in_context, ArrowDecl, CoverDecl, FinStructure,
    FragmentSite, FragmentSpec, Signature, Theory,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn decl(sig: &Signature, name: &str, dom: &str, cod: &str, text: &str) -> ArrowDecl {
    ArrowDecl { name: name.into(), dom: dom.into(), cod: cod.into(), theta: parse_arrow_formula(sig, text).unwrap().2 }
}

fn formula(sig: &Signature, name: &str, text: &str) -> (String, overtopos::logic::FormulaInContext) {
    (name.into(), parse_formula_in_context(sig, text).unwrap())
}

pub fn objects_theory() -> Theory {
    let mut sig = Signature::new();
    sig.add_sort("X").unwrap();
    Theory::empty(Arc::new(sig))
}

pub fn set(t: &Theory, n: usize) -> FinStructure {
    let mut s = FinStructure::blank(t.signature.clone(), vec![n]);
    s.labels[0] = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    s
}

/// `T0`, `T1`, `T2` with projections, diagonal and swap over a set of size
/// `n`, with a 3-element witness so the arrows stay distinct.
pub fn objects_fragment(n: usize) -> FragmentSite {
    let t = objects_theory();
    let sig = t.signature.clone();
    let spec = FragmentSpec {
        formulas: vec![formula(&sig, "T0", "[] top"), formula(&sig, "T1", "[x:X] top"), formula(&sig, "T2", "[x:X, y:X] top")],
        arrows: vec![
            decl(&sig, "p1", "T2", "T1", "[x:X, y:X ; z:X] eq(z, x)"),
            decl(&sig, "p2", "T2", "T1", "[x:X, y:X ; z:X] eq(z, y)"),
            decl(&sig, "d", "T1", "T2", "[x:X ; y:X, z:X] and(eq(y, x), eq(z, x))"),
            decl(&sig, "s", "T2", "T2", "[x:X, y:X ; u:X, v:X] and(eq(u, y), eq(v, x))"),
        ],
        covers: vec![],
        witnesses: vec![set(&t, 3)],
    };
    compile_fragment(&t, &set(&t, n), &spec).unwrap()
}

fn unary_theory() -> Theory {
    let mut sig = Signature::new();
    let a = sig.add_sort("A").unwrap();
    sig.add_function("s", &[a], a).unwrap();
    Theory::empty(Arc::new(sig))
}

fn unary_structure(t: &Theory, table: Vec<usize>) -> FinStructure {
    let mut m = FinStructure::blank(t.signature.clone(), vec![table.len()]);
    m.functions[0] = table;
    m
}

/// The image of `s` covered by `T1`, with its kernel pair. The witness
/// keeps `k1` and `k2` apart when `s` is injective on the model.
pub fn image_fragment(table: Vec<usize>) -> FragmentSite {
    let t = unary_theory();
    let sig = t.signature.clone();
    let spec = FragmentSpec {
        formulas: vec![
            formula(&sig, "T0", "[] top"),
            formula(&sig, "T1", "[x:A] top"),
            formula(&sig, "Im", "[x:A] exists([y:A], eq(s(y), x))"),
            formula(&sig, "K", "[x:A, y:A] eq(s(x), s(y))"),
        ],
        arrows: vec![
            decl(&sig, "e", "T1", "Im", "[x:A ; y:A] eq(y, s(x))"),
            decl(&sig, "k1", "K", "T1", "[x:A, y:A ; z:A] eq(z, x)"),
            decl(&sig, "k2", "K", "T1", "[x:A, y:A ; z:A] eq(z, y)"),
            decl(&sig, "d", "T1", "K", "[x:A ; y:A, z:A] and(eq(y, x), eq(z, x))"),
            decl(&sig, "w", "K", "K", "[x:A, y:A ; u:A, v:A] and(eq(u, y), eq(v, x))"),
        ],
        covers: vec![CoverDecl { codomain: "Im".into(), arrows: vec!["e".into()] }],
        witnesses: vec![unary_structure(&t, vec![1, 2, 2])],
    };
    compile_fragment(&t, &unary_structure(&t, table), &spec).unwrap()
}

fn random_table(rng: &mut TestRng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// A fragment drawn from one of three families: products of the bare
/// sort, a unary operation with its image, kernel pair and fixed points,
/// or a unary predicate. At most 6 formulas and carriers of size 1 to 3.
/// `None` when compilation rejects the draw.
pub fn random_fragment(rng: &mut TestRng) -> Option<FragmentSite> {
    let n = rng.gen_range(1..=3);
    let mut spec = FragmentSpec::default();
    let (t, m) = match rng.gen_range(0..3) {
        0 => {
            let t = objects_theory();
            let sig = t.signature.clone();
            spec.formulas.push(formula(&sig, "T0", "[] top"));
            let t1 = rng.gen_bool(0.8);
            let t2 = t1 && rng.gen_bool(0.7);
            if t1 {
                spec.formulas.push(formula(&sig, "T1", "[x:X] top"));
            }
            if t2 {
                spec.formulas.push(formula(&sig, "T2", "[x:X, y:X] top"));
                if rng.gen_bool(0.3) {
                    spec.formulas.push(formula(&sig, "D", "[x:X, y:X] eq(x, y)"));
                    spec.arrows.push(decl(&sig, "i", "D", "T2", "[x:X, y:X ; u:X, v:X] and(eq(u, x), eq(v, y))"));
                }
                let mut arrows = vec![
                    decl(&sig, "p1", "T2", "T1", "[x:X, y:X ; z:X] eq(z, x)"),
                    decl(&sig, "p2", "T2", "T1", "[x:X, y:X ; z:X] eq(z, y)"),
                    decl(&sig, "d", "T1", "T2", "[x:X ; y:X, z:X] and(eq(y, x), eq(z, x))"),
                    decl(&sig, "s", "T2", "T2", "[x:X, y:X ; u:X, v:X] and(eq(u, y), eq(v, x))"),
                ];
                arrows.retain(|_| rng.gen_bool(0.75));
                spec.arrows.extend(arrows);
            }
            spec.witnesses.push(set(&t, 3));
            let m = set(&t, n);
            (t, m)
        }
        1 => {
            let t = unary_theory();
            let sig = t.signature.clone();
            spec.formulas.push(formula(&sig, "T0", "[] top"));
            spec.formulas.push(formula(&sig, "T1", "[x:A] top"));
            spec.arrows.push(decl(&sig, "sg", "T1", "T1", "[x:A ; y:A] eq(y, s(x))"));
            let im = rng.gen_bool(0.6);
            let k = rng.gen_bool(0.6);
            if im {
                spec.formulas.push(formula(&sig, "Im", "[x:A] exists([y:A], eq(s(y), x))"));
                spec.arrows.push(decl(&sig, "e", "T1", "Im", "[x:A ; y:A] eq(y, s(x))"));
                if rng.gen_bool(0.5) {
                    spec.arrows.push(decl(&sig, "j", "Im", "T1", "[x:A ; y:A] eq(y, x)"));
                }
            }
            if k {
                spec.formulas.push(formula(&sig, "K", "[x:A, y:A] eq(s(x), s(y))"));
                spec.arrows.push(decl(&sig, "k1", "K", "T1", "[x:A, y:A ; z:A] eq(z, x)"));
                spec.arrows.push(decl(&sig, "k2", "K", "T1", "[x:A, y:A ; z:A] eq(z, y)"));
                spec.arrows.push(decl(&sig, "d", "T1", "K", "[x:A ; y:A, z:A] and(eq(y, x), eq(z, x))"));
                spec.arrows.push(decl(&sig, "w", "K", "K", "[x:A, y:A ; u:A, v:A] and(eq(u, y), eq(v, x))"));
            }
            if rng.gen_bool(0.4) {
                spec.formulas.push(formula(&sig, "Fix", "[x:A] eq(s(x), x)"));
                spec.arrows.push(decl(&sig, "f", "Fix", "T1", "[x:A ; y:A] eq(y, x)"));
            }
            if im && k && rng.gen_bool(0.7) {
                spec.covers.push(CoverDecl { codomain: "Im".into(), arrows: vec!["e".into()] });
            }
            spec.witnesses.push(unary_structure(&t, vec![1, 2, 2]));
            let m = unary_structure(&t, random_table(rng, n));
            (t, m)
        }
        _ => {
            let mut sig = Signature::new();
            let a = sig.add_sort("A").unwrap();
            sig.add_relation("P", &[a]).unwrap();
            let t = Theory::empty(Arc::new(sig));
            let sig = t.signature.clone();
            spec.formulas.push(formula(&sig, "T0", "[] top"));
            spec.formulas.push(formula(&sig, "T1", "[x:A] top"));
            spec.formulas.push(formula(&sig, "P", "[x:A] P(x)"));
            spec.arrows.push(decl(&sig, "i", "P", "T1", "[x:A ; y:A] eq(y, x)"));
            if rng.gen_bool(0.5) {
                spec.formulas.push(formula(&sig, "Q", "[x:A] or(P(x), bot)"));
            }
            let mut m = FinStructure::blank(sig.clone(), vec![n]);
            for x in 0..n {
                if rng.gen_bool(0.5) {
                    m.relations[0].insert(vec![x]);
                }
            }
            let mut w = FinStructure::blank(sig.clone(), vec![3]);
            w.relations[0].insert(vec![0]);
            spec.witnesses.push(w);
            (t, m)
        }
    };
    compile_fragment(&t, &m, &spec).ok()
}

/// At least `count` fragments from consecutive seeds, with the number of
/// draws rejected by compilation.
pub fn fragment_suite(seed: u64, count: usize) -> (Vec<FragmentSite>, usize) {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let mut rejected = 0;
    while out.len() < count {
        match random_fragment(&mut r) {
            Some(f) => out.push(f),
            None => rejected += 1,
        }
        assert!(rejected < 10 * count, "fragment generator rejects almost everything");
    }
    (out, rejected)
}

/// A meet-semilattice with top: subsets of a 3-element set closed under
/// intersection, at most `max` of them, ordered by inclusion.
pub fn random_semilattice(rng: &mut TestRng, max: usize) -> Arc<FinCategory> {
    loop {
        let mut sets: Vec<u8> = vec![0b111];
        for _ in 0..rng.gen_range(0..4) {
            sets.push(rng.gen_range(0..8));
        }
        loop {
            let mut grown = sets.clone();
            for &x in &sets {
                for &y in &sets {
                    grown.push(x & y);
                }
            }
            grown.sort();
            grown.dedup();
            if grown == sets {
                break;
            }
            sets = grown;
        }
        if sets.len() <= max {
            let names: Vec<String> = sets.iter().map(|s| format!("s{s:03b}")).collect();
            return Arc::new(FinCategory::preorder(&names, |i, j| sets[i] & !sets[j] == 0));
        }
    }
}

/// A chain `0 < 1 < .. < n-1`.
pub fn chain(n: usize) -> Arc<FinCategory> {
    let names: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
    Arc::new(FinCategory::preorder(&names, |i, j| i <= j))
}

/// The functor of preorders given by an order-preserving object map.
pub fn monotone_functor(c: &Arc<FinCategory>, d: &Arc<FinCategory>, on_objects: Vec<Obj>) -> Option<FinFunctor> {
    let mut on_arrows = Vec::new();
    for a in c.arrows() {
        let (x, y) = (on_objects[c.dom(a)], on_objects[c.cod(a)]);
        on_arrows.push(*d.hom(x, y).first()?);
    }
    Some(FinFunctor { source: c.clone(), target: d.clone(), on_objects, on_arrows })
}

pub fn random_monotone_functor(rng: &mut TestRng, c: &Arc<FinCategory>, d: &Arc<FinCategory>) -> FinFunctor {
    loop {
        let objs: Vec<Obj> = c.objects().map(|_| rng.gen_range(0..d.num_objects())).collect();
        if let Some(f) = monotone_functor(c, d, objs) {
            return f;
        }
    }
}

/// A basis on a meet-semilattice: identities and a few random families,
/// closed under pullback along every arrow and then under
/// multicomposition.
pub fn random_preorder_basis(rng: &mut TestRng, cat: &FinCategory) -> CoverageBasis {
    let mut b = CoverageBasis::trivial(cat);
    for _ in 0..rng.gen_range(0..3) {
        let c = rng.gen_range(0..cat.num_objects());
        let mut into = cat.arrows_into(c);
        into.shuffle(rng);
        let k = rng.gen_range(1..=into.len());
        b.insert(Presieve::new(cat, c, into[..k].iter().copied()).unwrap());
    }
    loop {
        let mut changed = false;
        for c in cat.objects() {
            for p in b.at(c).to_vec() {
                for g in cat.arrows_into(c) {
                    let arrows: Vec<_> = p.arrows.iter().map(|&f| pullback(cat, g, f).expect("meets exist").1).collect();
                    changed |= b.insert(Presieve::new(cat, cat.dom(g), arrows).unwrap());
                }
            }
        }
        if !changed {
            break;
        }
    }
    close_under_multicomposition(cat, &b, 1 << 12).unwrap()
}

/// A strict indexed category over a meet-semilattice base with every
/// fiber the chain of length `len`. Along `d < c` the transition is
/// `x ↦ max(x, ρ(d))` for an order-reversing `ρ`; identities go to
/// identity functors.
pub fn random_indexed(rng: &mut TestRng, max_base: usize, len: usize) -> IndexedCategory {
    let base = random_semilattice(rng, max_base);
    let fiber = chain(len);
    let rho = loop {
        let r: Vec<usize> = base.objects().map(|_| rng.gen_range(0..len)).collect();
        let antitone = base.arrows().all(|u| r[base.cod(u)] <= r[base.dom(u)]);
        if antitone {
            break r;
        }
    };
    let transitions = base
        .arrows()
        .map(|u| {
            if base.is_identity(u) {
                FinFunctor::identity(fiber.clone())
            } else {
                let lift: Vec<Obj> = fiber.objects().map(|x| x.max(rho[base.dom(u)])).collect();
                monotone_functor(&fiber, &fiber, lift).unwrap()
            }
        })
        .collect();
    IndexedCategory { base: base.clone(), fibers: vec![fiber; base.num_objects()], transitions }
}
