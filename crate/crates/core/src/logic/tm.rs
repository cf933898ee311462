use std::collections::BTreeMap;
use std::sync::Arc;

use super::{FinStructure, Formula, FragmentSite, LogicError, Sequent, Signature, Term, Theory};
use crate::fincat::SetValuedFunctor;

/// The theory of flat cover-preserving functors on the category of elements
/// of a compiled fragment, as an explicit list of sequent schemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmTheory {
    pub theory: Theory,
    /// Sort of each object of the category of elements.
    pub sort_of_element: Vec<usize>,
    /// Function symbol of each arrow of the category of elements.
    pub function_of_arrow: Vec<usize>,
}

fn app(f: usize, t: Term) -> Term {
    Term::App(f, vec![t])
}

fn eq(a: Term, b: Term) -> Formula {
    Formula::Eq(a, b)
}

/// One sort per element `(φ, a)` named `φ@a`, one unary function per arrow
/// `(θ, a)` named `θ@a`, and the instances of the terminal, pullback and
/// cover schemes. Axioms are sorted by their printed form.
///
/// Families containing an identity give axioms of the form `y = y'` with
/// a trivial witness, and are skipped.
pub fn emit_tm_axioms(frag: &FragmentSite) -> Result<TmTheory, LogicError> {
    let cat = &*frag.category;
    let el = &frag.elements;
    let m = &frag.interp.functor;
    let mut sig = Signature::new();
    let mut sort_of_element = Vec::new();
    for &(c, x) in &el.objects {
        sort_of_element.push(sig.add_sort(&format!("{}@{}", frag.formulas[c].0, m.label(c, x)))?);
    }
    let mut function_of_arrow = Vec::new();
    for (i, &(u, x)) in el.arrows.iter().enumerate() {
        let src = el.category.dom(i);
        let tgt = el.category.cod(i);
        let name = format!("{}@{}", cat.arrow_name(u), m.label(cat.dom(u), x));
        function_of_arrow.push(sig.add_function(&name, &[sort_of_element[src]], sort_of_element[tgt])?);
    }
    let elem = |c, x| sort_of_element[el.object_of(c, x).expect("element")];
    let fun = |u, x| function_of_arrow[el.arrow_of(u, x).expect("element arrow")];

    let mut axioms = Vec::new();
    for x in 0..m.carriers[frag.terminal] {
        let s = elem(frag.terminal, x);
        axioms.push(Sequent::new(vec![], Formula::Top, Formula::exists(s, Formula::Top)));
        axioms.push(Sequent::new(vec![s, s], Formula::Top, eq(Term::Var(0), Term::Var(1))));
    }

    for pb in &frag.pullbacks {
        let (d1, d2, apex) = (cat.dom(pb.left), cat.dom(pb.right), pb.apex);
        let mut apex_of = BTreeMap::new();
        for z in 0..m.carriers[apex] {
            apex_of.insert((m.act(pb.left_leg, z), m.act(pb.right_leg, z)), z);
        }
        for a1 in 0..m.carriers[d1] {
            for a2 in 0..m.carriers[d2] {
                if m.act(pb.left, a1) != m.act(pb.right, a2) {
                    continue;
                }
                let z = *apex_of.get(&(a1, a2)).ok_or_else(|| {
                    LogicError::IllTyped(format!(
                        "pullback of `{}` and `{}` is not preserved",
                        cat.arrow_name(pb.left),
                        cat.arrow_name(pb.right)
                    ))
                })?;
                let sz = elem(apex, z);
                let (s1, s2) = (elem(d1, a1), elem(d2, a2));
                let (l1, l2) = (fun(pb.left_leg, z), fun(pb.right_leg, z));
                let (t1, t2) = (fun(pb.left, a1), fun(pb.right, a2));
                axioms.push(Sequent::new(
                    vec![sz],
                    Formula::Top,
                    eq(app(t1, app(l1, Term::Var(0))), app(t2, app(l2, Term::Var(0)))),
                ));
                axioms.push(Sequent::new(
                    vec![sz, sz],
                    Formula::and([
                        eq(app(l1, Term::Var(0)), app(l1, Term::Var(1))),
                        eq(app(l2, Term::Var(0)), app(l2, Term::Var(1))),
                    ]),
                    eq(Term::Var(0), Term::Var(1)),
                ));
                axioms.push(Sequent::new(
                    vec![s1, s2],
                    eq(app(t1, Term::Var(0)), app(t2, Term::Var(1))),
                    Formula::exists(
                        sz,
                        Formula::and([
                            eq(app(l1, Term::Var(2)), Term::Var(0)),
                            eq(app(l2, Term::Var(2)), Term::Var(1)),
                        ]),
                    ),
                ));
            }
        }
    }

    for c in cat.objects() {
        for fam in frag.basis.at(c) {
            if fam.arrows.iter().any(|&a| cat.is_identity(a)) {
                continue;
            }
            for a in 0..m.carriers[c] {
                let mut disjuncts = Vec::new();
                for &t in &fam.arrows {
                    let d = cat.dom(t);
                    for b in (0..m.carriers[d]).filter(|&b| m.act(t, b) == a) {
                        disjuncts.push(Formula::exists(elem(d, b), eq(app(fun(t, b), Term::Var(1)), Term::Var(0))));
                    }
                }
                axioms.push(Sequent::new(vec![elem(c, a)], Formula::Top, Formula::or(disjuncts)));
            }
        }
    }

    let sig = Arc::new(sig);
    let mut keyed: Vec<(String, Sequent)> = axioms.into_iter().map(|s| (s.display(&sig), s)).collect();
    keyed.sort();
    keyed.dedup_by(|a, b| a.0 == b.0);
    let theory = Theory::new(sig, keyed.into_iter().map(|(_, s)| s).collect())?;
    Ok(TmTheory { theory, sort_of_element, function_of_arrow })
}

/// The Σ_M-structure of a set-valued functor on the category of elements:
/// carrier of `φ@a` is the value at `(φ, a)` and `θ@a` acts as the functor.
pub fn sigma_structure(tm: &TmTheory, point: &SetValuedFunctor) -> FinStructure {
    let sig = tm.theory.signature.clone();
    let mut carriers = vec![0; sig.sorts.len()];
    for (e, &s) in tm.sort_of_element.iter().enumerate() {
        carriers[s] = point.carriers[e];
    }
    let mut out = FinStructure::blank(sig, carriers);
    for (a, &f) in tm.function_of_arrow.iter().enumerate() {
        out.functions[f] = point.actions[a].clone();
    }
    for (e, &s) in tm.sort_of_element.iter().enumerate() {
        out.labels[s] = (0..point.carriers[e]).map(|x| point.label(e, x)).collect();
    }
    out
}
