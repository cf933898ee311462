//! Finitary coherent logic over finite structures.
//!
//! Variables are de Bruijn levels: `Var(i)` is position `i` of the context,
//! and `Exists` appends one position. Formulas built through the
//! constructors here are alpha-normal by construction.

mod fragment;
mod parse;
mod semantics;
mod tm;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use fragment::{
    compile_fragment, ArrowDecl, CoverDecl, DesignatedPullback, FragmentArrow, FragmentError, FragmentSite, FragmentSpec,
    ImageFactorization, Interpretation, ARROW_CAP,
};
pub use parse::{
    parse_arrow_formula, parse_formula, parse_formula_in_context, parse_sequent, show_arrow_formula, ParseError,
};
pub use semantics::{
    check_functional, check_hom, check_model, check_sequent, eval_formula, functional_table, hom_naturality,
    FinStructure, HomFailure, HomReport, ModelHom,
};
pub(crate) use semantics::product_tuples;
pub use tm::{emit_tm_axioms, sigma_structure, TmTheory};

pub type Sort = usize;

const RESERVED: [&str; 6] = ["top", "bot", "eq", "and", "or", "exists"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("ill-typed: {0}")]
    IllTyped(String),
    #[error("`{symbol}` expects {expected} arguments, got {found}")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("structure and formula use different signatures")]
    SignatureMismatch,
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: String,
    pub args: Vec<Sort>,
    pub result: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSymbol {
    pub name: String,
    pub args: Vec<Sort>,
}

/// Sorts, function symbols (constants are nullary) and relation symbols.
/// Function and relation names share one namespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub functions: Vec<FunctionSymbol>,
    pub relations: Vec<RelationSymbol>,
}

fn check_name(name: &str) -> Result<(), LogicError> {
    if RESERVED.contains(&name) {
        return Err(LogicError::Reserved(name.to_string()));
    }
    if name.is_empty() || !name.chars().all(parse::is_ident_char) {
        return Err(LogicError::IllTyped(format!("`{name}` is not an identifier")));
    }
    Ok(())
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sort(&mut self, name: &str) -> Result<Sort, LogicError> {
        check_name(name)?;
        if self.sort_by_name(name).is_some() {
            return Err(LogicError::Duplicate(name.to_string()));
        }
        self.sorts.push(name.to_string());
        Ok(self.sorts.len() - 1)
    }

    fn symbol_taken(&self, name: &str) -> bool {
        self.function_by_name(name).is_some() || self.relation_by_name(name).is_some()
    }

    pub fn add_function(&mut self, name: &str, args: &[Sort], result: Sort) -> Result<usize, LogicError> {
        check_name(name)?;
        if self.symbol_taken(name) {
            return Err(LogicError::Duplicate(name.to_string()));
        }
        if args.iter().chain([&result]).any(|&s| s >= self.sorts.len()) {
            return Err(LogicError::UnknownSort(format!("#{}", self.sorts.len())));
        }
        self.functions.push(FunctionSymbol { name: name.to_string(), args: args.to_vec(), result });
        Ok(self.functions.len() - 1)
    }

    pub fn add_relation(&mut self, name: &str, args: &[Sort]) -> Result<usize, LogicError> {
        check_name(name)?;
        if self.symbol_taken(name) {
            return Err(LogicError::Duplicate(name.to_string()));
        }
        if args.iter().any(|&s| s >= self.sorts.len()) {
            return Err(LogicError::UnknownSort(format!("#{}", self.sorts.len())));
        }
        self.relations.push(RelationSymbol { name: name.to_string(), args: args.to_vec() });
        Ok(self.relations.len() - 1)
    }

    pub fn sort_by_name(&self, name: &str) -> Option<Sort> {
        self.sorts.iter().position(|s| s == name)
    }

    pub fn function_by_name(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn relation_by_name(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(usize),
    App(usize, Vec<Term>),
}

impl Term {
    fn reindex(&self, map: &dyn Fn(usize) -> usize) -> Term {
        match self {
            Term::Var(v) => Term::Var(map(*v)),
            Term::App(f, args) => Term::App(*f, args.iter().map(|t| t.reindex(map)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Bottom,
    Eq(Term, Term),
    Rel(usize, Vec<Term>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Sort, Box<Formula>),
}

impl Formula {
    /// Flattened, sorted, deduplicated conjunction.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Formula::And(inner) => v.extend(inner),
                other => v.push(other),
            }
        }
        v.sort();
        v.dedup();
        match v.len() {
            0 => Formula::Top,
            1 => v.pop().unwrap(),
            _ => Formula::And(v),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut v = Vec::new();
        for p in parts {
            match p {
                Formula::Or(inner) => v.extend(inner),
                other => v.push(other),
            }
        }
        v.sort();
        v.dedup();
        match v.len() {
            0 => Formula::Bottom,
            1 => v.pop().unwrap(),
            _ => Formula::Or(v),
        }
    }

    pub fn exists(sort: Sort, body: Formula) -> Formula {
        Formula::Exists(sort, Box::new(body))
    }

    /// `∃ s1 … sn. body`, binders appended in order.
    pub fn exists_many(sorts: &[Sort], body: Formula) -> Formula {
        sorts.iter().rev().fold(body, |acc, &s| Formula::exists(s, acc))
    }

    pub fn normalize(&self) -> Formula {
        match self {
            Formula::And(v) => Formula::and(v.iter().map(Formula::normalize)),
            Formula::Or(v) => Formula::or(v.iter().map(Formula::normalize)),
            Formula::Exists(s, b) => Formula::exists(*s, b.normalize()),
            other => other.clone(),
        }
    }

    /// Move a formula from a context of length `old_len` into one of length
    /// `new_len`: free variables go through `map`, bound ones keep their
    /// offset past the context.
    pub fn reindex(&self, map: &dyn Fn(usize) -> usize, old_len: usize, new_len: usize) -> Formula {
        let m = |v: usize| if v < old_len { map(v) } else { v - old_len + new_len };
        self.reindex_with(&m)
    }

    fn reindex_with(&self, m: &dyn Fn(usize) -> usize) -> Formula {
        match self {
            Formula::Top | Formula::Bottom => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(a.reindex(m), b.reindex(m)),
            Formula::Rel(r, args) => Formula::Rel(*r, args.iter().map(|t| t.reindex(m)).collect()),
            Formula::And(v) => Formula::And(v.iter().map(|f| f.reindex_with(m)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|f| f.reindex_with(m)).collect()),
            Formula::Exists(s, b) => Formula::Exists(*s, Box::new(b.reindex_with(m))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaInContext {
    pub context: Vec<Sort>,
    pub body: Formula,
}

impl FormulaInContext {
    pub fn new(context: Vec<Sort>, body: Formula) -> Self {
        FormulaInContext { context, body: body.normalize() }
    }

    pub fn top(context: Vec<Sort>) -> Self {
        FormulaInContext { context, body: Formula::Top }
    }

    pub fn typecheck(&self, sig: &Signature) -> Result<(), LogicError> {
        typecheck_formula(sig, &mut self.context.clone(), &self.body)
    }

    pub fn display(&self, sig: &Signature) -> String {
        parse::show_in_context(sig, &self.context, &self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub context: Vec<Sort>,
    pub premise: Formula,
    pub conclusion: Formula,
}

impl Sequent {
    pub fn new(context: Vec<Sort>, premise: Formula, conclusion: Formula) -> Self {
        Sequent { context, premise: premise.normalize(), conclusion: conclusion.normalize() }
    }

    pub fn typecheck(&self, sig: &Signature) -> Result<(), LogicError> {
        typecheck_formula(sig, &mut self.context.clone(), &self.premise)?;
        typecheck_formula(sig, &mut self.context.clone(), &self.conclusion)
    }

    pub fn display(&self, sig: &Signature) -> String {
        parse::show_sequent(sig, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub signature: Arc<Signature>,
    pub axioms: Vec<Sequent>,
}

impl Theory {
    pub fn new(signature: Arc<Signature>, axioms: Vec<Sequent>) -> Result<Theory, LogicError> {
        for a in &axioms {
            a.typecheck(&signature)?;
        }
        Ok(Theory { signature, axioms })
    }

    pub fn empty(signature: Arc<Signature>) -> Theory {
        Theory { signature, axioms: Vec::new() }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "#{v}"),
            Term::App(s, args) => {
                write!(f, "f{s}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn term_sort(sig: &Signature, ctx: &[Sort], t: &Term) -> Result<Sort, LogicError> {
    match t {
        Term::Var(v) => ctx
            .get(*v)
            .copied()
            .ok_or_else(|| LogicError::IllTyped(format!("variable #{v} outside a context of length {}", ctx.len()))),
        Term::App(f, args) => {
            let sym = sig
                .functions
                .get(*f)
                .ok_or_else(|| LogicError::UnknownSymbol(format!("function #{f}")))?;
            if sym.args.len() != args.len() {
                return Err(LogicError::Arity { symbol: sym.name.clone(), expected: sym.args.len(), found: args.len() });
            }
            for (i, (a, &want)) in args.iter().zip(&sym.args).enumerate() {
                let got = term_sort(sig, ctx, a)?;
                if got != want {
                    return Err(LogicError::IllTyped(format!(
                        "argument {} of `{}` has sort {} but {} is expected",
                        i + 1,
                        sym.name,
                        sig.sorts[got],
                        sig.sorts[want]
                    )));
                }
            }
            Ok(sym.result)
        }
    }
}

pub(crate) fn typecheck_formula(sig: &Signature, ctx: &mut Vec<Sort>, phi: &Formula) -> Result<(), LogicError> {
    if ctx.iter().any(|&s| s >= sig.sorts.len()) {
        return Err(LogicError::UnknownSort(format!("#{}", sig.sorts.len())));
    }
    match phi {
        Formula::Top | Formula::Bottom => Ok(()),
        Formula::Eq(a, b) => {
            let (sa, sb) = (term_sort(sig, ctx, a)?, term_sort(sig, ctx, b)?);
            if sa != sb {
                return Err(LogicError::IllTyped(format!(
                    "equation between sorts {} and {}",
                    sig.sorts[sa], sig.sorts[sb]
                )));
            }
            Ok(())
        }
        Formula::Rel(r, args) => {
            let sym = sig
                .relations
                .get(*r)
                .ok_or_else(|| LogicError::UnknownSymbol(format!("relation #{r}")))?;
            if sym.args.len() != args.len() {
                return Err(LogicError::Arity { symbol: sym.name.clone(), expected: sym.args.len(), found: args.len() });
            }
            for (a, &want) in args.iter().zip(&sym.args) {
                if term_sort(sig, ctx, a)? != want {
                    return Err(LogicError::IllTyped(format!("argument of `{}` has the wrong sort", sym.name)));
                }
            }
            Ok(())
        }
        Formula::And(v) | Formula::Or(v) => v.iter().try_for_each(|f| typecheck_formula(sig, ctx, f)),
        Formula::Exists(s, b) => {
            if *s >= sig.sorts.len() {
                return Err(LogicError::UnknownSort(format!("#{s}")));
            }
            ctx.push(*s);
            let r = typecheck_formula(sig, ctx, b);
            ctx.pop();
            r
        }
    }
}

/// `and` of `x_i = y_i` over a context repeated twice: the identity graph.
pub fn diagonal_formula(n: usize) -> Formula {
    Formula::and((0..n).map(|i| Formula::Eq(Term::Var(i), Term::Var(n + i))))
}

/// Relational composite of `first: A → B` and `second: B → C`, where `mid`
/// is the body of `B` over its own context: `∃b. first(a,b) ∧ mid(b) ∧ second(b,c)`.
pub fn compose_graphs(
    a_len: usize,
    mid_ctx: &[Sort],
    c_len: usize,
    mid: &Formula,
    first: &Formula,
    second: &Formula,
) -> Formula {
    let b_len = mid_ctx.len();
    let outer = a_len + c_len;
    // inside the binders the layout is a, c, b
    let inner_len = outer + b_len;
    let f1 = first.reindex(&|v| if v < a_len { v } else { outer + (v - a_len) }, a_len + b_len, inner_len);
    let m = mid.reindex(&|v| outer + v, b_len, inner_len);
    let f2 = second.reindex(&|v| if v < b_len { outer + v } else { a_len + (v - b_len) }, b_len + c_len, inner_len);
    Formula::exists_many(mid_ctx, Formula::and([f1, m, f2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        let a = s.add_sort("A").unwrap();
        s.add_function("s", &[a], a).unwrap();
        s.add_relation("P", &[a]).unwrap();
        s
    }

    #[test]
    fn connectives_flatten_and_sort() {
        let p = Formula::Rel(0, vec![Term::Var(0)]);
        let q = Formula::Eq(Term::Var(0), Term::Var(0));
        let a = Formula::and([p.clone(), Formula::and([q.clone(), p.clone()])]);
        let b = Formula::and([q.clone(), p.clone()]);
        assert_eq!(a, b);
        assert_eq!(Formula::and([]), Formula::Top);
        assert_eq!(Formula::or([]), Formula::Bottom);
        assert_eq!(Formula::or([p.clone()]), p);
    }

    #[test]
    fn typecheck_rejects_bad_terms() {
        let s = sig();
        let ok = FormulaInContext::new(vec![0], Formula::Eq(Term::App(0, vec![Term::Var(0)]), Term::Var(0)));
        assert!(ok.typecheck(&s).is_ok());
        let free = FormulaInContext::new(vec![0], Formula::Eq(Term::Var(1), Term::Var(0)));
        assert!(free.typecheck(&s).is_err());
        let arity = FormulaInContext::new(vec![0], Formula::Rel(0, vec![]));
        assert!(matches!(arity.typecheck(&s), Err(LogicError::Arity { .. })));
    }

    #[test]
    fn reserved_and_duplicate_names() {
        let mut s = sig();
        assert!(matches!(s.add_relation("and", &[]), Err(LogicError::Reserved(_))));
        assert!(matches!(s.add_relation("s", &[]), Err(LogicError::Duplicate(_))));
    }

    #[test]
    fn reindex_shifts_bound_variables() {
        // ∃y. x = y in context [x], moved to context [z, x]
        let phi = Formula::exists(0, Formula::Eq(Term::Var(0), Term::Var(1)));
        let moved = phi.reindex(&|v| v + 1, 1, 2);
        assert_eq!(moved, Formula::exists(0, Formula::Eq(Term::Var(1), Term::Var(2))));
    }
}
