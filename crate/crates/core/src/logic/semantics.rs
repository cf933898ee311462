use std::collections::BTreeSet;
use std::sync::Arc;

use super::{typecheck_formula, Formula, FormulaInContext, LogicError, Sequent, Signature, Sort, Term, Theory};

/// A finite interpretation of a signature. Carriers are `0..carriers[s]`;
/// `functions[f]` is indexed by the argument tuple in mixed radix, first
/// argument most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinStructure {
    pub signature: Arc<Signature>,
    pub carriers: Vec<usize>,
    pub functions: Vec<Vec<usize>>,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
    pub labels: Vec<Vec<String>>,
}

impl FinStructure {
    /// Carriers of the given sizes, all relations empty and every function
    /// constantly 0. Labels are the element indices.
    pub fn blank(signature: Arc<Signature>, carriers: Vec<usize>) -> FinStructure {
        let functions = signature
            .functions
            .iter()
            .map(|f| {
                let n: usize = f.args.iter().map(|&s| carriers[s]).product();
                vec![0; n]
            })
            .collect();
        let relations = vec![BTreeSet::new(); signature.relations.len()];
        let labels = carriers.iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
        FinStructure { signature, carriers, functions, relations, labels }
    }

    pub fn label(&self, s: Sort, x: usize) -> &str {
        &self.labels[s][x]
    }

    pub fn element_by_label(&self, s: Sort, label: &str) -> Option<usize> {
        self.labels[s].iter().position(|l| l == label)
    }

    pub fn tuple_label(&self, sorts: &[Sort], t: &[usize]) -> String {
        if t.is_empty() {
            return "*".to_string();
        }
        sorts.iter().zip(t).map(|(&s, &x)| self.label(s, x)).collect::<Vec<_>>().join(".")
    }

    pub(crate) fn table_index(&self, f: usize, args: &[usize]) -> usize {
        let sorts = &self.signature.functions[f].args;
        let mut idx = 0;
        for (&s, &a) in sorts.iter().zip(args) {
            idx = idx * self.carriers[s] + a;
        }
        idx
    }

    pub fn apply(&self, f: usize, args: &[usize]) -> usize {
        self.functions[f][self.table_index(f, args)]
    }

    pub fn set_function(&mut self, f: usize, args: &[usize], value: usize) {
        let i = self.table_index(f, args);
        self.functions[f][i] = value;
    }

    pub fn validate(&self) -> Vec<String> {
        let sig = &*self.signature;
        let mut out = Vec::new();
        if self.carriers.len() != sig.sorts.len() || self.labels.len() != sig.sorts.len() {
            out.push("one carrier and one label list per sort expected".to_string());
            return out;
        }
        for (s, ls) in self.labels.iter().enumerate() {
            if ls.len() != self.carriers[s] {
                out.push(format!("sort {}: {} labels for {} elements", sig.sorts[s], ls.len(), self.carriers[s]));
            }
            let distinct: BTreeSet<&String> = ls.iter().collect();
            if distinct.len() != ls.len() {
                out.push(format!("sort {}: repeated labels", sig.sorts[s]));
            }
        }
        if self.functions.len() != sig.functions.len() {
            out.push("one table per function symbol expected".to_string());
            return out;
        }
        for (f, sym) in sig.functions.iter().enumerate() {
            let n: usize = sym.args.iter().map(|&s| self.carriers[s]).product();
            if self.functions[f].len() != n {
                out.push(format!("function {}: table has {} entries, {} expected", sym.name, self.functions[f].len(), n));
            } else if self.functions[f].iter().any(|&v| v >= self.carriers[sym.result]) {
                out.push(format!("function {}: value outside the carrier", sym.name));
            }
        }
        if self.relations.len() != sig.relations.len() {
            out.push("one table per relation symbol expected".to_string());
            return out;
        }
        for (r, sym) in sig.relations.iter().enumerate() {
            for t in &self.relations[r] {
                if t.len() != sym.args.len() || t.iter().zip(&sym.args).any(|(&x, &s)| x >= self.carriers[s]) {
                    out.push(format!("relation {}: ill-typed tuple {:?}", sym.name, t));
                }
            }
        }
        out
    }
}

fn eval_term(m: &FinStructure, env: &[usize], t: &Term) -> usize {
    match t {
        Term::Var(v) => env[*v],
        Term::App(f, args) => {
            let vals: Vec<usize> = args.iter().map(|a| eval_term(m, env, a)).collect();
            m.apply(*f, &vals)
        }
    }
}

fn satisfies(m: &FinStructure, env: &mut Vec<usize>, phi: &Formula) -> bool {
    match phi {
        Formula::Top => true,
        Formula::Bottom => false,
        Formula::Eq(a, b) => eval_term(m, env, a) == eval_term(m, env, b),
        Formula::Rel(r, args) => {
            let t: Vec<usize> = args.iter().map(|a| eval_term(m, env, a)).collect();
            m.relations[*r].contains(&t)
        }
        Formula::And(v) => v.iter().all(|f| satisfies(m, env, f)),
        Formula::Or(v) => v.iter().any(|f| satisfies(m, env, f)),
        Formula::Exists(s, b) => {
            for x in 0..m.carriers[*s] {
                env.push(x);
                let ok = satisfies(m, env, b);
                env.pop();
                if ok {
                    return true;
                }
            }
            false
        }
    }
}

/// All tuples of the product of the given carriers, lexicographically.
pub(crate) fn product_tuples(m: &FinStructure, ctx: &[Sort]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &s in ctx {
        let mut next = Vec::with_capacity(out.len() * m.carriers[s]);
        for t in &out {
            for x in 0..m.carriers[s] {
                let mut u = t.clone();
                u.push(x);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn check_signature(m: &FinStructure, sig: Option<&Signature>) -> Result<(), LogicError> {
    match sig {
        Some(s) if *s != *m.signature => Err(LogicError::SignatureMismatch),
        _ => Ok(()),
    }
}

pub(crate) fn eval_body(m: &FinStructure, ctx: &[Sort], body: &Formula) -> Vec<Vec<usize>> {
    product_tuples(m, ctx)
        .into_iter()
        .filter(|t| satisfies(m, &mut t.clone(), body))
        .collect()
}

/// The tuples of the context product satisfying `phi`, in lexicographic
/// order.
pub fn eval_formula(m: &FinStructure, phi: &FormulaInContext) -> Result<Vec<Vec<usize>>, LogicError> {
    phi.typecheck(&m.signature)?;
    Ok(eval_body(m, &phi.context, &phi.body))
}

pub fn check_sequent(m: &FinStructure, s: &Sequent) -> Result<bool, LogicError> {
    s.typecheck(&m.signature)?;
    Ok(product_tuples(m, &s.context).into_iter().all(|t| {
        let mut env = t;
        !satisfies(m, &mut env, &s.premise) || satisfies(m, &mut env, &s.conclusion)
    }))
}

/// Indices of the axioms of `t` that fail in `m`.
pub fn check_model(m: &FinStructure, t: &Theory) -> Result<Vec<usize>, LogicError> {
    check_signature(m, Some(&t.signature))?;
    let mut failing = Vec::new();
    for (i, a) in t.axioms.iter().enumerate() {
        if !check_sequent(m, a)? {
            failing.push(i);
        }
    }
    Ok(failing)
}

/// For `theta` over the concatenated context of `dom` and `cod`: the index in
/// `eval(cod)` of the unique partner of each element of `eval(dom)`, or
/// `None` when the graph is not a total function.
pub fn functional_table(
    m: &FinStructure,
    dom: &FormulaInContext,
    cod: &FormulaInContext,
    theta: &Formula,
) -> Result<Option<Vec<usize>>, LogicError> {
    let mut ctx: Vec<Sort> = dom.context.iter().chain(&cod.context).copied().collect();
    typecheck_formula(&m.signature, &mut ctx, theta)?;
    let ds = eval_formula(m, dom)?;
    let cs = eval_formula(m, cod)?;
    Ok(table_from(m, &ds, &cs, theta))
}

pub(crate) fn table_from(m: &FinStructure, ds: &[Vec<usize>], cs: &[Vec<usize>], theta: &Formula) -> Option<Vec<usize>> {
    let mut table = Vec::with_capacity(ds.len());
    for a in ds {
        let mut hit = None;
        for (j, b) in cs.iter().enumerate() {
            let mut env: Vec<usize> = a.iter().chain(b).copied().collect();
            if satisfies(m, &mut env, theta) {
                if hit.is_some() {
                    return None;
                }
                hit = Some(j);
            }
        }
        table.push(hit?);
    }
    Some(table)
}

pub fn check_functional(
    m: &FinStructure,
    dom: &FormulaInContext,
    cod: &FormulaInContext,
    theta: &Formula,
) -> Result<bool, LogicError> {
    Ok(functional_table(m, dom, cod, theta)?.is_some())
}

/// Per-sort maps between carriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelHom {
    pub maps: Vec<Vec<usize>>,
}

impl ModelHom {
    pub fn identity(m: &FinStructure) -> ModelHom {
        ModelHom { maps: m.carriers.iter().map(|&n| (0..n).collect()).collect() }
    }

    pub fn apply_tuple(&self, ctx: &[Sort], t: &[usize]) -> Vec<usize> {
        ctx.iter().zip(t).map(|(&s, &x)| self.maps[s][x]).collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ModelHom) -> ModelHom {
        ModelHom {
            maps: self.maps.iter().zip(&other.maps).map(|(f, g)| f.iter().map(|&x| g[x]).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomFailure {
    Shape(String),
    Function { symbol: String, args: Vec<usize> },
    Relation { symbol: String, tuple: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HomReport {
    pub failures: Vec<HomFailure>,
}

impl HomReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Whether `h: n → m` commutes with every function table and sends
/// relation tuples to relation tuples.
pub fn check_hom(n: &FinStructure, m: &FinStructure, h: &ModelHom) -> Result<HomReport, LogicError> {
    if n.signature != m.signature {
        return Err(LogicError::SignatureMismatch);
    }
    let sig = &*n.signature;
    let mut rep = HomReport::default();
    if h.maps.len() != sig.sorts.len() {
        rep.failures.push(HomFailure::Shape("one map per sort expected".into()));
        return Ok(rep);
    }
    for s in 0..sig.sorts.len() {
        if h.maps[s].len() != n.carriers[s] || h.maps[s].iter().any(|&y| y >= m.carriers[s]) {
            rep.failures.push(HomFailure::Shape(format!("map on sort {} is not a function", sig.sorts[s])));
        }
    }
    if !rep.failures.is_empty() {
        return Ok(rep);
    }
    for (f, sym) in sig.functions.iter().enumerate() {
        for args in product_tuples(n, &sym.args) {
            let lhs = h.maps[sym.result][n.apply(f, &args)];
            let rhs = m.apply(f, &h.apply_tuple(&sym.args, &args));
            if lhs != rhs {
                rep.failures.push(HomFailure::Function { symbol: sym.name.clone(), args });
            }
        }
    }
    for (r, sym) in sig.relations.iter().enumerate() {
        for t in &n.relations[r] {
            if !m.relations[r].contains(&h.apply_tuple(&sym.args, t)) {
                rep.failures.push(HomFailure::Relation { symbol: sym.name.clone(), tuple: t.clone() });
            }
        }
    }
    Ok(rep)
}

/// For each formula, whether `h` maps its extension in `n` into its
/// extension in `m`.
pub fn hom_naturality(
    n: &FinStructure,
    m: &FinStructure,
    h: &ModelHom,
    formulas: &[FormulaInContext],
) -> Result<Vec<bool>, LogicError> {
    let mut out = Vec::new();
    for phi in formulas {
        let ext_m: BTreeSet<Vec<usize>> = eval_formula(m, phi)?.into_iter().collect();
        let ok = eval_formula(n, phi)?.iter().all(|t| ext_m.contains(&h.apply_tuple(&phi.context, t)));
        out.push(ok);
    }
    Ok(out)
}
