use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::semantics::{eval_body, table_from};
use super::{
    check_model, compose_graphs, diagonal_formula, typecheck_formula, FinStructure, Formula, FormulaInContext,
    LogicError, Theory,
};
use crate::coverage::{
    check_basis, close_under_multicomposition, sieve_closure, CoverageBasis, CoverageError, Presieve,
};
use crate::fincat::{
    category_of_elements, pullback, validate_category, validate_set_functor, Arr, CategoryBuilder, Elements,
    FinCategory, Obj, SetValuedFunctor,
};

/// Bound on the number of arrows produced by closing under composition.
pub const ARROW_CAP: usize = 512;

const FAMILY_CAP: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowDecl {
    pub name: String,
    pub dom: String,
    pub cod: String,
    /// Over the domain context followed by the codomain context.
    pub theta: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverDecl {
    pub codomain: String,
    pub arrows: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FragmentSpec {
    pub formulas: Vec<(String, FormulaInContext)>,
    pub arrows: Vec<ArrowDecl>,
    pub covers: Vec<CoverDecl>,
    /// Extra models used, together with the main one, to decide when two
    /// arrow formulas name the same arrow.
    pub witnesses: Vec<FinStructure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragmentError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("{structure} is not a model: axiom `{axiom}` fails")]
    NotAModel { structure: String, axiom: String },
    #[error("the fragment has no formula `[] top`")]
    MissingTerminal,
    #[error("unknown formula `{0}`")]
    UnknownFormula(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("arrow `{arrow}` is not functional in {structure}")]
    NotFunctional { arrow: String, structure: String },
    #[error("arrow `{arrow}` is interpreted inconsistently in {structure}")]
    Inconsistent { arrow: String, structure: String },
    #[error("more than {limit} {what}")]
    TooLarge { what: String, limit: usize },
    #[error("cover at `{codomain}`: {message}")]
    CoverShape { codomain: String, message: String },
    #[error("cover {cover} is not jointly surjective in the model")]
    NotSurjective { cover: String },
    #[error("no preserved pullback of `{left}` and `{right}` in the fragment")]
    ClosureViolation { left: String, right: String },
    #[error("compiled category is invalid: {0}")]
    Category(String),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentArrow {
    pub dom: Obj,
    pub cod: Obj,
    pub theta: Formula,
    /// Canonical name first, then every alias that denotes the same arrow.
    pub names: Vec<String>,
}

/// A pullback square of the compiled category, preserved by the model and
/// every witness. `left <= right` as arrow indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignatedPullback {
    pub left: Arr,
    pub right: Arr,
    pub apex: Obj,
    pub left_leg: Arr,
    pub right_leg: Arr,
}

impl DesignatedPullback {
    /// Whether neither leg is invertible.
    pub fn is_proper(&self, cat: &FinCategory) -> bool {
        !cat.is_iso(self.left_leg) && !cat.is_iso(self.right_leg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFactorization {
    pub object: Obj,
    pub epi: Arr,
    pub mono: Arr,
}

/// The interpretation functor of a structure, with the tuples behind each
/// element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    pub functor: SetValuedFunctor,
    pub tuples: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone)]
pub struct FragmentSite {
    pub theory: Theory,
    pub model: FinStructure,
    pub witnesses: Vec<FinStructure>,
    /// Indexed by object of `category`.
    pub formulas: Vec<(String, FormulaInContext)>,
    /// Indexed by arrow of `category`.
    pub arrows: Vec<FragmentArrow>,
    pub category: Arc<FinCategory>,
    pub terminal: Obj,
    pub declared_covers: Vec<Presieve>,
    pub basis: CoverageBasis,
    pub interp: Interpretation,
    pub elements: Elements,
    pub pullbacks: Vec<DesignatedPullback>,
    /// Whether every declared cover member has an image factorization.
    pub cover_closed: bool,
    pub notes: Vec<String>,
    /// Per structure (model first), the table of each arrow.
    tables: Vec<Vec<Vec<usize>>>,
}

struct Work<'a> {
    structs: Vec<&'a FinStructure>,
    formulas: &'a [(String, FormulaInContext)],
    /// ext[s][phi]
    ext: Vec<Vec<Vec<Vec<usize>>>>,
    arrows: Vec<(usize, usize, Formula, Vec<String>, Vec<Vec<usize>>)>,
    index: BTreeMap<(usize, usize, Vec<Vec<usize>>), usize>,
}

fn struct_name(i: usize) -> String {
    if i == 0 {
        "the model".to_string()
    } else {
        format!("witness {i}")
    }
}

impl<'a> Work<'a> {
    fn tables_for(&self, name: &str, dom: usize, cod: usize, theta: &Formula) -> Result<Vec<Vec<usize>>, FragmentError> {
        let mut out = Vec::new();
        for (i, s) in self.structs.iter().enumerate() {
            match table_from(s, &self.ext[i][dom], &self.ext[i][cod], theta) {
                Some(t) => out.push(t),
                None => return Err(FragmentError::NotFunctional { arrow: name.to_string(), structure: struct_name(i) }),
            }
        }
        Ok(out)
    }

    fn add(&mut self, name: String, dom: usize, cod: usize, theta: Formula) -> Result<usize, FragmentError> {
        let tables = self.tables_for(&name, dom, cod, &theta)?;
        let key = (dom, cod, tables.clone());
        if let Some(&i) = self.index.get(&key) {
            self.arrows[i].3.push(name);
            return Ok(i);
        }
        self.arrows.push((dom, cod, theta, vec![name], tables));
        self.index.insert(key, self.arrows.len() - 1);
        Ok(self.arrows.len() - 1)
    }

    fn composite(&mut self, g: usize, f: usize) -> Result<(), FragmentError> {
        let (fd, fc) = (self.arrows[f].0, self.arrows[f].1);
        let gc = self.arrows[g].1;
        let tables: Vec<Vec<usize>> = (0..self.structs.len())
            .map(|s| self.arrows[f].4[s].iter().map(|&x| self.arrows[g].4[s][x]).collect())
            .collect();
        if self.index.contains_key(&(fd, gc, tables.clone())) {
            return Ok(());
        }
        if self.arrows.len() >= ARROW_CAP {
            return Err(FragmentError::TooLarge { what: "arrows after closing under composition".into(), limit: ARROW_CAP });
        }
        let mid = &self.formulas[fc].1;
        let theta = compose_graphs(
            self.formulas[fd].1.context.len(),
            &mid.context,
            self.formulas[gc].1.context.len(),
            &mid.body,
            &self.arrows[f].2,
            &self.arrows[g].2,
        );
        let name = format!("{}∘{}", self.arrows[g].3[0], self.arrows[f].3[0]);
        // the composite formula must denote the composite of the tables
        let direct = self.tables_for(&name, fd, gc, &theta)?;
        if direct != tables {
            return Err(FragmentError::Inconsistent { arrow: name, structure: "the model or a witness".into() });
        }
        self.add(name, fd, gc, theta)?;
        Ok(())
    }
}

fn check_structure(theory: &Theory, s: &FinStructure, label: &str) -> Result<(), FragmentError> {
    if *s.signature != *theory.signature {
        return Err(LogicError::SignatureMismatch.into());
    }
    let problems = s.validate();
    if let Some(p) = problems.first() {
        return Err(LogicError::InvalidStructure(format!("{label}: {p}")).into());
    }
    if let Some(&i) = check_model(s, theory)?.first() {
        return Err(FragmentError::NotAModel {
            structure: label.to_string(),
            axiom: theory.axioms[i].display(&theory.signature),
        });
    }
    Ok(())
}

fn is_surjective_family(tables: &[&Vec<usize>], size: usize) -> bool {
    let mut hit = vec![false; size];
    for t in tables {
        for &y in t.iter() {
            hit[y] = true;
        }
    }
    hit.into_iter().all(|h| h)
}

/// Compile a list of formulas and arrow formulas into a finite category with
/// a coverage, interpreted in `model`.
///
/// Arrows are identified when their graphs agree in the model and in every
/// witness. The category is closed under composition, the basis contains the
/// declared covers and identities and is then closed under pullback
/// refinement and multicomposition.
pub fn compile_fragment(theory: &Theory, model: &FinStructure, spec: &FragmentSpec) -> Result<FragmentSite, FragmentError> {
    check_structure(theory, model, "the model")?;
    for (i, w) in spec.witnesses.iter().enumerate() {
        check_structure(theory, w, &struct_name(i + 1))?;
    }
    let sig = &*theory.signature;
    let mut seen = BTreeSet::new();
    for (name, phi) in &spec.formulas {
        phi.typecheck(sig)?;
        if !seen.insert(name.clone()) {
            return Err(FragmentError::Duplicate(name.clone()));
        }
    }
    let wterm = spec
        .formulas
        .iter()
        .position(|(_, phi)| phi.context.is_empty() && phi.body == Formula::Top)
        .ok_or(FragmentError::MissingTerminal)?;
    let fidx = |n: &str| {
        spec.formulas
            .iter()
            .position(|(m, _)| m == n)
            .ok_or_else(|| FragmentError::UnknownFormula(n.to_string()))
    };
    let structs: Vec<&FinStructure> = std::iter::once(model).chain(&spec.witnesses).collect();
    let ext = structs
        .iter()
        .map(|s| spec.formulas.iter().map(|(_, phi)| eval_body(s, &phi.context, &phi.body)).collect())
        .collect();
    let mut w = Work { structs, formulas: &spec.formulas, ext, arrows: Vec::new(), index: BTreeMap::new() };
    for (i, (name, phi)) in spec.formulas.iter().enumerate() {
        w.add(format!("1_{name}"), i, i, diagonal_formula(phi.context.len()))?;
    }
    for (i, (name, _)) in spec.formulas.iter().enumerate() {
        if i != wterm {
            w.add(format!("!_{name}"), i, wterm, Formula::Top)?;
        }
    }
    for d in &spec.arrows {
        if !seen.insert(d.name.clone()) {
            return Err(FragmentError::Duplicate(d.name.clone()));
        }
        let (dom, cod) = (fidx(&d.dom)?, fidx(&d.cod)?);
        let mut ctx: Vec<_> =
            spec.formulas[dom].1.context.iter().chain(&spec.formulas[cod].1.context).copied().collect();
        typecheck_formula(sig, &mut ctx, &d.theta)?;
        w.add(d.name.clone(), dom, cod, d.theta.normalize())?;
    }
    let mut done = 0;
    while done < w.arrows.len() {
        let n = w.arrows.len();
        for g in 0..n {
            for f in 0..n {
                if (g < done && f < done) || w.arrows[f].1 != w.arrows[g].0 {
                    continue;
                }
                w.composite(g, f)?;
            }
        }
        done = n;
    }

    // the finite category, with objects and arrows in name order
    let mut b = CategoryBuilder::new().raw();
    let mut names = BTreeSet::new();
    for (i, (name, _)) in spec.formulas.iter().enumerate() {
        let id = w.index[&(i, i, w.arrows.iter().find(|a| a.0 == i && a.1 == i).unwrap().4.clone())];
        debug_assert_eq!(w.arrows[id].3[0], format!("1_{name}"));
        b.object_with_identity(name, &w.arrows[id].3[0]);
    }
    for a in &w.arrows {
        for n in &a.3 {
            if !names.insert(n.clone()) {
                return Err(FragmentError::Duplicate(n.clone()));
            }
        }
        if !a.3[0].starts_with("1_") || a.0 != a.1 || !spec.formulas[a.0].0.eq(&a.3[0][2..]) {
            b.arrow(&a.3[0], &spec.formulas[a.0].0, &spec.formulas[a.1].0);
        }
    }
    for g in 0..w.arrows.len() {
        for f in 0..w.arrows.len() {
            if w.arrows[f].1 != w.arrows[g].0 {
                continue;
            }
            let tables: Vec<Vec<usize>> = (0..w.structs.len())
                .map(|s| w.arrows[f].4[s].iter().map(|&x| w.arrows[g].4[s][x]).collect())
                .collect();
            let h = w.index[&(w.arrows[f].0, w.arrows[g].1, tables)];
            b.compose_entry(&w.arrows[g].3[0], &w.arrows[f].3[0], &w.arrows[h].3[0]);
        }
    }
    let cat = b.build().map_err(|e| FragmentError::Category(e.to_string()))?;
    let report = validate_category(&cat);
    if !report.is_valid() {
        return Err(FragmentError::Category(format!("{:?}", report.violations.first())));
    }
    let cat = Arc::new(cat);
    let obj_of: Vec<Obj> = spec.formulas.iter().map(|(n, _)| cat.object_by_name(n).unwrap()).collect();
    let arr_of: Vec<Arr> = w.arrows.iter().map(|a| cat.arrow_by_name(&a.3[0]).unwrap()).collect();
    let mut formulas = vec![(String::new(), FormulaInContext::top(vec![])); cat.num_objects()];
    for (i, f) in spec.formulas.iter().enumerate() {
        formulas[obj_of[i]] = f.clone();
    }
    let mut arrows = vec![None; cat.num_arrows()];
    let nstructs = w.structs.len();
    let mut tables = vec![vec![Vec::new(); cat.num_arrows()]; nstructs];
    for (i, a) in w.arrows.iter().enumerate() {
        arrows[arr_of[i]] =
            Some(FragmentArrow { dom: obj_of[a.0], cod: obj_of[a.1], theta: a.2.clone(), names: a.3.clone() });
        for s in 0..nstructs {
            tables[s][arr_of[i]] = a.4[s].clone();
        }
    }
    let arrows: Vec<FragmentArrow> = arrows.into_iter().map(Option::unwrap).collect();
    let mut ext_c = vec![Vec::new(); cat.num_objects()];
    for (i, e) in w.ext[0].iter().enumerate() {
        ext_c[obj_of[i]] = e.clone();
    }
    let interp = build_interpretation(model, &cat, &formulas, ext_c, &tables[0]);
    if let Some(p) = validate_set_functor(&interp.functor).first() {
        return Err(FragmentError::Category(p.clone()));
    }
    let elements = category_of_elements(&interp.functor);
    let sizes: Vec<Vec<usize>> = (0..nstructs).map(|s| w.ext[s].iter().map(Vec::len).collect()).collect();
    let sizes: Vec<Vec<usize>> = sizes
        .into_iter()
        .map(|v| {
            let mut out = vec![0; v.len()];
            for (i, n) in v.into_iter().enumerate() {
                out[obj_of[i]] = n;
            }
            out
        })
        .collect();

    let mut notes = Vec::new();
    let pullbacks = designated_pullbacks(&cat, &tables, &sizes, &mut notes);
    let mut site = FragmentSite {
        theory: theory.clone(),
        model: model.clone(),
        witnesses: spec.witnesses.clone(),
        formulas,
        arrows,
        terminal: obj_of[wterm],
        declared_covers: Vec::new(),
        basis: CoverageBasis::trivial(&cat),
        interp,
        elements,
        pullbacks,
        cover_closed: true,
        notes,
        tables,
        category: cat.clone(),
    };

    for d in &spec.covers {
        let c = obj_of[fidx(&d.codomain)?];
        let mut members = Vec::new();
        for n in &d.arrows {
            let a = site.arrow_by_name(n).ok_or_else(|| FragmentError::UnknownArrow(n.clone()))?;
            if cat.cod(a) != c {
                return Err(FragmentError::CoverShape {
                    codomain: d.codomain.clone(),
                    message: format!("`{n}` has a different codomain"),
                });
            }
            members.push(a);
        }
        let p = Presieve::new(&cat, c, members)?;
        let label = format!("{{{}}} at {}", d.arrows.join(", "), d.codomain);
        let ts: Vec<&Vec<usize>> = p.arrows.iter().map(|&a| &site.tables[0][a]).collect();
        if !is_surjective_family(&ts, site.interp.functor.carriers[c]) {
            return Err(FragmentError::NotSurjective { cover: label });
        }
        for (i, &x) in p.arrows.iter().enumerate() {
            for &y in &p.arrows[i..] {
                if !cat.is_identity(x) && !cat.is_identity(y) && site.designated_pullback(x, y).is_none() {
                    return Err(FragmentError::ClosureViolation {
                        left: cat.arrow_name(x).to_string(),
                        right: cat.arrow_name(y).to_string(),
                    });
                }
            }
            if !cat.is_identity(x) && site.image_factorization(x).is_none() {
                site.cover_closed = false;
                site.notes.push(format!("no image formula for cover member `{}`", cat.arrow_name(x)));
            }
        }
        site.declared_covers.push(p);
    }
    site.basis = build_basis(&site)?;
    Ok(site)
}

fn build_interpretation(
    s: &FinStructure,
    cat: &Arc<FinCategory>,
    formulas: &[(String, FormulaInContext)],
    tuples: Vec<Vec<Vec<usize>>>,
    tables: &[Vec<usize>],
) -> Interpretation {
    let carriers = tuples.iter().map(Vec::len).collect();
    let labels = tuples
        .iter()
        .enumerate()
        .map(|(o, ts)| ts.iter().map(|t| s.tuple_label(&formulas[o].1.context, t)).collect())
        .collect();
    let functor = SetValuedFunctor::new(cat.clone(), carriers, tables.to_vec()).with_labels(labels);
    Interpretation { functor, tuples }
}

fn designated_pullbacks(
    cat: &FinCategory,
    tables: &[Vec<Vec<usize>>],
    sizes: &[Vec<usize>],
    notes: &mut Vec<String>,
) -> Vec<DesignatedPullback> {
    let mut out = Vec::new();
    for f in cat.arrows() {
        if cat.is_identity(f) {
            continue;
        }
        for g in f..cat.num_arrows() {
            if cat.is_identity(g) || cat.cod(f) != cat.cod(g) {
                continue;
            }
            let Some((apex, lf, lg)) = pullback(cat, f, g) else { continue };
            let preserved = tables.iter().zip(sizes).all(|(t, n)| {
                let expected: BTreeSet<(usize, usize)> = (0..n[cat.dom(f)])
                    .flat_map(|x| (0..n[cat.dom(g)]).map(move |y| (x, y)))
                    .filter(|&(x, y)| t[f][x] == t[g][y])
                    .collect();
                let got: Vec<(usize, usize)> = (0..n[apex]).map(|z| (t[lf][z], t[lg][z])).collect();
                let distinct: BTreeSet<(usize, usize)> = got.iter().copied().collect();
                distinct.len() == got.len() && distinct == expected
            });
            if preserved {
                out.push(DesignatedPullback { left: f, right: g, apex, left_leg: lf, right_leg: lg });
            } else {
                notes.push(format!(
                    "pullback of `{}` and `{}` is not preserved by the interpretation",
                    cat.arrow_name(f),
                    cat.arrow_name(g)
                ));
            }
        }
    }
    out
}

fn build_basis(site: &FragmentSite) -> Result<CoverageBasis, FragmentError> {
    let cat = &*site.category;
    let mut b = CoverageBasis::trivial(cat);
    for p in &site.declared_covers {
        b.insert(p.clone());
    }
    loop {
        let before = b.num_families();
        for c in cat.objects() {
            for fam in b.at(c).to_vec() {
                let sieve = sieve_closure(cat, &fam);
                for f in cat.arrows_into(c) {
                    if cat.is_identity(f) {
                        continue;
                    }
                    let d = cat.dom(f);
                    let refined = b.at(d).iter().any(|q| q.arrows.iter().all(|&x| sieve.contains(cat.compose(f, x))));
                    if refined {
                        continue;
                    }
                    let mut members = Vec::new();
                    for &p in &fam.arrows {
                        let pb = site.designated_pullback(f, p).ok_or_else(|| FragmentError::ClosureViolation {
                            left: cat.arrow_name(f).to_string(),
                            right: cat.arrow_name(p).to_string(),
                        })?;
                        members.push(if pb.left == f { pb.left_leg } else { pb.right_leg });
                    }
                    b.insert(Presieve::new(cat, d, members)?);
                }
            }
        }
        b = close_under_multicomposition(cat, &b, FAMILY_CAP)?;
        if b.num_families() == before {
            break;
        }
    }
    let report = check_basis(cat, &b);
    if let Some(v) = report.violations.first() {
        return Err(FragmentError::Coverage(CoverageError::Other(v.describe(cat))));
    }
    for c in cat.objects() {
        for p in b.at(c) {
            let ts: Vec<&Vec<usize>> = p.arrows.iter().map(|&a| &site.tables[0][a]).collect();
            if !is_surjective_family(&ts, site.interp.functor.carriers[c]) {
                return Err(FragmentError::NotSurjective { cover: p.names(cat).join(", ") });
            }
        }
    }
    Ok(b)
}

impl FragmentSite {
    pub fn object_by_name(&self, name: &str) -> Option<Obj> {
        self.category.object_by_name(name)
    }

    /// Resolves canonical names and aliases.
    pub fn arrow_by_name(&self, name: &str) -> Option<Arr> {
        self.arrows.iter().position(|a| a.names.iter().any(|n| n == name))
    }

    pub fn formula(&self, o: Obj) -> &FormulaInContext {
        &self.formulas[o].1
    }

    /// Number of structures (model and witnesses) used to identify arrows.
    pub fn num_structures(&self) -> usize {
        self.tables.len()
    }

    /// The graph of arrow `a` in the model, as an index table.
    pub fn table(&self, a: Arr) -> &[usize] {
        &self.tables[0][a]
    }

    pub fn designated_pullback(&self, f: Arr, g: Arr) -> Option<&DesignatedPullback> {
        let (l, r) = if f <= g { (f, g) } else { (g, f) };
        self.pullbacks.iter().find(|p| p.left == l && p.right == r)
    }

    /// The compiled arrow `dom → cod` whose graph is `theta` in every
    /// structure, if any.
    pub fn arrow_for_graph(&self, dom: Obj, cod: Obj, theta: &Formula) -> Option<Arr> {
        let structs: Vec<&FinStructure> = std::iter::once(&self.model).chain(&self.witnesses).collect();
        let mut want = Vec::new();
        for s in structs {
            let (d, c) = (self.formula(dom), self.formula(cod));
            let ds = eval_body(s, &d.context, &d.body);
            let cs = eval_body(s, &c.context, &c.body);
            want.push(table_from(s, &ds, &cs, theta)?);
        }
        self.category
            .hom(dom, cod)
            .iter()
            .copied()
            .find(|&a| (0..self.tables.len()).all(|s| self.tables[s][a] == want[s]))
    }

    /// `θ = m ∘ e` with `e` surjective and `m` injective in every structure.
    pub fn image_factorization(&self, theta: Arr) -> Option<ImageFactorization> {
        let cat = &*self.category;
        let (d, c) = (cat.dom(theta), cat.cod(theta));
        for o in cat.objects() {
            for &e in cat.hom(d, o) {
                for &m in cat.hom(o, c) {
                    if cat.compose(m, e) != theta {
                        continue;
                    }
                    let ok = self.tables.iter().all(|t| {
                        let n = t[cat.identity(o)].len();
                        let onto: BTreeSet<usize> = t[e].iter().copied().collect();
                        let im: BTreeSet<usize> = t[m].iter().copied().collect();
                        onto.len() == n && im.len() == n
                    });
                    if ok {
                        return Some(ImageFactorization { object: o, epi: e, mono: m });
                    }
                }
            }
        }
        None
    }

    /// The interpretation functor of another structure over the same
    /// signature, checked to be functorial on the compiled category.
    pub fn interpret(&self, s: &FinStructure) -> Result<Interpretation, FragmentError> {
        if *s.signature != *self.theory.signature {
            return Err(LogicError::SignatureMismatch.into());
        }
        if let Some(p) = s.validate().first() {
            return Err(LogicError::InvalidStructure(p.clone()).into());
        }
        let cat = &self.category;
        let tuples: Vec<Vec<Vec<usize>>> =
            self.formulas.iter().map(|(_, phi)| eval_body(s, &phi.context, &phi.body)).collect();
        let mut tables = Vec::with_capacity(cat.num_arrows());
        for (a, fa) in self.arrows.iter().enumerate() {
            let t = table_from(s, &tuples[fa.dom], &tuples[fa.cod], &fa.theta).ok_or_else(|| {
                FragmentError::NotFunctional { arrow: cat.arrow_name(a).to_string(), structure: "the structure".into() }
            })?;
            tables.push(t);
        }
        let interp = build_interpretation(s, cat, &self.formulas, tuples, &tables);
        if !validate_set_functor(&interp.functor).is_empty() {
            let bad = cat
                .arrows()
                .find(|&g| {
                    cat.arrows().any(|f| {
                        cat.cod(f) == cat.dom(g)
                            && (0..interp.functor.carriers[cat.dom(f)]).any(|x| {
                                interp.functor.act(g, interp.functor.act(f, x))
                                    != interp.functor.act(cat.compose(g, f), x)
                            })
                    })
                })
                .unwrap_or(0);
            return Err(FragmentError::Inconsistent {
                arrow: cat.arrow_name(bad).to_string(),
                structure: "the structure".into(),
            });
        }
        Ok(interp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::same_topology;
    use crate::logic::{parse_arrow_formula, parse_formula_in_context, Signature};

    fn objects_theory() -> Theory {
        let mut sig = Signature::new();
        sig.add_sort("X").unwrap();
        Theory::empty(Arc::new(sig))
    }

    fn set(t: &Theory, n: usize) -> FinStructure {
        let mut s = FinStructure::blank(t.signature.clone(), vec![n]);
        s.labels[0] = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        s
    }

    fn objects_spec(t: &Theory) -> FragmentSpec {
        let sig = &t.signature;
        let f = |s: &str| parse_formula_in_context(sig, s).unwrap();
        let a = |name: &str, dom: &str, cod: &str, text: &str| ArrowDecl {
            name: name.into(),
            dom: dom.into(),
            cod: cod.into(),
            theta: parse_arrow_formula(sig, text).unwrap().2,
        };
        FragmentSpec {
            formulas: vec![
                ("T0".into(), f("[] top")),
                ("T1".into(), f("[x:X] top")),
                ("T2".into(), f("[x:X, y:X] top")),
            ],
            arrows: vec![
                a("p1", "T2", "T1", "[x:X, y:X ; z:X] eq(z, x)"),
                a("p2", "T2", "T1", "[x:X, y:X ; z:X] eq(z, y)"),
                a("d", "T1", "T2", "[x:X ; y:X, z:X] and(eq(y, x), eq(z, x))"),
                a("s", "T2", "T2", "[x:X, y:X ; u:X, v:X] and(eq(u, y), eq(v, x))"),
            ],
            covers: vec![],
            witnesses: vec![set(t, 3)],
        }
    }

    #[test]
    fn terminal_only_fragment() {
        let t = objects_theory();
        let m = set(&t, 2);
        let spec = FragmentSpec {
            formulas: vec![("T0".into(), FormulaInContext::top(vec![]))],
            ..Default::default()
        };
        let site = compile_fragment(&t, &m, &spec).unwrap();
        assert_eq!(site.category.num_objects(), 1);
        assert_eq!(site.category.num_arrows(), 1);
        assert_eq!(site.interp.functor.carriers, vec![1]);
        assert!(compile_fragment(&t, &m, &FragmentSpec::default()).is_err());
    }

    /// Independent count: the arrows T_m → T_n generated by projections,
    /// diagonal and swap are all maps {1..n} → {1..m}, so hom(T_m, T_n) has m^n
    /// elements once the witness has at least max(m, n) points.
    #[test]
    fn objects_fragment_is_cartesian_with_trivial_basis() {
        let t = objects_theory();
        let m = set(&t, 2);
        let site = compile_fragment(&t, &m, &objects_spec(&t)).unwrap();
        let c = &site.category;
        assert_eq!(c.num_objects(), 3);
        let o = |n: &str| c.object_by_name(n).unwrap();
        for (a, ai) in [("T0", 0u32), ("T1", 1), ("T2", 2)] {
            for (b, bi) in [("T0", 0u32), ("T1", 1), ("T2", 2)] {
                assert_eq!(c.hom(o(a), o(b)).len(), ai.pow(bi) as usize, "{a} -> {b}");
            }
        }
        assert!(same_topology(c, &site.basis, &CoverageBasis::trivial(c)));
        // T2 is the product of T1 with itself
        let p1 = site.arrow_by_name("p1").unwrap();
        let p2 = site.arrow_by_name("p2").unwrap();
        let bang = site.arrow_by_name("!_T1").unwrap();
        assert!(site.designated_pullback(bang, bang).is_some());
        let pb = site.designated_pullback(bang, bang).unwrap();
        assert_eq!(pb.apex, o("T2"));
        assert_eq!([pb.left_leg, pb.right_leg].iter().collect::<BTreeSet<_>>(), [p1, p2].iter().collect());
        assert!(pb.is_proper(c));
    }

    #[test]
    fn without_a_witness_projections_can_merge() {
        let t = objects_theory();
        let m = set(&t, 1);
        let mut spec = objects_spec(&t);
        spec.witnesses.clear();
        let site = compile_fragment(&t, &m, &spec).unwrap();
        assert_eq!(site.arrow_by_name("p1"), site.arrow_by_name("p2"));
        let with = compile_fragment(&t, &m, &objects_spec(&t)).unwrap();
        assert_ne!(with.arrow_by_name("p1"), with.arrow_by_name("p2"));
    }

    fn predicates() -> (Theory, FinStructure) {
        let mut sig = Signature::new();
        let a = sig.add_sort("A").unwrap();
        sig.add_relation("P", &[a]).unwrap();
        sig.add_relation("Q", &[a]).unwrap();
        let t = Theory::empty(Arc::new(sig));
        let mut m = FinStructure::blank(t.signature.clone(), vec![3]);
        m.relations[0] = [vec![0], vec![1]].into_iter().collect();
        m.relations[1] = [vec![1], vec![2]].into_iter().collect();
        (t, m)
    }

    fn union_spec(t: &Theory, with_meet: bool) -> FragmentSpec {
        let sig = &t.signature;
        let f = |s: &str| parse_formula_in_context(sig, s).unwrap();
        let inc = |name: &str, dom: &str, cod: &str| ArrowDecl {
            name: name.into(),
            dom: dom.into(),
            cod: cod.into(),
            theta: parse_arrow_formula(sig, "[x:A ; y:A] eq(x, y)").unwrap().2,
        };
        let mut formulas = vec![
            ("T0".into(), f("[] top")),
            ("P".into(), f("[x:A] P(x)")),
            ("Q".into(), f("[x:A] Q(x)")),
            ("PQ".into(), f("[x:A] or(P(x), Q(x))")),
        ];
        let mut arrows = vec![inc("i", "P", "PQ"), inc("j", "Q", "PQ")];
        if with_meet {
            formulas.push(("M".into(), f("[x:A] and(P(x), Q(x))")));
            arrows.push(inc("k", "M", "P"));
            arrows.push(inc("l", "M", "Q"));
        }
        FragmentSpec {
            formulas,
            arrows,
            covers: vec![CoverDecl { codomain: "PQ".into(), arrows: vec!["i".into(), "j".into()] }],
            witnesses: vec![],
        }
    }

    #[test]
    fn cover_needs_its_pullbacks() {
        let (t, m) = predicates();
        assert!(matches!(
            compile_fragment(&t, &m, &union_spec(&t, false)),
            Err(FragmentError::ClosureViolation { .. })
        ));
        let site = compile_fragment(&t, &m, &union_spec(&t, true)).unwrap();
        assert!(check_basis(&site.category, &site.basis).is_valid());
        let pq = site.object_by_name("PQ").unwrap();
        assert!(site.basis.at(pq).iter().any(|p| p.arrows.len() == 2));
    }

    #[test]
    fn non_surjective_cover_is_rejected() {
        let (t, m) = predicates();
        let mut spec = union_spec(&t, true);
        spec.covers = vec![CoverDecl { codomain: "PQ".into(), arrows: vec!["i".into()] }];
        assert!(matches!(compile_fragment(&t, &m, &spec), Err(FragmentError::NotSurjective { .. })));
    }

    #[test]
    fn interpretation_of_another_structure() {
        let t = objects_theory();
        let m = set(&t, 2);
        let site = compile_fragment(&t, &m, &objects_spec(&t)).unwrap();
        let n = set(&t, 3);
        let i = site.interpret(&n).unwrap();
        let t2 = site.object_by_name("T2").unwrap();
        assert_eq!(i.functor.carriers[t2], 9);
        // the arrow for a formula is found through its graph
        let swap = parse_arrow_formula(&t.signature, "[x:X, y:X ; u:X, v:X] and(eq(u, y), eq(v, x))").unwrap().2;
        assert!(site.arrow_for_graph(t2, t2, &swap).is_some());
    }
}
