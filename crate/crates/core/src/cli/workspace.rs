use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::doc::{split_top, InputError, Node};
use crate::coverage::{CoverageBasis, Presieve};
use crate::fincat::{validate_category, validate_functor, CategoryBuilder, FinCategory, FinFunctor};
use crate::grothendieck::IndexedCategory;
use crate::logic::{
    compile_fragment, parse_arrow_formula, parse_formula_in_context, parse_sequent, ArrowDecl, CoverDecl,
    FinStructure, FragmentSite, FragmentSpec, LogicError, ModelHom, Signature, Theory,
};
use crate::overtopos::PresheafModel;
use crate::sheaves::FinPresheaf;

#[derive(Debug, Clone)]
pub struct Entry<T> {
    pub name: String,
    pub line: usize,
    pub value: T,
}

#[derive(Debug, Clone)]
pub struct BasisDef {
    pub category: String,
    pub basis: CoverageBasis,
}

#[derive(Debug, Clone)]
pub struct StructureDef {
    pub theory: String,
    pub structure: FinStructure,
}

#[derive(Debug, Clone)]
pub struct HomDef {
    pub source: String,
    pub target: String,
    pub hom: ModelHom,
}

#[derive(Debug, Clone)]
pub struct FragmentDef {
    pub theory: String,
    pub model: String,
    pub site: FragmentSite,
}

#[derive(Debug, Clone)]
pub struct PresheafDef {
    pub basis: Option<String>,
    pub presheaf: FinPresheaf,
}

#[derive(Debug, Clone)]
pub struct IndexedDef {
    pub basis: Option<String>,
    pub indexed: IndexedCategory,
}

#[derive(Debug, Clone)]
pub struct LiftedDef {
    pub functor: String,
    pub source_basis: String,
    pub target_basis: String,
}

#[derive(Debug, Clone)]
pub struct ModelDef {
    pub fragment: String,
    pub model: PresheafModel,
}

/// Every section of a document, resolved and in document order per kind.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub categories: Vec<Entry<Arc<FinCategory>>>,
    pub functors: Vec<Entry<FinFunctor>>,
    pub bases: Vec<Entry<BasisDef>>,
    pub theories: Vec<Entry<Theory>>,
    pub structures: Vec<Entry<StructureDef>>,
    pub homs: Vec<Entry<HomDef>>,
    pub fragments: Vec<Entry<FragmentDef>>,
    pub presheaves: Vec<Entry<PresheafDef>>,
    pub indexed: Vec<Entry<IndexedDef>>,
    pub lifted: Vec<Entry<LiftedDef>>,
    pub models: Vec<Entry<ModelDef>>,
}

const KINDS: [&str; 11] =
    ["category", "functor", "basis", "theory", "structure", "hom", "fragment", "presheaf", "indexed", "lifted", "model"];

fn find<'a, T>(items: &'a [Entry<T>], what: &str, name: &str, at: &Node) -> Result<&'a T, InputError> {
    items
        .iter()
        .find(|e| e.name == name)
        .map(|e| &e.value)
        .ok_or_else(|| at.value_err(format!("unresolved reference: no {what} named `{name}`")))
}

fn logic_err(n: &Node, e: LogicError) -> InputError {
    match &e {
        LogicError::Parse(p) => InputError::at(n.line, n.value_column + p.column - 1, p.message.clone()),
        _ => n.value_err(e.to_string()),
    }
}

/// `a -> b` with both sides trimmed.
fn arrow_pair<'a>(n: &Node, text: &'a str) -> Result<(&'a str, &'a str), InputError> {
    let (l, r) = text.split_once("->").ok_or_else(|| n.value_err("expected `source -> target`"))?;
    Ok((l.trim(), r.trim()))
}

/// `name(a, b)` or `name`.
fn application(n: &Node, text: &str) -> Result<(String, Vec<String>), InputError> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text.to_string(), vec![])),
        Some(i) => {
            let inner = text[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| n.err(format!("expected `name(args)` in `{text}`")))?;
            let args = split_top(inner, ',').into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            Ok((text[..i].trim().to_string(), args.collect()))
        }
    }
}

fn section_name(n: &Node) -> Result<(String, String), InputError> {
    let parts: Vec<&str> = n.key_str().split_whitespace().collect();
    match parts.as_slice() {
        [kind, name] if KINDS.contains(kind) => Ok((kind.to_string(), name.to_string())),
        [kind, ..] if !KINDS.contains(kind) => Err(n.err(format!("unknown section kind `{kind}`"))),
        _ => Err(n.err("expected `<kind> <name>:`")),
    }
}

fn parse_usize(n: &Node, text: &str) -> Result<usize, InputError> {
    text.trim().parse().map_err(|_| n.value_err(format!("expected a natural number, found `{}`", text.trim())))
}

impl Workspace {
    pub fn load(nodes: &[Node]) -> Result<Workspace, InputError> {
        let mut by_kind: BTreeMap<String, Vec<(String, &Node)>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for n in nodes {
            let (kind, name) = section_name(n)?;
            if !seen.insert((kind.clone(), name.clone())) {
                return Err(n.err(format!("duplicate {kind} `{name}`")));
            }
            by_kind.entry(kind).or_default().push((name, n));
        }
        let mut ws = Workspace::default();
        for kind in KINDS {
            for (name, n) in by_kind.get(kind).cloned().unwrap_or_default() {
                let line = n.line;
                macro_rules! push {
                    ($field:ident, $v:expr) => {
                        ws.$field.push(Entry { name: name.clone(), line, value: $v })
                    };
                }
                match kind {
                    "category" => push!(categories, Arc::new(category(n)?)),
                    "functor" => push!(functors, ws.functor(n)?),
                    "basis" => push!(bases, ws.basis(n)?),
                    "theory" => push!(theories, theory(n)?),
                    "structure" => push!(structures, ws.structure(n)?),
                    "hom" => push!(homs, ws.hom(n)?),
                    "fragment" => push!(fragments, ws.fragment(n)?),
                    "presheaf" => push!(presheaves, ws.presheaf(n)?),
                    "indexed" => push!(indexed, ws.indexed(n)?),
                    "lifted" => push!(lifted, ws.lifted(n)?),
                    _ => push!(models, ws.model(n)?),
                }
            }
        }
        Ok(ws)
    }

    pub fn category(&self, name: &str, at: &Node) -> Result<&Arc<FinCategory>, InputError> {
        find(&self.categories, "category", name, at)
    }

    pub fn basis_def(&self, name: &str, at: &Node) -> Result<&BasisDef, InputError> {
        find(&self.bases, "basis", name, at)
    }

    pub fn structure_def(&self, name: &str, at: &Node) -> Result<&StructureDef, InputError> {
        find(&self.structures, "structure", name, at)
    }

    fn basis_on(&self, field: &Node, cat: &Arc<FinCategory>) -> Result<String, InputError> {
        let b = self.basis_def(&field.value, field)?;
        let bc = self.category(&b.category, field)?;
        if !Arc::ptr_eq(bc, cat) {
            return Err(field.value_err(format!("basis `{}` is not on the expected category", field.value)));
        }
        Ok(field.value.clone())
    }

    fn functor(&self, n: &Node) -> Result<FinFunctor, InputError> {
        n.only_fields(&["objects", "arrows"])?;
        let (s, t) = arrow_pair(n, &n.value)?;
        let source = self.category(s, n)?.clone();
        let target = self.category(t, n)?.clone();
        let map = |key: &str| -> BTreeMap<String, String> {
            n.child(key).map(|c| c.children.iter().map(|e| (e.key_str().to_string(), e.value.clone())).collect()).unwrap_or_default()
        };
        let f = FinFunctor::from_names(source, target, &map("objects"), &map("arrows")).map_err(|e| n.err(e.to_string()))?;
        if let Some(p) = validate_functor(&f).first() {
            return Err(n.err(format!("functoriality: {p}")));
        }
        Ok(f)
    }

    fn basis(&self, n: &Node) -> Result<BasisDef, InputError> {
        let cat = self.category(&n.value, n)?;
        let mut basis = CoverageBasis::empty(cat);
        for fam in &n.children {
            let c = cat
                .object_by_name(fam.key_str())
                .ok_or_else(|| fam.err(format!("unknown object `{}`", fam.key_str())))?;
            let mut arrows = Vec::new();
            for a in fam.list() {
                arrows.push(cat.arrow_by_name(&a).ok_or_else(|| fam.value_err(format!("unknown arrow `{a}`")))?);
            }
            basis.insert(Presieve::new(cat, c, arrows).map_err(|e| fam.err(format!("family typing: {e}")))?);
        }
        Ok(BasisDef { category: n.value.clone(), basis })
    }

    fn structure(&self, n: &Node) -> Result<StructureDef, InputError> {
        n.only_fields(&["carriers", "functions", "relations"])?;
        let theory = find(&self.theories, "theory", &n.value, n)?;
        let sig = theory.signature.clone();
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); sig.sorts.len()];
        let mut given = vec![false; sig.sorts.len()];
        if let Some(cs) = n.child("carriers") {
            for c in &cs.children {
                let s = sig.sort_by_name(c.key_str()).ok_or_else(|| c.err(format!("unknown sort `{}`", c.key_str())))?;
                labels[s] = c.list();
                given[s] = true;
                let distinct: BTreeSet<&String> = labels[s].iter().collect();
                if distinct.len() != labels[s].len() {
                    return Err(c.value_err("repeated element label"));
                }
            }
        }
        if let Some(s) = given.iter().position(|g| !g) {
            return Err(n.err(format!("carrier of sort `{}` not given", sig.sorts[s])));
        }
        let mut m = FinStructure::blank(sig.clone(), labels.iter().map(Vec::len).collect());
        m.labels = labels;
        let element = |m: &FinStructure, at: &Node, s: usize, l: &str| {
            m.element_by_label(s, l).ok_or_else(|| at.err(format!("`{l}` is not an element of sort `{}`", sig.sorts[s])))
        };
        let args_of = |m: &FinStructure, at: &Node, sorts: &[usize], args: &[String]| -> Result<Vec<usize>, InputError> {
            if sorts.len() != args.len() {
                return Err(at.err(format!("expected {} arguments, found {}", sorts.len(), args.len())));
            }
            sorts.iter().zip(args).map(|(&s, a)| element(m, at, s, a)).collect()
        };
        let mut defined: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); sig.functions.len()];
        if let Some(fs) = n.child("functions") {
            for e in &fs.children {
                let (name, args) = application(e, e.key_str())?;
                let f = sig.function_by_name(&name).ok_or_else(|| e.err(format!("unknown function `{name}`")))?;
                let sym = &sig.functions[f];
                let xs = args_of(&m, e, &sym.args, &args)?;
                let v = m.element_by_label(sym.result, &e.value).ok_or_else(|| {
                    e.value_err(format!("`{}` is not an element of sort `{}`", e.value, sig.sorts[sym.result]))
                })?;
                if !defined[f].insert(xs.clone()) {
                    return Err(e.err(format!("`{}` defined twice", e.key_str())));
                }
                m.set_function(f, &xs, v);
            }
        }
        for (f, sym) in sig.functions.iter().enumerate() {
            let total: usize = sym.args.iter().map(|&s| m.carriers[s]).product();
            if defined[f].len() != total {
                return Err(n.err(format!("function `{}` is not defined on every argument", sym.name)));
            }
        }
        if let Some(rs) = n.child("relations") {
            for e in &rs.children {
                if e.key.is_some() {
                    return Err(e.err("relation facts are bare items such as `R(a, b)`"));
                }
                let (name, args) = application(e, &e.value)?;
                let r = sig.relation_by_name(&name).ok_or_else(|| e.err(format!("unknown relation `{name}`")))?;
                let xs = args_of(&m, e, &sig.relations[r].args.clone(), &args)?;
                m.relations[r].insert(xs);
            }
        }
        if let Some(p) = m.validate().first() {
            return Err(n.err(p.clone()));
        }
        Ok(StructureDef { theory: n.value.clone(), structure: m })
    }

    fn hom(&self, n: &Node) -> Result<HomDef, InputError> {
        let (s, t) = arrow_pair(n, &n.value)?;
        let src = self.structure_def(s, n)?;
        let tgt = self.structure_def(t, n)?;
        if src.theory != tgt.theory {
            return Err(n.value_err("source and target are structures for different theories"));
        }
        let (a, b) = (&src.structure, &tgt.structure);
        let sig = &a.signature;
        let mut maps: Vec<Vec<Option<usize>>> = a.carriers.iter().map(|&k| vec![None; k]).collect();
        for sn in &n.children {
            let s = sig.sort_by_name(sn.key_str()).ok_or_else(|| sn.err(format!("unknown sort `{}`", sn.key_str())))?;
            for e in &sn.children {
                let x = a.element_by_label(s, e.key_str()).ok_or_else(|| e.err(format!("`{}` is not in the source", e.key_str())))?;
                let y = b.element_by_label(s, &e.value).ok_or_else(|| e.value_err(format!("`{}` is not in the target", e.value)))?;
                maps[s][x] = Some(y);
            }
        }
        let mut out = Vec::new();
        for (s, m) in maps.into_iter().enumerate() {
            let row: Option<Vec<usize>> = m.iter().copied().collect();
            out.push(row.ok_or_else(|| n.err(format!("map on sort `{}` is not total", sig.sorts[s])))?);
        }
        Ok(HomDef { source: s.to_string(), target: t.to_string(), hom: ModelHom { maps: out } })
    }

    fn fragment(&self, n: &Node) -> Result<FragmentDef, InputError> {
        n.only_fields(&["theory", "model", "witnesses", "formulas", "arrows", "covers"])?;
        let tn = n.require("theory")?;
        let theory = find(&self.theories, "theory", &tn.value, tn)?;
        let mn = n.require("model")?;
        let model = self.structure_def(&mn.value, mn)?;
        if model.theory != tn.value {
            return Err(mn.value_err(format!("`{}` is not a structure for theory `{}`", mn.value, tn.value)));
        }
        let sig = &theory.signature;
        let mut spec = FragmentSpec::default();
        if let Some(ws) = n.child("witnesses") {
            for w in ws.list() {
                let d = self.structure_def(&w, ws)?;
                if d.theory != tn.value {
                    return Err(ws.value_err(format!("witness `{w}` is not a structure for theory `{}`", tn.value)));
                }
                spec.witnesses.push(d.structure.clone());
            }
        }
        for e in n.child("formulas").map(|c| c.children.as_slice()).unwrap_or(&[]) {
            let f = parse_formula_in_context(sig, &e.value).map_err(|x| logic_err(e, x))?;
            spec.formulas.push((e.key_str().to_string(), f));
        }
        for e in n.child("arrows").map(|c| c.children.as_slice()).unwrap_or(&[]) {
            let (shape, text) = e.value.split_once('=').ok_or_else(|| e.value_err("expected `source -> target = [x:A ; y:B] formula`"))?;
            let (dom, cod) = arrow_pair(e, shape)?;
            let offset = e.value.len() - text.trim_start().len();
            let shifted = Node { value_column: e.value_column + e.value[..offset].chars().count(), ..e.clone() };
            let (_, _, theta) = parse_arrow_formula(sig, text.trim()).map_err(|x| logic_err(&shifted, x))?;
            spec.arrows.push(ArrowDecl { name: e.key_str().to_string(), dom: dom.into(), cod: cod.into(), theta });
        }
        for e in n.child("covers").map(|c| c.children.as_slice()).unwrap_or(&[]) {
            spec.covers.push(CoverDecl { codomain: e.key_str().to_string(), arrows: e.list() });
        }
        let site = compile_fragment(theory, &model.structure, &spec).map_err(|e| n.err(format!("fragment: {e}")))?;
        Ok(FragmentDef { theory: tn.value.clone(), model: mn.value.clone(), site })
    }

    fn presheaf(&self, n: &Node) -> Result<PresheafDef, InputError> {
        n.only_fields(&["basis", "carriers", "restrictions"])?;
        let cat = self.category(&n.value, n)?.clone();
        let basis = n.child("basis").map(|b| self.basis_on(b, &cat)).transpose()?;
        let mut carriers = vec![None; cat.num_objects()];
        for e in &n.require("carriers")?.children {
            let o = cat.object_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown object `{}`", e.key_str())))?;
            carriers[o] = Some(parse_usize(e, &e.value)?);
        }
        let carriers: Vec<usize> = carriers
            .iter()
            .enumerate()
            .map(|(o, c)| c.ok_or_else(|| n.err(format!("no carrier for `{}`", cat.object_name(o)))))
            .collect::<Result<_, _>>()?;
        let mut restrictions: Vec<Option<Vec<usize>>> = vec![None; cat.num_arrows()];
        for o in cat.objects() {
            restrictions[cat.identity(o)] = Some((0..carriers[o]).collect());
        }
        if let Some(rs) = n.child("restrictions") {
            for e in &rs.children {
                let u = cat.arrow_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown arrow `{}`", e.key_str())))?;
                let table: Vec<usize> = e.list().iter().map(|x| parse_usize(e, x)).collect::<Result<_, _>>()?;
                restrictions[u] = Some(table);
            }
        }
        let restrictions = restrictions
            .into_iter()
            .enumerate()
            .map(|(u, r)| r.ok_or_else(|| n.err(format!("no restriction along `{}`", cat.arrow_name(u)))))
            .collect::<Result<_, _>>()?;
        let presheaf = FinPresheaf { category: cat, carriers, restrictions };
        if let Some(p) = presheaf.validate().first() {
            return Err(n.err(format!("presheaf: {p}")));
        }
        Ok(PresheafDef { basis, presheaf })
    }

    fn indexed(&self, n: &Node) -> Result<IndexedDef, InputError> {
        n.only_fields(&["basis", "fibers", "transitions"])?;
        let base = self.category(&n.value, n)?.clone();
        let basis = n.child("basis").map(|b| self.basis_on(b, &base)).transpose()?;
        let mut fibers = vec![None; base.num_objects()];
        for e in &n.require("fibers")?.children {
            let o = base.object_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown object `{}`", e.key_str())))?;
            fibers[o] = Some(self.category(&e.value, e)?.clone());
        }
        let fibers: Vec<Arc<FinCategory>> = fibers
            .into_iter()
            .enumerate()
            .map(|(o, f)| f.ok_or_else(|| n.err(format!("no fiber over `{}`", base.object_name(o)))))
            .collect::<Result<_, _>>()?;
        let mut transitions: Vec<Option<FinFunctor>> = vec![None; base.num_arrows()];
        for o in base.objects() {
            transitions[base.identity(o)] = Some(FinFunctor::identity(fibers[o].clone()));
        }
        if let Some(ts) = n.child("transitions") {
            for e in &ts.children {
                let u = base.arrow_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown arrow `{}`", e.key_str())))?;
                let f = find(&self.functors, "functor", &e.value, e)?;
                transitions[u] = Some(f.clone());
            }
        }
        let transitions = transitions
            .into_iter()
            .enumerate()
            .map(|(u, t)| t.ok_or_else(|| n.err(format!("no transition along `{}`", base.arrow_name(u)))))
            .collect::<Result<_, _>>()?;
        let indexed = IndexedCategory { base, fibers, transitions };
        if let Some(p) = indexed.validate().first() {
            return Err(n.err(format!("indexed category: {p}")));
        }
        Ok(IndexedDef { basis, indexed })
    }

    fn lifted(&self, n: &Node) -> Result<LiftedDef, InputError> {
        n.only_fields(&["functor", "source-basis", "target-basis"])?;
        let fnode = n.require("functor")?;
        let f = find(&self.functors, "functor", &fnode.value, fnode)?;
        let sb = self.basis_on(n.require("source-basis")?, &f.source)?;
        let tb = self.basis_on(n.require("target-basis")?, &f.target)?;
        Ok(LiftedDef { functor: fnode.value.clone(), source_basis: sb, target_basis: tb })
    }

    fn model(&self, n: &Node) -> Result<ModelDef, InputError> {
        n.only_fields(&["base", "basis", "constant", "structures", "restrictions"])?;
        let frag = find(&self.fragments, "fragment", &n.value, n)?;
        let bn = n.require("base")?;
        let base = self.category(&bn.value, bn)?.clone();
        let basis = match n.child("basis") {
            Some(b) => self.basis_def(&self.basis_on(b, &base)?, b)?.basis.clone(),
            None => CoverageBasis::trivial(&base),
        };
        let of_theory = |at: &Node, name: &str| -> Result<FinStructure, InputError> {
            let d = self.structure_def(name, at)?;
            if d.theory != frag.theory {
                return Err(at.value_err(format!("`{name}` is not a structure for theory `{}`", frag.theory)));
            }
            Ok(d.structure.clone())
        };
        let model = if let Some(c) = n.child("constant") {
            PresheafModel::constant(base, basis, &of_theory(c, &c.value)?)
        } else {
            let mut structures: Vec<Option<(String, FinStructure)>> = vec![None; base.num_objects()];
            for e in &n.require("structures")?.children {
                let o = base.object_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown object `{}`", e.key_str())))?;
                structures[o] = Some((e.value.clone(), of_theory(e, &e.value)?));
            }
            let structures: Vec<(String, FinStructure)> = structures
                .into_iter()
                .enumerate()
                .map(|(o, s)| s.ok_or_else(|| n.err(format!("no structure at `{}`", base.object_name(o)))))
                .collect::<Result<_, _>>()?;
            let mut restrictions: Vec<Option<ModelHom>> = vec![None; base.num_arrows()];
            for o in base.objects() {
                restrictions[base.identity(o)] = Some(ModelHom::identity(&structures[o].1));
            }
            for e in n.child("restrictions").map(|c| c.children.as_slice()).unwrap_or(&[]) {
                let u = base.arrow_by_name(e.key_str()).ok_or_else(|| e.err(format!("unknown arrow `{}`", e.key_str())))?;
                let h = find(&self.homs, "hom", &e.value, e)?;
                let (want_s, want_t) = (&structures[base.cod(u)].0, &structures[base.dom(u)].0);
                if &h.source != want_s || &h.target != want_t {
                    return Err(e.value_err(format!("restriction along `{}` must be a hom {want_s} -> {want_t}", e.key_str())));
                }
                restrictions[u] = Some(h.hom.clone());
            }
            let restrictions = restrictions
                .into_iter()
                .enumerate()
                .map(|(u, r)| r.ok_or_else(|| n.err(format!("no restriction along `{}`", base.arrow_name(u)))))
                .collect::<Result<_, _>>()?;
            PresheafModel { base, basis, structures: structures.into_iter().map(|s| s.1).collect(), restrictions }
        };
        if let Some(p) = model.validate().first() {
            return Err(n.err(format!("presheaf model: {p}")));
        }
        Ok(ModelDef { fragment: n.value.clone(), model })
    }
}

fn category(n: &Node) -> Result<FinCategory, InputError> {
    n.only_fields(&["objects", "arrows", "compose"])?;
    let mut b = CategoryBuilder::new();
    let objects = n.require("objects")?.list();
    for o in &objects {
        b.object(o);
    }
    for e in n.child("arrows").map(|c| c.children.as_slice()).unwrap_or(&[]) {
        let (d, c) = arrow_pair(e, &e.value)?;
        if let Some(x) = [d, c].into_iter().find(|x| !objects.iter().any(|o| o == x)) {
            return Err(e.value_err(format!("unknown object `{x}`")));
        }
        b.arrow(e.key_str(), d, c);
    }
    for e in n.child("compose").map(|c| c.children.as_slice()).unwrap_or(&[]) {
        let parts: Vec<&str> = e.key_str().split(',').map(str::trim).collect();
        let [g, f] = parts.as_slice() else {
            return Err(e.err("expected `g, f: h` for g after f"));
        };
        b.compose_entry(g, f, &e.value);
    }
    let cat = b.build().map_err(|e| n.err(format!("category: {e}")))?;
    let report = validate_category(&cat);
    if let Some(v) = report.violations.first() {
        return Err(n.err(format!("category laws: {v}")));
    }
    Ok(cat)
}

fn theory(n: &Node) -> Result<Theory, InputError> {
    n.only_fields(&["sorts", "functions", "relations", "axioms"])?;
    let mut sig = Signature::new();
    let sn = n.require("sorts")?;
    for s in sn.list() {
        sig.add_sort(&s).map_err(|e| sn.value_err(e.to_string()))?;
    }
    let sorts_of = |sig: &Signature, at: &Node, text: &str| -> Result<Vec<usize>, InputError> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| sig.sort_by_name(s).ok_or_else(|| at.value_err(format!("unknown sort `{s}`"))))
            .collect()
    };
    for e in n.child("functions").map(|c| c.children.as_slice()).unwrap_or(&[]) {
        let (args, res) = e.value.split_once("->").ok_or_else(|| e.value_err("expected `A, B -> C`"))?;
        let args = sorts_of(&sig, e, args)?;
        let res = sorts_of(&sig, e, res)?;
        let [res] = res.as_slice() else {
            return Err(e.value_err("expected exactly one result sort"));
        };
        sig.add_function(e.key_str(), &args, *res).map_err(|x| e.err(x.to_string()))?;
    }
    for e in n.child("relations").map(|c| c.children.as_slice()).unwrap_or(&[]) {
        let args = sorts_of(&sig, e, &e.value)?;
        sig.add_relation(e.key_str(), &args).map_err(|x| e.err(x.to_string()))?;
    }
    let mut axioms = Vec::new();
    for e in n.child("axioms").map(|c| c.children.as_slice()).unwrap_or(&[]) {
        if e.key.is_some() {
            return Err(e.err("axioms are bare items such as `[x:A] top |- eq(x, x)`"));
        }
        axioms.push(parse_sequent(&sig, &e.value).map_err(|x| logic_err(e, x))?);
    }
    Theory::new(Arc::new(sig), axioms).map_err(|e| n.err(e.to_string()))
}
