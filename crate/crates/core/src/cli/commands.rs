use std::fmt::Display;

use serde_json::{json, Value};

use super::workspace::{Entry, Workspace};
use super::{Args, Command, InputError, Section};
use crate::coverage::{
    check_basis, giraud_basis, lifted_basis, CoverageBasis, Presieve, DEFAULT_ENUMERATION_CAP,
};
use crate::fincat::{pullback, terminal_object, Diagram, FinCategory};
use crate::grothendieck::{
    check_descent, check_lifts_cartesian, check_terminal_lift_pullback, grothendieck_construction, limit_in_total,
    DescentFailure, IndexedCategory, TotalCategory,
};
use crate::logic::{check_hom, check_model, check_sequent, emit_tm_axioms, product_tuples, FinStructure, HomFailure};
use crate::overtopos::{
    agrees_with_set_based, antecedent_basis, antecedent_basis_general, check_over_site, enumerate_homs,
    enumerate_points, hom_to_point, non_sheaf_representables, point_to_hom, round_trip_hom, round_trip_point,
};
use crate::sheaves::{is_sheaf, SheafFailure};

const DESCENT_DATA_CAP: usize = 1 << 12;
const HOM_SEARCH_CAP: usize = 1 << 22;
const SIEVE_CAP: usize = 1 << 12;

type Run = Result<(Vec<Section>, Option<String>), InputError>;

fn pick<'a, T>(items: &'a [Entry<T>], args: &Args) -> Vec<&'a Entry<T>> {
    items.iter().filter(|e| args.name.as_deref().is_none_or(|n| n == e.name)).collect()
}

fn fail_at<T>(e: &Entry<T>, kind: &str, err: impl Display) -> InputError {
    InputError::at(e.line, 1, format!("{kind} {}: {err}", e.name))
}

fn basis_witnesses(cat: &FinCategory, b: &CoverageBasis) -> Vec<String> {
    check_basis(cat, b).violations.iter().map(|v| v.describe(cat)).collect()
}

fn family(cat: &FinCategory, p: &Presieve) -> String {
    format!("{{{}}} at {}", p.names(cat).join(", "), cat.object_name(p.codomain))
}

pub(super) fn run(ws: &Workspace, args: &Args) -> Run {
    let out = match args.command {
        Command::Validate => validate(ws, args),
        Command::Elements => elements(ws, args),
        Command::Antecedent => antecedent(ws, args),
        Command::AntecedentGeneral => antecedent_general(ws, args),
        Command::Lifted => lifted(ws, args),
        Command::Giraud => giraud(ws, args),
        Command::Tm => return tm(ws, args),
        Command::Points => points(ws, args),
        Command::Correspondence => correspondence(ws, args),
        Command::Sheaf => sheaf(ws, args),
        Command::Descent => descent(ws, args),
        Command::Limits => limits(ws, args),
    }?;
    if out.is_empty() {
        if let Some(n) = &args.name {
            return Err(InputError::at(0, 0, format!("no section named `{n}` applies to `{}`", args.command.name())));
        }
    }
    Ok((out, None))
}

fn validate(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.categories, args) {
        let mut s = Section::new("category", &e.name);
        s.set("objects", e.value.num_objects());
        s.set("arrows", e.value.num_arrows());
        out.push(s);
    }
    for e in pick(&ws.functors, args) {
        let mut s = Section::new("functor", &e.name);
        s.set("source objects", e.value.source.num_objects());
        out.push(s);
    }
    for e in pick(&ws.bases, args) {
        let cat = ws.categories.iter().find(|c| c.name == e.value.category).expect("resolved at load");
        let mut s = Section::new("basis", &e.name);
        s.set("families", e.value.basis.num_families());
        s.check("basis axioms", basis_witnesses(&cat.value, &e.value.basis));
        out.push(s);
    }
    for e in pick(&ws.theories, args) {
        let mut s = Section::new("theory", &e.name);
        let sig = &e.value.signature;
        s.set("sorts", sig.sorts.len());
        s.set("functions", sig.functions.len());
        s.set("relations", sig.relations.len());
        s.set("axioms", e.value.axioms.len());
        out.push(s);
    }
    for e in pick(&ws.structures, args) {
        let t = ws.theories.iter().find(|t| t.name == e.value.theory).expect("resolved at load");
        let m = &e.value.structure;
        let mut s = Section::new("structure", &e.name);
        s.set("carriers", json!(m.carriers));
        let failing = check_model(m, &t.value).map_err(|x| fail_at(e, "structure", x))?;
        s.set("axioms checked", t.value.axioms.len());
        s.check(
            "model of the theory",
            failing.iter().map(|&i| format!("axiom fails: {}", t.value.axioms[i].display(&t.value.signature))).collect(),
        );
        out.push(s);
    }
    for e in pick(&ws.homs, args) {
        let src = ws.structures.iter().find(|x| x.name == e.value.source).expect("resolved at load");
        let tgt = ws.structures.iter().find(|x| x.name == e.value.target).expect("resolved at load");
        let mut s = Section::new("hom", &e.name);
        let r = check_hom(&src.value.structure, &tgt.value.structure, &e.value.hom).map_err(|x| fail_at(e, "hom", x))?;
        s.check(
            "homomorphism",
            r.failures
                .iter()
                .map(|f| match f {
                    HomFailure::Shape(m) => m.clone(),
                    HomFailure::Function { symbol, args } => format!("{symbol} at {args:?}"),
                    HomFailure::Relation { symbol, tuple } => format!("{symbol} at {tuple:?}"),
                })
                .collect(),
        );
        out.push(s);
    }
    for e in pick(&ws.fragments, args) {
        let f = &e.value.site;
        let mut s = Section::new("fragment", &e.name);
        s.set("objects", f.category.num_objects());
        s.set("arrows", f.category.num_arrows());
        s.set("basis families", f.basis.num_families());
        s.set("designated pullbacks", f.pullbacks.len());
        s.set("cover closed", f.cover_closed);
        s.check("fragment basis axioms", basis_witnesses(&f.category, &f.basis));
        for n in &f.notes {
            s.warn(n.clone());
        }
        out.push(s);
    }
    for e in pick(&ws.presheaves, args) {
        let mut s = Section::new("presheaf", &e.name);
        s.set("carriers", json!(e.value.presheaf.carriers));
        out.push(s);
    }
    for e in pick(&ws.indexed, args) {
        let mut s = Section::new("indexed", &e.name);
        s.set("base objects", e.value.indexed.base.num_objects());
        out.push(s);
    }
    for e in pick(&ws.lifted, args) {
        let mut s = Section::new("lifted", &e.name);
        s.set("functor", e.value.functor.clone());
        out.push(s);
    }
    for e in pick(&ws.models, args) {
        let mut s = Section::new("model", &e.name);
        s.set("base objects", e.value.model.base.num_objects());
        s.check("base basis axioms", basis_witnesses(&e.value.model.base, &e.value.model.basis));
        out.push(s);
    }
    Ok(out)
}

fn elements(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.fragments, args) {
        let el = &e.value.site.elements;
        let cat = &*el.category;
        let mut s = Section::new("fragment", &e.name);
        s.set("objects", cat.num_objects());
        s.set("arrows", cat.num_arrows());
        s.set("elements", json!(cat.objects().map(|o| cat.object_name(o)).collect::<Vec<_>>()));
        out.push(s);
    }
    Ok(out)
}

fn antecedent(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.fragments, args) {
        let frag = &e.value.site;
        let over = antecedent_basis(frag).map_err(|x| fail_at(e, "fragment", x))?;
        let cat = &*over.category;
        let mut s = Section::new("fragment", &e.name);
        s.set("objects", cat.num_objects());
        s.set("arrows", cat.num_arrows());
        s.set("antecedent families", over.raw.num_families());
        s.set("families after closure", over.basis.num_families());
        s.check("basis axioms", basis_witnesses(cat, &over.basis));
        let checks = check_over_site(frag, &over);
        s.set("designated squares checked", checks.squares_checked);
        s.set("image factorizations checked", checks.factorizations_checked);
        if !checks.terminal {
            s.check("terminal element", vec!["the terminal formula does not have exactly one element".into()]);
        }
        s.check("designated squares are pullbacks", checks.square_failures);
        s.check("image factorizations lift", checks.factorization_failures);
        let bad: Vec<String> = non_sheaf_representables(&over).iter().map(|&o| cat.object_name(o).to_string()).collect();
        s.set("subcanonical", bad.is_empty());
        if frag.cover_closed {
            s.check("representables are sheaves", bad);
        } else if !bad.is_empty() {
            s.warn(format!("{} representable(s) are not sheaves; the fragment is not cover-closed", bad.len()));
        }
        for n in frag.notes.iter().chain(&over.notes) {
            s.warn(n.clone());
        }
        out.push(s);
    }
    Ok(out)
}

fn antecedent_general(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.models, args) {
        let fe = ws.fragments.iter().find(|f| f.name == e.value.fragment).expect("resolved at load");
        let frag = &fe.value.site;
        let model = &e.value.model;
        let over = antecedent_basis_general(frag, model).map_err(|x| fail_at(e, "model", x))?;
        let cat = &*over.category;
        let mut s = Section::new("model", &e.name);
        s.set("objects", cat.num_objects());
        s.set("arrows", cat.num_arrows());
        s.set("families after closure", over.basis.num_families());
        s.check("basis axioms", basis_witnesses(cat, &over.basis));
        if model.base.num_objects() == 1 && model.structures[0] == frag.model {
            let set_based = antecedent_basis(frag).map_err(|x| fail_at(e, "model", x))?;
            match agrees_with_set_based(&over, &set_based, SIEVE_CAP) {
                Some(a) => {
                    s.set("agrees with set-based site", a);
                    if !a {
                        s.check("agreement with the set-based antecedent site", vec!["covering sieves differ".into()]);
                    }
                }
                None => s.warn("agreement with the set-based site not decided"),
            }
        }
        for n in &over.notes {
            s.warn(n.clone());
        }
        out.push(s);
    }
    Ok(out)
}

fn lifted(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.lifted, args) {
        let f = &ws.functors.iter().find(|x| x.name == e.value.functor).expect("resolved at load").value;
        let basis = |n: &str| &ws.bases.iter().find(|b| b.name == n).expect("resolved at load").value.basis;
        let site = lifted_basis(f, basis(&e.value.source_basis), basis(&e.value.target_basis), DEFAULT_ENUMERATION_CAP)
            .map_err(|x| fail_at(e, "lifted", x))?;
        let cat = &*site.comma.category;
        let mut s = Section::new("lifted", &e.name);
        s.set("objects", cat.num_objects());
        s.set("arrows", cat.num_arrows());
        s.set("generating families", site.raw.num_families());
        s.set("families after closure", site.basis.num_families());
        s.check("basis axioms", basis_witnesses(cat, &site.basis));
        out.push(s);
    }
    Ok(out)
}

fn base_basis<'a>(ws: &'a Workspace, name: &Option<String>) -> Option<&'a CoverageBasis> {
    name.as_ref().map(|n| &ws.bases.iter().find(|b| &b.name == n).expect("resolved at load").value.basis)
}

fn total_of<T>(e: &Entry<T>, ic: &IndexedCategory) -> Result<TotalCategory, InputError> {
    grothendieck_construction(ic).map_err(|x| fail_at(e, "indexed", x))
}

fn giraud(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.indexed, args) {
        let Some(bb) = base_basis(ws, &e.value.basis) else { continue };
        let ic = &e.value.indexed;
        let total = total_of(e, ic)?;
        let basis = giraud_basis(&total, bb).map_err(|x| fail_at(e, "indexed", x))?;
        let cat = &*total.category;
        let mut s = Section::new("indexed", &e.name);
        s.set("total objects", cat.num_objects());
        s.set("total arrows", cat.num_arrows());
        s.set("families", basis.num_families());
        if !check_lifts_cartesian(ic, &total) {
            s.check("lifts are cartesian", vec!["a recorded lift is not cartesian".into()]);
        }
        s.check("basis axioms", basis_witnesses(cat, &basis));
        out.push(s);
    }
    Ok(out)
}

fn write_function_rows(m: &FinStructure, labels: &[Vec<String>], doc: &mut String) {
    let sig = &m.signature;
    for (f, sym) in sig.functions.iter().enumerate() {
        for args in product_tuples(m, &sym.args) {
            let shown: Vec<&str> = sym.args.iter().zip(&args).map(|(&s, &x)| labels[s][x].as_str()).collect();
            let v = m.apply(f, &args);
            doc.push_str(&format!("    {}({}): {}\n", sym.name, shown.join(", "), labels[sym.result][v]));
        }
    }
}

fn structure_document(name: &str, theory: &str, m: &FinStructure) -> String {
    let sig = &m.signature;
    let labels: Vec<Vec<String>> = m.carriers.iter().map(|&n| (0..n).map(|i| format!("x{i}")).collect()).collect();
    let mut doc = format!("structure {name}: {theory}\n  carriers:\n");
    for (s, sort) in sig.sorts.iter().enumerate() {
        doc.push_str(&format!("    {sort}: {}\n", labels[s].join(", ")));
    }
    if !sig.functions.is_empty() {
        doc.push_str("  functions:\n");
        write_function_rows(m, &labels, &mut doc);
    }
    if m.relations.iter().any(|r| !r.is_empty()) {
        doc.push_str("  relations:\n");
        for (r, rows) in m.relations.iter().enumerate() {
            for t in rows {
                let shown: Vec<&str> = sig.relations[r].args.iter().zip(t).map(|(&s, &x)| labels[s][x].as_str()).collect();
                doc.push_str(&format!("    {}({})\n", sig.relations[r].name, shown.join(", ")));
            }
        }
    }
    doc
}

fn tm(ws: &Workspace, args: &Args) -> Run {
    let mut out = Vec::new();
    let mut doc = format!("format-version: {}\n", super::FORMAT_VERSION);
    let frags = pick(&ws.fragments, args);
    if frags.is_empty() && args.name.is_some() {
        return Err(InputError::at(0, 0, format!("no fragment named `{}`", args.name.as_deref().unwrap_or(""))));
    }
    let hom = match &args.hom {
        Some(h) => Some(
            ws.homs
                .iter()
                .find(|e| &e.name == h)
                .ok_or_else(|| InputError::at(0, 0, format!("unresolved reference: no hom named `{h}`")))?,
        ),
        None => None,
    };
    for e in frags {
        let frag = &e.value.site;
        let t = emit_tm_axioms(frag).map_err(|x| fail_at(e, "fragment", x))?;
        let sig = &t.theory.signature;
        let tname = format!("TM_{}", e.name);
        doc.push_str(&format!("theory {tname}:\n  sorts: {}\n", sig.sorts.join(", ")));
        if !sig.functions.is_empty() {
            doc.push_str("  functions:\n");
            for f in &sig.functions {
                let a: Vec<&str> = f.args.iter().map(|&s| sig.sorts[s].as_str()).collect();
                doc.push_str(&format!("    {}: {} -> {}\n", f.name, a.join(", "), sig.sorts[f.result]));
            }
        }
        if !t.theory.axioms.is_empty() {
            doc.push_str("  axioms:\n");
            for ax in &t.theory.axioms {
                doc.push_str(&format!("    {}\n", ax.display(sig)));
            }
        }
        let mut s = Section::new("fragment", &e.name);
        s.set("theory", tname.clone());
        s.set("sorts", sig.sorts.len());
        s.set("functions", sig.functions.len());
        s.set("axioms", t.theory.axioms.len());
        if let Some(h) = hom {
            if h.value.target != e.value.model {
                return Err(InputError::at(
                    h.line,
                    1,
                    format!("hom {} does not land in `{}`, the model of fragment {}", h.name, e.value.model, e.name),
                ));
            }
            let n = &ws.structures.iter().find(|x| x.name == h.value.source).expect("resolved at load").value.structure;
            let over = antecedent_basis(frag).map_err(|x| fail_at(e, "fragment", x))?;
            let point = hom_to_point(frag, &over, n, &h.value.hom).map_err(|x| fail_at(h, "hom", x))?;
            let st = crate::logic::sigma_structure(&t, &point.functor);
            let mut failing = Vec::new();
            for ax in &t.theory.axioms {
                if !check_sequent(&st, ax).map_err(|x| fail_at(e, "fragment", x))? {
                    failing.push(format!("axiom fails: {}", ax.display(sig)));
                }
            }
            let sname = format!("S_{}", h.name);
            s.set("structure", sname.clone());
            s.check("point structure is a model", failing);
            doc.push_str(&structure_document(&sname, &tname, &st));
        }
        out.push(s);
    }
    Ok((out, Some(doc)))
}

fn points(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.fragments, args) {
        let frag = &e.value.site;
        let over = antecedent_basis(frag).map_err(|x| fail_at(e, "fragment", x))?;
        let pts = enumerate_points(frag, &over, args.bound);
        let mut s = Section::new("fragment", &e.name);
        s.set("bound", args.bound);
        s.set("points", pts.len());
        let shown: Vec<Value> = pts.iter().take(args.witness_limit).map(|p| json!(p.functor.carriers)).collect();
        s.set("fiber sizes", Value::Array(shown));
        out.push(s);
    }
    Ok(out)
}

fn correspondence(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.fragments, args) {
        let frag = &e.value.site;
        let over = antecedent_basis(frag).map_err(|x| fail_at(e, "fragment", x))?;
        let pts = enumerate_points(frag, &over, args.bound);
        let homs = enumerate_homs(&frag.theory, &frag.model, args.bound, HOM_SEARCH_CAP).map_err(|x| fail_at(e, "fragment", x))?;
        let mut s = Section::new("fragment", &e.name);
        s.set("bound", args.bound);
        s.set("points", pts.len());
        s.set("homomorphisms", homs.len());
        if pts.len() != homs.len() {
            s.check("points match homomorphisms", vec![format!("{} points, {} homomorphisms", pts.len(), homs.len())]);
        }
        let mut bad_points = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            match round_trip_point(frag, &over, &p.functor) {
                Ok(true) => {}
                Ok(false) => bad_points.push(format!("point {i} with fibers {:?}", p.functor.carriers)),
                Err(x) => bad_points.push(format!("point {i}: {x}")),
            }
        }
        let mut bad_homs = Vec::new();
        for (i, (n, g)) in homs.iter().enumerate() {
            match round_trip_hom(frag, &over, n, g) {
                Ok(true) => {}
                Ok(false) => bad_homs.push(format!("hom {i} with carriers {:?}", n.carriers)),
                Err(x) => bad_homs.push(format!("hom {i}: {x}")),
            }
        }
        s.set("point round trips", pts.len() - bad_points.len());
        s.set("hom round trips", homs.len() - bad_homs.len());
        s.check("point round trip is an isomorphism", bad_points);
        s.check("hom round trip is an isomorphism", bad_homs);
        if let Some(p) = pts.first() {
            if let Err(x) = point_to_hom(frag, &over, &p.functor) {
                s.warn(format!("points cannot be read back as homomorphisms: {x}"));
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn sheaf_failure(cat: &FinCategory, f: &SheafFailure) -> String {
    match f {
        SheafFailure::NotSeparated { presieve, first, second } => {
            format!("sections {first} and {second} agree on {}", family(cat, presieve))
        }
        SheafFailure::NoAmalgamation(m) => {
            format!("matching family {:?} on {} has no amalgamation", m.elements, family(cat, &m.presieve))
        }
    }
}

fn sheaf(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.presheaves, args) {
        let Some(b) = base_basis(ws, &e.value.basis) else { continue };
        let p = &e.value.presheaf;
        let r = is_sheaf(p, b);
        let mut s = Section::new("presheaf", &e.name);
        s.set("families checked", r.families_checked);
        s.check("sheaf condition", r.failures.iter().map(|f| sheaf_failure(&p.category, f)).collect());
        out.push(s);
    }
    for e in pick(&ws.fragments, args) {
        let frag = &e.value.site;
        let over = antecedent_basis(frag).map_err(|x| fail_at(e, "fragment", x))?;
        let cat = &*over.category;
        let bad: Vec<String> = non_sheaf_representables(&over).iter().map(|&o| cat.object_name(o).to_string()).collect();
        let mut s = Section::new("fragment", &e.name);
        s.set("representables", cat.num_objects());
        s.set("representables that are sheaves", cat.num_objects() - bad.len());
        if frag.cover_closed {
            s.check("representables are sheaves", bad);
        } else if !bad.is_empty() {
            s.warn(format!("{} representable(s) are not sheaves; the fragment is not cover-closed", bad.len()));
        }
        out.push(s);
    }
    Ok(out)
}

fn descent(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.indexed, args) {
        let Some(bb) = base_basis(ws, &e.value.basis) else { continue };
        let ic = &e.value.indexed;
        let b = &*ic.base;
        let mut s = Section::new("indexed", &e.name);
        let mut data = 0;
        let mut failures = Vec::new();
        for c in b.objects() {
            for fam in bb.at(c) {
                let r = check_descent(ic, fam, DESCENT_DATA_CAP).map_err(|x| fail_at(e, "indexed", x))?;
                data += r.data_checked;
                for f in &r.failures {
                    failures.push(match f {
                        DescentFailure::NoAmalgamation(d) => {
                            format!("datum {:?} on {} has no amalgamation", d.objects, family(b, fam))
                        }
                        DescentFailure::NotEssentiallyUnique { datum, first, second } => format!(
                            "datum {:?} on {} has amalgamations {first} and {second} with no compatible isomorphism",
                            datum.objects,
                            family(b, fam)
                        ),
                    });
                }
            }
        }
        s.set("families", bb.num_families());
        s.set("descent data checked", data);
        s.check("effective descent", failures);
        out.push(s);
    }
    Ok(out)
}

fn cospans(cat: &FinCategory) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for f in cat.arrows() {
        for g in cat.arrows().filter(|&g| g >= f && cat.cod(g) == cat.cod(f)) {
            out.push((f, g));
        }
    }
    out
}

fn limits(ws: &Workspace, args: &Args) -> Result<Vec<Section>, InputError> {
    let mut out = Vec::new();
    for e in pick(&ws.categories, args) {
        let cat = &*e.value;
        let mut s = Section::new("category", &e.name);
        s.set("terminal", terminal_object(cat).map(|o| cat.object_name(o).to_string()));
        let cs = cospans(cat);
        let with = cs.iter().filter(|&&(f, g)| pullback(cat, f, g).is_some()).count();
        s.set("cospans", cs.len());
        s.set("cospans with pullbacks", with);
        out.push(s);
    }
    for e in pick(&ws.indexed, args) {
        let ic = &e.value.indexed;
        let total = total_of(e, ic)?;
        let t = &*total.category;
        let mut s = Section::new("indexed", &e.name);
        match check_terminal_lift_pullback(ic, &total) {
            Ok(squares) => {
                s.set("lift squares", squares.len());
                s.check(
                    "lifts at terminals give pullbacks",
                    squares
                        .iter()
                        .filter(|q| !q.is_pullback)
                        .map(|q| {
                            let fiber = &ic.fibers[ic.base.cod(q.base_arrow)];
                            format!("lift of {} at {}", ic.base.arrow_name(q.base_arrow), fiber.object_name(q.fiber_object))
                        })
                        .collect(),
                );
            }
            Err(x) => s.warn(format!("lift squares not checked: {x}")),
        }
        let mut diagrams = vec![("empty diagram".to_string(), Diagram::empty())];
        for (f, g) in cospans(t) {
            diagrams.push((format!("cospan ({}, {})", t.arrow_name(f), t.arrow_name(g)), Diagram::cospan(t, f, g)));
        }
        let (mut agreed, mut skipped, mut bad) = (0, 0, Vec::new());
        for (label, d) in &diagrams {
            match limit_in_total(ic, &total, d) {
                Ok(l) if l.agrees => agreed += 1,
                Ok(_) => bad.push(format!("{label}: assembled limit differs from the direct one")),
                Err(_) => skipped += 1,
            }
        }
        s.set("diagrams", diagrams.len());
        s.set("limits assembled and agreeing", agreed);
        s.set("limits missing in base or fiber", skipped);
        s.check("assembled limit agrees with the direct limit", bad);
        out.push(s);
    }
    Ok(out)
}
