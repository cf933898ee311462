//! Finite categories given by explicit tables, functors between them,
//! set-valued functors, and the constructions built on top of them.
//!
//! Objects and arrows are addressed by dense indices. Every category is
//! stored with its objects and arrows sorted lexicographically by
//! identifier, so index order is the canonical order.

mod comma;
mod elements;
mod enumerate;
mod limit;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use comma::{comma_category, Comma};
pub use elements::{category_of_elements, Elements};
pub(crate) use enumerate::next_permutation;
pub use enumerate::{
    enumerate_functors_in_ranges, enumerate_set_valued_functors, find_natural_iso,
};
pub use limit::{compute_limit, is_limit_cone, pullback, terminal_object, ConeWitness, Diagram, LimitFailure};

pub type Obj = usize;
pub type Arr = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("duplicate object identifier `{0}`")]
    DuplicateObject(String),
    #[error("duplicate arrow identifier `{0}`")]
    DuplicateArrow(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("object `{0}` has no identity arrow")]
    MissingIdentity(String),
    #[error("conflicting composition entries for ({0}, {1})")]
    ConflictingComposite(String, String),
    #[error("functor between categories does not match: {0}")]
    FunctorShape(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowData {
    pub name: String,
    pub dom: Obj,
    pub cod: Obj,
}

/// A finite category as a total table. Tables may violate the category
/// laws; `validate_category` reports how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinCategory {
    objects: Vec<String>,
    arrows: Vec<ArrowData>,
    identities: Vec<Arr>,
    compose: Vec<Option<Arr>>,
    homs: Vec<Vec<Arr>>,
}

impl FinCategory {
    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn objects(&self) -> std::ops::Range<Obj> {
        0..self.objects.len()
    }

    pub fn arrows(&self) -> std::ops::Range<Arr> {
        0..self.arrows.len()
    }

    pub fn object_name(&self, o: Obj) -> &str {
        &self.objects[o]
    }

    pub fn arrow_name(&self, a: Arr) -> &str {
        &self.arrows[a].name
    }

    pub fn object_by_name(&self, name: &str) -> Option<Obj> {
        self.objects.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn arrow_by_name(&self, name: &str) -> Option<Arr> {
        self.arrows.binary_search_by(|a| a.name.as_str().cmp(name)).ok()
    }

    pub fn dom(&self, a: Arr) -> Obj {
        self.arrows[a].dom
    }

    pub fn cod(&self, a: Arr) -> Obj {
        self.arrows[a].cod
    }

    pub fn identity(&self, o: Obj) -> Arr {
        self.identities[o]
    }

    pub fn is_identity(&self, a: Arr) -> bool {
        self.identities[self.arrows[a].dom] == a
    }

    /// `g ∘ f`, if the table defines it.
    pub fn try_compose(&self, g: Arr, f: Arr) -> Option<Arr> {
        self.compose[g * self.arrows.len() + f]
    }

    /// `g ∘ f`. Panics when the pair is not composable or the table has a
    /// hole; callers work with validated categories.
    pub fn compose(&self, g: Arr, f: Arr) -> Arr {
        match self.try_compose(g, f) {
            Some(h) => h,
            None => panic!(
                "composite {} . {} undefined in category",
                self.arrows[g].name, self.arrows[f].name
            ),
        }
    }

    pub fn hom(&self, x: Obj, y: Obj) -> &[Arr] {
        &self.homs[x * self.objects.len() + y]
    }

    pub fn arrows_into(&self, c: Obj) -> Vec<Arr> {
        self.arrows().filter(|&a| self.cod(a) == c).collect()
    }

    pub fn arrows_from(&self, c: Obj) -> Vec<Arr> {
        self.arrows().filter(|&a| self.dom(a) == c).collect()
    }

    pub fn arrow_data(&self, a: Arr) -> &ArrowData {
        &self.arrows[a]
    }

    pub fn is_iso(&self, a: Arr) -> bool {
        self.inverse(a).is_some()
    }

    pub fn inverse(&self, a: Arr) -> Option<Arr> {
        let (x, y) = (self.dom(a), self.cod(a));
        self.hom(y, x).iter().copied().find(|&b| {
            self.try_compose(b, a) == Some(self.identity(x))
                && self.try_compose(a, b) == Some(self.identity(y))
        })
    }

    /// Some isomorphism `x → y`, if any.
    pub fn find_iso(&self, x: Obj, y: Obj) -> Option<Arr> {
        self.hom(x, y).iter().copied().find(|&a| self.is_iso(a))
    }

    pub fn is_monic(&self, a: Arr) -> bool {
        let x = self.dom(a);
        for w in self.objects() {
            let hs = self.hom(w, x);
            for (i, &f) in hs.iter().enumerate() {
                for &g in &hs[i + 1..] {
                    if self.try_compose(a, f) == self.try_compose(a, g) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The opposite category; identifiers are kept.
    pub fn opposite(&self) -> FinCategory {
        let n = self.arrows.len();
        let arrows = self
            .arrows
            .iter()
            .map(|a| ArrowData { name: a.name.clone(), dom: a.cod, cod: a.dom })
            .collect();
        let mut compose = vec![None; n * n];
        for g in 0..n {
            for f in 0..n {
                compose[g * n + f] = self.compose[f * n + g];
            }
        }
        FinCategory::from_parts(self.objects.clone(), arrows, self.identities.clone(), compose)
    }

    /// The terminal category with one object `*`.
    pub fn terminal() -> FinCategory {
        let mut b = CategoryBuilder::new();
        b.object("*");
        b.build().expect("terminal category")
    }

    /// The category `a → b` with one non-identity arrow `f`.
    pub fn arrow_category() -> FinCategory {
        let mut b = CategoryBuilder::new();
        b.object("a").object("b").arrow("f", "a", "b");
        b.build().expect("arrow category")
    }

    /// The category of a finite preorder; `leq(i, j)` decides `i ≤ j` and
    /// must be reflexive and transitive. Arrows are named `i<=j`.
    pub fn preorder(names: &[String], leq: impl Fn(usize, usize) -> bool) -> FinCategory {
        let mut b = CategoryBuilder::new();
        for n in names {
            b.object_with_identity(n, &format!("{n}<={n}"));
        }
        for i in 0..names.len() {
            for j in 0..names.len() {
                if i != j && leq(i, j) {
                    b.arrow(&format!("{}<={}", names[i], names[j]), &names[i], &names[j]);
                }
            }
        }
        for i in 0..names.len() {
            for j in 0..names.len() {
                for k in 0..names.len() {
                    if leq(i, j) && leq(j, k) && i != j && j != k {
                        b.compose_entry(
                            &format!("{}<={}", names[j], names[k]),
                            &format!("{}<={}", names[i], names[j]),
                            &format!("{}<={}", names[i], names[k]),
                        );
                    }
                }
            }
        }
        b.build().expect("preorder category")
    }

    pub(crate) fn from_parts(
        objects: Vec<String>,
        arrows: Vec<ArrowData>,
        identities: Vec<Arr>,
        compose: Vec<Option<Arr>>,
    ) -> FinCategory {
        let no = objects.len();
        let mut homs = vec![Vec::new(); no * no];
        for (i, a) in arrows.iter().enumerate() {
            homs[a.dom * no + a.cod].push(i);
        }
        FinCategory { objects, arrows, identities, compose, homs }
    }

    /// Overwrite one composition entry. Only meant for building deliberately
    /// broken tables in tests and diagnostics.
    pub fn with_compose_entry(&self, g: Arr, f: Arr, h: Option<Arr>) -> FinCategory {
        let mut c = self.clone();
        let n = c.arrows.len();
        c.compose[g * n + f] = h;
        c
    }
}

/// Name-based construction of a category. Identity arrows are created
/// automatically and composites with identities are filled in when not
/// given explicitly.
#[derive(Debug, Clone, Default)]
pub struct CategoryBuilder {
    objects: Vec<(String, String)>,
    arrows: Vec<(String, String, String)>,
    compose: Vec<(String, String, String)>,
    fill_identities: bool,
}

impl CategoryBuilder {
    pub fn new() -> Self {
        CategoryBuilder { fill_identities: true, ..Default::default() }
    }

    /// Keep the composition table exactly as given (no identity filling).
    pub fn raw(mut self) -> Self {
        self.fill_identities = false;
        self
    }

    pub fn object(&mut self, name: &str) -> &mut Self {
        let id = format!("1_{name}");
        self.object_with_identity(name, &id)
    }

    pub fn object_with_identity(&mut self, name: &str, identity: &str) -> &mut Self {
        self.objects.push((name.to_string(), identity.to_string()));
        self
    }

    pub fn arrow(&mut self, name: &str, dom: &str, cod: &str) -> &mut Self {
        self.arrows.push((name.to_string(), dom.to_string(), cod.to_string()));
        self
    }

    /// Record `g ∘ f = h`.
    pub fn compose_entry(&mut self, g: &str, f: &str, h: &str) -> &mut Self {
        self.compose.push((g.to_string(), f.to_string(), h.to_string()));
        self
    }

    pub fn build(&self) -> Result<FinCategory, CategoryError> {
        let mut obj_names: Vec<String> = self.objects.iter().map(|(n, _)| n.clone()).collect();
        obj_names.sort();
        for w in obj_names.windows(2) {
            if w[0] == w[1] {
                return Err(CategoryError::DuplicateObject(w[0].clone()));
            }
        }
        let obj_ix = |n: &str| -> Result<Obj, CategoryError> {
            obj_names
                .binary_search_by(|x| x.as_str().cmp(n))
                .map_err(|_| CategoryError::UnknownObject(n.to_string()))
        };
        let mut all: Vec<(String, Obj, Obj)> = Vec::new();
        for (o, id) in &self.objects {
            let i = obj_ix(o)?;
            all.push((id.clone(), i, i));
        }
        for (n, d, c) in &self.arrows {
            all.push((n.clone(), obj_ix(d)?, obj_ix(c)?));
        }
        all.sort();
        for w in all.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CategoryError::DuplicateArrow(w[0].0.clone()));
            }
        }
        let arrows: Vec<ArrowData> = all
            .into_iter()
            .map(|(name, dom, cod)| ArrowData { name, dom, cod })
            .collect();
        let arr_ix = |n: &str| -> Result<Arr, CategoryError> {
            arrows
                .binary_search_by(|a| a.name.as_str().cmp(n))
                .map_err(|_| CategoryError::UnknownArrow(n.to_string()))
        };
        let mut identities = vec![0; obj_names.len()];
        for (o, id) in &self.objects {
            identities[obj_ix(o)?] = arr_ix(id)?;
        }
        let n = arrows.len();
        let mut compose: Vec<Option<Arr>> = vec![None; n * n];
        for (g, f, h) in &self.compose {
            let (g, f, h) = (arr_ix(g)?, arr_ix(f)?, arr_ix(h)?);
            match compose[g * n + f] {
                Some(prev) if prev != h => {
                    return Err(CategoryError::ConflictingComposite(
                        arrows[g].name.clone(),
                        arrows[f].name.clone(),
                    ))
                }
                _ => compose[g * n + f] = Some(h),
            }
        }
        if self.fill_identities {
            for f in 0..n {
                let (d, c) = (arrows[f].dom, arrows[f].cod);
                let (idd, idc) = (identities[d], identities[c]);
                if compose[idc * n + f].is_none() {
                    compose[idc * n + f] = Some(f);
                }
                if compose[f * n + idd].is_none() {
                    compose[f * n + idd] = Some(f);
                }
            }
        }
        Ok(FinCategory::from_parts(obj_names, arrows, identities, compose))
    }
}

/// One violated law in a composition table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CategoryViolation {
    IdentityTyping { object: String, arrow: String },
    MissingComposite { g: String, f: String },
    ComposedNonComposable { g: String, f: String },
    CompositeTyping { g: String, f: String, h: String },
    LeftIdentity { f: String },
    RightIdentity { f: String },
    Associativity { h: String, g: String, f: String },
}

impl fmt::Display for CategoryViolation {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoryViolation::IdentityTyping { object, arrow } => {
                write!(out, "identity {arrow} of {object} is not an endomorphism of it")
            }
            CategoryViolation::MissingComposite { g, f } => {
                write!(out, "composite {g} . {f} is undefined")
            }
            CategoryViolation::ComposedNonComposable { g, f } => {
                write!(out, "composite {g} . {f} is defined on a non-composable pair")
            }
            CategoryViolation::CompositeTyping { g, f, h } => {
                write!(out, "composite {g} . {f} = {h} has the wrong domain or codomain")
            }
            CategoryViolation::LeftIdentity { f } => write!(out, "left identity law fails at {f}"),
            CategoryViolation::RightIdentity { f } => write!(out, "right identity law fails at {f}"),
            CategoryViolation::Associativity { h, g, f } => {
                write!(out, "associativity fails for ({h}, {g}, {f})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<CategoryViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_category(cat: &FinCategory) -> ValidationReport {
    let mut v = Vec::new();
    let name = |a: Arr| cat.arrow_name(a).to_string();
    for o in cat.objects() {
        let id = cat.identity(o);
        if cat.dom(id) != o || cat.cod(id) != o {
            v.push(CategoryViolation::IdentityTyping {
                object: cat.object_name(o).to_string(),
                arrow: name(id),
            });
        }
    }
    let mut typing_ok = true;
    for g in cat.arrows() {
        for f in cat.arrows() {
            let composable = cat.cod(f) == cat.dom(g);
            match (composable, cat.try_compose(g, f)) {
                (true, None) => {
                    typing_ok = false;
                    v.push(CategoryViolation::MissingComposite { g: name(g), f: name(f) });
                }
                (false, Some(_)) => {
                    v.push(CategoryViolation::ComposedNonComposable { g: name(g), f: name(f) })
                }
                (true, Some(h)) => {
                    if cat.dom(h) != cat.dom(f) || cat.cod(h) != cat.cod(g) {
                        typing_ok = false;
                        v.push(CategoryViolation::CompositeTyping {
                            g: name(g),
                            f: name(f),
                            h: name(h),
                        });
                    }
                }
                (false, None) => {}
            }
        }
    }
    for f in cat.arrows() {
        if cat.try_compose(cat.identity(cat.cod(f)), f) != Some(f) {
            v.push(CategoryViolation::LeftIdentity { f: name(f) });
        }
        if cat.try_compose(f, cat.identity(cat.dom(f))) != Some(f) {
            v.push(CategoryViolation::RightIdentity { f: name(f) });
        }
    }
    if typing_ok {
        for f in cat.arrows() {
            for g in cat.arrows_from(cat.cod(f)) {
                for h in cat.arrows_from(cat.cod(g)) {
                    let l = cat.try_compose(h, cat.compose(g, f));
                    let r = cat.try_compose(cat.compose(h, g), f);
                    if l != r {
                        v.push(CategoryViolation::Associativity {
                            h: name(h),
                            g: name(g),
                            f: name(f),
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// A functor between finite categories, stored as index maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinFunctor {
    pub source: Arc<FinCategory>,
    pub target: Arc<FinCategory>,
    pub on_objects: Vec<Obj>,
    pub on_arrows: Vec<Arr>,
}

impl FinFunctor {
    pub fn identity(cat: Arc<FinCategory>) -> FinFunctor {
        FinFunctor {
            on_objects: cat.objects().collect(),
            on_arrows: cat.arrows().collect(),
            source: cat.clone(),
            target: cat,
        }
    }

    pub fn obj(&self, o: Obj) -> Obj {
        self.on_objects[o]
    }

    pub fn arr(&self, a: Arr) -> Arr {
        self.on_arrows[a]
    }

    /// Construct from name maps.
    pub fn from_names(
        source: Arc<FinCategory>,
        target: Arc<FinCategory>,
        objects: &BTreeMap<String, String>,
        arrows: &BTreeMap<String, String>,
    ) -> Result<FinFunctor, CategoryError> {
        let mut on_objects = Vec::with_capacity(source.num_objects());
        for o in source.objects() {
            let n = source.object_name(o);
            let t = objects
                .get(n)
                .ok_or_else(|| CategoryError::FunctorShape(format!("object `{n}` unmapped")))?;
            on_objects.push(
                target.object_by_name(t).ok_or_else(|| CategoryError::UnknownObject(t.clone()))?,
            );
        }
        let mut on_arrows = Vec::with_capacity(source.num_arrows());
        for a in source.arrows() {
            let n = source.arrow_name(a);
            let t = match arrows.get(n) {
                Some(t) => t.clone(),
                None if source.is_identity(a) => {
                    let o = on_objects[source.dom(a)];
                    target.arrow_name(target.identity(o)).to_string()
                }
                None => return Err(CategoryError::FunctorShape(format!("arrow `{n}` unmapped"))),
            };
            on_arrows.push(
                target.arrow_by_name(&t).ok_or_else(|| CategoryError::UnknownArrow(t.clone()))?,
            );
        }
        Ok(FinFunctor { source, target, on_objects, on_arrows })
    }

    pub fn compose_after(&self, first: &FinFunctor) -> FinFunctor {
        FinFunctor {
            source: first.source.clone(),
            target: self.target.clone(),
            on_objects: first.on_objects.iter().map(|&o| self.on_objects[o]).collect(),
            on_arrows: first.on_arrows.iter().map(|&a| self.on_arrows[a]).collect(),
        }
    }
}

/// Violations of functoriality, described by name.
pub fn validate_functor(f: &FinFunctor) -> Vec<String> {
    let (s, t) = (&*f.source, &*f.target);
    let mut v = Vec::new();
    if f.on_objects.len() != s.num_objects() || f.on_arrows.len() != s.num_arrows() {
        v.push("functor tables do not cover the source".to_string());
        return v;
    }
    for a in s.arrows() {
        let b = f.arr(a);
        if t.dom(b) != f.obj(s.dom(a)) || t.cod(b) != f.obj(s.cod(a)) {
            v.push(format!("arrow {} is sent to an arrow with the wrong endpoints", s.arrow_name(a)));
        }
    }
    for o in s.objects() {
        if f.arr(s.identity(o)) != t.identity(f.obj(o)) {
            v.push(format!("identity of {} is not preserved", s.object_name(o)));
        }
    }
    if !v.is_empty() {
        return v;
    }
    for g in s.arrows() {
        for fa in s.arrows_into(s.dom(g)) {
            let h = s.compose(g, fa);
            if t.try_compose(f.arr(g), f.arr(fa)) != Some(f.arr(h)) {
                v.push(format!(
                    "composite {} . {} is not preserved",
                    s.arrow_name(g),
                    s.arrow_name(fa)
                ));
            }
        }
    }
    v
}

/// A functor into finite sets. Carriers are `0..carriers[o]`; `actions[a]`
/// is the function table of arrow `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetValuedFunctor {
    pub source: Arc<FinCategory>,
    pub carriers: Vec<usize>,
    pub actions: Vec<Vec<usize>>,
    pub labels: Option<Vec<Vec<String>>>,
}

impl SetValuedFunctor {
    pub fn new(source: Arc<FinCategory>, carriers: Vec<usize>, actions: Vec<Vec<usize>>) -> Self {
        SetValuedFunctor { source, carriers, actions, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn act(&self, a: Arr, x: usize) -> usize {
        self.actions[a][x]
    }

    pub fn label(&self, o: Obj, x: usize) -> String {
        match &self.labels {
            Some(l) => l[o][x].clone(),
            None => x.to_string(),
        }
    }

    /// The constant functor at a set of size `n`.
    pub fn constant(source: Arc<FinCategory>, n: usize) -> Self {
        let carriers = vec![n; source.num_objects()];
        let actions = source.arrows().map(|_| (0..n).collect()).collect();
        SetValuedFunctor::new(source, carriers, actions)
    }

    /// The covariant representable `hom(c, -)`.
    pub fn corepresentable(source: Arc<FinCategory>, c: Obj) -> Self {
        let cat = source.clone();
        let carriers: Vec<usize> = cat.objects().map(|x| cat.hom(c, x).len()).collect();
        let actions = cat
            .arrows()
            .map(|u| {
                let dst = cat.hom(c, cat.cod(u));
                cat.hom(c, cat.dom(u))
                    .iter()
                    .map(|&f| {
                        let h = cat.compose(u, f);
                        dst.iter().position(|&x| x == h).expect("composite in hom set")
                    })
                    .collect()
            })
            .collect();
        SetValuedFunctor::new(source, carriers, actions)
    }
}

pub fn validate_set_functor(m: &SetValuedFunctor) -> Vec<String> {
    let c = &*m.source;
    let mut v = Vec::new();
    if m.carriers.len() != c.num_objects() || m.actions.len() != c.num_arrows() {
        return vec!["carrier or action tables do not cover the category".to_string()];
    }
    for a in c.arrows() {
        let (d, e) = (m.carriers[c.dom(a)], m.carriers[c.cod(a)]);
        if m.actions[a].len() != d || m.actions[a].iter().any(|&y| y >= e) {
            v.push(format!("action of {} is not a function between the carriers", c.arrow_name(a)));
        }
    }
    if !v.is_empty() {
        return v;
    }
    for o in c.objects() {
        let id = c.identity(o);
        if m.actions[id].iter().enumerate().any(|(x, &y)| x != y) {
            v.push(format!("identity of {} does not act as the identity", c.object_name(o)));
        }
    }
    for g in c.arrows() {
        for f in c.arrows_into(c.dom(g)) {
            let h = c.compose(g, f);
            for x in 0..m.carriers[c.dom(f)] {
                if m.act(g, m.act(f, x)) != m.act(h, x) {
                    v.push(format!(
                        "action of {} . {} differs from the composite of actions",
                        c.arrow_name(g),
                        c.arrow_name(f)
                    ));
                    break;
                }
            }
        }
    }
    v
}
