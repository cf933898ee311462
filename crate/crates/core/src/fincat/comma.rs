use std::sync::Arc;

use super::{Arr, CategoryBuilder, CategoryError, FinCategory, FinFunctor, Obj};

/// The comma category `(F ↓ G)` with its two projections.
#[derive(Debug, Clone)]
pub struct Comma {
    pub category: Arc<FinCategory>,
    pub left: FinFunctor,
    pub right: FinFunctor,
    /// `(a, b, α: F a → G b)` per object.
    pub objects: Vec<(Obj, Obj, Arr)>,
    /// `(f, g)` per arrow.
    pub arrows: Vec<(Arr, Arr)>,
}

impl Comma {
    pub fn object_of(&self, a: Obj, b: Obj, alpha: Arr) -> Option<Obj> {
        self.objects.iter().position(|&t| t == (a, b, alpha))
    }
}

pub fn comma_category(f: &FinFunctor, g: &FinFunctor) -> Result<Comma, CategoryError> {
    if f.target != g.target {
        return Err(CategoryError::FunctorShape("comma legs have different targets".into()));
    }
    let (a, b, c) = (&*f.source, &*g.source, &*f.target);
    let mut objs: Vec<(Obj, Obj, Arr)> = Vec::new();
    for x in a.objects() {
        for y in b.objects() {
            for &alpha in c.hom(f.obj(x), g.obj(y)) {
                objs.push((x, y, alpha));
            }
        }
    }
    let oname = |t: &(Obj, Obj, Arr)| {
        format!("({},{},{})", a.object_name(t.0), b.object_name(t.1), c.arrow_name(t.2))
    };
    let mut builder = CategoryBuilder::new().raw();
    // (source index, target index, f, g, name)
    let mut arrs: Vec<(usize, usize, Arr, Arr, String)> = Vec::new();
    for (si, s) in objs.iter().enumerate() {
        for (ti, t) in objs.iter().enumerate() {
            for &u in a.hom(s.0, t.0) {
                for &v in b.hom(s.1, t.1) {
                    // G(v) ∘ α = α' ∘ F(u)
                    if c.compose(g.arr(v), s.2) == c.compose(t.2, f.arr(u)) {
                        let name = format!(
                            "<{},{}>:{}->{}",
                            a.arrow_name(u),
                            b.arrow_name(v),
                            oname(s),
                            oname(t)
                        );
                        arrs.push((si, ti, u, v, name));
                    }
                }
            }
        }
    }
    for (si, s) in objs.iter().enumerate() {
        let id = arrs
            .iter()
            .find(|x| x.0 == si && x.1 == si && x.2 == a.identity(s.0) && x.3 == b.identity(s.1))
            .expect("identity pair commutes");
        builder.object_with_identity(&oname(s), &id.4);
    }
    for x in &arrs {
        if !(x.0 == x.1 && x.2 == a.identity(objs[x.0].0) && x.3 == b.identity(objs[x.0].1)) {
            builder.arrow(&x.4, &oname(&objs[x.0]), &oname(&objs[x.1]));
        }
    }
    let mut by_key = std::collections::BTreeMap::new();
    for x in &arrs {
        by_key.insert((x.0, x.1, x.2, x.3), x.4.clone());
    }
    for gx in &arrs {
        for fx in arrs.iter().filter(|fx| fx.1 == gx.0) {
            let key = (fx.0, gx.1, a.compose(gx.2, fx.2), b.compose(gx.3, fx.3));
            let h = by_key.get(&key).expect("composite of commuting squares commutes");
            builder.compose_entry(&gx.4, &fx.4, h);
        }
    }
    let cat = Arc::new(builder.build()?);
    let mut objects = vec![(0, 0, 0); cat.num_objects()];
    for t in &objs {
        objects[cat.object_by_name(&oname(t)).expect("comma object")] = *t;
    }
    let mut arrows = vec![(0, 0); cat.num_arrows()];
    for x in &arrs {
        arrows[cat.arrow_by_name(&x.4).expect("comma arrow")] = (x.2, x.3);
    }
    let left = FinFunctor {
        source: cat.clone(),
        target: f.source.clone(),
        on_objects: objects.iter().map(|t| t.0).collect(),
        on_arrows: arrows.iter().map(|p| p.0).collect(),
    };
    let right = FinFunctor {
        source: cat.clone(),
        target: g.source.clone(),
        on_objects: objects.iter().map(|t| t.1).collect(),
        on_arrows: arrows.iter().map(|p| p.1).collect(),
    };
    Ok(Comma { category: cat, left, right, objects, arrows })
}
