use std::sync::Arc;

use super::{Arr, CategoryBuilder, FinCategory, FinFunctor, Obj, SetValuedFunctor};

/// The category of elements of a set-valued functor.
#[derive(Debug, Clone)]
pub struct Elements {
    pub category: Arc<FinCategory>,
    pub projection: FinFunctor,
    /// `(c, x)` for each object, in index order.
    pub objects: Vec<(Obj, usize)>,
    /// `(u, x)` for each arrow: the base arrow and the source element.
    pub arrows: Vec<(Arr, usize)>,
}

impl Elements {
    pub fn object_of(&self, c: Obj, x: usize) -> Option<Obj> {
        self.objects.iter().position(|&p| p == (c, x))
    }

    /// The arrow lying over `u` with source element `x`.
    pub fn arrow_of(&self, u: Arr, x: usize) -> Option<Arr> {
        self.arrows.iter().position(|&p| p == (u, x))
    }
}

pub(crate) fn element_object_name(m: &SetValuedFunctor, c: Obj, x: usize) -> String {
    format!("{}:{}", m.source.object_name(c), m.label(c, x))
}

pub fn category_of_elements(m: &SetValuedFunctor) -> Elements {
    let c = &*m.source;
    let mut b = CategoryBuilder::new().raw();
    let mut arrow_names = Vec::new();
    for o in c.objects() {
        for x in 0..m.carriers[o] {
            let name = element_object_name(m, o, x);
            let id = format!("{}@{}", c.arrow_name(c.identity(o)), name);
            b.object_with_identity(&name, &id);
        }
    }
    for u in c.arrows() {
        let d = c.dom(u);
        for x in 0..m.carriers[d] {
            let name = format!("{}@{}", c.arrow_name(u), element_object_name(m, d, x));
            if !c.is_identity(u) {
                let src = element_object_name(m, d, x);
                let tgt = element_object_name(m, c.cod(u), m.act(u, x));
                b.arrow(&name, &src, &tgt);
            }
            arrow_names.push((u, x, name));
        }
    }
    for (g, y, gname) in &arrow_names {
        for (f, x, fname) in &arrow_names {
            if c.cod(*f) == c.dom(*g) && m.act(*f, *x) == *y {
                let h = c.compose(*g, *f);
                let hname = format!("{}@{}", c.arrow_name(h), element_object_name(m, c.dom(*f), *x));
                b.compose_entry(gname, fname, &hname);
            }
        }
    }
    let cat = Arc::new(b.build().expect("category of elements is well formed"));
    let mut objects = vec![(0, 0); cat.num_objects()];
    for o in c.objects() {
        for x in 0..m.carriers[o] {
            let i = cat.object_by_name(&element_object_name(m, o, x)).expect("element object");
            objects[i] = (o, x);
        }
    }
    let mut arrows = vec![(0, 0); cat.num_arrows()];
    for (u, x, name) in &arrow_names {
        arrows[cat.arrow_by_name(name).expect("element arrow")] = (*u, *x);
    }
    let projection = FinFunctor {
        source: cat.clone(),
        target: m.source.clone(),
        on_objects: objects.iter().map(|p| p.0).collect(),
        on_arrows: arrows.iter().map(|p| p.0).collect(),
    };
    Elements { category: cat, projection, objects, arrows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{validate_category, validate_functor};

    #[test]
    fn discrete_carrier_over_terminal() {
        let t = Arc::new(FinCategory::terminal());
        let m = SetValuedFunctor::constant(t, 2);
        let e = category_of_elements(&m);
        assert_eq!(e.category.num_objects(), 2);
        assert_eq!(e.category.num_arrows(), 2);
    }

    #[test]
    fn two_points_over_one() {
        let c = Arc::new(FinCategory::arrow_category());
        let a = c.object_by_name("a").unwrap();
        let f = c.arrow_by_name("f").unwrap();
        let mut carriers = vec![0; 2];
        carriers[a] = 2;
        carriers[1 - a] = 1;
        let mut actions = vec![vec![]; c.num_arrows()];
        actions[c.identity(a)] = vec![0, 1];
        actions[c.identity(1 - a)] = vec![0];
        actions[f] = vec![0, 0];
        let m = SetValuedFunctor::new(c, carriers, actions);
        let e = category_of_elements(&m);
        assert_eq!(e.category.num_objects(), 3);
        let non_id = e.category.arrows().filter(|&x| !e.category.is_identity(x)).count();
        assert_eq!(non_id, 2);
        assert!(validate_category(&e.category).is_valid());
        assert!(validate_functor(&e.projection).is_empty());
    }

    #[test]
    fn empty_carrier_contributes_nothing() {
        let c = Arc::new(FinCategory::arrow_category());
        let a = c.object_by_name("a").unwrap();
        let mut carriers = vec![0; 2];
        carriers[1 - a] = 3;
        let mut actions = vec![vec![]; c.num_arrows()];
        actions[c.identity(1 - a)] = vec![0, 1, 2];
        let m = SetValuedFunctor::new(c, carriers, actions);
        let e = category_of_elements(&m);
        assert_eq!(e.category.num_objects(), 3);
        assert!(e.objects.iter().all(|&(o, _)| o != a));
    }
}
