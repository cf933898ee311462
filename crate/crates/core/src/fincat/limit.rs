use std::sync::Arc;

use super::{validate_functor, Arr, CategoryBuilder, FinCategory, FinFunctor, Obj};

/// A diagram is a functor from a finite shape category.
#[derive(Debug, Clone)]
pub struct Diagram {
    pub shape: Arc<FinCategory>,
    pub objects: Vec<Obj>,
    pub arrows: Vec<Arr>,
}

impl Diagram {
    pub fn empty() -> Diagram {
        let shape = CategoryBuilder::new().build().expect("empty category");
        Diagram { shape: Arc::new(shape), objects: vec![], arrows: vec![] }
    }

    /// The cospan `f: x → z ← y: g`.
    pub fn cospan(cat: &FinCategory, f: Arr, g: Arr) -> Diagram {
        assert_eq!(cat.cod(f), cat.cod(g), "cospan legs must share a codomain");
        let mut b = CategoryBuilder::new();
        b.object("l").object("r").object("z").arrow("f", "l", "z").arrow("g", "r", "z");
        let shape = b.build().expect("cospan shape");
        let mut objects = vec![0; 3];
        objects[shape.object_by_name("l").unwrap()] = cat.dom(f);
        objects[shape.object_by_name("r").unwrap()] = cat.dom(g);
        objects[shape.object_by_name("z").unwrap()] = cat.cod(f);
        let mut arrows = vec![0; shape.num_arrows()];
        for a in shape.arrows() {
            arrows[a] = match shape.arrow_name(a) {
                "f" => f,
                "g" => g,
                _ => cat.identity(objects[shape.dom(a)]),
            };
        }
        Diagram { shape: Arc::new(shape), objects, arrows }
    }

    /// A diagram given directly as a functor from its shape.
    pub fn from_functor(f: &FinFunctor) -> Diagram {
        Diagram {
            shape: f.source.clone(),
            objects: f.on_objects.clone(),
            arrows: f.on_arrows.clone(),
        }
    }

    /// Index of the shape object named `name`.
    pub fn shape_object(&self, name: &str) -> Option<Obj> {
        self.shape.object_by_name(name)
    }

    /// Functoriality problems of the diagram inside `cat`.
    pub fn validate(&self, cat: &Arc<FinCategory>) -> Vec<String> {
        validate_functor(&FinFunctor {
            source: self.shape.clone(),
            target: cat.clone(),
            on_objects: self.objects.clone(),
            on_arrows: self.arrows.clone(),
        })
    }
}

/// A limit cone with a record of how it was verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeWitness {
    pub apex: Obj,
    /// One leg per shape object.
    pub legs: Vec<Arr>,
    /// Number of cones (over all apexes) whose factorization was checked.
    pub cones_checked: usize,
    /// Number of apex candidates examined before this one was accepted.
    pub candidates_examined: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitFailure {
    NotACone { shape_arrow: Arr },
    NoFactorization { apex: Obj, legs: Vec<Arr> },
    NonUniqueFactorization { apex: Obj, legs: Vec<Arr>, count: usize },
}

/// All cones over `d` with apex `x`.
pub(crate) fn cones_at(cat: &FinCategory, d: &Diagram, x: Obj) -> Vec<Vec<Arr>> {
    let n = d.objects.len();
    let mut out = Vec::new();
    let mut legs = vec![0; n];
    fn go(
        cat: &FinCategory,
        d: &Diagram,
        x: Obj,
        j: usize,
        legs: &mut Vec<Arr>,
        out: &mut Vec<Vec<Arr>>,
    ) {
        if j == legs.len() {
            out.push(legs.clone());
            return;
        }
        'leg: for &l in cat.hom(x, d.objects[j]) {
            legs[j] = l;
            for s in d.shape.arrows() {
                let (a, b) = (d.shape.dom(s), d.shape.cod(s));
                if a.max(b) == j && cat.compose(d.arrows[s], legs[a]) != legs[b] {
                    continue 'leg;
                }
            }
            go(cat, d, x, j + 1, legs, out);
        }
    }
    go(cat, d, x, 0, &mut legs, &mut out);
    out
}

fn factorizations(cat: &FinCategory, apex: Obj, legs: &[Arr], x: Obj, cone: &[Arr]) -> usize {
    cat.hom(x, apex)
        .iter()
        .filter(|&&h| legs.iter().zip(cone).all(|(&l, &c)| cat.compose(l, h) == c))
        .count()
}

/// Check that `(apex, legs)` is a limit cone over `d`, exhaustively.
/// Returns the number of cones checked.
pub fn is_limit_cone(
    cat: &FinCategory,
    d: &Diagram,
    apex: Obj,
    legs: &[Arr],
) -> Result<usize, LimitFailure> {
    for s in d.shape.arrows() {
        let (a, b) = (d.shape.dom(s), d.shape.cod(s));
        if cat.dom(legs[a]) != apex || cat.compose(d.arrows[s], legs[a]) != legs[b] {
            return Err(LimitFailure::NotACone { shape_arrow: s });
        }
    }
    let mut checked = 0;
    for x in cat.objects() {
        for cone in cones_at(cat, d, x) {
            checked += 1;
            match factorizations(cat, apex, legs, x, &cone) {
                1 => {}
                0 => return Err(LimitFailure::NoFactorization { apex: x, legs: cone }),
                count => {
                    return Err(LimitFailure::NonUniqueFactorization { apex: x, legs: cone, count })
                }
            }
        }
    }
    Ok(checked)
}

/// A limit of `d` found by exhaustive search over all cones, or `None`.
pub fn compute_limit(cat: &FinCategory, d: &Diagram) -> Option<ConeWitness> {
    let all: Vec<Vec<Vec<Arr>>> = cat.objects().map(|x| cones_at(cat, d, x)).collect();
    let mut examined = 0;
    for apex in cat.objects() {
        'cand: for legs in &all[apex] {
            examined += 1;
            let mut checked = 0;
            for x in cat.objects() {
                for cone in &all[x] {
                    checked += 1;
                    if factorizations(cat, apex, legs, x, cone) != 1 {
                        continue 'cand;
                    }
                }
            }
            return Some(ConeWitness {
                apex,
                legs: legs.clone(),
                cones_checked: checked,
                candidates_examined: examined,
            });
        }
    }
    None
}

pub fn terminal_object(cat: &FinCategory) -> Option<Obj> {
    compute_limit(cat, &Diagram::empty()).map(|w| w.apex)
}

/// Pullback of `f` and `g`; legs are returned as `(to dom f, to dom g)`.
pub fn pullback(cat: &FinCategory, f: Arr, g: Arr) -> Option<(Obj, Arr, Arr)> {
    let d = Diagram::cospan(cat, f, g);
    let w = compute_limit(cat, &d)?;
    let l = d.shape_object("l").unwrap();
    let r = d.shape_object("r").unwrap();
    Some((w.apex, w.legs[l], w.legs[r]))
}
