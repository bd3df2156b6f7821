//! Components of `R^n \ Q`, their convexity, and the convex quadrics they
//! bound.
//!
//! Components are described symbolically in canonical coordinates: each is
//! the set where the canonical equation value has a fixed sign, optionally
//! intersected with an open coordinate half-space. The table below is
//! applied to the base form in `R^r`; free coordinates lift every
//! component to a cylinder, which keeps count and convexity and makes every
//! component unbounded.
//!
//! | base form            | count | convex components          |
//! |----------------------|-------|----------------------------|
//! | A, k = 1             | 3     | both half-spaces and slab  |
//! | A, k ≥ 2             | 2     | interior                   |
//! | B, k = 1             | 3     | the two caps               |
//! | B, k ≥ 2             | 2     | none                       |
//! | C, k = 1             | 2     | both half-spaces           |
//! | C, k ≥ 2             | 1     | none                       |
//! | D, k = 1, r = 2      | 4     | all four wedges            |
//! | D, k = 1, r ≥ 3      | 3     | the two nappes             |
//! | D, k ≥ 2             | 2     | none                       |
//! | E                    | 2     | epigraph iff k = r − 1     |

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::canonical::{CanonicalForm, Family};
use crate::error::{check_dim, Error, Result};

/// Open region `{ sign · q(ξ) > 0 }`, optionally cut by `{ side · ξ_axis > 0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub sign: f64,
    pub half_space: Option<(usize, f64)>,
}

impl Region {
    fn sign(sign: f64) -> Self {
        Region {
            sign,
            half_space: None,
        }
    }

    fn cut(sign: f64, axis: usize, side: f64) -> Self {
        Region {
            sign,
            half_space: Some((axis, side)),
        }
    }

    /// Open membership in canonical coordinates.
    pub fn contains_canonical(&self, form: &CanonicalForm, xi: &DVector<f64>) -> bool {
        if self.sign * form.equation_value(xi) <= 0.0 {
            return false;
        }
        match self.half_space {
            Some((axis, side)) => side * xi[axis] > 0.0,
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub descriptor: String,
    pub convex: bool,
    pub bounded: bool,
    #[serde(skip)]
    pub region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementAnalysis {
    pub count: usize,
    pub components: Vec<Component>,
}

impl ComplementAnalysis {
    pub fn convex_count(&self) -> usize {
        self.components.iter().filter(|c| c.convex).count()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn squares(form: &CanonicalForm, range: std::ops::Range<usize>) -> String {
    range
        .map(|i| format!("{}*xi{}^2", num(form.coeffs[i]), i + 1))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn signed_sum(form: &CanonicalForm) -> String {
    let pos = squares(form, 0..form.k);
    let neg: Vec<String> = (form.k..form.square_count())
        .map(|i| format!(" - {}*xi{}^2", num(form.coeffs[i]), i + 1))
        .collect();
    format!("{pos}{}", neg.concat())
}

/// `(a_2 ξ_2² + … + rhs)/a_1` rendered for the first-coordinate caps.
fn cap_radicand(form: &CanonicalForm, rhs: Option<&str>) -> String {
    let mut terms: Vec<String> = (1..form.square_count())
        .map(|i| format!("{}*xi{}^2", num(form.coeffs[i]), i + 1))
        .collect();
    if let Some(r) = rhs {
        terms.push(r.to_string());
    }
    format!("({})/{}", terms.join(" + "), num(form.coeffs[0]))
}

/// Component count and convexity of `R^n \ Q` for a canonical form.
pub fn complement_analysis(form: &CanonicalForm) -> ComplementAnalysis {
    let cylinder = form.base_dim() < form.n;
    let comp = |descriptor: String, convex: bool, region: Region| Component {
        descriptor,
        convex,
        bounded: false,
        region: Some(region),
    };
    let k = form.k;
    let r = form.r;
    let components = match form.family {
        Family::A if k == 1 => {
            let h = format!("sqrt(1/{})", num(form.coeffs[0]));
            vec![
                comp(format!("xi1 > {h}"), true, Region::cut(1.0, 0, 1.0)),
                comp(format!("xi1 < -{h}"), true, Region::cut(1.0, 0, -1.0)),
                Component {
                    bounded: !cylinder,
                    ..comp(format!("|xi1| < {h}"), true, Region::sign(-1.0))
                },
            ]
        }
        Family::A => {
            let s = squares(form, 0..k);
            vec![
                Component {
                    bounded: !cylinder,
                    ..comp(format!("{s} < 1"), true, Region::sign(-1.0))
                },
                comp(format!("{s} > 1"), false, Region::sign(1.0)),
            ]
        }
        Family::B if k == 1 => {
            let rad = cap_radicand(form, Some("1"));
            vec![
                comp(format!("xi1 > sqrt({rad})"), true, Region::cut(1.0, 0, 1.0)),
                comp(format!("xi1 < -sqrt({rad})"), true, Region::cut(1.0, 0, -1.0)),
                comp(format!("|xi1| < sqrt({rad})"), false, Region::sign(-1.0)),
            ]
        }
        Family::B => {
            let s = signed_sum(form);
            vec![
                comp(format!("{s} > 1"), false, Region::sign(1.0)),
                comp(format!("{s} < 1"), false, Region::sign(-1.0)),
            ]
        }
        Family::C if k == 1 => vec![
            comp("xi1 > 0".into(), true, Region::cut(1.0, 0, 1.0)),
            comp("xi1 < 0".into(), true, Region::cut(1.0, 0, -1.0)),
        ],
        Family::C => vec![comp(format!("{} > 0", squares(form, 0..k)), false, Region::sign(1.0))],
        Family::D if k == 1 && r == 2 => {
            let (a1, a2) = (num(form.coeffs[0]), num(form.coeffs[1]));
            vec![
                comp(format!("xi1 > sqrt({a2}/{a1})*|xi2|"), true, Region::cut(1.0, 0, 1.0)),
                comp(format!("xi1 < -sqrt({a2}/{a1})*|xi2|"), true, Region::cut(1.0, 0, -1.0)),
                comp(format!("xi2 > sqrt({a1}/{a2})*|xi1|"), true, Region::cut(-1.0, 1, 1.0)),
                comp(format!("xi2 < -sqrt({a1}/{a2})*|xi1|"), true, Region::cut(-1.0, 1, -1.0)),
            ]
        }
        Family::D if k == 1 => {
            let rad = cap_radicand(form, None);
            vec![
                comp(format!("xi1 > sqrt({rad})"), true, Region::cut(1.0, 0, 1.0)),
                comp(format!("xi1 < -sqrt({rad})"), true, Region::cut(1.0, 0, -1.0)),
                comp(format!("|xi1| < sqrt({rad})"), false, Region::sign(-1.0)),
            ]
        }
        Family::D => {
            let s = signed_sum(form);
            vec![
                comp(format!("{s} > 0"), false, Region::sign(1.0)),
                comp(format!("{s} < 0"), false, Region::sign(-1.0)),
            ]
        }
        Family::E => {
            let s = signed_sum(form);
            vec![
                comp(format!("xi{r} > {s}"), k == r - 1, Region::sign(-1.0)),
                comp(format!("xi{r} < {s}"), false, Region::sign(1.0)),
            ]
        }
    };
    ComplementAnalysis {
        count: components.len(),
        components,
    }
}

/// Open membership of `x` (input coordinates) in component `index`.
pub fn membership(form: &CanonicalForm, index: usize, x: &DVector<f64>) -> Result<bool> {
    check_dim(form.n, x.len())?;
    let analysis = complement_analysis(form);
    let comp = analysis
        .components
        .get(index)
        .ok_or(Error::IndexOutOfRange {
            index,
            count: analysis.count,
        })?;
    let region = comp.region.expect("analysis always attaches regions");
    Ok(region.contains_canonical(form, &form.to_canonical.apply(x)))
}

/// Half-space `ξ_axis ≥ 0` in canonical coordinates selecting one sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetConstraint {
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexQuadricDescriptor {
    /// Which of the five convex-quadric equation shapes (1..=5).
    pub corollary_case: u8,
    pub sheet_constraint: Option<SheetConstraint>,
    pub base_form: CanonicalForm,
    /// Index of the convex complement component this surface bounds.
    pub component: usize,
}

/// Recognizes the five convex-quadric equation shapes.
pub fn is_convex_quadric(form: &CanonicalForm) -> Option<ConvexQuadricDescriptor> {
    let sheet = Some(SheetConstraint { axis: 0 });
    let (case, sheet_constraint, component) = match form.family {
        Family::A if form.k == 1 => (1, None, 2),
        Family::A => (1, None, 0),
        Family::B if form.k == 1 => (2, sheet, 0),
        Family::C if form.k == 1 => (3, None, 0),
        Family::D if form.k == 1 => (4, sheet, 0),
        Family::E if form.k == form.r - 1 => (5, None, 0),
        _ => return None,
    };
    Some(ConvexQuadricDescriptor {
        corollary_case: case,
        sheet_constraint,
        base_form: form.clone(),
        component,
    })
}

/// Shape of the non-lineality part of a recession cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    Origin,
    /// `ξ_axis ≥ 0`, all other non-free coordinates zero.
    Ray { axis: usize },
    /// `ξ_axis ≥ sqrt(Σ w_i ξ_i²)` over the listed `(i, w_i)`.
    Solid { axis: usize, weights: Vec<(usize, f64)> },
}

/// Recession cone of the closed convex component, in canonical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecessionCone {
    pub n: usize,
    /// Canonical coordinates that are entirely free (the lineality space).
    pub lineality: Vec<usize>,
    pub cone: ConeKind,
}

impl RecessionCone {
    pub fn is_trivial(&self) -> bool {
        self.lineality.is_empty() && self.cone == ConeKind::Origin
    }

    /// Whether canonical direction `y` lies in the cone, up to `tol·‖y‖`.
    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        let scale = tol * y.norm().max(f64::MIN_POSITIVE);
        let constrained = |i: usize| !self.lineality.contains(&i);
        match &self.cone {
            ConeKind::Origin => (0..self.n).filter(|&i| constrained(i)).all(|i| y[i].abs() <= scale),
            ConeKind::Ray { axis } => {
                y[*axis] >= -scale
                    && (0..self.n)
                        .filter(|&i| constrained(i) && i != *axis)
                        .all(|i| y[i].abs() <= scale)
            }
            ConeKind::Solid { axis, weights } => {
                let rad: f64 = weights.iter().map(|(i, w)| w * y[*i] * y[*i]).sum();
                y[*axis] >= rad.sqrt() - scale
            }
        }
    }

    /// Directions are rotated, never translated.
    pub fn contains_ambient(&self, form: &CanonicalForm, y: &DVector<f64>, tol: f64) -> bool {
        self.contains(&(form.to_canonical.rotation() * y), tol)
    }
}

pub fn recession_cone(desc: &ConvexQuadricDescriptor) -> RecessionCone {
    let f = &desc.base_form;
    let free_from = |start: usize| (start..f.n).collect::<Vec<_>>();
    let solid = |upto: usize| ConeKind::Solid {
        axis: 0,
        weights: (1..upto).map(|i| (i, f.coeffs[i] / f.coeffs[0])).collect(),
    };
    let (lineality, cone) = match desc.corollary_case {
        1 => (free_from(f.k), ConeKind::Origin),
        2 | 4 => (free_from(f.r), solid(f.r)),
        3 => (free_from(1), ConeKind::Ray { axis: 0 }),
        5 => (free_from(f.r), ConeKind::Ray { axis: f.r - 1 }),
        _ => unreachable!("corollary cases are 1..=5"),
    };
    RecessionCone {
        n: f.n,
        lineality,
        cone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn form(family: Family, n: usize, k: usize, r: usize) -> CanonicalForm {
        let count = match family {
            Family::A | Family::C => k,
            Family::B | Family::D => r,
            Family::E => r - 1,
        };
        CanonicalForm::standard(family, n, k, r, vec![1.0; count]).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn ellipsoid_complement() {
        let a = complement_analysis(&form(Family::A, 4, 4, 4));
        assert_eq!(a.count, 2);
        assert_eq!(a.convex_count(), 1);
        assert!(a.components[0].convex && a.components[0].bounded);
        assert_eq!(a.components[0].descriptor, "1*xi1^2 + 1*xi2^2 + 1*xi3^2 + 1*xi4^2 < 1");
    }

    #[test]
    fn cylinder_is_unbounded() {
        let a = complement_analysis(&form(Family::A, 3, 2, 2));
        assert!(a.components.iter().all(|c| !c.bounded));
    }

    #[test]
    fn hyperboloid_cases() {
        let two = complement_analysis(&form(Family::B, 3, 1, 3));
        assert_eq!((two.count, two.convex_count()), (3, 2));
        let one = complement_analysis(&form(Family::B, 3, 2, 3));
        assert_eq!((one.count, one.convex_count()), (2, 0));
    }

    #[test]
    fn cone_cases() {
        let a = complement_analysis(&form(Family::D, 3, 1, 3));
        assert_eq!((a.count, a.convex_count()), (3, 2));
        let planar = complement_analysis(&form(Family::D, 2, 1, 2));
        assert_eq!((planar.count, planar.convex_count()), (4, 4));
        let saddle = complement_analysis(&form(Family::D, 4, 2, 4));
        assert_eq!((saddle.count, saddle.convex_count()), (2, 0));
    }

    #[test]
    fn paraboloid_epigraph() {
        let a = complement_analysis(&form(Family::E, 3, 2, 3));
        assert!(a.components[0].convex);
        assert_eq!(a.components[0].descriptor, "xi3 > 1*xi1^2 + 1*xi2^2");
        let s = complement_analysis(&form(Family::E, 3, 1, 3));
        assert_eq!(s.convex_count(), 0);
    }

    #[test]
    fn membership_examples() {
        let circle = form(Family::A, 2, 2, 2);
        assert!(membership(&circle, 0, &v(&[0.0, 0.0])).unwrap());
        assert!(!membership(&circle, 0, &v(&[2.0, 0.0])).unwrap());
        let hyp = form(Family::B, 2, 1, 2);
        assert!(membership(&hyp, 0, &v(&[2.0, 0.0])).unwrap());
        assert!(!membership(&hyp, 1, &v(&[2.0, 0.0])).unwrap());
        assert_eq!(
            membership(&hyp, 3, &v(&[2.0, 0.0])),
            Err(Error::IndexOutOfRange { index: 3, count: 3 })
        );
    }

    #[test]
    fn every_point_off_the_surface_is_in_exactly_one_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let forms = [
            form(Family::A, 3, 1, 1),
            form(Family::A, 3, 3, 3),
            form(Family::B, 3, 1, 3),
            form(Family::B, 3, 2, 3),
            form(Family::C, 3, 1, 1),
            form(Family::C, 3, 2, 2),
            form(Family::D, 2, 1, 2),
            form(Family::D, 3, 1, 3),
            form(Family::E, 3, 1, 3),
            form(Family::E, 3, 2, 3),
        ];
        for f in &forms {
            let a = complement_analysis(f);
            for _ in 0..500 {
                let x = DVector::from_fn(f.n, |_, _| rng.random_range(-3.0..3.0));
                let hits = (0..a.count).filter(|&i| membership(f, i, &x).unwrap()).count();
                assert_eq!(hits, 1, "{:?} at {x}", f.family);
            }
        }
    }

    #[test]
    fn recognizer_cases() {
        let d = is_convex_quadric(&form(Family::A, 3, 1, 1)).unwrap();
        assert_eq!(d.corollary_case, 1);
        assert!(is_convex_quadric(&form(Family::B, 3, 2, 3)).is_none());
        let d = is_convex_quadric(&form(Family::D, 4, 1, 4)).unwrap();
        assert_eq!(d.corollary_case, 4);
        assert_eq!(d.sheet_constraint, Some(SheetConstraint { axis: 0 }));
    }

    #[test]
    fn recession_examples() {
        let ell = recession_cone(&is_convex_quadric(&form(Family::A, 3, 3, 3)).unwrap());
        assert!(ell.is_trivial());
        let par = recession_cone(&is_convex_quadric(&form(Family::E, 3, 2, 3)).unwrap());
        assert_eq!(par.cone, ConeKind::Ray { axis: 2 });
        assert!(par.contains(&v(&[0.0, 0.0, 1.0]), 1e-12));
        assert!(!par.contains(&v(&[0.1, 0.0, 1.0]), 1e-12));
        let cone = recession_cone(&is_convex_quadric(&form(Family::D, 3, 1, 3)).unwrap());
        assert!(cone.contains(&v(&[1.0, 0.6, 0.8]), 1e-12));
        assert!(!cone.contains(&v(&[1.0, 0.8, 0.8]), 1e-12));
        let slab = recession_cone(&is_convex_quadric(&form(Family::A, 3, 1, 1)).unwrap());
        assert_eq!(slab.lineality, vec![1, 2]);
    }
}
