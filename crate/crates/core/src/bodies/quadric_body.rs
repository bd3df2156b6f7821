use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::canonical::{CanonicalForm, Family};
use crate::convexity::{is_convex_quadric, ConvexQuadricDescriptor};
use crate::error::{Error, Result};
use crate::quadric::{Isometry, QuadricCoeffs};

use super::LocalShape;

/// The line-free convex quadric regions with full-dimensional base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadricShape {
    /// `Σ a_i ξ_i² ≤ 1`.
    Ellipsoid,
    /// `a_1ξ_1² − Σ_{i>1} a_i ξ_i² ≥ 1` with `ξ_1 > 0`.
    HyperboloidSheet,
    /// `a_1ξ_1² − Σ_{i>1} a_i ξ_i² ≥ 0` with `ξ_1 ≥ 0`.
    ConeSheet,
    /// `ξ_n ≥ Σ_{i<n} a_i ξ_i²`.
    Paraboloid,
}

impl QuadricShape {
    /// Ambient dimension for a coefficient list of length `len`.
    fn dim_for(self, len: usize) -> usize {
        match self {
            QuadricShape::Paraboloid => len + 1,
            _ => len,
        }
    }
}

/// Closed convex region bounded by one quadric sheet, placed by a rigid
/// motion from canonical coordinates into space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "QuadricBodyJson", into = "QuadricBodyJson")]
pub struct QuadricBody {
    shape: QuadricShape,
    coeffs: Vec<f64>,
    placement: Isometry,
    descriptor: ConvexQuadricDescriptor,
    boundary: QuadricCoeffs,
}

impl QuadricBody {
    /// `placement` maps canonical coordinates into space.
    pub fn new(shape: QuadricShape, coeffs: Vec<f64>, placement: Isometry) -> Result<Self> {
        let n = shape.dim_for(coeffs.len());
        if n < 2 {
            return Err(Error::InvalidInput("quadric bodies need dimension ≥ 2".into()));
        }
        if placement.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: placement.dim(),
            });
        }
        let (family, k) = match shape {
            QuadricShape::Ellipsoid => (Family::A, n),
            QuadricShape::HyperboloidSheet => (Family::B, 1),
            QuadricShape::ConeSheet => (Family::D, 1),
            QuadricShape::Paraboloid => (Family::E, n - 1),
        };
        let mut form = CanonicalForm::standard(family, n, k, n, coeffs.clone())?;
        form.to_canonical = placement.inverse();
        let descriptor = is_convex_quadric(&form).expect("every body shape is a convex quadric");
        let boundary = form.to_coeffs().transform(&placement)?;
        Ok(QuadricBody {
            shape,
            coeffs,
            placement,
            descriptor,
            boundary,
        })
    }

    /// Unit-coefficient body in canonical position.
    pub fn standard(shape: QuadricShape, n: usize) -> Result<Self> {
        let len = if shape == QuadricShape::Paraboloid { n.saturating_sub(1) } else { n };
        Self::new(shape, vec![1.0; len], Isometry::identity(n))
    }

    pub fn shape(&self) -> QuadricShape {
        self.shape
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn placement(&self) -> &Isometry {
        &self.placement
    }

    pub fn descriptor(&self) -> &ConvexQuadricDescriptor {
        &self.descriptor
    }

    /// The boundary quadric in ambient coordinates.
    pub fn boundary(&self) -> &QuadricCoeffs {
        &self.boundary
    }
}

/// Splits `ω` into `η` coordinates (`η_i = √a_i ξ_i` on squared axes):
/// returns the weight on the distinguished axis, the norm of the rest and
/// the unit direction of the rest.
fn split(
    w: &DVector<f64>,
    coeffs: &[f64],
    axis: usize,
    squared: impl Iterator<Item = usize>,
) -> (f64, f64, DVector<f64>) {
    let mut rest = DVector::zeros(w.len());
    for (j, i) in squared.enumerate() {
        rest[i] = w[i] / coeffs[j].sqrt();
    }
    let p = rest.norm();
    let e = if p > 0.0 { rest / p } else { DVector::zeros(w.len()) };
    (w[axis], p, e)
}

impl QuadricBody {
    fn eta_to_xi(&self, mut eta: DVector<f64>) -> DVector<f64> {
        for (j, a) in self.coeffs.iter().enumerate() {
            eta[j] /= a.sqrt();
        }
        eta
    }

    fn last(&self) -> usize {
        self.placement.dim() - 1
    }
}

impl LocalShape for QuadricBody {
    fn dim(&self) -> usize {
        self.placement.dim()
    }

    fn placement(&self) -> &Isometry {
        &self.placement
    }

    fn indicator(&self, xi: &DVector<f64>) -> f64 {
        let a = &self.coeffs;
        let tail = |from: usize, to: usize| (from..to).map(|i| a[i] * xi[i] * xi[i]).sum::<f64>();
        match self.shape {
            QuadricShape::Ellipsoid => tail(0, a.len()) - 1.0,
            QuadricShape::HyperboloidSheet => ((1.0 + tail(1, a.len())) / a[0]).sqrt() - xi[0],
            QuadricShape::ConeSheet => (tail(1, a.len()) / a[0]).sqrt() - xi[0],
            QuadricShape::Paraboloid => tail(0, a.len()) - xi[self.last()],
        }
    }

    fn support(&self, w: &DVector<f64>) -> f64 {
        let a = &self.coeffs;
        let n = self.dim();
        match self.shape {
            QuadricShape::Ellipsoid => (0..n).map(|i| w[i] * w[i] / a[i]).sum::<f64>().sqrt(),
            QuadricShape::HyperboloidSheet | QuadricShape::ConeSheet => {
                // in η coordinates ω·ξ = c·η_1 + ω'·η_⊥
                let c = w[0] / a[0].sqrt();
                let p = (1..n).map(|i| w[i] * w[i] / a[i]).sum::<f64>().sqrt();
                if c + p > 0.0 {
                    f64::INFINITY
                } else if self.shape == QuadricShape::ConeSheet || c + p == 0.0 {
                    0.0
                } else {
                    -(c * c - p * p).sqrt()
                }
            }
            QuadricShape::Paraboloid => {
                let c = w[n - 1];
                let p2 = (0..n - 1).map(|i| w[i] * w[i] / a[i]).sum::<f64>();
                if c > 0.0 || (c == 0.0 && p2 > 0.0) {
                    f64::INFINITY
                } else if c == 0.0 {
                    0.0
                } else {
                    p2 / (4.0 * -c)
                }
            }
        }
    }

    fn beyond(&self, w: &DVector<f64>, level: f64) -> Option<DVector<f64>> {
        let n = self.dim();
        let a = &self.coeffs;
        match self.shape {
            QuadricShape::Ellipsoid => {
                let h = self.support(w);
                if h <= level {
                    return None;
                }
                if h == 0.0 {
                    return Some(DVector::zeros(n));
                }
                Some(DVector::from_fn(n, |i, _| w[i] / (a[i] * h)))
            }
            QuadricShape::HyperboloidSheet | QuadricShape::ConeSheet => {
                let (c0, p, e) = split(w, &a[1..], 0, 1..n);
                let c = c0 / a[0].sqrt();
                let cone = self.shape == QuadricShape::ConeSheet;
                // vertex in η coordinates
                let base = if cone { 0.0 } else { 1.0 };
                let mut eta = DVector::zeros(n);
                if c + p > 0.0 {
                    // walk along a recession direction (1, e)
                    let t = (level - c * base).max(0.0) / (c + p) + 1.0;
                    eta[0] = base + t;
                    eta += &e * t;
                } else if cone {
                    // apex
                    if level >= 0.0 {
                        return None;
                    }
                } else if p == 0.0 {
                    if c <= level {
                        return None;
                    }
                    eta[0] = 1.0;
                } else if c + p == 0.0 {
                    // supremum 0 is approached, never attained
                    if level >= 0.0 {
                        return None;
                    }
                    let rho = p / -level;
                    eta[0] = (1.0 + rho * rho).sqrt();
                    eta += &e * rho;
                } else {
                    let q = (c * c - p * p).sqrt();
                    if -q <= level {
                        return None;
                    }
                    eta[0] = -c / q;
                    eta += &e * (p / q);
                }
                Some(self.eta_to_xi(eta))
            }
            QuadricShape::Paraboloid => {
                let (c, p, e) = split(w, a, n - 1, 0..n - 1);
                let mut eta = DVector::zeros(n);
                if c > 0.0 {
                    eta[n - 1] = level.max(0.0) / c + 1.0;
                } else if c == 0.0 && p > 0.0 {
                    let tau = level.max(0.0) / p + 1.0;
                    eta = &e * tau;
                    eta[n - 1] = tau * tau;
                } else if c == 0.0 {
                    if level >= 0.0 {
                        return None;
                    }
                } else {
                    if p * p / (4.0 * -c) <= level {
                        return None;
                    }
                    eta = &e * (p / (2.0 * -c));
                    eta[n - 1] = eta.norm_squared();
                }
                Some(self.eta_to_xi(eta))
            }
        }
    }

    fn centre(&self) -> DVector<f64> {
        let n = self.dim();
        let mut xi = DVector::zeros(n);
        match self.shape {
            QuadricShape::Ellipsoid => {}
            QuadricShape::HyperboloidSheet => xi[0] = 2.0 / self.coeffs[0].sqrt(),
            QuadricShape::ConeSheet => xi[0] = 1.0,
            QuadricShape::Paraboloid => xi[n - 1] = 1.0,
        }
        xi
    }

    fn scale(&self) -> f64 {
        let longest = self.coeffs.iter().map(|a| 1.0 / a.sqrt()).fold(0.0, f64::max);
        match self.shape {
            QuadricShape::Ellipsoid => longest,
            _ => longest.max(1.0),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuadricBodyJson {
    shape: QuadricShape,
    coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    placement: Option<Isometry>,
}

impl TryFrom<QuadricBodyJson> for QuadricBody {
    type Error = Error;

    fn try_from(j: QuadricBodyJson) -> Result<Self> {
        let n = j.shape.dim_for(j.coeffs.len());
        let placement = j.placement.unwrap_or_else(|| Isometry::identity(n));
        QuadricBody::new(j.shape, j.coeffs, placement)
    }
}

impl From<QuadricBody> for QuadricBodyJson {
    fn from(b: QuadricBody) -> Self {
        QuadricBodyJson {
            shape: b.shape,
            coeffs: b.coeffs,
            placement: Some(b.placement),
        }
    }
}
