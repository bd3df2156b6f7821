use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadric::Isometry;

use super::LocalShape;

/// `Σ ζ_i² + ε·Σ ζ_i^p ≤ 1` with `ζ_i = ξ_i / α_i` and even `p ≥ 4`.
///
/// Convex for every `ε ≥ 0`; its boundary is a quadric only at `ε = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PerturbedJson", into = "PerturbedJson")]
pub struct PerturbedEllipsoid {
    semi_axes: Vec<f64>,
    epsilon: f64,
    exponent: u32,
    placement: Isometry,
}

impl PerturbedEllipsoid {
    pub fn new(semi_axes: Vec<f64>, epsilon: f64, exponent: u32, placement: Isometry) -> Result<Self> {
        let n = semi_axes.len();
        if n < 2 {
            return Err(Error::InvalidInput("perturbed ellipsoid needs dimension ≥ 2".into()));
        }
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput("semi-axes must be positive".into()));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput("epsilon must be non-negative".into()));
        }
        if exponent < 4 || !exponent.is_multiple_of(2) {
            return Err(Error::InvalidInput("exponent must be even and at least 4".into()));
        }
        if placement.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: placement.dim(),
            });
        }
        Ok(PerturbedEllipsoid {
            semi_axes,
            epsilon,
            exponent,
            placement,
        })
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Derivative of `z² + ε z^p`, strictly increasing and odd.
    fn slope(&self, z: f64) -> f64 {
        2.0 * z + self.epsilon * self.exponent as f64 * z.powi(self.exponent as i32 - 1)
    }

    /// Inverse of [`Self::slope`].
    fn slope_inverse(&self, y: f64) -> f64 {
        if self.epsilon == 0.0 || y == 0.0 {
            return 0.5 * y;
        }
        let (sign, y) = (y.signum(), y.abs());
        let p = self.exponent as f64;
        // slope is convex on z > 0 and slope(y/2) ≥ y, so Newton descends monotonically
        let mut z = 0.5 * y;
        for _ in 0..200 {
            let f = self.slope(z) - y;
            let df = 2.0 + self.epsilon * p * (p - 1.0) * z.powi(self.exponent as i32 - 2);
            let next = z - f / df;
            if next >= z || z - next <= 1e-17 * z {
                z = next.min(z);
                break;
            }
            z = next;
        }
        sign * z
    }

    fn gauge(&self, zeta: &DVector<f64>) -> f64 {
        zeta.iter()
            .map(|z| z * z + self.epsilon * z.powi(self.exponent as i32))
            .sum()
    }

    /// Boundary point maximizing `ω·ξ`, from the Lagrange conditions
    /// `slope(ζ_i) = λ·α_i ω_i`.
    fn argmax(&self, w: &DVector<f64>) -> DVector<f64> {
        let g: Vec<f64> = w.iter().zip(&self.semi_axes).map(|(w, a)| w * a).collect();
        if g.iter().all(|v| *v == 0.0) {
            return DVector::zeros(w.len());
        }
        let at = |lam: f64| DVector::from_iterator(g.len(), g.iter().map(|gi| self.slope_inverse(lam * gi)));
        let mut hi = 1.0;
        while self.gauge(&at(hi)) < 1.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.gauge(&at(mid)) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let zeta = at(lo);
        DVector::from_iterator(zeta.len(), zeta.iter().zip(&self.semi_axes).map(|(z, a)| z * a))
    }
}

impl LocalShape for PerturbedEllipsoid {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    fn placement(&self) -> &Isometry {
        &self.placement
    }

    fn indicator(&self, xi: &DVector<f64>) -> f64 {
        let zeta = DVector::from_iterator(xi.len(), xi.iter().zip(&self.semi_axes).map(|(x, a)| x / a));
        self.gauge(&zeta) - 1.0
    }

    fn support(&self, w: &DVector<f64>) -> f64 {
        w.dot(&self.argmax(w))
    }

    fn beyond(&self, w: &DVector<f64>, level: f64) -> Option<DVector<f64>> {
        let x = self.argmax(w);
        (w.dot(&x) > level).then_some(x)
    }

    fn centre(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    fn scale(&self) -> f64 {
        self.semi_axes.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct PerturbedJson {
    semi_axes: Vec<f64>,
    epsilon: f64,
    #[serde(default = "default_exponent")]
    exponent: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    placement: Option<Isometry>,
}

fn default_exponent() -> u32 {
    4
}

impl TryFrom<PerturbedJson> for PerturbedEllipsoid {
    type Error = Error;

    fn try_from(j: PerturbedJson) -> Result<Self> {
        let placement = j.placement.unwrap_or_else(|| Isometry::identity(j.semi_axes.len()));
        PerturbedEllipsoid::new(j.semi_axes, j.epsilon, j.exponent, placement)
    }
}

impl From<PerturbedEllipsoid> for PerturbedJson {
    fn from(b: PerturbedEllipsoid) -> Self {
        PerturbedJson {
            semi_axes: b.semi_axes,
            epsilon: b.epsilon,
            exponent: b.exponent,
            placement: Some(b.placement),
        }
    }
}
