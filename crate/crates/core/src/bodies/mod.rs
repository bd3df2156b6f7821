//! Convex bodies used as test subjects for section scans: line-free quadric
//! regions and a smooth non-quadric perturbation of the ellipsoid.
//!
//! Each model is described in its own canonical coordinates and placed in
//! space by a rigid motion. Membership goes through a convex indicator
//! (`≤ 0` inside); hyperplane questions go through the support function.

mod delta;
mod perturbed;
mod quadric_body;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quadric::{Hyperplane, Isometry, QuadricCoeffs};

pub use delta::DeltaField;
pub use perturbed::PerturbedEllipsoid;
pub use quadric_body::{QuadricBody, QuadricShape};

/// Rays that travel further than this many body scales never exit.
pub const RAY_CAP: f64 = 1e6;
/// Relative bisection tolerance on the ray parameter.
pub const DEFAULT_RAY_TOL: f64 = 1e-12;
/// A hyperplane within this distance of the body counts as supporting it.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Body queries in canonical coordinates.
pub(crate) trait LocalShape {
    fn dim(&self) -> usize;
    /// Canonical coordinates → space.
    fn placement(&self) -> &Isometry;
    /// Convex, `≤ 0` exactly on the body.
    fn indicator(&self, xi: &DVector<f64>) -> f64;
    /// `sup ω·ξ` over the body, possibly `+∞`.
    fn support(&self, w: &DVector<f64>) -> f64;
    /// A point of the body with `ω·ξ > level`, if there is one.
    fn beyond(&self, w: &DVector<f64>, level: f64) -> Option<DVector<f64>>;
    /// Stored interior point.
    fn centre(&self) -> DVector<f64>;
    /// Typical length, used to bracket rays.
    fn scale(&self) -> f64;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum ConvexBody {
    Quadric(QuadricBody),
    Perturbed(PerturbedEllipsoid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceStatus {
    /// The hyperplane meets the interior.
    Proper,
    /// The hyperplane touches the body without entering it.
    Support,
    Miss,
}

#[derive(Debug, Clone)]
pub struct Slice {
    pub status: SliceStatus,
    /// Distance from the hyperplane to the body when they do not meet.
    pub distance: f64,
    /// Interior point of the body lying on the hyperplane.
    pub interior: Option<DVector<f64>>,
}

impl From<QuadricBody> for ConvexBody {
    fn from(b: QuadricBody) -> Self {
        ConvexBody::Quadric(b)
    }
}

impl From<PerturbedEllipsoid> for ConvexBody {
    fn from(b: PerturbedEllipsoid) -> Self {
        ConvexBody::Perturbed(b)
    }
}

impl ConvexBody {
    fn local(&self) -> &dyn LocalShape {
        match self {
            ConvexBody::Quadric(b) => b,
            ConvexBody::Perturbed(b) => b,
        }
    }

    pub fn dim(&self) -> usize {
        self.local().dim()
    }

    pub fn placement(&self) -> &Isometry {
        self.local().placement()
    }

    pub fn scale(&self) -> f64 {
        self.local().scale()
    }

    /// Boundary quadric for quadric bodies.
    pub fn boundary_quadric(&self) -> Option<&QuadricCoeffs> {
        match self {
            ConvexBody::Quadric(b) => Some(b.boundary()),
            ConvexBody::Perturbed(_) => None,
        }
    }

    fn to_local(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.placement();
        p.rotation().tr_mul(&(x - p.translation_part()))
    }

    /// Convex signed indicator, `≤ 0` exactly on the body.
    ///
    /// # Panics
    /// If `x` has the wrong dimension.
    pub fn indicator(&self, x: &DVector<f64>) -> f64 {
        self.local().indicator(&self.to_local(x))
    }

    /// Closed-set membership.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.indicator(x) <= 0.0
    }

    pub fn interior_point(&self) -> DVector<f64> {
        self.placement().apply(&self.local().centre())
    }

    /// `sup w·x` over the body (`+∞` when unbounded in direction `w`).
    pub fn support(&self, w: &DVector<f64>) -> f64 {
        let p = self.placement();
        self.local().support(&p.rotation().tr_mul(w)) + w.dot(p.translation_part())
    }

    /// A point of the body with `w·x > level`, if one exists.
    pub fn point_beyond(&self, w: &DVector<f64>, level: f64) -> Option<DVector<f64>> {
        let p = self.placement();
        self.local()
            .beyond(&p.rotation().tr_mul(w), level - w.dot(p.translation_part()))
            .map(|xi| p.apply(&xi))
    }

    /// Boundary crossing of the ray `origin + t·direction`, `t > 0`.
    ///
    /// Doubles `t` from the body scale until the ray leaves, then bisects
    /// until the bracket on `t` is narrower than `tol` or than float
    /// resolution allows.
    pub fn boundary_raycast(&self, origin: &DVector<f64>, direction: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        check_dim(self.dim(), origin.len())?;
        check_dim(self.dim(), direction.len())?;
        let norm = direction.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("ray direction must be nonzero".into()));
        }
        let d = direction / norm;
        if self.indicator(origin) >= 0.0 {
            return Err(Error::InvalidInput("ray origin must be interior".into()));
        }
        let at = |t: f64| origin + &d * t;
        let scale = self.scale();
        let (mut lo, mut hi) = (0.0, scale);
        while self.contains(&at(hi)) {
            lo = hi;
            hi *= 2.0;
            if hi > RAY_CAP * scale {
                return Err(Error::RayNeverExits);
            }
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.contains(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(at(0.5 * (lo + hi)))
    }

    /// How the hyperplane meets the body, with an interior point of the
    /// slice when it is proper.
    pub fn slice(&self, h: &Hyperplane) -> Result<Slice> {
        check_dim(self.dim(), h.dim())?;
        let x0 = self.interior_point();
        let u = h.normal();
        let offset = h.delta() - u.dot(&x0);
        if offset == 0.0 {
            return Ok(self.centred_slice(h, x0));
        }
        let s = offset.signum();
        let w = u * s;
        let level = s * h.delta();
        let gap = self.support(&w) - level;
        if gap > SUPPORT_TOL {
            if let Some(x1) = self.point_beyond(&w, level) {
                let tau = offset / u.dot(&(&x1 - &x0));
                let p = h.project(&(&x0 + (&x1 - &x0) * tau));
                if self.indicator(&p) < 0.0 {
                    return Ok(self.centred_slice(h, p));
                }
            }
        }
        let distance = (-gap).max(0.0);
        let status = if distance <= SUPPORT_TOL { SliceStatus::Support } else { SliceStatus::Miss };
        Ok(Slice {
            status,
            distance,
            interior: None,
        })
    }

    /// Moves `p` towards chord midpoints along the frame axes, which keeps
    /// the ray fan from bunching up on one side of the slice. Each step is
    /// capped at the body scale: long chords of unbounded slices would
    /// otherwise drag `p` far from the curved part of the section.
    fn centred_slice(&self, h: &Hyperplane, mut p: DVector<f64>) -> Slice {
        let reach = self.scale();
        for _ in 0..2 {
            for axis in h.frame().column_iter() {
                let axis = axis.into_owned();
                let fwd = self.boundary_raycast(&p, &axis, DEFAULT_RAY_TOL);
                let back = self.boundary_raycast(&p, &(-&axis), DEFAULT_RAY_TOL);
                if let (Ok(a), Ok(b)) = (fwd, back) {
                    let mut step = (a + b) * 0.5 - &p;
                    let len = step.norm();
                    if len > reach {
                        step *= reach / len;
                    }
                    let next = h.project(&(&p + step));
                    if self.indicator(&next) < 0.0 {
                        p = next;
                    }
                }
            }
        }
        Slice {
            status: SliceStatus::Proper,
            distance: 0.0,
            interior: Some(p),
        }
    }

    /// `m` boundary points on the hyperplane, by ray casting within it from
    /// an interior point of the slice in random directions. Rays that never
    /// exit are redrawn, up to `4m` attempts in total.
    pub fn section_boundary_sample<R: Rng + ?Sized>(
        &self,
        h: &Hyperplane,
        m: usize,
        tol: f64,
        rng: &mut R,
    ) -> Result<Vec<DVector<f64>>> {
        let slice = self.slice(h)?;
        let Some(p) = slice.interior else {
            return Err(Error::HyperplaneMissesInterior { distance: slice.distance });
        };
        let k = self.dim() - 1;
        let mut out = Vec::with_capacity(m);
        for _ in 0..4 * m {
            if out.len() == m {
                break;
            }
            let g = DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal));
            if g.norm() == 0.0 {
                continue;
            }
            let d = h.frame() * g.normalize();
            match self.boundary_raycast(&p, &d, tol) {
                Ok(x) => out.push(x),
                Err(Error::RayNeverExits) => continue,
                Err(e) => return Err(e),
            }
        }
        if out.len() < m {
            return Err(Error::RayNeverExits);
        }
        Ok(out)
    }
}
