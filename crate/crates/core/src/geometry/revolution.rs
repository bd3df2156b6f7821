use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::orthonormality_error;

pub const DEFAULT_SAMPLES_PER_CIRCLE: usize = 64;

const NESTING_TOL: f64 = 1e-10;

/// Three nested subspaces `L₁ ⊂ L₂ ⊂ L₃` of dimensions `m − 1`, `m`,
/// `m + 1`, each given by orthonormal basis columns.
///
/// Points of `L₂` are spun about the axis `L₁` through the one extra
/// direction that `L₃` adds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct RevolutionSpec {
    l1: DMatrix<f64>,
    l2: DMatrix<f64>,
    l3: DMatrix<f64>,
    /// Unit vector of `L₂ ⊖ L₁`.
    radial: DVector<f64>,
    /// Unit vector of `L₃ ⊖ L₂`.
    normal: DVector<f64>,
}

/// Unit vector of `outer` orthogonal to the columns of `inner`, assuming the
/// codimension is one.
fn extra_direction(inner: &DMatrix<f64>, outer: &DMatrix<f64>) -> DVector<f64> {
    let mut best = DVector::zeros(outer.nrows());
    let mut best_norm = -1.0;
    for col in outer.column_iter() {
        let col = col.into_owned();
        let rest = &col - inner * (inner.transpose() * &col);
        let norm = rest.norm();
        if norm > best_norm {
            best_norm = norm;
            best = rest / norm;
        }
    }
    // one more Gram-Schmidt pass for accuracy
    let best = &best - inner * (inner.transpose() * &best);
    best.normalize()
}

fn residual_outside(basis: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (x - basis * (basis.transpose() * x)).norm()
}

impl RevolutionSpec {
    pub fn new(l1: DMatrix<f64>, l2: DMatrix<f64>, l3: DMatrix<f64>) -> Result<Self> {
        let n = l2.nrows();
        if l1.nrows() != n || l3.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if l1.nrows() != n { l1.nrows() } else { l3.nrows() },
            });
        }
        let m = l2.ncols();
        if m == 0 || l1.ncols() + 1 != m || l3.ncols() != m + 1 || m + 1 > n {
            return Err(Error::InvalidInput(format!(
                "basis sizes must be m-1, m, m+1 with 1 <= m < n; got {}, {}, {} in R^{}",
                l1.ncols(),
                m,
                l3.ncols(),
                n
            )));
        }
        for basis in [&l1, &l2, &l3] {
            if basis.ncols() > 0 && orthonormality_error(basis) > NESTING_TOL {
                return Err(Error::NotOrthonormal);
            }
        }
        for (inner, outer) in [(&l1, &l2), (&l2, &l3)] {
            for col in inner.column_iter() {
                if residual_outside(outer, &col.into_owned()) > NESTING_TOL {
                    return Err(Error::InvalidInput("subspaces are not nested".into()));
                }
            }
        }
        let radial = extra_direction(&l1, &l2);
        let normal = extra_direction(&l2, &l3);
        Ok(RevolutionSpec { l1, l2, l3, radial, normal })
    }

    /// Revolve `⟨e_{m+1}, …⟩`-free coordinates: `L₁ = ⟨e_1..e_{m-1}⟩`,
    /// `L₂ = ⟨e_1..e_m⟩`, `L₃ = ⟨e_1..e_{m+1}⟩` for an arbitrary index list.
    pub fn from_axes(n: usize, axes: &[usize]) -> Result<Self> {
        if axes.len() < 2 || axes.iter().any(|&i| i >= n) {
            return Err(Error::InvalidInput("need at least two axes below n".into()));
        }
        let pick = |cols: &[usize]| {
            DMatrix::from_fn(n, cols.len(), |i, j| if i == cols[j] { 1.0 } else { 0.0 })
        };
        let m = axes.len() - 1;
        Self::new(pick(&axes[..m - 1]), pick(&axes[..m]), pick(axes))
    }

    pub fn ambient_dim(&self) -> usize {
        self.l2.nrows()
    }

    /// `m = dim L₂`.
    pub fn source_dim(&self) -> usize {
        self.l2.ncols()
    }

    pub fn axis(&self) -> &DMatrix<f64> {
        &self.l1
    }

    pub fn source(&self) -> &DMatrix<f64> {
        &self.l2
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.l3
    }

    /// Orthogonal projection onto `L₁`.
    pub fn project_axis(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.l1 * (self.l1.transpose() * x)
    }

    /// Distance from `L₂`.
    pub fn distance_from_source(&self, x: &DVector<f64>) -> f64 {
        residual_outside(&self.l2, x)
    }

    /// Point on the circle `C_y` at angle `theta`; `theta = 0` returns `y`.
    pub fn rotate(&self, y: &DVector<f64>, theta: f64) -> DVector<f64> {
        let z = self.project_axis(y);
        let s = (y - &z).dot(&self.radial);
        let (sin, cos) = theta.sin_cos();
        z + &self.radial * (s * cos) + &self.normal * (s * sin)
    }

    /// Rotates `x ∈ L₃` back into the closed half of `L₂` on the radial side;
    /// `x` lies in the revolution of a set `Y` symmetric about `L₁` iff its
    /// fold lies in `Y`.
    pub fn fold(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.project_axis(x);
        let rho = x.dot(&self.radial).hypot(x.dot(&self.normal));
        z + &self.radial * rho
    }

    /// Mirror image through `L₂` within `L₃`.
    pub fn reflect_through_source(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.normal * (2.0 * x.dot(&self.normal))
    }

    /// Mirror image through `L₁` within `L₂`.
    pub fn reflect_through_axis(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.radial * (2.0 * x.dot(&self.radial))
    }
}

/// Samples the revolution of `points ⊂ L₂` about `L₁` within `L₃`:
/// `samples_per_circle` equally spaced points of each circle `C_y`, in
/// input order, starting with `y` itself.
pub fn revolve(
    points: &[DVector<f64>],
    spec: &RevolutionSpec,
    samples_per_circle: usize,
) -> Result<Vec<DVector<f64>>> {
    if samples_per_circle == 0 {
        return Err(Error::InvalidInput("samples_per_circle must be positive".into()));
    }
    let n = spec.ambient_dim();
    let mut out = Vec::with_capacity(points.len() * samples_per_circle);
    for y in points {
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        let distance = spec.distance_from_source(y);
        if distance > 1e-9 * (1.0 + y.norm()) {
            return Err(Error::OutsideL2 { distance });
        }
        for j in 0..samples_per_circle {
            let theta = TAU * j as f64 / samples_per_circle as f64;
            out.push(spec.rotate(y, theta));
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    #[serde(rename = "L1_basis")]
    l1: Vec<Vec<f64>>,
    #[serde(rename = "L2_basis")]
    l2: Vec<Vec<f64>>,
    #[serde(rename = "L3_basis")]
    l3: Vec<Vec<f64>>,
}

fn columns(vectors: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: v.len() });
        }
    }
    Ok(DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]))
}

impl TryFrom<SpecJson> for RevolutionSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        let n = j
            .l2
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("L2_basis must be non-empty".into()))?;
        RevolutionSpec::new(columns(&j.l1, n)?, columns(&j.l2, n)?, columns(&j.l3, n)?)
    }
}

impl From<RevolutionSpec> for SpecJson {
    fn from(s: RevolutionSpec) -> Self {
        let cols = |m: &DMatrix<f64>| m.column_iter().map(|c| c.iter().copied().collect()).collect();
        SpecJson {
            l1: cols(&s.l1),
            l2: cols(&s.l2),
            l3: cols(&s.l3),
        }
    }
}
