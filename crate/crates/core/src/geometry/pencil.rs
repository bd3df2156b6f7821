use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{complete_frame, eig_sym, SymMatrix, DEFAULT_EIG_TOL};
use crate::quadric::{Hyperplane, QuadricCoeffs};

use super::fit::quadric_nullspace;

/// One member of the pencil through two hyperplane sections.
#[derive(Debug, Clone, Serialize)]
pub struct PencilResult {
    /// Member orthogonal (in the Frobenius sense) to the plane pair,
    /// scaled to `−1` at the centre of `H₁ ∩ H₂`'s trace.
    #[serde(rename = "Q0")]
    pub q0: QuadricCoeffs,
    /// The plane pair `2·h₁·h₂`.
    #[serde(rename = "Q1")]
    pub q1: QuadricCoeffs,
    pub mu: f64,
    /// `Q0 + mu·Q1`, passing through `v`.
    #[serde(rename = "Q")]
    pub q: QuadricCoeffs,
    pub nullspace_dim: usize,
}

type Triple = (DMatrix<f64>, DVector<f64>, f64);

fn flat(t: &Triple) -> DVector<f64> {
    let n = t.1.len();
    let mut out = Vec::with_capacity(n * n + n + 1);
    out.extend(t.0.iter());
    out.extend(t.1.iter().map(|v| 2.0 * v));
    out.push(t.2);
    DVector::from_vec(out)
}

fn combine(x: &Triple, s: f64, y: &Triple, t: f64) -> Triple {
    (&x.0 * s + &y.0 * t, &x.1 * s + &y.1 * t, x.2 * s + y.2 * t)
}

fn eval(t: &Triple, x: &DVector<f64>) -> f64 {
    x.dot(&(&t.0 * x)) + 2.0 * t.1.dot(x) + t.2
}

/// `2·(u₁·x − δ₁)(u₂·x − δ₂)` as a coefficient triple.
fn plane_pair(h1: &Hyperplane, h2: &Hyperplane) -> Triple {
    let (u1, u2) = (h1.normal(), h2.normal());
    let a = u1 * u2.transpose() + u2 * u1.transpose();
    let b = -(u1 * h2.delta() + u2 * h1.delta());
    (a, b, 2.0 * h1.delta() * h2.delta())
}

/// Value of `q` at the centre of its restriction to `H₁ ∩ H₂`.
///
/// Returns `None` when the restriction has no usable centre (the planes are
/// parallel, or the restricted quadratic part is singular).
fn value_at_restricted_centre(q: &Triple, h1: &Hyperplane, h2: &Hyperplane) -> Option<f64> {
    let n = h1.dim();
    let (u1, u2) = (h1.normal(), h2.normal());
    let cos = u1.dot(u2);
    let det = 1.0 - cos * cos;
    if det <= 1e-12 {
        return None;
    }
    // point on both planes within span(u₁, u₂)
    let a1 = (h1.delta() - cos * h2.delta()) / det;
    let a2 = (h2.delta() - cos * h1.delta()) / det;
    let p = u1 * a1 + u2 * a2;
    if n == 2 {
        return Some(eval(q, &p));
    }
    let e2 = (u2 - u1 * cos) / det.sqrt();
    let frame = complete_frame(&[u1.clone(), e2], n).ok()?;
    let g = frame.columns(2, n - 2).into_owned();

    let a = SymMatrix::new(g.transpose() * &q.0 * &g).ok()?;
    let b = g.transpose() * (&q.0 * &p + &q.1);
    let eig = eig_sym(&a, DEFAULT_EIG_TOL).ok()?;
    let lmax = eig.values.amax();
    if lmax == 0.0 {
        return None;
    }
    let mut z = DVector::zeros(n - 2);
    for (i, &l) in eig.values.iter().enumerate() {
        if l.abs() <= 1e-9 * lmax {
            return None;
        }
        let v = eig.vectors.column(i);
        z -= v * (v.dot(&b) / l);
    }
    Some(eval(q, &(p + g * z)))
}

/// Quadric through `E₁ ∪ E₂ ∪ {v}`, where the `Eᵢ` are samples of two
/// hyperplane sections sharing their trace on `H₁ ∩ H₂`.
///
/// The quadrics through the samples form a two-dimensional space spanned by
/// the plane pair `h₁h₂` and one more member; `v` picks the member.
pub fn pencil_through(
    e1: &[DVector<f64>],
    e2: &[DVector<f64>],
    h1: &Hyperplane,
    h2: &Hyperplane,
    v: &DVector<f64>,
    tol: f64,
) -> Result<PencilResult> {
    let n = h1.dim();
    check_dim(n, h2.dim())?;
    check_dim(n, v.len())?;
    if e1.is_empty() || e2.is_empty() {
        return Err(Error::InvalidInput("both sections need samples".into()));
    }
    let scale = 1.0 + v.norm();
    if h1.signed_distance(v).abs() <= tol * scale || h2.signed_distance(v).abs() <= tol * scale {
        return Err(Error::PointOnHyperplane);
    }
    for (h, pts) in [(h1, e1), (h2, e2)] {
        for p in pts {
            check_dim(n, p.len())?;
            if h.signed_distance(p).abs() > 1e-6 * (1.0 + p.norm()) {
                return Err(Error::InvalidInput("section sample off its hyperplane".into()));
            }
        }
    }

    let points: Vec<DVector<f64>> = e1.iter().chain(e2.iter()).cloned().collect();
    let (basis, _) = quadric_nullspace(&points, tol)?;
    if basis.len() != 2 {
        return Err(Error::PencilDimension { found: basis.len() });
    }

    let pair = plane_pair(h1, h2);
    let pair_flat = flat(&pair);
    let pair_norm2 = pair_flat.norm_squared();
    // the basis member least parallel to the plane pair completes it
    let mut best: Option<(f64, Triple)> = None;
    for t in &basis {
        let f = flat(t);
        let rest = &f - &pair_flat * (f.dot(&pair_flat) / pair_norm2);
        let ratio = rest.norm() / f.norm();
        if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            best = Some((ratio, t.clone()));
        }
    }
    let (_, other) = best.expect("two basis members");

    // Frobenius-orthogonalize the quadratic part against the plane pair
    let lam = -other.0.dot(&pair.0) / pair.0.norm_squared();
    let mut q0 = combine(&other, 1.0, &pair, lam);
    let norm0 = flat(&q0).norm();
    let s = match value_at_restricted_centre(&q0, h1, h2) {
        Some(val) if val.abs() > 1e-9 * norm0 => -1.0 / val,
        _ => 1.0 / norm0,
    };
    q0 = combine(&q0, s, &pair, 0.0);

    let qb_v = eval(&pair, v);
    let mu = -eval(&q0, v) / qb_v;
    let q = combine(&q0, 1.0, &pair, mu);

    let mk = |t: Triple| QuadricCoeffs::from_parts(t.0, t.1.iter().copied().collect(), t.2);
    Ok(PencilResult {
        q0: mk(q0)?,
        q1: mk(pair)?,
        mu,
        q: mk(q)?,
        nullspace_dim: basis.len(),
    })
}
