//! Reduction of a quadric to one of the five canonical families.
//!
//! In canonical coordinates `ξ` the families read (all `a_i > 0`):
//!
//! | family | equation |
//! |--------|----------|
//! | A      | `a_1ξ_1² + … + a_kξ_k² = 1` |
//! | B      | `a_1ξ_1² + … + a_kξ_k² − a_{k+1}ξ_{k+1}² − … − a_rξ_r² = 1` |
//! | C      | `a_1ξ_1² + … + a_kξ_k² = 0` |
//! | D      | `a_1ξ_1² + … + a_kξ_k² − a_{k+1}ξ_{k+1}² − … − a_rξ_r² = 0` |
//! | E      | `a_1ξ_1² + … + a_kξ_k² − a_{k+1}ξ_{k+1}² − … − a_{r−1}ξ_{r−1}² = ξ_r` |
//!
//! Coordinates past `r` (past `k` for A and C) are free. Families C and D
//! are homogeneous, so their coefficients are normalized to `max a_i = 1`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complete_frame, eig_sym, SymMatrix, DEFAULT_EIG_TOL};
use crate::quadric::{clean, rows_of, Isometry, QuadricCoeffs};

/// Default relative threshold for zero eigenvalues, zero constants and
/// vanishing kernel linear terms.
pub const DEFAULT_TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E => "E",
        };
        f.write_str(s)
    }
}

/// A quadric in canonical form plus the motion and scale linking it back to
/// the input: `Q(x) = eq_scale · Q_canonical(to_canonical(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CanonicalJson", into = "CanonicalJson")]
pub struct CanonicalForm {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub coeffs: Vec<f64>,
    pub to_canonical: Isometry,
    pub eq_scale: f64,
}

impl CanonicalForm {
    /// A form in its own canonical coordinates (identity motion, unit scale).
    pub fn standard(family: Family, n: usize, k: usize, r: usize, coeffs: Vec<f64>) -> Result<Self> {
        let f = CanonicalForm {
            family,
            n,
            k,
            r,
            coeffs,
            to_canonical: Isometry::identity(n),
            eq_scale: 1.0,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("canonical form: {msg}")));
        let (n, k, r) = (self.n, self.k, self.r);
        if self.to_canonical.dim() != n {
            return bad("isometry dimension");
        }
        if self.eq_scale == 0.0 || !self.eq_scale.is_finite() {
            return bad("eq_scale must be nonzero");
        }
        if self.coeffs.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad("coefficients must be positive");
        }
        let ok = match self.family {
            Family::A | Family::C => 1 <= k && k == r && r <= n,
            Family::B => 1 <= k && k < r && r <= n,
            Family::D => 1 <= k && k < r && r <= n && k <= r - k,
            Family::E => 1 <= k && k < r && r <= n && k + 1 + k >= r,
        };
        if !ok {
            return bad("index constraints violated");
        }
        if self.coeffs.len() != self.square_count() {
            return bad("coefficient count");
        }
        Ok(())
    }

    /// Number of squared terms in the equation.
    pub fn square_count(&self) -> usize {
        match self.family {
            Family::A | Family::C => self.k,
            Family::B | Family::D => self.r,
            Family::E => self.r - 1,
        }
    }

    /// Signed coefficient of `ξ_i²` (zero for free coordinates).
    pub fn signed_coeff(&self, i: usize) -> f64 {
        if i < self.k {
            self.coeffs[i]
        } else if i < self.square_count() {
            -self.coeffs[i]
        } else {
            0.0
        }
    }

    /// Number of coordinates the equation actually involves.
    pub fn base_dim(&self) -> usize {
        self.r
    }

    /// Left side minus right side of the canonical equation at `ξ`.
    pub fn equation_value(&self, xi: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.square_count() {
            s += self.signed_coeff(i) * xi[i] * xi[i];
        }
        match self.family {
            Family::A | Family::B => s - 1.0,
            Family::C | Family::D => s,
            Family::E => s - xi[self.r - 1],
        }
    }

    /// Canonical equation in canonical coordinates, as coefficients.
    pub fn to_coeffs(&self) -> QuadricCoeffs {
        canonical_to_coeffs(self)
    }

    /// Random points of the real locus, mapped back to input coordinates.
    ///
    /// Free and sampled coordinates are drawn from `[−spread, spread]`.
    pub fn sample_locus<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, spread: f64) -> Vec<DVector<f64>> {
        let back = self.to_canonical.inverse();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            if let Some(xi) = self.sample_canonical(rng, spread) {
                out.push(back.apply(&xi));
            }
        }
        out
    }

    fn sample_canonical<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Option<DVector<f64>> {
        let n = self.n;
        let mut xi = DVector::from_fn(n, |_, _| rng.random_range(-spread..spread));
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        match self.family {
            Family::A => {
                let d: Vec<f64> = (0..self.k).map(|_| StandardNormal.sample(rng)).collect();
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return None;
                }
                for i in 0..self.k {
                    xi[i] = d[i] / norm / self.coeffs[i].sqrt();
                }
            }
            Family::C => {
                for i in 0..self.k {
                    xi[i] = 0.0;
                }
            }
            Family::B | Family::D => {
                let rhs = if self.family == Family::B { 1.0 } else { 0.0 };
                let rest: f64 = (1..self.r).map(|i| self.signed_coeff(i) * xi[i] * xi[i]).sum();
                let sq = (rhs - rest) / self.coeffs[0];
                if sq < 0.0 {
                    return None;
                }
                xi[0] = sign * sq.sqrt();
            }
            Family::E => {
                let s: f64 = (0..self.r - 1).map(|i| self.signed_coeff(i) * xi[i] * xi[i]).sum();
                xi[self.r - 1] = s;
            }
        }
        Some(xi)
    }
}

/// Coefficients of the canonical equation in canonical coordinates.
pub fn canonical_to_coeffs(f: &CanonicalForm) -> QuadricCoeffs {
    let n = f.n;
    let diag: Vec<f64> = (0..n).map(|i| f.signed_coeff(i)).collect();
    let mut b = DVector::zeros(n);
    let c = match f.family {
        Family::A | Family::B => -1.0,
        Family::C | Family::D => 0.0,
        Family::E => {
            b[f.r - 1] = -0.5;
            0.0
        }
    };
    QuadricCoeffs::new(SymMatrix::from_diagonal(&diag), b, c)
        .expect("canonical forms have a nonzero quadratic part")
}

/// Finds a motion and equation scale taking `q` to canonical form.
///
/// `tol_rel` decides which eigenvalues, constants and kernel linear terms
/// count as zero.
pub fn canonicalize(q: &QuadricCoeffs, tol_rel: f64) -> Result<CanonicalForm> {
    let n = q.dim();
    let eig = eig_sym(q.a(), DEFAULT_EIG_TOL)?;
    let lam = eig.values.as_slice();
    let max = lam.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if max == 0.0 {
        return Err(Error::DegreeTooLow);
    }
    let thr = tol_rel * max;
    let nonzero: Vec<usize> = (0..n).filter(|&i| lam[i].abs() > thr).collect();
    let kernel: Vec<usize> = (0..n).filter(|&i| lam[i].abs() <= thr).collect();
    let col = |i: usize| eig.vectors.column(i).clone_owned();

    // centre along the non-degenerate directions
    let mut t = DVector::zeros(n);
    for &i in &nonzero {
        let v = col(i);
        t.axpy(-v.dot(q.b()) / lam[i], &v, 1.0);
    }
    let mut g_vec = DVector::zeros(n);
    for &j in &kernel {
        let v = col(j);
        g_vec.axpy(v.dot(q.b()), &v, 1.0);
    }
    let g = g_vec.norm();
    let p = nonzero.iter().filter(|&&i| lam[i] > 0.0).count();
    let neg = nonzero.len() - p;

    let by_magnitude = |idx: Vec<usize>| -> Vec<usize> {
        let mut idx = idx;
        idx.sort_by(|&i, &j| lam[j].abs().total_cmp(&lam[i].abs()).then(i.cmp(&j)));
        idx
    };
    let split = |sigma: f64| -> (Vec<usize>, Vec<usize>) {
        let pos = nonzero.iter().copied().filter(|&i| sigma * lam[i] > 0.0).collect();
        let negs = nonzero.iter().copied().filter(|&i| sigma * lam[i] < 0.0).collect();
        (by_magnitude(pos), by_magnitude(negs))
    };

    let lin_thr = tol_rel * (q.a().frobenius() + q.b().norm());
    if !kernel.is_empty() && g > lin_thr {
        let sigma = if p >= neg { 1.0 } else { -1.0 };
        let (pos, negs) = split(sigma);
        let ghat = &g_vec / g;
        let c2 = q.eval_unchecked(&t);
        let x0 = &t - &ghat * (c2 / (2.0 * g));
        let axis = &ghat * (-sigma);

        // remaining kernel directions orthogonal to the linear term
        let vk = DMatrix::from_columns(&kernel.iter().map(|&j| col(j)).collect::<Vec<_>>());
        let gamma = vk.transpose() * &ghat;
        let gamma = &gamma / gamma.norm();
        let w = complete_frame(std::slice::from_ref(&gamma), kernel.len())?;
        let mut cols: Vec<DVector<f64>> = pos.iter().chain(negs.iter()).map(|&i| col(i)).collect();
        cols.push(axis);
        for j in 1..kernel.len() {
            cols.push(&vk * w.column(j));
        }
        let coeffs = pos
            .iter()
            .chain(negs.iter())
            .map(|&i| lam[i].abs() / (2.0 * g))
            .collect();
        return finish(Family::E, n, pos.len(), nonzero.len() + 1, coeffs, cols, &x0, 2.0 * g * sigma);
    }

    let c1 = q.eval_unchecked(&t);
    let at = q.a().matrix() * &t;
    let magnitude = t.dot(&at).abs() + 2.0 * q.b().dot(&t).abs() + q.c().abs();
    let kernel_cols = kernel.iter().map(|&j| col(j));

    if c1 != 0.0 && c1.abs() > tol_rel * magnitude {
        // Σ λ_i y_i² + c' = 0  ⇔  Σ (−λ_i / c') y_i² = 1
        let sigma = -c1.signum();
        let (pos, negs) = split(sigma);
        if pos.is_empty() {
            return Err(Error::EmptyRealLocus);
        }
        let family = if negs.is_empty() { Family::A } else { Family::B };
        let coeffs = pos
            .iter()
            .chain(negs.iter())
            .map(|&i| (lam[i] / c1).abs())
            .collect();
        let cols = pos.iter().chain(negs.iter()).map(|&i| col(i)).chain(kernel_cols).collect();
        return finish(family, n, pos.len(), nonzero.len(), coeffs, cols, &t, -c1);
    }

    let (sigma, family) = match (p, neg) {
        (_, 0) => (1.0, Family::C),
        (0, _) => (-1.0, Family::C),
        (p, q) if p <= q => (1.0, Family::D),
        _ => (-1.0, Family::D),
    };
    let (pos, negs) = split(sigma);
    let scale = nonzero.iter().fold(0.0f64, |m, &i| m.max(lam[i].abs()));
    let coeffs = pos
        .iter()
        .chain(negs.iter())
        .map(|&i| lam[i].abs() / scale)
        .collect();
    let cols = pos.iter().chain(negs.iter()).map(|&i| col(i)).chain(kernel_cols).collect();
    finish(family, n, pos.len(), nonzero.len(), coeffs, cols, &t, sigma * scale)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    family: Family,
    n: usize,
    k: usize,
    r: usize,
    coeffs: Vec<f64>,
    cols: Vec<DVector<f64>>,
    x0: &DVector<f64>,
    eq_scale: f64,
) -> Result<CanonicalForm> {
    let p = DMatrix::from_columns(&cols);
    let rot = p.transpose();
    let shift = -(&rot * x0);
    let form = CanonicalForm {
        family,
        n,
        k,
        r,
        coeffs,
        to_canonical: Isometry::new(rot, shift)?,
        eq_scale,
    };
    form.validate()?;
    Ok(form)
}

#[derive(Serialize, Deserialize)]
struct CanonicalJson {
    family: Family,
    n: usize,
    k: usize,
    r: usize,
    a: Vec<f64>,
    #[serde(rename = "R")]
    rot: Vec<Vec<f64>>,
    t: Vec<f64>,
    eq_scale: f64,
}

impl TryFrom<CanonicalJson> for CanonicalForm {
    type Error = Error;
    fn try_from(j: CanonicalJson) -> Result<Self> {
        let n = j.n;
        if j.rot.len() != n || j.rot.iter().any(|row| row.len() != n) || j.t.len() != n {
            return Err(Error::InvalidInput("canonical form: isometry shape".into()));
        }
        let to_canonical = Isometry::new(
            DMatrix::from_fn(n, n, |i, k| j.rot[i][k]),
            DVector::from_vec(j.t),
        )?;
        let f = CanonicalForm {
            family: j.family,
            n,
            k: j.k,
            r: j.r,
            coeffs: j.a,
            to_canonical,
            eq_scale: j.eq_scale,
        };
        f.validate()?;
        Ok(f)
    }
}

impl From<CanonicalForm> for CanonicalJson {
    fn from(f: CanonicalForm) -> Self {
        CanonicalJson {
            family: f.family,
            n: f.n,
            k: f.k,
            r: f.r,
            a: f.coeffs.iter().map(|v| clean(*v)).collect(),
            rot: rows_of(f.to_canonical.rotation()),
            t: f.to_canonical.translation_part().iter().map(|v| clean(*v)).collect(),
            eq_scale: clean(f.eq_scale),
        }
    }
}
