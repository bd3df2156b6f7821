//! Dense symmetric eigendecomposition, tolerant rank counting and
//! orthonormal frame completion.
//!
//! Everything here works on small dynamic matrices (a few dozen rows at
//! most). The eigensolver is a cyclic Jacobi iteration; the singular value
//! routine is its one-sided (Hestenes) variant, which keeps the smallest
//! singular directions accurate without forming `MᵀM`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative off-diagonal threshold used when callers have no preference.
pub const DEFAULT_EIG_TOL: f64 = 1e-14;

const MAX_SWEEPS: usize = 100;

/// A square matrix that is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetrizes `m` by averaging it with its transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// `Rᵀ·S·R`, re-symmetrized.
    pub fn congruent(&self, r: &DMatrix<f64>) -> SymMatrix {
        let m = r.transpose() * &self.0 * r;
        SymMatrix::new(m).expect("congruence of a square matrix is square")
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigenvalues in non-increasing order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Iterates until the off-diagonal Frobenius mass drops below
/// `tol · ‖A‖_F`. Output is sorted descending (ties by original index) and
/// each eigenvector is signed so its largest-magnitude entry is positive.
pub fn eig_sym(a: &SymMatrix, tol: f64) -> Result<EigenDecomp> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let fro = m.norm();

    if fro > 0.0 {
        let threshold = tol * fro;
        let mut converged = false;
        for sweep in 0..MAX_SWEEPS {
            if off_diagonal_norm(&m) <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let g = 100.0 * apq.abs();
                    if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                        m[(p, q)] = 0.0;
                        m[(q, p)] = 0.0;
                        continue;
                    }
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&m) > threshold {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));

    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src).clone_owned();
        let mut lead = 0;
        for i in 1..n {
            if vec[i].abs() > vec[lead].abs() {
                lead = i;
            }
        }
        if vec[lead] < 0.0 {
            vec.neg_mut();
        }
        vectors.set_column(col, &vec);
    }
    Ok(EigenDecomp { values, vectors })
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize) {
    let n = m.nrows();
    let apq = m[(p, q)];
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let np = c * arp - s * arq;
        let nq = c * arq + s * arp;
        m[(r, p)] = np;
        m[(p, r)] = np;
        m[(r, q)] = nq;
        m[(q, r)] = nq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = c * vrp - s * vrq;
        v[(r, q)] = s * vrp + c * vrq;
    }
}

/// Counts of positive, negative and (numerically) zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

/// An eigenvalue is zero iff `|λ| ≤ tol_rel · max|λ|`; an all-zero list is
/// entirely kernel.
pub fn signature(eigs: &[f64], tol_rel: f64) -> Signature {
    let max = eigs.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut sig = Signature {
        pos: 0,
        neg: 0,
        zero: 0,
    };
    for &l in eigs {
        if max == 0.0 || l.abs() <= tol_rel * max {
            sig.zero += 1;
        } else if l > 0.0 {
            sig.pos += 1;
        } else {
            sig.neg += 1;
        }
    }
    sig
}

/// Max-entry deviation of `QᵀQ` from the identity.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    let mut err = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

/// Extends an orthonormal list to an orthonormal basis of `R^n`.
///
/// The given vectors become the leading columns. Remaining columns are
/// picked greedily from the standard basis (largest residual after
/// projection, lowest index on ties), so an empty input yields the identity.
pub fn complete_frame(vectors: &[DVector<f64>], n: usize) -> Result<DMatrix<f64>> {
    if vectors.len() > n {
        return Err(Error::NotOrthonormal);
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        cols.push(v.clone());
    }
    if !cols.is_empty() && orthonormality_error(&DMatrix::from_columns(&cols)) > 1e-10 {
        return Err(Error::NotOrthonormal);
    }

    while cols.len() < n {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for i in 0..n {
            let mut r = DVector::<f64>::zeros(n);
            r[i] = 1.0;
            // two passes of Gram–Schmidt
            for _ in 0..2 {
                for c in &cols {
                    let d = c.dot(&r);
                    r.axpy(-d, c, 1.0);
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("n > 0 when columns are missing");
        cols.push(r / norm);
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Singular values (descending) and right singular vectors of `m`.
///
/// One-sided Jacobi on the columns of `m`; the columns of the returned
/// matrix pair with the returned singular values.
pub fn svd_right(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let cols = m.ncols();
    let mut u = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let eps = 1e-15;
    // columns this small are numerically zero; rotating them never settles
    let negligible = (eps * m.norm()).powi(2);

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0
                    || alpha.min(beta) <= negligible
                    || gamma.abs() <= eps * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..u.nrows() {
                    let up = u[(r, p)];
                    let uq = u[(r, q)];
                    u[(r, p)] = c * up - s * uq;
                    u[(r, q)] = s * up + c * uq;
                }
                for r in 0..cols {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = c * vp - s * vq;
                    v[(r, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = (0..cols).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let values = DVector::from_iterator(cols, order.iter().map(|&i| norms[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| v.column(i).clone_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}
