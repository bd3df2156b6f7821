use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::svd_right;
use crate::quadric::QuadricCoeffs;

/// Relative singular-value threshold separating the nullspace.
pub const DEFAULT_FIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Unit coefficient norm (see [`QuadricCoeffs::coeff_norm`]).
    pub coeffs: QuadricCoeffs,
    /// Largest `|Q(p)| / (‖Q‖·‖φ(p)‖)` over the input points, where `φ` is
    /// the monomial vector in centred, rescaled coordinates. Scale free, so
    /// a far-away sample does not dominate.
    pub residual: f64,
}

/// Length of the monomial vector `(ξ_iξ_k for i ≤ k, ξ_i, 1)`.
pub fn feature_dim(n: usize) -> usize {
    n * (n + 1) / 2 + n + 1
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Points are centred and rescaled before building features so the
/// singular vectors stay well conditioned. Medians keep a few distant
/// samples (long rays in unbounded slices) from setting the scale.
struct Normalization {
    centre: DVector<f64>,
    scale: f64,
}

impl Normalization {
    fn of(points: &[DVector<f64>], n: usize) -> Self {
        let centre = DVector::from_fn(n, |i, _| median(points.iter().map(|p| p[i]).collect()));
        let spread = median(points.iter().map(|p| (p - &centre).norm()).collect());
        let scale = if spread > 0.0 { 1.0 / spread } else { 1.0 };
        Normalization { centre, scale }
    }

    /// Unit-length monomial row of `p`.
    fn features(&self, p: &DVector<f64>) -> Vec<f64> {
        let n = p.len();
        let x = (p - &self.centre) * self.scale;
        let mut row = Vec::with_capacity(feature_dim(n));
        for i in 0..n {
            for j in i..n {
                row.push(x[i] * x[j]);
            }
        }
        row.extend(x.iter());
        row.push(1.0);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter_mut().for_each(|v| *v /= norm);
        row
    }

    /// Monomial weights in normalized coordinates → `(A, b, c)` in the
    /// original coordinates.
    fn unpack(&self, w: &[f64], n: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
        let mut a = DMatrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                if i == j {
                    a[(i, i)] = w[idx];
                } else {
                    a[(i, j)] = 0.5 * w[idx];
                    a[(j, i)] = 0.5 * w[idx];
                }
                idx += 1;
            }
        }
        let b = DVector::from_fn(n, |i, _| 0.5 * w[idx + i]);
        let c = w[idx + n];

        // Q(x) = Q'(s(x − m))
        let s = self.scale;
        let m = &self.centre;
        let am = &a * m;
        let a_out = &a * (s * s);
        let b_out = &b * s - &am * (s * s);
        let c_out = s * s * m.dot(&am) - 2.0 * s * b.dot(m) + c;
        (a_out, b_out, c_out)
    }
}

fn check_points(points: &[DVector<f64>]) -> Result<usize> {
    let n = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidInput("no points given".into()))?;
    if n == 0 {
        return Err(Error::InvalidInput("points must have positive dimension".into()));
    }
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite point".into()));
        }
    }
    Ok(n)
}

/// Row-normalized monomial matrix with its right singular vectors.
struct Design {
    n: usize,
    norm: Normalization,
    rows: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
}

impl Design {
    fn build(points: &[DVector<f64>]) -> Result<Self> {
        let n = check_points(points)?;
        let norm = Normalization::of(points, n);
        let feats: Vec<Vec<f64>> = points.iter().map(|p| norm.features(p)).collect();
        let rows = DMatrix::from_fn(feats.len(), feature_dim(n), |i, j| feats[i][j]);
        let (sigma, v) = svd_right(&rows)?;
        Ok(Design { n, norm, rows, sigma, v })
    }

    /// Column indices of the null directions, smallest singular value first.
    fn null_columns(&self, tol: f64) -> Vec<usize> {
        let smax = self.sigma[0].max(f64::MIN_POSITIVE);
        (0..self.sigma.len())
            .rev()
            .filter(|&j| self.sigma[j] <= tol * smax)
            .collect()
    }
}

/// Raw coefficient triples `(A, b, c)` spanning the quadrics (and lower
/// degree equations) through every point, plus all singular values.
///
/// A direction counts as null when its singular value is at most
/// `tol · σ_max`.
#[allow(clippy::type_complexity)]
pub fn quadric_nullspace(
    points: &[DVector<f64>],
    tol: f64,
) -> Result<(Vec<(DMatrix<f64>, DVector<f64>, f64)>, Vec<f64>)> {
    let d = Design::build(points)?;
    let basis = d
        .null_columns(tol)
        .into_iter()
        .map(|j| {
            let w: Vec<f64> = d.v.column(j).iter().copied().collect();
            d.norm.unpack(&w, d.n)
        })
        .collect();
    Ok((basis, d.sigma.iter().copied().collect()))
}

/// Least-squares quadric through `points`.
///
/// Takes the smallest right singular vector of the normalized monomial
/// matrix, skipping directions whose quadratic part vanishes under `tol`.
/// Fails with [`Error::RankDeficient`] when more than one direction is
/// null, i.e. the points do not pin down a unique quadric.
pub fn fit_quadric(points: &[DVector<f64>], tol: f64) -> Result<FitResult> {
    let d = Design::build(points)?;
    let nullity = d.null_columns(tol).len();
    if nullity > 1 {
        return Err(Error::RankDeficient { nullity });
    }
    let quad = d.n * (d.n + 1) / 2;
    for j in (0..d.sigma.len()).rev() {
        let w = d.v.column(j);
        if w.rows(0, quad).amax() <= tol {
            continue;
        }
        let w: Vec<f64> = w.iter().copied().collect();
        let (a, b, c) = d.norm.unpack(&w, d.n);
        let Ok(q) = QuadricCoeffs::from_parts(a, b.iter().copied().collect(), c) else {
            continue;
        };
        let flat = q.to_flat();
        let lead = flat.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
        let q = q.scale_equation(lead.signum() / q.coeff_norm())?;
        let residual = (&d.rows * DVector::from_vec(w)).amax();
        return Ok(FitResult { coeffs: q, residual });
    }
    Err(Error::RankDeficient { nullity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonicalize, CanonicalForm, Family, DEFAULT_TOL_REL};
    use crate::quadric::tests::random_isometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_circle_points() {
        let pts: Vec<_> = (0..12)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 12.0;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect();
        let fit = fit_quadric(&pts, DEFAULT_FIT_TOL).unwrap();
        assert!(fit.residual <= 1e-10);
        let q = &fit.coeffs;
        // proportional to x² + y² − 1
        let ratio = q.a()[(0, 0)];
        assert!((q.a()[(1, 1)] - ratio).abs() < 1e-12);
        assert!((q.c() + ratio).abs() < 1e-12);
        assert!(q.a()[(0, 1)].abs() < 1e-12 && q.b().amax() < 1e-12);
    }

    #[test]
    fn ellipsoid_under_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let base = CanonicalForm::standard(Family::A, 3, 3, 3, vec![0.5, 1.0, 3.0]).unwrap();
        let t = random_isometry(&mut rng, 3, 4.0);
        let q = base.to_coeffs().transform(&t).unwrap();
        let f = canonicalize(&q, DEFAULT_TOL_REL).unwrap();
        let pts = f.sample_locus(&mut rng, 30, 2.0);
        let fit = fit_quadric(&pts, DEFAULT_FIT_TOL).unwrap();
        assert!(fit.residual <= 1e-9, "{}", fit.residual);
        let g = canonicalize(&fit.coeffs, DEFAULT_TOL_REL).unwrap();
        assert_eq!((g.family, g.k), (Family::A, 3));
    }

    #[test]
    fn collinear_points_are_rank_deficient() {
        let pts: Vec<_> = (0..10)
            .map(|i| DVector::from_vec(vec![i as f64, 2.0 * i as f64 + 1.0]))
            .collect();
        assert!(matches!(
            fit_quadric(&pts, DEFAULT_FIT_TOL),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let pts = vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])];
        assert!(matches!(
            fit_quadric(&pts, DEFAULT_FIT_TOL),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn noisy_points_keep_a_quadric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<_> = (0..40)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let e: f64 = rng.random_range(-1e-3..1e-3);
                DVector::from_vec(vec![2.0 * t.cos() + e, t.sin() - e])
            })
            .collect();
        let fit = fit_quadric(&pts, DEFAULT_FIT_TOL).unwrap();
        assert!(fit.residual > 1e-6 && fit.residual < 1e-2);
        let g = canonicalize(&fit.coeffs, DEFAULT_TOL_REL).unwrap();
        assert_eq!(g.family, Family::A);
    }
}
