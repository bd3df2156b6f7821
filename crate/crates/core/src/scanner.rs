//! Hyperplane-section scans of convex bodies.
//!
//! For each sampled unit normal `u` the scanner cuts the body with
//! `{x·u = δ(u)}`, samples the boundary of the slice, fits a quadric to the
//! samples and asks whether the fit is a convex quadric. The verdict is
//! evidence gathered at a finite set of directions, not a proof.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, DeltaField, SliceStatus, DEFAULT_RAY_TOL};
use crate::canonical::{canonicalize, Family, DEFAULT_TOL_REL};
use crate::convexity::is_convex_quadric;
use crate::error::{Error, Result};
use crate::geometry::{feature_dim, fit_quadric, section, DEFAULT_FIT_TOL};
use crate::quadric::{Hyperplane, QuadricCoeffs};

/// Residual above which a proper section does not count as a quadric.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const MIN_DIRECTIONS: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n_dirs: usize,
    /// Boundary samples per section; `None` picks four times the number
    /// of quadric coefficients in the section's dimension.
    pub m_pts: Option<usize>,
    pub threshold: f64,
    pub seed: u64,
    pub workers: usize,
    pub fit_tol: f64,
    pub tol_rel: f64,
    pub ray_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            n_dirs: 500,
            m_pts: None,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
            workers: 1,
            fit_tol: DEFAULT_FIT_TOL,
            tol_rel: DEFAULT_TOL_REL,
            ray_tol: DEFAULT_RAY_TOL,
        }
    }
}

impl ScanConfig {
    fn points_for(&self, n: usize) -> usize {
        self.m_pts.unwrap_or(4 * feature_dim(n - 1))
    }

    fn check(&self, n: usize) -> Result<usize> {
        if n < 3 {
            return Err(Error::InvalidInput("scans need ambient dimension ≥ 3".into()));
        }
        if self.n_dirs < MIN_DIRECTIONS {
            return Err(Error::InvalidInput(format!("at least {MIN_DIRECTIONS} directions are required")));
        }
        let m = self.points_for(n);
        let min = 3 * feature_dim(n - 1);
        if m < min {
            return Err(Error::InvalidInput(format!("at least {min} points per section are required")));
        }
        for t in [self.threshold, self.fit_tol, self.tol_rel, self.ray_tol] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput("tolerances must be positive".into()));
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionResult {
    pub index: usize,
    pub u: Vec<f64>,
    pub delta: f64,
    pub status: SliceStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convex_section: Option<bool>,
    /// Sampling or fitting failure on a proper section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DirectionResult {
    fn violates(&self, threshold: f64) -> bool {
        self.error.is_none()
            && self.status == SliceStatus::Proper
            && (self.residual.is_some_and(|r| r > threshold) || self.convex_section == Some(false))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    AllQuadric,
    /// The worst offending direction.
    Violation { index: usize, u: Vec<f64>, residual: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub n_dirs: usize,
    pub m_pts: usize,
    pub threshold: f64,
    pub seed: u64,
    pub proper: usize,
    pub errors: usize,
    pub max_residual: f64,
    pub verdict: Verdict,
    pub per_direction: Vec<DirectionResult>,
}

/// Quasi-uniform unit vectors: a Fibonacci lattice on `S²`, normalized
/// Gaussians in other dimensions.
pub fn scan_directions(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    if n == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z])
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
        let norm = g.norm();
        if norm > 1e-12 {
            out.push(g / norm);
        }
    }
    out
}

/// Independent stream per direction, so results do not depend on how the
/// work is split between threads.
fn direction_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Runs `f` on `0..count` across `workers` threads; results come back in
/// index order.
fn fan_out<T: Send>(count: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, count.max(1));
    if workers == 1 {
        return (0..count).map(f).collect();
    }
    let f = &f;
    let mut tagged: Vec<(usize, T)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..count).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    tagged.sort_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, t)| t).collect()
}

fn hyperplane_for(field: &DeltaField, u: &DVector<f64>) -> Result<(Hyperplane, f64)> {
    let delta = field.value(u);
    Ok((Hyperplane::new(u.clone(), delta)?, delta))
}

/// Boundary samples of a proper section in the hyperplane's frame
/// coordinates, or `None` when the section is not proper.
fn sample_section(
    body: &ConvexBody,
    h: &Hyperplane,
    m: usize,
    ray_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(SliceStatus, Option<Vec<DVector<f64>>>)> {
    let slice = body.slice(h)?;
    if slice.status != SliceStatus::Proper {
        return Ok((slice.status, None));
    }
    let pts = body.section_boundary_sample(h, m, ray_tol, rng)?;
    Ok((SliceStatus::Proper, Some(pts.iter().map(|p| h.to_frame(p)).collect())))
}

fn analyze(body: &ConvexBody, field: &DeltaField, u: &DVector<f64>, index: usize, m: usize, cfg: &ScanConfig) -> DirectionResult {
    let mut out = DirectionResult {
        index,
        u: u.iter().copied().collect(),
        delta: field.value(u),
        status: SliceStatus::Proper,
        residual: None,
        family: None,
        k: None,
        r: None,
        convex_section: None,
        error: None,
    };
    let mut rng = direction_rng(cfg.seed, index);
    let mut run = |out: &mut DirectionResult| -> Result<()> {
        let (h, _) = hyperplane_for(field, u)?;
        let (status, pts) = sample_section(body, &h, m, cfg.ray_tol, &mut rng)?;
        out.status = status;
        let Some(pts) = pts else { return Ok(()) };
        let fit = fit_quadric(&pts, cfg.fit_tol)?;
        out.residual = Some(fit.residual);
        let form = canonicalize(&fit.coeffs, cfg.tol_rel)?;
        out.family = Some(form.family);
        out.k = Some(form.k);
        out.r = Some(form.r);
        out.convex_section = Some(is_convex_quadric(&form).is_some());
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
    }
    out
}

/// Scans `n_dirs` hyperplanes `{x·u = δ(u)}` through the body.
///
/// The verdict is `all_quadric` iff every proper section (that could be
/// sampled and fitted) has residual at most `threshold` and fits a convex
/// quadric. Per-direction failures are recorded in the report.
pub fn scan(body: &ConvexBody, field: &DeltaField, cfg: &ScanConfig) -> Result<ScanReport> {
    let n = body.dim();
    let m = cfg.check(n)?;
    field.validate(n)?;
    let dirs = scan_directions(n, cfg.n_dirs, cfg.seed);
    let per_direction = fan_out(dirs.len(), cfg.workers, |i| analyze(body, field, &dirs[i], i, m, cfg));

    let proper = per_direction.iter().filter(|d| d.status == SliceStatus::Proper).count();
    let errors = per_direction.iter().filter(|d| d.error.is_some()).count();
    let max_residual = per_direction.iter().filter_map(|d| d.residual).fold(0.0, f64::max);
    let worst = per_direction
        .iter()
        .filter(|d| d.violates(cfg.threshold))
        .max_by(|a, b| {
            let (ra, rb) = (a.residual.unwrap_or(0.0), b.residual.unwrap_or(0.0));
            ra.total_cmp(&rb).then(b.index.cmp(&a.index))
        });
    let verdict = match worst {
        None => Verdict::AllQuadric,
        Some(d) => Verdict::Violation {
            index: d.index,
            u: d.u.clone(),
            residual: d.residual.unwrap_or(0.0),
        },
    };
    Ok(ScanReport {
        n,
        n_dirs: cfg.n_dirs,
        m_pts: m,
        threshold: cfg.threshold,
        seed: cfg.seed,
        proper,
        errors,
        max_residual,
        verdict,
        per_direction,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Largest coefficient difference between fitted and analytic sections,
    /// both scaled to unit coefficient norm and sign aligned.
    pub max_deviation: f64,
    pub compared: usize,
    /// Directions that were not proper, degenerate, or failed to sample.
    pub skipped: usize,
}

fn unit_flat(q: &QuadricCoeffs) -> Vec<f64> {
    let s = q.coeff_norm();
    q.to_flat().into_iter().map(|v| v / s).collect()
}

/// Compares the fitted section with the body's own quadric restricted to
/// the same hyperplane, over `cfg.n_dirs` directions.
pub fn cross_section_consistency(body: &ConvexBody, field: &DeltaField, cfg: &ScanConfig) -> Result<ConsistencyReport> {
    let q = body
        .boundary_quadric()
        .ok_or_else(|| Error::InvalidInput("consistency needs a quadric body".into()))?;
    let n = body.dim();
    let m = cfg.check(n)?;
    field.validate(n)?;
    let dirs = scan_directions(n, cfg.n_dirs, cfg.seed);
    let deviations = fan_out(dirs.len(), cfg.workers, |i| -> Option<f64> {
        let mut rng = direction_rng(cfg.seed, i);
        let (h, _) = hyperplane_for(field, &dirs[i]).ok()?;
        let (_, pts) = sample_section(body, &h, m, cfg.ray_tol, &mut rng).ok()?;
        let fit = fit_quadric(&pts?, cfg.fit_tol).ok()?;
        let exact = section(q, &h, cfg.tol_rel).ok()?.coeffs()?;
        let a = unit_flat(&fit.coeffs);
        let b = unit_flat(&exact);
        let sign = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().signum();
        Some(a.iter().zip(&b).map(|(x, y)| (x - sign * y).abs()).fold(0.0, f64::max))
    });
    let compared: Vec<f64> = deviations.iter().flatten().copied().collect();
    Ok(ConsistencyReport {
        max_deviation: compared.iter().copied().fold(0.0, f64::max),
        compared: compared.len(),
        skipped: deviations.len() - compared.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{PerturbedEllipsoid, QuadricBody, QuadricShape};
    use crate::quadric::Isometry;

    fn cfg(n_dirs: usize) -> ScanConfig {
        ScanConfig {
            n_dirs,
            seed: 17,
            ..ScanConfig::default()
        }
    }

    fn ellipsoid() -> ConvexBody {
        QuadricBody::new(QuadricShape::Ellipsoid, vec![0.5, 1.0, 2.0], Isometry::identity(3))
            .unwrap()
            .into()
    }

    #[test]
    fn fibonacci_directions_are_unit_and_spread() {
        let dirs = scan_directions(3, 200, 0);
        for d in &dirs {
            assert!((d.norm() - 1.0).abs() < 1e-14);
        }
        let mean = dirs.iter().fold(DVector::zeros(3), |acc, d| acc + d) / 200.0;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn ellipsoid_central_sections_are_ellipses() {
        let report = scan(&ellipsoid(), &DeltaField::Constant { delta: 0.0 }, &cfg(200)).unwrap();
        assert_eq!(report.proper, 200);
        assert_eq!(report.errors, 0);
        assert!(report.max_residual <= 1e-8, "{}", report.max_residual);
        for d in &report.per_direction {
            assert_eq!((d.family, d.k), (Some(Family::A), Some(2)));
        }
        assert_eq!(report.verdict, Verdict::AllQuadric);
    }

    #[test]
    fn perturbed_ellipsoid_is_flagged() {
        let body: ConvexBody = PerturbedEllipsoid::new(vec![1.0, 1.4, 0.8], 0.1, 4, Isometry::identity(3))
            .unwrap()
            .into();
        let report = scan(&body, &DeltaField::Constant { delta: 0.0 }, &cfg(60)).unwrap();
        assert!(matches!(report.verdict, Verdict::Violation { .. }));
        assert!(report.max_residual >= 1e-3, "{}", report.max_residual);
    }

    #[test]
    fn paraboloid_affine_field() {
        let body: ConvexBody = QuadricBody::standard(QuadricShape::Paraboloid, 3).unwrap().into();
        let field = DeltaField::Affine { w: vec![0.0, 0.0, 1.0], delta0: 0.0 };
        let report = scan(&body, &field, &cfg(100)).unwrap();
        for d in report.per_direction.iter().filter(|d| d.status == SliceStatus::Proper) {
            assert!(matches!(d.family, Some(Family::A) | Some(Family::E)));
        }
        assert_eq!(report.verdict, Verdict::AllQuadric);
    }

    #[test]
    fn workers_do_not_change_the_report() {
        let field = DeltaField::Constant { delta: 0.3 };
        let one = scan(&ellipsoid(), &field, &cfg(40)).unwrap();
        let four = scan(&ellipsoid(), &field, &ScanConfig { workers: 4, ..cfg(40) }).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
    }

    #[test]
    fn sphere_consistency_is_tight() {
        let sphere: ConvexBody = QuadricBody::standard(QuadricShape::Ellipsoid, 3).unwrap().into();
        let rep = cross_section_consistency(&sphere, &DeltaField::Constant { delta: 0.0 }, &cfg(40)).unwrap();
        assert_eq!(rep.compared, 40);
        assert!(rep.max_deviation <= 1e-10, "{}", rep.max_deviation);
    }

    #[test]
    fn rejects_thin_configurations() {
        let field = DeltaField::Constant { delta: 0.0 };
        assert!(scan(&ellipsoid(), &field, &cfg(5)).is_err());
        let few = ScanConfig { m_pts: Some(5), ..cfg(40) };
        assert!(scan(&ellipsoid(), &field, &few).is_err());
    }
}
