//! `quadric`: JSON front end for the convex-quadric toolkit.
//!
//! Exit codes: 0 success, 2 empty real locus, 3 malformed input or
//! arguments, 4 geometric precondition failed, 1 anything else.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind as ClapKind;
use clap::{Args, Parser, Subcommand};
use convex_quadric::convexity::{
    complement_analysis, is_convex_quadric, recession_cone, Component, ConvexQuadricDescriptor, RecessionCone,
};
use convex_quadric::scanner::{ScanReport, DEFAULT_THRESHOLD};
use convex_quadric::{
    canonical_to_coeffs, canonicalize, pencil_through, revolve, scan, section, CanonicalForm, ConvexBody,
    DeltaField, ErrorKind, Family, Hyperplane, QuadricCoeffs, RevolutionSpec, ScanConfig, DEFAULT_TOL_REL,
};
use convex_quadric::bodies::DEFAULT_RAY_TOL;
use convex_quadric::geometry::DEFAULT_SAMPLES_PER_CIRCLE;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "quadric", version, about = "Classify quadrics, cut sections, build pencils and revolutions, scan convex bodies")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Io {
    /// JSON input: a file path, inline JSON, or `-` for stdin (the default).
    input: Option<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Relative tolerance for zero tests; per-step tolerances default to it.
    #[arg(long, default_value_t = DEFAULT_TOL_REL)]
    tol: f64,
}

#[derive(Subcommand)]
enum Verb {
    /// Canonical form, complement components and convexity of a quadric.
    Classify(Io),
    /// Canonical form of a quadric, or the equation of a canonical form.
    Canonical {
        #[command(flatten)]
        io: Io,
        /// Read a canonical form and print its equation in canonical coordinates.
        #[arg(long)]
        inverse: bool,
        /// With --inverse: map the equation back to the original coordinates.
        #[arg(long, requires = "inverse")]
        ambient: bool,
    },
    /// Restriction of a quadric to a hyperplane.
    Section(Io),
    /// Quadric through two hyperplane sections and one extra point.
    Pencil(Io),
    /// Revolve points about an axis subspace.
    Revolve(Io),
    /// Fit every proper hyperplane section of a convex body.
    Scan {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of scan directions.
        #[arg(long, default_value_t = 500)]
        dirs: usize,
        /// Boundary points per section (default: four per fitted coefficient).
        #[arg(long)]
        pts: Option<usize>,
        /// Largest fit residual still counted as a quadric section.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Rank tolerance of the fit (defaults to --tol).
        #[arg(long)]
        fit_tol: Option<f64>,
        /// Bisection tolerance of boundary ray casts.
        #[arg(long, default_value_t = DEFAULT_RAY_TOL)]
        ray_tol: f64,
        /// Also write one CSV row per direction to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Boundary points of a convex body on a hyperplane.
    Sample {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RAY_TOL)]
        ray_tol: f64,
    },
}

/// Input that does not match the expected schema, or cannot be read.
#[derive(Debug)]
struct SchemaError(String);

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

fn schema(msg: impl Into<String>) -> anyhow::Error {
    SchemaError(msg.into()).into()
}

fn read_input(spec: Option<&str>) -> Result<String> {
    match spec {
        None | Some("-") => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| schema(format!("reading stdin: {e}")))?;
            Ok(s)
        }
        Some(s) if s.trim_start().starts_with(['{', '[']) => Ok(s.to_string()),
        Some(path) => fs::read_to_string(path).map_err(|e| schema(format!("reading {path}: {e}"))),
    }
}

fn parse<T: DeserializeOwned>(io: &Io) -> Result<T> {
    let text = read_input(io.input.as_deref())?;
    Ok(serde_json::from_str(&text)?)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(schema(format!("{name} must be positive, got {v}")))
    }
}

fn emit<T: Serialize>(io: &Io, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match &io.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn to_vectors(points: Vec<Vec<f64>>) -> Vec<DVector<f64>> {
    points.into_iter().map(DVector::from_vec).collect()
}

fn to_rows(points: &[DVector<f64>]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct ClassifyReport {
    family: Family,
    n: usize,
    k: usize,
    r: usize,
    canonical: CanonicalForm,
    component_count: usize,
    convex_components: usize,
    components: Vec<Component>,
    convex_quadric: Option<ConvexQuadricDescriptor>,
    recession_cone: Option<RecessionCone>,
}

fn classify(q: &QuadricCoeffs, tol: f64) -> Result<ClassifyReport> {
    let form = canonicalize(q, tol)?;
    let analysis = complement_analysis(&form);
    let descriptor = is_convex_quadric(&form);
    Ok(ClassifyReport {
        family: form.family,
        n: form.n,
        k: form.k,
        r: form.r,
        component_count: analysis.count,
        convex_components: analysis.convex_count(),
        components: analysis.components,
        recession_cone: descriptor.as_ref().map(recession_cone),
        convex_quadric: descriptor,
        canonical: form,
    })
}

/// Equation `eq_scale · Q_canonical(to_canonical(x))` in input coordinates.
fn ambient_equation(form: &CanonicalForm) -> Result<QuadricCoeffs> {
    let q = canonical_to_coeffs(form)
        .transform(&form.to_canonical.inverse())?
        .scale_equation(form.eq_scale)?;
    Ok(q)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionInput {
    quadric: QuadricCoeffs,
    hyperplane: Hyperplane,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PencilInput {
    #[serde(rename = "E1")]
    e1: Vec<Vec<f64>>,
    #[serde(rename = "E2")]
    e2: Vec<Vec<f64>>,
    #[serde(rename = "H1")]
    h1: Hyperplane,
    #[serde(rename = "H2")]
    h2: Hyperplane,
    v: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RevolveInput {
    points: Vec<Vec<f64>>,
    spec: RevolutionSpec,
    #[serde(default = "default_samples")]
    samples_per_circle: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES_PER_CIRCLE
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanInput {
    body: ConvexBody,
    delta: DeltaField,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleInput {
    body: ConvexBody,
    hyperplane: Hyperplane,
    m: usize,
}

#[derive(Serialize)]
struct Points {
    points: Vec<Vec<f64>>,
}

fn write_csv(path: &Path, report: &ScanReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = vec!["index".into()];
    header.extend((1..=report.n).map(|i| format!("u{i}")));
    header.extend(
        ["delta", "status", "residual", "family", "k", "r", "convex_section", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for d in &report.per_direction {
        let mut row = vec![d.index.to_string()];
        row.extend(d.u.iter().map(|x| format!("{x:?}")));
        row.push(format!("{:?}", d.delta));
        row.push(serde_json::to_value(d.status)?.as_str().unwrap_or_default().to_string());
        row.push(opt(d.residual.map(|x| format!("{x:?}"))));
        row.push(opt(d.family.map(|f| f.to_string())));
        row.push(opt(d.k.map(|x| x.to_string())));
        row.push(opt(d.r.map(|x| x.to_string())));
        row.push(opt(d.convex_section.map(|x| x.to_string())));
        row.push(opt(d.error.clone()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn run(verb: Verb) -> Result<()> {
    match verb {
        Verb::Classify(io) => {
            let tol = positive("--tol", io.tol)?;
            let q: QuadricCoeffs = parse(&io)?;
            emit(&io, &classify(&q, tol)?)
        }
        Verb::Canonical { io, inverse, ambient } => {
            let tol = positive("--tol", io.tol)?;
            if inverse {
                let form: CanonicalForm = parse(&io)?;
                let q = if ambient { ambient_equation(&form)? } else { canonical_to_coeffs(&form) };
                emit(&io, &q)
            } else {
                let q: QuadricCoeffs = parse(&io)?;
                emit(&io, &canonicalize(&q, tol)?)
            }
        }
        Verb::Section(io) => {
            let tol = positive("--tol", io.tol)?;
            let input: SectionInput = parse(&io)?;
            emit(&io, &section(&input.quadric, &input.hyperplane, tol)?)
        }
        Verb::Pencil(io) => {
            let tol = positive("--tol", io.tol)?;
            let input: PencilInput = parse(&io)?;
            let res = pencil_through(
                &to_vectors(input.e1),
                &to_vectors(input.e2),
                &input.h1,
                &input.h2,
                &DVector::from_vec(input.v),
                tol,
            )?;
            emit(&io, &res)
        }
        Verb::Revolve(io) => {
            let input: RevolveInput = parse(&io)?;
            let out = revolve(&to_vectors(input.points), &input.spec, input.samples_per_circle)?;
            emit(&io, &Points { points: to_rows(&out) })
        }
        Verb::Scan { io, seed, dirs, pts, threshold, workers, fit_tol, ray_tol, csv } => {
            let tol = positive("--tol", io.tol)?;
            let cfg = ScanConfig {
                n_dirs: dirs,
                m_pts: pts,
                threshold: positive("--threshold", threshold)?,
                seed,
                workers: workers.max(1),
                fit_tol: positive("--fit-tol", fit_tol.unwrap_or(tol))?,
                tol_rel: tol,
                ray_tol: positive("--ray-tol", ray_tol)?,
            };
            let input: ScanInput = parse(&io)?;
            let report = scan(&input.body, &input.delta, &cfg)?;
            if let Some(path) = &csv {
                write_csv(path, &report)?;
            }
            emit(&io, &report)
        }
        Verb::Sample { io, seed, ray_tol } => {
            let ray_tol = positive("--ray-tol", ray_tol)?;
            let input: SampleInput = parse(&io)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = input.body.section_boundary_sample(&input.hyperplane, input.m, ray_tol, &mut rng)?;
            emit(&io, &Points { points: to_rows(&pts) })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<convex_quadric::Error>() {
            return match e.kind() {
                ErrorKind::EmptyLocus => 2,
                ErrorKind::Schema => 3,
                ErrorKind::Geometric => 4,
                ErrorKind::Internal => 1,
            };
        }
        if cause.is::<SchemaError>() || cause.is::<serde_json::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapKind::DisplayHelp | ClapKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
