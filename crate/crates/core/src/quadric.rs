//! Coefficient form of a quadric, `xᵀAx + 2bᵀx + c = 0`, together with the
//! isometries and hyperplanes the rest of the crate moves it through.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{complete_frame, orthonormality_error, SymMatrix};

/// Quadratic form `xᵀAx + 2bᵀx + c`. The linear part carries the factor two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsJson", into = "CoeffsJson")]
pub struct QuadricCoeffs {
    a: SymMatrix,
    b: DVector<f64>,
    c: f64,
}

impl QuadricCoeffs {
    /// Rejects an identically zero quadratic part.
    pub fn new(a: SymMatrix, b: DVector<f64>, c: f64) -> Result<Self> {
        check_dim(a.dim(), b.len())?;
        if a.dim() == 0 || a.max_abs() == 0.0 {
            return Err(Error::DegreeTooLow);
        }
        if a.matrix().iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(QuadricCoeffs { a, b, c })
    }

    pub fn from_parts(a: DMatrix<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        Self::new(SymMatrix::new(a)?, DVector::from_vec(b), c)
    }

    /// `Σ d_i ξ_i² + c` with no linear part.
    pub fn diagonal(d: &[f64], c: f64) -> Result<Self> {
        Self::new(
            SymMatrix::from_diagonal(d),
            DVector::zeros(d.len()),
            c,
        )
    }

    /// Unit sphere `‖x‖² − 1` in `R^n`.
    pub fn unit_sphere(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n], -1.0).expect("identity is a valid quadratic part")
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `xᵀAx + 2bᵀx + c`.
    pub fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &DVector<f64>) -> f64 {
        let ax = self.a.matrix() * x;
        x.dot(&ax) + 2.0 * self.b.dot(x) + self.c
    }

    /// Gradient `2(Ax + b)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.a.matrix() * x + &self.b) * 2.0
    }

    /// Expresses the quadric in the coordinates `ξ' = T(ξ)`: the result `Q'`
    /// satisfies `Q'(T(x)) = Q(x)`.
    pub fn transform(&self, t: &Isometry) -> Result<Self> {
        check_dim(self.dim(), t.dim())?;
        let a2 = self.a.congruent(&t.r.transpose());
        let rb = &t.r * &self.b;
        let a2t = a2.matrix() * &t.t;
        let b2 = &rb - &a2t;
        let c2 = t.t.dot(&a2t) - 2.0 * rb.dot(&t.t) + self.c;
        Ok(QuadricCoeffs {
            a: a2,
            b: b2,
            c: c2,
        })
    }

    /// Multiplies every coefficient by `s`; the zero set is unchanged.
    pub fn scale_equation(&self, s: f64) -> Result<Self> {
        if s == 0.0 || !s.is_finite() {
            return Err(Error::ZeroScale);
        }
        Ok(QuadricCoeffs {
            a: self.a.scaled(s),
            b: &self.b * s,
            c: self.c * s,
        })
    }

    /// `sqrt(‖A‖_F² + ‖b‖² + c²)`.
    pub fn coeff_norm(&self) -> f64 {
        (self.a.frobenius().powi(2) + self.b.norm_squared() + self.c * self.c).sqrt()
    }

    /// Flattened `(upper triangle of A row-major, b, c)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n + 1) / 2 + n + 1);
        for i in 0..n {
            for j in i..n {
                out.push(self.a[(i, j)]);
            }
        }
        out.extend(self.b.iter());
        out.push(self.c);
        out
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffsJson {
    /// Optional on input; checked against `A` when present.
    #[serde(default)]
    n: Option<usize>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: f64,
}

impl TryFrom<CoeffsJson> for QuadricCoeffs {
    type Error = Error;
    fn try_from(j: CoeffsJson) -> Result<Self> {
        let n = j.n.unwrap_or(j.a.len());
        check_dim(n, j.a.len())?;
        check_dim(n, j.b.len())?;
        let a = SymMatrix::from_rows(&j.a)?;
        QuadricCoeffs::new(a, DVector::from_vec(j.b), j.c)
    }
}

impl From<QuadricCoeffs> for CoeffsJson {
    fn from(q: QuadricCoeffs) -> Self {
        let n = q.dim();
        CoeffsJson {
            n: Some(n),
            a: rows_of(q.a.matrix()),
            b: q.b.iter().map(|v| clean(*v)).collect(),
            c: clean(q.c),
        }
    }
}

/// Replaces `-0.0` by `0.0` so serialized output is byte-stable.
pub(crate) fn clean(v: f64) -> f64 {
    v + 0.0
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| clean(m[(i, j)])).collect())
        .collect()
}

/// Rigid motion `x ↦ R·x + t` with orthogonal `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsometryJson", into = "IsometryJson")]
pub struct Isometry {
    r: DMatrix<f64>,
    t: DVector<f64>,
}

impl Isometry {
    pub fn new(r: DMatrix<f64>, t: DVector<f64>) -> Result<Self> {
        check_dim(r.nrows(), r.ncols())?;
        check_dim(r.nrows(), t.len())?;
        if orthonormality_error(&r) > 1e-10 {
            return Err(Error::NotOrthonormal);
        }
        Ok(Isometry { r, t })
    }

    pub fn identity(n: usize) -> Self {
        Isometry {
            r: DMatrix::identity(n, n),
            t: DVector::zeros(n),
        }
    }

    pub fn translation(t: DVector<f64>) -> Self {
        let n = t.len();
        Isometry {
            r: DMatrix::identity(n, n),
            t,
        }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn translation_part(&self) -> &DVector<f64> {
        &self.t
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.r * x + &self.t
    }

    pub fn inverse(&self) -> Isometry {
        let rt = self.r.transpose();
        let t = -(&rt * &self.t);
        Isometry { r: rt, t }
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &Isometry) -> Isometry {
        Isometry {
            r: &next.r * &self.r,
            t: &next.r * &self.t + &next.t,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct IsometryJson {
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    t: Vec<f64>,
}

impl TryFrom<IsometryJson> for Isometry {
    type Error = Error;
    fn try_from(j: IsometryJson) -> Result<Self> {
        let n = j.t.len();
        check_dim(n, j.r.len())?;
        for row in &j.r {
            check_dim(n, row.len())?;
        }
        Isometry::new(
            DMatrix::from_fn(n, n, |i, k| j.r[i][k]),
            DVector::from_vec(j.t),
        )
    }
}

impl From<Isometry> for IsometryJson {
    fn from(t: Isometry) -> Self {
        IsometryJson {
            r: rows_of(&t.r),
            t: t.t.iter().map(|v| clean(*v)).collect(),
        }
    }
}

/// Affine hyperplane `{x : x·u = δ}` with an orthonormal in-plane frame.
///
/// In-plane coordinates `y` map to `x = δ·u + F·y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HyperplaneJson", into = "HyperplaneJson")]
pub struct Hyperplane {
    u: DVector<f64>,
    delta: f64,
    frame: DMatrix<f64>,
}

impl Hyperplane {
    /// Normalizes `u` (and `δ` with it) and builds the frame.
    pub fn new(u: DVector<f64>, delta: f64) -> Result<Self> {
        let norm = u.norm();
        if norm == 0.0 || !norm.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidInput("hyperplane normal must be nonzero".into()));
        }
        let u = u / norm;
        let delta = delta / norm;
        let n = u.len();
        let full = complete_frame(std::slice::from_ref(&u), n)?;
        let frame = full.columns(1, n - 1).clone_owned();
        Ok(Hyperplane { u, delta, frame })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `n × (n−1)` in-plane basis.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn origin(&self) -> DVector<f64> {
        &self.u * self.delta
    }

    /// Signed distance `x·u − δ`.
    pub fn signed_distance(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.u) - self.delta
    }

    pub fn to_ambient(&self, y: &DVector<f64>) -> DVector<f64> {
        self.origin() + &self.frame * y
    }

    pub fn to_frame(&self, x: &DVector<f64>) -> DVector<f64> {
        self.frame.transpose() * (x - self.origin())
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.u * self.signed_distance(x)
    }
}

#[derive(Serialize, Deserialize)]
struct HyperplaneJson {
    u: Vec<f64>,
    delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<Vec<Vec<f64>>>,
}

impl TryFrom<HyperplaneJson> for Hyperplane {
    type Error = Error;
    fn try_from(j: HyperplaneJson) -> Result<Self> {
        Hyperplane::new(DVector::from_vec(j.u), j.delta)
    }
}

impl From<Hyperplane> for HyperplaneJson {
    fn from(h: Hyperplane) -> Self {
        HyperplaneJson {
            u: h.u.iter().map(|v| clean(*v)).collect(),
            delta: clean(h.delta),
            frame: Some(rows_of(&h.frame)),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_isometry(rng: &mut impl Rng, n: usize, spread: f64) -> Isometry {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let r = m.qr().q();
        let t = DVector::from_fn(n, |_, _| rng.random_range(-spread..spread));
        Isometry::new(r, t).unwrap()
    }

    pub(crate) fn random_quadric(rng: &mut impl Rng, n: usize) -> QuadricCoeffs {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let b = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        QuadricCoeffs::from_parts(a, b, rng.random_range(-2.0..2.0)).unwrap()
    }

    fn random_point(rng: &mut impl Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn evaluate_examples() {
        let s = QuadricCoeffs::unit_sphere(3);
        assert_eq!(s.evaluate(&DVector::zeros(3)).unwrap(), -1.0);
        assert_eq!(
            s.evaluate(&DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap(),
            0.0
        );
        let h = QuadricCoeffs::diagonal(&[1.0, -1.0], -1.0).unwrap();
        assert_eq!(h.evaluate(&DVector::from_vec(vec![2.0, 1.0])).unwrap(), 2.0);
        assert!(matches!(
            h.evaluate(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_quadratic_part_rejected() {
        assert_eq!(
            QuadricCoeffs::diagonal(&[0.0, 0.0], 1.0),
            Err(Error::DegreeTooLow)
        );
    }

    #[test]
    fn identity_transform_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_quadric(&mut rng, 4);
        assert_eq!(q.transform(&Isometry::identity(4)).unwrap(), q);
    }

    #[test]
    fn translated_sphere() {
        let t = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let q = QuadricCoeffs::unit_sphere(3)
            .transform(&Isometry::translation(t.clone()))
            .unwrap();
        assert_eq!(q.a(), &SymMatrix::identity(3));
        assert_eq!(q.b(), &(-&t));
        assert!((q.c() - (t.norm_squared() - 1.0)).abs() < 1e-15);
        let x = DVector::from_vec(vec![0.3, 0.1, -0.7]);
        let lhs = q.evaluate(&(&x + &t)).unwrap();
        let rhs = QuadricCoeffs::unit_sphere(3).evaluate(&x).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn pullback_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let n = rng.random_range(1..=6);
            let q = random_quadric(&mut rng, n);
            let t = random_isometry(&mut rng, n, 5.0);
            let q2 = q.transform(&t).unwrap();
            let x = random_point(&mut rng, n);
            let a = q2.evaluate(&t.apply(&x)).unwrap();
            let b = q.evaluate(&x).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn transform_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let q = random_quadric(&mut rng, n);
            let t1 = random_isometry(&mut rng, n, 3.0);
            let t2 = random_isometry(&mut rng, n, 3.0);
            let stepwise = q.transform(&t1).unwrap().transform(&t2).unwrap();
            let direct = q.transform(&t1.then(&t2)).unwrap();
            for (x, y) in stepwise.to_flat().iter().zip(direct.to_flat()) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_isometry(&mut rng, 5, 4.0);
        let x = random_point(&mut rng, 5);
        assert!((t.inverse().apply(&t.apply(&x)) - &x).amax() < 1e-13);
    }

    #[test]
    fn scale_equation_examples() {
        let q = QuadricCoeffs::diagonal(&[1.0, -1.0], 0.0).unwrap();
        assert_eq!(q.scale_equation(1.0).unwrap(), q);
        let f = q.scale_equation(-1.0).unwrap();
        assert_eq!(f.a(), &SymMatrix::from_diagonal(&[-1.0, 1.0]));
        assert_eq!(q.scale_equation(0.0), Err(Error::ZeroScale));
    }

    #[test]
    fn scaling_preserves_zero_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = QuadricCoeffs::diagonal(&[1.0, 2.0, -0.5], -1.0).unwrap();
        let s = q.scale_equation(-3.7).unwrap();
        for _ in 0..100 {
            // points on the surface: solve for the last coordinate
            let x0: f64 = rng.random_range(-2.0..2.0);
            let x1: f64 = rng.random_range(-2.0..2.0);
            let rest = x0 * x0 + 2.0 * x1 * x1 - 1.0;
            let x2 = (rest / 0.5).sqrt() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let on = DVector::from_vec(vec![x0, x1, x2]);
            if rest < 0.0 {
                continue;
            }
            assert!(q.evaluate(&on).unwrap().abs() < 1e-12);
            assert!(s.evaluate(&on).unwrap().abs() < 1e-11);
            let off = random_point(&mut rng, 3);
            assert_eq!(
                q.evaluate(&off).unwrap() == 0.0,
                s.evaluate(&off).unwrap() == 0.0
            );
        }
    }

    #[test]
    fn json_symmetrizes() {
        let q: QuadricCoeffs =
            serde_json::from_str(r#"{"n":2,"A":[[1,2],[0,-1]],"b":[0,0],"c":-1}"#).unwrap();
        assert_eq!(q.a()[(0, 1)], 1.0);
        assert_eq!(q.a()[(1, 0)], 1.0);
        let back = serde_json::to_string(&q).unwrap();
        let again: QuadricCoeffs = serde_json::from_str(&back).unwrap();
        assert_eq!(q, again);
        assert!(serde_json::from_str::<QuadricCoeffs>(r#"{"n":1,"A":[[0]],"b":[1],"c":0}"#).is_err());
    }

    #[test]
    fn hyperplane_frame_is_orthogonal_to_normal() {
        let h = Hyperplane::new(DVector::from_vec(vec![0.0, 0.0, 2.0]), 4.0).unwrap();
        assert_eq!(h.delta(), 2.0);
        assert!((h.normal().norm() - 1.0).abs() < 1e-12);
        assert!((h.frame().transpose() * h.normal()).amax() < 1e-12);
        let y = DVector::from_vec(vec![0.4, -1.2]);
        let x = h.to_ambient(&y);
        assert!(h.signed_distance(&x).abs() < 1e-14);
        assert!((h.to_frame(&x) - y).amax() < 1e-14);
    }
}
