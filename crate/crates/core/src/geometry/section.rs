use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::canonical::canonicalize;
use crate::error::{check_dim, Error, Result};
use crate::linalg::SymMatrix;
use crate::quadric::{clean, rows_of, Hyperplane, QuadricCoeffs};

/// Restriction of a quadric to a hyperplane, in the hyperplane's frame
/// coordinates `y` (`x = δu + F·y`).
#[derive(Debug, Clone)]
pub struct SectionResult {
    pub a: SymMatrix,
    pub b: DVector<f64>,
    pub c: f64,
    pub embedding: Hyperplane,
    pub empty: bool,
    /// The quadratic part vanished: the trace is (at most) a hyperplane of
    /// the section.
    pub degenerate_to_plane: bool,
}

impl SectionResult {
    /// The section as a quadric, unless it degenerated to a plane.
    pub fn coeffs(&self) -> Option<QuadricCoeffs> {
        if self.degenerate_to_plane {
            return None;
        }
        QuadricCoeffs::new(self.a.clone(), self.b.clone(), self.c).ok()
    }
}

impl Serialize for SectionResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Coeffs {
            n: usize,
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
            b: Vec<f64>,
            c: f64,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            coeffs: Coeffs,
            embedding: &'a Hyperplane,
            empty: bool,
            degenerate_to_plane: bool,
        }
        Out {
            coeffs: Coeffs {
                n: self.a.dim(),
                a: rows_of(self.a.matrix()),
                b: self.b.iter().map(|v| clean(*v)).collect(),
                c: clean(self.c),
            },
            embedding: &self.embedding,
            empty: self.empty,
            degenerate_to_plane: self.degenerate_to_plane,
        }
        .serialize(s)
    }
}

/// Substitutes `x = p₀ + F·y` into the quadric.
///
/// `tol` is relative: the section degenerates when `max|FᵀAF| ≤ tol·max|A|`.
/// Emptiness comes from canonicalizing the restricted quadric.
pub fn section(q: &QuadricCoeffs, h: &Hyperplane, tol: f64) -> Result<SectionResult> {
    check_dim(q.dim(), h.dim())?;
    if q.dim() < 2 {
        return Err(Error::InvalidInput("sections need ambient dimension ≥ 2".into()));
    }
    let f: &DMatrix<f64> = h.frame();
    let p0 = h.origin();
    let a = q.a().congruent(f);
    let b = f.transpose() * (q.a().matrix() * &p0 + q.b());
    let c = q.eval_unchecked(&p0);

    let degenerate = a.max_abs() <= tol * q.a().max_abs();
    let empty = if degenerate {
        // 2bᵀy + c = 0 has no solution only when b vanishes and c does not
        let lin_scale = tol * (q.coeff_norm() * (1.0 + p0.norm_squared()));
        b.amax() <= lin_scale && c.abs() > lin_scale
    } else {
        let restricted = QuadricCoeffs::new(a.clone(), b.clone(), c)?;
        match canonicalize(&restricted, tol) {
            Ok(_) => false,
            Err(Error::EmptyRealLocus) => true,
            Err(e) => return Err(e),
        }
    };
    Ok(SectionResult {
        a,
        b,
        c,
        embedding: h.clone(),
        empty,
        degenerate_to_plane: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{Family, DEFAULT_TOL_REL};

    fn plane(u: &[f64], delta: f64) -> Hyperplane {
        Hyperplane::new(DVector::from_column_slice(u), delta).unwrap()
    }

    #[test]
    fn equator_of_unit_sphere() {
        let s = section(&QuadricCoeffs::unit_sphere(3), &plane(&[0.0, 0.0, 1.0], 0.0), 1e-9).unwrap();
        assert!(!s.empty && !s.degenerate_to_plane);
        let f = canonicalize(&s.coeffs().unwrap(), DEFAULT_TOL_REL).unwrap();
        assert_eq!((f.family, f.k), (Family::A, 2));
        for a in f.coeffs {
            assert!((a - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn plane_missing_sphere() {
        let s = section(&QuadricCoeffs::unit_sphere(3), &plane(&[0.0, 0.0, 1.0], 2.0), 1e-9).unwrap();
        assert!(s.empty);
    }

    #[test]
    fn conic_sections_of_cone() {
        let cone = QuadricCoeffs::diagonal(&[1.0, 1.0, -1.0], 0.0).unwrap();
        let s = section(&cone, &plane(&[0.0, 0.0, 1.0], 1.0), 1e-9).unwrap();
        let f = canonicalize(&s.coeffs().unwrap(), DEFAULT_TOL_REL).unwrap();
        assert_eq!((f.family, f.k), (Family::A, 2));
        for a in &f.coeffs {
            assert!((a - 1.0).abs() < 1e-12, "radius 1");
        }
        // parallel to the generator through (1, 0, 1)
        let s = section(&cone, &plane(&[1.0, 0.0, -1.0], -1.0), 1e-9).unwrap();
        let f = canonicalize(&s.coeffs().unwrap(), DEFAULT_TOL_REL).unwrap();
        assert_eq!((f.family, f.k, f.r), (Family::E, 1, 2));
        // steep plane: hyperbola
        let s = section(&cone, &plane(&[1.0, 0.0, 0.0], 1.0), 1e-9).unwrap();
        let f = canonicalize(&s.coeffs().unwrap(), DEFAULT_TOL_REL).unwrap();
        assert_eq!((f.family, f.k, f.r), (Family::B, 1, 2));
    }

    #[test]
    fn degenerate_section() {
        // ξ1² − ξ2 = 0 cut by ξ1 = 1 leaves the line ξ2 = 1
        let mut b = DVector::zeros(2);
        b[1] = -0.5;
        let q = QuadricCoeffs::new(SymMatrix::from_diagonal(&[1.0, 0.0]), b, 0.0).unwrap();
        let s = section(&q, &plane(&[1.0, 0.0], 1.0), 1e-9).unwrap();
        assert!(s.degenerate_to_plane && !s.empty);
        assert!(s.coeffs().is_none());
    }

    #[test]
    fn dimension_mismatch() {
        let r = section(&QuadricCoeffs::unit_sphere(3), &plane(&[1.0, 0.0], 0.0), 1e-9);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
