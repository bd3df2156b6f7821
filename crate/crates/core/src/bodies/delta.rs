use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous offset `δ(u)` on the unit sphere; the hyperplane for a unit
/// normal `u` is `{x : x·u = δ(u)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaField {
    Constant { delta: f64 },
    /// `w·u + δ₀`: every hyperplane keeps distance `δ₀` from the point `w`.
    Affine { w: Vec<f64>, delta0: f64 },
    /// Inverse-distance interpolation of values given at unit nodes.
    Grid { nodes: Vec<Vec<f64>>, values: Vec<f64> },
}

impl DeltaField {
    pub fn validate(&self, n: usize) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            DeltaField::Constant { delta } if delta.is_finite() => Ok(()),
            DeltaField::Affine { w, delta0 } if finite(w) && delta0.is_finite() => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: w.len() });
                }
                Ok(())
            }
            DeltaField::Grid { nodes, values } if finite(values) => {
                if nodes.is_empty() || nodes.len() != values.len() {
                    return Err(Error::InvalidInput("grid needs one value per node".into()));
                }
                for node in nodes {
                    if node.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: node.len() });
                    }
                    let norm = node.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidInput("grid nodes must be unit vectors".into()));
                    }
                }
                Ok(())
            }
            _ => Err(Error::InvalidInput("delta field values must be finite".into())),
        }
    }

    /// `δ(u)` for a unit vector `u`.
    pub fn value(&self, u: &DVector<f64>) -> f64 {
        match self {
            DeltaField::Constant { delta } => *delta,
            DeltaField::Affine { w, delta0 } => u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + delta0,
            DeltaField::Grid { nodes, values } => {
                let mut num = 0.0;
                let mut den = 0.0;
                for (node, v) in nodes.iter().zip(values) {
                    let d2: f64 = node.iter().zip(u.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < 1e-30 {
                        return *v;
                    }
                    num += v / d2;
                    den += 1.0 / d2;
                }
                num / den
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_keeps_distance_from_point() {
        let f = DeltaField::Affine { w: vec![1.0, 2.0, 0.0], delta0: 0.5 };
        let u = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(f.value(&u), 2.5);
    }

    #[test]
    fn grid_interpolates_nodes_and_is_continuous() {
        let f = DeltaField::Grid {
            nodes: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            values: vec![1.0, 2.0, 3.0],
        };
        f.validate(2).unwrap();
        assert_eq!(f.value(&DVector::from_vec(vec![0.0, 1.0])), 2.0);
        let near = DVector::from_vec(vec![1e-7f64.sin(), 1e-7f64.cos()]);
        assert!((f.value(&near) - 2.0).abs() < 1e-6);
        let mid = DVector::from_vec(vec![0.5f64.sqrt(), 0.5f64.sqrt()]);
        let v = f.value(&mid);
        assert!(v > 1.0 && v < 3.0);
    }

    #[test]
    fn rejects_bad_grid() {
        let f = DeltaField::Grid { nodes: vec![vec![2.0, 0.0]], values: vec![1.0] };
        assert!(f.validate(2).is_err());
        let f = DeltaField::Affine { w: vec![1.0], delta0: 0.0 };
        assert!(matches!(f.validate(2), Err(Error::DimensionMismatch { .. })));
    }
}
