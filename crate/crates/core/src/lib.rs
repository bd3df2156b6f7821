//! Real quadric surfaces: canonical forms, convexity of complement
//! components, hyperplane sections, pencils, revolutions and an empirical
//! section scanner for convex bodies.

pub mod bodies;
pub mod canonical;
pub mod convexity;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quadric;
pub mod scanner;

pub use bodies::{ConvexBody, DeltaField, PerturbedEllipsoid, QuadricBody, QuadricShape};
pub use canonical::{canonical_to_coeffs, canonicalize, CanonicalForm, Family, DEFAULT_TOL_REL};
pub use geometry::{fit_quadric, pencil_through, revolve, section, RevolutionSpec};
pub use error::{Error, ErrorKind, Result};
pub use linalg::{complete_frame, eig_sym, signature, EigenDecomp, Signature, SymMatrix};
pub use scanner::{cross_section_consistency, scan, ScanConfig, ScanReport, Verdict};
pub use quadric::{Hyperplane, Isometry, QuadricCoeffs};
