//! Constructive geometry on quadrics: hyperplane sections, least-squares
//! fitting, pencils through two sections, and revolutions.

mod fit;
mod pencil;
mod revolution;
mod section;

pub use fit::{feature_dim, fit_quadric, quadric_nullspace, FitResult, DEFAULT_FIT_TOL};
pub use pencil::{pencil_through, PencilResult};
pub use revolution::{revolve, RevolutionSpec, DEFAULT_SAMPLES_PER_CIRCLE};
pub use section::{section, SectionResult};
