//! Shared building blocks: potentials, grids on (λ, p), weighted fields with their
//! sup norms, interpolation, and solver reports.
//!
//! Most numerics here are `f64`. The vector helpers and [`weighted_norm`] are generic
//! over any `num_traits::Float` so that the geometry layer can be instantiated in
//! `f32` as well; the concrete aliases below fix the `f64` instantiation used by the
//! solvers.

pub mod error;
pub mod field;
pub mod grid;
pub mod potential;
pub mod quad;
pub mod report;
pub mod vec3;

pub use error::CoreError;
pub use field::{weighted_norm, PField, WeightedField};
pub use grid::{make_grids, DirectionSpec, Grid, GridSpec, SphereTriangulation};
pub use potential::{GaussianTerm, PotentialSpec};
pub use report::SolveReport;

/// Complex scalar used by all solvers.
pub type C64 = num_complex::Complex<f64>;
/// Real 3-vector.
pub type Vec3 = [f64; 3];
/// Complex 3-vector (points of the null cone live here).
pub type CVec3 = [C64; 3];

/// Real scalar types the generic layers accept.
pub trait Real:
    num_traits::Float + num_traits::FloatConst + num_traits::FromPrimitive + std::fmt::Debug + Send + Sync + 'static
{
}
impl Real for f32 {}
impl Real for f64 {}

/// p-field (function of p only) that solvers can sample anywhere in ℝ³.
pub trait PFunction: Sync {
    fn eval(&self, p: &Vec3) -> C64;
}

/// Default ν.
pub const DEFAULT_NU: Vec3 = [0.0, 0.0, 1.0];
