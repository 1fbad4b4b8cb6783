//! Rotationally symmetric translating solitons of fully nonlinear curvature flows.
//!
//! The library works on the rotational slice `(x, y, ..., y)` of a symmetric,
//! homogeneous curvature function and builds bowl-type and catenoidal
//! translators from the resulting ODEs, together with the checks used to
//! validate them.

pub mod barrier;
pub mod bowl;
pub mod catenoid;
pub mod curvature;
mod error;
mod fit;
pub mod graph;
pub mod implicit;
pub mod ode;
mod roots;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision curvature function.
pub type Curvature = curvature::CurvatureFunction<f64>;
/// Double precision implicit branch.
pub type Branch = implicit::ImplicitBranch<f64>;
/// Double precision integrator settings.
pub type Integrator = ode::IntegratorConfig<f64>;
/// Double precision bowl profile.
pub type Bowl = bowl::BowlProfile<f64>;
/// Double precision catenoidal translator.
pub type Catenoid = catenoid::CatenoidResult<f64>;
