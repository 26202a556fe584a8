//! Willmore-type energies and monotonicity identities for immersed surfaces
//! in hyperbolic space and the round sphere.

pub mod error;
pub mod functionals;
pub mod jet;
pub mod library;
pub mod quadrature;
pub mod report;
pub mod spaceform;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
pub use spaceform::{AmbientPoint, AmbientVector, Coords, Curvature, Isometry, RadialWeights, SpaceForm};
pub use surface::{GeometrySample, ImmersedSurface, QuadratureSpec, Region};
pub use report::{BalanceReport, ReportKind};
