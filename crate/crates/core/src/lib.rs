//! American put pricing under the Heston model with finite differences in
//! space and operator-splitting (ADI) time stepping, where the early-exercise
//! constraint is handled by the Ikonen–Toivanen splitting.
//!
//! The pipeline is: build a [`mesh::SpatialGrid`], assemble the semidiscrete
//! operator with [`discretization::assemble`], march it with
//! [`stepper::run`], and post-process with [`analysis`] or [`pricing`].

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod lcp;
pub mod linalg;
pub mod mesh;
pub mod pricing;
pub mod stepper;

pub use discretization::{assemble, Discretization, HestonParams};
pub use error::{Error, Result};
pub use lcp::ItState;
pub use mesh::{SMeshSpec, SpatialGrid, VMeshSpec};
pub use pricing::{CasePreset, OptionKind, PriceSurface};
pub use stepper::{run, Scheme, SchemeConfig, TimeSteppingResult};
