//! Screening-integral partition functions for multiple radial SLE, null-vector and
//! Calogero–Sutherland verification, link-pattern combinatorics, and a Loewner-chain simulator.

pub mod calogero;
pub mod contour;
pub mod conventions;
pub mod error;
pub mod linkpatterns;
pub mod nullvec;
pub mod params;
pub mod screening;
pub mod sim;
pub mod targets;

pub use calogero::{conjugation_identity_check, cs_eigencheck, phi_r, CSParams, EigenCheck, SignResolution};
pub use contour::{ContourSpec, QuadOptions, Quadrature};
pub use conventions::RhoConvention;
pub use error::{Error, Result};
pub use linkpatterns::{enumerate, meander_matrix, LinkPattern, MeanderMatrix, PatternKind};
pub use nullvec::{estimate_h, estimate_omega, residual_report, Estimate, FiniteDiffScheme, ResidualReport};
pub use params::{derive_params, KappaParams, ThetaConfig};
pub use screening::{Family, FermionicGround, PartitionEvaluator, Psi, ScreeningSpec};
pub use sim::{run_simulation, DriftMode, HaltReason, MarkedPoint, SimConfig, TraceResult};
