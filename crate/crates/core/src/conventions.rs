//! Sign and normalization conventions fixed by numerical checks elsewhere in the crate.

use serde::{Deserialize, Serialize};

/// `Φ_{−1/κ} (Σ_j L_j) Φ_{1/κ} = κ H_n(8/κ) + CONJUGATION_SIGN · n(n²−1)/(6κ)`.
pub const CONJUGATION_SIGN: f64 = 1.0;

/// Eigenvalue reported for a gauge-transformed partition function: `E = CS_ENERGY_SIGN · Hψ̃/ψ̃`,
/// so that `E = (n/κ)(−h + (n²−1)/(6κ))`.
pub const CS_ENERGY_SIGN: f64 = -1.0;

/// The rotation constant is `ω := Σ_j ∂_jψ/ψ`, hence `ψ(θ + s) = e^{ωs} ψ(θ)`.
pub const OMEGA_SIGN: f64 = 1.0;

/// With SLE(κ,ρ) drift `Σ_q ρ_q cot((θ−q)/2)`, rational SLE with growth charge `a` has
/// `ρ_q = RHO_PER_KAPPA_A_SIGMA · κ a σ_q`.
pub const RHO_PER_KAPPA_A_SIGMA: f64 = 0.5;

/// Classical (κ = 0) charge of a growth point: the root of `σ² + 2σ = 3`.
pub const KAPPA_ZERO_GROWTH_CHARGE: f64 = 1.0;

/// How `ρ` weights are derived from charges in SLE(κ,ρ) mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoConvention {
    /// `ρ = κaσ/2`, matching the gradient of the Coulomb-gas partition function.
    #[default]
    Resolved,
    /// `ρ = κaσ`.
    AsPrinted,
}

impl RhoConvention {
    pub fn factor(self) -> f64 {
        match self {
            RhoConvention::Resolved => RHO_PER_KAPPA_A_SIGMA,
            RhoConvention::AsPrinted => 1.0,
        }
    }
}
