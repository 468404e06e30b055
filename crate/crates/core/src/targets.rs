//! Closed-form targets for the verification checks, each with its formula as text.

use serde::Serialize;

use crate::screening::{Family, ScreeningSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub quantity: &'static str,
    pub formula: &'static str,
    pub value: f64,
}

fn excess(n: usize, m: usize) -> f64 {
    n as f64 - 2.0 * m as f64
}

pub fn h_ground(n: usize, m: usize, kappa: f64) -> f64 {
    let s = excess(n, m);
    (1.0 - s * s) / (2.0 * kappa)
}

pub fn h_excited(n: usize, m: usize, kappa: f64) -> f64 {
    let s = excess(n, m) + kappa / 2.0;
    (1.0 - s * s) / (2.0 * kappa)
}

pub fn h_spin(n: usize, m: usize, eta: f64, kappa: f64) -> f64 {
    let s = excess(n, m);
    -s * s / (2.0 * kappa) + (1.0 + eta * eta) / (2.0 * kappa)
}

pub fn h_chordal(kappa: f64) -> f64 {
    (6.0 - kappa) * (kappa - 2.0) / (8.0 * kappa)
}

pub fn omega_spin(n: usize, m: usize, eta: f64, kappa: f64) -> f64 {
    eta * excess(n, m) / kappa
}

/// `E = (n/κ)(−h + (n²−1)/(6κ))`.
pub fn cs_energy(n: usize, kappa: f64, h: f64) -> f64 {
    let n = n as f64;
    n / kappa * (-h + (n * n - 1.0) / (6.0 * kappa))
}

/// Null-vector constant for a family with the given counts.
pub fn target_h(family: Family, n: usize, m: usize, kappa: f64) -> Target {
    match family {
        Family::GroundJ => Target { quantity: "h", formula: "h = (1 − (n−2m)²)/(2κ)", value: h_ground(n, m, kappa) },
        Family::ExcitedK => {
            Target { quantity: "h", formula: "h = (1 − (n−2m+κ/2)²)/(2κ)", value: h_excited(n, m, kappa) }
        }
        Family::SpinJ { eta } => Target {
            quantity: "h",
            formula: "h = −(n−2m)²/(2κ) + (1+η²)/(2κ)",
            value: h_spin(n, m, eta, kappa),
        },
        Family::ChordalL => Target { quantity: "h", formula: "h = (6−κ)(κ−2)/(8κ)", value: h_chordal(kappa) },
    }
}

/// Rotation constant `ω = Σ_j ∂_jψ/ψ`.
pub fn target_omega(family: Family, n: usize, m: usize, kappa: f64) -> Target {
    match family {
        Family::SpinJ { eta } => Target { quantity: "omega", formula: "ω = η(n−2m)/κ", value: omega_spin(n, m, eta, kappa) },
        _ => Target { quantity: "omega", formula: "ω = 0", value: 0.0 },
    }
}

pub fn targets_for(spec: &ScreeningSpec) -> (Target, Target) {
    (target_h(spec.family, spec.n, spec.m, spec.kappa), target_omega(spec.family, spec.n, spec.m, spec.kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        assert!((h_ground(2, 0, 4.0) + 0.375).abs() < 1e-15);
        assert!((h_ground(2, 1, 3.5) - 1.0 / 7.0).abs() < 1e-15);
        assert!((h_ground(3, 0, 2.0) + 2.0).abs() < 1e-15);
        assert!((h_excited(2, 1, 4.0) + 0.375).abs() < 1e-15);
        assert!((h_chordal(3.0) - 0.125).abs() < 1e-15);
        assert!((h_spin(3, 1, 0.7, 3.0) - 0.49 / 6.0).abs() < 1e-15);
        assert!((omega_spin(1, 0, 1.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((cs_energy(2, 4.0, -0.375) - 0.25).abs() < 1e-15);
        assert!((cs_energy(3, 2.0, -2.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn spin_zero_matches_ground() {
        for (n, m) in [(2, 1), (3, 1), (4, 0)] {
            assert!((h_spin(n, m, 0.0, 3.3) - h_ground(n, m, 3.3)).abs() < 1e-15);
        }
    }
}
