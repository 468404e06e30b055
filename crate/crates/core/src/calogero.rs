//! Trigonometric Calogero–Sutherland side: the gauge factor `Φ_r`, the Hamiltonian
//! `H_n(β) = ½Σ∂_j² − (β(β−2)/16) Σ_{j<k} sin⁻²((θ_j−θ_k)/2)` with `β = 8/κ`, and checks that
//! gauge-transformed partition functions are eigenfunctions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conventions::{CONJUGATION_SIGN, CS_ENERGY_SIGN};
use crate::error::{Error, Result};
use crate::nullvec::{partials, Estimate, FiniteDiffScheme, Partials};
use crate::params::in_chamber;
use crate::screening::Psi;
use crate::targets::cs_energy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CSParams {
    pub beta: f64,
    pub n: usize,
    pub kappa: f64,
}

impl CSParams {
    pub fn new(kappa: f64, n: usize) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { beta: 8.0 / kappa, n, kappa })
    }

    /// `β(β−2)/16`.
    pub fn coupling(&self) -> f64 {
        self.beta * (self.beta - 2.0) / 16.0
    }

    /// `n(n²−1)/(6κ)`.
    pub fn shift(&self) -> f64 {
        let n = self.n as f64;
        n * (n * n - 1.0) / (6.0 * self.kappa)
    }
}

/// `Φ_r(θ) = Π_{j<k} |sin((θ_k−θ_j)/2)|^{−2r}`.
pub fn phi_r(theta: &[f64], r: f64) -> Result<f64> {
    let mut log = 0.0;
    for j in 0..theta.len() {
        for k in j + 1..theta.len() {
            let s = ((theta[k] - theta[j]) / 2.0).sin().abs();
            if s == 0.0 {
                return Err(Error::Singular(format!("angles {} and {} coincide", j + 1, k + 1)));
            }
            log += s.ln();
        }
    }
    Ok((-2.0 * r * log).exp())
}

fn potential(theta: &[f64]) -> f64 {
    let mut v = 0.0;
    for j in 0..theta.len() {
        for k in j + 1..theta.len() {
            let s = ((theta[k] - theta[j]) / 2.0).sin();
            v += 1.0 / (s * s);
        }
    }
    v
}

fn hamiltonian_from_partials(p: &Partials, theta: &[f64], cs: &CSParams) -> Complex64 {
    0.5 * p.d2.iter().sum::<Complex64>() - cs.coupling() * potential(theta) * p.value
}

fn check_n(theta: &[f64], cs: &CSParams) -> Result<()> {
    if theta.len() != cs.n {
        return Err(Error::Config(format!("{} angles for n={}", theta.len(), cs.n)));
    }
    if !in_chamber(theta) {
        return Err(Error::Domain(format!("angles {theta:?} are not in the chamber")));
    }
    Ok(())
}

/// `H_n(β) ψ̃ (θ)`.
pub fn apply_cs_hamiltonian(psi_tilde: &dyn Psi, theta: &[f64], cs: &CSParams, scheme: &FiniteDiffScheme) -> Result<Complex64> {
    check_n(theta, cs)?;
    let frozen = psi_tilde.freeze(theta)?;
    let f = frozen.as_deref().unwrap_or(psi_tilde);
    let p = partials(&|t: &[f64]| f.eval(t), theta, scheme, true)?;
    Ok(hamiltonian_from_partials(&p, theta, cs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignResolution {
    Plus,
    Minus,
    /// Both signs fit (the constant vanishes).
    Tie,
    Neither,
}

impl SignResolution {
    fn from_residuals(plus: f64, minus: f64, tol: f64) -> Self {
        match (plus < tol, minus < tol) {
            (true, true) => SignResolution::Tie,
            (true, false) => SignResolution::Plus,
            (false, true) => SignResolution::Minus,
            (false, false) => SignResolution::Neither,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub label: String,
    pub kappa: f64,
    pub n: usize,
    pub h: f64,
    pub samples: Vec<Vec<f64>>,
    /// Pooled `E = −Hψ̃/ψ̃`.
    pub e_measured: Estimate,
    pub e_theory: f64,
    /// Which sign of the conjugation constant the measured energy supports.
    pub resolved_sign: SignResolution,
}

/// `E` at each sample for `ψ̃ = Φ_{1/κ}^{-1} ψ`.
pub fn cs_energies(psi: &dyn Psi, cs: &CSParams, samples: &[Vec<f64>], scheme: &FiniteDiffScheme) -> Result<Vec<Complex64>> {
    let r = 1.0 / cs.kappa;
    samples
        .par_iter()
        .map(|theta| {
            check_n(theta, cs)?;
            let frozen = psi.freeze(theta)?;
            let f = frozen.as_deref().unwrap_or(psi);
            let tilde = |t: &[f64]| -> Result<Complex64> { Ok(f.eval(t)? / phi_r(t, r)?) };
            let p = partials(&tilde, theta, scheme, true)?;
            if p.value.norm() < 1e-300 {
                return Err(Error::Degenerate(format!("ψ̃ vanishes at {theta:?}")));
            }
            Ok(CS_ENERGY_SIGN * hamiltonian_from_partials(&p, theta, cs) / p.value)
        })
        .collect()
}

/// Compare the measured energy of `ψ` (with null-vector constant `h`) against the formula.
pub fn cs_eigencheck(
    label: &str,
    psi: &dyn Psi,
    cs: &CSParams,
    h: f64,
    samples: &[Vec<f64>],
    scheme: &FiniteDiffScheme,
    tol: f64,
) -> Result<EigenCheck> {
    let e = cs_energies(psi, cs, samples, scheme)?;
    let (mut sum, mut lo, mut hi, mut im) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for v in &e {
        sum += v.re;
        lo = lo.min(v.re);
        hi = hi.max(v.re);
        im = im.max(v.im.abs());
    }
    let e_measured = Estimate { mean: sum / e.len() as f64, spread: hi - lo, max_imag: im };
    // κE·(n/κ)⁻¹… written out: E = (n/κ)(−h ± shift·κ/n)/… reduces to (−nh ± shift)/κ
    let with_sign = |s: f64| (-(cs.n as f64) * h + s * cs.shift()) / cs.kappa;
    let resolved_sign = SignResolution::from_residuals(
        (e_measured.mean - with_sign(1.0)).abs(),
        (e_measured.mean - with_sign(-1.0)).abs(),
        tol,
    );
    Ok(EigenCheck {
        label: label.to_string(),
        kappa: cs.kappa,
        n: cs.n,
        h,
        samples: samples.to_vec(),
        e_measured,
        e_theory: cs_energy(cs.n, cs.kappa, h),
        resolved_sign,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugationCheck {
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub resolved: SignResolution,
}

/// Apply both sides of `Φ_{−1/κ}(Σ_j L_j)Φ_{1/κ} F = κH F ± n(n²−1)/(6κ) F` and report which
/// sign leaves a residual below `tol`.
pub fn conjugation_identity_check(
    f: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    cs: &CSParams,
    scheme: &FiniteDiffScheme,
    tol: f64,
) -> Result<ConjugationCheck> {
    check_n(theta, cs)?;
    let kappa = cs.kappa;
    let r = 1.0 / kappa;
    let gauged = |t: &[f64]| -> Result<Complex64> { Ok(Complex64::new(phi_r(t, r)? * f(t), 0.0)) };
    let plain = |t: &[f64]| -> Result<Complex64> { Ok(Complex64::new(f(t), 0.0)) };
    let pg = partials(&gauged, theta, scheme, true)?;
    let mut lhs = Complex64::new(0.0, 0.0);
    let pot = (1.0 - 6.0 / kappa) / 4.0;
    for j in 0..theta.len() {
        lhs += kappa / 2.0 * pg.d2[j];
        for k in 0..theta.len() {
            if k != j {
                let d = theta[k] - theta[j];
                let s = (d / 2.0).sin();
                lhs += pg.d1[k] / (d / 2.0).tan() + pot / (s * s) * pg.value;
            }
        }
    }
    lhs /= phi_r(theta, r)?;
    let pf = partials(&plain, theta, scheme, true)?;
    let kh = kappa * hamiltonian_from_partials(&pf, theta, cs);
    let shift = cs.shift() * pf.value;
    let residual_plus = (lhs - kh - shift).norm();
    let residual_minus = (lhs - kh + shift).norm();
    Ok(ConjugationCheck { residual_plus, residual_minus, resolved: SignResolution::from_residuals(residual_plus, residual_minus, tol) })
}

/// The sign frozen in [`CONJUGATION_SIGN`] as a [`SignResolution`].
pub fn expected_sign() -> SignResolution {
    if CONJUGATION_SIGN > 0.0 {
        SignResolution::Plus
    } else {
        SignResolution::Minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

/// Least-squares line through `(h, E)` pairs.
pub fn eigen_regression(pairs: &[(f64, f64)]) -> Result<Regression> {
    if pairs.len() < 2 {
        return Err(Error::Config("need at least two points".into()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all h values coincide".into()));
    }
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = pairs.iter().map(|p| (p.1 - slope * p.0 - intercept).abs()).fold(0.0, f64::max);
    Ok(Regression { slope, intercept, max_residual })
}
