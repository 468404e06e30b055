//! Finite-difference checks of the null-vector system, the rotation equation, the
//! half-plane Ward identities and the commutation relations.
//!
//! `L_j = (κ/2)∂_j² + Σ_{k≠j} [cot((θ_k−θ_j)/2) ∂_k + (1−6/κ)/(4 sin²((θ_k−θ_j)/2))]`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::in_chamber;
use crate::screening::{HalfPlaneGround, Psi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    fn power(self) -> i32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }
}

/// Central differences, optionally Richardson-extrapolated over successively halved steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffScheme {
    pub step: f64,
    pub order: FdOrder,
    /// Number of step sizes combined; 1 means no extrapolation.
    pub richardson_levels: usize,
}

impl Default for FiniteDiffScheme {
    fn default() -> Self {
        Self { step: 1e-3, order: FdOrder::Fourth, richardson_levels: 2 }
    }
}

impl FiniteDiffScheme {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    /// Largest distance of any probe from the centre point.
    pub fn reach(&self) -> f64 {
        match self.order {
            FdOrder::Second => self.step,
            FdOrder::Fourth => 2.0 * self.step,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || self.richardson_levels == 0 || self.step / 2f64.powi(self.richardson_levels as i32) < 1e-12 {
            return Err(Error::Step(format!("unusable scheme {self:?}")));
        }
        Ok(())
    }
}

/// Value, gradient and diagonal second derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Partials {
    pub value: Complex64,
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
}

fn richardson(estimates: &[Complex64], p: i32) -> Complex64 {
    let mut t = estimates.to_vec();
    let mut q = p;
    while t.len() > 1 {
        let f = 2f64.powi(q);
        t = t.windows(2).map(|w| w[1] + (w[1] - w[0]) / (f - 1.0)).collect();
        q += 2;
    }
    t[0]
}

/// Partial derivatives of `f` at `x` along the coordinate axes.
///
/// With `chamber` set every probe must stay inside the chamber.
pub fn partials(f: &dyn Fn(&[f64]) -> Result<Complex64>, x: &[f64], scheme: &FiniteDiffScheme, chamber: bool) -> Result<Partials> {
    scheme.validate()?;
    let n = x.len();
    if chamber {
        for j in 0..n {
            for s in [-1.0, 1.0] {
                let mut y = x.to_vec();
                y[j] += s * scheme.reach();
                if !in_chamber(&y) {
                    return Err(Error::Step(format!("probe of size {} along axis {} leaves the chamber", scheme.reach(), j + 1)));
                }
            }
        }
    }
    let f0 = f(x)?;
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let mut y = x.to_vec();
    for j in 0..n {
        let mut e1 = Vec::with_capacity(scheme.richardson_levels);
        let mut e2 = Vec::with_capacity(scheme.richardson_levels);
        for l in 0..scheme.richardson_levels {
            let h = scheme.step / 2f64.powi(l as i32);
            let mut at = |s: f64| {
                y[j] = x[j] + s;
                let v = f(&y);
                y[j] = x[j];
                v
            };
            match scheme.order {
                FdOrder::Second => {
                    let (p, m) = (at(h)?, at(-h)?);
                    e1.push((p - m) / (2.0 * h));
                    e2.push((p - 2.0 * f0 + m) / (h * h));
                }
                FdOrder::Fourth => {
                    let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
                    e1.push((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h));
                    e2.push((-p2 + 16.0 * p1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h));
                }
            }
        }
        d1.push(richardson(&e1, scheme.order.power()));
        d2.push(richardson(&e2, scheme.order.power()));
    }
    Ok(Partials { value: f0, d1, d2 })
}

fn psi_fn(psi: &dyn Psi) -> impl Fn(&[f64]) -> Result<Complex64> + '_ {
    move |t: &[f64]| psi.eval(t)
}

fn half_cot(d: f64) -> f64 {
    1.0 / (d / 2.0).tan()
}

fn inv_sin2(d: f64) -> f64 {
    let s = (d / 2.0).sin();
    1.0 / (s * s)
}

/// `L_j ψ` assembled from precomputed partials.
fn nullvec_from_partials(p: &Partials, theta: &[f64], j: usize, kappa: f64) -> Complex64 {
    let mut r = kappa / 2.0 * p.d2[j];
    let pot = (1.0 - 6.0 / kappa) / 4.0;
    for k in 0..theta.len() {
        if k != j {
            let d = theta[k] - theta[j];
            r += half_cot(d) * p.d1[k] + pot * inv_sin2(d) * p.value;
        }
    }
    r
}

fn check_index(theta: &[f64], j: usize) -> Result<()> {
    if j >= theta.len() {
        return Err(Error::Config(format!("index {} out of range for n={}", j + 1, theta.len())));
    }
    Ok(())
}

/// `L_j ψ(θ)`.
pub fn apply_nullvec_operator(psi: &dyn Psi, theta: &[f64], j: usize, kappa: f64, scheme: &FiniteDiffScheme) -> Result<Complex64> {
    check_index(theta, j)?;
    let frozen = psi.freeze(theta)?;
    let p = partials(&psi_fn(frozen.as_deref().unwrap_or(psi)), theta, scheme, true)?;
    Ok(nullvec_from_partials(&p, theta, j, kappa))
}

/// `L_jψ/ψ` for every `j`, and `Σ_j ∂_jψ/ψ`, at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRatios {
    pub theta: Vec<f64>,
    pub h: Vec<Complex64>,
    pub omega: Complex64,
    /// `(log ψ(θ+s) − log ψ(θ−s))/(2s)` with `s` the scheme step.
    pub omega_shift: Complex64,
}

fn point_ratios(psi: &dyn Psi, theta: &[f64], kappa: f64, scheme: &FiniteDiffScheme) -> Result<PointRatios> {
    let frozen = psi.freeze(theta)?;
    let f = psi_fn(frozen.as_deref().unwrap_or(psi));
    let p = partials(&f, theta, scheme, true)?;
    if p.value.norm() < 1e-300 || !p.value.is_finite() {
        return Err(Error::Degenerate(format!("|ψ| = {:e} at {theta:?}", p.value.norm())));
    }
    let h = (0..theta.len()).map(|j| nullvec_from_partials(&p, theta, j, kappa) / p.value).collect();
    let omega = p.d1.iter().sum::<Complex64>() / p.value;
    let s = scheme.step;
    let shifted = |d: f64| -> Result<Complex64> {
        let t: Vec<f64> = theta.iter().map(|x| x + d).collect();
        f(&t)
    };
    let omega_shift = ((shifted(s)? / shifted(-s)?).ln()) / (2.0 * s);
    Ok(PointRatios { theta: theta.to_vec(), h, omega, omega_shift })
}

/// Pooled real estimate with max−min spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub spread: f64,
    /// Largest imaginary part seen in the pooled ratios.
    pub max_imag: f64,
}

fn pool(values: impl Iterator<Item = Complex64>) -> Estimate {
    let (mut sum, mut count, mut lo, mut hi, mut im) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for v in values {
        sum += v.re;
        count += 1;
        lo = lo.min(v.re);
        hi = hi.max(v.re);
        im = im.max(v.im.abs());
    }
    Estimate { mean: sum / count as f64, spread: hi - lo, max_imag: im }
}

fn all_ratios(psi: &dyn Psi, samples: &[Vec<f64>], kappa: f64, scheme: &FiniteDiffScheme) -> Result<Vec<PointRatios>> {
    if samples.len() < 3 {
        return Err(Error::Config(format!("need at least 3 samples, got {}", samples.len())));
    }
    samples.par_iter().map(|t| point_ratios(psi, t, kappa, scheme)).collect()
}

/// Pooled `L_jψ/ψ` over all `j` and samples.
pub fn estimate_h(psi: &dyn Psi, samples: &[Vec<f64>], kappa: f64, scheme: &FiniteDiffScheme) -> Result<Estimate> {
    let r = all_ratios(psi, samples, kappa, scheme)?;
    Ok(pool(r.iter().flat_map(|p| p.h.iter().cloned())))
}

/// Pooled `ω = Σ_j ∂_jψ/ψ`, with the finite-shift estimate alongside.
pub fn estimate_omega(psi: &dyn Psi, samples: &[Vec<f64>], kappa: f64, scheme: &FiniteDiffScheme) -> Result<(Estimate, Estimate)> {
    let r = all_ratios(psi, samples, kappa, scheme)?;
    Ok((pool(r.iter().map(|p| p.omega)), pool(r.iter().map(|p| p.omega_shift))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Free-form description of ψ (family, pattern, …).
    pub label: String,
    pub kappa: f64,
    pub scheme: FiniteDiffScheme,
    pub samples: Vec<Vec<f64>>,
    /// `|L_jψ − hψ|/|ψ|` per sample and index, with `h` the theory value when given and the
    /// pooled estimate otherwise.
    pub per_index: Vec<Vec<f64>>,
    pub h: Estimate,
    pub h_theory: Option<f64>,
    pub omega: Estimate,
    pub omega_shift: Estimate,
    pub omega_theory: Option<f64>,
    pub ward: Option<WardResiduals>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.per_index.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

pub fn residual_report(
    label: &str,
    psi: &dyn Psi,
    samples: &[Vec<f64>],
    kappa: f64,
    scheme: &FiniteDiffScheme,
    h_theory: Option<f64>,
    omega_theory: Option<f64>,
) -> Result<ResidualReport> {
    let r = all_ratios(psi, samples, kappa, scheme)?;
    let h = pool(r.iter().flat_map(|p| p.h.iter().cloned()));
    let target = h_theory.unwrap_or(h.mean);
    Ok(ResidualReport {
        label: label.to_string(),
        kappa,
        scheme: *scheme,
        samples: samples.to_vec(),
        per_index: r.iter().map(|p| p.h.iter().map(|v| (v - target).norm()).collect()).collect(),
        h,
        h_theory,
        omega: pool(r.iter().map(|p| p.omega)),
        omega_shift: pool(r.iter().map(|p| p.omega_shift)),
        omega_theory,
        ward: None,
    })
}

/// Scaled residuals of the translation, dilation and special conformal Ward identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WardResiduals {
    pub translation: f64,
    pub dilation: f64,
    pub special: f64,
}

impl WardResiduals {
    pub fn max(&self) -> f64 {
        self.translation.max(self.dilation).max(self.special)
    }
}

/// Ward residuals of a function `J(p_1, …, p_N)` holomorphic in each argument, with weights
/// `λ_k`: `Σ∂_k`, `Σ(p_k∂_k + λ_k)`, `Σ(p_k²∂_k + 2λ_k p_k)`, each divided by `|J|`.
///
/// Derivatives are taken along the real direction.
pub fn check_ward(
    j: &dyn Fn(&[Complex64]) -> Result<Complex64>,
    points: &[Complex64],
    lambdas: &[f64],
    scheme: &FiniteDiffScheme,
) -> Result<WardResiduals> {
    if points.len() != lambdas.len() {
        return Err(Error::Config("one weight per point required".into()));
    }
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if (points[a] - points[b]).norm() <= 4.0 * scheme.reach() {
                return Err(Error::Singular(format!("points {} and {} nearly coincide", a + 1, b + 1)));
            }
        }
    }
    let g = |s: &[f64]| -> Result<Complex64> {
        let p: Vec<Complex64> = points.iter().zip(s).map(|(z, d)| z + d).collect();
        j(&p)
    };
    let zero = vec![0.0; points.len()];
    let p = partials(&g, &zero, scheme, false)?;
    let jv = p.value;
    if jv.norm() < 1e-300 {
        return Err(Error::Degenerate("J vanishes at the configuration".into()));
    }
    let (mut t, mut d, mut s) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for k in 0..points.len() {
        let (z, l, dk) = (points[k], lambdas[k], p.d1[k]);
        t += dk;
        d += z * dk + l * jv;
        s += z * z * dk + 2.0 * l * z * jv;
    }
    let n = jv.norm();
    Ok(WardResiduals { translation: t.norm() / n, dilation: d.norm() / n, special: s.norm() / n })
}

/// Ward check of the half-plane ground function at `(z_1..z_n, u, u*)`; `weights` overrides
/// `(λ_z, λ_u)`.
pub fn check_ward_half_plane(
    hp: &HalfPlaneGround,
    points: &[Complex64],
    weights: Option<(f64, f64)>,
    scheme: &FiniteDiffScheme,
) -> Result<WardResiduals> {
    let (lz, lu) = weights.unwrap_or_else(|| hp.weights());
    let frozen = hp.freeze(points)?;
    let mut lambdas = vec![lz; hp.n()];
    lambdas.extend([lu, lu]);
    check_ward(&|p| frozen.value(p), points, &lambdas, scheme)
}

/// Steps of the nested differences used by the commutator checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedScheme {
    pub inner: FiniteDiffScheme,
    pub outer: FiniteDiffScheme,
}

impl Default for NestedScheme {
    fn default() -> Self {
        let inner = FiniteDiffScheme { step: 1e-2, ..FiniteDiffScheme::default() };
        Self { inner, outer: FiniteDiffScheme { step: 3e-2, ..inner } }
    }
}

fn check_pair(theta: &[f64], j: usize, k: usize) -> Result<()> {
    check_index(theta, j)?;
    check_index(theta, k)
}

/// `|([L_j,L_k] − sin⁻²((θ_j−θ_k)/2)(L_k−L_j))ψ| / |ψ|` by nested differences.
pub fn commutator_check_nullvec(psi: &dyn Psi, theta: &[f64], j: usize, k: usize, kappa: f64, scheme: &NestedScheme) -> Result<f64> {
    check_pair(theta, j, k)?;
    if j == k {
        return Ok(0.0);
    }
    let frozen = psi.freeze(theta)?;
    let f = psi_fn(frozen.as_deref().unwrap_or(psi));
    let lf = |idx: usize| {
        let f = &f;
        move |t: &[f64]| -> Result<Complex64> {
            let p = partials(f, t, &scheme.inner, true)?;
            Ok(nullvec_from_partials(&p, t, idx, kappa))
        }
    };
    let (lj, lk) = (lf(j), lf(k));
    let outer_j = partials(&lk, theta, &scheme.outer, true)?;
    let outer_k = partials(&lj, theta, &scheme.outer, true)?;
    let ljlk = nullvec_from_partials(&outer_j, theta, j, kappa);
    let lklj = nullvec_from_partials(&outer_k, theta, k, kappa);
    let base = partials(&f, theta, &scheme.inner, true)?;
    let rhs = inv_sin2(theta[j] - theta[k])
        * (nullvec_from_partials(&base, theta, k, kappa) - nullvec_from_partials(&base, theta, j, kappa));
    if base.value.norm() < 1e-300 {
        return Err(Error::Degenerate("ψ vanishes at the configuration".into()));
    }
    Ok((ljlk - lklj - rhs).norm() / base.value.norm())
}

/// Drift vector field `b(θ)`.
pub type DriftFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a;

/// `M_i F = (κ/2)∂_i²F + b_i ∂_iF + Σ_{j≠i} cot((θ_j−θ_i)/2) ∂_jF` from partials.
fn generator_from_partials(p: &Partials, theta: &[f64], i: usize, kappa: f64, b: &[f64]) -> Complex64 {
    let mut r = kappa / 2.0 * p.d2[i] + b[i] * p.d1[i];
    for k in 0..theta.len() {
        if k != i {
            r += half_cot(theta[k] - theta[i]) * p.d1[k];
        }
    }
    r
}

/// `|([M_i,M_j] − sin⁻²((θ_j−θ_i)/2)(M_j−M_i))F|` at `theta`.
pub fn commutator_check_generators(
    drifts: &DriftFn<'_>,
    f: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    i: usize,
    j: usize,
    kappa: f64,
    scheme: &NestedScheme,
) -> Result<f64> {
    check_pair(theta, i, j)?;
    if i == j {
        return Ok(0.0);
    }
    let fc = |t: &[f64]| -> Result<Complex64> { Ok(Complex64::new(f(t), 0.0)) };
    let mf = |idx: usize| {
        let fc = &fc;
        move |t: &[f64]| -> Result<Complex64> {
            let p = partials(fc, t, &scheme.inner, true)?;
            Ok(generator_from_partials(&p, t, idx, kappa, &drifts(t)?))
        }
    };
    let (mi, mj) = (mf(i), mf(j));
    let b0 = drifts(theta)?;
    let outer_i = partials(&mj, theta, &scheme.outer, true)?;
    let outer_j = partials(&mi, theta, &scheme.outer, true)?;
    let mimj = generator_from_partials(&outer_i, theta, i, kappa, &b0);
    let mjmi = generator_from_partials(&outer_j, theta, j, kappa, &b0);
    let base = partials(&fc, theta, &scheme.inner, true)?;
    let rhs = inv_sin2(theta[j] - theta[i])
        * (generator_from_partials(&base, theta, j, kappa, &b0) - generator_from_partials(&base, theta, i, kappa, &b0));
    Ok((mimj - mjmi - rhs).norm())
}

/// `κ ∂_j log ψ` (real part) by finite differences.
pub fn kappa_log_gradient(psi: &dyn Psi, theta: &[f64], kappa: f64, scheme: &FiniteDiffScheme) -> Result<Vec<f64>> {
    let p = partials(&psi_fn(psi), theta, scheme, true)?;
    if p.value.norm() < 1e-300 {
        return Err(Error::Degenerate(format!("ψ vanishes at {theta:?}")));
    }
    Ok(p.d1.iter().map(|d| kappa * (d / p.value).re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkpatterns::LinkPattern;
    use crate::screening::{FermionicGround, Family, PartitionEvaluator, ScreeningSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn one(_: &[f64]) -> Result<Complex64> {
        Ok(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn constant_function_sees_only_the_potential() {
        let s = FiniteDiffScheme::default();
        let v = apply_nullvec_operator(&one, &[0.0, PI], 0, 4.0, &s).unwrap();
        assert!((v - Complex64::new(-0.125, 0.0)).norm() < 1e-12);
        assert_eq!(apply_nullvec_operator(&one, &[0.3], 0, 4.0, &s).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fermionic_h_at_two_points() {
        for kappa in [2.0, 3.0, 6.0] {
            let f = FermionicGround::new(kappa).unwrap();
            let samples = vec![vec![0.0, 1.0], vec![0.5, 3.0], vec![-1.0, 2.5]];
            let e = estimate_h(&f, &samples, kappa, &FiniteDiffScheme::default()).unwrap();
            assert!((e.mean + 3.0 / (2.0 * kappa)).abs() < 1e-8, "{e:?}");
            assert!(e.spread < 1e-8);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let f = FermionicGround::new(3.0).unwrap();
        let th = [0.1, 1.2, 3.3];
        let err = |h: f64| {
            let s = FiniteDiffScheme { step: h, order: FdOrder::Fourth, richardson_levels: 1 };
            (apply_nullvec_operator(&f, &th, 1, 3.0, &s).unwrap() / f.value(&th).unwrap() - Complex64::new(-8.0 / 6.0, 0.0)).norm()
        };
        let (a, b) = (err(0.08), err(0.04));
        assert!(a / b >= 12.0, "ratio {}", a / b);
        let s2 = FiniteDiffScheme { step: 0.04, order: FdOrder::Second, richardson_levels: 1 };
        let e2 = (apply_nullvec_operator(&f, &th, 1, 3.0, &s2).unwrap() / f.value(&th).unwrap() + 8.0 / 6.0).norm();
        assert!(e2 > b);
    }

    #[test]
    fn probe_outside_chamber_is_step_error() {
        let s = FiniteDiffScheme::default().with_step(0.1);
        assert!(matches!(apply_nullvec_operator(&one, &[0.0, 0.15], 0, 3.0, &s), Err(Error::Step(_))));
    }

    #[test]
    fn exponential_has_exact_omega() {
        let c = 0.3;
        let psi = move |t: &[f64]| -> Result<Complex64> { Ok(Complex64::new((c * t.iter().sum::<f64>()).exp(), 0.0)) };
        let samples = vec![vec![0.0, 1.0, 2.0], vec![0.2, 1.5, 4.0], vec![1.0, 2.0, 3.0]];
        let (o, sh) = estimate_omega(&psi, &samples, 3.0, &FiniteDiffScheme::default()).unwrap();
        assert!((o.mean - 3.0 * c).abs() < 1e-10);
        assert!((sh.mean - 3.0 * c).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_too_few_samples() {
        let zero = |_: &[f64]| -> Result<Complex64> { Ok(Complex64::new(0.0, 0.0)) };
        let samples = vec![vec![0.0, 1.0]; 3];
        assert!(matches!(estimate_h(&zero, &samples, 3.0, &FiniteDiffScheme::default()), Err(Error::Degenerate(_))));
        assert!(matches!(estimate_h(&one, &samples[..2], 3.0, &FiniteDiffScheme::default()), Err(Error::Config(_))));
    }

    #[test]
    fn ward_on_pure_product() {
        // neutral two-point product (z1−z2)^{−2λ}: weights λ at both points
        let lam = 0.3;
        let j = move |p: &[Complex64]| -> Result<Complex64> { Ok((p[1] - p[0]).powf(-2.0 * lam)) };
        let pts = [Complex64::new(-0.5, 0.0), Complex64::new(0.7, 0.4)];
        let s = FiniteDiffScheme::default();
        let w = check_ward(&j, &pts, &[lam, lam], &s).unwrap();
        assert!(w.max() < 1e-8, "{w:?}");
        let bad = check_ward(&j, &pts, &[lam + 1.0, lam + 1.0], &s).unwrap();
        assert!(bad.dilation > 1e-2);
    }

    #[test]
    fn ward_half_plane_screened() {
        let pat: LinkPattern = "chordal n=3|(1 2)|rays:3|winding:0".parse().unwrap();
        let hp = HalfPlaneGround::new(3.0, pat).unwrap();
        let mut pts: Vec<Complex64> = [-1.0, 0.3, 1.1].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        pts.extend([Complex64::new(0.2, 1.3), Complex64::new(0.2, -1.3)]);
        let w = check_ward_half_plane(&hp, &pts, None, &FiniteDiffScheme::default()).unwrap();
        assert!(w.max() < 1e-5, "{w:?}");
    }

    #[test]
    fn nullvec_commutator_two_points() {
        let sch = NestedScheme::default();
        let f = FermionicGround::new(3.0).unwrap();
        assert!(commutator_check_nullvec(&f, &[0.2, 2.0], 0, 1, 3.0, &sch).unwrap() < 1e-4);
        assert!(commutator_check_nullvec(&one, &[0.2, 2.0], 0, 1, 3.0, &sch).unwrap() < 1e-4);
        assert_eq!(commutator_check_nullvec(&one, &[0.2, 2.0], 1, 1, 3.0, &sch).unwrap(), 0.0);
    }

    #[test]
    fn generator_commutator_and_negative_control() {
        let sch = NestedScheme::default();
        let kappa = 3.0;
        let drift = |t: &[f64]| -> Result<Vec<f64>> { Ok(FermionicGround::kappa_log_gradient(t)) };
        let f = |t: &[f64]| t[0] * t[1];
        let r = commutator_check_generators(&drift, &f, &[0.3, 2.1], 0, 1, kappa, &sch).unwrap();
        assert!(r < 1e-4, "{r}");
        // zero drift is the drift of ψ ≡ 1, a solution only where the potential vanishes (κ = 6)
        let zero = |t: &[f64]| -> Result<Vec<f64>> { Ok(vec![0.0; t.len()]) };
        let cos = |t: &[f64]| t[0].cos();
        let r6 = commutator_check_generators(&zero, &cos, &[0.3, 2.1], 0, 1, 6.0, &sch).unwrap();
        assert!(r6 < 1e-4, "{r6}");
        let r4 = commutator_check_generators(&zero, &cos, &[0.3, 2.1], 0, 1, 4.0, &sch).unwrap();
        assert!(r4 > 1e-1, "{r4}");
    }

    #[test]
    fn ground_j_h_two_points() {
        let kappa = 3.5;
        let ev = PartitionEvaluator::new(ScreeningSpec::standard(Family::GroundJ, kappa, 2, 1).unwrap()).unwrap();
        let samples = vec![vec![0.1, 2.0], vec![0.4, 3.4], vec![-0.5, 1.0]];
        let e = estimate_h(&ev, &samples, kappa, &FiniteDiffScheme::default()).unwrap();
        assert!((e.mean - 1.0 / (2.0 * kappa)).abs() < 1e-6, "{e:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn richardson_exact_on_polynomials(c in -2.0f64..2.0, x0 in -1.0f64..1.0) {
            // fourth-order differences are exact on quartics, up to rounding
            let f = move |t: &[f64]| -> Result<Complex64> { Ok(Complex64::new(c * t[0].powi(4) + t[0].powi(3), 0.0)) };
            let p = partials(&f, &[x0], &FiniteDiffScheme::default().with_step(0.1), false).unwrap();
            prop_assert!((p.d1[0].re - (4.0 * c * x0.powi(3) + 3.0 * x0 * x0)).abs() < 1e-10);
            prop_assert!((p.d2[0].re - (12.0 * c * x0 * x0 + 6.0 * x0)).abs() < 1e-9);
        }
    }
}
