//! Multiple radial Loewner chains: driving SDE, covering-map flow, tip reconstruction and
//! capacity diagnostics.
//!
//! Driving: `dθ_j = ν_j b_j(θ) dt + Σ_{k≠j} ν_k cot((θ_j−θ_k)/2) dt + √(κν_j) dW_j`, where
//! `b_j` is `κ∂_j log ψ` (or the mode's equivalent). Covering flow:
//! `∂_t h = Σ_j ν_j cot((h−θ_j)/2)`; the disk picture is `z = e^{ih}`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conventions::{RhoConvention, KAPPA_ZERO_GROWTH_CHARGE};
use crate::error::{Error, Result};
use crate::nullvec::{kappa_log_gradient, FiniteDiffScheme};
use crate::params::{derive_params, in_chamber, min_gap};
use crate::screening::{PartitionEvaluator, Psi, ScreeningSpec};

pub const TRACE_SCHEMA_ID: &str = "radial-sle.trace.v1";
pub const DIAGNOSTICS_SCHEMA_ID: &str = "radial-sle.diagnostics.v1";

/// A boundary marked point with a (real) charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub angle: f64,
    pub charge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftMode {
    /// `b_j = Σ_{k≠j} cot((θ_j−θ_k)/2)`, from `ψ = Π sin^{2/κ}`.
    ClosedFormFermionic,
    /// `b_j = κ∂_j log ψ` of a screening integral, by finite differences.
    NumericPsi { spec: ScreeningSpec },
    /// Coulomb gas with charge `a` at every growth point and the given marked charges:
    /// `b_j = κ∂_j log Π sin(|Δ|/2)^{σσ'}`.
    Rational { marked: Vec<MarkedPoint> },
    /// `b_j = Σ_q ρ_q cot((θ_j−q)/2)`.
    SleKappaRho { points: Vec<f64>, rho: Vec<f64> },
    /// Deterministic limit with classical charges: growth charge 1 and
    /// `b_j = ∂_j log Π sin(|Δ|/2)^{2σσ'}`.
    KappaZero { marked: Vec<MarkedPoint> },
}

impl DriftMode {
    fn marked_angles(&self) -> Vec<f64> {
        match self {
            DriftMode::Rational { marked } | DriftMode::KappaZero { marked } => marked.iter().map(|m| m.angle).collect(),
            DriftMode::SleKappaRho { points, .. } => points.clone(),
            _ => Vec::new(),
        }
    }
}

fn default_collision_eps() -> f64 {
    1e-3
}
fn default_tip_offset() -> f64 {
    1e-4
}
fn default_tip_stride() -> usize {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub kappa: f64,
    pub n: usize,
    pub drift_mode: DriftMode,
    /// Per-curve rates; empty means all 1.
    #[serde(default)]
    pub nu: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_collision_eps")]
    pub collision_eps: f64,
    #[serde(default = "default_tip_offset")]
    pub tip_offset: f64,
    /// Starting angles; empty means equally spaced from 0.
    #[serde(default)]
    pub initial: Vec<f64>,
    /// Steps between reconstructed tips; 0 picks about 200 samples, `usize::MAX` disables tips.
    #[serde(default = "default_tip_stride")]
    pub tip_stride: usize,
    #[serde(default)]
    pub fd: FiniteDiffScheme,
}

impl SimConfig {
    pub fn new(kappa: f64, n: usize, drift_mode: DriftMode, dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            kappa,
            n,
            drift_mode,
            nu: Vec::new(),
            dt,
            horizon,
            seed,
            collision_eps: default_collision_eps(),
            tip_offset: default_tip_offset(),
            initial: Vec::new(),
            tip_stride: default_tip_stride(),
            fd: FiniteDiffScheme::default(),
        }
    }

    pub fn nu(&self) -> Vec<f64> {
        if self.nu.is_empty() {
            vec![1.0; self.n]
        } else {
            self.nu.clone()
        }
    }

    pub fn initial_angles(&self) -> Vec<f64> {
        if self.initial.is_empty() {
            (0..self.n).map(|j| 2.0 * PI * j as f64 / self.n as f64).collect()
        } else {
            self.initial.clone()
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return bad(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.dt > 0.0) || !(self.horizon > 0.0) || !self.dt.is_finite() || !self.horizon.is_finite() {
            return bad(format!("dt and T must be positive, got dt={} T={}", self.dt, self.horizon));
        }
        if !(self.collision_eps > 0.0) || !(self.tip_offset > 0.0) {
            return bad("collision_eps and tip_offset must be positive".into());
        }
        let nu = self.nu();
        if nu.len() != self.n || nu.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad(format!("nu must hold {} nonnegative rates", self.n));
        }
        let theta = self.initial_angles();
        if theta.len() != self.n {
            return bad(format!("{} initial angles for n={}", theta.len(), self.n));
        }
        if !in_chamber(&theta) || (self.n > 1 && min_gap(&theta) <= 10.0 * self.collision_eps) {
            return bad(format!("initial angles {theta:?} must be increasing with gaps above 10·collision_eps"));
        }
        let marked = self.drift_mode.marked_angles();
        for q in &marked {
            if theta.iter().any(|t| circle_distance(*t, *q) <= 10.0 * self.collision_eps) {
                return bad(format!("marked point {q} is too close to a starting angle"));
            }
        }
        match &self.drift_mode {
            DriftMode::KappaZero { .. } if self.kappa != 0.0 => return bad("kappa_zero mode requires kappa = 0".into()),
            DriftMode::NumericPsi { spec } => {
                if self.kappa == 0.0 || (spec.kappa - self.kappa).abs() > 1e-12 || spec.n != self.n {
                    return bad("numeric_psi spec must match kappa > 0 and n".into());
                }
                spec.validate()?;
            }
            DriftMode::Rational { .. } if self.kappa == 0.0 => {
                return bad("rational mode needs kappa > 0; use kappa_zero".into())
            }
            DriftMode::SleKappaRho { points, rho } if points.len() != rho.len() => {
                return bad(format!("{} points but {} rho weights", points.len(), rho.len()))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Horizon,
    Collision,
    Blowup,
}

/// Seed of stream `stream` derived from a master seed (SplitMix64 finalizer on both).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(stream))
}

#[derive(Debug, Clone)]
pub struct DrivingState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub marked: Vec<f64>,
    pub rng_streams: Vec<ChaCha8Rng>,
}

impl DrivingState {
    pub fn initial(cfg: &SimConfig) -> Self {
        Self {
            t: 0.0,
            theta: cfg.initial_angles(),
            marked: cfg.drift_mode.marked_angles(),
            rng_streams: (0..cfg.n).map(|j| ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, j as u64))).collect(),
        }
    }

    /// `n` increments `N(0, dt)`, one from each curve's stream.
    pub fn draw(&mut self, dt: f64) -> Vec<f64> {
        let s = dt.sqrt();
        self.rng_streams.iter_mut().map(|r| s * r.sample::<f64, _>(StandardNormal)).collect()
    }
}

fn half_cot(x: f64) -> f64 {
    1.0 / (x / 2.0).tan()
}

/// `cot(z/2)`, saturated far from the real axis.
fn half_cot_c(z: Complex64) -> Complex64 {
    if z.im > 40.0 {
        Complex64::new(0.0, -1.0)
    } else if z.im < -40.0 {
        Complex64::new(0.0, 1.0)
    } else {
        1.0 / (z / 2.0).tan()
    }
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// A prepared simulator: the configuration plus whatever the drift mode needs.
pub struct Simulator {
    cfg: SimConfig,
    nu: Vec<f64>,
    evaluator: Option<PartitionEvaluator>,
    growth_charge: f64,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let evaluator = match &cfg.drift_mode {
            DriftMode::NumericPsi { spec } => Some(PartitionEvaluator::new(spec.clone())?),
            _ => None,
        };
        let growth_charge = if cfg.kappa > 0.0 { derive_params(cfg.kappa)?.a } else { KAPPA_ZERO_GROWTH_CHARGE };
        let nu = cfg.nu();
        Ok(Self { cfg, nu, evaluator, growth_charge })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Mode drift `b_j` (before the `ν_j` factor and the interaction term).
    pub fn mode_drift(&self, theta: &[f64], marked: &[f64]) -> Result<Vec<f64>> {
        let kappa = self.cfg.kappa;
        let n = theta.len();
        let pair = |j: usize| -> f64 { (0..n).filter(|&k| k != j).map(|k| half_cot(theta[j] - theta[k])).sum() };
        Ok(match &self.cfg.drift_mode {
            DriftMode::ClosedFormFermionic => (0..n).map(pair).collect(),
            DriftMode::NumericPsi { .. } => {
                let ev = self.evaluator.as_ref().expect("prepared");
                let frozen = ev.freeze(theta)?;
                kappa_log_gradient(frozen.as_deref().unwrap_or(ev as &dyn Psi), theta, kappa, &self.cfg.fd)?
            }
            DriftMode::Rational { marked: m } => {
                let a = self.growth_charge;
                (0..n)
                    .map(|j| {
                        kappa * a * a / 2.0 * pair(j)
                            + m.iter().zip(marked).map(|(p, q)| kappa * a * p.charge / 2.0 * half_cot(theta[j] - q)).sum::<f64>()
                    })
                    .collect()
            }
            DriftMode::SleKappaRho { rho, .. } => {
                (0..n).map(|j| rho.iter().zip(marked).map(|(r, q)| r * half_cot(theta[j] - q)).sum()).collect()
            }
            DriftMode::KappaZero { marked: m } => {
                let s = self.growth_charge;
                (0..n)
                    .map(|j| s * s * pair(j) + m.iter().zip(marked).map(|(p, q)| s * p.charge * half_cot(theta[j] - q)).sum::<f64>())
                    .collect()
            }
        })
    }

    /// Full drift `ν_j b_j + Σ_{k≠j} ν_k cot((θ_j−θ_k)/2)`.
    pub fn drift(&self, theta: &[f64], marked: &[f64]) -> Result<Vec<f64>> {
        let b = self.mode_drift(theta, marked)?;
        Ok((0..theta.len())
            .map(|j| {
                self.nu[j] * b[j]
                    + (0..theta.len()).filter(|&k| k != j).map(|k| self.nu[k] * half_cot(theta[j] - theta[k])).sum::<f64>()
            })
            .collect())
    }

    fn marked_velocity(&self, q: f64, theta: &[f64]) -> f64 {
        theta.iter().zip(&self.nu).map(|(t, v)| v * half_cot(q - t)).sum()
    }

    /// One Euler–Maruyama step with increments `dw ~ N(0, dt)`. On a halt the state is left
    /// unchanged.
    pub fn step(&self, state: &mut DrivingState, dw: &[f64], dt: f64) -> Result<Option<HaltReason>> {
        let drift = match self.drift(&state.theta, &state.marked) {
            Ok(d) => d,
            Err(Error::Singular(_)) | Err(Error::Degenerate(_)) => return Ok(Some(HaltReason::Blowup)),
            Err(e) => return Err(e),
        };
        let kappa = self.cfg.kappa;
        let next: Vec<f64> = (0..state.theta.len())
            .map(|j| state.theta[j] + drift[j] * dt + (kappa * self.nu[j]).sqrt() * dw[j])
            .collect();
        let marked: Vec<f64> = state.marked.iter().map(|&q| q + self.marked_velocity(q, &state.theta) * dt).collect();
        if next.iter().chain(&marked).any(|x| !x.is_finite())
            || next.iter().zip(&state.theta).any(|(a, b)| (a - b).abs() > PI)
        {
            return Ok(Some(HaltReason::Blowup));
        }
        let eps = self.cfg.collision_eps;
        let hits_marked = next.iter().any(|t| marked.iter().any(|q| circle_distance(*t, *q) < eps));
        if !in_chamber(&next) || (next.len() > 1 && min_gap(&next) < eps) || hits_marked {
            return Ok(Some(HaltReason::Collision));
        }
        state.theta = next;
        state.marked = marked;
        state.t += dt;
        Ok(None)
    }

    fn tip_stride(&self, steps: usize) -> Option<usize> {
        match self.cfg.tip_stride {
            usize::MAX => None,
            0 => Some((steps / 200).max(1)),
            s => Some(s),
        }
    }

    pub fn run(&self) -> Result<TraceResult> {
        let dt = self.cfg.dt;
        let steps = self.cfg.steps();
        let mut state = DrivingState::initial(&self.cfg);
        let mut times = vec![0.0];
        let mut paths: Vec<Vec<f64>> = state.theta.iter().map(|t| vec![*t]).collect();
        let mut marked_paths: Vec<Vec<f64>> = state.marked.iter().map(|q| vec![*q]).collect();
        let mut halt = HaltReason::Horizon;
        for k in 0..steps {
            let h = if k + 1 == steps { self.cfg.horizon - k as f64 * dt } else { dt };
            let dw = state.draw(h);
            if let Some(r) = self.step(&mut state, &dw, h)? {
                halt = r;
                break;
            }
            times.push(state.t);
            for (p, t) in paths.iter_mut().zip(&state.theta) {
                p.push(*t);
            }
            for (p, q) in marked_paths.iter_mut().zip(&state.marked) {
                p.push(*q);
            }
        }
        let driving = DrivingPaths { times, theta: paths, nu: self.nu.clone() };
        let total_nu: f64 = self.nu.iter().sum();
        let y0 = 30.0 + self.cfg.horizon * total_nu;
        let origin = driving.flow_series(Complex64::new(0.0, y0));
        let log_conformal_radius = origin.iter().map(|w| w.im - y0).collect();
        let tip_times = match self.tip_stride(driving.times.len() - 1) {
            None => Vec::new(),
            Some(s) => {
                let last = driving.times.len() - 1;
                let mut v: Vec<usize> = (0..=last).step_by(s).collect();
                if *v.last().unwrap() != last {
                    v.push(last);
                }
                v
            }
        };
        let tips = trace_tips(&driving, &tip_times, self.cfg.tip_offset);
        Ok(TraceResult {
            schema_id: TRACE_SCHEMA_ID.to_string(),
            times: driving.times.clone(),
            driving_paths: driving.theta,
            marked_paths,
            tip_indices: tip_times,
            tips,
            log_conformal_radius,
            halt_reason: halt,
        })
    }
}

/// One Euler–Maruyama step of the driving process.
pub fn step_driving(state: &DrivingState, cfg: &SimConfig, dw: &[f64]) -> Result<(DrivingState, Option<HaltReason>)> {
    let sim = Simulator::new(cfg.clone())?;
    let mut next = state.clone();
    let halt = sim.step(&mut next, dw, cfg.dt)?;
    Ok((next, halt))
}

/// Driving functions sampled on a time grid (linear in between).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPaths {
    pub times: Vec<f64>,
    /// `theta[j][k]` is curve `j` at `times[k]`.
    pub theta: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
}

impl DrivingPaths {
    fn at(&self, k: usize, s: f64) -> impl Iterator<Item = f64> + '_ {
        // position within [times[k], times[k+1]]
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let u = if t1 > t0 { (s - t0) / (t1 - t0) } else { 0.0 };
        self.theta.iter().map(move |p| p[k] + u * (p[k + 1] - p[k]))
    }

    fn velocity(&self, k: usize, s: f64, w: Complex64) -> Complex64 {
        self.at(k, s).zip(&self.nu).map(|(t, v)| *v * half_cot_c(w - t)).sum()
    }

    fn distance(&self, k: usize, s: f64, w: Complex64) -> f64 {
        self.at(k, s).map(|t| 2.0 * ((w - t) / 2.0).sin().norm()).fold(f64::INFINITY, f64::min)
    }

    fn rk4(&self, k: usize, s: f64, h: f64, w: Complex64) -> Complex64 {
        let k1 = self.velocity(k, s, w);
        let k2 = self.velocity(k, s + h / 2.0, w + h / 2.0 * k1);
        let k3 = self.velocity(k, s + h / 2.0, w + h / 2.0 * k2);
        let k4 = self.velocity(k, s + h, w + h * k3);
        w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `h_t(z)` at every grid time, one RK4 step per grid interval.
    pub fn flow_series(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut w = z;
        out.push(w);
        for k in 0..self.times.len() - 1 {
            w = self.rk4(k, self.times[k], self.times[k + 1] - self.times[k], w);
            out.push(w);
        }
        out
    }

    /// Tip of curve `j` at grid index `k`: the reverse flow from `θ_j(t_k) + iδ` back to time 0,
    /// mapped to the disk. `None` if the reverse flow cannot be resolved.
    pub fn tip(&self, j: usize, k: usize, delta: f64) -> Option<Complex64> {
        let mut w = Complex64::new(self.theta[j][k], delta);
        for seg in (0..k).rev() {
            let (t0, t1) = (self.times[seg], self.times[seg + 1]);
            let mut s = t1;
            while s > t0 {
                let v = self.velocity(seg, s, w).norm();
                let d = self.distance(seg, s, w);
                let h = if v > 0.0 { (0.1 * d / v).min(s - t0) } else { s - t0 };
                if !(h > 1e-15 * (1.0 + s)) {
                    return None;
                }
                w = self.rk4(seg, s, -h, w);
                if !w.re.is_finite() || !w.im.is_finite() {
                    return None;
                }
                s = if h >= s - t0 { t0 } else { s - h };
            }
        }
        Some((Complex64::i() * w).exp())
    }
}

/// Evolve points `z` (covering coordinates) from time 0 to the end of the driving paths.
/// Points that come within `tip_offset` of a driving value are reported as swallowed (`None`).
pub fn evolve_covering_map(points: &[Complex64], driving: &DrivingPaths, tip_offset: f64) -> Vec<Option<Complex64>> {
    points
        .iter()
        .map(|&z| {
            let mut w = z;
            for k in 0..driving.times.len() - 1 {
                if driving.distance(k, driving.times[k], w) < tip_offset {
                    return None;
                }
                w = driving.rk4(k, driving.times[k], driving.times[k + 1] - driving.times[k], w);
            }
            let last = driving.times.len() - 1;
            let d = driving.theta.iter().map(|p| 2.0 * ((w - p[last]) / 2.0).sin().norm()).fold(f64::INFINITY, f64::min);
            (d >= tip_offset && w.re.is_finite() && w.im.is_finite()).then_some(w)
        })
        .collect()
}

/// Tips for every curve at the grid indices `indices`: `tips[j][i]` is curve `j` at `indices[i]`.
pub fn trace_tips(driving: &DrivingPaths, indices: &[usize], delta: f64) -> Vec<Vec<Option<Complex64>>> {
    (0..driving.theta.len())
        .map(|j| indices.par_iter().map(|&k| if k == 0 { Some(Complex64::from_polar(1.0, driving.theta[j][0])) } else { driving.tip(j, k, delta) }).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub schema_id: String,
    pub times: Vec<f64>,
    pub driving_paths: Vec<Vec<f64>>,
    pub marked_paths: Vec<Vec<f64>>,
    /// Grid indices at which tips were reconstructed.
    pub tip_indices: Vec<usize>,
    pub tips: Vec<Vec<Option<Complex64>>>,
    /// `log CR(𝔻∖K_t) = −log g_t'(0)` at every grid time.
    pub log_conformal_radius: Vec<f64>,
    pub halt_reason: HaltReason,
}

impl TraceResult {
    /// Least-squares slope of `log CR` against `t`.
    pub fn capacity_slope(&self) -> f64 {
        slope(&self.times, &self.log_conformal_radius)
    }

    /// Driving increments of curve `j`.
    pub fn increments(&self, j: usize) -> Vec<f64> {
        self.driving_paths[j].windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `t, curve_id, re_tip, im_tip, theta` rows at the tip sample times (all grid times when
    /// tips are disabled, with empty tip fields). The first line is a `# schema_id=` comment.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# schema_id={}", self.schema_id)?;
        writeln!(w, "t,curve_id,re_tip,im_tip,theta")?;
        let with_tips = !self.tip_indices.is_empty();
        let rows: Vec<usize> = if with_tips { self.tip_indices.clone() } else { (0..self.times.len()).collect() };
        for (i, &k) in rows.iter().enumerate() {
            for j in 0..self.driving_paths.len() {
                let (re, im) = match with_tips.then(|| self.tips[j][i]).flatten() {
                    Some(z) => (format!("{}", z.re), format!("{}", z.im)),
                    None => (String::new(), String::new()),
                };
                writeln!(w, "{},{},{},{},{}", self.times[k], j, re, im, self.driving_paths[j][k])?;
            }
        }
        Ok(())
    }

    pub fn diagnostics(&self, cfg: &SimConfig) -> serde_json::Value {
        let total_nu: f64 = cfg.nu().iter().sum();
        let missing = self.tips.iter().flatten().filter(|t| t.is_none()).count();
        serde_json::json!({
            "schema_id": DIAGNOSTICS_SCHEMA_ID,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "halt_reason": self.halt_reason,
            "steps": self.times.len() - 1,
            "t_final": self.times.last(),
            "capacity": {
                "times": self.times,
                "log_conformal_radius": self.log_conformal_radius,
                "slope": self.capacity_slope(),
                "expected_slope": -total_nu,
            },
            "missing_tips": missing,
        })
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run_simulation(cfg: &SimConfig) -> Result<TraceResult> {
    Simulator::new(cfg.clone())?.run()
}

/// Independent runs; member `r` uses master seed `derive_seed(cfg.seed, 1 << 32 | r)`.
pub fn run_ensemble(cfg: &SimConfig, members: usize) -> Result<Vec<TraceResult>> {
    (0..members)
        .into_par_iter()
        .map(|r| {
            let mut c = cfg.clone();
            c.seed = derive_seed(cfg.seed, (1u64 << 32) | r as u64);
            run_simulation(&c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongOrder {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub paths_used: usize,
}

/// Euler–Maruyama strong error at `T` for step sizes `dt, dt/2, …` against a reference run
/// `2^refine` times finer, all driven by the same Brownian path.
pub fn em_strong_order(cfg: &SimConfig, paths: usize, levels: usize, refine: u32) -> Result<StrongOrder> {
    if levels < 2 {
        return Err(Error::Config("need at least two levels".into()));
    }
    let sim = Simulator::new(cfg.clone())?;
    let coarse = (cfg.horizon / cfg.dt).round() as usize;
    let finest = 1usize << (levels as u32 - 1 + refine);
    let fine_steps = coarse * finest;
    let h_fine = cfg.horizon / fine_steps as f64;
    let per_path: Vec<Option<Vec<f64>>> = (0..paths)
        .into_par_iter()
        .map(|p| -> Result<Option<Vec<f64>>> {
            let mut c = cfg.clone();
            c.seed = derive_seed(cfg.seed, (2u64 << 32) | p as u64);
            let mut base = DrivingState::initial(&c);
            let dw: Vec<Vec<f64>> = (0..fine_steps).map(|_| base.draw(h_fine)).collect();
            let solve = |block: usize| -> Result<Option<Vec<f64>>> {
                let mut s = base.clone();
                let h = h_fine * block as f64;
                for chunk in dw.chunks(block) {
                    let inc: Vec<f64> = (0..cfg.n).map(|j| chunk.iter().map(|d| d[j]).sum()).collect();
                    if sim.step(&mut s, &inc, h)?.is_some() {
                        return Ok(None);
                    }
                }
                Ok(Some(s.theta))
            };
            let Some(reference) = solve(1)? else { return Ok(None) };
            let mut errs = Vec::with_capacity(levels);
            for l in 0..levels {
                let block = finest >> l;
                let Some(th) = solve(block)? else { return Ok(None) };
                errs.push(th.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
            Ok(Some(errs))
        })
        .collect::<Result<_>>()?;
    let used: Vec<&Vec<f64>> = per_path.iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::Degenerate("every path halted".into()));
    }
    let errors: Vec<f64> = (0..levels).map(|l| used.iter().map(|e| e[l]).sum::<f64>() / used.len() as f64).collect();
    let dts: Vec<f64> = (0..levels).map(|l| cfg.dt / (1u64 << l) as f64).collect();
    let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(StrongOrder { order: slope(&lx, &ly), dts, errors, paths_used: used.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEquivalence {
    pub kappa: f64,
    /// `ρ_q/(κaσ_q)` per configuration and marked point with `σ_q ≠ 0`.
    pub ratios: Vec<f64>,
    pub ratio: f64,
    pub max_deviation: f64,
    /// Convention the measured ratio matches (to 1e−9), if any.
    pub resolved: Option<RhoConvention>,
}

/// `∂_θ log Π_q |sin((θ−q)/2)|^{e_q}` by complex-step differentiation.
fn complex_step_log_gradient(theta: f64, marked: &[f64], exps: &[f64]) -> f64 {
    let h = 1e-20;
    let z = Complex64::new(theta, h);
    let mut log = Complex64::new(0.0, 0.0);
    for (q, e) in marked.iter().zip(exps) {
        let mut s = ((z - q) / 2.0).sin();
        if s.re < 0.0 {
            s = -s;
        }
        log += *e * s.ln();
    }
    log.im / h
}

/// Differentiate the single-growth-point Coulomb gas `Z = Π_q sin((θ−q)/2)^{aσ_q}` and compare
/// `κ∂_θ log Z` with the SLE(κ,ρ) drift for `ρ_q = κaσ_q`, term by term.
pub fn drift_equivalence_check(kappa: f64, configs: &[(f64, Vec<MarkedPoint>)]) -> Result<DriftEquivalence> {
    let a = derive_params(kappa)?.a;
    let mut ratios = Vec::new();
    for (theta, marked) in configs {
        for m in marked.iter().filter(|m| m.charge != 0.0) {
            let dz = kappa * complex_step_log_gradient(*theta, &[m.angle], &[a * m.charge]);
            let rho_drift = kappa * a * m.charge * half_cot(theta - m.angle);
            ratios.push(dz / rho_drift);
        }
    }
    if ratios.is_empty() {
        return Err(Error::Degenerate("no nonzero marked charges".into()));
    }
    let ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_deviation = ratios.iter().map(|r| (r - ratio).abs()).fold(0.0, f64::max);
    let resolved = [RhoConvention::Resolved, RhoConvention::AsPrinted].into_iter().find(|c| (c.factor() - ratio).abs() < 1e-9);
    Ok(DriftEquivalence { kappa, ratios, ratio, max_deviation, resolved })
}

/// SLE(κ,ρ) weights `ρ_q = c·κaσ_q` with `c` from the convention.
pub fn rho_from_charges(kappa: f64, charges: &[f64], convention: RhoConvention) -> Result<Vec<f64>> {
    let a = derive_params(kappa)?.a;
    Ok(charges.iter().map(|s| convention.factor() * kappa * a * s).collect())
}

/// κ = 0 weights: `ρ_q = σ_θσ_q` with the classical growth charge, so `Σρ = Σσ_q`.
pub fn kappa_zero_rho(charges: &[f64]) -> Vec<f64> {
    charges.iter().map(|s| KAPPA_ZERO_GROWTH_CHARGE * s).collect()
}
