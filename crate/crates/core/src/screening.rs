//! Coulomb-gas partition functions on the circle built from screened contour integrals.
//!
//! Every family is a charge system: boundary charges `σ_k` at the angles `θ_k`, screening
//! charges `−2a` at integration variables `ξ` carried by one contour per link of the pattern,
//! and for the excited family one extra charge `2(a+b)` integrated around the origin. The
//! exponent between two charges is the product of the charges.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{integrate_adaptive, integrate_at_level, BranchedIntegrand, ContourSpec, Coord, QuadOptions, Quadrature};
use crate::error::{Error, Result};
use crate::linkpatterns::{LinkPattern, PatternKind};
use crate::params::{canonical_ln, derive_params, in_chamber, min_gap, KappaParams};

/// Contour clearance as a fraction of the smallest gap between angles.
pub const CLEARANCE_FRACTION: f64 = 0.1;
/// Extra height of the origin circle above the highest link contour.
pub const ORIGIN_CIRCLE_MARGIN: f64 = 0.5;

/// A function of the angles that can be differentiated numerically.
pub trait Psi: Sync {
    fn eval(&self, theta: &[f64]) -> Result<Complex64>;

    /// A version with every adaptive choice fixed near `theta`, so that nearby evaluations
    /// differ only through the arguments. `None` means `self` is already smooth.
    fn freeze(&self, theta: &[f64]) -> Result<Option<Box<dyn Psi + '_>>> {
        let _ = theta;
        Ok(None)
    }
}

impl<F> Psi for F
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    fn eval(&self, theta: &[f64]) -> Result<Complex64> {
        self(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Family {
    GroundJ,
    ExcitedK,
    SpinJ { eta: f64 },
    ChordalL,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GroundJ => "ground_j",
            Family::ExcitedK => "excited_k",
            Family::SpinJ { .. } => "spin_j",
            Family::ChordalL => "chordal_l",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub pattern: LinkPattern,
    pub kappa: f64,
    #[serde(default)]
    pub quad: QuadOptions,
    /// Radius `|ζ|` of the origin circle of the excited family; chosen from the link
    /// contours when absent.
    #[serde(default)]
    pub w_radius: Option<f64>,
}

impl ScreeningSpec {
    pub fn new(family: Family, kappa: f64, pattern: LinkPattern) -> Result<Self> {
        let spec = Self {
            family,
            n: pattern.n(),
            m: pattern.m(),
            pattern,
            kappa,
            quad: QuadOptions::default(),
            w_radius: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Links `(1,2)(3,4)…`; chordal for the chordal family, radial otherwise.
    pub fn standard(family: Family, kappa: f64, n: usize, m: usize) -> Result<Self> {
        let kind = if family == Family::ChordalL { PatternKind::Chordal } else { PatternKind::Radial };
        Self::new(family, kappa, LinkPattern::standard(kind, n, m)?)
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_w_radius(mut self, r: f64) -> Self {
        self.w_radius = Some(r);
        self
    }

    pub fn params(&self) -> Result<KappaParams> {
        derive_params(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.pattern.n() != self.n || self.pattern.m() != self.m {
            return Err(Error::Config(format!(
                "pattern has n={}, m={} but n={}, m={} were requested",
                self.pattern.n(),
                self.pattern.m(),
                self.n,
                self.m
            )));
        }
        match self.family {
            Family::ExcitedK if self.n % 2 == 1 => {
                Err(Error::Domain(format!("the excited family needs an even number of points, got n={}", self.n)))
            }
            Family::ChordalL => {
                if self.n < 2 || self.n % 2 == 1 || self.m + 1 != self.n / 2 {
                    return Err(Error::Domain(format!("chordal family needs n = 2k, m = k−1; got n={}, m={}", self.n, self.m)));
                }
                let c = self.n - 1;
                if self.pattern.links().iter().any(|&(o, cl)| o == c || cl == c) {
                    return Err(Error::Config(format!("pattern links the distinguished point {}", c + 1)));
                }
                Ok(())
            }
            Family::SpinJ { eta } if !eta.is_finite() => Err(Error::Domain("spin parameter must be finite".into())),
            _ => Ok(()),
        }
    }

    /// Boundary charges `σ_k`.
    pub fn charges(&self) -> Result<Vec<f64>> {
        let p = self.params()?;
        let mut s = vec![p.a; self.n];
        if self.family == Family::ChordalL {
            s[self.n - 1] = 2.0 * p.b - p.a;
        }
        Ok(s)
    }
}

/// Start of the origin circle: antipodal to the middle of the widest gap, so that no factor
/// `sin((w−θ_j)/2)` is real at the base point and the branch there is stable under small moves.
fn origin_circle_start(theta: &[f64]) -> f64 {
    let n = theta.len();
    let (mut best, mut mid) = (f64::NEG_INFINITY, theta[0] - PI);
    for j in 0..n {
        let next = if j + 1 < n { theta[j + 1] } else { theta[0] + 2.0 * PI };
        if next - theta[j] > best {
            best = next - theta[j];
            mid = theta[j] + best / 2.0;
        }
    }
    mid - PI
}

/// Geometry of the contours, fixed once per configuration so that evaluations at nearby
/// angles use the same homotopy representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPlan {
    pub clearance: f64,
    /// Height of each link contour; `None` where both endpoint exponents are integers and a
    /// small loop about the opener is used instead.
    pub heights: Vec<Option<f64>>,
    /// Origin circle `(radius, start)` for the excited family.
    pub origin_circle: Option<(f64, f64)>,
}

impl ContourPlan {
    pub fn top(&self) -> f64 {
        let links = self.heights.iter().map(|h| h.unwrap_or(self.clearance).max(self.clearance));
        links.fold(0.0, f64::max)
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Height profile `r(1.5 + 1.5·depth)` of nested link contours.
fn link_heights(pattern: &LinkPattern, r: f64, endpoint_exps: impl Fn(usize, usize) -> (f64, f64)) -> Vec<Option<f64>> {
    let depth = pattern.depths();
    pattern
        .links()
        .iter()
        .zip(depth)
        .map(|(&(o, c), d)| {
            let (eo, ec) = endpoint_exps(o, c);
            if is_integer(eo) && is_integer(ec) {
                None
            } else {
                Some(r * (1.5 + 1.5 * d as f64))
            }
        })
        .collect()
}

fn link_contour(p: f64, q: f64, r: f64, height: Option<f64>) -> ContourSpec {
    match height {
        Some(h) => ContourSpec::Pochhammer { p, q, clearance: r, height: h },
        None => ContourSpec::Loop { center: p, radius: r },
    }
}

/// Evaluator of one partition function `ψ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEvaluator {
    spec: ScreeningSpec,
    params: KappaParams,
    sigma: Vec<f64>,
}

impl PartitionEvaluator {
    pub fn new(spec: ScreeningSpec) -> Result<Self> {
        spec.validate()?;
        let params = spec.params()?;
        let sigma = spec.charges()?;
        Ok(Self { spec, params, sigma })
    }

    pub fn spec(&self) -> &ScreeningSpec {
        &self.spec
    }

    pub fn params(&self) -> &KappaParams {
        &self.params
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.spec.n {
            return Err(Error::Config(format!("{} angles for n={}", theta.len(), self.spec.n)));
        }
        if !in_chamber(theta) {
            return Err(Error::Domain(format!("angles {theta:?} are not in the chamber")));
        }
        Ok(())
    }

    pub fn plan(&self, theta: &[f64]) -> Result<ContourPlan> {
        self.check_theta(theta)?;
        let r = CLEARANCE_FRACTION * min_gap(theta);
        let tau = -2.0 * self.params.a;
        let heights = link_heights(&self.spec.pattern, r, |o, c| (tau * self.sigma[o], tau * self.sigma[c]));
        let mut plan = ContourPlan { clearance: r, heights, origin_circle: None };
        if self.spec.family == Family::ExcitedK {
            let radius = match self.spec.w_radius {
                Some(x) => x,
                None => (-(plan.top() + ORIGIN_CIRCLE_MARGIN)).exp(),
            };
            plan.origin_circle = Some((radius, origin_circle_start(theta)));
        }
        Ok(plan)
    }

    /// Integrand and contours at `theta` under `plan`.
    pub fn integrand(&self, theta: &[f64], plan: &ContourPlan) -> Result<(BranchedIntegrand, Vec<ContourSpec>)> {
        self.check_theta(theta)?;
        let r = plan.clearance;
        if min_gap(theta) <= 5.0 * r {
            return Err(Error::Clearance(format!("angles {theta:?} are too close for clearance {r}")));
        }
        let p = &self.params;
        let tau = -2.0 * p.a;
        let links = self.spec.pattern.links();
        if plan.heights.len() != links.len() {
            return Err(Error::Config("plan does not match the pattern".into()));
        }
        let mut fixed_exp: Vec<Vec<f64>> = links.iter().map(|_| self.sigma.iter().map(|s| tau * s).collect()).collect();
        let mut contours: Vec<ContourSpec> = links
            .iter()
            .zip(&plan.heights)
            .map(|(&(o, c), &h)| {
                let q = if c > o { theta[c] } else { theta[c] + 2.0 * PI };
                link_contour(theta[o], q, r, h)
            })
            .collect();
        let spin_xi = match self.spec.family {
            Family::SpinJ { eta } => eta * p.a / 2.0 * tau,
            _ => 0.0,
        };
        let mut spin = vec![spin_xi; links.len()];
        let w_charge = 2.0 * (p.a + p.b);
        if let Some((radius, start)) = plan.origin_circle {
            let contour = ContourSpec::OriginCircle { radius, start };
            if contour.top() <= plan.top() + r {
                return Err(Error::Clearance(format!("origin circle of radius {radius} meets the link contours")));
            }
            fixed_exp.push(self.sigma.iter().map(|s| w_charge * s).collect());
            contours.push(contour);
            spin.push(0.0);
        }
        let vars = contours.len();
        let pair_exp = (0..vars)
            .map(|k| {
                (0..vars)
                    .map(|l| {
                        let q = |i: usize| if i < links.len() { tau } else { w_charge };
                        if k == l {
                            0.0
                        } else {
                            q(k) * q(l)
                        }
                    })
                    .collect()
            })
            .collect();
        let f = BranchedIntegrand {
            coord: Coord::Angular,
            fixed: theta.iter().map(|&t| Complex64::new(t, 0.0)).collect(),
            fixed_exp,
            pair_exp,
            spin,
        };
        Ok((f, contours))
    }

    /// Log of the boundary factor `Π_{j<k} sin((θ_k−θ_j)/2)^{σ_jσ_k}` times any spin factor.
    pub fn log_prefactor(&self, theta: &[f64]) -> Complex64 {
        let mut log = Complex64::new(0.0, 0.0);
        for j in 0..theta.len() {
            for k in j + 1..theta.len() {
                let s = Complex64::new(((theta[k] - theta[j]) / 2.0).sin(), 0.0);
                log += self.sigma[j] * self.sigma[k] * canonical_ln(s);
            }
        }
        if let Family::SpinJ { eta } = self.spec.family {
            let c = eta * self.params.a / 2.0;
            log += theta.iter().zip(&self.sigma).map(|(t, s)| c * s * t).sum::<f64>();
        }
        log
    }

    /// Adaptive evaluation with a fresh plan.
    pub fn evaluate(&self, theta: &[f64]) -> Result<Quadrature> {
        let plan = self.plan(theta)?;
        self.evaluate_with(theta, &plan)
    }

    pub fn evaluate_with(&self, theta: &[f64], plan: &ContourPlan) -> Result<Quadrature> {
        let (f, contours) = self.integrand(theta, plan)?;
        let q = integrate_adaptive(&f, &contours, &self.spec.quad)?;
        let scale = self.log_prefactor(theta).exp();
        Ok(Quadrature { value: q.value * scale, error: q.error * scale.norm(), level: q.level })
    }

    /// Fix the plan and the quadrature level at `theta`.
    pub fn freeze_at(&self, theta: &[f64]) -> Result<FrozenPartition> {
        let plan = self.plan(theta)?;
        let q = self.evaluate_with(theta, &plan)?;
        Ok(FrozenPartition { ev: self.clone(), plan, level: q.level, reference: q })
    }
}

impl Psi for PartitionEvaluator {
    fn eval(&self, theta: &[f64]) -> Result<Complex64> {
        Ok(self.evaluate(theta)?.value)
    }

    fn freeze(&self, theta: &[f64]) -> Result<Option<Box<dyn Psi + '_>>> {
        Ok(Some(Box::new(self.freeze_at(theta)?)))
    }
}

/// A partition function with its contour plan and refinement level fixed.
#[derive(Debug, Clone)]
pub struct FrozenPartition {
    ev: PartitionEvaluator,
    pub plan: ContourPlan,
    pub level: usize,
    /// Adaptive result at the freezing point.
    pub reference: Quadrature,
}

impl FrozenPartition {
    pub fn value(&self, theta: &[f64]) -> Result<Complex64> {
        let (f, contours) = self.ev.integrand(theta, &self.plan)?;
        let v = integrate_at_level(&f, &contours, self.level)?;
        Ok(v * self.ev.log_prefactor(theta).exp())
    }
}

impl Psi for FrozenPartition {
    fn eval(&self, theta: &[f64]) -> Result<Complex64> {
        self.value(theta)
    }
}

fn evaluate_family(family: Family, spec: &ScreeningSpec, theta: &[f64]) -> Result<Quadrature> {
    if spec.family != family {
        return Err(Error::Config(format!("spec is for the {} family, not {}", spec.family.name(), family.name())));
    }
    PartitionEvaluator::new(spec.clone())?.evaluate(theta)
}

pub fn eval_ground_j(spec: &ScreeningSpec, theta: &[f64]) -> Result<Quadrature> {
    evaluate_family(Family::GroundJ, spec, theta)
}

pub fn eval_excited_k(spec: &ScreeningSpec, theta: &[f64]) -> Result<Quadrature> {
    evaluate_family(Family::ExcitedK, spec, theta)
}

pub fn eval_spin_j(spec: &ScreeningSpec, theta: &[f64]) -> Result<Quadrature> {
    match spec.family {
        Family::SpinJ { .. } => PartitionEvaluator::new(spec.clone())?.evaluate(theta),
        f => Err(Error::Config(format!("spec is for the {} family, not spin_j", f.name()))),
    }
}

pub fn eval_chordal_l(spec: &ScreeningSpec, theta: &[f64]) -> Result<Quadrature> {
    evaluate_family(Family::ChordalL, spec, theta)
}

/// `Π_{j<k} sin((θ_k−θ_j)/2)^{2/κ}`, the `m = 0` ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermionicGround {
    pub kappa: f64,
}

impl FermionicGround {
    pub fn new(kappa: f64) -> Result<Self> {
        derive_params(kappa)?;
        Ok(Self { kappa })
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        if !in_chamber(theta) {
            return Err(Error::Domain(format!("angles {theta:?} are not in the chamber")));
        }
        let mut log = 0.0;
        for j in 0..theta.len() {
            for k in j + 1..theta.len() {
                log += ((theta[k] - theta[j]) / 2.0).sin().ln();
            }
        }
        Ok((2.0 / self.kappa * log).exp())
    }

    /// `κ ∂_j log ψ = Σ_{k≠j} cot((θ_j−θ_k)/2)`.
    pub fn kappa_log_gradient(theta: &[f64]) -> Vec<f64> {
        (0..theta.len())
            .map(|j| (0..theta.len()).filter(|&k| k != j).map(|k| 1.0 / ((theta[j] - theta[k]) / 2.0).tan()).sum())
            .collect()
    }
}

impl Psi for FermionicGround {
    fn eval(&self, theta: &[f64]) -> Result<Complex64> {
        Ok(Complex64::new(self.value(theta)?, 0.0))
    }
}

/// Half-plane ground correlation with boundary points `z_k ∈ ℝ`, a bulk point `u` and its
/// mirror `u*` treated as an independent variable.
///
/// Charges: `a` at each `z_k`, `σ_u = b − (n−2m)a/2` at both `u` and `u*`, `−2a` at each
/// screening variable. Screening contours follow the links of a pattern on the `z`'s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneGround {
    pub kappa: f64,
    pub pattern: LinkPattern,
    #[serde(default)]
    pub quad: QuadOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePlan {
    pub clearance: f64,
    pub heights: Vec<Option<f64>>,
}

impl HalfPlaneGround {
    pub fn new(kappa: f64, pattern: LinkPattern) -> Result<Self> {
        derive_params(kappa)?;
        if pattern.links().iter().any(|(o, c)| o > c) {
            return Err(Error::Config("half-plane links must not wrap".into()));
        }
        Ok(Self { kappa, pattern, quad: QuadOptions::default() })
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    pub fn sigma_u(&self) -> f64 {
        let p = derive_params(self.kappa).expect("validated");
        p.b - (self.n() as f64 - 2.0 * self.pattern.m() as f64) * p.a / 2.0
    }

    /// Conformal weights `(λ_z, λ_u)` of the boundary and bulk points.
    pub fn weights(&self) -> (f64, f64) {
        let k = self.kappa;
        let s = self.n() as f64 - 2.0 * self.pattern.m() as f64;
        ((6.0 - k) / (2.0 * k), s * s / (4.0 * k) - (k - 4.0).powi(2) / (16.0 * k))
    }

    fn charges(&self) -> Vec<f64> {
        let p = derive_params(self.kappa).expect("validated");
        let su = self.sigma_u();
        let mut c = vec![p.a; self.n()];
        c.extend([su, su]);
        c
    }

    fn split<'a>(&self, pts: &'a [Complex64]) -> Result<(&'a [Complex64], Complex64, Complex64)> {
        let n = self.n();
        if pts.len() != n + 2 {
            return Err(Error::Config(format!("expected {} points (z's, u, u*), got {}", n + 2, pts.len())));
        }
        let z = &pts[..n];
        if z.iter().any(|x| x.im != 0.0) || z.windows(2).any(|w| w[0].re >= w[1].re) {
            return Err(Error::Domain("boundary points must be real and increasing".into()));
        }
        Ok((z, pts[n], pts[n + 1]))
    }

    pub fn plan(&self, pts: &[Complex64]) -> Result<HalfPlanePlan> {
        let (z, _, _) = self.split(pts)?;
        let gap = z.windows(2).map(|w| w[1].re - w[0].re).fold(f64::INFINITY, f64::min);
        let r = CLEARANCE_FRACTION * if gap.is_finite() { gap } else { 1.0 };
        let p = derive_params(self.kappa)?;
        let e = -2.0 * p.a * p.a;
        let heights = link_heights(&self.pattern, r, |_, _| (e, e));
        Ok(HalfPlanePlan { clearance: r, heights })
    }

    fn integrand(&self, pts: &[Complex64], plan: &HalfPlanePlan) -> Result<(BranchedIntegrand, Vec<ContourSpec>)> {
        let (z, u, ub) = self.split(pts)?;
        let r = plan.clearance;
        if z.windows(2).any(|w| w[1].re - w[0].re <= 5.0 * r) {
            return Err(Error::Clearance("boundary points too close for the planned clearance".into()));
        }
        let contours: Vec<ContourSpec> = self
            .pattern
            .links()
            .iter()
            .zip(&plan.heights)
            .map(|(&(o, c), &h)| link_contour(z[o].re, z[c].re, r, h))
            .collect();
        let top = contours.iter().map(|c| c.top()).fold(0.0, f64::max);
        if u.im <= top + r || ub.im >= -r {
            return Err(Error::Clearance(format!("bulk points {u}, {ub} are too close to the contours (top {top})")));
        }
        let tau = -2.0 * derive_params(self.kappa)?.a;
        let charges = self.charges();
        let m = contours.len();
        let f = BranchedIntegrand {
            coord: Coord::HalfPlane,
            fixed: pts.to_vec(),
            fixed_exp: vec![charges.iter().map(|s| tau * s).collect(); m],
            pair_exp: (0..m).map(|k| (0..m).map(|l| if k == l { 0.0 } else { tau * tau }).collect()).collect(),
            spin: vec![0.0; m],
        };
        Ok((f, contours))
    }

    /// `Σ_{j<k} σ_jσ_k log(p_k − p_j)` over `z_1..z_n, u, u*`.
    fn log_prefactor(&self, pts: &[Complex64]) -> Complex64 {
        let c = self.charges();
        let mut log = Complex64::new(0.0, 0.0);
        for j in 0..pts.len() {
            for k in j + 1..pts.len() {
                log += c[j] * c[k] * canonical_ln(pts[k] - pts[j]);
            }
        }
        log
    }

    pub fn evaluate(&self, pts: &[Complex64]) -> Result<Quadrature> {
        let plan = self.plan(pts)?;
        let (f, contours) = self.integrand(pts, &plan)?;
        let q = integrate_adaptive(&f, &contours, &self.quad)?;
        let s = self.log_prefactor(pts).exp();
        Ok(Quadrature { value: q.value * s, error: q.error * s.norm(), level: q.level })
    }

    pub fn freeze(&self, pts: &[Complex64]) -> Result<FrozenHalfPlane> {
        let plan = self.plan(pts)?;
        let (f, contours) = self.integrand(pts, &plan)?;
        let q = integrate_adaptive(&f, &contours, &self.quad)?;
        Ok(FrozenHalfPlane { ev: self.clone(), plan, level: q.level })
    }
}

#[derive(Debug, Clone)]
pub struct FrozenHalfPlane {
    ev: HalfPlaneGround,
    plan: HalfPlanePlan,
    level: usize,
}

impl FrozenHalfPlane {
    pub fn value(&self, pts: &[Complex64]) -> Result<Complex64> {
        let (f, contours) = self.ev.integrand(pts, &self.plan)?;
        Ok(integrate_at_level(&f, &contours, self.level)? * self.ev.log_prefactor(pts).exp())
    }

    pub fn model(&self) -> &HalfPlaneGround {
        &self.ev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm().max(1e-300)
    }

    #[test]
    fn m_zero_matches_closed_form() {
        let spec = ScreeningSpec::standard(Family::GroundJ, 2.0, 2, 0).unwrap();
        let v = eval_ground_j(&spec, &[0.0, PI]).unwrap().value;
        assert!((v - 1.0).norm() < 1e-14);
        let one = ScreeningSpec::standard(Family::GroundJ, 3.0, 1, 0).unwrap();
        assert_eq!(eval_ground_j(&one, &[0.4]).unwrap().value, Complex64::new(1.0, 0.0));
        let th = [0.2, 1.1, 3.0, 5.0];
        let s = ScreeningSpec::standard(Family::GroundJ, 3.3, 4, 0).unwrap();
        let f = FermionicGround::new(3.3).unwrap().value(&th).unwrap();
        assert!((eval_ground_j(&s, &th).unwrap().value.re - f).abs() < 1e-13 * f);
    }

    #[test]
    fn ground_n2m1_is_finite_and_nonzero() {
        let spec = ScreeningSpec::standard(Family::GroundJ, 3.0, 2, 1).unwrap();
        let q = eval_ground_j(&spec, &[0.0, PI]).unwrap();
        assert!(q.value.is_finite() && q.value.norm() > 1e-3);
        assert!(q.error < 1e-8 * q.value.norm());
    }

    #[test]
    fn wrong_family_and_shape_errors() {
        let spec = ScreeningSpec::standard(Family::GroundJ, 3.0, 2, 1).unwrap();
        assert!(matches!(eval_excited_k(&spec, &[0.0, 1.0]), Err(Error::Config(_))));
        assert!(matches!(ScreeningSpec::standard(Family::ExcitedK, 3.0, 3, 1), Err(Error::Domain(_))));
        assert!(matches!(ScreeningSpec::standard(Family::ChordalL, 3.0, 4, 2), Err(Error::Domain(_))));
        let bad: LinkPattern = "chordal n=4|(1 2)|rays:3,4|winding:0".parse().unwrap();
        assert!(ScreeningSpec::new(Family::ChordalL, 3.0, bad).is_ok());
        let linked: LinkPattern = "chordal n=4|(1 2)(3 4)|rays:∅|winding:0".parse().unwrap();
        assert!(ScreeningSpec::new(Family::ChordalL, 3.0, linked).is_err());
        let radial: LinkPattern = "radial n=4|(2 3)|rays:4,1|winding:0".parse().unwrap();
        assert!(ScreeningSpec::new(Family::ChordalL, 3.0, radial).is_ok());
        let touching: LinkPattern = "radial n=4|(4 1)|rays:2,3|winding:1".parse().unwrap();
        assert!(matches!(ScreeningSpec::new(Family::ChordalL, 3.0, touching), Err(Error::Config(_))));
        let ev = PartitionEvaluator::new(spec).unwrap();
        assert!(matches!(ev.evaluate(&[1.0, 0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn spin_zero_reduces_to_ground() {
        let th = [0.3, 1.9, 4.0];
        let g = ScreeningSpec::standard(Family::GroundJ, 3.0, 3, 1).unwrap();
        let s = ScreeningSpec::standard(Family::SpinJ { eta: 0.0 }, 3.0, 3, 1).unwrap();
        let a = eval_ground_j(&g, &th).unwrap().value;
        let b = eval_spin_j(&s, &th).unwrap().value;
        assert!(close(a, b, 1e-12));
    }

    #[test]
    fn spin_single_point_is_exponential() {
        let s = ScreeningSpec::standard(Family::SpinJ { eta: 1.0 }, 2.0, 1, 0).unwrap();
        let v = eval_spin_j(&s, &[0.7]).unwrap().value;
        assert!((v - Complex64::new((0.35f64).exp(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn spin_translation_covariance() {
        // ψ(θ+s) = e^{ωs}ψ(θ) with ω = η(n−2m)/κ
        let (eta, kappa) = (0.7, 3.0);
        let s = ScreeningSpec::standard(Family::SpinJ { eta }, kappa, 3, 1).unwrap();
        let ev = PartitionEvaluator::new(s).unwrap();
        let th = [0.1, 2.0, 4.0];
        let shift = 0.1;
        let moved: Vec<f64> = th.iter().map(|t| t + shift).collect();
        let frozen = ev.freeze_at(&th).unwrap();
        let ratio = frozen.value(&moved).unwrap() / frozen.value(&th).unwrap();
        let omega = eta / kappa;
        assert!((ratio - Complex64::new((omega * shift).exp(), 0.0)).norm() < 1e-10, "{ratio}");
    }

    #[test]
    fn chordal_two_points_closed_form() {
        for kappa in [3.0, 6.0] {
            let p = derive_params(kappa).unwrap();
            let s = ScreeningSpec::standard(Family::ChordalL, kappa, 2, 0).unwrap();
            let th = [0.4, 2.1];
            let v = eval_chordal_l(&s, &th).unwrap().value;
            let expect = (((th[1] - th[0]) / 2.0).sin()).powf(p.a * (2.0 * p.b - p.a));
            assert!(v.im == 0.0 && v.re > 0.0);
            assert!((v.re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn excited_radius_invariance() {
        let th = [0.1, 2.0];
        let s = ScreeningSpec::standard(Family::ExcitedK, 4.0, 2, 1).unwrap();
        let a = eval_excited_k(&s.clone().with_w_radius(0.3), &th).unwrap();
        let b = eval_excited_k(&s.with_w_radius(0.6), &th).unwrap();
        assert!(a.value.norm() > 1e-6);
        assert!(close(a.value, b.value, 1e-7), "{} vs {}", a.value, b.value);
    }

    #[test]
    fn excited_frozen_is_continuous() {
        // small moves of θ must not change the branch at the origin-circle base
        for kappa in [3.5, 4.0] {
            let ev = PartitionEvaluator::new(ScreeningSpec::standard(Family::ExcitedK, kappa, 2, 1).unwrap()).unwrap();
            let th = [0.3, 2.3];
            let fz = ev.freeze_at(&th).unwrap();
            for d in [1e-3, -1e-3] {
                for j in 0..2 {
                    let mut t = th;
                    t[j] += d;
                    let (a, b) = (fz.value(&t).unwrap(), fz.reference.value);
                    assert!((a - b).norm() < 1e-2 * b.norm(), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn excited_circle_must_clear_links() {
        let s = ScreeningSpec::standard(Family::ExcitedK, 3.0, 2, 1).unwrap().with_w_radius(0.99);
        assert!(matches!(eval_excited_k(&s, &[0.1, 2.0]), Err(Error::Clearance(_))));
    }

    #[test]
    fn wrapping_link_agrees_with_plain_link_up_to_factor() {
        // both links about a two-point configuration give solutions of the same system; with
        // one screening charge and two points the solution space is one-dimensional
        let th = [0.1, 2.0];
        let p1: LinkPattern = "radial n=2|(1 2)|rays:∅|winding:0".parse().unwrap();
        let p2: LinkPattern = "radial n=2|(2 1)|rays:∅|winding:1".parse().unwrap();
        let e1 = PartitionEvaluator::new(ScreeningSpec::new(Family::GroundJ, 3.5, p1).unwrap()).unwrap();
        let e2 = PartitionEvaluator::new(ScreeningSpec::new(Family::GroundJ, 3.5, p2).unwrap()).unwrap();
        assert!(e1.evaluate(&th).unwrap().value.norm() > 0.0);
        assert!(e2.evaluate(&th).unwrap().value.norm() > 0.0);
    }

    #[test]
    fn frozen_matches_adaptive_at_reference() {
        let s = ScreeningSpec::standard(Family::GroundJ, 3.5, 4, 2).unwrap();
        let ev = PartitionEvaluator::new(s).unwrap();
        let th = [0.2, 1.4, 3.0, 4.5];
        let fz = ev.freeze_at(&th).unwrap();
        assert!(close(fz.value(&th).unwrap(), fz.reference.value, 1e-14));
        let near = [0.2005, 1.4, 3.0, 4.5];
        assert!(close(fz.value(&near).unwrap(), ev.evaluate(&near).unwrap().value, 1e-8));
    }

    #[test]
    fn half_plane_is_finite_and_validates() {
        let pat: LinkPattern = "chordal n=3|(1 2)|rays:3|winding:0".parse().unwrap();
        let hp = HalfPlaneGround::new(3.0, pat).unwrap();
        let pts = [-1.0, 0.3, 1.1].iter().map(|&x| Complex64::new(x, 0.0)).chain([Complex64::new(0.2, 1.3), Complex64::new(0.2, -1.3)]);
        let pts: Vec<Complex64> = pts.collect();
        let q = hp.evaluate(&pts).unwrap();
        assert!(q.value.is_finite() && q.value.norm() > 0.0);
        let mut low = pts.clone();
        low[3] = Complex64::new(0.2, 0.05);
        assert!(matches!(hp.evaluate(&low), Err(Error::Clearance(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let s = ScreeningSpec::standard(Family::SpinJ { eta: 0.7 }, 3.0, 4, 1).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("radial n=4|(1 2)|rays:3,4|winding:0"));
        let back: ScreeningSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn fermionic_gradient_matches_fd(a in 0.0f64..1.0, g1 in 0.3f64..2.0, g2 in 0.3f64..2.0, kappa in 1.0f64..8.0) {
            let th = [a, a + g1, a + g1 + g2];
            let f = FermionicGround::new(kappa).unwrap();
            let grad = FermionicGround::kappa_log_gradient(&th);
            for j in 0..3 {
                let h = 1e-5;
                let mut p = th; p[j] += h;
                let mut m = th; m[j] -= h;
                let d = (f.value(&p).unwrap().ln() - f.value(&m).unwrap().ln()) / (2.0 * h);
                prop_assert!((kappa * d - grad[j]).abs() < 1e-6);
            }
        }

        #[test]
        fn contour_geometry_invariance(a in 0.0f64..0.5, g in 0.8f64..2.5, scale in 0.6f64..1.4) {
            // a different height profile is homotopic and must give the same value
            let th = [a, a + g];
            let s = ScreeningSpec::standard(Family::GroundJ, 3.5, 2, 1).unwrap();
            let ev = PartitionEvaluator::new(s).unwrap();
            let mut plan = ev.plan(&th).unwrap();
            let base = ev.evaluate_with(&th, &plan).unwrap();
            for h in plan.heights.iter_mut() {
                *h = h.map(|x| x * scale);
            }
            let moved = ev.evaluate_with(&th, &plan).unwrap();
            prop_assert!((base.value - moved.value).norm() <= 1e-8 * base.value.norm());
        }
    }
}
