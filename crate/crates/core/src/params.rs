//! κ-derived constants, charge divisors and closed-form Coulomb-gas correlations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Absolute tolerance used by [`check_neutrality`] unless overridden.
pub const NEUTRALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaParams {
    pub kappa: f64,
    pub a: f64,
    /// Background charge, `a(κ/4 − 1)`.
    pub b: f64,
    pub central_charge: f64,
    /// O(n) loop weight `−2cos(4π/κ)`.
    pub fugacity: f64,
}

impl KappaParams {
    pub fn new(kappa: f64) -> Result<Self> {
        derive_params(kappa)
    }

    /// Dimension of a boundary growth point, `λ_b(a) = (6−κ)/(2κ)`.
    pub fn boundary_dimension(&self) -> f64 {
        (6.0 - self.kappa) / (2.0 * self.kappa)
    }

    /// The two screening charges `−2a` and `2(a+b)`.
    pub fn screening_charges(&self) -> (f64, f64) {
        (-2.0 * self.a, 2.0 * (self.a + self.b))
    }
}

pub fn derive_params(kappa: f64) -> Result<KappaParams> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("kappa must be positive and finite, got {kappa}")));
    }
    let a = (2.0 / kappa).sqrt();
    Ok(KappaParams {
        kappa,
        a,
        b: a * (kappa / 4.0 - 1.0),
        central_charge: (3.0 * kappa - 8.0) * (6.0 - kappa) / (2.0 * kappa),
        fugacity: -2.0 * (4.0 * PI / kappa).cos(),
    })
}

/// `λ_b(σ) = σ²/2 − σb`.
pub fn conformal_dimension(sigma: Complex64, params: &KappaParams) -> Complex64 {
    sigma * sigma / 2.0 - sigma * params.b
}

/// Normalization of the κ = 0 dimension function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalDimension {
    /// `σ² + 2σ`
    #[default]
    Full,
    /// `σ²/2 + 2σ`
    Halved,
}

pub fn classical_dimension(sigma: Complex64, convention: ClassicalDimension) -> Complex64 {
    match convention {
        ClassicalDimension::Full => sigma * sigma + 2.0 * sigma,
        ClassicalDimension::Halved => sigma * sigma / 2.0 + 2.0 * sigma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite(Complex64),
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Divisor {
    pub points: Vec<(Point, Complex64)>,
}

impl Divisor {
    pub fn new(points: Vec<(Point, Complex64)>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            for q in &points[..i] {
                if same_point(p.0, q.0) {
                    return Err(Error::Singular(format!("repeated location {:?}", p.0)));
                }
            }
        }
        Ok(Self { points })
    }

    /// Finite points with real charges.
    pub fn real(points: &[(Complex64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(z, s)| (Point::Finite(z), Complex64::new(s, 0.0))).collect())
    }

    pub fn total_charge(&self) -> Complex64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

fn same_point(p: Point, q: Point) -> bool {
    match (p, q) {
        (Point::Infinity, Point::Infinity) => true,
        (Point::Finite(z), Point::Finite(w)) => (z - w).norm() == 0.0,
        _ => false,
    }
}

/// Charges on a domain with involution: `plus` at the points, `minus` at their reflections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DoubleDivisor {
    pub plus: Divisor,
    pub minus: Divisor,
}

impl DoubleDivisor {
    /// Symmetric double divisor `σ⁻ = conj(σ⁺)` on interior points, zero on boundary points.
    pub fn symmetric(plus: Divisor, on_boundary: impl Fn(Complex64) -> bool) -> Self {
        let minus = plus
            .points
            .iter()
            .map(|&(p, s)| match p {
                Point::Finite(z) if !on_boundary(z) => (p, s.conj()),
                _ => (p, Complex64::new(0.0, 0.0)),
            })
            .collect();
        Self { plus, minus: Divisor { points: minus } }
    }

    pub fn total_charge(&self) -> Complex64 {
        self.plus.total_charge() + self.minus.total_charge()
    }
}

/// Boundary angles with charges plus optional charges at the origin and at infinity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AngularDivisor {
    pub angles: Vec<(f64, Complex64)>,
    pub sigma_zero: Complex64,
    pub sigma_inf: Complex64,
}

impl AngularDivisor {
    pub fn real(angles: &[(f64, f64)]) -> Self {
        Self {
            angles: angles.iter().map(|&(t, s)| (t, Complex64::new(s, 0.0))).collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeutralityMode {
    KappaPositive,
    Classical,
}

/// Returns `(holds, defect)` with defect `Σσ − 2b` (or `Σσ + 2` in classical mode).
pub fn check_neutrality(total_charge: Complex64, params: &KappaParams, mode: NeutralityMode) -> (bool, Complex64) {
    check_neutrality_tol(total_charge, params, mode, NEUTRALITY_TOL)
}

pub fn check_neutrality_tol(
    total_charge: Complex64,
    params: &KappaParams,
    mode: NeutralityMode,
    tol: f64,
) -> (bool, Complex64) {
    let defect = match mode {
        NeutralityMode::KappaPositive => total_charge - 2.0 * params.b,
        NeutralityMode::Classical => total_charge + 2.0,
    };
    (defect.norm() <= tol, defect)
}

/// Canonical log of a factor: the real branch when the base is real (sign dropped),
/// otherwise the principal branch.
pub(crate) fn canonical_ln(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-14 * z.re.abs() {
        Complex64::new(z.re.abs().ln(), 0.0)
    } else {
        z.ln()
    }
}

fn power(base: Complex64, exponent: Complex64) -> Result<Complex64> {
    if base.norm() == 0.0 {
        return Err(Error::Singular("coincident points".into()));
    }
    if exponent.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(exponent * canonical_ln(base))
}

fn finite_points(d: &Divisor) -> Vec<(Complex64, Complex64)> {
    d.points
        .iter()
        .filter_map(|&(p, s)| match p {
            Point::Finite(z) => Some((z, s)),
            Point::Infinity => None,
        })
        .collect()
}

/// `Π_{j<k} (z_j − z_k)^{σ_j σ_k}` over finite points.
pub fn eval_sphere(divisor: &Divisor) -> Result<Complex64> {
    let pts = finite_points(divisor);
    let mut log = Complex64::new(0.0, 0.0);
    for j in 0..pts.len() {
        for k in j + 1..pts.len() {
            log += power(pts[j].0 - pts[k].0, pts[j].1 * pts[k].1)?;
        }
    }
    Ok(log.exp())
}

/// Upper half-plane correlation of a double divisor.
///
/// Cross factors are taken as `((z_j − z̄_k)/i)^{σ⁺_j σ⁻_k}`, which has positive real part
/// for interior points and fixes the phase.
pub fn eval_half_plane(d: &DoubleDivisor) -> Result<Complex64> {
    let p = finite_points(&d.plus);
    let m = finite_points(&d.minus);
    if p.len() != m.len() || p.iter().zip(&m).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Config("plus and minus divisors must share locations".into()));
    }
    let i = Complex64::i();
    let mut log = Complex64::new(0.0, 0.0);
    for j in 0..p.len() {
        if p[j].0.im < 0.0 {
            return Err(Error::Domain("half-plane points must have Im z >= 0".into()));
        }
        for k in j + 1..p.len() {
            log += power(p[j].0 - p[k].0, p[j].1 * p[k].1)?;
            log += power(p[j].0.conj() - p[k].0.conj(), m[j].1 * m[k].1)?;
        }
        for k in 0..p.len() {
            let e = p[j].1 * m[k].1;
            if e.norm() != 0.0 {
                log += power((p[j].0 - p[k].0.conj()) / i, e)?;
            }
        }
    }
    Ok(log.exp())
}

/// Unit-disk correlation of a double divisor.
pub fn eval_disk(d: &DoubleDivisor) -> Result<Complex64> {
    let p = finite_points(&d.plus);
    let m = finite_points(&d.minus);
    if p.len() != m.len() || p.iter().zip(&m).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Config("plus and minus divisors must share locations".into()));
    }
    let mut log = Complex64::new(0.0, 0.0);
    for j in 0..p.len() {
        if p[j].0.norm() > 1.0 + 1e-12 {
            return Err(Error::Domain("disk points must satisfy |z| <= 1".into()));
        }
        for k in j + 1..p.len() {
            log += power(p[j].0 - p[k].0, p[j].1 * p[k].1)?;
            log += power(p[j].0.conj() - p[k].0.conj(), m[j].1 * m[k].1)?;
        }
        for k in 0..p.len() {
            let e = p[j].1 * m[k].1;
            if e.norm() != 0.0 {
                log += power(Complex64::new(1.0, 0.0) - p[j].0 * p[k].0.conj(), e)?;
            }
        }
    }
    Ok(log.exp())
}

/// `Π_{j<k} sin((θ_k−θ_j)/2)^{σ_jσ_k} · Π e^{(i/2)σ_j(σ_0−σ_∞)θ_j}`.
pub fn eval_angular(d: &AngularDivisor) -> Result<Complex64> {
    Ok(log_angular(d)?.exp())
}

pub(crate) fn log_angular(d: &AngularDivisor) -> Result<Complex64> {
    let spin = Complex64::i() * 0.5 * (d.sigma_zero - d.sigma_inf);
    let mut log = Complex64::new(0.0, 0.0);
    for (j, &(tj, sj)) in d.angles.iter().enumerate() {
        for &(tk, sk) in &d.angles[j + 1..] {
            let s = ((tk - tj) / 2.0).sin();
            if s.abs() < 1e-300 {
                return Err(Error::Singular(format!("coincident angles {tj} and {tk}")));
            }
            log += sj * sk * s.abs().ln();
        }
        log += spin * sj * tj;
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    Sphere(Divisor),
    HalfPlane(DoubleDivisor),
    Disk(DoubleDivisor),
    Angular(AngularDivisor),
}

pub fn eval_correlation(c: &Correlation) -> Result<Complex64> {
    match c {
        Correlation::Sphere(d) => eval_sphere(d),
        Correlation::HalfPlane(d) => eval_half_plane(d),
        Correlation::Disk(d) => eval_disk(d),
        Correlation::Angular(d) => eval_angular(d),
    }
}

/// A strictly increasing angle configuration within one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig(Vec<f64>);

impl ThetaConfig {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if !in_chamber(&angles) {
            return Err(Error::Domain(format!("angles {angles:?} are not in the chamber")));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for ThetaConfig {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn in_chamber(theta: &[f64]) -> bool {
    theta.iter().all(|t| t.is_finite())
        && theta.windows(2).all(|w| w[0] < w[1])
        && (theta.len() < 2 || theta[theta.len() - 1] < theta[0] + 2.0 * PI)
}

/// Smallest gap between cyclically adjacent angles (the wrap gap included).
pub fn min_gap(theta: &[f64]) -> f64 {
    match theta.len() {
        0 | 1 => 2.0 * PI,
        n => {
            let inner = theta.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            inner.min(theta[0] + 2.0 * PI - theta[n - 1])
        }
    }
}

/// `count` ordered configurations of `n` angles with cyclic gaps of at least `gap`, drawn
/// uniformly by rejection from a seeded stream.
pub fn sample_chamber(n: usize, count: usize, gap: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand::{Rng, SeedableRng};
    if n == 0 || gap * n as f64 >= 2.0 * PI {
        return Err(Error::Config(format!("cannot place {n} angles with gaps of at least {gap}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1_000_000 {
            return Err(Error::Config(format!("gap {gap} too large for {n} angles")));
        }
        let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        t.sort_by(f64::total_cmp);
        if min_gap(&t) >= gap {
            out.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kappa_four_values() {
        let p = derive_params(4.0).unwrap();
        assert!((p.a - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.b, 0.0);
        assert!((p.central_charge - 1.0).abs() < 1e-15);
        assert!((p.fugacity - 2.0).abs() < 1e-15);
        assert!(derive_params(8.0 / 3.0).unwrap().fugacity.abs() < 1e-14);
        assert!(derive_params(0.0).is_err());
        assert!(derive_params(-1.0).is_err());
    }

    #[test]
    fn ground_family_u_dimension() {
        let p = derive_params(3.0).unwrap();
        let (n, m) = (4.0, 1.0);
        let su = p.b - (n - 2.0 * m) * p.a / 2.0;
        let l = conformal_dimension(c(su), &p).re;
        assert!((l - 0.3125).abs() < 1e-14);
    }

    #[test]
    fn neutrality_examples() {
        let p = derive_params(3.0).unwrap();
        assert!(check_neutrality(c(p.a + 2.0 * p.b - p.a), &p, NeutralityMode::KappaPositive).0);
        let (n, m) = (4.0, 1.0);
        let su = p.b - (n - 2.0 * m) * p.a / 2.0;
        let total = c(4.0 * p.a - 2.0 * p.a + 2.0 * su);
        assert!(check_neutrality(total, &p, NeutralityMode::KappaPositive).0);
        let (ok, defect) = check_neutrality(c(0.0), &p, NeutralityMode::Classical);
        assert!(!ok);
        assert_eq!(defect, c(2.0));
    }

    #[test]
    fn angular_examples() {
        let d = AngularDivisor::real(&[(0.0, 1.0), (PI, 1.0)]);
        assert!((eval_angular(&d).unwrap() - 1.0).norm() < 1e-15);
        let d = AngularDivisor::real(&[(0.0, 1.0), (PI / 3.0, 1.0)]);
        assert!((eval_angular(&d).unwrap() - 0.5).norm() < 1e-15);
        let d = AngularDivisor::real(&[(0.0, 1.0), (0.0, 1.0)]);
        assert!(eval_angular(&d).is_err());
    }

    #[test]
    fn sampled_configurations_are_ordered_and_reproducible() {
        let a = sample_chamber(3, 5, 0.4, 9).unwrap();
        assert_eq!(a, sample_chamber(3, 5, 0.4, 9).unwrap());
        assert!(a.iter().all(|t| in_chamber(t) && min_gap(t) >= 0.4));
        assert!(sample_chamber(4, 1, 2.0, 0).is_err());
    }

    #[test]
    fn half_plane_single_interior_point() {
        let p = derive_params(2.0).unwrap();
        let plus = Divisor::real(&[(Complex64::i(), p.a)]).unwrap();
        let d = DoubleDivisor::symmetric(plus, |z| z.im == 0.0);
        let v = eval_half_plane(&d).unwrap();
        assert!((v - 2.0).norm() < 1e-14, "{v}");
    }

    #[test]
    fn disk_origin_charge() {
        let plus = Divisor::real(&[(Complex64::new(0.0, 0.0), 1.0), (Complex64::new(0.5, 0.0), 1.0)]).unwrap();
        let d = DoubleDivisor::symmetric(plus, |_| false);
        // (0−0.5)(0−0.5)·(1−0)³(1−0.25) up to the real-branch sign
        let v = eval_disk(&d).unwrap();
        assert!((v.norm() - 0.25 * 0.75).abs() < 1e-14);
    }

    #[test]
    fn repeated_location_rejected() {
        assert!(Divisor::real(&[(c(1.0), 1.0), (c(1.0), 2.0)]).is_err());
    }

    proptest! {
        #[test]
        fn dimension_symmetric_about_b(kappa in 0.3f64..12.0, s in -5.0f64..5.0, t in -5.0f64..5.0) {
            let p = derive_params(kappa).unwrap();
            let sigma = Complex64::new(s, t);
            let l1 = conformal_dimension(sigma, &p);
            let l2 = conformal_dimension(2.0 * p.b - sigma, &p);
            prop_assert!((l1 - l2).norm() < 1e-10 * (1.0 + l1.norm()));
        }

        #[test]
        fn dimension_table(kappa in 0.1f64..20.0) {
            let p = derive_params(kappa).unwrap();
            prop_assert!((conformal_dimension(c(p.a), &p).re - p.boundary_dimension()).abs() < 1e-12 * (1.0 + p.boundary_dimension().abs()));
            let (s1, s2) = p.screening_charges();
            prop_assert!((conformal_dimension(c(s1), &p).re - 1.0).abs() < 1e-12);
            prop_assert!((conformal_dimension(c(s2), &p).re - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sphere_translation_invariant(
            xs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -1.5f64..1.5), 2..5),
            shift in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let p = derive_params(3.0).unwrap();
            let mut pts: Vec<(Complex64, f64)> = xs.iter().map(|&(x, y, s)| (Complex64::new(x, y), s)).collect();
            let total: f64 = pts.iter().map(|q| q.1).sum();
            // close the divisor neutrally with a point far from the rest
            pts.push((Complex64::new(10.0, 10.0), 2.0 * p.b - total));
            let Ok(d) = Divisor::real(&pts) else { return Ok(()); };
            prop_assume!(pts.iter().enumerate().all(|(i, a)| pts[..i].iter().all(|b| (a.0 - b.0).norm() > 1e-2)));
            let s = Complex64::new(shift.0, shift.1);
            let moved = Divisor::real(&pts.iter().map(|&(z, q)| (z + s, q)).collect::<Vec<_>>()).unwrap();
            let v0 = eval_sphere(&d).unwrap();
            let v1 = eval_sphere(&moved).unwrap();
            // principal branches may differ by a phase; moduli must agree
            prop_assert!((v0.norm() - v1.norm()).abs() <= 1e-10 * v0.norm());
        }

        #[test]
        fn angular_positive_in_chamber(mut th in proptest::collection::vec(0.0f64..6.2, 2..6), s in proptest::collection::vec(-2.0f64..2.0, 6)) {
            th.sort_by(f64::total_cmp);
            prop_assume!(th.windows(2).all(|w| w[1] - w[0] > 1e-3));
            let d = AngularDivisor::real(&th.iter().zip(&s).map(|(&t, &q)| (t, q)).collect::<Vec<_>>());
            let v = eval_angular(&d).unwrap();
            prop_assert!(v.re > 0.0 && v.im == 0.0);
        }
    }
}
