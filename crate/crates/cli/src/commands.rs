use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};

use radial_sle::calogero::{conjugation_identity_check, cs_eigencheck, expected_sign, CSParams, SignResolution};
use radial_sle::contour::{integrate_contour, interval_reduction, BranchedIntegrand, ContourSpec, Coord, QuadOptions};
use radial_sle::linkpatterns::{enumerate, meander_matrix, LinkPattern, PatternKind};
use radial_sle::nullvec::{
    check_ward_half_plane, commutator_check_generators, commutator_check_nullvec, estimate_omega, kappa_log_gradient,
    residual_report, FdOrder, FiniteDiffScheme, NestedScheme,
};
use radial_sle::params::{classical_dimension, conformal_dimension, derive_params, sample_chamber};
use radial_sle::screening::{Family, FermionicGround, HalfPlaneGround, PartitionEvaluator, Psi, ScreeningSpec};
use radial_sle::sim::{rho_from_charges, run_ensemble, run_simulation, DriftMode, HaltReason, MarkedPoint, SimConfig, TraceResult};
use radial_sle::targets;

use crate::args::*;
use crate::CliError;

pub enum Primary {
    Report(Value),
    /// Canonical text listing.
    Text(String),
    /// One CSV per ensemble member, with the diagnostics document.
    Traces { csv: Vec<Vec<u8>>, diagnostics: Value },
}

pub enum Status {
    Ok,
    Tolerance(String),
    Halt(String),
}

pub struct Output {
    pub primary: Primary,
    pub status: Status,
}

type Res = Result<Output, CliError>;

fn report(v: Value) -> Res {
    Ok(Output { primary: Primary::Report(v), status: Status::Ok })
}

fn checked(v: Value, pass: bool, what: impl FnOnce() -> String) -> Res {
    let status = if pass { Status::Ok } else { Status::Tolerance(what()) };
    Ok(Output { primary: Primary::Report(v), status })
}

pub fn run(cmd: &Command) -> Res {
    match cmd {
        Command::Params(a) => params(a),
        Command::Patterns(a) => patterns(a),
        Command::Meander(a) => meander(a),
        Command::EvalPsi(a) => eval_psi(a),
        Command::Verify(VerifyCommand::Nullvec(a)) => verify_nullvec(a),
        Command::Verify(VerifyCommand::Rotation(a)) => verify_rotation(a),
        Command::Verify(VerifyCommand::Ward(a)) => verify_ward(a),
        Command::Verify(VerifyCommand::Cs(a)) => verify_cs(a),
        Command::Verify(VerifyCommand::Commutators(a)) => verify_commutators(a),
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(CalibrateCommand::Pochhammer(a)) => pochhammer(a),
        Command::Calibrate(CalibrateCommand::FdOrder(a)) => fd_order(a),
    }
}

fn params(a: &ParamsArgs) -> Res {
    let classical: Vec<Value> = a
        .sigma
        .iter()
        .map(|&s| json!({"sigma": s, "dimension": classical_dimension(Complex64::new(s, 0.0), a.classical.into()).re}))
        .collect();
    if a.kappa == 0.0 {
        return report(json!({"kappa": 0.0, "classical": a.classical, "dimensions": classical}));
    }
    let p = derive_params(a.kappa)?;
    let dims: Vec<Value> =
        a.sigma.iter().map(|&s| json!({"sigma": s, "dimension": conformal_dimension(Complex64::new(s, 0.0), &p).re})).collect();
    let (minus, plus) = p.screening_charges();
    report(json!({
        "params": p,
        "screening_charges": [minus, plus],
        "boundary_dimension": p.boundary_dimension(),
        "dimensions": dims,
    }))
}

fn patterns(a: &PatternsArgs) -> Res {
    let list = enumerate(a.kind.into(), a.n, a.m)?;
    let text: Vec<String> = list.iter().map(ToString::to_string).collect();
    let primary = match a.format {
        FormatArg::Text => Primary::Text(text.iter().map(|t| format!("{t}\n")).collect()),
        FormatArg::Json => Primary::Report(json!({"kind": a.kind, "n": a.n, "m": a.m, "count": text.len(), "patterns": text})),
    };
    Ok(Output { primary, status: Status::Ok })
}

fn meander(a: &MeanderArgs) -> Res {
    let p = derive_params(a.kappa)?;
    let mm = meander_matrix(&p, a.n, a.m, a.kind.into())?;
    let m = mm.matrix();
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
    let (det, cond) = (mm.determinant(), mm.condition_number());
    let invertible = det != 0.0 && det.is_finite() && cond.is_finite() && cond <= a.max_condition;
    let v = json!({
        "kind": a.kind,
        "n": a.n,
        "m": a.m,
        "kappa": a.kappa,
        "fugacity": p.fugacity,
        "patterns": mm.patterns.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "matrix": rows,
        "determinant": det,
        "condition_number": cond,
        "symmetric": mm.is_symmetric(),
        "invertible": invertible,
        "max_condition": a.max_condition,
    });
    checked(v, !a.check_invertible || invertible, || format!("meander matrix not invertible: det = {det:e}, cond = {cond:e}"))
}

fn family(a: &PsiArgs) -> Option<Family> {
    match a.family {
        FamilyArg::Fermionic => None,
        FamilyArg::Ground => Some(Family::GroundJ),
        FamilyArg::Excited => Some(Family::ExcitedK),
        FamilyArg::Spin => Some(Family::SpinJ { eta: a.eta }),
        FamilyArg::Chordal => Some(Family::ChordalL),
    }
}

fn spec_for(family: Family, kappa: f64, n: usize, m: usize, pattern: Option<&str>) -> Result<ScreeningSpec, CliError> {
    match pattern {
        None => Ok(ScreeningSpec::standard(family, kappa, n, m)?),
        Some(text) => {
            let p: LinkPattern = text.parse()?;
            if p.n() != n || p.m() != m {
                return Err(CliError::Invalid(format!("pattern `{text}` has n={}, m={}, expected n={n}, m={m}", p.n(), p.m())));
            }
            Ok(ScreeningSpec::new(family, kappa, p)?)
        }
    }
}

fn screening_spec(a: &PsiArgs, family: Family) -> Result<ScreeningSpec, CliError> {
    let mut spec = spec_for(family, a.kappa, a.n, a.m, a.pattern.as_deref())?
        .with_quad(QuadOptions { tol: a.quad_tol, min_level: 0, max_level: a.max_level });
    if let Some(r) = a.w_radius {
        spec = spec.with_w_radius(r);
    }
    Ok(spec)
}

/// The partition function selected by `a`, with its label and `(h, ω)` targets.
fn build_psi(a: &PsiArgs) -> Result<(Box<dyn Psi>, String, targets::Target, targets::Target), CliError> {
    match family(a) {
        None => {
            if a.m != 0 || a.pattern.is_some() {
                return Err(CliError::Invalid("the fermionic family has m = 0 and no pattern".into()));
            }
            let (h, w) = (targets::target_h(Family::GroundJ, a.n, 0, a.kappa), targets::target_omega(Family::GroundJ, a.n, 0, a.kappa));
            Ok((Box::new(FermionicGround::new(a.kappa)?), format!("fermionic n={}", a.n), h, w))
        }
        Some(f) => {
            let spec = screening_spec(a, f)?;
            let (h, w) = targets::targets_for(&spec);
            let label = format!("{} {}", f.name(), spec.pattern);
            Ok((Box::new(PartitionEvaluator::new(spec)?), label, h, w))
        }
    }
}

fn eval_psi(a: &EvalPsiArgs) -> Res {
    if a.theta.len() != a.psi.n {
        return Err(CliError::Invalid(format!("{} angles for n = {}", a.theta.len(), a.psi.n)));
    }
    match family(&a.psi) {
        None => {
            let (psi, label, ..) = build_psi(&a.psi)?;
            report(json!({"label": label, "kappa": a.psi.kappa, "theta": a.theta, "value": psi.eval(&a.theta)?, "error": 0.0}))
        }
        Some(f) => {
            let ev = PartitionEvaluator::new(screening_spec(&a.psi, f)?)?;
            let plan = ev.plan(&a.theta)?;
            let q = ev.evaluate_with(&a.theta, &plan)?;
            report(json!({
                "label": format!("{} {}", f.name(), ev.spec().pattern),
                "kappa": a.psi.kappa,
                "theta": a.theta,
                "value": q.value,
                "error": q.error,
                "level": q.level,
                "plan": plan,
            }))
        }
    }
}

fn samples(a: &VerifyPsiArgs) -> Result<Vec<Vec<f64>>, CliError> {
    Ok(sample_chamber(a.psi.n, a.sample.samples, a.sample.min_gap, a.sample.seed)?)
}

fn verify_nullvec(a: &VerifyPsiArgs) -> Res {
    let (psi, label, h, w) = build_psi(&a.psi)?;
    let r = residual_report(&label, psi.as_ref(), &samples(a)?, a.psi.kappa, &a.fd.scheme(), Some(h.value), Some(w.value))?;
    let err = (r.h.mean - h.value).abs();
    let pass = err <= a.tol && r.h.spread <= a.tol;
    let v = json!({
        "check": "nullvec",
        "target": h,
        "h": r.h.mean,
        "abs_error": err,
        "spread": r.h.spread,
        "tol": a.tol,
        "pass": pass,
        "max_residual": r.max_residual(),
        "details": r,
    });
    checked(v, pass, || format!("|h − target| = {err:e}, spread = {:e} (tol {:e})", r.h.spread, a.tol))
}

fn verify_rotation(a: &VerifyPsiArgs) -> Res {
    let (psi, label, _, w) = build_psi(&a.psi)?;
    let (omega, shift) = estimate_omega(psi.as_ref(), &samples(a)?, a.psi.kappa, &a.fd.scheme())?;
    let err = (omega.mean - w.value).abs();
    let pass = err <= a.tol && omega.spread <= a.tol;
    let v = json!({
        "check": "rotation",
        "label": label,
        "target": w,
        "omega": omega,
        "omega_shift": shift,
        "abs_error": err,
        "tol": a.tol,
        "pass": pass,
    });
    checked(v, pass, || format!("|ω − target| = {err:e}, spread = {:e} (tol {:e})", omega.spread, a.tol))
}

fn verify_ward(a: &WardArgs) -> Res {
    let hp = HalfPlaneGround::new(a.kappa, LinkPattern::standard(PatternKind::Chordal, a.n, a.m)?)?;
    let z = if a.z.is_empty() {
        (0..a.n).map(|i| if a.n == 1 { 0.0 } else { -1.0 + 2.1 * i as f64 / (a.n - 1) as f64 }).collect()
    } else {
        a.z.clone()
    };
    if z.len() != a.n || a.u.len() != 2 || a.u[1] == 0.0 {
        return Err(CliError::Invalid(format!("need {} real points and u = re,im off the real line", a.n)));
    }
    let u = Complex64::new(a.u[0], a.u[1]);
    let mut pts: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    pts.extend([u, u.conj()]);
    let (lz, lu) = hp.weights();
    let weights = a.falsify.map(|d| (lz, lu + d));
    let r = check_ward_half_plane(&hp, &pts, weights, &a.fd.scheme())?;
    let pass = r.max() <= a.tol;
    let v = json!({
        "check": "ward",
        "n": a.n,
        "m": a.m,
        "kappa": a.kappa,
        "points": pts,
        "weights": {"z": lz, "u": weights.map_or(lu, |w| w.1)},
        "falsified": a.falsify.is_some(),
        "residuals": r,
        "max": r.max(),
        "tol": a.tol,
        "pass": pass,
    });
    checked(v, pass, || format!("Ward residual {:e} (tol {:e})", r.max(), a.tol))
}

fn verify_cs(a: &VerifyPsiArgs) -> Res {
    let (psi, label, h, _) = build_psi(&a.psi)?;
    let cs = CSParams::new(a.psi.kappa, a.psi.n)?;
    let pts = samples(a)?;
    let scheme = a.fd.scheme();
    let eig = cs_eigencheck(&label, psi.as_ref(), &cs, h.value, &pts, &scheme, a.tol)?;
    let probe = |t: &[f64]| t.iter().map(|x| 2.0 + x.sin()).product::<f64>();
    let conj = conjugation_identity_check(&probe, &pts[0], &cs, &scheme, a.tol)?;
    let err = (eig.e_measured.mean - eig.e_theory).abs();
    let sign_ok = conj.resolved == expected_sign() || (a.psi.n == 1 && conj.resolved == SignResolution::Tie);
    let pass = err <= a.tol && sign_ok;
    let v = json!({
        "check": "cs",
        "beta": cs.beta,
        "coupling": cs.coupling(),
        "eigen": eig,
        "abs_error": err,
        "conjugation": conj,
        "expected_sign": expected_sign(),
        "tol": a.tol,
        "pass": pass,
    });
    checked(v, pass, || format!("|E − E_theory| = {err:e} (tol {:e}), conjugation sign {:?}", a.tol, conj.resolved))
}

fn verify_commutators(a: &CommutatorArgs) -> Res {
    let n = a.psi.n;
    if n < 2 || a.pair.len() != 2 || a.pair.iter().any(|&i| i >= n) || a.pair[0] == a.pair[1] {
        return Err(CliError::Invalid(format!("need n ≥ 2 and two distinct indices below {n}")));
    }
    let theta: Vec<f64> =
        if a.theta.is_empty() { (0..n).map(|j| 0.3 + 2.0 * PI * j as f64 / n as f64).collect() } else { a.theta.clone() };
    if theta.len() != n {
        return Err(CliError::Invalid(format!("{} angles for n = {n}", theta.len())));
    }
    let (psi, label, ..) = build_psi(&a.psi)?;
    let inner = FiniteDiffScheme { step: a.inner_step, ..FiniteDiffScheme::default() };
    let nested = NestedScheme { inner, outer: FiniteDiffScheme { step: a.outer_step, ..inner } };
    let (i, j) = (a.pair[0], a.pair[1]);
    let kappa = a.psi.kappa;
    let nv = commutator_check_nullvec(psi.as_ref(), &theta, i, j, kappa, &nested)?;
    let frozen = psi.freeze(&theta)?;
    let smooth: &dyn Psi = frozen.as_deref().unwrap_or(psi.as_ref());
    let grad = FiniteDiffScheme::default();
    let drift = |t: &[f64]| kappa_log_gradient(smooth, t, kappa, &grad);
    let probe = |t: &[f64]| t[i].cos();
    let gen = commutator_check_generators(&drift, &probe, &theta, i, j, kappa, &nested)?;
    let pass = nv <= a.tol && gen <= a.generator_tol;
    let v = json!({
        "check": "commutators",
        "label": label,
        "theta": theta,
        "pair": [i, j],
        "nullvec_residual": nv,
        "generator_residual": gen,
        "tol": a.tol,
        "generator_tol": a.generator_tol,
        "pass": pass,
    });
    checked(v, pass, || format!("commutator residuals {nv:e} (tol {:e}), {gen:e} (tol {:e})", a.tol, a.generator_tol))
}

fn drift_mode(a: &SimulateArgs) -> Result<DriftMode, CliError> {
    let marked = || -> Result<Vec<MarkedPoint>, CliError> {
        if a.marked.len() != a.charge.len() {
            return Err(CliError::Invalid(format!("{} marked angles but {} charges", a.marked.len(), a.charge.len())));
        }
        Ok(a.marked.iter().zip(&a.charge).map(|(&angle, &charge)| MarkedPoint { angle, charge }).collect())
    };
    Ok(match a.drift {
        DriftArg::Fermionic => DriftMode::ClosedFormFermionic,
        DriftArg::Numeric => {
            let f = match a.family {
                FamilyArg::Fermionic => return Err(CliError::Invalid("use --drift fermionic for the closed form".into())),
                FamilyArg::Ground => Family::GroundJ,
                FamilyArg::Excited => Family::ExcitedK,
                FamilyArg::Spin => Family::SpinJ { eta: a.eta },
                FamilyArg::Chordal => Family::ChordalL,
            };
            DriftMode::NumericPsi { spec: spec_for(f, a.kappa, a.n, a.m, a.pattern.as_deref())? }
        }
        DriftArg::Rational => DriftMode::Rational { marked: marked()? },
        DriftArg::KappaZero => DriftMode::KappaZero { marked: marked()? },
        DriftArg::Rho => {
            let rho = if a.rho.is_empty() { rho_from_charges(a.kappa, &a.charge, a.rho_convention.into())? } else { a.rho.clone() };
            if rho.len() != a.marked.len() {
                return Err(CliError::Invalid(format!("{} marked angles but {} ρ weights", a.marked.len(), rho.len())));
            }
            DriftMode::SleKappaRho { points: a.marked.clone(), rho }
        }
    })
}

fn simulate(a: &SimulateArgs) -> Res {
    if a.ensemble == 0 {
        return Err(CliError::Invalid("--ensemble must be at least 1".into()));
    }
    let mut cfg = SimConfig::new(a.kappa, a.n, drift_mode(a)?, a.dt, a.horizon, a.seed);
    cfg.nu = a.nu.clone();
    cfg.initial = a.initial.clone();
    cfg.collision_eps = a.collision_eps;
    cfg.tip_offset = a.tip_offset;
    cfg.tip_stride = if a.no_tips { usize::MAX } else { a.tip_stride };
    cfg.fd = a.fd.scheme();
    cfg.validate()?;
    let runs: Vec<TraceResult> = if a.ensemble == 1 { vec![run_simulation(&cfg)?] } else { run_ensemble(&cfg, a.ensemble)? };
    let mut csv = Vec::with_capacity(runs.len());
    for r in &runs {
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        csv.push(buf);
    }
    let diagnostics = match runs.as_slice() {
        [one] => one.diagnostics(&cfg),
        many => json!({"members": many.iter().map(|r| r.diagnostics(&cfg)).collect::<Vec<_>>()}),
    };
    let blowups: Vec<String> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.halt_reason == HaltReason::Blowup)
        .map(|(i, r)| format!("member {i} at t = {}", r.times.last().copied().unwrap_or(0.0)))
        .collect();
    let status = if blowups.is_empty() { Status::Ok } else { Status::Halt(format!("numerical blow-up: {}", blowups.join(", "))) };
    Ok(Output { primary: Primary::Traces { csv, diagnostics }, status })
}

fn pochhammer(a: &PochhammerArgs) -> Res {
    let f = BranchedIntegrand::single(Coord::HalfPlane, vec![(Complex64::new(0.0, 0.0), a.alpha), (Complex64::new(1.0, 0.0), a.beta)]);
    let contour = ContourSpec::Pochhammer { p: 0.0, q: 1.0, clearance: a.clearance, height: a.height };
    let opts = QuadOptions { tol: a.quad_tol, min_level: 0, max_level: a.max_level };
    let c = integrate_contour(&f, &contour, &opts)?;
    let r = interval_reduction(&f, 0, 1, &opts)?;
    let diff = (c.value - r.value).norm();
    let allowed = c.error + r.error + 1e-10 * r.value.norm().max(1.0);
    let pass = diff <= allowed;
    let v = json!({
        "alpha": a.alpha,
        "beta": a.beta,
        "contour": c,
        "interval": r,
        "difference": diff,
        "allowed": allowed,
        "pass": pass,
    });
    checked(v, pass, || format!("contour and interval values differ by {diff:e} (allowed {allowed:e})"))
}

fn fit_order(steps: &[f64], errors: &[f64]) -> f64 {
    let x: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn fd_order(a: &FdOrderArgs) -> Res {
    if a.steps.len() < 2 {
        return Err(CliError::Invalid("need at least two step sizes".into()));
    }
    let psi = FermionicGround::new(a.kappa)?;
    let h = targets::h_ground(a.n, 0, a.kappa);
    let pts = sample_chamber(a.n, a.samples, a.min_gap, a.seed)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (order, nominal) in [(FdOrder::Second, 2.0), (FdOrder::Fourth, 4.0)] {
        let mut errors = Vec::new();
        for &step in &a.steps {
            let scheme = FiniteDiffScheme { step, order, richardson_levels: 1 };
            errors.push(residual_report("fermionic", &psi, &pts, a.kappa, &scheme, Some(h), None)?.max_residual());
        }
        let observed = fit_order(&a.steps, &errors);
        pass &= observed >= nominal - a.tol;
        rows.push(json!({"order": order, "nominal": nominal, "steps": a.steps, "errors": errors, "observed": observed}));
    }
    checked(json!({"kappa": a.kappa, "n": a.n, "orders": rows, "tol": a.tol, "pass": pass}), pass, || {
        "observed finite-difference order below nominal".into()
    })
}
