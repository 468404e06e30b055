//! Ensemble-level simulator properties.

use std::f64::consts::PI;

use radial_sle::sim::{run_ensemble, run_simulation, DriftMode, HaltReason, MarkedPoint, SimConfig};

#[test]
fn antipodal_gap_is_symmetric() {
    let mut cfg = SimConfig::new(2.0, 2, DriftMode::ClosedFormFermionic, 2e-3, 0.3, 2024);
    cfg.tip_stride = usize::MAX;
    let runs = run_ensemble(&cfg, 400).unwrap();
    let mut x: Vec<f64> = runs
        .iter()
        .filter(|r| r.halt_reason == HaltReason::Horizon)
        .map(|r| r.driving_paths[1].last().unwrap() - r.driving_paths[0].last().unwrap() - PI)
        .collect();
    let n = x.len();
    assert!(n > 350);
    // two-sample KS between the deviations and their mirror images
    let mut y: Vec<f64> = x.iter().map(|v| -v).collect();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < n {
        if x[i] <= y[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 - j as f64).abs() / n as f64);
    }
    let critical = 1.358 * (2.0 / n as f64).sqrt();
    assert!(d < critical, "KS D = {d}, critical {critical}");
}

#[test]
fn ensembles_are_reproducible_and_distinct() {
    let mut cfg = SimConfig::new(3.0, 2, DriftMode::ClosedFormFermionic, 1e-3, 0.05, 5);
    cfg.tip_stride = usize::MAX;
    let a = run_ensemble(&cfg, 8).unwrap();
    let b = run_ensemble(&cfg, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].driving_paths, a[1].driving_paths);
}

#[test]
fn deterministic_mode_ignores_seed() {
    let marked = vec![MarkedPoint { angle: 2.0, charge: -1.0 }, MarkedPoint { angle: 4.0, charge: -2.0 }];
    let mut cfg = SimConfig::new(0.0, 1, DriftMode::KappaZero { marked }, 1e-3, 0.3, 1);
    cfg.tip_stride = 30;
    let a = run_simulation(&cfg).unwrap();
    cfg.seed = 99;
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a, b);
    // the covering flow pushes marked points away from the growth point
    assert!(a.marked_paths[0].last().unwrap() > &2.0);
    assert!(a.tips[0].iter().all(|t| t.unwrap().norm() <= 1.0 + 1e-12));
}

#[test]
fn collision_is_recorded_not_an_error() {
    // strongly attractive marked point right next to the curve
    let mut cfg = SimConfig::new(1.0, 1, DriftMode::SleKappaRho { points: vec![0.05], rho: vec![-4.0] }, 1e-3, 1.0, 3);
    cfg.tip_stride = usize::MAX;
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.halt_reason, HaltReason::Collision);
    assert!(r.times.last().unwrap() < &1.0);
}

#[test]
fn numeric_psi_drift_runs() {
    use radial_sle::screening::{Family, ScreeningSpec};
    let spec = ScreeningSpec::standard(Family::GroundJ, 3.5, 2, 1).unwrap();
    let mut cfg = SimConfig::new(3.5, 2, DriftMode::NumericPsi { spec }, 5e-3, 0.05, 8);
    cfg.tip_stride = 5;
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.halt_reason, HaltReason::Horizon);
    assert_eq!(r.times.len(), 11);
}
