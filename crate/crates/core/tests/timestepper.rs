mod common;

use std::f64::consts::PI;

use vvv_mhd::dynamics::{MhdForm, MhdState, PhysParams, RhsKind, SystemState, VvvState};
use vvv_mhd::experiments::{initial_data, InitialKind, InitialSpec};
use vvv_mhd::spectral::{Grid, SpectralVectorField};
use vvv_mhd::timestepper::{integrate, step, suggest_dt, StepError, StepperConfig, MAX_DT};

use common::{rel_diff, solenoidal};

const TAU: f64 = 2.0 * PI;

fn vvv_state(u: SpectralVectorField, w: SpectralVectorField, b: SpectralVectorField) -> SystemState {
    SystemState::VvvMhd(VvvState {
        velocity: u,
        vorticity: w,
        magnetic: b,
        t: 0.0,
    })
}

fn taylor_green(n: usize) -> SystemState {
    let g = Grid::new(n).unwrap();
    let spec = InitialSpec {
        kind: InitialKind::TaylorGreen,
        magnetic_amplitude: 0.5,
        ..Default::default()
    };
    SystemState::VvvMhd(initial_data(&spec, &g).unwrap().0)
}

fn final_state(s: &SystemState, p: &PhysParams, dt: f64, t_end: f64) -> SystemState {
    let config = StepperConfig::new(dt, t_end, usize::MAX).unwrap();
    integrate(s, p, RhsKind::VvvMhd, &config, &mut []).unwrap().final_state
}

fn state_error(a: &SystemState, reference: &SystemState) -> f64 {
    a.fields()
        .iter()
        .zip(reference.fields())
        .map(|(x, r)| rel_diff(x, r))
        .fold(0.0, f64::max)
}

#[test]
fn zero_state_stays_zero() {
    let g = Grid::new(8).unwrap();
    let p = PhysParams::new(0.01, 0.01, 0.1).unwrap();
    let next = step(&SystemState::VvvMhd(VvvState::zeros(&g)), &p, RhsKind::VvvMhd, 1e-3).unwrap();
    assert!(next.fields().iter().all(|f| f.is_zero()));
    assert!((next.t() - 1e-3).abs() < 1e-18);
}

#[test]
fn pure_diffusion_is_propagated_exactly() {
    let g = Grid::new(16).unwrap();
    let zero = SpectralVectorField::zeros(&g);
    let (nu, eta, alpha, dt) = (0.01, 0.03, 0.1, 5e-3);
    let p = PhysParams::new(nu, eta, alpha).unwrap();
    let k2 = 4.0 * TAU * TAU;
    let mode = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * 2.0 * x).sin(), 0.0]);

    let next = step(&vvv_state(mode.clone(), zero.clone(), zero.clone()), &p, RhsKind::VvvMhd, dt).unwrap();
    let expected = mode.scaled((-nu * k2 * dt / (1.0 + alpha * alpha * k2)).exp());
    assert!(rel_diff(next.velocity(), &expected) <= 1e-12);

    let next = step(&vvv_state(zero.clone(), zero.clone(), mode.clone()), &p, RhsKind::VvvMhd, dt).unwrap();
    assert!(rel_diff(next.magnetic(), &mode.scaled((-eta * k2 * dt).exp())) <= 1e-12);

    let mhd = SystemState::Mhd(MhdState {
        velocity: mode.clone(),
        magnetic: zero,
        t: 0.0,
    });
    let next = step(&mhd, &p.with_alpha(0.0), RhsKind::Mhd(MhdForm::Convective), dt).unwrap();
    assert!(rel_diff(next.velocity(), &mode.scaled((-nu * k2 * dt).exp())) <= 1e-12);
}

#[test]
fn fourth_order_self_convergence() {
    let s = taylor_green(16);
    let p = PhysParams::new(0.02, 0.02, 0.1).unwrap();
    let (dt, t_end) = (0.02, 0.16);
    let reference = final_state(&s, &p, dt / 8.0, t_end);
    let coarse = state_error(&final_state(&s, &p, dt, t_end), &reference);
    let fine = state_error(&final_state(&s, &p, dt / 2.0, t_end), &reference);
    let ratio = coarse / fine;
    assert!((12.0..=20.0).contains(&ratio), "error ratio {ratio} ({coarse:e} / {fine:e})");
    assert!(ratio.log2() >= 3.5);
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let s = taylor_green(16);
    let p = PhysParams::new(0.02, 0.02, 0.1).unwrap();
    let config = StepperConfig::new(1e-2, 0.1, 2).unwrap();
    let a = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut []).unwrap();
    let b = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut []).unwrap();
    assert_eq!(a.trajectory.records, b.trajectory.records);
    for (x, y) in a.final_state.fields().iter().zip(b.final_state.fields()) {
        assert_eq!(*x, y);
    }
}

#[test]
fn every_step_is_solenoidal_and_real() {
    let g = Grid::new(16).unwrap();
    let s = vvv_state(solenoidal(&g, 1, 0), solenoidal(&g, 1, 1), solenoidal(&g, 1, 2));
    let p = PhysParams::new(0.02, 0.02, 0.1).unwrap();
    let mut config = StepperConfig::new(5e-3, 0.05, 1).unwrap();
    config.retain_snapshots = true;
    let run = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut []).unwrap();
    let snaps = run.trajectory.snapshots.unwrap();
    assert_eq!(snaps.len(), 11);
    for snap in &snaps {
        for f in snap.fields() {
            assert!(f.relative_divergence() <= 1e-10);
            assert!(f.imaginary_residue() <= 1e-12 * f.max_abs().max(1e-300));
            assert_eq!(f.hermitian_defect(), 0.0);
        }
    }
}

#[test]
fn zero_data_gives_zero_records() {
    let g = Grid::new(8).unwrap();
    let p = PhysParams::new(0.01, 0.01, 0.1).unwrap();
    let config = StepperConfig::new(1e-2, 0.05, 1).unwrap();
    let run = integrate(&SystemState::VvvMhd(VvvState::zeros(&g)), &p, RhsKind::VvvMhd, &config, &mut []).unwrap();
    assert_eq!(run.trajectory.records.len(), 6);
    for rec in &run.trajectory.records {
        for (name, v) in vvv_mhd::diagnostics::DiagnosticRecord::COLUMNS.iter().zip(rec.values()).skip(1) {
            if let Some(v) = v {
                assert_eq!(v, 0.0, "{name}");
            }
        }
    }
}

#[test]
fn zero_horizon_records_only_the_start() {
    let s = taylor_green(8);
    let p = PhysParams::new(0.01, 0.01, 0.1).unwrap();
    let config = StepperConfig::new(1e-2, 0.0, 1).unwrap();
    let run = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut []).unwrap();
    assert_eq!(run.trajectory.times(), vec![0.0]);
}

#[test]
fn records_follow_the_schedule() {
    let s = taylor_green(8);
    let p = PhysParams::new(0.01, 0.01, 0.1).unwrap();
    let config = StepperConfig::new(1e-2, 0.075, 3).unwrap();
    let mut seen = Vec::new();
    let mut obs = |state: &SystemState, _: &mut vvv_mhd::diagnostics::DiagnosticRecord| seen.push(state.t());
    let run = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut [&mut obs]).unwrap();
    let times = run.trajectory.times();
    assert_eq!(times.len(), 4);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert!((times[1] - 0.03).abs() < 1e-15 && (times[2] - 0.06).abs() < 1e-15);
    assert!((times[3] - 0.075).abs() < 1e-15);
    assert_eq!(seen, times);
}

#[test]
fn blow_up_aborts_with_partial_trajectory() {
    let g = Grid::new(16).unwrap();
    let spec = InitialSpec {
        kind: InitialKind::RandomBand,
        amplitude: 50.0,
        magnetic_amplitude: 50.0,
        ..Default::default()
    };
    let s = SystemState::VvvMhd(initial_data(&spec, &g).unwrap().0);
    let p = PhysParams::new(1e-3, 1e-3, 0.01).unwrap();
    let config = StepperConfig::new(0.2, 10.0, 1).unwrap();
    let err = integrate(&s, &p, RhsKind::VvvMhd, &config, &mut []).unwrap_err();
    match err.source {
        StepError::NonFinite { t, indicator } => {
            assert!(t > 0.0);
            assert!(indicator.is_finite());
        }
        other => panic!("expected NonFinite, got {other}"),
    }
    assert!(!err.partial.records.is_empty());
    assert_eq!(err.partial.records[0].t, 0.0);
    assert!(err.last_state.unwrap().is_finite());
}

#[test]
fn wrong_system_is_rejected() {
    let s = taylor_green(8);
    let p = PhysParams::new(0.01, 0.01, 0.0).unwrap();
    assert!(matches!(
        step(&s, &p, RhsKind::Mhd(MhdForm::Convective), 1e-3),
        Err(StepError::KindMismatch(_))
    ));
}

#[test]
fn suggested_dt_examples() {
    let zero = SystemState::VvvMhd(VvvState::zeros(&Grid::new(16).unwrap()));
    assert_eq!(suggest_dt(&zero, 0.5), MAX_DT);

    let with_amplitude = |n: usize, a: f64| {
        let g = Grid::new(n).unwrap();
        let u = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, a * (TAU * x).sin(), 0.0]);
        vvv_state(u, SpectralVectorField::zeros(&g), SpectralVectorField::zeros(&g))
    };
    // 0.5/32 = 0.015625 exceeds the cap
    assert_eq!(suggest_dt(&with_amplitude(32, 1.0), 0.5), 1e-2);
    let coarse = suggest_dt(&with_amplitude(32, 4.0), 0.5);
    let fine = suggest_dt(&with_amplitude(64, 4.0), 0.5);
    assert!((coarse - 0.5 / 128.0).abs() < 1e-15);
    assert!((coarse / fine - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(StepperConfig::new(0.0, 1.0, 1).is_err());
    assert!(StepperConfig::new(1e-3, -1.0, 1).is_err());
    assert!(StepperConfig::new(1e-3, 1.0, 0).is_err());
    let mut c = StepperConfig::new(1e-3, 1.0, 1).unwrap();
    c.cfl_safety = 1.5;
    assert!(c.validate().is_err());
}
