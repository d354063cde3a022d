//! Self-checks run by the `check` subcommand: discrete identities of the
//! spectral operators and right-hand sides, plus a short energy-budget run.

use std::f64::consts::PI;

use crate::diagnostics::{energy_budget, max_relative_residual};
use crate::dynamics::{rhs_mhd, rhs_vvv_mhd, MhdForm, MhdState, PhysParams, RhsKind, SystemState, VvvState};
use crate::experiments::{initial_data, random_band, InitialSpec};
use crate::spectral::{
    bilinear_b, curl, divergence, gradient, inner, inner_h1, leray_project, norm, Grid, NormOrder,
    SpectralScalarField, SpectralVectorField,
};
use crate::timestepper::{integrate, StepperConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn bound(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            passed: value <= limit,
            detail: format!("{value:.3e} <= {limit:.0e}"),
        }
    }
}

/// Seeded dealiased solenoidal field on a 16³-style grid.
fn sample(grid: &std::sync::Arc<Grid>, seed: u64, stream: u64) -> SpectralVectorField {
    random_band(grid, grid.n() / 4, 1.0, seed, stream)
}

fn rel(a: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        a.abs()
    } else {
        a.abs() / scale
    }
}

pub fn run_checks() -> Vec<CheckOutcome> {
    let grid = Grid::new(16).expect("valid grid");
    let mut out = Vec::new();

    let u = sample(&grid, 1, 0);
    let v = sample(&grid, 2, 0);
    let w = sample(&grid, 3, 0);

    let back = SpectralVectorField::from_physical(&u.to_physical()).expect("finite samples");
    out.push(CheckOutcome::bound(
        "transform round trip",
        back.max_abs_difference(&u) / u.max_abs(),
        1e-13,
    ));

    out.push(CheckOutcome::bound(
        "divergence of curl",
        divergence(&curl(&u)).max_abs() / u.max_abs(),
        1e-13,
    ));

    let phi = SpectralScalarField::from_fn(&grid, |x, y, z| {
        (2.0 * PI * (x + 2.0 * y)).sin() + (2.0 * PI * (3.0 * z - y)).cos()
    });
    let mixed = &u + &gradient(&phi);
    let p1 = leray_project(&mixed);
    let p2 = leray_project(&p1);
    out.push(CheckOutcome::bound(
        "projection idempotent and solenoidal",
        (p2.max_abs_difference(&p1) / p1.max_abs()).max(p1.relative_divergence()),
        1e-13,
    ));

    let mut skew: f64 = 0.0;
    let mut anti: f64 = 0.0;
    for seed in 0..10 {
        let (a, b, c) = (sample(&grid, 100 + seed, 0), sample(&grid, 100 + seed, 1), sample(&grid, 100 + seed, 2));
        let bab = bilinear_b(&a, &b).expect("same grid");
        let bac = bilinear_b(&a, &c).expect("same grid");
        skew = skew.max(rel(inner(&bab, &b), norm(&bab, NormOrder::L2) * norm(&b, NormOrder::L2)));
        let (x, y) = (inner(&bab, &c), inner(&bac, &b));
        anti = anti.max(rel(x + y, norm(&bab, NormOrder::L2) * norm(&c, NormOrder::L2)));
    }
    out.push(CheckOutcome::bound("trilinear form vanishes on <B(u,v),v>", skew, 1e-10));
    out.push(CheckOutcome::bound("trilinear form antisymmetric", anti, 1e-10));

    let params = PhysParams::new(0.02, 0.02, 0.1).expect("valid params");
    let mhd = MhdState {
        velocity: u.clone(),
        magnetic: v.clone(),
        t: 0.0,
    };
    let (cu, cb) = rhs_mhd(&mhd, &params.with_alpha(0.0), MhdForm::Convective).expect("valid state");
    let (ru, rb) = rhs_mhd(&mhd, &params.with_alpha(0.0), MhdForm::Rotational).expect("valid state");
    out.push(CheckOutcome::bound(
        "convective and rotational forms agree",
        (cu.max_abs_difference(&ru) / cu.max_abs()).max(cb.max_abs_difference(&rb) / cb.max_abs()),
        1e-10,
    ));

    let vvv = VvvState {
        velocity: u.clone(),
        vorticity: w.clone(),
        magnetic: v.clone(),
        t: 0.0,
    };
    let (du, dw, db) = rhs_vvv_mhd(&vvv, &params).expect("valid state");
    let a2 = params.alpha * params.alpha;
    let lhs = a2 * inner_h1(&u, &du) + inner(&u, &du) + inner(&v, &db);
    let rhs = -params.nu * norm(&u, NormOrder::H1).powi(2) - params.eta * norm(&v, NormOrder::H1).powi(2);
    out.push(CheckOutcome::bound("tendency energy balance", rel(lhs - rhs, rhs.abs()), 1e-9));
    out.push(CheckOutcome::bound(
        "tendencies solenoidal",
        du.relative_divergence().max(dw.relative_divergence()).max(db.relative_divergence()),
        1e-10,
    ));

    let (start, _) = initial_data(&InitialSpec::default(), &grid).expect("valid initial data");
    let config = StepperConfig::new(1e-3, 0.1, 1).expect("valid config");
    let smoke = integrate(&SystemState::VvvMhd(start), &params, RhsKind::VvvMhd, &config, &mut [])
        .ok()
        .and_then(|run| energy_budget(&run.trajectory.records, &params).ok())
        .map(|b| max_relative_residual(&b));
    out.push(match smoke {
        Some(r) => CheckOutcome::bound("energy residual, 16^3 run to t = 0.1", r, 1e-6),
        None => CheckOutcome {
            name: "energy residual, 16^3 run to t = 0.1",
            passed: false,
            detail: "run or budget failed".into(),
        },
    });
    out
}
