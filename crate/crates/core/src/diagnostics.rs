//! Energy budget, solenoidality, regularization gaps and the blow-up
//! indicator.

use thiserror::Error;

use crate::dynamics::{MhdState, PhysParams, SystemState, VvvState};
use crate::spectral::{curl, norm, NormOrder, SpectralError, SpectralVectorField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticError {
    #[error("energy budget needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("record at t = {0} lacks the norms needed for the energy budget")]
    MissingNorms(f64),
    #[error("records are too sparse for quadrature: spacing {spacing:e} exceeds span/50 = {limit:e}")]
    SparseSampling { spacing: f64, limit: f64 },
    #[error("states are at different times ({vvv} vs {mhd}, tolerance {tolerance:e})")]
    TimeMismatch { vvv: f64, mhd: f64, tolerance: f64 },
    #[error("gap samples must advance in time ({previous} then {current})")]
    NonMonotoneTime { previous: f64, current: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// One row of diagnostics at a recorded time. Columns that were not computed
/// stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub u_l2: Option<f64>,
    pub u_h1: Option<f64>,
    pub w_l2: Option<f64>,
    pub w_h1: Option<f64>,
    pub b_l2: Option<f64>,
    pub b_h1: Option<f64>,
    pub energy_lhs: Option<f64>,
    pub dissipation_integral: Option<f64>,
    pub energy_residual: Option<f64>,
    pub xi_l2: Option<f64>,
    pub zeta_l2: Option<f64>,
    pub q_l2: Option<f64>,
    pub beta_l2: Option<f64>,
    pub mu_l2: Option<f64>,
    pub alpha_grad_u: Option<f64>,
    pub alpha_grad_u_running_sup: Option<f64>,
}

impl DiagnosticRecord {
    /// Column names in output order.
    pub const COLUMNS: [&'static str; 17] = [
        "t",
        "u_l2",
        "u_h1",
        "w_l2",
        "w_h1",
        "b_l2",
        "b_h1",
        "energy_lhs",
        "dissipation_integral",
        "energy_residual",
        "xi_l2",
        "zeta_l2",
        "q_l2",
        "beta_l2",
        "mu_l2",
        "alpha_grad_u",
        "alpha_grad_u_running_sup",
    ];

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 17] {
        [
            Some(self.t),
            self.u_l2,
            self.u_h1,
            self.w_l2,
            self.w_h1,
            self.b_l2,
            self.b_h1,
            self.energy_lhs,
            self.dissipation_integral,
            self.energy_residual,
            self.xi_l2,
            self.zeta_l2,
            self.q_l2,
            self.beta_l2,
            self.mu_l2,
            self.alpha_grad_u,
            self.alpha_grad_u_running_sup,
        ]
    }

    /// Inverse of [`Self::values`]; `None` for `t` is read as 0.
    pub fn from_values(v: [Option<f64>; 17]) -> Self {
        Self {
            t: v[0].unwrap_or(0.0),
            u_l2: v[1],
            u_h1: v[2],
            w_l2: v[3],
            w_h1: v[4],
            b_l2: v[5],
            b_h1: v[6],
            energy_lhs: v[7],
            dissipation_integral: v[8],
            energy_residual: v[9],
            xi_l2: v[10],
            zeta_l2: v[11],
            q_l2: v[12],
            beta_l2: v[13],
            mu_l2: v[14],
            alpha_grad_u: v[15],
            alpha_grad_u_running_sup: v[16],
        }
    }
}

/// L² and H¹ norms of the evolved fields. For MHD states the `u`/`b`
/// columns hold `U`/`B` and the `w` columns are left empty.
pub fn norms_record(state: &SystemState) -> DiagnosticRecord {
    let mut rec = DiagnosticRecord {
        t: state.t(),
        ..Default::default()
    };
    let u = state.velocity();
    let b = state.magnetic();
    rec.u_l2 = Some(norm(u, NormOrder::L2));
    rec.u_h1 = Some(norm(u, NormOrder::H1));
    rec.b_l2 = Some(norm(b, NormOrder::L2));
    rec.b_h1 = Some(norm(b, NormOrder::H1));
    if let SystemState::VvvMhd(s) = state {
        rec.w_l2 = Some(norm(&s.vorticity, NormOrder::L2));
        rec.w_h1 = Some(norm(&s.vorticity, NormOrder::H1));
    }
    rec
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBudget {
    pub t: f64,
    /// `‖u‖²`
    pub kinetic: f64,
    /// `α²‖∇u‖²`
    pub voigt: f64,
    /// `‖b‖²`
    pub magnetic: f64,
    /// `2∫₀ᵗ (ν‖∇u‖² + η‖∇b‖²) ds`, trapezoid rule on the records.
    pub dissipation_integral: f64,
    pub lhs_total: f64,
    pub initial_total: f64,
    /// `lhs_total + dissipation_integral - initial_total`
    pub residual: f64,
}

/// Energy balance `‖u‖² + α²‖∇u‖² + ‖b‖² + 2∫(ν‖∇u‖² + η‖∇b‖²) = const`
/// evaluated on recorded norms of a VVV-MHD trajectory.
pub fn energy_budget(records: &[DiagnosticRecord], params: &PhysParams) -> Result<Vec<EnergyBudget>, DiagnosticError> {
    if records.len() < 2 {
        return Err(DiagnosticError::TooFewRecords(records.len()));
    }
    let span = records[records.len() - 1].t - records[0].t;
    let limit = span / 50.0;
    let spacing = records.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    if spacing > limit * (1.0 + 1e-9) {
        return Err(DiagnosticError::SparseSampling { spacing, limit });
    }
    let a2 = params.alpha * params.alpha;
    let mut out: Vec<EnergyBudget> = Vec::with_capacity(records.len());
    let mut previous_rate = 0.0;
    for rec in records {
        let (u, du, b, db) = match (rec.u_l2, rec.u_h1, rec.b_l2, rec.b_h1) {
            (Some(u), Some(du), Some(b), Some(db)) => (u, du, b, db),
            _ => return Err(DiagnosticError::MissingNorms(rec.t)),
        };
        let kinetic = u * u;
        let voigt = a2 * du * du;
        let magnetic = b * b;
        let lhs_total = kinetic + voigt + magnetic;
        let rate = 2.0 * (params.nu * du * du + params.eta * db * db);
        let (dissipation_integral, initial_total) = match out.last() {
            None => (0.0, lhs_total),
            Some(prev) => (
                prev.dissipation_integral + 0.5 * (rec.t - prev.t) * (rate + previous_rate),
                prev.initial_total,
            ),
        };
        previous_rate = rate;
        out.push(EnergyBudget {
            t: rec.t,
            kinetic,
            voigt,
            magnetic,
            dissipation_integral,
            lhs_total,
            initial_total,
            residual: lhs_total + dissipation_integral - initial_total,
        });
    }
    Ok(out)
}

/// Fills the energy columns of `records` from [`energy_budget`].
pub fn apply_energy_budget(records: &mut [DiagnosticRecord], params: &PhysParams) -> Result<(), DiagnosticError> {
    let budget = energy_budget(records, params)?;
    for (rec, e) in records.iter_mut().zip(budget) {
        rec.energy_lhs = Some(e.lhs_total);
        rec.dissipation_integral = Some(e.dissipation_integral);
        rec.energy_residual = Some(e.residual);
    }
    Ok(())
}

/// Largest `|residual| / initial_total` over a budget.
pub fn max_relative_residual(budget: &[EnergyBudget]) -> f64 {
    budget
        .iter()
        .map(|e| (e.residual / e.initial_total).abs())
        .fold(0.0, f64::max)
}

/// Largest relative divergence over the evolved fields of a state.
pub fn solenoidality(state: &SystemState) -> f64 {
    state
        .fields()
        .iter()
        .map(|f| f.relative_divergence())
        .fold(0.0, f64::max)
}

/// `(‖ω - w‖, α‖∇(ω - w)‖)` with `ω = ∇×u`.
pub fn vorticity_gap(state: &VvvState, alpha: f64) -> (f64, f64) {
    let xi = &curl(&state.velocity) - &state.vorticity;
    (norm(&xi, NormOrder::L2), alpha * norm(&xi, NormOrder::H1))
}

/// Distance between a VVV-MHD state and an MHD state at one time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GapRecord {
    pub t: f64,
    /// `‖ω - w‖`
    pub xi_l2: f64,
    /// `α‖∇(ω - w)‖`
    pub xi_h1: f64,
    /// `‖u - U‖`
    pub zeta_l2: f64,
    /// `α‖∇(u - U)‖`
    pub zeta_h1_weighted: f64,
    /// `‖w - Ω‖`
    pub q_l2: f64,
    /// `‖b - B‖`
    pub beta_l2: f64,
    /// `‖j - J‖`
    pub mu_l2: f64,
    /// `ν∫‖∇(u - U)‖²`
    pub nu_grad_zeta_integral: f64,
    /// `ν∫‖∇(w - Ω)‖²`
    pub nu_grad_q_integral: f64,
    /// `η∫‖∇(b - B)‖²`
    pub eta_grad_beta_integral: f64,
    /// `η∫‖∇(j - J)‖²`
    pub eta_grad_mu_integral: f64,
}

impl GapRecord {
    /// Left-hand side of the convergence estimate: the five squared norms
    /// plus the four dissipation integrals.
    pub fn aggregate(&self) -> f64 {
        self.zeta_l2.powi(2)
            + self.zeta_h1_weighted.powi(2)
            + self.q_l2.powi(2)
            + self.beta_l2.powi(2)
            + self.mu_l2.powi(2)
            + self.nu_grad_zeta_integral
            + self.nu_grad_q_integral
            + self.eta_grad_beta_integral
            + self.eta_grad_mu_integral
    }
}

/// Trapezoid state for the dissipation-gap integrals.
#[derive(Clone, Debug)]
pub struct GapAccumulator {
    nu: f64,
    eta: f64,
    tolerance: f64,
    last: Option<(f64, [f64; 4])>,
    integrals: [f64; 4],
}

impl GapAccumulator {
    /// `dt` sets the tolerated time mismatch (`dt/2`) between paired states.
    pub fn new(params: &PhysParams, dt: f64) -> Self {
        Self {
            nu: params.nu,
            eta: params.eta,
            tolerance: 0.5 * dt,
            last: None,
            integrals: [0.0; 4],
        }
    }

    fn push(&mut self, t: f64, rates: [f64; 4]) -> Result<[f64; 4], DiagnosticError> {
        if let Some((t_prev, prev)) = self.last {
            if t <= t_prev {
                return Err(DiagnosticError::NonMonotoneTime {
                    previous: t_prev,
                    current: t,
                });
            }
            for k in 0..4 {
                self.integrals[k] += 0.5 * (t - t_prev) * (rates[k] + prev[k]);
            }
        }
        self.last = Some((t, rates));
        Ok(self.integrals)
    }
}

/// All gap norms between `vvv` and `mhd`, advancing the integrals in `acc`.
pub fn mhd_gap(
    vvv: &VvvState,
    mhd: &MhdState,
    alpha: f64,
    acc: &mut GapAccumulator,
) -> Result<GapRecord, DiagnosticError> {
    if (vvv.t - mhd.t).abs() > acc.tolerance {
        return Err(DiagnosticError::TimeMismatch {
            vvv: vvv.t,
            mhd: mhd.t,
            tolerance: acc.tolerance,
        });
    }
    vvv.velocity.check_same_grid(&mhd.velocity)?;
    let omega = curl(&vvv.velocity);
    let big_omega = curl(&mhd.velocity);
    let j = curl(&vvv.magnetic);
    let big_j = curl(&mhd.magnetic);

    let xi = &omega - &vvv.vorticity;
    let zeta = &vvv.velocity - &mhd.velocity;
    let q = &vvv.vorticity - &big_omega;
    let beta = &vvv.magnetic - &mhd.magnetic;
    let mu = &j - &big_j;

    let h1_sq = |f: &SpectralVectorField| norm(f, NormOrder::H1).powi(2);
    let rates = [
        acc.nu * h1_sq(&zeta),
        acc.nu * h1_sq(&q),
        acc.eta * h1_sq(&beta),
        acc.eta * h1_sq(&mu),
    ];
    let integrals = acc.push(vvv.t, rates)?;
    Ok(GapRecord {
        t: vvv.t,
        xi_l2: norm(&xi, NormOrder::L2),
        xi_h1: alpha * norm(&xi, NormOrder::H1),
        zeta_l2: norm(&zeta, NormOrder::L2),
        zeta_h1_weighted: alpha * norm(&zeta, NormOrder::H1),
        q_l2: norm(&q, NormOrder::L2),
        beta_l2: norm(&beta, NormOrder::L2),
        mu_l2: norm(&mu, NormOrder::L2),
        nu_grad_zeta_integral: integrals[0],
        nu_grad_q_integral: integrals[1],
        eta_grad_beta_integral: integrals[2],
        eta_grad_mu_integral: integrals[3],
    })
}

impl GapRecord {
    /// Copies the gap columns into a diagnostic row.
    pub fn write_into(&self, rec: &mut DiagnosticRecord) {
        rec.xi_l2 = Some(self.xi_l2);
        rec.zeta_l2 = Some(self.zeta_l2);
        rec.q_l2 = Some(self.q_l2);
        rec.beta_l2 = Some(self.beta_l2);
        rec.mu_l2 = Some(self.mu_l2);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupRecord {
    pub t: f64,
    /// `α‖∇u(t)‖`
    pub indicator: f64,
    pub running_sup: f64,
}

pub fn blowup_indicator(state: &VvvState, alpha: f64, prior_sup: f64) -> BlowupRecord {
    let indicator = alpha * norm(&state.velocity, NormOrder::H1);
    BlowupRecord {
        t: state.t,
        indicator,
        running_sup: prior_sup.max(indicator),
    }
}

/// Both orderings of `sup_t` and `limsup_α` of `α‖∇u(t)‖`, approximated on a
/// finite α grid. The limsup is replaced by the maximum over the `tail`
/// smallest α values, so neither number certifies a limit; they only show
/// the trend.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowupSummary {
    /// `(α, sup_t α‖∇u(t)‖)` in the order given.
    pub sup_per_alpha: Vec<(f64, f64)>,
    /// `sup_t max_{α in tail} α‖∇u(t)‖`
    pub sup_of_limsup: f64,
    /// `max_{α in tail} sup_t α‖∇u(t)‖`
    pub limsup_of_sup: f64,
    /// Whether `sup_t α‖∇u‖` decreases along the α grid as α decreases.
    pub decreasing_with_alpha: bool,
}

/// Summarizes indicator series sampled at common times, one per α. `series`
/// must be ordered by decreasing α.
pub fn blowup_summary(series: &[(f64, Vec<BlowupRecord>)], tail: usize) -> BlowupSummary {
    let sup_per_alpha: Vec<(f64, f64)> = series
        .iter()
        .map(|(a, recs)| (*a, recs.iter().map(|r| r.indicator).fold(0.0, f64::max)))
        .collect();
    let tail = tail.clamp(1, series.len().max(1));
    let tail_series = &series[series.len().saturating_sub(tail)..];
    let samples = tail_series.iter().map(|(_, r)| r.len()).min().unwrap_or(0);
    let sup_of_limsup = (0..samples)
        .map(|i| tail_series.iter().map(|(_, r)| r[i].indicator).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let limsup_of_sup = sup_per_alpha[sup_per_alpha.len().saturating_sub(tail)..]
        .iter()
        .map(|&(_, s)| s)
        .fold(0.0, f64::max);
    let decreasing_with_alpha = sup_per_alpha.windows(2).all(|w| w[1].1 <= w[0].1);
    BlowupSummary {
        sup_per_alpha,
        sup_of_limsup,
        limsup_of_sup,
        decreasing_with_alpha,
    }
}
