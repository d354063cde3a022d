//! Initial data, α-sweeps against the MHD reference, and log-log rate fits.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{
    self, blowup_indicator, blowup_summary, mhd_gap, BlowupRecord, BlowupSummary, DiagnosticRecord,
    GapAccumulator, GapRecord,
};
use crate::dynamics::{DynamicsError, MhdForm, MhdState, PhysParams, RhsKind, SystemState, VvvState};
use crate::spectral::{curl, leray_project, norm, Grid, NormOrder, SpectralError, SpectralVectorField};
use crate::timestepper::{step_count, Integrator, StepError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment setting `{name}`: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("rate fit needs at least 3 usable points, got {usable} ({excluded} excluded)")]
    TooFewPoints { usable: usize, excluded: usize },
    #[error("rate fit needs at least two distinct α values")]
    DegenerateAbscissa,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Diagnostic(#[from] diagnostics::DiagnosticError),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Invalid {
        name,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitialKind {
    #[default]
    TaylorGreen,
    Abc,
    RandomBand,
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialKind::TaylorGreen => "taylor_green",
            InitialKind::Abc => "abc",
            InitialKind::RandomBand => "random_band",
        })
    }
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "taylor_green" => Ok(InitialKind::TaylorGreen),
            "abc" => Ok(InitialKind::Abc),
            "random_band" => Ok(InitialKind::RandomBand),
            other => Err(format!("unknown initial kind `{other}` (taylor_green, abc, random_band)")),
        }
    }
}

/// How to build `(u₀, w₀, b₀)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Velocity amplitude; `‖u₀‖ = A/2` for Taylor-Green, `A` otherwise.
    pub amplitude: f64,
    /// `‖b₀‖` of the seeded band-limited magnetic field; 0 disables it.
    pub magnetic_amplitude: f64,
    pub seed: u64,
    /// Largest mode index `max|mᵢ|` for seeded fields; `None` means `n/8`.
    pub band: Option<usize>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            kind: InitialKind::TaylorGreen,
            amplitude: 1.0,
            magnetic_amplitude: 0.2,
            seed: 0,
            band: None,
        }
    }
}

impl InitialSpec {
    pub fn validate(&self, n: usize) -> Result<(), ExperimentError> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(invalid("amplitude", format!("must be positive, got {}", self.amplitude)));
        }
        if !(self.magnetic_amplitude.is_finite() && self.magnetic_amplitude >= 0.0) {
            return Err(invalid(
                "magnetic_amplitude",
                format!("must be non-negative, got {}", self.magnetic_amplitude),
            ));
        }
        let band = self.band_for(n);
        if band == 0 || band > n / 4 {
            return Err(invalid("band", format!("must lie in 1..={} for n = {n}, got {band}", n / 4)));
        }
        Ok(())
    }

    fn band_for(&self, n: usize) -> usize {
        self.band.unwrap_or((n / 8).max(1))
    }
}

/// Matched initial states: `w₀ = ∇×u₀`, `U₀ = u₀`, `B₀ = b₀`.
pub fn initial_data(spec: &InitialSpec, grid: &Arc<Grid>) -> Result<(VvvState, MhdState), ExperimentError> {
    if grid.n() < 8 {
        return Err(invalid("n", format!("initial data needs n ≥ 8, got {}", grid.n())));
    }
    spec.validate(grid.n())?;
    let a = spec.amplitude;
    let band = spec.band_for(grid.n());
    let velocity = match spec.kind {
        InitialKind::TaylorGreen => SpectralVectorField::from_fn(grid, |x, y, z| {
            let (x, y, z) = (2.0 * PI * x, 2.0 * PI * y, 2.0 * PI * z);
            [
                a * x.sin() * y.cos() * z.cos(),
                -a * x.cos() * y.sin() * z.cos(),
                0.0,
            ]
        }),
        InitialKind::Abc => {
            let s = a / 3f64.sqrt();
            SpectralVectorField::from_fn(grid, |x, y, z| {
                let (x, y, z) = (2.0 * PI * x, 2.0 * PI * y, 2.0 * PI * z);
                [s * (z.sin() + y.cos()), s * (x.sin() + z.cos()), s * (y.sin() + x.cos())]
            })
        }
        InitialKind::RandomBand => random_band(grid, band, a, spec.seed, 0),
    };
    let magnetic = if spec.magnetic_amplitude > 0.0 {
        random_band(grid, band, spec.magnetic_amplitude, spec.seed, 1)
    } else {
        SpectralVectorField::zeros(grid)
    };
    let vorticity = curl(&velocity);
    Ok((
        VvvState {
            velocity: velocity.clone(),
            vorticity,
            magnetic: magnetic.clone(),
            t: 0.0,
        },
        MhdState {
            velocity,
            magnetic,
            t: 0.0,
        },
    ))
}

/// Seeded solenoidal field supported on `1 ≤ max|mᵢ| ≤ band`, with spectral
/// amplitudes falling off like `|m|⁻²` and `L²` norm `amplitude`.
pub fn random_band(grid: &Arc<Grid>, band: usize, amplitude: f64, seed: u64, stream: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let n = grid.n();
    let mut comps = [0, 1, 2].map(|_| vec![Complex64::default(); grid.points()]);
    // Draw in lattice order so the sample sequence depends only on (seed, n).
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let m = [grid.mode(i), grid.mode(j), grid.mode(l)];
                let inside = m.iter().all(|v| v.unsigned_abs() as usize <= band);
                let draws: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                if !inside || m == [0, 0, 0] {
                    continue;
                }
                let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
                let weight = 1.0 / m2;
                let idx = (i * n + j) * n + l;
                for c in 0..3 {
                    comps[c][idx] = Complex64::new(draws[2 * c], draws[2 * c + 1]) * weight;
                }
            }
        }
    }
    let raw = SpectralVectorField::from_coefficients(grid, comps).expect("grid-sized components");
    let field = leray_project(&raw);
    let current = norm(&field, NormOrder::L2);
    if current == 0.0 {
        return field;
    }
    field.scaled(amplitude / current)
}

/// Fraction of `‖v‖²` carried by modes in the top third of the retained band,
/// i.e. with `max|mᵢ| > (2/3)·max_retained_mode`.
pub fn spectral_tail_fraction(v: &SpectralVectorField) -> f64 {
    let grid = v.grid();
    let n = grid.n();
    let cutoff = 2.0 * grid.max_retained_mode() as f64 / 3.0;
    let (mut tail, mut total) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let idx = (i * n + j) * n + l;
                let e: f64 = (0..3).map(|c| v.component(c)[idx].norm_sqr()).sum();
                total += e;
                let top = [i, j, l].iter().map(|&x| grid.mode(x).unsigned_abs()).max().unwrap_or(0);
                if top as f64 > cutoff {
                    tail += e;
                }
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Tail fractions above this flag the reference run as under-resolved.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    /// Strictly decreasing; only the last entry may be 0.
    pub alphas: Vec<f64>,
    pub n: usize,
    pub nu: f64,
    pub eta: f64,
    /// Comparison horizon.
    pub t_end: f64,
    /// Fixed step shared by every member and the reference.
    pub dt: f64,
    pub record_every: usize,
    pub initial: InitialSpec,
    pub mhd_form: MhdForm,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "at least one α is required"));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(invalid("alphas", format!("entries must be non-negative, got {a}")));
            }
            if a == 0.0 && i + 1 != self.alphas.len() {
                return Err(invalid("alphas", "α = 0 may only appear last"));
            }
        }
        if self.alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("alphas", "must be strictly decreasing"));
        }
        PhysParams::new(self.nu, self.eta, 0.0)?;
        Grid::new(self.n)?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        self.initial.validate(self.n)
    }
}

/// One VVV-MHD run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepMember {
    pub alpha: f64,
    /// Norms, gap columns and blow-up indicator at every recorded time.
    pub records: Vec<DiagnosticRecord>,
    pub gaps: Vec<GapRecord>,
    pub blowup: Vec<BlowupRecord>,
    /// Set when the run aborted; records stop at the last finite state.
    pub failure: Option<StepError>,
}

impl SweepMember {
    pub fn final_gap(&self) -> Option<&GapRecord> {
        if self.failure.is_some() {
            None
        } else {
            self.gaps.last()
        }
    }

    pub fn blowup_sup(&self) -> f64 {
        self.blowup.last().map_or(0.0, |b| b.running_sup)
    }
}

/// A rate fit of one gap quantity against α.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedFit {
    pub quantity: &'static str,
    pub fit: Result<RateFit, ExperimentError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub plan: SweepPlan,
    /// MHD reference norms at the recorded times.
    pub reference: Vec<DiagnosticRecord>,
    pub members: Vec<SweepMember>,
    pub fits: Vec<NamedFit>,
    pub blowup: BlowupSummary,
    /// Spectral-tail fraction of the reference `(U, B)` at the final time.
    pub tail_fraction: f64,
    /// Places where a gap grew as α decreased (reported, not fatal).
    pub monotonicity_violations: Vec<String>,
    pub reference_failure: Option<StepError>,
}

impl SweepReport {
    pub fn failed(&self) -> bool {
        self.reference_failure.is_some() || self.members.iter().any(|m| m.failure.is_some())
    }

    pub fn fit(&self, quantity: &str) -> Option<&Result<RateFit, ExperimentError>> {
        self.fits.iter().find(|f| f.quantity == quantity).map(|f| &f.fit)
    }

    pub fn resolved(&self) -> bool {
        self.tail_fraction < SPECTRAL_TAIL_LIMIT
    }
}

/// Gap quantities fitted against α, with the accessor used on the final gap.
pub const FITTED_QUANTITIES: [(&str, fn(&GapRecord) -> f64); 6] = [
    ("zeta_l2", |g| g.zeta_l2),
    ("q_l2", |g| g.q_l2),
    ("beta_l2", |g| g.beta_l2),
    ("mu_l2", |g| g.mu_l2),
    ("xi_l2", |g| g.xi_l2),
    ("aggregate", |g| g.aggregate()),
];

struct Runner {
    state: SystemState,
    regular: Integrator,
    last: Option<Integrator>,
}

impl Runner {
    fn advance(&mut self, h_is_last: bool) -> Result<(), StepError> {
        let integrator = match (&self.last, h_is_last) {
            (Some(last), true) => last,
            _ => &self.regular,
        };
        self.state = integrator.step(&self.state)?;
        Ok(())
    }
}

/// Runs the MHD reference and one VVV-MHD run per α in lockstep from matched
/// initial data, evaluating gaps at identical discrete times.
pub fn alpha_sweep(plan: &SweepPlan) -> Result<SweepReport, ExperimentError> {
    plan.validate()?;
    let grid = Grid::new(plan.n)?;
    let (vvv0, mhd0) = initial_data(&plan.initial, &grid)?;
    let base = PhysParams::new(plan.nu, plan.eta, 0.0)?;
    let steps = step_count(plan.t_end, plan.dt);
    let last_dt = plan.t_end - (steps - 1) as f64 * plan.dt;
    let needs_last = (last_dt - plan.dt).abs() > 1e-12 * plan.dt;

    let make_runner = |state: SystemState, kind: RhsKind, params: PhysParams| -> Result<Runner, StepError> {
        Ok(Runner {
            state,
            regular: Integrator::new(&grid, kind, params, plan.dt)?,
            last: if needs_last {
                Some(Integrator::new(&grid, kind, params, last_dt)?)
            } else {
                None
            },
        })
    };
    let mut reference = make_runner(SystemState::Mhd(mhd0), RhsKind::Mhd(plan.mhd_form), base)?;
    let mut runners = plan
        .alphas
        .iter()
        .map(|&a| make_runner(SystemState::VvvMhd(vvv0.clone()), RhsKind::VvvMhd, base.with_alpha(a)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut members: Vec<SweepMember> = plan
        .alphas
        .iter()
        .map(|&alpha| SweepMember {
            alpha,
            records: Vec::new(),
            gaps: Vec::new(),
            blowup: Vec::new(),
            failure: None,
        })
        .collect();
    let mut accumulators: Vec<GapAccumulator> = plan
        .alphas
        .iter()
        .map(|&a| GapAccumulator::new(&base.with_alpha(a), plan.dt))
        .collect();
    let mut reference_records = Vec::new();
    let mut reference_failure = None;

    let sample = |reference: &Runner,
                      runners: &[Runner],
                      members: &mut [SweepMember],
                      accumulators: &mut [GapAccumulator],
                      reference_records: &mut Vec<DiagnosticRecord>|
     -> Result<(), ExperimentError> {
        reference_records.push(diagnostics::norms_record(&reference.state));
        let SystemState::Mhd(mhd) = &reference.state else {
            unreachable!("reference runs MHD")
        };
        for ((runner, member), acc) in runners.iter().zip(members.iter_mut()).zip(accumulators.iter_mut()) {
            if member.failure.is_some() {
                continue;
            }
            let SystemState::VvvMhd(vvv) = &runner.state else {
                unreachable!("members run VVV-MHD")
            };
            let gap = mhd_gap(vvv, mhd, member.alpha, acc)?;
            let prior = member.blowup.last().map_or(0.0, |b| b.running_sup);
            let blow = blowup_indicator(vvv, member.alpha, prior);
            let mut rec = diagnostics::norms_record(&runner.state);
            gap.write_into(&mut rec);
            rec.alpha_grad_u = Some(blow.indicator);
            rec.alpha_grad_u_running_sup = Some(blow.running_sup);
            member.records.push(rec);
            member.gaps.push(gap);
            member.blowup.push(blow);
        }
        Ok(())
    };

    sample(&reference, &runners, &mut members, &mut accumulators, &mut reference_records)?;
    for s in 1..=steps {
        let is_last = s == steps;
        let reference_step = reference.advance(is_last);
        runners
            .par_iter_mut()
            .zip(members.par_iter_mut())
            .for_each(|(runner, member)| {
                if member.failure.is_none() {
                    if let Err(e) = runner.advance(is_last) {
                        member.failure = Some(e);
                    }
                }
            });
        // Members share the step so an abort in the same step is attributed to them too.
        if let Err(e) = reference_step {
            reference_failure = Some(e);
            break;
        }
        // Pin times to the common grid so every pair matches exactly.
        let t = if is_last { plan.t_end } else { s as f64 * plan.dt };
        reference.state = reference.state.clone().with_time(t);
        for r in runners.iter_mut() {
            r.state = r.state.clone().with_time(t);
        }
        if s % plan.record_every == 0 || is_last {
            sample(&reference, &runners, &mut members, &mut accumulators, &mut reference_records)?;
        }
    }

    for member in members.iter_mut() {
        if member.failure.is_none() {
            let _ = diagnostics::apply_energy_budget(&mut member.records, &base.with_alpha(member.alpha));
        }
    }

    let completed: Vec<&SweepMember> = if reference_failure.is_some() {
        Vec::new()
    } else {
        members.iter().filter(|m| m.failure.is_none()).collect()
    };
    let fits = FITTED_QUANTITIES
        .iter()
        .map(|&(quantity, get)| NamedFit {
            quantity,
            fit: rate_fit(
                &completed
                    .iter()
                    .filter_map(|m| m.final_gap().map(|g| (m.alpha, get(g))))
                    .collect::<Vec<_>>(),
            ),
        })
        .chain(std::iter::once(NamedFit {
            quantity: "alpha_grad_u_sup",
            fit: rate_fit(&completed.iter().map(|m| (m.alpha, m.blowup_sup())).collect::<Vec<_>>()),
        }))
        .collect();

    let series: Vec<(f64, Vec<BlowupRecord>)> = members
        .iter()
        .filter(|m| m.alpha > 0.0)
        .map(|m| (m.alpha, m.blowup.clone()))
        .collect();
    let blowup = blowup_summary(&series, 2);

    let mut monotonicity_violations = Vec::new();
    for pair in completed.windows(2) {
        let (big, small) = (pair[0], pair[1]);
        if let (Some(g0), Some(g1)) = (big.final_gap(), small.final_gap()) {
            for &(quantity, get) in FITTED_QUANTITIES.iter() {
                if get(g1) > get(g0) {
                    monotonicity_violations.push(format!(
                        "{quantity}: {:e} at α = {} exceeds {:e} at α = {}",
                        get(g1),
                        small.alpha,
                        get(g0),
                        big.alpha
                    ));
                }
            }
        }
    }

    let tail_fraction = spectral_tail_fraction(reference.state.velocity())
        .max(spectral_tail_fraction(reference.state.magnetic()));

    Ok(SweepReport {
        plan: plan.clone(),
        reference: reference_records,
        members,
        fits,
        blowup,
        tail_fraction,
        monotonicity_violations,
        reference_failure,
    })
}

/// Least-squares line through `(ln α, ln value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    /// Points used in the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped because α or the value was not positive (below the
    /// noise floor).
    pub excluded: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit, ExperimentError> {
    let (usable, excluded): (Vec<(f64, f64)>, Vec<(f64, f64)>) = points
        .iter()
        .partition(|(a, v)| *a > 0.0 && *v > 0.0 && a.is_finite() && v.is_finite());
    if usable.len() < 3 {
        return Err(ExperimentError::TooFewPoints {
            usable: usable.len(),
            excluded: excluded.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(ExperimentError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        points: usable,
        excluded,
        slope,
        intercept,
        r_squared,
    })
}
