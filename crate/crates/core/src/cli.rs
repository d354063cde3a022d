//! Command-line dispatch.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical abort,
//! 3 failed `check`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checks::run_checks;
use crate::diagnostics::{apply_energy_budget, blowup_indicator, vorticity_gap, DiagnosticRecord};
use crate::dynamics::{RhsKind, SystemState};
use crate::experiments::{alpha_sweep, initial_data, SweepReport};
use crate::io::{self, config::CONFIG_HELP, Config, RunConfig, SweepConfig, SystemKind};
use crate::spectral::Grid;
use crate::timestepper::{integrate, StepperConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "vvv-mhd", version, about = "Pseudo-spectral VVV-MHD and MHD solver on the periodic unit cube")]
#[command(after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write its diagnostics CSV.
    Run { config: PathBuf },
    /// Run an α-sweep against the MHD reference and report convergence rates.
    Sweep { config: PathBuf },
    /// Run the built-in invariant suite.
    Check,
    /// Print the header of a checkpoint file.
    Info { checkpoint: PathBuf },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run { config } => match load(&config) {
            Ok(Config::Run(c)) => run(&c),
            Ok(Config::Sweep(_)) => fail_config(&config, "expected a run configuration, found `alphas`"),
            Err(code) => code,
        },
        Command::Sweep { config } => match load(&config) {
            Ok(Config::Sweep(c)) => sweep(&c),
            Ok(Config::Run(_)) => fail_config(&config, "expected a sweep configuration (missing `alphas`)"),
            Err(code) => code,
        },
        Command::Check => check(),
        Command::Info { checkpoint } => info(&checkpoint),
    }
}

fn fail_config(path: &Path, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {}: {message}", path.display());
    EXIT_CONFIG
}

fn load(path: &Path) -> Result<Config, i32> {
    let text = fs::read_to_string(path).map_err(|e| fail_config(path, e))?;
    io::parse_config(&text).map_err(|e| fail_config(path, e))
}

fn run(c: &RunConfig) -> i32 {
    let grid = match Grid::new(c.n) {
        Ok(g) => g,
        Err(e) => return fail_config(Path::new("config"), e),
    };
    let initial = match &c.restart {
        Some(path) => match io::read_checkpoint(path) {
            Ok((state, _)) => {
                let expected = match c.system {
                    SystemKind::Mhd => matches!(state, SystemState::Mhd(_)),
                    SystemKind::VvvMhd => matches!(state, SystemState::VvvMhd(_)),
                };
                if !expected || state.grid().n() != c.n {
                    return fail_config(path, "checkpoint system or resolution does not match the configuration");
                }
                state
            }
            Err(e) => return fail_config(path, e),
        },
        None => match initial_data(&c.initial, &grid) {
            Ok((vvv, mhd)) => match c.system {
                SystemKind::Mhd => SystemState::Mhd(mhd),
                SystemKind::VvvMhd => SystemState::VvvMhd(vvv),
            },
            Err(e) => return fail_config(Path::new("config"), e),
        },
    };
    let kind = match c.system {
        SystemKind::Mhd => RhsKind::Mhd(c.mhd_form),
        SystemKind::VvvMhd => RhsKind::VvvMhd,
    };
    let duration = c.t_end - initial.t();
    if duration < 0.0 {
        return fail_config(Path::new("config"), format!("t_end precedes the restart time {}", initial.t()));
    }
    let stepper = match StepperConfig::new(c.dt, duration, c.record_every) {
        Ok(s) => s,
        Err(e) => return fail_config(Path::new("config"), e),
    };

    let alpha = c.params.alpha;
    let mut running_sup = 0.0;
    let mut observer = |state: &SystemState, rec: &mut DiagnosticRecord| {
        if let SystemState::VvvMhd(s) = state {
            rec.xi_l2 = Some(vorticity_gap(s, alpha).0);
            let b = blowup_indicator(s, alpha, running_sup);
            running_sup = b.running_sup;
            rec.alpha_grad_u = Some(b.indicator);
            rec.alpha_grad_u_running_sup = Some(b.running_sup);
        }
    };
    let (mut records, final_state, code) = match integrate(&initial, &c.params, kind, &stepper, &mut [&mut observer]) {
        Ok(done) => (done.trajectory.records, Some(done.final_state), EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            (e.partial.records, None, EXIT_NUMERICAL)
        }
    };
    if let Err(e) = apply_energy_budget(&mut records, &c.params) {
        eprintln!("note: energy columns left empty: {e}");
    }
    if let Err(e) = io::write_diagnostics(&records, &c.output) {
        eprintln!("error: {e}");
        return if code == EXIT_OK { EXIT_CONFIG } else { code };
    }
    if let (Some(state), Some(path)) = (&final_state, &c.checkpoint) {
        if let Err(e) = io::write_checkpoint(state, &c.params, path) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    }
    if code == EXIT_OK {
        println!("wrote {} records to {}", records.len(), c.output.display());
    }
    code
}

fn member_file(alpha: f64) -> String {
    format!("alpha_{alpha}.csv")
}

fn sweep(c: &SweepConfig) -> i32 {
    if let Err(e) = fs::create_dir_all(&c.output_dir) {
        return fail_config(&c.output_dir, e);
    }
    let report = match alpha_sweep(&c.plan) {
        Ok(r) => r,
        Err(e) => return fail_config(Path::new("config"), e),
    };
    let write = |records: &[DiagnosticRecord], name: &str| -> bool {
        if records.is_empty() {
            return true;
        }
        match io::write_diagnostics(records, &c.output_dir.join(name)) {
            Ok(()) => true,
            Err(e) => {
                eprintln!("error: {e}");
                false
            }
        }
    };
    let mut ok = write(&report.reference, "reference.csv");
    for m in &report.members {
        ok &= write(&m.records, &member_file(m.alpha));
    }
    let text = format_report(&report);
    print!("{text}");
    if let Err(e) = fs::write(c.output_dir.join("rates.txt"), &text) {
        eprintln!("error: {e}");
        ok = false;
    }
    if report.failed() {
        EXIT_NUMERICAL
    } else if !ok {
        EXIT_CONFIG
    } else {
        EXIT_OK
    }
}

/// Plain-text summary of a sweep: final gaps, rate fits, blow-up orderings.
pub fn format_report(r: &SweepReport) -> String {
    let mut s = String::new();
    let p = &r.plan;
    s += &format!(
        "sweep: n = {}, nu = {}, eta = {}, dt = {}, T = {}\n",
        p.n, p.nu, p.eta, p.dt, p.t_end
    );
    if let Some(e) = &r.reference_failure {
        s += &format!("reference MHD run aborted: {e}\n");
    }
    s += "alpha,zeta_l2,q_l2,beta_l2,mu_l2,xi_l2,aggregate,alpha_grad_u_sup\n";
    for m in &r.members {
        match (m.final_gap(), &m.failure) {
            (Some(g), _) => {
                s += &format!(
                    "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                    m.alpha,
                    g.zeta_l2,
                    g.q_l2,
                    g.beta_l2,
                    g.mu_l2,
                    g.xi_l2,
                    g.aggregate(),
                    m.blowup_sup()
                )
            }
            (None, Some(e)) => s += &format!("{},aborted: {e}\n", m.alpha),
            (None, None) => s += &format!("{},no samples\n", m.alpha),
        }
    }
    s += "rates (log-log slope vs alpha):\n";
    for f in &r.fits {
        match &f.fit {
            Ok(fit) => {
                s += &format!("  {:<17} slope {:.4}  r^2 {:.5}", f.quantity, fit.slope, fit.r_squared);
                if !fit.excluded.is_empty() {
                    s += &format!("  ({} below noise floor, excluded)", fit.excluded.len());
                }
                s += "\n";
            }
            Err(e) => s += &format!("  {:<17} no fit: {e}\n", f.quantity),
        }
    }
    s += &format!(
        "blow-up indicator on the finite alpha grid (not a limit): sup_t of tail max {:e}, tail max of sup_t {:e}, decreasing with alpha: {}\n",
        r.blowup.sup_of_limsup, r.blowup.limsup_of_sup, r.blowup.decreasing_with_alpha
    );
    s += &format!(
        "spectral tail fraction of the reference at T: {:e} ({})\n",
        r.tail_fraction,
        if r.resolved() { "resolved" } else { "UNDER-RESOLVED" }
    );
    for v in &r.monotonicity_violations {
        s += &format!("monotonicity: {v}\n");
    }
    s
}

fn check() -> i32 {
    let outcomes = run_checks();
    let mut all = true;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        all &= o.passed;
    }
    if all {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}

fn info(path: &Path) -> i32 {
    match io::read_header(path) {
        Ok(h) => {
            println!("system: {}", h.system_name());
            println!("n: {}", h.n);
            println!("nu: {}", h.params.nu);
            println!("eta: {}", h.params.eta);
            println!("alpha: {}", h.params.alpha);
            println!("t: {}", h.t);
            println!("fields: {}", h.field_count());
            EXIT_OK
        }
        Err(e) => fail_config(path, e),
    }
}
