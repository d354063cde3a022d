//! Flat `key = value` run and sweep configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. A file
//! containing `alphas` is a sweep configuration; anything else is a single
//! run. Unknown keys are errors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dynamics::{MhdForm, PhysParams};
use crate::experiments::{InitialKind, InitialSpec, SweepPlan};
use crate::spectral::Grid;

/// Key reference shown by `--help`.
pub const CONFIG_HELP: &str = "\
Configuration files hold one `key = value` per line; `#` starts a comment.

Run keys (required: system, n, nu, eta, dt, t_end; alpha required for vvv_mhd):
  system             mhd | vvv_mhd
  n                  grid points per direction (even, >= 8)
  nu, eta            viscosity and resistivity (> 0)
  alpha              Voigt length (>= 0; must be 0 or absent for mhd)
  dt, t_end          step and horizon (> 0, >= 0)
  record_every       steps between diagnostic rows          [1]
  initial_kind       taylor_green | abc | random_band       [taylor_green]
  amplitude          velocity amplitude (> 0)               [1]
  magnetic_amplitude L2 norm of the seeded magnetic field   [0.2]
  seed               RNG seed for seeded fields             [0]
  band               max mode index of seeded fields        [n/8]
  mhd_form           convective | rotational                [convective]
  output             diagnostics CSV path                   [diagnostics.csv]
  checkpoint         write the final state here             [none]
  restart            start from this checkpoint             [none]

Sweep keys: as above without system/alpha/output/checkpoint/restart, plus
  alphas             strictly decreasing list, e.g. 0.1,0.05,0.025
  output_dir         directory for per-member CSVs and rates.txt [sweep_out]
";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default(), key.as_ref().map(|k| format!("`{k}`: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Mhd,
    VvvMhd,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Mhd => "mhd",
            SystemKind::VvvMhd => "vvv_mhd",
        })
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mhd" => Ok(SystemKind::Mhd),
            "vvv_mhd" => Ok(SystemKind::VvvMhd),
            other => Err(format!("unknown system `{other}` (mhd, vvv_mhd)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemKind,
    pub n: usize,
    pub params: PhysParams,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub initial: InitialSpec,
    pub mhd_form: MhdForm,
    pub output: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub restart: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub plan: SweepPlan,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

const RUN_KEYS: &[&str] = &[
    "system",
    "n",
    "nu",
    "eta",
    "alpha",
    "dt",
    "t_end",
    "record_every",
    "initial_kind",
    "amplitude",
    "magnetic_amplitude",
    "seed",
    "band",
    "mhd_form",
    "output",
    "checkpoint",
    "restart",
];

const SWEEP_KEYS: &[&str] = &[
    "alphas",
    "n",
    "nu",
    "eta",
    "dt",
    "t_end",
    "record_every",
    "initial_kind",
    "amplitude",
    "magnetic_amplitude",
    "seed",
    "band",
    "mhd_form",
    "output_dir",
];

struct Entries {
    items: Vec<(String, String, usize)>,
}

impl Entries {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.items
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.get(key).map(|(_, l)| l)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::at(Some(line), key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| ConfigError::at(None, key, "missing required key"))
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut items: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError {
                line: Some(line),
                key: None,
                message: "empty key".into(),
            });
        }
        if items.iter().any(|(k, _, _)| k == key) {
            return Err(ConfigError::at(Some(line), key, "duplicate key"));
        }
        items.push((key.to_string(), value.to_string(), line));
    }
    Ok(Entries { items })
}

fn parse_form(s: &str) -> Result<MhdForm, String> {
    match s {
        "convective" => Ok(MhdForm::Convective),
        "rotational" => Ok(MhdForm::Rotational),
        other => Err(format!("unknown form `{other}` (convective, rotational)")),
    }
}

fn positive(e: &Entries, key: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::at(e.line_of(key), key, format!("must be positive, got {value}")))
    }
}

fn non_negative(e: &Entries, key: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ConfigError::at(e.line_of(key), key, format!("must be non-negative, got {value}")))
    }
}

fn common(e: &Entries) -> Result<(usize, f64, f64, f64, f64, usize, InitialSpec, MhdForm), ConfigError> {
    let n: usize = e.required("n")?;
    Grid::new(n).map_err(|err| ConfigError::at(e.line_of("n"), "n", err.to_string()))?;
    let nu = positive(e, "nu", e.required("nu")?)?;
    let eta = positive(e, "eta", e.required("eta")?)?;
    let dt = positive(e, "dt", e.required("dt")?)?;
    let t_end = non_negative(e, "t_end", e.required("t_end")?)?;
    let record_every: usize = e.parse("record_every")?.unwrap_or(1);
    if record_every == 0 {
        return Err(ConfigError::at(e.line_of("record_every"), "record_every", "must be at least 1"));
    }
    let defaults = InitialSpec::default();
    let kind = match e.get("initial_kind") {
        None => defaults.kind,
        Some((v, line)) => v
            .parse::<InitialKind>()
            .map_err(|m| ConfigError::at(Some(line), "initial_kind", m))?,
    };
    let amplitude = positive(e, "amplitude", e.parse("amplitude")?.unwrap_or(defaults.amplitude))?;
    let magnetic_amplitude = non_negative(
        e,
        "magnetic_amplitude",
        e.parse("magnetic_amplitude")?.unwrap_or(defaults.magnetic_amplitude),
    )?;
    let seed: u64 = e.parse("seed")?.unwrap_or(defaults.seed);
    let band: Option<usize> = e.parse("band")?;
    let initial = InitialSpec {
        kind,
        amplitude,
        magnetic_amplitude,
        seed,
        band,
    };
    initial
        .validate(n)
        .map_err(|err| ConfigError::at(e.line_of("band"), "band", err.to_string()))?;
    let mhd_form = match e.get("mhd_form") {
        None => MhdForm::Convective,
        Some((v, line)) => parse_form(v).map_err(|m| ConfigError::at(Some(line), "mhd_form", m))?,
    };
    Ok((n, nu, eta, dt, t_end, record_every, initial, mhd_form))
}

/// Parses and validates a run or sweep configuration.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let e = tokenize(text)?;
    let is_sweep = e.get("alphas").is_some();
    let allowed = if is_sweep { SWEEP_KEYS } else { RUN_KEYS };
    for (key, _, line) in &e.items {
        if !allowed.contains(&key.as_str()) {
            let hint = if is_sweep && RUN_KEYS.contains(&key.as_str()) {
                "not valid in a sweep configuration"
            } else {
                "unknown key"
            };
            return Err(ConfigError::at(Some(*line), key, hint));
        }
    }
    let (n, nu, eta, dt, t_end, record_every, initial, mhd_form) = common(&e)?;

    if is_sweep {
        let (raw, line) = e.get("alphas").expect("checked above");
        let alphas = raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|err| ConfigError::at(Some(line), "alphas", format!("cannot parse `{}`: {err}", s.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let plan = SweepPlan {
            alphas,
            n,
            nu,
            eta,
            t_end,
            dt,
            record_every,
            initial,
            mhd_form,
        };
        if t_end == 0.0 {
            return Err(ConfigError::at(e.line_of("t_end"), "t_end", "must be positive for a sweep"));
        }
        plan.validate()
            .map_err(|err| ConfigError::at(Some(line), "alphas", err.to_string()))?;
        let output_dir = e
            .get("output_dir")
            .map(|(v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from("sweep_out"));
        return Ok(Config::Sweep(SweepConfig { plan, output_dir }));
    }

    let system = match e.get("system") {
        None => return Err(ConfigError::at(None, "system", "missing required key")),
        Some((v, line)) => v
            .parse::<SystemKind>()
            .map_err(|m| ConfigError::at(Some(line), "system", m))?,
    };
    let alpha = match (system, e.parse::<f64>("alpha")?) {
        (SystemKind::VvvMhd, None) => return Err(ConfigError::at(None, "alpha", "missing required key")),
        (SystemKind::VvvMhd, Some(a)) => non_negative(&e, "alpha", a)?,
        (SystemKind::Mhd, None) => 0.0,
        (SystemKind::Mhd, Some(0.0)) => 0.0,
        (SystemKind::Mhd, Some(a)) => {
            return Err(ConfigError::at(
                e.line_of("alpha"),
                "alpha",
                format!("must be 0 for system = mhd, got {a}"),
            ))
        }
    };
    let params = PhysParams::new(nu, eta, alpha).map_err(|err| ConfigError::at(None, "params", err.to_string()))?;
    let path = |key: &str| e.get(key).map(|(v, _)| PathBuf::from(v));
    Ok(Config::Run(RunConfig {
        system,
        n,
        params,
        dt,
        t_end,
        record_every,
        initial,
        mhd_form,
        output: path("output").unwrap_or_else(|| PathBuf::from("diagnostics.csv")),
        checkpoint: path("checkpoint"),
        restart: path("restart"),
    }))
}

fn write_initial(f: &mut fmt::Formatter<'_>, initial: &InitialSpec) -> fmt::Result {
    writeln!(f, "initial_kind = {}", initial.kind)?;
    writeln!(f, "amplitude = {}", initial.amplitude)?;
    writeln!(f, "magnetic_amplitude = {}", initial.magnetic_amplitude)?;
    writeln!(f, "seed = {}", initial.seed)?;
    if let Some(band) = initial.band {
        writeln!(f, "band = {band}")?;
    }
    Ok(())
}

fn form_name(form: MhdForm) -> &'static str {
    match form {
        MhdForm::Convective => "convective",
        MhdForm::Rotational => "rotational",
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system = {}", self.system)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "nu = {}", self.params.nu)?;
        writeln!(f, "eta = {}", self.params.eta)?;
        writeln!(f, "alpha = {}", self.params.alpha)?;
        writeln!(f, "dt = {}", self.dt)?;
        writeln!(f, "t_end = {}", self.t_end)?;
        writeln!(f, "record_every = {}", self.record_every)?;
        write_initial(f, &self.initial)?;
        writeln!(f, "mhd_form = {}", form_name(self.mhd_form))?;
        writeln!(f, "output = {}", self.output.display())?;
        if let Some(p) = &self.checkpoint {
            writeln!(f, "checkpoint = {}", p.display())?;
        }
        if let Some(p) = &self.restart {
            writeln!(f, "restart = {}", p.display())?;
        }
        Ok(())
    }
}

impl fmt::Display for SweepConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.plan;
        let alphas: Vec<String> = p.alphas.iter().map(|a| a.to_string()).collect();
        writeln!(f, "alphas = {}", alphas.join(","))?;
        writeln!(f, "n = {}", p.n)?;
        writeln!(f, "nu = {}", p.nu)?;
        writeln!(f, "eta = {}", p.eta)?;
        writeln!(f, "dt = {}", p.dt)?;
        writeln!(f, "t_end = {}", p.t_end)?;
        writeln!(f, "record_every = {}", p.record_every)?;
        write_initial(f, &p.initial)?;
        writeln!(f, "mhd_form = {}", form_name(p.mhd_form))?;
        writeln!(f, "output_dir = {}", self.output_dir.display())
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Config::Run(c) => c.fmt(f),
            Config::Sweep(c) => c.fmt(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "system = vvv_mhd\nn = 16\nnu = 0.01\neta = 0.02\nalpha = 0.1\ndt = 0.001\nt_end = 0.5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let Config::Run(c) = parse_config(MINIMAL).unwrap() else {
            panic!("expected a run config")
        };
        assert_eq!(c.system, SystemKind::VvvMhd);
        assert_eq!(c.params, PhysParams::new(0.01, 0.02, 0.1).unwrap());
        assert_eq!(c.record_every, 1);
        assert_eq!(c.initial, InitialSpec::default());
        assert_eq!(c.output, PathBuf::from("diagnostics.csv"));
        assert_eq!(c.checkpoint, None);
    }

    #[test]
    fn negative_viscosity_names_key_and_rule() {
        let text = MINIMAL.replace("nu = 0.01", "nu = -1");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("nu"));
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("positive"), "{err}");
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let err = parse_config(&format!("{MINIMAL}viscosity = 0.1\n")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("viscosity"));
        assert_eq!(err.line, Some(8));
        let err = parse_config(&MINIMAL.replace("dt = 0.001", "dt = fast")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("dt"));
        let err = parse_config(&MINIMAL.replace("n = 16\n", "")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("n"));
        assert_eq!(err.line, None);
        assert!(parse_config(&format!("{MINIMAL}nu = 0.3\n")).is_err());
        assert!(parse_config("just words\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# header\n\n{}", MINIMAL.replace("n = 16", "n = 16   # points"));
        assert!(matches!(parse_config(&text), Ok(Config::Run(_))));
    }

    #[test]
    fn sweep_alphas_must_decrease() {
        let base = "n = 16\nnu = 0.02\neta = 0.02\ndt = 0.001\nt_end = 0.25\n";
        let Config::Sweep(s) = parse_config(&format!("alphas = 0.1,0.05,0.025,0.0125\n{base}")).unwrap() else {
            panic!("expected a sweep config")
        };
        assert_eq!(s.plan.alphas, vec![0.1, 0.05, 0.025, 0.0125]);
        let err = parse_config(&format!("alphas = 0.05,0.1,0.025\n{base}")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("alphas"));
        assert!(parse_config(&format!("alphas = 0.1,0.05\nalpha = 0.1\n{base}")).is_err());
    }

    #[test]
    fn mhd_rejects_nonzero_alpha() {
        let text = MINIMAL.replace("vvv_mhd", "mhd");
        assert_eq!(parse_config(&text).unwrap_err().key.as_deref(), Some("alpha"));
        assert!(parse_config(&text.replace("alpha = 0.1", "alpha = 0")).is_ok());
    }
}
