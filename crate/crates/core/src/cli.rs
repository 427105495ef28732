//! Configuration-driven front end: `verify`, `simulate`, `audit`, `charts`.
//!
//! Exit codes: 0 when every case passes, 1 on an assertion failure, 2 on a
//! configuration or runtime error. Audit discrepancies never change the exit
//! code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{closure_probe, drift_of, integrate, ClosureOptions, ClosureReport, DriftReport, Integrator};
use crate::error::{Error, Result};
use crate::integrals::integrals_for;
use crate::models::{AngularProfile, Family, FourierTerm, PotentialSpec, PowerTerms};
use crate::phase::PhaseState;
use crate::verify::{
    charts_suite, conservation_suite, equivalence_suite, independence_suite, involution_suite,
    linear_connection_suite, sample_states, CaseResult, Discrepancy, SamplingBox, SuiteOptions,
    VerificationReport, DEFAULT_SEED,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Simulate,
    Audit,
    Charts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSettings {
    pub integrator: Integrator,
    pub dt: f64,
    pub t_final: f64,
    /// Flat `(q, p)`; drawn from the seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    pub closure: bool,
    pub epsilon: f64,
    /// When set, each member's drift becomes a checked case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_tolerance: Option<f64>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            integrator: Integrator::Yoshida4,
            dt: 1e-3,
            t_final: 10.0,
            initial_state: None,
            closure: false,
            epsilon: 1e-3,
            drift_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    /// Not echoed into the report, so reports from different directories
    /// compare equal.
    #[serde(skip_serializing)]
    pub dir: Option<PathBuf>,
    pub report: String,
    pub trajectory: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: None,
            report: "report.json".into(),
            trajectory: "trajectory.csv".into(),
        }
    }
}

fn default_samples() -> usize {
    100
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub system: PotentialSpec,
    /// Expected label of the integral set; a mismatch is a config error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral_set: Option<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn new(command: Command, system: PotentialSpec) -> Self {
        Self {
            command,
            system,
            integral_set: None,
            samples: default_samples(),
            seed: default_seed(),
            tolerances: Tolerances::default(),
            simulation: SimulationSettings::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        for t in [self.tolerances.bracket, self.tolerances.rank].into_iter().flatten() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("tolerance {t} must be positive")));
            }
        }
        let s = &self.simulation;
        if !(s.dt > 0.0 && s.t_final >= s.dt && s.epsilon > 0.0) {
            return Err(Error::Config("simulation needs dt > 0, t_final >= dt, epsilon > 0".into()));
        }
        Ok(())
    }

    fn suite_options(&self) -> SuiteOptions {
        let mut o = SuiteOptions::new(self.samples, self.seed);
        if let Some(t) = self.tolerances.bracket {
            o.bracket_tol = t;
        }
        if let Some(t) = self.tolerances.rank {
            o.rank_tol = t;
        }
        o
    }
}

pub const PRESETS: [&str; 9] = [
    "calogero",
    "calogero-2d",
    "hartmann",
    "v1",
    "v2",
    "v3",
    "layered-oscillator",
    "three-planes",
    "free",
];

fn sample_azimuthal() -> AngularProfile {
    AngularProfile {
        inverse_square_terms: Vec::new(),
        fourier_terms: vec![FourierTerm { m: 2, a: 0.3, b: -0.2 }],
        constant: 1.5,
    }
}

/// Named systems; the command defaults to `verify`.
pub fn preset(name: &str) -> Result<RunConfig> {
    let unit = |family| PotentialSpec::new(family).with("g1", 1.0).with("g2", 1.0).with("g3", 1.0);
    let system = match name {
        "calogero" => unit(Family::RotationalFamily),
        "calogero-2d" => unit(Family::CalogeroReduced2d).with("omega", 1.0),
        "hartmann" => {
            let mut s = PotentialSpec::new(Family::MinimalV2).with("alpha", -1.0).with("beta", 0.0);
            s.azimuthal = Some(AngularProfile::constant(0.5));
            s
        }
        "v1" | "v2" | "v3" => {
            let family = match name {
                "v1" => Family::MinimalV1,
                "v2" => Family::MinimalV2,
                _ => Family::MinimalV3,
            };
            let mut s = PotentialSpec::new(family).with("alpha", 1.0).with("beta", 0.5);
            s.azimuthal = Some(sample_azimuthal());
            s
        }
        "layered-oscillator" => {
            let mut s = PotentialSpec::new(Family::LayeredXy).with("a", 1.0);
            s.radial = Some(PowerTerms::new(&[(0.5, 2)]));
            s
        }
        "three-planes" => {
            let mut s = PotentialSpec::new(Family::SphericalSeparable)
                .with("c1", 0.1)
                .with("c2", 0.2)
                .with("c3", 0.3);
            s.radial = Some(PowerTerms::new(&[(1.0, 2)]));
            s
        }
        "free" => PotentialSpec::new(Family::SphericalSeparable),
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(RunConfig::new(Command::Verify, system))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub initial_state: Vec<f64>,
    pub drift: DriftReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: RunConfig,
    pub suites: Vec<VerificationReport>,
    pub discrepancies: Vec<Discrepancy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(VerificationReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&VerificationReport> {
        self.suites.iter().find(|s| s.suite == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Result of [`run`]: the report and, for `simulate`, the trajectory CSV.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trajectory_csv: Option<String>,
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let opts = config.suite_options();
    let mut suites = Vec::new();
    let mut simulation = None;
    let mut trajectory_csv = None;
    match config.command {
        Command::Verify => {
            let set = integrals_for(&config.system)?;
            if let Some(label) = &config.integral_set {
                if *label != set.label {
                    return Err(Error::Config(format!(
                        "integral set '{label}' does not match system '{}'",
                        set.label
                    )));
                }
            }
            suites.push(conservation_suite(&set, &opts)?);
            if !set.involutive_pairs.is_empty() {
                suites.push(involution_suite(&set, &opts)?);
            }
            suites.push(independence_suite(&set, &opts)?);
            if config.system.family == Family::RotationalFamily {
                suites.push(linear_connection_suite(&config.system.azimuthal_profile(), &opts)?);
            }
        }
        Command::Audit => {
            let g = config.system.couplings();
            if g.iter().all(|v| *v == 0.0) {
                return Err(Error::Config("audit needs nonzero couplings g1..g3".into()));
            }
            suites.push(equivalence_suite(g, &opts)?);
        }
        Command::Charts => {
            suites.push(charts_suite(config.system.param("a").unwrap_or(1.3), &opts)?);
        }
        Command::Simulate => {
            let (report, csv, suite) = simulate(config)?;
            simulation = Some(report);
            trajectory_csv = Some(csv);
            suites.extend(suite);
        }
    }
    let discrepancies = suites.iter().flat_map(|s| s.discrepancies.iter().cloned()).collect();
    Ok(RunOutcome {
        report: RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            suites,
            discrepancies,
            simulation,
        },
        trajectory_csv,
    })
}

fn simulate(config: &RunConfig) -> Result<(SimulationReport, String, Option<VerificationReport>)> {
    let s = &config.simulation;
    let system = config.system.build()?;
    let observables = match integrals_for(&config.system) {
        Ok(set) => set.members,
        Err(_) => vec![system.observable()],
    };
    let z0 = match &s.initial_state {
        Some(z) => PhaseState::from_flat(z)?,
        None => {
            let fields: Vec<_> = observables.iter().map(|o| o.field()).collect();
            sample_states(&fields, &SamplingBox::standard(system.dof()), 1, config.seed)?.remove(0)
        }
    };
    let tr = integrate(&system, &z0, s.dt, s.t_final, s.integrator)?;
    let drift = drift_of(&tr, &observables)?;
    let closure = if s.closure {
        let opts = ClosureOptions {
            t_max: s.t_final,
            dt: s.dt,
            epsilon: s.epsilon,
            integrator: s.integrator,
            ..ClosureOptions::default()
        };
        Some(closure_probe(&system, &z0, &opts)?)
    } else {
        None
    };
    let suite = s.drift_tolerance.map(|tol| {
        let mut r = VerificationReport {
            suite: "drift".into(),
            claim: format!("conservation along a {} trajectory", s.integrator),
            cases: Vec::new(),
            discrepancies: Vec::new(),
            bracket_table: None,
        };
        for m in &drift.members {
            r.cases
                .push(CaseResult::check(m.label.clone(), m.drift, tol, tr.len(), config.seed));
        }
        r
    });
    let mut csv = Vec::new();
    tr.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("CSV is ASCII");
    Ok((
        SimulationReport {
            initial_state: z0.as_slice().to_vec(),
            drift,
            closure,
        },
        csv,
        suite,
    ))
}

/// Writes the report (and trajectory) into `dir`, creating it if needed.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let out = &outcome.report.config.output;
    let report = dir.join(&out.report);
    fs::write(&report, outcome.report.to_json()?)?;
    let mut written = vec![report];
    if let Some(csv) = &outcome.trajectory_csv {
        let path = dir.join(&out.trajectory);
        fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed '{s}': {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "superint", version, about = "Verify first integrals of the three-body chain and its axial family")]
pub struct Args {
    /// Overrides the command stored in the config.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named built-in configuration.
    #[arg(long)]
    pub preset: Option<String>,
    /// Decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Directory for report.json and trajectory.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Args {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => return Err(Error::Config("use either --config or --preset".into())),
            (Some(path), None) => RunConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
        };
        if let Some(c) = self.command {
            cfg.command = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = Some(dir.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = args.resolve().and_then(|cfg| {
        let outcome = run(&cfg)?;
        let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let written = write_artifacts(&outcome, &dir)?;
        Ok((outcome, written))
    });
    match result {
        Ok((outcome, written)) => {
            for s in &outcome.report.suites {
                print!("{}", s.summary());
            }
            for d in &outcome.report.discrepancies {
                let ratio = d.ratio.map_or("n/a".to_string(), |r| format!("{r:.6}"));
                println!("  audit {} / {}: printed {} measured {} ratio {}", d.equation, d.term, d.printed, d.measured, ratio);
            }
            if let Some(sim) = &outcome.report.simulation {
                println!("  trajectory {:?}, max drift {:.3e}", sim.drift.trajectory, sim.drift.max_drift());
                if let Some(c) = &sim.closure {
                    println!("  closure {:?}", c.outcome);
                }
            }
            for p in written {
                println!("wrote {}", p.display());
            }
            outcome.report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
