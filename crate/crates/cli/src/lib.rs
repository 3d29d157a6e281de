//! Runs experiments declared in a configuration file and writes
//! `report.json` plus CSV tables into an output directory.

pub mod config;
pub mod output;

use config::{ConfigError, ExperimentConfig, Format};
use erlab_core::bounds::check_regime;
use erlab_core::harness::{self, prior_bounds, Check, ExperimentPlan};
use erlab_core::LabError;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name of the environment variable holding the default worker count.
pub const THREADS_ENV: &str = "ERLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Concentration,
    Margin,
    SecondOrder,
    Representation,
    Tails,
    Scaling,
    Curves,
    Describe,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Lab(#[from] LabError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// `2` for configuration problems, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Lab(LabError::Config(_) | LabError::Validation(_) | LabError::Argument(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    artifact_version: &'a str,
    command: Command,
    config: &'a ExperimentConfig,
    plan: &'a ExperimentPlan,
    pass: bool,
    checks: &'a [Check],
    result: &'a T,
}

struct Run<'a> {
    command: Command,
    config: &'a ExperimentConfig,
    plan: &'a ExperimentPlan,
    out: &'a Path,
}

impl Run<'_> {
    fn finish<T: Serialize>(
        &self,
        result: &T,
        checks: Vec<Check>,
        pass: bool,
        tables: Vec<output::Table>,
    ) -> Result<Outcome, RunError> {
        let report = Report {
            schema_version: SCHEMA_VERSION,
            artifact_version: ARTIFACT_VERSION,
            command: self.command,
            config: self.config,
            plan: self.plan,
            pass,
            checks: &checks,
            result,
        };
        let mut files = Vec::new();
        let formats = &self.config.output.formats;
        if formats.contains(&Format::Json) {
            let mut json = serde_json::to_vec_pretty(&report).map_err(std::io::Error::other)?;
            json.push(b'\n');
            files.push(output::write_atomic(self.out, "report.json", &json)?);
        }
        if formats.contains(&Format::Csv) {
            for t in tables {
                files.push(output::write_atomic(self.out, t.name, &t.bytes)?);
            }
        }
        Ok(Outcome {
            pass,
            summary: summarize(&checks),
            checks,
            files,
        })
    }
}

fn summarize(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let status = match (c.pass, c.gating) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        let _ = writeln!(s, "{status:>4}  {:<40} value={:<14.6e} threshold={:.6e}", c.name, c.value, c.threshold);
    }
    s
}

/// Runs `command` with an already parsed configuration. The configuration
/// embedded in the report is `config` itself; `out` is not recorded so that
/// reports from different directories compare equal.
pub fn execute(command: Command, config: &ExperimentConfig, out: &Path) -> Result<Outcome, RunError> {
    let plan = config.plan()?;
    let run = Run {
        command,
        config,
        plan: &plan,
        out,
    };
    match command {
        Command::Describe => Ok(Outcome {
            pass: true,
            checks: Vec::new(),
            files: Vec::new(),
            summary: describe(&plan)?,
        }),
        Command::Concentration => {
            let r = harness::run_concentration(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, output::concentration(&r)?)
        }
        Command::Margin => {
            let r = harness::verify_margin(&plan, plan.margin_samples)?;
            run.finish(&r, r.checks.clone(), r.pass, Vec::new())
        }
        Command::SecondOrder => {
            let r = harness::verify_second_order(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, Vec::new())
        }
        Command::Representation => {
            let r = harness::verify_representation(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, output::representation(&r)?)
        }
        Command::Tails => {
            let r = harness::verify_tail_lemma(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, output::tail_lemma(&r)?)
        }
        Command::Scaling => {
            let r = harness::scaling_study(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, output::scaling(&r)?)
        }
        Command::Curves => {
            let r = harness::verify_curves(&plan)?;
            run.finish(&r, r.checks.clone(), r.pass, vec![output::curves(&r.curves)?])
        }
    }
}

/// Derived constants and the regime report, without any simulation.
/// `A_𝒥` and `A₀` are the Jensen upper bounds of [`prior_bounds`].
pub fn describe(plan: &ExperimentPlan) -> Result<String, RunError> {
    let setup = plan.setup()?;
    let b = prior_bounds(plan, &setup)?;
    let d = setup.dim() as f64;
    let mut s = String::new();
    let _ = writeln!(s, "dictionary   {:?}, D = {}", plan.dictionary, setup.dim());
    let _ = writeln!(s, "n            {}", plan.n);
    let _ = writeln!(s, "A1           {}", b.a1);
    let _ = writeln!(s, "A2           {}", b.a2);
    let _ = writeln!(s, "K            {}", b.k());
    let _ = writeln!(s, "C            {}", b.c());
    let _ = writeln!(s, "c_M          {}", setup.dict.envelope());
    let _ = writeln!(s, "s_box        {}", setup.s_box());
    let _ = writeln!(s, "sqrt(D/n)    {}", (d / plan.n as f64).sqrt());
    let _ = writeln!(s, "A_inf        {}", b.a_inf);
    let _ = writeln!(s, "A_J (prior)  {}", b.a_j);
    let _ = writeln!(s, "A0 (prior)   {}", b.a0);
    let _ = writeln!(s, "c0           {}", b.c0);
    let _ = writeln!(s, "regime (ratio threshold {}):", plan.ratio_threshold);
    for c in check_regime(&b, plan.ratio_threshold).conditions {
        let _ = writeln!(
            s,
            "  {:<4} {:<24} lhs={:.6e} rhs={:.6e}",
            if c.pass { "pass" } else { "fail" },
            c.name,
            c.lhs,
            c.rhs
        );
    }
    Ok(s)
}

/// Loads `path` and applies the command-line seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.plan.seed = seed;
    }
    Ok(cfg)
}
