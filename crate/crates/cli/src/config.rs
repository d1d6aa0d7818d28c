//! Experiment configuration files.

use accel_admm::engine::{certified_config, ErrorPolicy, SolverConfig, SolverVariant};
use accel_admm::model::{problem_from_json, ProblemInstance, SaddleReference};
use accel_admm::problems::{generate, reference_solve, GeneratorSpec};
use accel_admm::schedule::ScheduleRule;
use anyhow::{bail, Context, Result};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Tolerance for the reference solve of file instances that carry no reference.
const FILE_REFERENCE_TOL: f64 = 1e-11;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub solvers: Vec<SolverEntry>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: Emit,
    /// Exit with status 2 when a binding certificate is violated.
    #[serde(default)]
    pub verify: bool,
    /// Rules compared by `compare-schedules`.
    #[serde(default)]
    pub schedules: Vec<ScheduleRule<f64>>,
    /// Feasibility level for the k-to-tolerance column of `compare-schedules`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Cap used for the strong admissibility verdict of `compare-schedules`.
    #[serde(default = "default_a_cap")]
    pub a_cap: f64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_a_cap() -> f64 {
    1.0
}

/// A generator recipe, or a path to a problem JSON document.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProblemSource {
    File(PathBuf),
    Generator(GeneratorSpec),
}

impl<'de> Deserialize<'de> for ProblemSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ProblemSource;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a problem file path or a generator object")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<ProblemSource, E> {
                Ok(ProblemSource::File(PathBuf::from(s)))
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                map: A,
            ) -> std::result::Result<ProblemSource, A::Error> {
                GeneratorSpec::deserialize(de::value::MapAccessDeserializer::new(map))
                    .map(ProblemSource::Generator)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

impl Emit {
    /// Parses a comma-separated list such as `csv,svg`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let mut e = Emit {
            csv: false,
            json: false,
            svg: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => e.csv = true,
                "json" => e.json = true,
                "svg" => e.svg = true,
                other => bail!("unknown emit format `{other}` (expected csv, json or svg)"),
            }
        }
        Ok(e)
    }
}

/// One solver run. Parameters left out are taken from the certified configuration
/// for the variant; giving all of `alpha`, `beta`, `gamma` and `schedule` bypasses it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub variant: SolverVariant,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleRule<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inexact: Option<ErrorPolicy<f64>>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_max_outer() -> usize {
    1000
}

fn default_record_every() -> usize {
    1
}

impl SolverEntry {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.variant.name())
    }

    pub fn build(&self, inst: &ProblemInstance<f64>) -> Result<SolverConfig<f64>> {
        let mut cfg = match (self.alpha, self.beta, self.gamma, self.schedule) {
            (Some(alpha), Some(beta), Some(gamma), Some(schedule)) => {
                SolverConfig::new(self.variant, alpha, beta, gamma, schedule, self.max_outer)
            }
            _ => {
                let mut cfg =
                    certified_config(inst, self.variant, self.max_outer).with_context(|| {
                        format!("solver `{}`: no certified parameters", self.label())
                    })?;
                cfg.alpha = self.alpha.unwrap_or(cfg.alpha);
                cfg.beta = self.beta.unwrap_or(cfg.beta);
                cfg.gamma = self.gamma.unwrap_or(cfg.gamma);
                cfg.schedule = self.schedule.unwrap_or(cfg.schedule);
                cfg
            }
        };
        cfg.inexact = self.inexact.clone();
        cfg.record_every = self.record_every;
        cfg.validate()
            .with_context(|| format!("solver `{}`", self.label()))?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base)
    }

    /// Makes a relative problem path relative to the config file and checks invariants.
    fn resolve(mut self, base: &Path) -> Result<Self> {
        if let ProblemSource::File(p) = &self.problem {
            if p.is_relative() {
                self.problem = ProblemSource::File(base.join(p));
            }
        }
        if self.solvers.is_empty() {
            bail!("config lists no solvers");
        }
        let mut names: Vec<String> = self.solvers.iter().map(SolverEntry::label).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!(
                "duplicate solver name `{}`; set `name` to tell the entries apart",
                w[0]
            );
        }
        Ok(self)
    }
}

pub struct LoadedProblem {
    pub instance: ProblemInstance<f64>,
    pub reference: Option<SaddleReference<f64>>,
}

impl ProblemSource {
    pub fn with_seed(&mut self, seed: u64) {
        match self {
            ProblemSource::Generator(g) => g.seed = seed,
            ProblemSource::File(p) => log::warn!("--seed ignored for problem file {}", p.display()),
        }
    }

    pub fn load(&self) -> Result<LoadedProblem> {
        match self {
            ProblemSource::Generator(spec) => {
                let (instance, reference) = generate(spec).context("generating problem")?;
                Ok(LoadedProblem {
                    instance,
                    reference: Some(reference),
                })
            }
            ProblemSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading problem file {}", path.display()))?;
                let (instance, reference) = problem_from_json(&text)
                    .with_context(|| format!("parsing problem file {}", path.display()))?;
                let reference = match reference {
                    Some(r) => Some(r),
                    None => match reference_solve(&instance, FILE_REFERENCE_TOL) {
                        Ok(r) => Some(r),
                        Err(e) => {
                            log::warn!("no saddle reference ({e}); certificates are disabled");
                            None
                        }
                    },
                };
                Ok(LoadedProblem {
                    instance,
                    reference,
                })
            }
        }
    }
}
