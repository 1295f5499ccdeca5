//! Run configuration documents.
//!
//! A configuration is a TOML file with top-level keys and a list of
//! problem tables:
//!
//! ```toml
//! repetitions = 5              # timed runs per configuration
//! diagnostics = "none"         # none | cycle | iteration
//! seed = 0                     # right-hand sides of generated and file problems
//! out = "bench-out"            # output directory, relative to the working directory
//! preset = "tridiag"           # optional: tridiag | all
//! configurations = ["cl-bcgs-pip:cholqr", "gl-bmgs"]
//!
//! [[problems]]
//! name = "tridiag"             # tridiag | lapl_2d | any name together with `path`
//! n = 1000                     # tridiag size; lapl_2d takes `nx`
//! m = 70
//! tol = 1e-10
//! modification = "none"        # none | harmonic
//! stopping = "error"           # residual | error
//! ```
//!
//! Matrix Market problems set `path` (relative to the configuration file)
//! and may set `preconditioner = "ilu0"`. A configuration label is
//! `<paradigm>-<skeleton>[:<muscle>]`; the muscle defaults to the one the
//! skeleton is forced to use, or `cholqr`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lowsync::arnoldi::SkeletonKind;
use lowsync::paradigm::{Muscle, Paradigm, ParadigmKind};
use lowsync::solver::{DiagnosticsLevel, Modification, Stopping, DEFAULT_MAX_CYCLES};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// The fourteen tridiagonal benchmark configurations.
    Tridiag,
    /// Every skeleton under both paradigms with its default muscle.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    None,
    Ilu0,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub problems: Vec<ProblemSpec>,
    #[serde(default)]
    pub configurations: Vec<String>,
    pub preset: Option<Preset>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub diagnostics: DiagnosticsLevel,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_repetitions() -> usize {
    lowsync::instrument::RunStats::DEFAULT_REPETITIONS
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub path: Option<PathBuf>,
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub s: Option<usize>,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub modification: Option<Modification>,
    pub stopping: Option<Stopping>,
    pub max_cycles: Option<usize>,
    pub preconditioner: Option<Preconditioner>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Tridiag { n: usize },
    Lapl2d { nx: usize },
    File { path: PathBuf },
}

/// A problem entry with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedProblem {
    pub name: String,
    pub source: ProblemSource,
    pub s: usize,
    pub m: usize,
    pub tol: f64,
    pub modification: Modification,
    pub stopping: Stopping,
    pub max_cycles: usize,
    pub preconditioner: Preconditioner,
}

impl ProblemSpec {
    /// Fills in defaults; `base` resolves relative file paths.
    pub fn resolve(&self, base: &Path) -> anyhow::Result<ResolvedProblem> {
        let (source, s, m, tol, modification) = match (&self.path, self.name.as_str()) {
            (Some(path), _) => {
                let path = if path.is_absolute() { path.clone() } else { base.join(path) };
                (ProblemSource::File { path }, 5, 30, 1e-6, Modification::Harmonic)
            }
            (None, "tridiag") => {
                if self.s.is_some_and(|s| s != 2) {
                    bail!("tridiag has a fixed two-column right-hand side");
                }
                (ProblemSource::Tridiag { n: self.n.unwrap_or(1000) }, 2, 70, 1e-10, Modification::None)
            }
            (None, "lapl_2d") => (ProblemSource::Lapl2d { nx: self.nx.unwrap_or(100) }, 10, 25, 1e-6, Modification::None),
            (None, other) => bail!("unknown generator {other:?}; set `path` for Matrix Market problems"),
        };
        Ok(ResolvedProblem {
            name: self.name.clone(),
            source,
            s: self.s.unwrap_or(s),
            m: self.m.unwrap_or(m),
            tol: self.tol.unwrap_or(tol),
            modification: self.modification.unwrap_or(modification),
            stopping: self.stopping.unwrap_or_default(),
            max_cycles: self.max_cycles.unwrap_or(DEFAULT_MAX_CYCLES),
            preconditioner: self.preconditioner.unwrap_or_default(),
        })
    }
}

/// Paradigm kind, skeleton and muscle of one benchmark row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub kind: ParadigmKind,
    pub skeleton: SkeletonKind,
    pub muscle: Muscle,
}

impl Configuration {
    pub fn paradigm(&self, s: usize) -> Paradigm {
        Paradigm { kind: self.kind, s }
    }

    pub fn label(&self) -> String {
        format!("{}-{}:{}", self.paradigm(1).label(), self.skeleton.label(), self.muscle.label())
    }
}

/// Parses `cl-bcgs-pip:cholqr`-style labels and checks legality.
pub fn parse_configuration(label: &str) -> Result<Configuration, String> {
    let (head, muscle) = match label.split_once(':') {
        Some((h, m)) => (h, Some(m)),
        None => (label, None),
    };
    let (prefix, skeleton) = head.split_once('-').ok_or_else(|| format!("missing paradigm prefix in {label:?}"))?;
    let kind = match prefix.to_ascii_lowercase().as_str() {
        "cl" | "classical" => ParadigmKind::Classical,
        "gl" | "global" => ParadigmKind::Global,
        other => return Err(format!("unknown paradigm {other:?}")),
    };
    let skeleton = SkeletonKind::from_label(skeleton).ok_or_else(|| format!("unknown skeleton {skeleton:?}"))?;
    let pd = Paradigm { kind, s: 1 };
    let muscle = match muscle {
        Some(m) => Muscle::from_label(m).ok_or_else(|| format!("unknown muscle {m:?}"))?,
        None => skeleton.forced_muscle(pd).unwrap_or(Muscle::CholQR),
    };
    skeleton.validate(pd, muscle).map_err(|e| e.to_string())?;
    Ok(Configuration { kind, skeleton, muscle })
}

pub fn preset_labels(preset: Preset) -> Vec<String> {
    let names: &[&str] = match preset {
        Preset::Tridiag => &[
            "gl-bmgs",
            "gl-bmgs-svl",
            "gl-bmgs-lts",
            "gl-bcgs-irols",
            "gl-bmgs-cwy",
            "gl-bmgs-icwy",
            "gl-bcgs-pip",
            "cl-bcgs-pip",
            "cl-bmgs",
            "cl-bmgs-cwy",
            "cl-bmgs-svl",
            "cl-bmgs-lts",
            "cl-bcgs-irols",
            "cl-bmgs-icwy",
        ],
        Preset::All => {
            return ["cl", "gl"]
                .iter()
                .flat_map(|p| SkeletonKind::ALL.iter().map(move |k| format!("{p}-{}", k.label())))
                .collect()
        }
    };
    names.iter().map(|s| s.to_string()).collect()
}

impl BenchConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        Ok(cfg)
    }

    /// Explicit labels followed by the preset, de-duplicated in order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let preset = self.preset.map(preset_labels).unwrap_or_default();
        for l in self.configurations.iter().cloned().chain(preset) {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }
}
