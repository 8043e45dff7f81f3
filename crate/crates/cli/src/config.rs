//! Scenario configuration. The grammar is documented in `scenarios/README.md`.

use std::path::{Path, PathBuf};

use finsler_core::hardy::weighted::{BrezisVazquezScenario, WeightedFamily, WeightedScenario};
use finsler_core::hardy::{Budget, FamilySpec, HardyScenario, TheoremTag};
use finsler_core::measure::ComparisonGrid;
use finsler_core::models::ModelSpace;
use serde::{Deserialize, Serialize};

/// Built-in scenarios, resolvable by name from any working directory.
const BUILTIN: &[(&str, &str)] = &[
    ("classical-hardy", include_str!("../../../scenarios/classical-hardy.toml")),
    ("funk-curvature", include_str!("../../../scenarios/funk-curvature.toml")),
    ("t36", include_str!("../../../scenarios/t36.toml")),
    ("extremal-sweep", include_str!("../../../scenarios/extremal-sweep.toml")),
    ("log-hardy", include_str!("../../../scenarios/log-hardy.toml")),
    ("gaussian-battery", include_str!("../../../scenarios/gaussian-battery.toml")),
    ("sphere-battery", include_str!("../../../scenarios/sphere-battery.toml")),
    ("weighted-fundamental", include_str!("../../../scenarios/weighted-fundamental.toml")),
    ("brezis-vazquez", include_str!("../../../scenarios/brezis-vazquez.toml")),
    ("compare-a2", include_str!("../../../scenarios/compare-a2.toml")),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub output: Output,
    #[serde(flatten)]
    pub task: Task,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Hardy(HardyScenario),
    LogHardy(HardyScenario),
    Sweep(SweepTask),
    WeightedHardy(WeightedScenario),
    BrezisVazquez(BrezisVazquezScenario),
    Curvature(CurvatureTask),
    Compare(CompareTask),
    DemoFunkInfimum(DemoTask),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTask {
    pub values: Vec<f64>,
    #[serde(flatten)]
    pub scenario: HardyScenario,
}

fn default_samples() -> usize {
    20
}

fn default_flag_tolerance() -> f64 {
    1e-6
}

fn default_margin() -> f64 {
    -1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTask {
    pub id: String,
    pub model: ModelSpace,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_flag_tolerance")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareTask {
    pub id: String,
    pub model: ModelSpace,
    /// A comparison name (`weighted-ricci-lower`, …) or its short alias.
    pub lemma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ComparisonGrid>,
    /// Smallest worst-case margin that passes.
    #[serde(default = "default_margin")]
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoTask {
    pub id: String,
    #[serde(default)]
    pub budget: Budget,
}

#[derive(Debug)]
pub enum LoadError {
    /// Unreadable file or unknown scenario name.
    Io(String),
    /// Syntax or schema error with its location.
    Parse(String),
}

/// Short comparison names accepted by `--lemma`.
pub fn comparison_name(lemma: &str) -> &str {
    match lemma {
        "3.5" | "L3.5" => "nonpositive-flag",
        "3.9" | "L3.9" => "ricci-upper",
        "2.9" => "volume-bound",
        "3.6" => "euclidean-volume",
        "A2" | "A.2" => "weighted-ricci-lower",
        other => other,
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Parse a config; text starting with `{` is read as JSON, anything else
/// as TOML.
pub fn parse(text: &str, origin: &str) -> Result<ScenarioConfig, LoadError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| {
            LoadError::Parse(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })
    } else {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            LoadError::Parse(format!("{origin}:{line}:{col}: {}", e.message()))
        })
    }
}

/// Resolve `--scenario`: an existing path, then `scenarios/<name>.toml`,
/// then a built-in name.
pub fn load(name: &str) -> Result<ScenarioConfig, LoadError> {
    let path = Path::new(name);
    let local = Path::new("scenarios").join(format!("{name}.toml"));
    for p in [path, local.as_path()] {
        if p.is_file() {
            let text = std::fs::read_to_string(p).map_err(|e| LoadError::Io(format!("{}: {e}", p.display())))?;
            return parse(&text, &p.display().to_string());
        }
    }
    match BUILTIN.iter().find(|(n, _)| *n == name) {
        Some((n, text)) => parse(text, &format!("<builtin {n}>")),
        None => Err(LoadError::Io(format!("no scenario file or built-in named {name:?}"))),
    }
}

impl ScenarioConfig {
    pub fn apply_seed(&mut self, seed: u64) {
        let hardy = |s: &mut HardyScenario| {
            if let FamilySpec::Battery { seed: ref mut x, .. } = s.family {
                *x = seed;
            }
        };
        match &mut self.task {
            Task::Hardy(s) | Task::LogHardy(s) => hardy(s),
            Task::Sweep(t) => hardy(&mut t.scenario),
            Task::WeightedHardy(s) => {
                if let WeightedFamily::Battery { seed: ref mut x, .. } = s.family {
                    *x = seed;
                }
            }
            Task::BrezisVazquez(s) => s.seed = seed,
            Task::Curvature(t) => t.seed = seed,
            Task::Compare(_) | Task::DemoFunkInfimum(_) => {}
        }
    }

    /// Start refinement at `level`, keeping at least one level of headroom.
    pub fn apply_level(&mut self, level: u32) {
        let set = |b: &mut Budget| {
            b.level = level;
            b.max_level = b.max_level.max(level + 1);
        };
        match &mut self.task {
            Task::Hardy(s) | Task::LogHardy(s) => set(&mut s.budget),
            Task::Sweep(t) => set(&mut t.scenario.budget),
            Task::WeightedHardy(s) => set(&mut s.budget),
            Task::BrezisVazquez(s) => set(&mut s.budget),
            Task::DemoFunkInfimum(t) => set(&mut t.budget),
            Task::Curvature(_) | Task::Compare(_) => {}
        }
    }

    pub fn id(&self) -> &str {
        match &self.task {
            Task::Hardy(s) | Task::LogHardy(s) => &s.id,
            Task::Sweep(t) => &t.scenario.id,
            Task::WeightedHardy(s) => &s.id,
            Task::BrezisVazquez(s) => &s.id,
            Task::Curvature(t) => &t.id,
            Task::Compare(t) => &t.id,
            Task::DemoFunkInfimum(t) => &t.id,
        }
    }

    /// Hypothesis gates that can be decided without integrating.
    pub fn validate(&self) -> finsler_core::Result<()> {
        let hardy = |s: &HardyScenario| -> finsler_core::Result<()> {
            let gate = s.gate()?;
            s.test_functions(&gate).map(|_| ())
        };
        match &self.task {
            Task::Hardy(s) => hardy(s),
            Task::LogHardy(s) => {
                if s.tag != TheoremTag::T1_3 {
                    return Err(finsler_core::Error::Invalid(format!(
                        "log-hardy needs tag T1.3, found {}",
                        s.tag.name()
                    )));
                }
                hardy(s)
            }
            Task::Sweep(t) => hardy(&t.scenario),
            Task::WeightedHardy(s) => s.model.validate(),
            Task::BrezisVazquez(s) => s.model.validate(),
            Task::Curvature(t) => t.model.validate(),
            Task::Compare(t) => {
                t.model.validate()?;
                finsler_core::measure::Comparison::for_model(comparison_name(&t.lemma), &t.model).map(|_| ())
            }
            Task::DemoFunkInfimum(_) => Ok(()),
        }
    }
}
