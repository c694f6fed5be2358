use std::path::{Path, PathBuf};

use cuspex::horoworld::{Backend, HoroballCollection, DEFAULT_EPSILON};
use cuspex::hypgeom::InteriorPoint;
use cuspex::lattice::{preset, GroupPreset};
use cuspex::samplers::{RayKind, StepMeasure};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One weighted word in a custom step measure. Weights are relative.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub word: Vec<String>,
    pub weight: f64,
}

/// Experiment description read from a JSON document.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in group name (`psl2z`, `psl2zi`).
    #[serde(default)]
    pub group: Option<String>,
    /// Custom group description, relative to the config file.
    #[serde(default)]
    pub group_file: Option<PathBuf>,
    pub h: f64,
    /// Uniform on the symmetric generators when absent.
    #[serde(default)]
    pub step_measure: Option<Vec<StepSpec>>,
    pub ks: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<RayKind>,
    /// Base point `[x1, x2, y]`; `[0, 0, 1]` when absent.
    #[serde(default)]
    pub base_point: Option<[f64; 3]>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub notes: Option<serde_json::Value>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_kinds() -> Vec<RayKind> {
    vec![RayKind::RandomWalk, RayKind::Lebesgue]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides applied after parsing.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub backend: Option<Backend>,
    pub epsilon: Option<f64>,
}

/// Which exponent range a command accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Simulate,
    Birkhoff,
}

/// Line of the first `"key":` in the document, for error messages.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().enumerate().find_map(|(i, l)| {
        let at = l.find(&needle)?;
        l[at + needle.len()..].trim_start().starts_with(':').then_some(i + 1)
    })
}

fn located(source: &str, text: &str, key: &str, msg: String) -> CliError {
    match line_of(text, key) {
        Some(line) => CliError::Config(format!("{source}:{line}: `{key}`: {msg}")),
        None => CliError::Config(format!("{source}: `{key}`: {msg}")),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path, over: &Overrides, purpose: Purpose) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string(), over, purpose)?;
        if let Some(f) = &cfg.group_file {
            if f.is_relative() {
                cfg.group_file = Some(path.parent().unwrap_or(Path::new(".")).join(f));
            }
        }
        Ok(cfg)
    }

    /// Parses and validates; `source` names the document in messages.
    pub fn parse(text: &str, source: &str, over: &Overrides, purpose: Purpose) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{source}:{}:{}: {e}", e.line(), e.column()))
        })?;
        if let Some(s) = over.seed {
            cfg.seed = s;
        }
        if let Some(o) = &over.out {
            cfg.out = o.clone();
        }
        if let Some(b) = over.backend {
            cfg.backend = b;
        }
        if let Some(e) = over.epsilon {
            cfg.epsilon = e;
        }
        cfg.validate(text, source, purpose)?;
        Ok(cfg)
    }

    fn validate(&self, text: &str, source: &str, purpose: Purpose) -> Result<(), CliError> {
        let err = |key: &str, msg: String| Err(located(source, text, key, msg));
        match (&self.group, &self.group_file) {
            (Some(_), Some(_)) => return err("group_file", "give either `group` or `group_file`, not both".into()),
            (None, None) => return Err(CliError::Config(format!("{source}: one of `group` or `group_file` is required"))),
            (Some(g), None) if preset(g).is_err() => {
                return err("group", format!("unknown preset `{g}` (expected psl2z or psl2zi)"))
            }
            _ => {}
        }
        if !(self.h > 1.0) {
            return err("h", format!("cusp height must exceed 1, got {}", self.h));
        }
        if self.ks.is_empty() {
            return err("ks", "at least one exponent is required".into());
        }
        for &k in &self.ks {
            let ok = match purpose {
                Purpose::Simulate => k >= 1.0,
                Purpose::Birkhoff => k > 0.0,
            };
            if !ok || !k.is_finite() {
                let bound = if purpose == Purpose::Simulate { "k >= 1" } else { "k > 0" };
                return err("ks", format!("exponent {k} violates {bound}"));
            }
        }
        if self.trials < 1 {
            return err("trials", "at least one trial is required".into());
        }
        if self.t_grid.is_empty() {
            return err("t_grid", "the time grid is empty".into());
        }
        if !(self.t_grid[0] > 0.0) || self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return err("t_grid", "times must be positive and strictly increasing".into());
        }
        if !(self.epsilon > 0.0) {
            return err("epsilon", format!("cutoff must be positive, got {}", self.epsilon));
        }
        if self.kinds.is_empty() {
            return err("kinds", "at least one sampler kind is required".into());
        }
        if let Some(m) = &self.step_measure {
            if m.is_empty() || m.iter().any(|s| !(s.weight > 0.0)) {
                return err("step_measure", "weights must be positive and the support nonempty".into());
            }
        }
        if let Some([_, _, y]) = self.base_point {
            if !(y > 0.0) {
                return err("base_point", "height must be positive".into());
            }
        }
        Ok(())
    }

    pub fn group(&self) -> Result<GroupPreset, CliError> {
        match (&self.group, &self.group_file) {
            (Some(g), _) => preset(g).map_err(|e| CliError::Config(e.to_string())),
            (None, Some(f)) => {
                let text = std::fs::read_to_string(f)
                    .map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
                GroupPreset::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))
            }
            (None, None) => Err(CliError::Config("no group given".into())),
        }
    }

    pub fn collection(&self, group: &GroupPreset) -> Result<HoroballCollection, CliError> {
        HoroballCollection::lattice(group.clone(), self.h).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn measure(&self, group: &GroupPreset) -> Result<StepMeasure, CliError> {
        let m = match &self.step_measure {
            None => StepMeasure::default_for(group),
            Some(specs) => {
                let total: f64 = specs.iter().map(|s| s.weight).sum();
                specs
                    .iter()
                    .map(|s| Ok((group.evaluate(&s.word)?, s.weight / total)))
                    .collect::<cuspex::Result<Vec<_>>>()
                    .and_then(StepMeasure::new)
            }
        };
        m.map_err(|e| CliError::Config(format!("step_measure: {e}")))
    }

    pub fn base(&self, dimension: usize) -> InteriorPoint {
        let [x1, x2, y] = self.base_point.unwrap_or([0.0, 0.0, 1.0]);
        if dimension == 2 {
            InteriorPoint::h2(x1, y)
        } else {
            InteriorPoint::h3(x1, x2, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "group": "psl2z",
  "h": 1.2,
  "ks": [1],
  "t_grid": [250, 500],
  "trials": 2,
  "notes": "anything"
}"#;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, "cfg.json", &Overrides::default(), Purpose::Simulate)
    }

    fn message(r: Result<ExperimentConfig, CliError>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(GOOD).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.epsilon, DEFAULT_EPSILON);
        assert_eq!(c.backend, Backend::Cf);
        assert_eq!(c.kinds.len(), 2);
    }

    #[test]
    fn semantic_errors_name_the_line() {
        assert!(message(parse(&GOOD.replace("1.2", "0.9"))).starts_with("cfg.json:3: `h`"));
        assert!(message(parse(&GOOD.replace("[1]", "[0.5]"))).starts_with("cfg.json:4: `ks`"));
        assert!(message(parse(&GOOD.replace("[250, 500]", "[500, 250]"))).starts_with("cfg.json:5: `t_grid`"));
        assert!(message(parse(&GOOD.replace("\"trials\": 2", "\"trials\": 0"))).starts_with("cfg.json:6: `trials`"));
    }

    #[test]
    fn syntax_errors_name_the_line_and_column() {
        let m = message(parse(&GOOD.replace("\"h\": 1.2,", "\"h\": 1.2,,")));
        assert!(m.starts_with("cfg.json:3:"), "{m}");
        let m = message(parse(&GOOD.replace("\"ks\"", "\"kz\"")));
        assert!(m.starts_with("cfg.json:4:") && m.contains("unknown field"), "{m}");
    }

    #[test]
    fn birkhoff_accepts_small_exponents() {
        let text = GOOD.replace("[1]", "[0.5]");
        assert!(ExperimentConfig::parse(&text, "c", &Overrides::default(), Purpose::Birkhoff).is_ok());
    }

    #[test]
    fn overrides_apply() {
        let over = Overrides {
            seed: Some(9),
            backend: Some(Backend::Bfs),
            epsilon: Some(1e-3),
            out: Some(PathBuf::from("x")),
        };
        let c = ExperimentConfig::parse(GOOD, "c", &over, Purpose::Simulate).unwrap();
        assert_eq!((c.seed, c.backend, c.epsilon, c.out), (9, Backend::Bfs, 1e-3, PathBuf::from("x")));
    }

    #[test]
    fn custom_measure_is_evaluated() {
        let text = GOOD.replace(
            "\"trials\": 2,",
            "\"trials\": 2, \"step_measure\": [{\"word\": [\"S\"], \"weight\": 1}, {\"word\": [\"T\", \"T\"], \"weight\": 2}],",
        );
        let c = parse(&text).unwrap();
        let m = c.measure(&c.group().unwrap()).unwrap();
        assert_eq!(m.support.len(), 2);
    }
}
