use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accel::{AcceleratorConfig, AcceleratorKind};
use crate::engine::ConvergenceCriteria;
use crate::error::{Result, SchwarzError};
use crate::laplace1d::Laplace1DConfig;
use crate::orchestrator::ElasticityConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Laplace1d,
    Elasticity2d,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Laplace1d => "laplace1d",
            Backend::Elasticity2d => "elasticity2d",
        })
    }
}

/// A single value or a list of values to sweep over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Values<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Values::One(v) => vec![v.clone()],
            Values::Many(v) => v.clone(),
        }
    }
}

/// One `[[accelerators]]` table. List-valued fields are expanded into their
/// cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorSpec {
    pub kind: AcceleratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Values<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_init: Option<Values<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<Values<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_and: Option<Values<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_adaptation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bar: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_and: Option<f64>,
}

impl AcceleratorSpec {
    pub fn new(kind: AcceleratorKind) -> Self {
        Self {
            kind,
            rho: None,
            rho_init: None,
            n0: None,
            m_and: None,
            memory_adaptation: None,
            m_bar: None,
            eps_and: None,
        }
    }

    fn expand(&self, problems: &mut Vec<String>) -> Vec<AcceleratorConfig> {
        let base = AcceleratorConfig {
            kind: self.kind,
            ..AcceleratorConfig::default()
        };
        let list =
            |name: &str, v: &Option<Values<f64>>, default: f64, problems: &mut Vec<String>| {
                let out = v
                    .as_ref()
                    .map(Values::to_vec)
                    .unwrap_or_else(|| vec![default]);
                if out.is_empty() {
                    problems.push(format!("{} accelerator: empty list for {name}", self.kind));
                }
                out
            };
        let ilist =
            |name: &str, v: &Option<Values<usize>>, default: usize, problems: &mut Vec<String>| {
                let out = v
                    .as_ref()
                    .map(Values::to_vec)
                    .unwrap_or_else(|| vec![default]);
                if out.is_empty() {
                    problems.push(format!("{} accelerator: empty list for {name}", self.kind));
                }
                out
            };
        let rhos = list("rho", &self.rho, base.rho, problems);
        let rho_inits = list("rho_init", &self.rho_init, base.rho_init, problems);
        let n0s = ilist("n0", &self.n0, base.n0, problems);
        let m_ands = ilist("m_and", &self.m_and, base.m_and, problems);

        let mut out = Vec::new();
        for &rho in &rhos {
            for &rho_init in &rho_inits {
                for &n0 in &n0s {
                    for &m_and in &m_ands {
                        out.push(AcceleratorConfig {
                            rho,
                            rho_init,
                            n0,
                            m_and,
                            memory_adaptation: self.memory_adaptation.unwrap_or(false),
                            m_bar: self.m_bar.unwrap_or(base.m_bar.min(m_and)),
                            eps_and: self.eps_and.unwrap_or(base.eps_and),
                            ..base
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceSettings {
    pub n_points: usize,
    pub g_init: f64,
}

impl Default for LaplaceSettings {
    fn default() -> Self {
        let c = Laplace1DConfig::new(0.5);
        Self {
            n_points: c.n_points,
            g_init: c.g_init,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_bar: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_dd: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub criteria: ConvergenceCriteria,
    #[serde(default)]
    pub laplace1d: LaplaceSettings,
    #[serde(default)]
    pub elasticity2d: ElasticityConfig,
    #[serde(default)]
    pub sweep: Sweep,
    pub accelerators: Vec<AcceleratorSpec>,
}

/// One fully specified run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub index: usize,
    pub id: String,
    pub backend: Backend,
    pub criteria: ConvergenceCriteria,
    pub accelerator: AcceleratorConfig,
    pub laplace: Option<Laplace1DConfig>,
    pub elasticity: Option<ElasticityConfig>,
}

impl RunSpec {
    pub fn label(&self) -> String {
        match (&self.laplace, &self.elasticity) {
            (Some(l), _) => format!("x_bar={} {}", l.x_bar, self.accelerator.label()),
            (_, Some(e)) => format!("n_dd={} {}", e.n_dd, self.accelerator.label()),
            _ => self.accelerator.label(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SchwarzError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| SchwarzError::Parse(e.to_string()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(&self.name))
    }

    pub fn validate(&self) -> Result<()> {
        self.expand().map(|_| ())
    }

    /// All runs of the sweep in output order: sweep points outermost, then
    /// accelerator tables in file order.
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        let mut problems = Vec::new();
        if self.name.trim().is_empty() {
            problems.push("name must not be empty".to_string());
        }
        if let Err(SchwarzError::InvalidConfig(p)) = self.criteria.validate() {
            problems.extend(p.into_iter().map(|s| format!("criteria: {s}")));
        }
        if self.accelerators.is_empty() {
            problems.push("at least one [[accelerators]] table is required".to_string());
        }
        let mut accels = Vec::new();
        for spec in &self.accelerators {
            for cfg in spec.expand(&mut problems) {
                if let Err(SchwarzError::InvalidConfig(p)) = cfg.validate() {
                    problems.extend(p.into_iter().map(|s| format!("{}: {s}", cfg.label())));
                }
                accels.push(cfg);
            }
        }

        let mut points: Vec<(Option<Laplace1DConfig>, Option<ElasticityConfig>)> = Vec::new();
        match self.backend {
            Backend::Laplace1d => {
                if self.sweep.n_dd.is_some() {
                    problems.push("sweep.n_dd is not used by the laplace1d backend".to_string());
                }
                match &self.sweep.x_bar {
                    None => problems.push("sweep.x_bar is required for laplace1d".to_string()),
                    Some(v) if v.is_empty() => problems.push("sweep.x_bar is empty".to_string()),
                    Some(v) => {
                        for &x_bar in v {
                            let c = Laplace1DConfig {
                                x_bar,
                                n_points: self.laplace1d.n_points,
                                g_init: self.laplace1d.g_init,
                            };
                            if let Err(SchwarzError::InvalidConfig(p)) = c.validate() {
                                problems.extend(p.into_iter().map(|s| format!("laplace1d: {s}")));
                            }
                            points.push((Some(c), None));
                        }
                    }
                }
            }
            Backend::Elasticity2d => {
                if self.sweep.x_bar.is_some() {
                    problems
                        .push("sweep.x_bar is not used by the elasticity2d backend".to_string());
                }
                let n_dds = match &self.sweep.n_dd {
                    None => vec![self.elasticity2d.n_dd],
                    Some(v) => {
                        if v.is_empty() {
                            problems.push("sweep.n_dd is empty".to_string());
                        }
                        v.clone()
                    }
                };
                for n_dd in n_dds {
                    let c = ElasticityConfig {
                        n_dd,
                        ..self.elasticity2d
                    };
                    if let Err(SchwarzError::InvalidConfig(p)) = c.validate() {
                        problems.extend(p.into_iter().map(|s| format!("elasticity2d: {s}")));
                    }
                    points.push((None, Some(c)));
                }
            }
        }

        if !problems.is_empty() {
            problems.dedup();
            return Err(SchwarzError::InvalidConfig(problems));
        }

        let mut runs = Vec::new();
        for (laplace, elasticity) in points {
            for accel in &accels {
                let index = runs.len();
                runs.push(RunSpec {
                    index,
                    id: format!("run{index:04}"),
                    backend: self.backend,
                    criteria: self.criteria,
                    accelerator: *accel,
                    laplace,
                    elasticity,
                });
            }
        }
        Ok(runs)
    }
}

fn accel(kind: AcceleratorKind, f: impl FnOnce(&mut AcceleratorSpec)) -> AcceleratorSpec {
    let mut s = AcceleratorSpec::new(kind);
    f(&mut s);
    s
}

fn laplace_table(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        backend: Backend::Laplace1d,
        output_dir: None,
        criteria: ConvergenceCriteria {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            maxit: 50,
        },
        laplace1d: LaplaceSettings::default(),
        elasticity2d: ElasticityConfig::default(),
        sweep: Sweep {
            x_bar: Some(vec![0.1, 0.2, 0.5, 0.7, 0.8]),
            n_dd: None,
        },
        accelerators: vec![
            accel(AcceleratorKind::Classical, |s| {
                s.rho = Some(Values::Many(vec![0.1, 0.2, 0.5, 0.7, 0.8, 1.0]))
            }),
            accel(AcceleratorKind::Aitken, |s| {
                s.rho_init = Some(Values::One(1.0));
                s.n0 = Some(Values::One(2));
            }),
            accel(AcceleratorKind::Anderson, |s| {
                s.rho = Some(Values::One(1.0));
                s.m_and = Some(Values::One(1));
            }),
        ],
    }
}

fn two_domain_comparison(name: &str, rho: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        backend: Backend::Elasticity2d,
        output_dir: None,
        criteria: ConvergenceCriteria {
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            maxit: 100,
        },
        laplace1d: LaplaceSettings::default(),
        elasticity2d: ElasticityConfig::default(),
        sweep: Sweep {
            x_bar: None,
            n_dd: Some(vec![2]),
        },
        accelerators: vec![
            accel(AcceleratorKind::Classical, |s| {
                s.rho = Some(Values::One(rho))
            }),
            accel(AcceleratorKind::Aitken, |s| {
                s.rho_init = Some(Values::One(rho));
                s.n0 = Some(Values::One(2));
            }),
            accel(AcceleratorKind::Anderson, |s| {
                s.rho = Some(Values::One(rho));
                s.m_and = Some(Values::Many(vec![1, 2, 3]));
            }),
        ],
    }
}

fn ndd_study() -> ExperimentConfig {
    ExperimentConfig {
        name: "ndd-study".to_string(),
        backend: Backend::Elasticity2d,
        output_dir: None,
        criteria: ConvergenceCriteria {
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            maxit: 80,
        },
        laplace1d: LaplaceSettings::default(),
        elasticity2d: ElasticityConfig::default(),
        sweep: Sweep {
            x_bar: None,
            n_dd: Some(vec![2, 3, 4, 5]),
        },
        accelerators: vec![
            accel(AcceleratorKind::Classical, |s| {
                s.rho = Some(Values::One(0.5))
            }),
            accel(AcceleratorKind::Aitken, |s| {
                s.rho_init = Some(Values::One(0.5));
                s.n0 = Some(Values::One(5));
            }),
            accel(AcceleratorKind::Anderson, |s| {
                s.rho = Some(Values::One(0.5));
                s.m_and = Some(Values::One(20));
                s.memory_adaptation = Some(true);
                s.m_bar = Some(3);
                s.eps_and = Some(1e-5);
            }),
        ],
    }
}

pub const BUILTIN_NAMES: [&str; 5] = ["table1", "table2", "table3", "table4", "ndd-study"];

/// Built-in experiment configurations, at desk-scale resolution for the
/// elasticity cases.
pub fn builtin(name: &str) -> Option<ExperimentConfig> {
    match name {
        "table1" | "table2" => Some(laplace_table(name)),
        "table3" => Some(two_domain_comparison(name, 0.2)),
        "table4" => Some(two_domain_comparison(name, 0.5)),
        "ndd-study" => Some(ndd_study()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
name = "t1"
backend = "laplace1d"

[criteria]
eps_abs = 1e-8
eps_rel = 1e-8
maxit = 50

[sweep]
x_bar = [0.1, 0.5]

[[accelerators]]
kind = "classical"
rho = [0.1, 0.2, 1.0]

[[accelerators]]
kind = "aitken"
rho_init = 1.0
n0 = 2
"#;

    #[test]
    fn parses_and_expands_in_sweep_order() {
        let c = ExperimentConfig::from_toml_str(TABLE1).unwrap();
        let runs = c.expand().unwrap();
        assert_eq!(runs.len(), 8);
        assert_eq!(runs[0].laplace.unwrap().x_bar, 0.1);
        assert_eq!(runs[0].accelerator.rho, 0.1);
        assert_eq!(runs[3].accelerator.kind, AcceleratorKind::Aitken);
        assert_eq!(runs[4].laplace.unwrap().x_bar, 0.5);
        assert_eq!(runs[7].id, "run0007");
        assert_eq!(c.laplace1d.g_init, 0.3);
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let text = TABLE1.replace("x_bar = [0.1, 0.5]", "x_bar = []");
        let err = ExperimentConfig::from_toml_str(&text)
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("sweep.x_bar is empty"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = TABLE1
            .replace("rho = [0.1, 0.2, 1.0]", "rho = []")
            .replace("maxit = 50", "maxit = 0")
            .replace("x_bar = [0.1, 0.5]", "x_bar = [1.5]");
        let err = ExperimentConfig::from_toml_str(&text)
            .unwrap()
            .validate()
            .unwrap_err();
        match err {
            SchwarzError::InvalidConfig(p) => assert_eq!(p.len(), 3, "{p:?}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = TABLE1.replace("n0 = 2", "n0 = 2\nnzero = 3");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn builtins_validate_and_roundtrip() {
        for name in BUILTIN_NAMES {
            let c = builtin(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
            assert_eq!(back, c);
        }
        assert_eq!(builtin("table1").unwrap().expand().unwrap().len(), 40);
        assert!(builtin("table9").is_none());
    }
}
