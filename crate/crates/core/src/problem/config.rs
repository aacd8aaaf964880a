//! JSON problem configuration.
//!
//! ```json
//! {
//!   "graph": "path9.json",
//!   "p": 2, "q": 3,
//!   "h1": {"preset": "3+dist", "anchor": "v2"},
//!   "h2": {"values": {"v0": 3.0, "...": 1.0}},
//!   "e1": {"indicator": ["v2", "v6"]},
//!   "e2": {"constant": 0.5},
//!   "lambda1": 0.5,
//!   "lambda2": {"fraction_of_lambda0": 0.5},
//!   "F": {"expr": {"F": "s^4", "Fs": "4*s^3", "Ft": "0"}, "support": ["v2"]},
//!   "hypothesis": {"l0": 0.01, "x3": "v2"}
//! }
//! ```
//!
//! A `preset` object replaces the individual fields:
//! `{"graph": "...", "preset": {"name": "fractional", "x1": "v2", "x2": "v6",
//! "lambda1": 1, "lambda2": 1}}`. Preset names are `fractional`,
//! `log-quartic` and `single-equation`. Graph paths resolve relative to the
//! config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::calculus::VertexFunction;
use crate::graph::{GraphError, WeightedGraph};
use crate::nonlinearity::{ExprTriple, ExprTripleError, Nonlinearity};

use super::constants::lambda0_params;
use super::presets::{self, LambdaChoice};
use super::{GrowthForm, HypothesisParams, ProblemData, ProblemError, ProblemSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Expression(#[from] ExprTripleError),
    #[error("config field `{0}` is required")]
    Missing(&'static str),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl ConfigError {
    /// Whether the failure is in reading or parsing input, as opposed to
    /// parsed input that breaks a problem invariant.
    pub fn is_parse_error(&self) -> bool {
        match self {
            ConfigError::Io { .. } | ConfigError::Json { .. } | ConfigError::Expression(_) => true,
            ConfigError::Graph(GraphError::Io { .. } | GraphError::Parse { .. }) => true,
            ConfigError::Missing(_) => true,
            _ => false,
        }
    }
}

/// `λ` as a number or as a fraction of `λ0`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Fraction { fraction_of_lambda0: f64 },
}

/// One vertex function; exactly one form must be given.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub values: Option<BTreeMap<String, f64>>,
    pub constant: Option<f64>,
    pub indicator: Option<Vec<String>>,
    /// `"3+dist"` (needs `anchor`) or `"log-quartic"` (needs `anchor`,
    /// `repel`, `c1`).
    pub preset: Option<String>,
    pub anchor: Option<String>,
    pub repel: Option<String>,
    pub c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprConfig {
    #[serde(rename = "F")]
    pub f: String,
    #[serde(rename = "Fs")]
    pub fs: String,
    #[serde(rename = "Ft")]
    pub ft: String,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    /// `zero`, `fractional`, `log-quartic` or `log-cubic`.
    pub preset: Option<String>,
    pub expr: Option<ExprConfig>,
    pub m: Option<f64>,
    pub support: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisConfig {
    pub growth: Option<String>,
    pub f1: Option<VertexSpec>,
    pub f2: Option<VertexSpec>,
    pub g1: Option<VertexSpec>,
    pub g2: Option<VertexSpec>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    #[serde(rename = "K1")]
    pub k1: Option<VertexSpec>,
    #[serde(rename = "K2")]
    pub k2: Option<VertexSpec>,
    pub x1: Option<String>,
    pub x2: Option<String>,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub x3: Option<String>,
    pub x4: Option<String>,
    pub nu: Option<f64>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub beta3: Option<f64>,
    #[serde(rename = "K3")]
    pub k3: Option<VertexSpec>,
    pub b: Option<VertexSpec>,
    pub a_table: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub sublevels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub name: String,
    pub x1: Option<String>,
    pub x2: Option<String>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda: Option<LambdaSpec>,
    pub c1: Option<f64>,
    pub p: Option<f64>,
    pub h: Option<VertexSpec>,
    pub e: Option<VertexSpec>,
    pub epsilon: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub graph: String,
    pub name: Option<String>,
    pub preset: Option<PresetConfig>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub h1: Option<VertexSpec>,
    pub h2: Option<VertexSpec>,
    pub e1: Option<VertexSpec>,
    pub e2: Option<VertexSpec>,
    pub lambda1: Option<LambdaSpec>,
    pub lambda2: Option<LambdaSpec>,
    #[serde(rename = "F")]
    pub f: Option<NonlinearityConfig>,
    pub h0: Option<f64>,
    pub hypothesis: Option<HypothesisConfig>,
}

fn vertex(g: &WeightedGraph, id: &str) -> Result<usize, ConfigError> {
    g.index_of(id).map_err(ConfigError::Graph)
}

fn vertex_set(g: &WeightedGraph, ids: &[String]) -> Result<Vec<usize>, ConfigError> {
    ids.iter().map(|id| vertex(g, id)).collect()
}

impl VertexSpec {
    pub fn resolve(&self, g: &WeightedGraph) -> Result<VertexFunction, ConfigError> {
        let n = g.len();
        let forms = [
            self.values.is_some(),
            self.constant.is_some(),
            self.indicator.is_some(),
            self.preset.is_some(),
        ];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(ConfigError::Invalid(
                "vertex function needs exactly one of values, constant, indicator, preset".into(),
            ));
        }
        if let Some(values) = &self.values {
            let mut out = vec![None; n];
            for (id, &v) in values {
                out[vertex(g, id)?] = Some(v);
            }
            return out
                .into_iter()
                .enumerate()
                .map(|(x, v)| v.ok_or_else(|| ConfigError::Invalid(format!("no value for vertex {}", g.id(x)))))
                .collect::<Result<Vec<_>, _>>()
                .map(VertexFunction);
        }
        if let Some(c) = self.constant {
            return Ok(VertexFunction::constant(n, c));
        }
        if let Some(ids) = &self.indicator {
            return Ok(VertexFunction::indicator(n, &vertex_set(g, ids)?));
        }
        let preset = self.preset.as_deref().unwrap_or_default();
        let anchor = self.anchor.as_deref().ok_or(ConfigError::Missing("anchor"))?;
        let anchor = vertex(g, anchor)?;
        match preset {
            "3+dist" => Ok(presets::three_plus_dist(g, anchor)?),
            "log-quartic" => {
                let repel = vertex(g, self.repel.as_deref().ok_or(ConfigError::Missing("repel"))?)?;
                let c1 = self.c1.ok_or(ConfigError::Missing("c1"))?;
                Ok(presets::log_quartic_potential(g, anchor, repel, c1)?)
            }
            other => Err(ConfigError::Invalid(format!("unknown potential preset `{other}`"))),
        }
    }
}

impl NonlinearityConfig {
    pub fn resolve(&self, g: &WeightedGraph) -> Result<Nonlinearity, ConfigError> {
        let support = match &self.support {
            Some(ids) => {
                let set = vertex_set(g, ids)?;
                let mut mask = vec![false; g.len()];
                for x in set {
                    mask[x] = true;
                }
                Some(mask)
            }
            None => None,
        };
        match (&self.preset, &self.expr) {
            (Some(_), Some(_)) | (None, None) => {
                Err(ConfigError::Invalid("F needs exactly one of preset, expr".into()))
            }
            (None, Some(e)) => {
                let exprs = ExprTriple::parse(&e.f, &e.fs, &e.ft)?;
                Ok(Nonlinearity::Expression { exprs: Box::new(exprs), support })
            }
            (Some(name), None) => match name.as_str() {
                "zero" => Ok(Nonlinearity::Zero),
                "fractional" => Ok(Nonlinearity::FractionalPower {
                    support: support.ok_or(ConfigError::Missing("F.support"))?,
                }),
                "log-quartic" => Ok(Nonlinearity::LogQuartic { m: self.m.ok_or(ConfigError::Missing("F.m"))? }),
                "log-cubic" => Ok(Nonlinearity::LogCubic { m: self.m.ok_or(ConfigError::Missing("F.m"))? }),
                other => Err(ConfigError::Invalid(format!("unknown nonlinearity preset `{other}`"))),
            },
        }
    }
}

impl HypothesisConfig {
    /// Overlays the configured entries onto `base`.
    pub fn apply(&self, g: &WeightedGraph, mut base: HypothesisParams) -> Result<HypothesisParams, ConfigError> {
        let func = |spec: &Option<VertexSpec>| spec.as_ref().map(|s| s.resolve(g)).transpose();
        let index = |id: &Option<String>| id.as_deref().map(|id| vertex(g, id)).transpose();
        if let Some(growth) = &self.growth {
            base.growth = match growth.as_str() {
                "standard" => GrowthForm::Standard,
                "swapped" => GrowthForm::Swapped,
                other => return Err(ConfigError::Invalid(format!("unknown growth form `{other}`"))),
            };
        }
        macro_rules! overlay {
            ($field:ident, $value:expr) => {
                if let Some(v) = $value {
                    base.$field = Some(v);
                }
            };
        }
        overlay!(f1, func(&self.f1)?);
        overlay!(f2, func(&self.f2)?);
        overlay!(g1, func(&self.g1)?);
        overlay!(g2, func(&self.g2)?);
        overlay!(k1, func(&self.k1)?);
        overlay!(k2, func(&self.k2)?);
        overlay!(k3, func(&self.k3)?);
        overlay!(majorant_weight, func(&self.b)?);
        overlay!(majorant_table, self.a_table.clone());
        overlay!(x1, index(&self.x1)?);
        overlay!(x2, index(&self.x2)?);
        overlay!(x3, index(&self.x3)?);
        overlay!(x4, index(&self.x4)?);
        overlay!(beta1, self.beta1);
        overlay!(beta2, self.beta2);
        overlay!(beta3, self.beta3);
        overlay!(l0, self.l0);
        overlay!(l1, self.l1);
        overlay!(l2, self.l2);
        overlay!(m, self.m);
        overlay!(nu, self.nu);
        overlay!(a, self.a);
        if !self.sublevels.is_empty() {
            base.sublevels = self.sublevels.clone();
        }
        Ok(base)
    }
}

/// Reads a config file and builds the problem it describes.
pub fn load_problem(path: &Path) -> Result<ProblemSpec, ConfigError> {
    load_problem_with(path, None)
}

/// As [`load_problem`], with `graph_override` replacing the config's graph.
pub fn load_problem_with(path: &Path, graph_override: Option<&Path>) -> Result<ProblemSpec, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
    let config: ProblemConfig =
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: shown, source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    build_problem(&config, &base, graph_override)
}

/// Builds a problem from a parsed config. `graph_override` replaces the
/// config's graph path; relative paths resolve against `base_dir`.
pub fn build_problem(
    config: &ProblemConfig,
    base_dir: &Path,
    graph_override: Option<&Path>,
) -> Result<ProblemSpec, ConfigError> {
    let graph_path: PathBuf = match graph_override {
        Some(p) => p.to_path_buf(),
        None => base_dir.join(&config.graph),
    };
    let graph = WeightedGraph::load(&graph_path)?;
    build_on_graph(config, graph)
}

pub fn build_on_graph(config: &ProblemConfig, graph: WeightedGraph) -> Result<ProblemSpec, ConfigError> {
    let report = graph.validate();
    if !report.is_valid() {
        return Err(ProblemError::Graph(report).into());
    }
    let spec = match &config.preset {
        Some(preset) => build_preset(preset, graph.clone())?,
        None => build_fields(config, graph.clone())?,
    };
    let spec = match &config.hypothesis {
        Some(h) => spec.with_hypothesis(h.apply(&graph, spec.hypothesis().clone())?)?,
        None => spec,
    };
    match &config.name {
        Some(name) => {
            let mut data = spec.into_data();
            data.name = name.clone();
            Ok(ProblemSpec::new(data)?)
        }
        None => Ok(spec),
    }
}

fn build_preset(preset: &PresetConfig, graph: WeightedGraph) -> Result<ProblemSpec, ConfigError> {
    let anchor = |id: &Option<String>, field: &'static str| -> Result<usize, ConfigError> {
        vertex(&graph, id.as_deref().ok_or(ConfigError::Missing(field))?)
    };
    match preset.name.as_str() {
        "fractional" => {
            let x1 = anchor(&preset.x1, "preset.x1")?;
            let x2 = anchor(&preset.x2, "preset.x2")?;
            let l1 = preset.lambda1.ok_or(ConfigError::Missing("preset.lambda1"))?;
            let l2 = preset.lambda2.ok_or(ConfigError::Missing("preset.lambda2"))?;
            Ok(presets::fractional(graph, x1, x2, l1, l2)?)
        }
        "log-quartic" => {
            let x1 = anchor(&preset.x1, "preset.x1")?;
            let x2 = anchor(&preset.x2, "preset.x2")?;
            let lambda = match preset.lambda.ok_or(ConfigError::Missing("preset.lambda"))? {
                LambdaSpec::Value(v) => LambdaChoice::Value(v),
                LambdaSpec::Fraction { fraction_of_lambda0 } => LambdaChoice::FractionOfLambda0(fraction_of_lambda0),
            };
            Ok(presets::log_quartic(graph, x1, x2, preset.c1.unwrap_or(1.0), lambda)?)
        }
        "single-equation" => {
            let p = preset.p.ok_or(ConfigError::Missing("preset.p"))?;
            let h = preset.h.as_ref().ok_or(ConfigError::Missing("preset.h"))?.resolve(&graph)?;
            let e = preset.e.as_ref().ok_or(ConfigError::Missing("preset.e"))?.resolve(&graph)?;
            let epsilon = preset.epsilon.ok_or(ConfigError::Missing("preset.epsilon"))?;
            let m = preset.m.ok_or(ConfigError::Missing("preset.M"))?;
            Ok(presets::single_equation(graph, p, h, e, epsilon, Nonlinearity::LogCubic { m })?)
        }
        other => Err(ConfigError::Invalid(format!("unknown preset `{other}`"))),
    }
}

fn build_fields(config: &ProblemConfig, graph: WeightedGraph) -> Result<ProblemSpec, ConfigError> {
    let h1 = config.h1.as_ref().ok_or(ConfigError::Missing("h1"))?.resolve(&graph)?;
    let h2 = match &config.h2 {
        Some(h) => h.resolve(&graph)?,
        None => h1.clone(),
    };
    let n = graph.len();
    let e1 = match &config.e1 {
        Some(e) => e.resolve(&graph)?,
        None => VertexFunction::zeros(n),
    };
    let e2 = match &config.e2 {
        Some(e) => e.resolve(&graph)?,
        None => VertexFunction::zeros(n),
    };
    let nonlinearity = config.f.as_ref().ok_or(ConfigError::Missing("F"))?.resolve(&graph)?;
    let lambda1 = config.lambda1.ok_or(ConfigError::Missing("lambda1"))?;
    let lambda2 = config.lambda2.unwrap_or(lambda1);
    let hypothesis = match &config.hypothesis {
        Some(h) => h.apply(&graph, HypothesisParams::default())?,
        None => HypothesisParams::default(),
    };
    let number = |l: LambdaSpec| match l {
        LambdaSpec::Value(v) => v,
        LambdaSpec::Fraction { .. } => 1.0,
    };
    let data = ProblemData {
        name: config.name.clone().unwrap_or_else(|| "custom".into()),
        p: config.p.ok_or(ConfigError::Missing("p"))?,
        q: config.q.ok_or(ConfigError::Missing("q"))?,
        h1,
        h2,
        e1,
        e2,
        lambda1: number(lambda1),
        lambda2: number(lambda2),
        nonlinearity,
        h0: config.h0,
        hypothesis,
        graph,
    };
    let spec = ProblemSpec::new(data)?;
    let fractions = [lambda1, lambda2].map(|l| match l {
        LambdaSpec::Fraction { fraction_of_lambda0 } => Some(fraction_of_lambda0),
        LambdaSpec::Value(_) => None,
    });
    if fractions.iter().all(Option::is_none) {
        return Ok(spec);
    }
    let l0 = spec
        .hypothesis()
        .l0
        .ok_or_else(|| ConfigError::Invalid("fraction_of_lambda0 needs hypothesis.l0".into()))?;
    let lambda0 = lambda0_params(&spec, l0)?.lambda0;
    let resolve = |l: LambdaSpec| match l {
        LambdaSpec::Value(v) => v,
        LambdaSpec::Fraction { fraction_of_lambda0 } => fraction_of_lambda0 * lambda0,
    };
    Ok(spec.with_lambda(resolve(lambda1), resolve(lambda2))?)
}
