//! JSON form of [`SolveReport`]:
//!
//! ```json
//! {"state": {"u": {"v0": 0.1, ...}, "v": {...}}, "energy": -0.2,
//!  "residual_sup": 3e-10, "iterations": 41, "classification": "nontrivial",
//!  "bound_checks": [{"name": "sup_bound_u", "lhs": 0.4, "rhs": 1.41, "holds": true}],
//!  "mode": "minimize"}
//! ```
//!
//! Vertex maps follow graph order; numbers round-trip exactly.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::calculus::VertexFunction;
use crate::functional::{self, FunctionalError, State};
use crate::graph::WeightedGraph;
use crate::problem::ProblemSpec;
use crate::solver::{BoundCheck, Classification, Mode, SolveReport};
use crate::vertex_io::{self, VertexIoError};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report state: {0}")]
    State(#[from] VertexIoError),
    #[error("unknown {field} `{value}`")]
    UnknownName { field: &'static str, value: String },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("solution CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Serialize, Deserialize)]
struct BoundRecord {
    name: String,
    lhs: Option<f64>,
    rhs: Option<f64>,
    holds: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    u: Value,
    v: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportRecord {
    state: StateRecord,
    energy: f64,
    residual_sup: f64,
    iterations: usize,
    classification: String,
    bound_checks: Vec<BoundRecord>,
    mode: String,
}

pub fn state_to_json(graph: &WeightedGraph, state: &State) -> Value {
    let mut map = Map::new();
    map.insert("u".into(), vertex_io::to_json_map(graph, &state.u));
    map.insert("v".into(), vertex_io::to_json_map(graph, &state.v));
    Value::Object(map)
}

fn record(graph: &WeightedGraph, report: &SolveReport) -> ReportRecord {
    ReportRecord {
        state: StateRecord {
            u: vertex_io::to_json_map(graph, &report.state.u),
            v: vertex_io::to_json_map(graph, &report.state.v),
        },
        energy: report.energy,
        residual_sup: report.residual_sup,
        iterations: report.iterations,
        classification: report.classification.as_str().into(),
        bound_checks: report
            .bound_checks
            .iter()
            .map(|b| BoundRecord { name: b.name.clone(), lhs: b.lhs, rhs: b.rhs, holds: b.holds })
            .collect(),
        mode: report.mode.as_str().into(),
    }
}

pub fn to_value(graph: &WeightedGraph, report: &SolveReport) -> Value {
    serde_json::to_value(record(graph, report)).unwrap_or(Value::Null)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string(graph: &WeightedGraph, report: &SolveReport) -> String {
    let mut text = serde_json::to_string_pretty(&record(graph, report)).unwrap_or_default();
    text.push('\n');
    text
}

pub fn from_json_str(graph: &WeightedGraph, text: &str) -> Result<SolveReport, ReportError> {
    let record: ReportRecord = serde_json::from_str(text)?;
    let channel = |map: Value| -> Result<VertexFunction, ReportError> {
        Ok(vertex_io::from_json_map(graph, &map)?)
    };
    let state = State::new(channel(record.state.u)?, channel(record.state.v)?);
    let classification = Classification::parse(&record.classification).ok_or(ReportError::UnknownName {
        field: "classification",
        value: record.classification.clone(),
    })?;
    let mode = Mode::parse(&record.mode)
        .ok_or(ReportError::UnknownName { field: "mode", value: record.mode.clone() })?;
    Ok(SolveReport {
        state,
        energy: record.energy,
        residual_sup: record.residual_sup,
        iterations: record.iterations,
        classification,
        bound_checks: record
            .bound_checks
            .into_iter()
            .map(|b| BoundCheck { name: b.name, lhs: b.lhs, rhs: b.rhs, holds: b.holds })
            .collect(),
        mode,
    })
}

/// Writes `vertex_id,u,v,r_u,r_v` rows, residuals recomputed from `state`.
pub fn write_solution_csv<W: std::io::Write>(spec: &ProblemSpec, state: &State, out: W) -> Result<(), ReportError> {
    let residual = functional::residual(spec, state)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["vertex_id", "u", "v", "r_u", "r_v"])?;
    for (x, id) in spec.graph().ids().iter().enumerate() {
        let row = [state.u[x], state.v[x], residual.r_u[x], residual.r_v[x]].map(|value| value.to_string());
        writer.write_record(std::iter::once(id.as_str()).chain(row.iter().map(String::as_str)))?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
