//! Vertex function serialization: JSON objects `{"id": value}` and two-column
//! CSV `id,value`. Both use shortest round-trip float formatting, so a write
//! followed by a read reproduces every value bit for bit.

use std::io::{Read, Write};

use serde_json::{Map, Value};

use crate::calculus::VertexFunction;
use crate::graph::WeightedGraph;

#[derive(Debug, thiserror::Error)]
pub enum VertexIoError {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` is missing a value")]
    MissingVertex(String),
    #[error("vertex `{0}` appears twice")]
    Repeated(String),
    #[error("value for vertex `{id}` is not a finite number")]
    NotANumber { id: String },
    #[error("expected a JSON object keyed by vertex id")]
    NotAnObject,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// JSON object keyed by vertex id, in vertex order.
pub fn to_json_map(g: &WeightedGraph, f: &VertexFunction) -> Value {
    let mut map = Map::with_capacity(g.len());
    for (id, &value) in g.ids().iter().zip(f.values()) {
        map.insert(id.clone(), Value::from(value));
    }
    Value::Object(map)
}

/// Reads a JSON object; every vertex must be present exactly once.
pub fn from_json_map(g: &WeightedGraph, value: &Value) -> Result<VertexFunction, VertexIoError> {
    let map = value.as_object().ok_or(VertexIoError::NotAnObject)?;
    let mut out = vec![None; g.len()];
    for (id, v) in map {
        let x = g.index_of(id).map_err(|_| VertexIoError::UnknownVertex(id.clone()))?;
        let number = v
            .as_f64()
            .filter(|n| n.is_finite())
            .ok_or_else(|| VertexIoError::NotANumber { id: id.clone() })?;
        out[x] = Some(number);
    }
    collect(g, out)
}

pub fn from_json_str(g: &WeightedGraph, text: &str) -> Result<VertexFunction, VertexIoError> {
    from_json_map(g, &serde_json::from_str(text)?)
}

fn collect(g: &WeightedGraph, values: Vec<Option<f64>>) -> Result<VertexFunction, VertexIoError> {
    values
        .into_iter()
        .enumerate()
        .map(|(x, v)| v.ok_or_else(|| VertexIoError::MissingVertex(g.id(x).to_owned())))
        .collect::<Result<Vec<_>, _>>()
        .map(VertexFunction)
}

/// Writes `id,value` rows with an `id,value` header.
pub fn write_csv<W: Write>(g: &WeightedGraph, f: &VertexFunction, out: W) -> Result<(), VertexIoError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["id", "value"])?;
    for (id, value) in g.ids().iter().zip(f.values()) {
        writer.write_record([id.as_str(), &value.to_string()])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(g: &WeightedGraph, input: R) -> Result<VertexFunction, VertexIoError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = vec![None; g.len()];
    for record in reader.records() {
        let record = record?;
        let id = record.get(0).unwrap_or_default().to_owned();
        let x = g.index_of(&id).map_err(|_| VertexIoError::UnknownVertex(id.clone()))?;
        if out[x].is_some() {
            return Err(VertexIoError::Repeated(id));
        }
        let value: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| VertexIoError::NotANumber { id: id.clone() })?;
        out[x] = Some(value);
    }
    collect(g, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_round_trip_is_exact(values in proptest::collection::vec(-1e300f64..1e300, 5)) {
            let g = families::path(5);
            let f = VertexFunction(values);
            let text = serde_json::to_string(&to_json_map(&g, &f)).unwrap();
            let back = from_json_str(&g, &text).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn csv_round_trip_is_exact(values in proptest::collection::vec(proptest::num::f64::NORMAL, 4)) {
            let g = families::cycle(4);
            let f = VertexFunction(values);
            let mut buf = Vec::new();
            write_csv(&g, &f, &mut buf).unwrap();
            let back = read_csv(&g, buf.as_slice()).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn missing_and_unknown_ids() {
        let g = families::path(2);
        assert!(matches!(from_json_str(&g, r#"{"v0": 1}"#), Err(VertexIoError::MissingVertex(id)) if id == "v1"));
        assert!(matches!(
            from_json_str(&g, r#"{"v0": 1, "v1": 2, "zz": 3}"#),
            Err(VertexIoError::UnknownVertex(_))
        ));
        assert!(matches!(read_csv(&g, "id,value\nv0,1\nv0,2\n".as_bytes()), Err(VertexIoError::Repeated(_))));
    }
}
