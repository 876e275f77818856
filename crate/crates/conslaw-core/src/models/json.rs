//! JSON serialization of specs and parameters.
//!
//! Specs serialize through their serde derives (tagged by "kind", dimensions
//! as named fields). Parameters serialize as a JSON object mapping each
//! registry tensor name to a nested array matching its shape, row-major.

use alloc::string::String;
use alloc::vec::Vec;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::{param_registry, params_for_spec, BlockSpec, ParamVec};
use crate::error::Result;
use crate::invalid_input;
use crate::numerics::Mat;

/// A matrix serialized as a JSON array of row arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct MatRows(pub Mat);

impl Serialize for MatRows {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.0.rows).map(|i| self.0.row(i)).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MatRows {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend(row);
        }
        Ok(MatRows(Mat { rows: r, cols: c, data }))
    }
}

fn nest(shape: &[usize], flat: &[f64]) -> Value {
    if shape.len() <= 1 {
        return Value::from(flat.to_vec());
    }
    let chunk = flat.len() / shape[0];
    Value::from(
        (0..shape[0])
            .map(|i| nest(&shape[1..], &flat[i * chunk..(i + 1) * chunk]))
            .collect::<Vec<Value>>(),
    )
}

fn flatten(shape: &[usize], v: &Value, out: &mut Vec<f64>) -> Result<()> {
    if shape.is_empty() {
        return match v.as_f64() {
            Some(x) => {
                out.push(x);
                Ok(())
            }
            None => Err(invalid_input!("expected a number in tensor payload")),
        };
    }
    let arr = v
        .as_array()
        .ok_or_else(|| invalid_input!("expected an array of length {}", shape[0]))?;
    if arr.len() != shape[0] {
        return Err(invalid_input!("array length {} does not match shape {}", arr.len(), shape[0]));
    }
    for item in arr {
        flatten(&shape[1..], item, out)?;
    }
    Ok(())
}

/// Serializes θ for a spec as `{ "<tensor name>": <nested row-major array> }`.
pub fn params_to_json_string(spec: &BlockSpec, theta: &[f64]) -> Result<String> {
    if theta.len() != super::param_dim(spec) {
        return Err(invalid_input!(
            "theta has {} entries, spec needs {}",
            theta.len(),
            super::param_dim(spec)
        ));
    }
    let mut obj = serde_json::Map::new();
    for info in param_registry(spec) {
        obj.insert(info.name.clone(), nest(&info.shape, &theta[info.range()]));
    }
    serde_json::to_string(&Value::Object(obj)).map_err(|e| invalid_input!("json encode: {e}"))
}

/// Parses parameters for a spec from the object form produced by
/// [`params_to_json_string`]; every registry tensor must be present with
/// exactly matching shape.
pub fn params_from_json_str(spec: &BlockSpec, s: &str) -> Result<ParamVec> {
    let v: Value = serde_json::from_str(s).map_err(|e| invalid_input!("json parse: {e}"))?;
    let obj = v.as_object().ok_or_else(|| invalid_input!("params JSON must be an object"))?;
    let registry = param_registry(spec);
    let mut data = Vec::with_capacity(super::param_dim(spec));
    for info in &registry {
        let val = obj
            .get(&info.name)
            .ok_or_else(|| invalid_input!("missing tensor '{}'", info.name))?;
        flatten(&info.shape, val, &mut data)
            .map_err(|e| invalid_input!("tensor '{}': {e}", info.name))?;
    }
    for key in obj.keys() {
        if !registry.iter().any(|t| &t.name == key) {
            return Err(invalid_input!("unknown tensor '{}' in params JSON", key));
        }
    }
    params_for_spec(spec, data)
}

/// Serializes a spec to JSON.
pub fn spec_to_json_string(spec: &BlockSpec) -> Result<String> {
    serde_json::to_string(spec).map_err(|e| invalid_input!("json encode: {e}"))
}

/// Parses and validates a spec from JSON.
pub fn spec_from_json_str(s: &str) -> Result<BlockSpec> {
    let spec: BlockSpec =
        serde_json::from_str(s).map_err(|e| invalid_input!("json parse: {e}"))?;
    super::validate_spec(&spec)?;
    Ok(spec)
}
