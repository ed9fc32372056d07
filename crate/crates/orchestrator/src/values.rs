//! Type-aware parameter comparison shared by deviation checks and scoring.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::JsonMap;

/// Relative tolerance for numeric equality.
pub const REL_TOL: f64 = 1e-6;

/// Flattens nested maps into dotted keys. Lists and scalars are leaves;
/// an empty nested map is kept as a leaf.
pub fn flatten(map: &JsonMap) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    flatten_into(map, "", &mut out);
    out
}

fn flatten_into(map: &JsonMap, prefix: &str, out: &mut BTreeMap<String, Value>) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) if !inner.is_empty() => flatten_into(inner, &key, out),
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    }
}

fn as_bool(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.trim() {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

pub fn numbers_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

/// Type-aware equality of an expected and an actual value.
///
/// Numbers compare within [`REL_TOL`] once numeric strings are coerced;
/// booleans accept `"true"`/`"false"`; strings compare trimmed and
/// case-sensitive; lists compare element-wise; maps compare flattened.
pub fn values_match(expected: &Value, actual: &Value) -> bool {
    match (expected, actual) {
        (Value::Number(_), _) | (_, Value::Number(_)) => match (as_number(expected), as_number(actual)) {
            (Some(a), Some(b)) => numbers_close(a, b),
            _ => false,
        },
        (Value::Bool(_), _) | (_, Value::Bool(_)) => match (as_bool(expected), as_bool(actual)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        },
        (Value::String(a), Value::String(b)) => a.trim() == b.trim(),
        (Value::Array(a), Value::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_match(x, y)),
        (Value::Object(a), Value::Object(b)) => maps_match(a, b),
        (Value::Null, Value::Null) => true,
        _ => false,
    }
}

/// Same flattened key set and matching values at every key.
pub fn maps_match(expected: &JsonMap, actual: &JsonMap) -> bool {
    let e = flatten(expected);
    let a = flatten(actual);
    e.len() == a.len() && e.iter().all(|(k, v)| a.get(k).is_some_and(|w| values_match(v, w)))
}
