use std::fmt;

use serde_json::{Number, Value};
use thiserror::Error;

use crate::spec::{ParamKind, ParamSpec, ToolSpec};
use crate::JsonMap;

/// A single reason an argument map does not satisfy a tool schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingRequired { param: String },
    UnknownParam { param: String },
    TypeMismatch { param: String, expected: ParamKind, found: String },
    NotInEnum { param: String, value: String, allowed: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRequired { param } => write!(f, "missing required {param}"),
            Violation::UnknownParam { param } => write!(f, "unknown param {param}"),
            Violation::TypeMismatch { param, expected, found } => {
                write!(f, "type mismatch for {param}: expected {expected}, got {found}")
            }
            Violation::NotInEnum { param, value, allowed } => {
                write!(f, "invalid value '{value}' for {param}: expected one of {}", allowed.join("|"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unknown tool: {0}")]
    UnknownTool(String),
    #[error("validation failed: {}", join_violations(.0))]
    Violations(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks `args` against `spec` in strict mode and returns the normalized
/// arguments handed to the tool handler.
///
/// Normalization coerces numeric strings for `number`/`integer` params and
/// `"true"`/`"false"` for booleans, drops explicit nulls on optional params
/// and fills declared defaults. Violations are collected, not short-circuited.
pub fn validate_args(spec: &ToolSpec, args: &JsonMap) -> Result<JsonMap, Vec<Violation>> {
    let mut violations = Vec::new();
    let normalized = check_map(&spec.params, args, "", &mut violations);
    if violations.is_empty() {
        Ok(normalized)
    } else {
        Err(violations)
    }
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn check_map(params: &[ParamSpec], args: &JsonMap, prefix: &str, out: &mut Vec<Violation>) -> JsonMap {
    let mut normalized = JsonMap::new();
    for key in args.keys() {
        if !params.iter().any(|p| &p.name == key) {
            out.push(Violation::UnknownParam { param: join(prefix, key) });
        }
    }
    for p in params {
        let path = join(prefix, &p.name);
        match args.get(&p.name) {
            None | Some(Value::Null) => {
                if p.required {
                    out.push(Violation::MissingRequired { param: path });
                } else if let Some(d) = &p.default {
                    normalized.insert(p.name.clone(), d.clone());
                }
            }
            Some(v) => {
                if let Some(v) = check_value(p, v, &path, out) {
                    normalized.insert(p.name.clone(), v);
                }
            }
        }
    }
    normalized
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "list",
        Value::Object(_) => "map",
    }
}

fn coerce_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
        _ => None,
    }
}

fn coerce_integer(v: &Value) -> Option<i64> {
    if let Value::Number(n) = v {
        if let Some(i) = n.as_i64() {
            return Some(i);
        }
    }
    let x = coerce_number(v)?;
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Some(x as i64)
    } else {
        None
    }
}

fn coerce_bool(v: &Value) -> Option<bool> {
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

fn check_value(p: &ParamSpec, v: &Value, path: &str, out: &mut Vec<Violation>) -> Option<Value> {
    let mismatch = |out: &mut Vec<Violation>| {
        out.push(Violation::TypeMismatch {
            param: path.to_string(),
            expected: p.kind,
            found: type_name(v).to_string(),
        });
        None
    };
    match p.kind {
        ParamKind::String => match v {
            Value::String(_) => Some(v.clone()),
            _ => mismatch(out),
        },
        ParamKind::Number => match coerce_number(v) {
            Some(x) => match v {
                Value::Number(_) => Some(v.clone()),
                _ => Number::from_f64(x).map(Value::Number),
            },
            None => mismatch(out),
        },
        ParamKind::Integer => match coerce_integer(v) {
            Some(i) => Some(Value::from(i)),
            None => mismatch(out),
        },
        ParamKind::Boolean => match coerce_bool(v) {
            Some(b) => Some(Value::Bool(b)),
            None => mismatch(out),
        },
        ParamKind::Enum => {
            let allowed = p.enum_values.clone().unwrap_or_default();
            match v {
                Value::String(s) if allowed.iter().any(|a| a == s) => Some(v.clone()),
                Value::String(s) => {
                    out.push(Violation::NotInEnum { param: path.to_string(), value: s.clone(), allowed });
                    None
                }
                _ => mismatch(out),
            }
        }
        ParamKind::Map => match v {
            Value::Object(m) => match &p.fields {
                Some(fields) => Some(Value::Object(check_map(fields, m, path, out))),
                None => Some(v.clone()),
            },
            _ => mismatch(out),
        },
        ParamKind::List => match v {
            Value::Array(items) => match p.items {
                Some(kind) => {
                    let item_spec = ParamSpec::optional(&p.name, kind, "");
                    let before = out.len();
                    let checked: Vec<Value> = items
                        .iter()
                        .enumerate()
                        .filter_map(|(i, item)| check_value(&item_spec, item, &format!("{path}[{i}]"), out))
                        .collect();
                    (out.len() == before).then_some(Value::Array(checked))
                }
                None => Some(v.clone()),
            },
            _ => mismatch(out),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ToolCategory;
    use serde_json::json;

    fn hvac_add() -> ToolSpec {
        ToolSpec::new("hvac_add", ToolCategory::Hvac, "Add a new HVAC system to a building cluster")
            .param(ParamSpec::required("system_id", ParamKind::String, "id"))
            .param(ParamSpec::required("cluster_id", ParamKind::String, "cluster"))
            .param(ParamSpec::optional("system_config", ParamKind::Map, "config").with_fields(vec![
                ParamSpec::optional("fan_ctrl", ParamKind::Map, "fan control").with_fields(vec![
                    ParamSpec::optional("ctrl_type", ParamKind::Enum, "").with_enum(["constant", "staged", "vfd"]),
                    ParamSpec::optional("stages", ParamKind::Integer, ""),
                ]),
            ]))
    }

    fn obj(v: Value) -> JsonMap {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn missing_required_cluster_id() {
        let err = validate_args(&hvac_add(), &obj(json!({"system_id": "fcu1"}))).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].to_string(), "missing required cluster_id");
    }

    #[test]
    fn unknown_extra_key() {
        let args = obj(json!({"system_id": "a", "cluster_id": "c1", "foo": 1}));
        let err = validate_args(&hvac_add(), &args).unwrap_err();
        assert_eq!(err, vec![Violation::UnknownParam { param: "foo".into() }]);
        assert_eq!(err[0].to_string(), "unknown param foo");
    }

    #[test]
    fn nested_enum_membership() {
        let allowed = ["constant", "staged", "vfd"];
        for candidate in ["vfd", "turbo", "constant", "VFD", "staged"] {
            let args = obj(json!({
                "system_id": "a", "cluster_id": "c1",
                "system_config": {"fan_ctrl": {"ctrl_type": candidate}}
            }));
            let res = validate_args(&hvac_add(), &args);
            // direct set membership oracle
            assert_eq!(res.is_ok(), allowed.contains(&candidate), "{candidate}");
        }
        let args = obj(json!({
            "system_id": "a", "cluster_id": "c1",
            "system_config": {"fan_ctrl": {"ctrl_type": "turbo"}}
        }));
        let err = validate_args(&hvac_add(), &args).unwrap_err();
        assert!(matches!(&err[0], Violation::NotInEnum { param, .. } if param == "system_config.fan_ctrl.ctrl_type"));
    }

    #[test]
    fn coercions_and_mismatches() {
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "")
            .param(ParamSpec::optional("x", ParamKind::Number, ""))
            .param(ParamSpec::optional("n", ParamKind::Integer, ""))
            .param(ParamSpec::optional("b", ParamKind::Boolean, ""))
            .param(ParamSpec::optional("d", ParamKind::Number, "").with_default(900));
        let ok = validate_args(&spec, &obj(json!({"x": "4.5", "n": "3", "b": "true"}))).unwrap();
        assert_eq!(ok["x"], json!(4.5));
        assert_eq!(ok["n"], json!(3));
        assert_eq!(ok["b"], json!(true));
        assert_eq!(ok["d"], json!(900));

        let err = validate_args(&spec, &obj(json!({"x": "warm", "n": 2.5, "b": "yes"}))).unwrap_err();
        assert_eq!(err.len(), 3);
        assert!(err.iter().all(|v| matches!(v, Violation::TypeMismatch { .. })));
    }

    #[test]
    fn null_optional_is_absent_and_null_required_is_missing() {
        let args = obj(json!({"system_id": null, "cluster_id": "c1", "system_config": null}));
        let err = validate_args(&hvac_add(), &args).unwrap_err();
        assert_eq!(err, vec![Violation::MissingRequired { param: "system_id".into() }]);
    }

    #[test]
    fn list_items_checked() {
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "")
            .param(ParamSpec::required("ids", ParamKind::List, "").with_items(ParamKind::String));
        assert!(validate_args(&spec, &obj(json!({"ids": ["a", "b"]}))).is_ok());
        let err = validate_args(&spec, &obj(json!({"ids": ["a", 3]}))).unwrap_err();
        assert!(err[0].to_string().contains("ids[1]"));
    }
}
