use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// The eleven tool families exposed by the runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ToolCategory {
    #[serde(rename = "Configuration Related Tools")]
    Configuration,
    #[serde(rename = "Cluster Related Tools")]
    Cluster,
    #[serde(rename = "Building Related Tools")]
    Building,
    #[serde(rename = "HVAC System Related Tools")]
    Hvac,
    #[serde(rename = "DER System Related Tools")]
    Der,
    #[serde(rename = "Controller Related Tools")]
    Controller,
    #[serde(rename = "Disturbance Related Tools")]
    Disturbance,
    #[serde(rename = "Environment Related Tools")]
    Environment,
    #[serde(rename = "Simulation Related Tools")]
    Simulation,
    #[serde(rename = "Analysis Related Tools")]
    Analysis,
    #[serde(rename = "Comparison Related Tools")]
    Comparison,
}

impl ToolCategory {
    pub const ALL: [ToolCategory; 11] = [
        ToolCategory::Configuration,
        ToolCategory::Cluster,
        ToolCategory::Building,
        ToolCategory::Hvac,
        ToolCategory::Der,
        ToolCategory::Controller,
        ToolCategory::Disturbance,
        ToolCategory::Environment,
        ToolCategory::Simulation,
        ToolCategory::Analysis,
        ToolCategory::Comparison,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ToolCategory::Configuration => "Configuration Related Tools",
            ToolCategory::Cluster => "Cluster Related Tools",
            ToolCategory::Building => "Building Related Tools",
            ToolCategory::Hvac => "HVAC System Related Tools",
            ToolCategory::Der => "DER System Related Tools",
            ToolCategory::Controller => "Controller Related Tools",
            ToolCategory::Disturbance => "Disturbance Related Tools",
            ToolCategory::Environment => "Environment Related Tools",
            ToolCategory::Simulation => "Simulation Related Tools",
            ToolCategory::Analysis => "Analysis Related Tools",
            ToolCategory::Comparison => "Comparison Related Tools",
        }
    }
}

impl fmt::Display for ToolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    String,
    Number,
    Integer,
    Boolean,
    Enum,
    Map,
    List,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::String => "string",
            ParamKind::Number => "number",
            ParamKind::Integer => "integer",
            ParamKind::Boolean => "boolean",
            ParamKind::Enum => "enum",
            ParamKind::Map => "map",
            ParamKind::List => "list",
        };
        f.write_str(s)
    }
}

/// One argument of a tool.
///
/// `fields` optionally describes the keys of a `map` argument; when present
/// the nested map is validated as strictly as the top level. `items` gives the
/// element kind of a `list` argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<ParamSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<ParamKind>,
}

impl ParamSpec {
    fn new(name: &str, kind: ParamKind, required: bool, description: &str) -> Self {
        Self {
            name: name.to_string(),
            kind,
            required,
            description: description.to_string(),
            enum_values: None,
            default: None,
            fields: None,
            items: None,
        }
    }

    pub fn required(name: &str, kind: ParamKind, description: &str) -> Self {
        Self::new(name, kind, true, description)
    }

    pub fn optional(name: &str, kind: ParamKind, description: &str) -> Self {
        Self::new(name, kind, false, description)
    }

    pub fn with_enum<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.enum_values = Some(values.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_default(mut self, value: impl Into<Value>) -> Self {
        self.default = Some(value.into());
        self
    }

    pub fn with_fields(mut self, fields: Vec<ParamSpec>) -> Self {
        self.fields = Some(fields);
        self
    }

    pub fn with_items(mut self, kind: ParamKind) -> Self {
        self.items = Some(kind);
        self
    }

    fn check(&self, path: &str) -> Result<(), InvalidSpec> {
        let path = if path.is_empty() { self.name.clone() } else { format!("{path}.{}", self.name) };
        if !is_identifier(&self.name) {
            return Err(InvalidSpec::new(format!("parameter name '{path}' is not an identifier")));
        }
        if self.required && self.default.is_some() {
            return Err(InvalidSpec::new(format!("required parameter '{path}' has a default")));
        }
        match (&self.kind, &self.enum_values) {
            (ParamKind::Enum, None) => {
                return Err(InvalidSpec::new(format!("enum parameter '{path}' has no values")));
            }
            (ParamKind::Enum, Some(values)) if values.is_empty() => {
                return Err(InvalidSpec::new(format!("enum parameter '{path}' has no values")));
            }
            (ParamKind::Enum, Some(values)) => {
                if let Some(Value::String(d)) = &self.default {
                    if !values.contains(d) {
                        return Err(InvalidSpec::new(format!("default '{d}' of '{path}' is not an enum value")));
                    }
                }
            }
            _ => {}
        }
        if let Some(fields) = &self.fields {
            if self.kind != ParamKind::Map {
                return Err(InvalidSpec::new(format!("'{path}' declares fields but is not a map")));
            }
            check_unique(fields.iter().map(|p| p.name.as_str()), &path)?;
            for field in fields {
                field.check(&path)?;
            }
        }
        if self.items.is_some() && self.kind != ParamKind::List {
            return Err(InvalidSpec::new(format!("'{path}' declares items but is not a list")));
        }
        Ok(())
    }
}

/// Machine-readable description of a tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub category: ToolCategory,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<ParamSpec>,
}

impl ToolSpec {
    pub fn new(name: &str, category: ToolCategory, description: &str) -> Self {
        Self { name: name.to_string(), description: description.to_string(), category, params: Vec::new() }
    }

    pub fn param(mut self, param: ParamSpec) -> Self {
        self.params.push(param);
        self
    }

    pub fn param_named(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<(), InvalidSpec> {
        if !is_identifier(&self.name) {
            return Err(InvalidSpec::new(format!("tool name '{}' is not an identifier", self.name)));
        }
        check_unique(self.params.iter().map(|p| p.name.as_str()), &self.name)?;
        for p in &self.params {
            p.check("")?;
        }
        Ok(())
    }

    /// Name and category only.
    pub fn stripped(&self) -> ToolSpec {
        ToolSpec { name: self.name.clone(), description: String::new(), category: self.category, params: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid tool spec: {0}")]
pub struct InvalidSpec(pub String);

impl InvalidSpec {
    fn new(msg: String) -> Self {
        Self(msg)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>, owner: &str) -> Result<(), InvalidSpec> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(InvalidSpec::new(format!("duplicate parameter '{n}' in '{owner}'")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_without_values_is_rejected() {
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "").param(ParamSpec::optional("mode", ParamKind::Enum, ""));
        assert!(spec.validate().is_err());
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "")
            .param(ParamSpec::optional("mode", ParamKind::Enum, "").with_enum(Vec::<String>::new()));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn required_with_default_is_rejected() {
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "")
            .param(ParamSpec::required("x", ParamKind::Number, "").with_default(1.0));
        let err = spec.validate().unwrap_err();
        assert!(err.0.contains("required parameter 'x'"));
    }

    #[test]
    fn nested_fields_are_checked() {
        let spec = ToolSpec::new("t", ToolCategory::Hvac, "").param(
            ParamSpec::optional("cfg", ParamKind::Map, "").with_fields(vec![ParamSpec::optional(
                "ctrl",
                ParamKind::Enum,
                "",
            )]),
        );
        assert_eq!(spec.validate().unwrap_err().0, "enum parameter 'cfg.ctrl' has no values");
    }

    #[test]
    fn category_serializes_as_label() {
        let v = serde_json::to_value(ToolCategory::Hvac).unwrap();
        assert_eq!(v, "HVAC System Related Tools");
        for c in ToolCategory::ALL {
            assert_eq!(serde_json::to_value(c).unwrap(), c.label());
        }
    }

    #[test]
    fn stripped_spec_omits_schema() {
        let spec = ToolSpec::new("config_list", ToolCategory::Configuration, "List configurations")
            .param(ParamSpec::optional("x", ParamKind::String, "x"));
        let json = serde_json::to_string(&spec.stripped()).unwrap();
        assert_eq!(json, r#"{"name":"config_list","category":"Configuration Related Tools"}"#);
    }
}
