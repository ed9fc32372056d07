use serde_json::Value;

/// Pulls the JSON object out of an LLM reply.
///
/// Accepts a bare object, an object inside a fenced code block, or an object
/// surrounded by prose (first `{` to last `}`).
pub fn extract_json(text: &str) -> Result<Value, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err("empty reply".into());
    }
    let mut candidates = vec![trimmed];
    if let Some(start) = trimmed.find("```") {
        let body = &trimmed[start + 3..];
        let body = body.strip_prefix("json").unwrap_or(body);
        if let Some(end) = body.find("```") {
            candidates.push(body[..end].trim());
        }
    }
    if let (Some(a), Some(b)) = (trimmed.find('{'), trimmed.rfind('}')) {
        if a < b {
            candidates.push(&trimmed[a..=b]);
        }
    }
    let mut last_err = String::new();
    for c in candidates {
        match serde_json::from_str::<Value>(c) {
            Ok(v @ Value::Object(_)) => return Ok(v),
            Ok(other) => last_err = format!("expected a JSON object, got {}", kind(&other)),
            Err(e) => last_err = format!("invalid JSON: {e}"),
        }
    }
    Err(last_err)
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

/// Decodes the JSON object in `text` into `T`.
pub(crate) fn decode<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    let v = extract_json(text)?;
    serde_json::from_value(v).map_err(|e| format!("unexpected JSON shape: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_fenced_and_embedded() {
        assert_eq!(extract_json(r#"{"a": 1}"#).unwrap()["a"], 1);
        assert_eq!(extract_json("```json\n{\"a\": 2}\n```").unwrap()["a"], 2);
        assert_eq!(extract_json("Sure! {\"a\": 3} hope that helps").unwrap()["a"], 3);
    }

    #[test]
    fn rejects_non_objects() {
        assert!(extract_json("").is_err());
        assert!(extract_json("[1, 2]").unwrap_err().contains("array"));
        assert!(extract_json("no json here").is_err());
        assert!(extract_json("{broken").is_err());
    }
}
