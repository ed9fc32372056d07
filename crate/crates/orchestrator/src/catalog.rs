use std::collections::HashMap;
use std::fmt::Write;

use bemas_toolbus::{ClientError, ListDetail, ParamSpec, ToolClient, ToolSpec};

/// Snapshot of the tool schemas the bus exposes, in registration order.
#[derive(Debug, Clone, Default)]
pub struct ToolCatalog {
    specs: Vec<ToolSpec>,
    index: HashMap<String, usize>,
}

/// Heading that opens every rendered schema block.
pub(crate) const BLOCK_HEAD: &str = "### tool: ";

impl ToolCatalog {
    pub fn new(specs: Vec<ToolSpec>) -> Self {
        let index = specs.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
        Self { specs, index }
    }

    pub fn from_client(client: &dyn ToolClient) -> Result<Self, ClientError> {
        Ok(Self::new(client.list_tools(ListDetail::Full)?))
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn specs(&self) -> &[ToolSpec] {
        &self.specs
    }

    /// Full schema block for one tool; empty if unknown.
    pub fn schema_block(&self, name: &str) -> String {
        let Some(spec) = self.get(name) else { return String::new() };
        let mut out = format!("{BLOCK_HEAD}{}\n", spec.name);
        if !spec.description.is_empty() {
            let _ = writeln!(out, "{}", spec.description);
        }
        if spec.params.is_empty() {
            out.push_str("Parameters: none\n");
        } else {
            out.push_str("Parameters:\n");
            for p in &spec.params {
                write_param(&mut out, p, 0);
            }
        }
        out
    }

    /// Schema blocks for `names`, separated by blank lines.
    pub fn schema_blocks<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> String {
        names.into_iter().map(|n| self.schema_block(n)).filter(|b| !b.is_empty()).collect::<Vec<_>>().join("\n")
    }

    /// Tool names whose schema block appears in `text`.
    pub fn blocks_in(&self, text: &str) -> Vec<String> {
        text.lines().filter_map(|l| l.strip_prefix(BLOCK_HEAD)).map(|n| n.trim().to_string()).collect()
    }
}

fn write_param(out: &mut String, p: &ParamSpec, depth: usize) {
    let pad = "  ".repeat(depth);
    let req = if p.required { "required" } else { "optional" };
    let kind = match p.items {
        Some(item) => format!("{} of {item}", p.kind),
        None => p.kind.to_string(),
    };
    let _ = write!(out, "{pad}- {} ({kind}, {req})", p.name);
    if !p.description.is_empty() {
        let _ = write!(out, ": {}", p.description);
    }
    if let Some(values) = &p.enum_values {
        let _ = write!(out, " [one of: {}]", values.join(", "));
    }
    if let Some(d) = &p.default {
        let _ = write!(out, " [default: {d}]");
    }
    out.push('\n');
    for f in p.fields.iter().flatten() {
        write_param(out, f, depth + 1);
    }
}
