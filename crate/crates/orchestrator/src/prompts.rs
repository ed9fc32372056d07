use std::path::Path;

/// The editable prompt templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    Concierge,
    Format,
    PlanC1,
    PlanC2Stage1,
    PlanC2Stage2,
    PlanD,
    SpecialistCheck,
    SpecialistPlan,
    SpecialistReport,
    PoolReview,
    Retry,
}

impl Template {
    pub const ALL: [Template; 11] = [
        Template::Concierge,
        Template::Format,
        Template::PlanC1,
        Template::PlanC2Stage1,
        Template::PlanC2Stage2,
        Template::PlanD,
        Template::SpecialistCheck,
        Template::SpecialistPlan,
        Template::SpecialistReport,
        Template::PoolReview,
        Template::Retry,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Template::Concierge => "concierge.txt",
            Template::Format => "format.txt",
            Template::PlanC1 => "plan_c1.txt",
            Template::PlanC2Stage1 => "plan_c2_stage1.txt",
            Template::PlanC2Stage2 => "plan_c2_stage2.txt",
            Template::PlanD => "plan_d.txt",
            Template::SpecialistCheck => "specialist_check.txt",
            Template::SpecialistPlan => "specialist_plan.txt",
            Template::SpecialistReport => "specialist_report.txt",
            Template::PoolReview => "pool_review.txt",
            Template::Retry => "retry.txt",
        }
    }

    pub fn shipped(self) -> &'static str {
        match self {
            Template::Concierge => include_str!("../prompts/concierge.txt"),
            Template::Format => include_str!("../prompts/format.txt"),
            Template::PlanC1 => include_str!("../prompts/plan_c1.txt"),
            Template::PlanC2Stage1 => include_str!("../prompts/plan_c2_stage1.txt"),
            Template::PlanC2Stage2 => include_str!("../prompts/plan_c2_stage2.txt"),
            Template::PlanD => include_str!("../prompts/plan_d.txt"),
            Template::SpecialistCheck => include_str!("../prompts/specialist_check.txt"),
            Template::SpecialistPlan => include_str!("../prompts/specialist_plan.txt"),
            Template::SpecialistReport => include_str!("../prompts/specialist_report.txt"),
            Template::PoolReview => include_str!("../prompts/pool_review.txt"),
            Template::Retry => include_str!("../prompts/retry.txt"),
        }
    }

    /// First line of the shipped template. Scripted backends key on it.
    pub fn heading(self) -> &'static str {
        self.shipped().lines().next().unwrap_or_default()
    }

    fn index(self) -> usize {
        Template::ALL.iter().position(|t| *t == self).expect("listed")
    }
}

/// One text per template.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    texts: Vec<String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self { texts: Template::ALL.iter().map(|t| t.shipped().to_string()).collect() }
    }
}

impl PromptSet {
    /// Shipped templates, overridden by any same-named file in `dir`.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::default();
        for t in Template::ALL {
            let path = dir.join(t.file_name());
            if path.is_file() {
                set.texts[t.index()] = std::fs::read_to_string(&path)?;
            }
        }
        Ok(set)
    }

    /// Writes every template into `dir`.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in Template::ALL {
            std::fs::write(dir.join(t.file_name()), self.get(t))?;
        }
        Ok(())
    }

    pub fn get(&self, t: Template) -> &str {
        &self.texts[t.index()]
    }

    pub fn set(&mut self, t: Template, text: impl Into<String>) {
        self.texts[t.index()] = text.into();
    }

    pub fn render(&self, t: Template, vars: &[(&str, &str)]) -> String {
        render(self.get(t), vars)
    }
}

/// Replaces `{name}` for every `name` in `vars`, in one left-to-right pass.
///
/// Substituted text is never rescanned, and braces that do not enclose a
/// known name are kept as they are.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
