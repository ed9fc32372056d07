//! Accuracy metrics over expected and executed traces.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bemas_orchestrator::values::{flatten, values_match};
use bemas_orchestrator::JsonMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("expected set is empty")]
    EmptyExpected,
    #[error("no expected parameters")]
    NoExpectedParams,
}

/// `hits / total` kept as integers so scores compare exactly.
#[derive(Debug, Clone, Copy, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub hits: usize,
    pub total: usize,
}

impl Ratio {
    pub fn new(hits: usize, total: usize) -> Self {
        assert!(total > 0 && hits <= total, "ratio {hits}/{total}");
        Self { hits, total }
    }

    pub fn value(self) -> f64 {
        self.hits as f64 / self.total as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.hits * other.total == other.hits * self.total
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self.hits * other.total).cmp(&(other.hits * self.total)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.hits, self.total)
    }
}

fn set<S: AsRef<str>>(items: &[S]) -> BTreeSet<&str> {
    items.iter().map(AsRef::as_ref).collect()
}

/// Share of expected items that occur in `actual`. Extra actual items are free.
pub fn recall<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Result<Ratio, MetricError> {
    let e = set(expected);
    if e.is_empty() {
        return Err(MetricError::EmptyExpected);
    }
    let a = set(actual);
    Ok(Ratio::new(e.intersection(&a).count(), e.len()))
}

pub fn acc_tool<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Result<Ratio, MetricError> {
    recall(expected, actual)
}

pub fn acc_agent<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Result<Ratio, MetricError> {
    recall(expected, actual)
}

/// |E ∩ A| / |E ∪ A|.
pub fn jaccard<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Result<Ratio, MetricError> {
    let e = set(expected);
    if e.is_empty() {
        return Err(MetricError::EmptyExpected);
    }
    let a = set(actual);
    Ok(Ratio::new(e.intersection(&a).count(), e.union(&a).count()))
}

/// Which formula scores tool selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolMetric {
    #[default]
    Recall,
    Jaccard,
}

impl ToolMetric {
    pub fn score<S: AsRef<str>, T: AsRef<str>>(self, expected: &[S], actual: &[T]) -> Result<Ratio, MetricError> {
        match self {
            ToolMetric::Recall => recall(expected, actual),
            ToolMetric::Jaccard => jaccard(expected, actual),
        }
    }
}

/// One step of a plan: who acted and with which tools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSig {
    pub agent: String,
    pub tools: BTreeSet<String>,
}

impl StepSig {
    pub fn new<S: AsRef<str>>(agent: &str, tools: &[S]) -> Self {
        Self { agent: agent.to_string(), tools: tools.iter().map(|t| t.as_ref().to_string()).collect() }
    }

    /// Same agent, and every expected tool was used.
    pub fn satisfied_by(&self, actual: &StepSig) -> bool {
        self.agent == actual.agent && self.tools.is_subset(&actual.tools)
    }
}

/// Largest number of expected steps matched by executed steps in the same
/// relative order, each executed step used at most once, over |expected|.
pub fn acc_plan(expected: &[StepSig], actual: &[StepSig]) -> Result<Ratio, MetricError> {
    if expected.is_empty() {
        return Err(MetricError::EmptyExpected);
    }
    let (n, m) = (expected.len(), actual.len());
    // best[i][j]: matches using expected[..i] and actual[..j]
    let mut best = vec![vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            let skip = best[i - 1][j].max(best[i][j - 1]);
            let take = if expected[i - 1].satisfied_by(&actual[j - 1]) { best[i - 1][j - 1] + 1 } else { 0 };
            best[i][j] = skip.max(take);
        }
    }
    Ok(Ratio::new(best[n][m], n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamScore {
    pub key: Ratio,
    pub val: Ratio,
}

/// Key and value accuracy of executed calls against expected arguments.
///
/// Every expected (tool, key) pair counts once in the denominator. For each
/// expected call the executed call to the same tool with the most shared keys
/// is chosen, then the most matching values, then the earliest. Expected
/// tools that were never called score zero on all their keys.
pub fn acc_params(expected: &[(String, JsonMap)], executed: &[(String, JsonMap)]) -> Result<ParamScore, MetricError> {
    let executed: Vec<_> = executed.iter().map(|(t, p)| (t.as_str(), flatten(p))).collect();
    let (mut total, mut keys, mut vals) = (0, 0, 0);
    for (tool, params) in expected {
        let want = flatten(params);
        if want.is_empty() {
            continue;
        }
        total += want.len();
        let mut best: Option<(usize, usize)> = None;
        for (t, got) in &executed {
            if t != tool {
                continue;
            }
            let k = want.keys().filter(|k| got.contains_key(*k)).count();
            let v = want.iter().filter(|(k, v)| got.get(*k).is_some_and(|g| values_match(v, g))).count();
            if best.is_none_or(|b| (k, v) > b) {
                best = Some((k, v));
            }
        }
        if let Some((k, v)) = best {
            keys += k;
            vals += v;
        }
    }
    if total == 0 {
        return Err(MetricError::NoExpectedParams);
    }
    Ok(ParamScore { key: Ratio::new(keys, total), val: Ratio::new(vals, total) })
}

/// Unweighted mean of plan, agent, tool and the mean of key and value accuracy.
pub fn combined(plan: f64, agent: f64, tool: f64, key: f64, val: f64) -> f64 {
    (plan + agent + tool + (key + val) / 2.0) / 4.0
}
