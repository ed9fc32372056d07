//! Post-run metrics and pairwise comparison of two runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::RuntimeError;
use crate::sim::SimulationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facet {
    Energy,
    Cost,
    Comfort,
    Flexibility,
    Comprehensive,
}

impl Facet {
    pub const ALL: [Facet; 5] = [Facet::Energy, Facet::Cost, Facet::Comfort, Facet::Flexibility, Facet::Comprehensive];

    pub fn label(self) -> &'static str {
        match self {
            Facet::Energy => "energy",
            Facet::Cost => "cost",
            Facet::Comfort => "comfort",
            Facet::Flexibility => "flexibility",
            Facet::Comprehensive => "comprehensive",
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Facet {
    type Err = RuntimeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| RuntimeError::InvalidValue(format!("unknown facet '{s}'")))
    }
}

fn num(v: f64) -> Value {
    json!(v)
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn energy(r: &SimulationResult) -> Map<String, Value> {
    let h = r.dt_hours();
    let sum = |f: fn(&crate::sim::StepRecord) -> f64| r.records.iter().map(f).sum::<f64>() * h;
    let mut m = Map::new();
    m.insert("hvac_kwh".into(), num(sum(|s| s.hvac_elec_kw)));
    m.insert("chiller_kwh".into(), num(sum(|s| s.chiller_elec_kw)));
    m.insert("total_kwh".into(), num(sum(|s| s.load_kw)));
    m.insert("grid_import_kwh".into(), num(sum(|s| s.grid_import_kw)));
    m.insert("pv_gen_kwh".into(), num(sum(|s| s.pv_gen_kw)));
    m.insert("cooling_kwh".into(), num(sum(|s| s.q_cool_w / 1000.0)));
    m
}

pub fn cost(r: &SimulationResult) -> Map<String, Value> {
    let total: f64 = r.records.iter().map(|s| s.cost).sum();
    let peak: f64 = r.records.iter().filter(|s| s.peak).map(|s| s.cost).sum();
    let mut m = Map::new();
    m.insert("total_cost".into(), num(total));
    m.insert("peak_cost".into(), num(peak));
    m.insert("off_peak_cost".into(), num(total - peak));
    m
}

pub fn comfort(r: &SimulationResult) -> Map<String, Value> {
    let mut violations = 0u64;
    let mut temps = Vec::new();
    for s in &r.records {
        for (key, t) in &s.zone_temps {
            if let Some([lo, hi]) = r.comfort_bands.get(key) {
                if t < lo || t > hi {
                    violations += 1;
                }
            }
            temps.push(*t);
        }
    }
    let mut m = Map::new();
    m.insert("violation_steps".into(), json!(violations));
    if temps.is_empty() {
        for k in ["temp_std", "mean_temp_c", "min_temp_c", "max_temp_c"] {
            m.insert(k.into(), Value::Null);
        }
        return m;
    }
    let n = temps.len() as f64;
    let mean = temps.iter().sum::<f64>() / n;
    let var = temps.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    m.insert("temp_std".into(), num(var.sqrt()));
    m.insert("mean_temp_c".into(), num(mean));
    m.insert("min_temp_c".into(), num(temps.iter().copied().fold(f64::INFINITY, f64::min)));
    m.insert("max_temp_c".into(), num(temps.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    m
}

pub fn flexibility(r: &SimulationResult) -> Map<String, Value> {
    let h = r.dt_hours();
    let pv_gen: f64 = r.records.iter().map(|s| s.pv_gen_kw).sum::<f64>() * h;
    let pv_used: f64 = r.records.iter().map(|s| s.pv_used_kw).sum::<f64>() * h;
    let curtailed: f64 = r.records.iter().map(|s| s.curtailed_kw).sum::<f64>() * h;
    let throughput: f64 = r.records.iter().map(|s| s.batt_charge_kw + s.batt_discharge_kw).sum::<f64>() * h;
    let peak_grid: f64 = r.records.iter().filter(|s| s.peak).map(|s| s.grid_import_kw).sum::<f64>() * h;
    let peak_cooling: f64 = r.records.iter().filter(|s| s.peak).map(|s| s.q_cool_w / 1000.0).sum::<f64>() * h;
    let capacity: f64 = r.batteries.values().map(|b| b.capacity_kwh).sum();
    let min_soc = if r.batteries.is_empty() {
        None
    } else {
        let initial = r.batteries.values().map(|b| b.initial_soc);
        let during = r.records.iter().flat_map(|s| s.soc.values().copied());
        Some(initial.chain(during).fold(f64::INFINITY, f64::min))
    };
    let mut m = Map::new();
    m.insert("pv_curtailed_kwh".into(), num(curtailed));
    m.insert("self_consumption_pct".into(), opt((pv_gen > 0.0).then(|| 100.0 * pv_used / pv_gen)));
    m.insert("min_soc".into(), opt(min_soc));
    m.insert("efc".into(), opt((capacity > 0.0).then(|| throughput / (2.0 * capacity))));
    m.insert("throughput_kwh".into(), num(throughput));
    m.insert("peak_grid_import_kwh".into(), num(peak_grid));
    m.insert("peak_cooling_kwh".into(), num(peak_cooling));
    m
}

pub fn analyze(r: &SimulationResult, facet: Facet) -> Map<String, Value> {
    match facet {
        Facet::Energy => energy(r),
        Facet::Cost => cost(r),
        Facet::Comfort => comfort(r),
        Facet::Flexibility => flexibility(r),
        Facet::Comprehensive => {
            let mut m = Map::new();
            for f in &Facet::ALL[..4] {
                m.insert(f.label().into(), Value::Object(analyze(r, *f)));
            }
            m
        }
    }
}

/// One metric in a comparison; `b` relative to `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub baseline: Option<f64>,
    pub comparison: Option<f64>,
    /// `comparison − baseline`
    pub delta: Option<f64>,
    /// `100 · (comparison − baseline) / baseline`; null when the baseline is 0.
    pub delta_pct: Option<f64>,
}

impl MetricDelta {
    pub fn new(a: Option<f64>, b: Option<f64>) -> Self {
        let delta = a.zip(b).map(|(a, b)| b - a);
        let delta_pct = a.zip(b).and_then(|(a, b)| (a != 0.0).then(|| 100.0 * (b - a) / a));
        Self { baseline: a, comparison: b, delta, delta_pct }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_run_id: String,
    pub comparison_run_id: String,
    pub facet: Facet,
    /// Keyed by metric name; comprehensive reports use `facet.metric`.
    pub metrics: std::collections::BTreeMap<String, MetricDelta>,
}

fn flatten(prefix: &str, m: &Map<String, Value>, out: &mut Vec<(String, Option<f64>)>) {
    for (k, v) in m {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => out.push((key, other.as_f64())),
        }
    }
}

pub fn compare(a: &SimulationResult, b: &SimulationResult, facet: Facet) -> Result<ComparisonReport, RuntimeError> {
    if a.horizon_hours != b.horizon_hours || a.timestep_s != b.timestep_s {
        return Err(RuntimeError::IncompatibleRuns(format!(
            "'{}' is {} h at {} s but '{}' is {} h at {} s",
            a.run_id, a.horizon_hours, a.timestep_s, b.run_id, b.horizon_hours, b.timestep_s
        )));
    }
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    flatten("", &analyze(a, facet), &mut xa);
    flatten("", &analyze(b, facet), &mut xb);
    let metrics = xa.into_iter().zip(xb).map(|((k, va), (_, vb))| (k, MetricDelta::new(va, vb))).collect();
    Ok(ComparisonReport { baseline_run_id: a.run_id.clone(), comparison_run_id: b.run_id.clone(), facet, metrics })
}
