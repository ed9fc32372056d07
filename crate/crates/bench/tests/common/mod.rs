//! Brute-force oracles and random trace generators.
#![allow(dead_code)]

use bemas_bench::StepSig;
use bemas_orchestrator::JsonMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const AGENTS: [&str; 3] = ["A", "B", "C"];
pub const TOOLS: [&str; 6] = ["t1", "t2", "t3", "t4", "t5", "t6"];

/// (hits, total) as plain integers.
pub type Frac = (usize, usize);

fn distinct<S: AsRef<str>>(xs: &[S]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for x in xs {
        if !out.contains(&x.as_ref()) {
            out.push(x.as_ref());
        }
    }
    out
}

pub fn recall_oracle<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Frac {
    let e = distinct(expected);
    let a = distinct(actual);
    (e.iter().filter(|x| a.contains(x)).count(), e.len())
}

pub fn jaccard_oracle<S: AsRef<str>, T: AsRef<str>>(expected: &[S], actual: &[T]) -> Frac {
    let e = distinct(expected);
    let a = distinct(actual);
    let inter = e.iter().filter(|x| a.contains(x)).count();
    (inter, e.len() + a.len() - inter)
}

fn step_ok(e: &StepSig, a: &StepSig) -> bool {
    e.agent == a.agent && e.tools.iter().all(|t| a.tools.contains(t))
}

/// Tries every order-preserving assignment of expected steps to distinct
/// executed steps and keeps the largest.
pub fn plan_oracle(expected: &[StepSig], actual: &[StepSig]) -> Frac {
    fn go(e: &[StepSig], a: &[StepSig], from: usize) -> usize {
        let Some((head, rest)) = e.split_first() else { return 0 };
        let mut best = go(rest, a, from);
        for j in from..a.len() {
            if step_ok(head, &a[j]) {
                best = best.max(1 + go(rest, a, j + 1));
            }
        }
        best
    }
    (go(expected, actual, 0), expected.len())
}

pub fn flatten_oracle(map: &JsonMap) -> Vec<(String, Value)> {
    let mut out = Vec::new();
    for (k, v) in map {
        match v {
            Value::Object(m) if !m.is_empty() => {
                for (k2, v2) in flatten_oracle(m) {
                    out.push((format!("{k}.{k2}"), v2));
                }
            }
            _ => out.push((k.clone(), v.clone())),
        }
    }
    out
}

/// Value equality over the generator's domain: numbers and numeric strings,
/// booleans and "true"/"false", and plain strings.
pub fn value_oracle(e: &Value, a: &Value) -> bool {
    let num = |v: &Value| match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    let boolean = |v: &Value| match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) if s.trim() == "true" => Some(true),
        Value::String(s) if s.trim() == "false" => Some(false),
        _ => None,
    };
    if e.is_number() || a.is_number() {
        return match (num(e), num(a)) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-6 * x.abs().max(y.abs()),
            _ => false,
        };
    }
    if e.is_boolean() || a.is_boolean() {
        return matches!((boolean(e), boolean(a)), (Some(x), Some(y)) if x == y);
    }
    match (e, a) {
        (Value::String(x), Value::String(y)) => x.trim() == y.trim(),
        _ => e == a,
    }
}

/// Key and value hits over every expected (tool, key) pair; `None` when no
/// expected call carries parameters.
pub fn params_oracle(expected: &[(String, JsonMap)], executed: &[(String, JsonMap)]) -> Option<(Frac, Frac)> {
    let (mut total, mut keys, mut vals) = (0, 0, 0);
    for (tool, params) in expected {
        let want = flatten_oracle(params);
        total += want.len();
        let mut best: Option<(usize, usize)> = None;
        for (t, p) in executed {
            if t != tool {
                continue;
            }
            let got = flatten_oracle(p);
            let lookup = |k: &str| got.iter().find(|(g, _)| g == k).map(|(_, v)| v);
            let k = want.iter().filter(|(k, _)| lookup(k).is_some()).count();
            let v = want.iter().filter(|(k, v)| lookup(k).is_some_and(|g| value_oracle(v, g))).count();
            // strictly better only, so the earliest of equals stays
            if best.is_none() || (k, v) > best.unwrap() {
                best = Some((k, v));
            }
        }
        if let Some((k, v)) = best {
            keys += k;
            vals += v;
        }
    }
    (total > 0).then_some(((keys, total), (vals, total)))
}

/// A random expected/actual pair over the small alphabet.
#[derive(Debug, Clone)]
pub struct TracePair {
    pub exp_steps: Vec<StepSig>,
    pub act_steps: Vec<StepSig>,
    pub exp_calls: Vec<(String, JsonMap)>,
    pub act_calls: Vec<(String, JsonMap)>,
}

impl TracePair {
    pub fn exp_tools(&self) -> Vec<String> {
        self.exp_steps.iter().flat_map(|s| s.tools.iter().cloned()).collect()
    }

    pub fn act_tools(&self) -> Vec<String> {
        self.act_calls.iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn exp_agents(&self) -> Vec<String> {
        self.exp_steps.iter().map(|s| s.agent.clone()).collect()
    }

    pub fn act_agents(&self) -> Vec<String> {
        self.act_steps.iter().map(|s| s.agent.clone()).collect()
    }
}

fn pick_tools(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<String> {
    let n = rng.gen_range(lo..=hi);
    let mut out: Vec<String> = Vec::new();
    while out.len() < n {
        let t = TOOLS[rng.gen_range(0..TOOLS.len())].to_string();
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn random_value(rng: &mut ChaCha8Rng) -> Value {
    match rng.gen_range(0..6) {
        0 => json!(rng.gen_range(0..4)),
        1 => json!(rng.gen_range(0..4) as f64 + 0.5),
        2 => json!(rng.gen_bool(0.5)),
        3 => json!(["x", "y", " x"][rng.gen_range(0..3)]),
        4 => json!(["1", "0.5", "true", "false", "1.5"][rng.gen_range(0..5)]),
        _ => json!({"inner": rng.gen_range(0..3)}),
    }
}

fn random_params(rng: &mut ChaCha8Rng) -> JsonMap {
    let mut m = JsonMap::new();
    for k in ["k1", "k2", "k3"] {
        if rng.gen_bool(0.6) {
            m.insert(k.into(), random_value(rng));
        }
    }
    m
}

/// Copies `p`, sometimes dropping a key or changing or re-typing a value.
fn mutate(rng: &mut ChaCha8Rng, p: &JsonMap) -> JsonMap {
    let mut out = JsonMap::new();
    for (k, v) in p {
        match rng.gen_range(0..6) {
            0 => {}
            1 => {
                out.insert(k.clone(), random_value(rng));
            }
            2 => {
                let retyped = match v {
                    Value::Number(n) => json!(format!(" {n}")),
                    Value::Bool(b) => json!(b.to_string()),
                    other => other.clone(),
                };
                out.insert(k.clone(), retyped);
            }
            _ => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    if rng.gen_bool(0.2) {
        out.insert("extra".into(), json!(1));
    }
    out
}

pub fn trace_pair(seed: u64, max_exp: usize, max_act: usize) -> TracePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_exp = rng.gen_range(1..=max_exp);
    let mut exp_steps = Vec::new();
    let mut exp_calls = Vec::new();
    for _ in 0..n_exp {
        let agent = AGENTS[rng.gen_range(0..3)];
        let tools = pick_tools(&mut rng, 1, 2);
        for t in &tools {
            exp_calls.push((t.clone(), random_params(&mut rng)));
        }
        exp_steps.push(StepSig::new(agent, &tools));
    }
    let n_act = rng.gen_range(0..=max_act);
    let mut act_steps = Vec::new();
    let mut act_calls = Vec::new();
    for i in 0..n_act {
        // lean on the expected steps so that matches are common
        let (agent, mut tools) = if rng.gen_bool(0.6) {
            let e = &exp_steps[rng.gen_range(0..exp_steps.len())];
            let keep: Vec<String> = e.tools.iter().filter(|_| rng.gen_bool(0.8)).cloned().collect();
            let agent = if rng.gen_bool(0.85) { e.agent.clone() } else { AGENTS[i % 3].to_string() };
            (agent, keep)
        } else {
            (AGENTS[rng.gen_range(0..3)].to_string(), pick_tools(&mut rng, 0, 3))
        };
        if rng.gen_bool(0.2) {
            tools.push(TOOLS[rng.gen_range(0..TOOLS.len())].to_string());
            tools.dedup();
        }
        for t in &tools {
            let base = exp_calls.iter().find(|(et, _)| et == t).map(|(_, p)| p.clone());
            let p = match base {
                Some(p) if rng.gen_bool(0.75) => mutate(&mut rng, &p),
                _ => random_params(&mut rng),
            };
            act_calls.push((t.clone(), p));
        }
        act_steps.push(StepSig::new(&agent, &tools));
    }
    TracePair { exp_steps, act_steps, exp_calls, act_calls }
}
