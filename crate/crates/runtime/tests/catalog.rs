use std::collections::BTreeMap;

use bemas_runtime::{shared_registry, Runtime};
use bemas_toolbus::{ListDetail, ToolBus, ToolCategory};
use serde_json::{json, Value};

fn bus() -> ToolBus {
    let (_, reg) = shared_registry(Runtime::new());
    ToolBus::new(reg)
}

fn call(bus: &ToolBus, tool: &str, args: Value) -> bemas_toolbus::ToolResult {
    bus.invoke("tester", tool, args.as_object().unwrap().clone()).result
}

#[test]
fn category_sizes() {
    let bus = bus();
    let mut per: BTreeMap<ToolCategory, usize> = BTreeMap::new();
    for t in bus.list_tools(ListDetail::Full) {
        *per.entry(t.category).or_default() += 1;
    }
    let expect = [6, 5, 8, 6, 6, 6, 7, 3, 4, 5, 5];
    for (cat, n) in ToolCategory::ALL.iter().zip(expect) {
        assert_eq!(per[cat], n, "{cat}");
    }
    assert_eq!(per.values().sum::<usize>(), 61);
}

#[test]
fn hvac_add_envelope_shape() {
    let bus = bus();
    let r = call(
        &bus,
        "hvac_add",
        json!({"system_id": "hvac2", "cluster_id": "c1", "system_name": "Office HVAC",
        "system_config": {"fan_ctrl": {"ctrl_type": "vfd"}, "chiller": {"rated_cop": 5.0}}}),
    );
    assert!(r.success, "{r:?}");
    assert_eq!(r.message.as_deref(), Some("HVAC system 'hvac2' added to cluster 'c1'"));
    let d = r.data.unwrap();
    assert_eq!(d["system_type"], "hvac_systems");
    assert_eq!(d["system_name"], "Office HVAC");
    assert_eq!(d["system_config"]["fan_ctrl"]["ctrl_type"], "vfd");
    assert_eq!(d["system_config"]["chiller"]["rated_capacity_W"], 15000.0);
    assert_eq!(d["system_config"]["chiller"]["rated_cop"], 5.0);
}

#[test]
fn bad_enum_is_rejected_before_the_handler() {
    let bus = bus();
    let r = call(
        &bus,
        "hvac_add",
        json!({"system_id": "h", "cluster_id": "c1", "system_config": {"fan_ctrl": {"ctrl_type": "turbo"}}}),
    );
    assert!(!r.success);
    assert!(r.error.unwrap().contains("ctrl_type"));
    assert!(!call(&bus, "hvac_query", json!({"system_id": "h"})).success);
}

#[test]
fn case_study_edits_through_tools() {
    let bus = bus();
    assert!(call(&bus, "simulation_run", json!({"run_id": "baseline"})).success);
    let r = call(&bus, "hvac_update", json!({"system_id": "hvac1", "chiller": {"rated_cop": 4.5}}));
    assert_eq!(r.data.unwrap()["system_config"]["chiller"]["rated_cop"], 4.5);
    let r = call(&bus, "der_update", json!({"system_id": "der1", "battery": {"capacity": 20}}));
    let bat = &r.data.unwrap()["system"]["battery"];
    assert_eq!(bat["capacity"], 20.0);
    assert_eq!(bat["soc_min"], 0.1);
    let r = call(
        &bus,
        "controller_add_hvac",
        json!({"controller_id": "pc", "system_id": "hvac1", "kind": "precool", "offset_C": 2}),
    );
    assert!(r.success, "{r:?}");
    assert!(call(&bus, "simulation_run", json!({"run_id": "upgrade"})).success);
    let r = call(&bus, "comparison_energy", json!({"baseline_run_id": "baseline", "comparison_run_id": "upgrade"}));
    let d = r.data.unwrap();
    assert!(d["report"]["metrics"]["hvac_kwh"]["delta"].as_f64().unwrap() < 0.0);
    let r = call(&bus, "analysis_comprehensive", json!({"run_id": "upgrade"}));
    let m = &r.data.unwrap()["metrics"];
    for facet in ["energy", "cost", "comfort", "flexibility"] {
        assert!(m[facet].is_object(), "{facet}");
    }
    let r = call(&bus, "simulation_list_results", json!({}));
    assert_eq!(r.data.unwrap()["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn failures_carry_runtime_messages() {
    let bus = bus();
    let r = call(&bus, "der_query", json!({"system_id": "nope"}));
    assert_eq!(r.error.as_deref(), Some("unknown der system 'nope'"));
    let r = call(&bus, "analysis_cost", json!({"run_id": "missing"}));
    assert!(r.error.unwrap().contains("missing"));
    let r = call(&bus, "controller_add_der", json!({"controller_id": "k", "system_id": "hvac1"}));
    assert!(r.error.unwrap().contains("missing system 'hvac1'"));
}

#[test]
fn build_from_scratch_and_run() {
    let bus = bus();
    let steps = [
        ("config_create", json!({"config_id": "fresh"})),
        ("cluster_add", json!({"cluster_id": "k"})),
        ("building_add", json!({"building_id": "b", "cluster_id": "k"})),
        ("building_add_thermal_zone", json!({"building_id": "b", "zone_id": "z", "setpoint_C": 23})),
        ("building_add_electrical_zone", json!({"building_id": "b", "zone_id": "e", "base_load_kw": 2})),
        ("building_add_water_zone", json!({"building_id": "b", "zone_id": "w"})),
        ("hvac_add", json!({"system_id": "h", "cluster_id": "k", "buildings": ["b"]})),
        ("controller_add_hvac", json!({"controller_id": "t", "system_id": "h"})),
        ("disturbance_add_weather", json!({"disturbance_id": "wx", "cluster_id": "k", "profile": "mild_day"})),
        ("disturbance_add_price", json!({"disturbance_id": "px", "cluster_id": "k", "peak_price": 0.5})),
        ("environment_add", json!({"env_id": "half", "horizon_hours": 12})),
        ("config_validate", json!({})),
        ("simulation_run", json!({"run_id": "r"})),
        ("simulation_get_status", json!({"run_id": "r"})),
    ];
    for (tool, args) in steps {
        let r = call(&bus, tool, args);
        assert!(r.success, "{tool}: {r:?}");
    }
    let r = call(&bus, "simulation_get_status", json!({"run_id": "r"}));
    assert_eq!(r.data.unwrap()["run"]["steps"], 48);
    let r = call(&bus, "config_list", json!({}));
    assert_eq!(r.data.unwrap()["configurations"].as_array().unwrap().len(), 2);
}
