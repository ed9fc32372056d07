use bemas_runtime::model::*;
use bemas_runtime::*;
use serde_json::json;

fn map(v: serde_json::Value) -> JsonMap {
    v.as_object().unwrap().clone()
}

fn run(rt: &mut Runtime, id: &str) -> SimulationResult {
    rt.run_simulation(&RunRequest { run_id: Some(id.into()), ..Default::default() }).unwrap().clone()
}

#[test]
fn day_at_quarter_hour_has_96_records() {
    let mut rt = Runtime::new();
    let r = run(&mut rt, "a");
    assert_eq!(r.records.len(), 96);
    assert_eq!(r.records[95].step, 95);
    assert_eq!(r.records[4].hour, 1.0);
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let a = serde_json::to_vec(&run(&mut Runtime::new(), "x")).unwrap();
    let b = serde_json::to_vec(&run(&mut Runtime::new(), "x")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dangling_controller_fails_validation_naming_the_id() {
    let mut rt = Runtime::new();
    let c = rt.active_mut().unwrap().clusters.get_mut("c1").unwrap();
    c.controllers.get_mut("thermostat1").unwrap().assigned_system = "hvac_ghost".into();
    let err = rt.run_simulation(&RunRequest::default()).unwrap_err();
    let RuntimeError::ValidationFailed(msgs) = &err else { panic!("{err:?}") };
    assert!(msgs.iter().any(|m| m.contains("thermostat1") && m.contains("hvac_ghost")), "{msgs:?}");
    assert!(rt.run_ids().is_empty());
}

#[test]
fn der_update_capacity_keeps_soc_bounds() {
    let mut rt = Runtime::new();
    let before = rt.der("der1").unwrap().battery.clone().unwrap();
    rt.update_der("der1", None, Some(&map(json!({"capacity": 20}))), None).unwrap();
    let after = rt.der("der1").unwrap().battery.clone().unwrap();
    assert_eq!(after.capacity, 20.0);
    assert_eq!((after.soc_min, after.soc_max, after.soc), (before.soc_min, before.soc_max, before.soc));
    assert_eq!(after.max_power, before.max_power);
}

#[test]
fn hvac_update_sets_cop_and_keeps_capacity() {
    let mut rt = Runtime::new();
    rt.update_hvac("hvac1", None, &map(json!({"chiller": {"rated_cop": 4.5}})), None).unwrap();
    let h = rt.hvac("hvac1").unwrap();
    assert_eq!(h.system_config.chiller.rated_cop, 4.5);
    assert_eq!(h.system_config.chiller.rated_capacity_w, 15000.0);
}

#[test]
fn invalid_update_leaves_entity_untouched() {
    let mut rt = Runtime::new();
    let before = rt.hvac("hvac1").unwrap().clone();
    let err = rt.update_hvac("hvac1", None, &map(json!({"coil": {"effectiveness": 1.5}})), None).unwrap_err();
    assert!(matches!(err, RuntimeError::ValidationFailed(_)));
    assert_eq!(rt.hvac("hvac1").unwrap(), &before);
}

#[test]
fn remove_then_query_is_unknown() {
    let mut rt = Runtime::new();
    rt.remove_controller("der_sched1").unwrap();
    rt.remove_der("der1").unwrap();
    assert_eq!(rt.der("der1").unwrap_err(), RuntimeError::UnknownId { kind: "der system", id: "der1".into() });
}

#[test]
fn removing_a_controlled_system_is_refused() {
    let mut rt = Runtime::new();
    let err = rt.remove_hvac("hvac1").unwrap_err();
    assert!(matches!(&err, RuntimeError::DanglingReference(m) if m.contains("thermostat1")), "{err}");
    let err = rt.remove_building("bldg1").unwrap_err();
    assert!(matches!(err, RuntimeError::DanglingReference(_)));
}

#[test]
fn ids_are_unique_across_entity_families() {
    let mut rt = Runtime::new();
    let err = rt.add_building("c1", "hvac1", None).unwrap_err();
    assert!(matches!(err, RuntimeError::DuplicateId { .. }));
    assert!(rt.add_cluster("c1", None, None).is_err());
}

#[test]
fn duplicate_run_id_is_rejected() {
    let mut rt = Runtime::new();
    run(&mut rt, "r");
    let err = rt.run_simulation(&RunRequest { run_id: Some("r".into()), ..Default::default() }).unwrap_err();
    assert!(matches!(err, RuntimeError::DuplicateId { .. }));
}

#[test]
fn generated_run_ids_count_up() {
    let mut rt = Runtime::new();
    let a = rt.run_simulation(&RunRequest::default()).unwrap().run_id.clone();
    let b = rt.run_simulation(&RunRequest::default()).unwrap().run_id.clone();
    assert_eq!((a.as_str(), b.as_str()), ("run_001", "run_002"));
}

#[test]
fn throughput_accumulates_across_runs() {
    let mut rt = Runtime::new();
    let r = run(&mut rt, "a");
    let t = r.batteries["der1"].throughput_kwh;
    assert!(t > 0.0);
    assert_eq!(rt.der("der1").unwrap().throughput_kwh, t);
    run(&mut rt, "b");
    assert!((rt.der("der1").unwrap().throughput_kwh - 2.0 * t).abs() < 1e-9);
}

#[test]
fn horizon_override_changes_record_count() {
    let mut rt = Runtime::new();
    let r = rt
        .run_simulation(&RunRequest { horizon_hours: Some(6.0), timestep_s: Some(600.0), ..Default::default() })
        .unwrap();
    assert_eq!(r.records.len(), 36);
}

#[test]
fn short_inline_series_is_horizon_uncovered() {
    let mut rt = Runtime::new();
    rt.update_disturbance("price1", &map(json!({"series": [0.1, 0.2, 0.3]}))).unwrap();
    let err = rt.run_simulation(&RunRequest::default()).unwrap_err();
    assert!(matches!(err, RuntimeError::HorizonUncovered { needed: 96, available: 3, .. }), "{err:?}");
}

#[test]
fn compare_requires_matching_grids() {
    let mut rt = Runtime::new();
    run(&mut rt, "a");
    rt.run_simulation(&RunRequest { run_id: Some("b".into()), horizon_hours: Some(12.0), ..Default::default() })
        .unwrap();
    assert!(matches!(rt.compare("a", "b", Facet::Energy), Err(RuntimeError::IncompatibleRuns(_))));
    assert!(matches!(rt.compare("a", "zz", Facet::Energy), Err(RuntimeError::UnknownRun(_))));
}

#[test]
fn upgrade_lowers_hvac_energy_and_raises_min_soc() {
    let mut rt = Runtime::new();
    run(&mut rt, "base");
    rt.update_hvac("hvac1", None, &map(json!({"chiller": {"rated_cop": 4.5}})), None).unwrap();
    rt.update_der("der1", None, Some(&map(json!({"capacity": 20}))), None).unwrap();
    run(&mut rt, "up");
    let rep = rt.compare("base", "up", Facet::Comprehensive).unwrap();
    assert!(rep.metrics["energy.hvac_kwh"].delta.unwrap() < 0.0);
    assert!((rep.metrics["energy.chiller_kwh"].delta_pct.unwrap() + 100.0 / 3.0).abs() < 1e-9);
    assert!(rep.metrics["flexibility.min_soc"].delta.unwrap() > 0.0);
    assert!(rep.metrics["flexibility.efc"].delta.unwrap() < 0.0);
}

#[test]
fn precool_lowers_window_end_temperature_and_peak_cooling() {
    let mut rt = Runtime::new();
    run(&mut rt, "base");
    let ctl = Controller {
        controller_id: "precool1".into(),
        kind: ControllerKind::Precool,
        params: ControllerParams::default(),
        assigned_system: "hvac1".into(),
        enabled: true,
    };
    rt.add_controller(ctl).unwrap();
    run(&mut rt, "pre");
    let (b, p) = (rt.run("base").unwrap(), rt.run("pre").unwrap());
    let at = |r: &SimulationResult, h: f64| {
        r.records.iter().find(|s| s.hour + 0.25 == h).unwrap().zone_temps["c1/bldg1/zone1"]
    };
    assert!(at(p, 16.0) < at(b, 16.0));
    let peak = |r: &SimulationResult| r.records.iter().filter(|s| s.peak).map(|s| s.q_cool_w).sum::<f64>();
    assert!(peak(p) <= peak(b));
}

#[test]
fn runs_persist_as_json_and_csv_under_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut rt = Runtime::new().with_results_dir(dir.path());
    run(&mut rt, "a");
    let summary = rt.run_summary("a").unwrap();
    assert_eq!(summary.path.as_deref(), Some("runs/a.json"));
    let text = std::fs::read_to_string(dir.path().join("runs/a.json")).unwrap();
    let back: SimulationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, rt.run("a").unwrap());
    let csv = std::fs::read_to_string(dir.path().join("runs/a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 97);
    let rel = rt.save_run("a", Some("exports/copy.json")).unwrap();
    assert_eq!(rel, "exports/copy.json");
    assert!(dir.path().join("exports/copy.csv").exists());
    let (_, path) = rt.save_config(None, None).unwrap();
    assert!(dir.path().join(path.unwrap()).exists());
}

#[test]
fn csv_disturbance_drives_the_weather() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("timestamp,outdoor_c,irradiance_wm2,occupancy,price_per_kwh\n");
    for i in 0..96 {
        body.push_str(&format!("{},30,0,1,0.2\n", i * 900));
    }
    std::fs::write(dir.path().join("flat.csv"), body).unwrap();
    let mut rt = Runtime::new().with_data_dir(dir.path());
    rt.update_disturbance("weather1", &map(json!({"csv_path": "flat.csv"}))).unwrap();
    let r = run(&mut rt, "csv");
    assert!(r.records.iter().all(|s| s.outdoor_c == 30.0 && s.pv_gen_kw == 0.0));
}

#[test]
fn timestep_at_or_above_zone_time_constant_is_rejected() {
    let mut rt = Runtime::new();
    let z = &mut rt.active_mut().unwrap().clusters.get_mut("c1").unwrap().buildings.get_mut("bldg1").unwrap().zones[0];
    z.capacitance = 1e5;
    z.resistance = 1e-3;
    assert!(matches!(rt.run_simulation(&RunRequest::default()), Err(RuntimeError::ValidationFailed(_))));
}

#[test]
fn config_lifecycle() {
    let mut rt = Runtime::new();
    rt.create_config("scratch", "empty", false, true).unwrap();
    assert_eq!(rt.active_id(), Some("scratch"));
    let errs = rt.validate(None).unwrap();
    assert!(errs.iter().any(|e| e.contains("no building with a thermal zone")));
    rt.set_active("reference").unwrap();
    assert!(rt.validate(None).unwrap().is_empty());
    assert_eq!(rt.configs().filter(|c| c.active).count(), 1);
    rt.create_config("copy", "", true, false).unwrap();
    assert_eq!(rt.config("copy").unwrap().clusters.len(), 1);
    assert_eq!(rt.active_id(), Some("reference"));
}
