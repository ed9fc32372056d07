//! Randomized scenarios and the physics checks run over them. Shared with
//! other crates' test targets by path.
#![allow(dead_code)]

use bemas_runtime::model::*;
use bemas_runtime::reference::reference_config;
use bemas_runtime::{Simulation, SimulationResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random single-cluster day: 1-3 buildings, 1-3 zones each, one HVAC per
/// building, an optional battery/PV system and random profiles.
pub fn scenario(seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = reference_config();
    let c = cfg.clusters.get_mut("c1").unwrap();
    c.buildings.clear();
    c.hvac_systems.clear();
    c.der_systems.clear();
    c.controllers.clear();
    let n_bldg = rng.gen_range(1..=3);
    let mut served = vec![];
    for b in 0..n_bldg {
        let bid = format!("b{b}");
        let mut bldg = Building::new(&bid);
        for z in 0..rng.gen_range(1..=3) {
            let mut zone = ThermalZone::new(&format!("z{z}"));
            zone.capacitance = rng.gen_range(3e6..5e7);
            zone.resistance = rng.gen_range(1e-3..1e-2);
            zone.internal_gain_w = rng.gen_range(0.0..3000.0);
            zone.setpoint_c = rng.gen_range(21.0..26.0);
            zone.deadband_c = rng.gen_range(0.0..2.0);
            zone.temperature_c = rng.gen_range(20.0..30.0);
            zone.comfort_band_c = [zone.setpoint_c - 2.0, zone.setpoint_c + 2.0];
            bldg.zones.push(zone);
        }
        if rng.gen_bool(0.8) {
            bldg.electrical_zone = Some(ElectricalZone { zone_id: "e".into(), base_load_kw: rng.gen_range(0.0..6.0) });
        }
        let mut hc = HvacConfig::default();
        hc.chiller.rated_capacity_w = rng.gen_range(1500.0..30000.0);
        hc.chiller.rated_cop = rng.gen_range(2.0..6.0);
        hc.coil.effectiveness = rng.gen_range(0.3..=1.0);
        hc.fan_ctrl.ctrl_type = [FanCtrlType::Constant, FanCtrlType::Staged, FanCtrlType::Vfd][rng.gen_range(0..3)];
        if hc.fan_ctrl.ctrl_type == FanCtrlType::Staged {
            hc.fan_ctrl.stages = Some(rng.gen_range(2..5));
        }
        let hid = format!("h{b}");
        c.hvac_systems.insert(
            hid.clone(),
            HvacSystem {
                system_id: hid.clone(),
                system_name: None,
                system_config: hc,
                parameters: JsonMap::new(),
                buildings: vec![bid.clone()],
            },
        );
        if rng.gen_bool(0.85) {
            c.controllers.insert(
                format!("t{b}"),
                Controller {
                    controller_id: format!("t{b}"),
                    kind: ControllerKind::ThermostatDeadband,
                    params: ControllerParams::default(),
                    assigned_system: hid,
                    enabled: rng.gen_bool(0.9),
                },
            );
        }
        served.push(bid.clone());
        c.buildings.insert(bid, bldg);
    }
    if rng.gen_bool(0.8) {
        let cap = rng.gen_range(2.0..30.0);
        let lo = rng.gen_range(0.0..0.4);
        let hi = rng.gen_range(lo + 0.1..=1.0);
        let battery = rng.gen_bool(0.85).then(|| Battery {
            capacity: cap,
            soc: rng.gen_range(lo..=hi),
            soc_min: lo,
            soc_max: hi,
            charge_eff: rng.gen_range(0.7..=1.0),
            discharge_eff: rng.gen_range(0.7..=1.0),
            max_power: rng.gen_range(0.5..10.0),
        });
        let pv = rng.gen_bool(0.8).then(|| Pv { rated_kw: rng.gen_range(0.0..15.0) });
        c.der_systems.insert(
            "d".into(),
            DerSystem {
                system_id: "d".into(),
                system_name: None,
                battery,
                pv,
                throughput_kwh: 0.0,
                buildings: served.clone(),
            },
        );
        if rng.gen_bool(0.8) {
            let cs = rng.gen_range(0..20) as f64;
            let params = ControllerParams {
                charge_start_hour: Some(cs),
                charge_end_hour: Some(cs + rng.gen_range(1..4) as f64),
                store_pv_surplus: Some(rng.gen_bool(0.7)),
                ..Default::default()
            };
            c.controllers.insert(
                "s".into(),
                Controller {
                    controller_id: "s".into(),
                    kind: ControllerKind::DerSchedule,
                    params,
                    assigned_system: "d".into(),
                    enabled: true,
                },
            );
        }
    }
    let pick = |rng: &mut ChaCha8Rng, xs: &[&str]| xs[rng.gen_range(0..xs.len())].to_string();
    c.disturbances.get_mut("weather1").unwrap().profile = Some(pick(&mut rng, &["hot_summer_day", "mild_day"]));
    c.disturbances.get_mut("occupancy1").unwrap().profile =
        Some(pick(&mut rng, &["office", "residential", "constant"]));
    c.disturbances.get_mut("price1").unwrap().profile = Some(pick(&mut rng, &["tou", "flat"]));
    cfg
}

pub fn simulate(cfg: &Configuration) -> SimulationResult {
    let env = Environment::new("day");
    Simulation::initialize(cfg, &env, None).unwrap().run("p").unwrap()
}

pub fn with_precool(mut cfg: Configuration) -> Configuration {
    let c = cfg.clusters.get_mut("c1").unwrap();
    let hvacs: Vec<String> = c.hvac_systems.keys().cloned().collect();
    for h in hvacs {
        let id = format!("pre_{h}");
        let params = ControllerParams {
            offset_c: Some(2.0),
            window_start_hour: Some(14.0),
            window_end_hour: Some(16.0),
            ..Default::default()
        };
        c.controllers.insert(
            id.clone(),
            Controller { controller_id: id, kind: ControllerKind::Precool, params, assigned_system: h, enabled: true },
        );
    }
    cfg
}

pub fn with_cop(mut cfg: Configuration, cop: f64) -> Configuration {
    for h in cfg.clusters.get_mut("c1").unwrap().hvac_systems.values_mut() {
        h.system_config.chiller.rated_cop = cop;
    }
    cfg
}

/// Temperatures at the end of the step that closes the window ending at `hour`.
pub fn temps_at_end(r: &SimulationResult, hour: f64) -> Vec<f64> {
    let dt = r.dt_hours();
    let rec = r.records.iter().find(|s| (s.hour + dt - hour).abs() < 1e-9).unwrap();
    rec.zone_temps.values().copied().collect()
}

pub fn peak_cooling(r: &SimulationResult) -> f64 {
    r.records.iter().filter(|s| s.peak).map(|s| s.q_cool_w).sum()
}

/// Returns a description of the first precool violation, if any.
pub fn precool_violation(seed: u64) -> Option<String> {
    let base = scenario(seed);
    let (b, p) = (simulate(&base), simulate(&with_precool(base)));
    for (tb, tp) in temps_at_end(&b, 16.0).iter().zip(temps_at_end(&p, 16.0)) {
        if tp > tb + 1e-9 {
            return Some(format!("seed {seed}: window-end temp {tp} > {tb}"));
        }
    }
    let (qb, qp) = (peak_cooling(&b), peak_cooling(&p));
    (qp > qb * (1.0 + 1e-12) + 1e-9).then(|| format!("seed {seed}: peak cooling {qp} > {qb}"))
}

/// First step whose supply or PV balance misses, if any.
pub fn energy_violation(seed: u64) -> Option<String> {
    let r = simulate(&scenario(seed));
    r.records.iter().find_map(|s| {
        let bad = s.supply_residual().abs() > 1e-9
            || s.pv_residual().abs() > 1e-9
            || s.grid_import_kw < 0.0
            || s.curtailed_kw < 0.0;
        bad.then(|| format!("seed {seed} step {}: residuals {} / {}", s.step, s.supply_residual(), s.pv_residual()))
    })
}

pub fn soc_violation(seed: u64) -> Option<String> {
    let r = simulate(&scenario(seed));
    for (id, meta) in &r.batteries {
        for s in &r.records {
            let soc = s.soc[id];
            if !(meta.soc_min <= soc && soc <= meta.soc_max) {
                return Some(format!(
                    "seed {seed} step {}: soc {soc} outside [{}, {}]",
                    s.step, meta.soc_min, meta.soc_max
                ));
            }
        }
    }
    None
}

/// COP 3.0 to 4.5 must leave temperatures alone and scale chiller energy by 2/3.
pub fn cop_violation(seed: u64) -> Option<String> {
    let cfg = scenario(seed);
    let a = simulate(&with_cop(cfg.clone(), 3.0));
    let b = simulate(&with_cop(cfg, 4.5));
    if a.records.iter().zip(&b.records).any(|(x, y)| x.zone_temps != y.zone_temps) {
        return Some(format!("seed {seed}: thermal trajectory moved"));
    }
    let ea: f64 = a.records.iter().map(|s| s.chiller_elec_kw).sum();
    let eb: f64 = b.records.iter().map(|s| s.chiller_elec_kw).sum();
    if ea > 0.0 {
        let ratio = eb / ea;
        ((ratio - 2.0 / 3.0).abs() > 1e-9 * (2.0 / 3.0)).then(|| format!("seed {seed}: ratio {ratio}"))
    } else {
        (eb != 0.0).then(|| format!("seed {seed}: {eb} kWh at zero baseline"))
    }
}
