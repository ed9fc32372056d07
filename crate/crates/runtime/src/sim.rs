//! Execution loop. Each step runs disturbances, then controllers, then
//! dynamics, for every cluster of the configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disturbance::{self, Sample};
use crate::error::RuntimeError;
use crate::model::{Configuration, ControllerKind, Environment, HourWindow, HvacConfig};
use crate::physics::{self, BatteryState};
use crate::validate::validate_config;

/// Everything observed during one timestep. Power in kW unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Hour of day at the start of the step.
    pub hour: f64,
    pub outdoor_c: f64,
    pub irradiance_wm2: f64,
    pub occupancy: f64,
    pub price: f64,
    pub peak: bool,
    /// Zone temperatures at the end of the step, keyed `cluster/building/zone`.
    pub zone_temps: BTreeMap<String, f64>,
    /// Delivered cooling, W.
    pub q_cool_w: f64,
    pub chiller_elec_kw: f64,
    pub fan_kw: f64,
    pub pump_kw: f64,
    pub tower_kw: f64,
    pub hvac_elec_kw: f64,
    pub plug_load_kw: f64,
    pub load_kw: f64,
    pub pv_gen_kw: f64,
    pub pv_to_load_kw: f64,
    pub pv_to_battery_kw: f64,
    /// PV consumed on site: to load plus into storage.
    pub pv_used_kw: f64,
    pub curtailed_kw: f64,
    /// Power drawn at the battery terminals while charging.
    pub batt_charge_kw: f64,
    /// Storage-side drain while discharging.
    pub batt_discharge_kw: f64,
    /// Power delivered at the terminals while discharging.
    pub batt_delivered_kw: f64,
    pub grid_import_kw: f64,
    /// Energy cost of this step, summed over clusters.
    pub cost: f64,
    /// State of charge at the end of the step, keyed by DER system id.
    pub soc: BTreeMap<String, f64>,
}

impl StepRecord {
    /// Residual of `pv_used + grid_import + delivered − load − batt_charge`.
    pub fn supply_residual(&self) -> f64 {
        self.pv_used_kw + self.grid_import_kw + self.batt_delivered_kw - self.load_kw - self.batt_charge_kw
    }

    /// Residual of `pv_gen − pv_to_load − pv_to_battery − curtailed`.
    pub fn pv_residual(&self) -> f64 {
        self.pv_gen_kw - self.pv_to_load_kw - self.pv_to_battery_kw - self.curtailed_kw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryMeta {
    pub capacity_kwh: f64,
    pub initial_soc: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// |charge| + |discharge| energy over the run, kWh.
    pub throughput_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub run_id: String,
    pub config_id: String,
    pub timestep_s: f64,
    pub horizon_hours: f64,
    pub peak_window: HourWindow,
    pub comfort_bands: BTreeMap<String, [f64; 2]>,
    pub batteries: BTreeMap<String, BatteryMeta>,
    pub records: Vec<StepRecord>,
}

impl SimulationResult {
    pub fn dt_hours(&self) -> f64 {
        self.timestep_s / 3600.0
    }
}

#[derive(Debug, Clone)]
struct ZoneSim {
    key: String,
    t: f64,
    t0: f64,
    c: f64,
    r: f64,
    gain_w: f64,
    setpoint: f64,
    deadband: f64,
    /// (hvac index, capacity share W)
    serving: Vec<(usize, f64)>,
    capacity_w: f64,
    /// An enabled deadband thermostat serves the zone.
    thermostat: bool,
    precool: Option<(HourWindow, f64)>,
    on: bool,
    precooling: bool,
}

impl ZoneSim {
    fn reset(&mut self) {
        self.t = self.t0;
        self.on = false;
        self.precooling = false;
    }

    /// Controller phase: decides whether cooling runs and toward what target.
    fn control(&mut self, hour: f64) -> Option<f64> {
        if let Some((window, offset)) = self.precool {
            if window.contains(hour) {
                self.on = true;
                self.precooling = true;
                return Some(self.setpoint - offset);
            }
        }
        if self.precooling {
            self.precooling = false;
            self.on = false;
        }
        if !self.thermostat {
            return None;
        }
        let half = self.deadband / 2.0;
        if self.t > self.setpoint + half {
            self.on = true;
        } else if self.t < self.setpoint - half {
            self.on = false;
        }
        self.on.then_some(self.setpoint)
    }
}

#[derive(Debug, Clone, Copy)]
enum BatteryCmd {
    Charge,
    Discharge,
    Idle { store_surplus: bool },
}

#[derive(Debug, Clone)]
struct Schedule {
    charge: HourWindow,
    discharge: HourWindow,
    store_surplus: bool,
}

#[derive(Debug, Clone)]
struct BatterySim {
    der_id: String,
    state: BatteryState,
    initial: BatteryState,
    schedule: Option<Schedule>,
    throughput_kwh: f64,
}

impl BatterySim {
    fn command(&self, hour: f64) -> BatteryCmd {
        match &self.schedule {
            None => BatteryCmd::Idle { store_surplus: false },
            Some(s) if s.discharge.contains(hour) => BatteryCmd::Discharge,
            Some(s) if s.charge.contains(hour) => BatteryCmd::Charge,
            Some(s) => BatteryCmd::Idle { store_surplus: s.store_surplus },
        }
    }
}

#[derive(Debug, Clone)]
struct ClusterSim {
    zones: Vec<ZoneSim>,
    hvacs: Vec<HvacConfig>,
    batteries: Vec<BatterySim>,
    pv_kw: f64,
    plug_kw: f64,
    drivers: Vec<Sample>,
}

/// A runnable environment instance with the initialize / reset / step
/// contract. Strictly single-threaded.
#[derive(Debug, Clone, Default)]
pub struct Simulation {
    config_id: String,
    env: Option<Environment>,
    steps: usize,
    cursor: usize,
    clusters: Vec<ClusterSim>,
    peak_window: Option<HourWindow>,
    comfort_bands: BTreeMap<String, [f64; 2]>,
}

impl Simulation {
    /// Builds the environment from a configuration. Fails on dangling
    /// references, invalid entities, unstable zones or uncovered horizons.
    pub fn initialize(
        config: &Configuration,
        env: &Environment,
        base_dir: Option<&Path>,
    ) -> Result<Self, RuntimeError> {
        let steps = env.steps().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let errors = validate_config(config);
        if !errors.is_empty() {
            return Err(RuntimeError::ValidationFailed(errors));
        }
        let selected = config.selection.disturbance.as_deref();
        let mut clusters = Vec::new();
        let mut comfort_bands = BTreeMap::new();
        let mut peak_window = None;
        let mut unstable = Vec::new();
        for cluster in config.clusters.values() {
            let has_zones = cluster.buildings.values().any(|b| !b.zones.is_empty());
            if !has_zones && cluster.der_systems.is_empty() {
                continue;
            }
            let drivers = disturbance::materialize(cluster, env, steps, selected, base_dir)?;
            peak_window.get_or_insert(disturbance::peak_window(cluster, selected));

            let hvac_ids: Vec<&String> = cluster.hvac_systems.keys().collect();
            let hvacs: Vec<HvacConfig> = cluster.hvac_systems.values().map(|h| h.system_config.clone()).collect();
            let thermal: Vec<_> = cluster.controllers.values().filter(|c| c.enabled && c.kind.targets_hvac()).collect();

            let mut zones = Vec::new();
            for b in cluster.buildings.values() {
                for z in &b.zones {
                    let key = format!("{}/{}/{}", cluster.cluster_id, b.building_id, z.zone_id);
                    if env.timestep_s >= z.resistance * z.capacitance {
                        unstable.push(format!("zone '{key}': timestep exceeds R*C, explicit step unstable"));
                    }
                    comfort_bands.insert(key.clone(), z.comfort_band_c);
                    zones.push((key, b.building_id.clone(), z.clone()));
                }
            }
            // Each system splits its capacity over the zones it serves in
            // proportion to their thermal capacitance.
            let mut serving: Vec<Vec<(usize, f64)>> = vec![Vec::new(); zones.len()];
            for (hi, h) in cluster.hvac_systems.values().enumerate() {
                let served: Vec<usize> = zones
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, bid, _))| h.buildings.contains(bid))
                    .map(|(i, _)| i)
                    .collect();
                let total_c: f64 = served.iter().map(|&i| zones[i].2.capacitance).sum();
                let cap = physics::available_cooling_w(&h.system_config);
                for &i in &served {
                    serving[i].push((hi, cap * zones[i].2.capacitance / total_c));
                }
            }
            let zone_sims = zones
                .into_iter()
                .zip(serving)
                .map(|((key, _, z), serving)| {
                    let ctrls: Vec<_> = thermal
                        .iter()
                        .filter(|c| serving.iter().any(|(hi, _)| hvac_ids[*hi] == &c.assigned_system))
                        .collect();
                    let precool = ctrls
                        .iter()
                        .find(|c| c.kind == ControllerKind::Precool)
                        .map(|c| (c.precool_window(), c.precool_offset()));
                    ZoneSim {
                        key,
                        t: z.temperature_c,
                        t0: z.temperature_c,
                        c: z.capacitance,
                        r: z.resistance,
                        gain_w: z.internal_gain_w,
                        setpoint: z.setpoint_c,
                        deadband: z.deadband_c,
                        capacity_w: serving.iter().map(|(_, w)| w).sum(),
                        serving,
                        thermostat: ctrls.iter().any(|c| c.kind == ControllerKind::ThermostatDeadband),
                        precool,
                        on: false,
                        precooling: false,
                    }
                })
                .collect();

            let batteries = cluster
                .der_systems
                .values()
                .filter_map(|d| {
                    let b = d.battery.as_ref()?;
                    let schedule = cluster
                        .controllers
                        .values()
                        .find(|c| {
                            c.enabled && c.kind == ControllerKind::DerSchedule && c.assigned_system == d.system_id
                        })
                        .map(|c| Schedule {
                            charge: c.charge_window(),
                            discharge: c.discharge_window(),
                            store_surplus: c.store_pv_surplus(),
                        });
                    let state = BatteryState::new(b);
                    Some(BatterySim {
                        der_id: d.system_id.clone(),
                        initial: state.clone(),
                        state,
                        schedule,
                        throughput_kwh: 0.0,
                    })
                })
                .collect();
            clusters.push(ClusterSim {
                zones: zone_sims,
                hvacs,
                batteries,
                pv_kw: cluster.der_systems.values().filter_map(|d| d.pv.as_ref()).map(|p| p.rated_kw).sum(),
                plug_kw: cluster
                    .buildings
                    .values()
                    .filter_map(|b| b.electrical_zone.as_ref())
                    .map(|e| e.base_load_kw)
                    .sum(),
                drivers,
            });
        }
        if !unstable.is_empty() {
            return Err(RuntimeError::ValidationFailed(unstable));
        }
        Ok(Self {
            config_id: config.config_id.clone(),
            env: Some(env.clone()),
            steps,
            cursor: 0,
            clusters,
            peak_window: Some(peak_window.unwrap_or(crate::model::PEAK_WINDOW)),
            comfort_bands,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.cursor >= self.steps
    }

    /// Returns every state to its initial value.
    pub fn reset(&mut self) {
        self.cursor = 0;
        for c in &mut self.clusters {
            c.zones.iter_mut().for_each(ZoneSim::reset);
            for b in &mut c.batteries {
                b.state = b.initial.clone();
                b.throughput_kwh = 0.0;
            }
        }
    }

    pub fn step(&mut self) -> Result<StepRecord, RuntimeError> {
        let env = self.env.as_ref().ok_or(RuntimeError::Uninitialized)?;
        if self.is_done() {
            return Err(RuntimeError::InvalidValue("horizon exhausted; reset the environment".into()));
        }
        let k = self.cursor;
        let dt = env.timestep_s;
        let dt_h = dt / 3600.0;
        let hour = (k as f64 * dt_h).rem_euclid(24.0);
        let mut rec = StepRecord {
            step: k,
            hour,
            outdoor_c: 0.0,
            irradiance_wm2: 0.0,
            occupancy: 0.0,
            price: 0.0,
            peak: self.peak_window.is_some_and(|w| w.contains(hour)),
            zone_temps: BTreeMap::new(),
            q_cool_w: 0.0,
            chiller_elec_kw: 0.0,
            fan_kw: 0.0,
            pump_kw: 0.0,
            tower_kw: 0.0,
            hvac_elec_kw: 0.0,
            plug_load_kw: 0.0,
            load_kw: 0.0,
            pv_gen_kw: 0.0,
            pv_to_load_kw: 0.0,
            pv_to_battery_kw: 0.0,
            pv_used_kw: 0.0,
            curtailed_kw: 0.0,
            batt_charge_kw: 0.0,
            batt_discharge_kw: 0.0,
            batt_delivered_kw: 0.0,
            grid_import_kw: 0.0,
            cost: 0.0,
            soc: BTreeMap::new(),
        };
        for (ci, cluster) in self.clusters.iter_mut().enumerate() {
            // disturbances
            let s = cluster.drivers[k];
            if ci == 0 {
                rec.outdoor_c = s.outdoor_c;
                rec.irradiance_wm2 = s.irradiance_wm2;
                rec.occupancy = s.occupancy;
                rec.price = s.price;
            }
            // controllers
            let targets: Vec<Option<f64>> = cluster.zones.iter_mut().map(|z| z.control(hour)).collect();
            let commands: Vec<BatteryCmd> = cluster.batteries.iter().map(|b| b.command(hour)).collect();

            // dynamics: thermal
            let mut q_hvac = vec![0.0; cluster.hvacs.len()];
            for (z, target) in cluster.zones.iter_mut().zip(targets) {
                let q_int = z.gain_w * s.occupancy;
                let q = match target {
                    Some(target) if z.capacity_w > 0.0 => {
                        physics::cooling_demand(z.t, s.outdoor_c, z.r, z.c, q_int, dt, target).clamp(0.0, z.capacity_w)
                    }
                    _ => 0.0,
                };
                z.t = physics::zone_step(z.t, s.outdoor_c, z.r, z.c, q_int, q, dt);
                if q > 0.0 {
                    for &(hi, share) in &z.serving {
                        q_hvac[hi] += q * share / z.capacity_w;
                    }
                }
                rec.q_cool_w += q;
                rec.zone_temps.insert(z.key.clone(), z.t);
            }
            let mut hvac_kw = 0.0;
            for (cfg, q) in cluster.hvacs.iter().zip(&q_hvac) {
                let p = physics::hvac_power(cfg, *q);
                rec.chiller_elec_kw += p.chiller / 1000.0;
                rec.fan_kw += p.fan / 1000.0;
                rec.pump_kw += p.pump / 1000.0;
                rec.tower_kw += p.tower / 1000.0;
                hvac_kw += p.total() / 1000.0;
            }

            // dynamics: electrical
            let plug = cluster.plug_kw * s.occupancy;
            let load = plug + hvac_kw;
            let pv = physics::pv_output_kw(cluster.pv_kw, s.irradiance_wm2);
            let pv_to_load = pv.min(load);
            let mut residual = load - pv_to_load;
            let mut surplus = pv - pv_to_load;
            let (mut from_pv, mut from_grid, mut drain, mut delivered) = (0.0, 0.0, 0.0, 0.0);
            for (b, cmd) in cluster.batteries.iter_mut().zip(commands) {
                match cmd {
                    BatteryCmd::Discharge => {
                        let p = b.state.discharge(residual, dt_h);
                        residual -= p;
                        delivered += p;
                        drain += p / b.state.spec.discharge_eff;
                        b.throughput_kwh += p / b.state.spec.discharge_eff * dt_h;
                    }
                    BatteryCmd::Charge => {
                        let p_pv = b.state.charge(surplus, dt_h);
                        surplus -= p_pv;
                        from_pv += p_pv;
                        let p_grid = b.state.charge(b.state.spec.max_power - p_pv, dt_h);
                        from_grid += p_grid;
                        b.throughput_kwh += (p_pv + p_grid) * dt_h;
                    }
                    BatteryCmd::Idle { store_surplus: true } => {
                        let p_pv = b.state.charge(surplus, dt_h);
                        surplus -= p_pv;
                        from_pv += p_pv;
                        b.throughput_kwh += p_pv * dt_h;
                    }
                    BatteryCmd::Idle { store_surplus: false } => {}
                }
                rec.soc.insert(b.der_id.clone(), b.state.soc);
            }
            let grid = residual + from_grid;
            rec.hvac_elec_kw += hvac_kw;
            rec.plug_load_kw += plug;
            rec.load_kw += load;
            rec.pv_gen_kw += pv;
            rec.pv_to_load_kw += pv_to_load;
            rec.pv_to_battery_kw += from_pv;
            rec.pv_used_kw += pv_to_load + from_pv;
            rec.curtailed_kw += surplus;
            rec.batt_charge_kw += from_pv + from_grid;
            rec.batt_discharge_kw += drain;
            rec.batt_delivered_kw += delivered;
            rec.grid_import_kw += grid;
            rec.cost += grid * s.price * dt_h;
        }
        check_finite(&rec)?;
        self.cursor += 1;
        Ok(rec)
    }

    /// Runs the whole horizon from the current state.
    pub fn run(mut self, run_id: &str) -> Result<SimulationResult, RuntimeError> {
        let env = self.env.clone().ok_or(RuntimeError::Uninitialized)?;
        let mut records = Vec::with_capacity(self.steps);
        while !self.is_done() {
            records.push(self.step()?);
        }
        let batteries = self
            .clusters
            .iter()
            .flat_map(|c| &c.batteries)
            .map(|b| {
                let s = &b.initial.spec;
                (
                    b.der_id.clone(),
                    BatteryMeta {
                        capacity_kwh: s.capacity,
                        initial_soc: s.soc,
                        soc_min: s.soc_min,
                        soc_max: s.soc_max,
                        throughput_kwh: b.throughput_kwh,
                    },
                )
            })
            .collect();
        Ok(SimulationResult {
            run_id: run_id.to_string(),
            config_id: self.config_id,
            timestep_s: env.timestep_s,
            horizon_hours: env.horizon_hours,
            peak_window: self.peak_window.unwrap_or(crate::model::PEAK_WINDOW),
            comfort_bands: self.comfort_bands,
            batteries,
            records,
        })
    }
}

fn check_finite(rec: &StepRecord) -> Result<(), RuntimeError> {
    let scalars = [
        ("q_cool_w", rec.q_cool_w),
        ("hvac_elec_kw", rec.hvac_elec_kw),
        ("load_kw", rec.load_kw),
        ("pv_gen_kw", rec.pv_gen_kw),
        ("grid_import_kw", rec.grid_import_kw),
        ("cost", rec.cost),
    ];
    for (name, v) in scalars {
        if !v.is_finite() {
            return Err(RuntimeError::NonFiniteState { step: rec.step, detail: format!("{name} = {v}") });
        }
    }
    for (key, v) in rec.zone_temps.iter().chain(&rec.soc) {
        if !v.is_finite() {
            return Err(RuntimeError::NonFiniteState { step: rec.step, detail: format!("{key} = {v}") });
        }
    }
    Ok(())
}
