//! Entity hierarchy: configuration → cluster → building / system → component.
//!
//! Field names double as tool argument names, so updates are applied by
//! merging JSON patches into the serialized entity and decoding it back.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::RuntimeError;

pub type JsonMap = serde_json::Map<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub config_id: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub active: bool,
    #[serde(default)]
    pub metadata: JsonMap,
    #[serde(default)]
    pub clusters: BTreeMap<String, Cluster>,
    #[serde(default)]
    pub environments: BTreeMap<String, Environment>,
    #[serde(default)]
    pub selection: Selection,
}

impl Configuration {
    pub fn new(config_id: &str) -> Self {
        Self {
            config_id: config_id.to_string(),
            description: String::new(),
            active: false,
            metadata: JsonMap::new(),
            clusters: BTreeMap::new(),
            environments: BTreeMap::new(),
            selection: Selection::default(),
        }
    }
}

/// The entities most recently picked with a `*_select` tool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub building: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hvac: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub der: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub metadata: JsonMap,
    #[serde(default)]
    pub buildings: BTreeMap<String, Building>,
    #[serde(default)]
    pub hvac_systems: BTreeMap<String, HvacSystem>,
    #[serde(default)]
    pub der_systems: BTreeMap<String, DerSystem>,
    #[serde(default)]
    pub controllers: BTreeMap<String, Controller>,
    #[serde(default)]
    pub disturbances: BTreeMap<String, Disturbance>,
}

impl Cluster {
    pub fn new(cluster_id: &str) -> Self {
        Self {
            cluster_id: cluster_id.to_string(),
            name: String::new(),
            metadata: JsonMap::new(),
            buildings: BTreeMap::new(),
            hvac_systems: BTreeMap::new(),
            der_systems: BTreeMap::new(),
            controllers: BTreeMap::new(),
            disturbances: BTreeMap::new(),
        }
    }

    /// Domain groupings: HVAC systems are thermal, DER systems electrical,
    /// buildings with a water zone water.
    pub fn domains(&self) -> Domains {
        Domains {
            thermal: self.hvac_systems.keys().cloned().collect(),
            electrical: self.der_systems.keys().cloned().collect(),
            water: self.buildings.values().filter(|b| b.water_zone.is_some()).map(|b| b.building_id.clone()).collect(),
        }
    }

    /// Every id used by an entity in this cluster.
    pub fn contains_id(&self, id: &str) -> bool {
        self.buildings.contains_key(id)
            || self.hvac_systems.contains_key(id)
            || self.der_systems.contains_key(id)
            || self.controllers.contains_key(id)
            || self.disturbances.contains_key(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domains {
    pub thermal: Vec<String>,
    pub electrical: Vec<String>,
    pub water: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub building_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub zones: Vec<ThermalZone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrical_zone: Option<ElectricalZone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_zone: Option<WaterZone>,
}

impl Building {
    pub fn new(building_id: &str) -> Self {
        Self {
            building_id: building_id.to_string(),
            name: String::new(),
            zones: Vec::new(),
            electrical_zone: None,
            water_zone: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalZone {
    pub zone_id: String,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    #[serde(rename = "capacitance_J_per_C")]
    pub capacitance: f64,
    #[serde(rename = "resistance_C_per_W")]
    pub resistance: f64,
    #[serde(rename = "internal_gain_W")]
    pub internal_gain_w: f64,
    #[serde(rename = "setpoint_C")]
    pub setpoint_c: f64,
    #[serde(rename = "deadband_C")]
    pub deadband_c: f64,
    #[serde(rename = "comfort_band_C")]
    pub comfort_band_c: [f64; 2],
}

impl ThermalZone {
    pub fn new(zone_id: &str) -> Self {
        Self {
            zone_id: zone_id.to_string(),
            temperature_c: 24.0,
            capacitance: 1.0e7,
            resistance: 2.0e-3,
            internal_gain_w: 500.0,
            setpoint_c: 24.0,
            deadband_c: 1.0,
            comfort_band_c: [21.0, 26.0],
        }
    }

    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), String> {
        let z = &self.zone_id;
        if !(self.capacitance > 0.0 && self.capacitance.is_finite()) {
            return Err(format!("zone '{z}': capacitance must be > 0"));
        }
        if !(self.resistance > 0.0 && self.resistance.is_finite()) {
            return Err(format!("zone '{z}': resistance must be > 0"));
        }
        if !(self.deadband_c >= 0.0) {
            return Err(format!("zone '{z}': deadband must be >= 0"));
        }
        let [lo, hi] = self.comfort_band_c;
        if !(lo < hi) {
            return Err(format!("zone '{z}': comfort band low must be below high"));
        }
        if ![self.temperature_c, self.internal_gain_w, self.setpoint_c].iter().all(|v| v.is_finite()) {
            return Err(format!("zone '{z}': non-finite value"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricalZone {
    pub zone_id: String,
    pub base_load_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterZone {
    pub zone_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FanCtrlType {
    Constant,
    Staged,
    Vfd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fan {
    pub rated_flow_m3s: f64,
    #[serde(rename = "rated_power_W")]
    pub rated_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanCtrl {
    pub ctrl_type: FanCtrlType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rated_flow_m3s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coil {
    pub effectiveness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pump {
    pub rated_flow_m3s: f64,
    #[serde(rename = "rated_power_W")]
    pub rated_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chiller {
    #[serde(rename = "rated_capacity_W")]
    pub rated_capacity_w: f64,
    pub rated_cop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    #[serde(rename = "rated_capacity_W")]
    pub rated_capacity_w: f64,
    #[serde(rename = "rated_fan_power_W")]
    pub rated_fan_power_w: f64,
    pub pump_power_per_flow: f64,
    #[serde(rename = "min_approach_C")]
    pub min_approach_c: f64,
    #[serde(rename = "max_approach_C")]
    pub max_approach_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacConfig {
    pub fan: Fan,
    pub fan_ctrl: FanCtrl,
    pub coil: Coil,
    pub pump: Pump,
    pub chiller: Chiller,
    pub tower: Tower,
}

impl Default for HvacConfig {
    /// Typical residential fan-coil unit.
    fn default() -> Self {
        Self {
            fan: Fan { rated_flow_m3s: 0.4, rated_power_w: 400.0 },
            fan_ctrl: FanCtrl { ctrl_type: FanCtrlType::Constant, rated_flow_m3s: Some(0.4), stages: None },
            coil: Coil { effectiveness: 0.7 },
            pump: Pump { rated_flow_m3s: 0.01, rated_power_w: 1500.0 },
            chiller: Chiller { rated_capacity_w: 15000.0, rated_cop: 4.5 },
            tower: Tower {
                rated_capacity_w: 15000.0,
                rated_fan_power_w: 400.0,
                pump_power_per_flow: 85000.0,
                min_approach_c: 3.0,
                max_approach_c: 7.0,
            },
        }
    }
}

impl HvacConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.chiller.rated_cop > 0.0 && self.chiller.rated_cop.is_finite()) {
            return Err("chiller.rated_cop must be > 0".into());
        }
        let eff = self.coil.effectiveness;
        if !(eff > 0.0 && eff <= 1.0) {
            return Err("coil.effectiveness must be in (0, 1]".into());
        }
        if self.fan_ctrl.ctrl_type == FanCtrlType::Staged && self.fan_ctrl.stages.unwrap_or(0) < 2 {
            return Err("fan_ctrl.stages must be >= 2 when ctrl_type is staged".into());
        }
        let nonneg = [
            ("fan.rated_flow_m3s", self.fan.rated_flow_m3s),
            ("fan.rated_power_W", self.fan.rated_power_w),
            ("pump.rated_flow_m3s", self.pump.rated_flow_m3s),
            ("pump.rated_power_W", self.pump.rated_power_w),
            ("chiller.rated_capacity_W", self.chiller.rated_capacity_w),
            ("tower.rated_capacity_W", self.tower.rated_capacity_w),
            ("tower.rated_fan_power_W", self.tower.rated_fan_power_w),
            ("tower.pump_power_per_flow", self.tower.pump_power_per_flow),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a finite value >= 0"));
            }
        }
        if self.tower.min_approach_c > self.tower.max_approach_c {
            return Err("tower.min_approach_C exceeds max_approach_C".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvacSystem {
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_name: Option<String>,
    pub system_config: HvacConfig,
    #[serde(default)]
    pub parameters: JsonMap,
    #[serde(default)]
    pub buildings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    /// kWh
    pub capacity: f64,
    pub soc: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    /// kW
    pub max_power: f64,
}

impl Default for Battery {
    fn default() -> Self {
        Self {
            capacity: 13.5,
            soc: 0.5,
            soc_min: 0.1,
            soc_max: 0.95,
            charge_eff: 0.95,
            discharge_eff: 0.95,
            max_power: 5.0,
        }
    }
}

impl Battery {
    pub fn check(&self) -> Result<(), String> {
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err("battery.capacity must be > 0".into());
        }
        if !(0.0 <= self.soc_min && self.soc_min <= self.soc && self.soc <= self.soc_max && self.soc_max <= 1.0) {
            return Err("battery soc must satisfy 0 <= soc_min <= soc <= soc_max <= 1".into());
        }
        for (name, e) in [("charge_eff", self.charge_eff), ("discharge_eff", self.discharge_eff)] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(format!("battery.{name} must be in (0, 1]"));
            }
        }
        if !(self.max_power >= 0.0 && self.max_power.is_finite()) {
            return Err("battery.max_power must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pv {
    pub rated_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerSystem {
    pub system_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<Battery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv: Option<Pv>,
    /// Cumulative |charge| + |discharge| energy from completed runs, kWh.
    #[serde(default)]
    pub throughput_kwh: f64,
    #[serde(default)]
    pub buildings: Vec<String>,
}

impl DerSystem {
    pub fn check(&self) -> Result<(), String> {
        if let Some(b) = &self.battery {
            b.check()?;
        }
        if let Some(pv) = &self.pv {
            if !(pv.rated_kw >= 0.0 && pv.rated_kw.is_finite()) {
                return Err("pv.rated_kw must be >= 0".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    ThermostatDeadband,
    Precool,
    DerSchedule,
}

impl ControllerKind {
    pub fn targets_hvac(self) -> bool {
        !matches!(self, ControllerKind::DerSchedule)
    }

    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::ThermostatDeadband => "thermostat_deadband",
            ControllerKind::Precool => "precool",
            ControllerKind::DerSchedule => "der_schedule",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    #[serde(rename = "offset_C", default, skip_serializing_if = "Option::is_none")]
    pub offset_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_start_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_start_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge_end_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discharge_start_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discharge_end_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_pv_surplus: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controller {
    pub controller_id: String,
    pub kind: ControllerKind,
    pub params: ControllerParams,
    pub assigned_system: String,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

/// Hour window `[start, end)` within a day. `start > end` wraps midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourWindow {
    pub start: f64,
    pub end: f64,
}

impl HourWindow {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, hour: f64) -> bool {
        let h = hour.rem_euclid(24.0);
        if self.start <= self.end {
            self.start <= h && h < self.end
        } else {
            h >= self.start || h < self.end
        }
    }

    fn check(&self, what: &str) -> Result<(), String> {
        let ok = |h: f64| (0.0..24.0).contains(&h);
        if ok(self.start) && (ok(self.end) || self.end == 24.0) {
            Ok(())
        } else {
            Err(format!("{what} window hours must lie within [0, 24)"))
        }
    }
}

pub const PRECOOL_WINDOW: HourWindow = HourWindow { start: 14.0, end: 16.0 };
pub const PRECOOL_OFFSET_C: f64 = 2.0;
pub const CHARGE_WINDOW: HourWindow = HourWindow { start: 10.0, end: 14.0 };
pub const PEAK_WINDOW: HourWindow = HourWindow { start: 16.0, end: 20.0 };

impl Controller {
    pub fn precool_window(&self) -> HourWindow {
        HourWindow::new(
            self.params.window_start_hour.unwrap_or(PRECOOL_WINDOW.start),
            self.params.window_end_hour.unwrap_or(PRECOOL_WINDOW.end),
        )
    }

    pub fn precool_offset(&self) -> f64 {
        self.params.offset_c.unwrap_or(PRECOOL_OFFSET_C)
    }

    pub fn charge_window(&self) -> HourWindow {
        HourWindow::new(
            self.params.charge_start_hour.unwrap_or(CHARGE_WINDOW.start),
            self.params.charge_end_hour.unwrap_or(CHARGE_WINDOW.end),
        )
    }

    pub fn discharge_window(&self) -> HourWindow {
        HourWindow::new(
            self.params.discharge_start_hour.unwrap_or(PEAK_WINDOW.start),
            self.params.discharge_end_hour.unwrap_or(PEAK_WINDOW.end),
        )
    }

    pub fn store_pv_surplus(&self) -> bool {
        self.params.store_pv_surplus.unwrap_or(true)
    }

    pub fn check(&self) -> Result<(), String> {
        let id = &self.controller_id;
        match self.kind {
            ControllerKind::ThermostatDeadband => Ok(()),
            ControllerKind::Precool => {
                let off = self.precool_offset();
                if !(off > 0.0 && off.is_finite()) {
                    return Err(format!("controller '{id}': precool offset must be > 0"));
                }
                self.precool_window().check(&format!("controller '{id}': precool"))
            }
            ControllerKind::DerSchedule => {
                self.charge_window().check(&format!("controller '{id}': charge"))?;
                self.discharge_window().check(&format!("controller '{id}': discharge"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceKind {
    Weather,
    Occupancy,
    Price,
}

impl DisturbanceKind {
    pub fn label(self) -> &'static str {
        match self {
            DisturbanceKind::Weather => "weather",
            DisturbanceKind::Occupancy => "occupancy",
            DisturbanceKind::Price => "price",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub disturbance_id: String,
    pub kind: DisturbanceKind,
    /// Built-in profile name; ignored when `series` or `csv_path` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
    /// Inline samples at the environment timestep. Weather samples are maps
    /// `{outdoor_c, irradiance_wm2}`; occupancy and price samples are numbers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_peak_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_start_hour: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_end_hour: Option<f64>,
}

impl Disturbance {
    pub fn new(disturbance_id: &str, kind: DisturbanceKind) -> Self {
        Self {
            disturbance_id: disturbance_id.to_string(),
            kind,
            profile: None,
            csv_path: None,
            series: None,
            off_peak_price: None,
            peak_price: None,
            peak_start_hour: None,
            peak_end_hour: None,
        }
    }

    pub fn peak_window(&self) -> HourWindow {
        HourWindow::new(
            self.peak_start_hour.unwrap_or(PEAK_WINDOW.start),
            self.peak_end_hour.unwrap_or(PEAK_WINDOW.end),
        )
    }

    pub fn check(&self) -> Result<(), String> {
        if self.kind != DisturbanceKind::Price
            && (self.off_peak_price.is_some()
                || self.peak_price.is_some()
                || self.peak_start_hour.is_some()
                || self.peak_end_hour.is_some())
        {
            return Err(format!(
                "disturbance '{}': price fields only apply to price disturbances",
                self.disturbance_id
            ));
        }
        if self.kind == DisturbanceKind::Price {
            self.peak_window().check(&format!("disturbance '{}': peak", self.disturbance_id))?;
            for p in [self.off_peak_price, self.peak_price].into_iter().flatten() {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(format!("disturbance '{}': prices must be >= 0", self.disturbance_id));
                }
            }
        }
        Ok(())
    }
}

pub const DEFAULT_TIMESTEP_S: f64 = 900.0;
pub const DEFAULT_HORIZON_HOURS: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub env_id: String,
    pub timestep_s: f64,
    pub horizon_hours: f64,
}

impl Environment {
    pub fn new(env_id: &str) -> Self {
        Self { env_id: env_id.to_string(), timestep_s: DEFAULT_TIMESTEP_S, horizon_hours: DEFAULT_HORIZON_HOURS }
    }

    /// Number of whole steps in the horizon.
    pub fn steps(&self) -> Result<usize, String> {
        if !(self.timestep_s > 0.0 && self.timestep_s.is_finite()) {
            return Err("timestep_s must be > 0".into());
        }
        if !(self.horizon_hours > 0.0 && self.horizon_hours.is_finite()) {
            return Err("horizon_hours must be > 0".into());
        }
        let n = self.horizon_hours * 3600.0 / self.timestep_s;
        if (n - n.round()).abs() > 1e-9 {
            return Err(format!(
                "horizon of {} h is not a whole number of {} s steps",
                self.horizon_hours, self.timestep_s
            ));
        }
        Ok(n.round() as usize)
    }
}

/// Recursively merges `patch` into `base`. Objects merge key by key; any
/// other value replaces. A `null` in the patch leaves the base untouched.
pub fn deep_merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => deep_merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) if !p.is_null() => *b = p.clone(),
        _ => {}
    }
}

/// Applies a JSON patch to a serializable entity and decodes the result.
pub fn patched<T>(entity: &T, patch: &JsonMap) -> Result<T, RuntimeError>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut value = serde_json::to_value(entity).expect("entity serializes");
    deep_merge(&mut value, &Value::Object(patch.clone()));
    serde_json::from_value(value).map_err(|e| RuntimeError::InvalidValue(e.to_string()))
}
