//! The runtime's tool catalog: one registered tool per (entity, verb) pair,
//! all sharing a single runtime instance behind a mutex.

use std::sync::{Arc, Mutex, PoisonError};

use bemas_toolbus::{
    HandlerError, ParamKind as K, ParamSpec as P, RegistryError, ToolCategory as Cat, ToolOutput, ToolRegistry,
    ToolSpec,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::Facet;
use crate::disturbance::{OCCUPANCY_PROFILES, PRICE_PROFILES, WEATHER_PROFILES};
use crate::error::RuntimeError;
use crate::model::*;
use crate::runtime::{RunRequest, Runtime};

pub type SharedRuntime = Arc<Mutex<Runtime>>;

/// Wraps `rt` for sharing and returns a registry holding the full catalog.
pub fn shared_registry(rt: Runtime) -> (SharedRuntime, ToolRegistry) {
    let shared = Arc::new(Mutex::new(rt));
    let mut reg = ToolRegistry::new();
    register_tools(&mut reg, shared.clone()).expect("built-in catalog is valid");
    (shared, reg)
}

struct Catalog<'r> {
    reg: &'r mut ToolRegistry,
    rt: SharedRuntime,
}

impl Catalog<'_> {
    fn add<F>(&mut self, spec: ToolSpec, f: F) -> Result<(), RegistryError>
    where
        F: Fn(&mut Runtime, &JsonMap) -> Result<ToolOutput, RuntimeError> + Send + Sync + 'static,
    {
        let rt = self.rt.clone();
        self.reg.register(spec, move |args: &JsonMap| -> Result<ToolOutput, HandlerError> {
            let mut guard = rt.lock().unwrap_or_else(PoisonError::into_inner);
            f(&mut guard, args).map_err(|e| Box::new(e) as HandlerError)
        })?;
        Ok(())
    }
}

fn s<'a>(a: &'a JsonMap, k: &str) -> &'a str {
    a.get(k).and_then(Value::as_str).unwrap_or_default()
}

fn os<'a>(a: &'a JsonMap, k: &str) -> Option<&'a str> {
    a.get(k).and_then(Value::as_str)
}

fn of(a: &JsonMap, k: &str) -> Option<f64> {
    a.get(k).and_then(Value::as_f64)
}

fn ob(a: &JsonMap, k: &str) -> Option<bool> {
    a.get(k).and_then(Value::as_bool)
}

fn om<'a>(a: &'a JsonMap, k: &str) -> Option<&'a JsonMap> {
    a.get(k).and_then(Value::as_object)
}

fn ol(a: &JsonMap, k: &str) -> Vec<String> {
    a.get(k)
        .and_then(Value::as_array)
        .map(|v| v.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

/// Copies the listed keys that are present in `a` into a fresh map.
fn pick(a: &JsonMap, keys: &[&str]) -> JsonMap {
    keys.iter().filter_map(|k| a.get(*k).map(|v| (k.to_string(), v.clone()))).collect()
}

fn val<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("runtime entities serialize")
}

fn out(data: Value, msg: impl Into<String>) -> Result<ToolOutput, RuntimeError> {
    let Value::Object(map) = data else { unreachable!("tool data is always an object") };
    Ok(ToolOutput::new(map, msg))
}

fn num(name: &str, desc: &str) -> P {
    P::optional(name, K::Number, desc)
}

fn component_fields() -> Vec<P> {
    vec![
        P::optional("fan", K::Map, "Supply fan").with_fields(vec![
            num("rated_flow_m3s", "Rated air flow, m3/s"),
            num("rated_power_W", "Rated fan power, W"),
        ]),
        P::optional("fan_ctrl", K::Map, "Fan control logic").with_fields(vec![
            P::optional("ctrl_type", K::Enum, "Fan control strategy").with_enum(["constant", "staged", "vfd"]),
            num("rated_flow_m3s", "Rated air flow, m3/s"),
            P::optional("stages", K::Integer, "Number of stages (staged control only, >= 2)"),
        ]),
        P::optional("coil", K::Map, "Cooling coil").with_fields(vec![num("effectiveness", "Coil effectiveness, 0-1")]),
        P::optional("pump", K::Map, "Chilled-water pump").with_fields(vec![
            num("rated_flow_m3s", "Rated water flow, m3/s"),
            num("rated_power_W", "Rated pump power, W"),
        ]),
        P::optional("chiller", K::Map, "Chiller").with_fields(vec![
            num("rated_capacity_W", "Rated cooling capacity, W"),
            num("rated_cop", "Rated coefficient of performance"),
        ]),
        P::optional("tower", K::Map, "Cooling tower").with_fields(vec![
            num("rated_capacity_W", "Rated heat rejection, W"),
            num("rated_fan_power_W", "Rated tower fan power, W"),
            num("pump_power_per_flow", "Condenser pump power per flow, W/(m3/s)"),
            num("min_approach_C", "Minimum approach temperature, C"),
            num("max_approach_C", "Maximum approach temperature, C"),
        ]),
    ]
}

fn battery_fields() -> Vec<P> {
    vec![
        num("capacity", "Usable capacity, kWh"),
        num("soc", "Initial state of charge, 0-1"),
        num("soc_min", "Lower state-of-charge bound, 0-1"),
        num("soc_max", "Upper state-of-charge bound, 0-1"),
        num("charge_eff", "Charging efficiency, 0-1"),
        num("discharge_eff", "Discharging efficiency, 0-1"),
        num("max_power", "Maximum charge/discharge power, kW"),
    ]
}

fn pv_fields() -> Vec<P> {
    vec![num("rated_kw", "Rated PV output at 1000 W/m2, kW")]
}

fn zone_fields() -> Vec<P> {
    vec![
        num("temperature_C", "Initial zone temperature, C"),
        num("capacitance_J_per_C", "Thermal capacitance, J/C"),
        num("resistance_C_per_W", "Envelope thermal resistance, C/W"),
        num("internal_gain_W", "Internal heat gain at full occupancy, W"),
        num("setpoint_C", "Cooling setpoint, C"),
        num("deadband_C", "Thermostat deadband, C"),
        P::optional("comfort_band_C", K::List, "Comfort band [low, high], C").with_items(K::Number),
    ]
}

const ZONE_KEYS: [&str; 7] = [
    "temperature_C",
    "capacitance_J_per_C",
    "resistance_C_per_W",
    "internal_gain_W",
    "setpoint_C",
    "deadband_C",
    "comfort_band_C",
];
const COMPONENT_KEYS: [&str; 6] = ["fan", "fan_ctrl", "coil", "pump", "chiller", "tower"];
const HVAC_CTRL_KEYS: [&str; 3] = ["offset_C", "window_start_hour", "window_end_hour"];
const DER_CTRL_KEYS: [&str; 5] =
    ["charge_start_hour", "charge_end_hour", "discharge_start_hour", "discharge_end_hour", "store_pv_surplus"];
const PRICE_KEYS: [&str; 4] = ["off_peak_price", "peak_price", "peak_start_hour", "peak_end_hour"];

fn hvac_ctrl_params() -> Vec<P> {
    vec![
        num("offset_C", "Precool setpoint reduction, C (> 0)"),
        num("window_start_hour", "Precool window start hour, 0-24"),
        num("window_end_hour", "Precool window end hour, 0-24"),
    ]
}

fn der_ctrl_params() -> Vec<P> {
    vec![
        num("charge_start_hour", "Charging window start hour, 0-24"),
        num("charge_end_hour", "Charging window end hour, 0-24"),
        num("discharge_start_hour", "Discharge window start hour, 0-24 (defaults to the price peak window)"),
        num("discharge_end_hour", "Discharge window end hour, 0-24"),
        P::optional("store_pv_surplus", K::Boolean, "Store surplus PV outside the charge window"),
    ]
}

fn price_params() -> Vec<P> {
    vec![
        num("off_peak_price", "Off-peak energy price, $/kWh"),
        num("peak_price", "Peak energy price, $/kWh"),
        num("peak_start_hour", "Peak window start hour, 0-24"),
        num("peak_end_hour", "Peak window end hour, 0-24"),
    ]
}

fn source_params() -> Vec<P> {
    vec![
        P::optional(
            "csv_path",
            K::String,
            "CSV file with timestamp,outdoor_c,irradiance_wm2,occupancy,price_per_kwh columns",
        ),
        P::optional("series", K::List, "Inline samples, one per timestep"),
    ]
}

fn parse_facet(name: &str) -> Facet {
    name.parse().expect("facet names are fixed by the catalog")
}

/// Registers the complete catalog against a shared runtime.
pub fn register_tools(reg: &mut ToolRegistry, rt: SharedRuntime) -> Result<(), RegistryError> {
    let mut c = Catalog { reg, rt };
    config_tools(&mut c)?;
    cluster_tools(&mut c)?;
    building_tools(&mut c)?;
    hvac_tools(&mut c)?;
    der_tools(&mut c)?;
    controller_tools(&mut c)?;
    disturbance_tools(&mut c)?;
    environment_tools(&mut c)?;
    simulation_tools(&mut c)?;
    analysis_tools(&mut c)?;
    comparison_tools(&mut c)
}

fn config_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let cfg_id = || P::optional("config_id", K::String, "Configuration ID (defaults to the active configuration)");
    c.add(
        ToolSpec::new("config_create", Cat::Configuration, "Create a new configuration")
            .param(P::required("config_id", K::String, "Unique identifier for the configuration"))
            .param(P::optional("description", K::String, "Free-text description"))
            .param(
                P::optional("from_reference", K::Boolean, "Start from a copy of the reference setup")
                    .with_default(false),
            )
            .param(P::optional("set_active", K::Boolean, "Make the new configuration active").with_default(true)),
        |rt, a| {
            let id = s(a, "config_id");
            let cfg = rt.create_config(
                id,
                os(a, "description").unwrap_or_default(),
                ob(a, "from_reference").unwrap_or(false),
                ob(a, "set_active").unwrap_or(true),
            )?;
            let active = cfg.active;
            out(json!({"config_id": id, "active": active}), format!("Configuration '{id}' created"))
        },
    )?;
    c.add(
        ToolSpec::new("config_save", Cat::Configuration, "Save a configuration snapshot as JSON")
            .param(cfg_id())
            .param(P::optional("path", K::String, "Output path relative to the results directory")),
        |rt, a| {
            let (snapshot, path) = rt.save_config(os(a, "config_id"), os(a, "path"))?;
            let id = snapshot["config_id"].clone();
            let msg = match &path {
                Some(p) => format!("Configuration {id} saved to {p}"),
                None => format!("Configuration {id} snapshot returned (no results directory)"),
            };
            out(json!({"config_id": id, "path": path, "snapshot": snapshot}), msg)
        },
    )?;
    c.add(
        ToolSpec::new(
            "config_validate",
            Cat::Configuration,
            "Check a configuration for dangling references and invalid parameters",
        )
        .param(cfg_id()),
        |rt, a| {
            let errors = rt.validate(os(a, "config_id"))?;
            let id = match os(a, "config_id") {
                Some(id) => id.to_string(),
                None => rt.active_id().unwrap_or_default().to_string(),
            };
            let valid = errors.is_empty();
            let msg = if valid {
                format!("Configuration '{id}' is valid")
            } else {
                format!("Configuration '{id}' has {} problem(s)", errors.len())
            };
            out(json!({"config_id": id, "valid": valid, "errors": errors}), msg)
        },
    )?;
    c.add(
        ToolSpec::new("config_set_active", Cat::Configuration, "Make a configuration the active one")
            .param(P::required("config_id", K::String, "Configuration ID")),
        |rt, a| {
            let id = s(a, "config_id");
            rt.set_active(id)?;
            out(json!({"config_id": id, "active": true}), format!("Configuration '{id}' is now active"))
        },
    )?;
    c.add(
        ToolSpec::new("config_list", Cat::Configuration, "List all configurations"),
        |rt, _| {
            let list: Vec<Value> = rt
                .configs()
                .map(|c| json!({"config_id": c.config_id, "description": c.description, "active": c.active, "clusters": c.clusters.keys().collect::<Vec<_>>()}))
                .collect();
            let n = list.len();
            out(json!({"configurations": list}), format!("{n} configuration(s)"))
        },
    )?;
    c.add(
        ToolSpec::new("config_query", Cat::Configuration, "Return the full contents of a configuration")
            .param(cfg_id()),
        |rt, a| {
            let cfg = match os(a, "config_id") {
                Some(id) => rt.config(id)?,
                None => rt.active()?,
            };
            let id = cfg.config_id.clone();
            out(json!({"configuration": val(cfg)}), format!("Configuration '{id}'"))
        },
    )
}

fn cluster_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("cluster_id", K::String, "Cluster ID");
    c.add(
        ToolSpec::new("cluster_add", Cat::Cluster, "Add a new building cluster to a configuration")
            .param(P::required("cluster_id", K::String, "Unique identifier for the cluster"))
            .param(P::optional("name", K::String, "Display name"))
            .param(P::optional("config_id", K::String, "Target configuration (defaults to the active one)")),
        |rt, a| {
            let id = s(a, "cluster_id");
            rt.add_cluster(id, os(a, "name"), os(a, "config_id"))?;
            out(json!({"cluster_id": id, "name": os(a, "name")}), format!("Cluster '{id}' added"))
        },
    )?;
    c.add(
        ToolSpec::new("cluster_update", Cat::Cluster, "Update cluster name or metadata")
            .param(id())
            .param(P::optional("name", K::String, "Display name"))
            .param(P::optional("metadata", K::Map, "Metadata entries to merge")),
        |rt, a| {
            let id = s(a, "cluster_id");
            let cl = rt.update_cluster(id, &pick(a, &["name", "metadata"]))?;
            out(json!({"cluster_id": id, "name": cl.name, "metadata": cl.metadata}), format!("Cluster '{id}' updated"))
        },
    )?;
    c.add(
        ToolSpec::new("cluster_remove", Cat::Cluster, "Remove a cluster and everything in it").param(id()),
        |rt, a| {
            let id = s(a, "cluster_id");
            rt.remove_cluster(id)?;
            out(json!({"cluster_id": id}), format!("Cluster '{id}' removed"))
        },
    )?;
    c.add(
        ToolSpec::new("cluster_query", Cat::Cluster, "Describe one cluster, or list all clusters").param(P::optional(
            "cluster_id",
            K::String,
            "Cluster ID (omit to list all)",
        )),
        |rt, a| match os(a, "cluster_id") {
            Some(id) => {
                let cl = rt.cluster(id)?;
                let summary = json!({
                    "cluster_id": cl.cluster_id,
                    "name": cl.name,
                    "buildings": cl.buildings.keys().collect::<Vec<_>>(),
                    "hvac_systems": cl.hvac_systems.keys().collect::<Vec<_>>(),
                    "der_systems": cl.der_systems.keys().collect::<Vec<_>>(),
                    "controllers": cl.controllers.keys().collect::<Vec<_>>(),
                    "disturbances": cl.disturbances.keys().collect::<Vec<_>>(),
                    "domains": val(&cl.domains()),
                });
                out(json!({"cluster": summary}), format!("Cluster '{id}'"))
            }
            None => {
                let ids: Vec<String> = rt.active()?.clusters.keys().cloned().collect();
                let n = ids.len();
                out(json!({"clusters": ids}), format!("{n} cluster(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new("cluster_select", Cat::Cluster, "Select the cluster subsequent operations default to")
            .param(id()),
        |rt, a| {
            let id = s(a, "cluster_id");
            rt.select_cluster(id)?;
            out(json!({"cluster_id": id, "selected": true}), format!("Cluster '{id}' selected"))
        },
    )
}

fn building_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("building_id", K::String, "Building ID");
    c.add(
        ToolSpec::new("building_add", Cat::Building, "Add a building to a cluster")
            .param(P::required("building_id", K::String, "Unique identifier for the building"))
            .param(P::required("cluster_id", K::String, "ID of the cluster to add the building to"))
            .param(P::optional("name", K::String, "Display name")),
        |rt, a| {
            let (id, cid) = (s(a, "building_id"), s(a, "cluster_id"));
            rt.add_building(cid, id, os(a, "name"))?;
            out(
                json!({"building_id": id, "cluster_id": cid, "name": os(a, "name")}),
                format!("Building '{id}' added to cluster '{cid}'"),
            )
        },
    )?;
    c.add(
        ToolSpec::new(
            "building_update",
            Cat::Building,
            "Update a building's name, a thermal zone, or its electrical zone",
        )
        .param(id())
        .param(P::optional("name", K::String, "Display name"))
        .param(P::optional("zone_id", K::String, "Thermal zone to update (optional when the building has one zone)"))
        .param(P::optional("thermal_zone", K::Map, "Thermal zone fields to change").with_fields(zone_fields()))
        .param(
            P::optional("electrical_zone", K::Map, "Electrical zone fields to change")
                .with_fields(vec![num("base_load_kw", "Plug/lighting base load, kW")]),
        ),
        |rt, a| {
            let id = s(a, "building_id");
            let b = rt.update_building(
                id,
                os(a, "name"),
                os(a, "zone_id"),
                om(a, "thermal_zone"),
                om(a, "electrical_zone"),
            )?;
            out(json!({"building": val(b)}), format!("Building '{id}' updated"))
        },
    )?;
    c.add(
        ToolSpec::new("building_remove", Cat::Building, "Remove a building that no system is assigned to").param(id()),
        |rt, a| {
            let id = s(a, "building_id");
            rt.remove_building(id)?;
            out(json!({"building_id": id}), format!("Building '{id}' removed"))
        },
    )?;
    c.add(
        ToolSpec::new("building_query", Cat::Building, "Describe one building, or list all buildings")
            .param(P::optional("building_id", K::String, "Building ID (omit to list all)")),
        |rt, a| match os(a, "building_id") {
            Some(id) => {
                let cid = rt.owner(crate::runtime::Entity::Building, id)?;
                let b = rt.building(id)?;
                out(json!({"cluster_id": cid, "building": val(b)}), format!("Building '{id}'"))
            }
            None => {
                let all: Vec<Value> = rt.buildings()?.into_iter().map(val).collect();
                let n = all.len();
                out(json!({"buildings": all}), format!("{n} building(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new("building_select", Cat::Building, "Select the building subsequent operations default to")
            .param(id()),
        |rt, a| {
            let id = s(a, "building_id");
            rt.select_building(id)?;
            out(json!({"building_id": id, "selected": true}), format!("Building '{id}' selected"))
        },
    )?;
    let mut tz = ToolSpec::new("building_add_thermal_zone", Cat::Building, "Add a thermal zone to a building")
        .param(id())
        .param(P::required("zone_id", K::String, "Unique zone identifier within the building"));
    for p in zone_fields() {
        tz = tz.param(p);
    }
    c.add(tz, |rt, a| {
        let (id, zid) = (s(a, "building_id"), s(a, "zone_id"));
        let zone: ThermalZone = patched(&ThermalZone::new(zid), &pick(a, &ZONE_KEYS))?;
        let zv = val(&zone);
        rt.add_thermal_zone(id, zone)?;
        out(json!({"building_id": id, "zone": zv}), format!("Thermal zone '{zid}' added to building '{id}'"))
    })?;
    c.add(
        ToolSpec::new(
            "building_add_electrical_zone",
            Cat::Building,
            "Add the electrical zone (plug and lighting load) to a building",
        )
        .param(id())
        .param(P::required("zone_id", K::String, "Zone identifier"))
        .param(num("base_load_kw", "Plug/lighting base load, kW").with_default(0.0)),
        |rt, a| {
            let (id, zid) = (s(a, "building_id"), s(a, "zone_id"));
            let zone = ElectricalZone { zone_id: zid.into(), base_load_kw: of(a, "base_load_kw").unwrap_or(0.0) };
            let zv = val(&zone);
            rt.add_electrical_zone(id, zone)?;
            out(json!({"building_id": id, "zone": zv}), format!("Electrical zone '{zid}' added to building '{id}'"))
        },
    )?;
    c.add(
        ToolSpec::new("building_add_water_zone", Cat::Building, "Add a water zone to a building (bookkeeping only)")
            .param(id())
            .param(P::required("zone_id", K::String, "Zone identifier")),
        |rt, a| {
            let (id, zid) = (s(a, "building_id"), s(a, "zone_id"));
            rt.add_water_zone(id, WaterZone { zone_id: zid.into() })?;
            out(json!({"building_id": id, "zone_id": zid}), format!("Water zone '{zid}' added to building '{id}'"))
        },
    )
}

fn hvac_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("system_id", K::String, "HVAC system ID");
    c.add(
        ToolSpec::new("hvac_add", Cat::Hvac, "Add a new HVAC system to a building cluster")
            .param(P::required("system_id", K::String, "Unique identifier for the HVAC system"))
            .param(P::required("cluster_id", K::String, "ID of the cluster to add the HVAC system to"))
            .param(P::optional(
                "system_name",
                K::String,
                "Display name for the system (e.g., 'FCU System', 'Office HVAC')",
            ))
            .param(
                P::optional(
                    "system_config",
                    K::Map,
                    "Component configuration; omitted components use fan-coil defaults",
                )
                .with_fields(component_fields()),
            )
            .param(P::optional("parameters", K::Map, "Additional HVAC parameters beyond system_config"))
            .param(P::optional("buildings", K::List, "Buildings served").with_items(K::String)),
        |rt, a| {
            let (id, cid) = (s(a, "system_id"), s(a, "cluster_id"));
            let cfg: HvacConfig = match om(a, "system_config") {
                Some(p) => patched(&HvacConfig::default(), p)?,
                None => HvacConfig::default(),
            };
            let sys = HvacSystem {
                system_id: id.into(),
                system_name: os(a, "system_name").map(str::to_string),
                system_config: cfg,
                parameters: om(a, "parameters").cloned().unwrap_or_default(),
                buildings: vec![],
            };
            rt.add_hvac(cid, sys)?;
            let buildings = ol(a, "buildings");
            if !buildings.is_empty() {
                if let Err(e) = rt.assign_hvac(id, &buildings) {
                    rt.remove_hvac(id)?;
                    return Err(e);
                }
            }
            let h = rt.hvac(id)?;
            out(
                json!({
                    "system_id": id,
                    "cluster_id": cid,
                    "system_type": "hvac_systems",
                    "system_name": h.system_name,
                    "system_config": val(&h.system_config),
                }),
                format!("HVAC system '{id}' added to cluster '{cid}'"),
            )
        },
    )?;
    let mut upd = ToolSpec::new(
        "hvac_update",
        Cat::Hvac,
        "Update HVAC component parameters (e.g. chiller COP); unspecified fields are kept",
    )
    .param(id())
    .param(P::optional("system_name", K::String, "Display name"));
    for p in component_fields() {
        upd = upd.param(p);
    }
    upd = upd.param(P::optional("parameters", K::Map, "Additional parameters to merge"));
    c.add(upd, |rt, a| {
        let id = s(a, "system_id");
        let h = rt.update_hvac(id, os(a, "system_name"), &pick(a, &COMPONENT_KEYS), om(a, "parameters"))?;
        out(json!({"system_id": id, "system_config": val(&h.system_config)}), format!("HVAC system '{id}' updated"))
    })?;
    c.add(
        ToolSpec::new("hvac_remove", Cat::Hvac, "Remove an HVAC system that no controller targets").param(id()),
        |rt, a| {
            let id = s(a, "system_id");
            rt.remove_hvac(id)?;
            out(json!({"system_id": id}), format!("HVAC system '{id}' removed"))
        },
    )?;
    c.add(
        ToolSpec::new("hvac_query", Cat::Hvac, "Describe one HVAC system, or list all").param(P::optional(
            "system_id",
            K::String,
            "HVAC system ID (omit to list all)",
        )),
        |rt, a| match os(a, "system_id") {
            Some(id) => {
                let cid = rt.owner(crate::runtime::Entity::Hvac, id)?;
                out(json!({"cluster_id": cid, "system": val(rt.hvac(id)?)}), format!("HVAC system '{id}'"))
            }
            None => {
                let all: Vec<Value> = rt.hvacs()?.into_iter().map(val).collect();
                let n = all.len();
                out(json!({"systems": all}), format!("{n} HVAC system(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new("hvac_assign_to_buildings", Cat::Hvac, "Assign an HVAC system to serve buildings")
            .param(id())
            .param(P::required("building_ids", K::List, "Buildings to serve").with_items(K::String)),
        |rt, a| {
            let id = s(a, "system_id");
            let h = rt.assign_hvac(id, &ol(a, "building_ids"))?;
            out(
                json!({"system_id": id, "buildings": h.buildings}),
                format!("HVAC system '{id}' assigned to {}", h.buildings.join(", ")),
            )
        },
    )?;
    c.add(
        ToolSpec::new("hvac_select", Cat::Hvac, "Select the HVAC system subsequent operations default to").param(id()),
        |rt, a| {
            let id = s(a, "system_id");
            rt.select_hvac(id)?;
            out(json!({"system_id": id, "selected": true}), format!("HVAC system '{id}' selected"))
        },
    )
}

fn der_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("system_id", K::String, "DER system ID");
    c.add(
        ToolSpec::new("der_add", Cat::Der, "Add a DER system (battery and/or PV) to a cluster")
            .param(P::required("system_id", K::String, "Unique identifier for the DER system"))
            .param(P::required("cluster_id", K::String, "ID of the cluster to add the system to"))
            .param(P::optional("system_name", K::String, "Display name"))
            .param(
                P::optional("battery", K::Map, "Battery parameters; omitted fields use defaults")
                    .with_fields(battery_fields()),
            )
            .param(P::optional("pv", K::Map, "PV array parameters").with_fields(pv_fields()))
            .param(P::optional("buildings", K::List, "Buildings served").with_items(K::String)),
        |rt, a| {
            let (id, cid) = (s(a, "system_id"), s(a, "cluster_id"));
            let battery = om(a, "battery").map(|p| patched(&Battery::default(), p)).transpose()?;
            let pv = om(a, "pv").map(|p| patched(&Pv { rated_kw: 0.0 }, p)).transpose()?;
            let sys = DerSystem {
                system_id: id.into(),
                system_name: os(a, "system_name").map(str::to_string),
                battery,
                pv,
                throughput_kwh: 0.0,
                buildings: vec![],
            };
            rt.add_der(cid, sys)?;
            let buildings = ol(a, "buildings");
            if !buildings.is_empty() {
                if let Err(e) = rt.assign_der(id, &buildings) {
                    rt.remove_der(id)?;
                    return Err(e);
                }
            }
            let d = rt.der(id)?;
            out(
                json!({"system_id": id, "cluster_id": cid, "system_type": "der_systems", "system": val(d)}),
                format!("DER system '{id}' added to cluster '{cid}'"),
            )
        },
    )?;
    c.add(
        ToolSpec::new(
            "der_update",
            Cat::Der,
            "Update battery or PV parameters (e.g. battery capacity); unspecified fields are kept",
        )
        .param(id())
        .param(P::optional("system_name", K::String, "Display name"))
        .param(P::optional("battery", K::Map, "Battery fields to change").with_fields(battery_fields()))
        .param(P::optional("pv", K::Map, "PV fields to change").with_fields(pv_fields())),
        |rt, a| {
            let id = s(a, "system_id");
            let d = rt.update_der(id, os(a, "system_name"), om(a, "battery"), om(a, "pv"))?;
            out(json!({"system_id": id, "system": val(d)}), format!("DER system '{id}' updated"))
        },
    )?;
    c.add(
        ToolSpec::new("der_remove", Cat::Der, "Remove a DER system that no controller targets").param(id()),
        |rt, a| {
            let id = s(a, "system_id");
            rt.remove_der(id)?;
            out(json!({"system_id": id}), format!("DER system '{id}' removed"))
        },
    )?;
    c.add(
        ToolSpec::new("der_query", Cat::Der, "Describe one DER system, or list all").param(P::optional(
            "system_id",
            K::String,
            "DER system ID (omit to list all)",
        )),
        |rt, a| match os(a, "system_id") {
            Some(id) => {
                let cid = rt.owner(crate::runtime::Entity::Der, id)?;
                out(json!({"cluster_id": cid, "system": val(rt.der(id)?)}), format!("DER system '{id}'"))
            }
            None => {
                let all: Vec<Value> = rt.ders()?.into_iter().map(val).collect();
                let n = all.len();
                out(json!({"systems": all}), format!("{n} DER system(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new("der_assign_to_buildings", Cat::Der, "Assign a DER system to serve buildings")
            .param(id())
            .param(P::required("building_ids", K::List, "Buildings to serve").with_items(K::String)),
        |rt, a| {
            let id = s(a, "system_id");
            let d = rt.assign_der(id, &ol(a, "building_ids"))?;
            out(
                json!({"system_id": id, "buildings": d.buildings}),
                format!("DER system '{id}' assigned to {}", d.buildings.join(", ")),
            )
        },
    )?;
    c.add(
        ToolSpec::new("der_select", Cat::Der, "Select the DER system subsequent operations default to").param(id()),
        |rt, a| {
            let id = s(a, "system_id");
            rt.select_der(id)?;
            out(json!({"system_id": id, "selected": true}), format!("DER system '{id}' selected"))
        },
    )
}

fn controller_params(a: &JsonMap, keys: &[&str]) -> Result<ControllerParams, RuntimeError> {
    patched(&ControllerParams::default(), &pick(a, keys))
}

fn controller_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("controller_id", K::String, "Controller ID");
    let mut add_hvac = ToolSpec::new(
        "controller_add_hvac",
        Cat::Controller,
        "Add a thermostat or precool controller to an HVAC system",
    )
    .param(P::required("controller_id", K::String, "Unique identifier for the controller"))
    .param(P::required("system_id", K::String, "HVAC system to control"))
    .param(
        P::optional("kind", K::Enum, "Control strategy")
            .with_enum(["thermostat_deadband", "precool"])
            .with_default("thermostat_deadband"),
    );
    for p in hvac_ctrl_params() {
        add_hvac = add_hvac.param(p);
    }
    add_hvac = add_hvac.param(P::optional("enabled", K::Boolean, "Whether the controller acts").with_default(true));
    c.add(add_hvac, |rt, a| {
        let (id, sid) = (s(a, "controller_id"), s(a, "system_id"));
        let kind = match os(a, "kind") {
            Some("precool") => ControllerKind::Precool,
            _ => ControllerKind::ThermostatDeadband,
        };
        let ctl = Controller {
            controller_id: id.into(),
            kind,
            params: controller_params(a, &HVAC_CTRL_KEYS)?,
            assigned_system: sid.into(),
            enabled: ob(a, "enabled").unwrap_or(true),
        };
        let ctl = rt.add_controller(ctl)?;
        out(json!({"controller": val(ctl)}), format!("{} controller '{id}' added to HVAC system '{sid}'", kind.label()))
    })?;
    let mut add_der = ToolSpec::new(
        "controller_add_der",
        Cat::Controller,
        "Add a charge/discharge schedule controller to a DER system",
    )
    .param(P::required("controller_id", K::String, "Unique identifier for the controller"))
    .param(P::required("system_id", K::String, "DER system to control"));
    for p in der_ctrl_params() {
        add_der = add_der.param(p);
    }
    add_der = add_der.param(P::optional("enabled", K::Boolean, "Whether the controller acts").with_default(true));
    c.add(add_der, |rt, a| {
        let (id, sid) = (s(a, "controller_id"), s(a, "system_id"));
        let ctl = Controller {
            controller_id: id.into(),
            kind: ControllerKind::DerSchedule,
            params: controller_params(a, &DER_CTRL_KEYS)?,
            assigned_system: sid.into(),
            enabled: ob(a, "enabled").unwrap_or(true),
        };
        let ctl = rt.add_controller(ctl)?;
        out(json!({"controller": val(ctl)}), format!("der_schedule controller '{id}' added to DER system '{sid}'"))
    })?;
    let mut upd =
        ToolSpec::new("controller_update", Cat::Controller, "Change controller parameters or enable/disable it")
            .param(id());
    for p in hvac_ctrl_params().into_iter().chain(der_ctrl_params()) {
        upd = upd.param(p);
    }
    upd = upd.param(P::optional("enabled", K::Boolean, "Whether the controller acts"));
    c.add(upd, |rt, a| {
        let id = s(a, "controller_id");
        let keys: Vec<&str> = HVAC_CTRL_KEYS.iter().chain(DER_CTRL_KEYS.iter()).copied().collect();
        let ctl = rt.update_controller(id, &pick(a, &keys), ob(a, "enabled"))?;
        out(json!({"controller": val(ctl)}), format!("Controller '{id}' updated"))
    })?;
    c.add(ToolSpec::new("controller_remove", Cat::Controller, "Remove a controller").param(id()), |rt, a| {
        let id = s(a, "controller_id");
        rt.remove_controller(id)?;
        out(json!({"controller_id": id}), format!("Controller '{id}' removed"))
    })?;
    c.add(
        ToolSpec::new("controller_query", Cat::Controller, "Describe one controller, or list all").param(P::optional(
            "controller_id",
            K::String,
            "Controller ID (omit to list all)",
        )),
        |rt, a| match os(a, "controller_id") {
            Some(id) => out(json!({"controller": val(rt.controller(id)?)}), format!("Controller '{id}'")),
            None => {
                let all: Vec<Value> = rt.controllers()?.into_iter().map(val).collect();
                let n = all.len();
                out(json!({"controllers": all}), format!("{n} controller(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new(
            "controller_assign_to_system",
            Cat::Controller,
            "Point a controller at another system of the same family",
        )
        .param(id())
        .param(P::required("system_id", K::String, "New target system")),
        |rt, a| {
            let (id, sid) = (s(a, "controller_id"), s(a, "system_id"));
            rt.assign_controller(id, sid)?;
            out(json!({"controller_id": id, "assigned_system": sid}), format!("Controller '{id}' assigned to '{sid}'"))
        },
    )
}

fn disturbance_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let id = || P::required("disturbance_id", K::String, "Disturbance ID");
    let adders: [(&str, DisturbanceKind, &[&str], &str); 3] = [
        (
            "disturbance_add_weather",
            DisturbanceKind::Weather,
            &WEATHER_PROFILES,
            "Add a weather disturbance (outdoor temperature and solar irradiance)",
        ),
        (
            "disturbance_add_occupancy",
            DisturbanceKind::Occupancy,
            &OCCUPANCY_PROFILES,
            "Add an occupancy disturbance (internal gain multiplier)",
        ),
        (
            "disturbance_add_price",
            DisturbanceKind::Price,
            &PRICE_PROFILES,
            "Add an electricity price disturbance with a peak window",
        ),
    ];
    for (name, kind, profiles, desc) in adders {
        let mut spec = ToolSpec::new(name, Cat::Disturbance, desc)
            .param(P::required("disturbance_id", K::String, "Unique identifier for the disturbance"))
            .param(P::required("cluster_id", K::String, "Cluster the disturbance applies to"))
            .param(
                P::optional("profile", K::Enum, "Built-in profile")
                    .with_enum(profiles.iter().copied())
                    .with_default(profiles[0]),
            );
        for p in source_params() {
            spec = spec.param(p);
        }
        if kind == DisturbanceKind::Price {
            for p in price_params() {
                spec = spec.param(p);
            }
        }
        c.add(spec, move |rt, a| {
            let (id, cid) = (s(a, "disturbance_id"), s(a, "cluster_id"));
            let d: Disturbance = patched(
                &Disturbance::new(id, kind),
                &pick(
                    a,
                    &["profile", "csv_path", "series"].iter().chain(PRICE_KEYS.iter()).copied().collect::<Vec<_>>(),
                ),
            )?;
            let d = rt.add_disturbance(cid, d)?;
            out(
                json!({"cluster_id": cid, "disturbance": val(d)}),
                format!("{} disturbance '{id}' added to cluster '{cid}'", kind.label()),
            )
        })?;
    }
    let mut upd = ToolSpec::new(
        "disturbance_update",
        Cat::Disturbance,
        "Change a disturbance's profile, data source or price settings",
    )
    .param(id())
    .param(P::optional("profile", K::String, "Built-in profile name"));
    for p in source_params().into_iter().chain(price_params()) {
        upd = upd.param(p);
    }
    c.add(upd, |rt, a| {
        let id = s(a, "disturbance_id");
        let keys: Vec<&str> = ["profile", "csv_path", "series"].iter().chain(PRICE_KEYS.iter()).copied().collect();
        let d = rt.update_disturbance(id, &pick(a, &keys))?;
        out(json!({"disturbance": val(d)}), format!("Disturbance '{id}' updated"))
    })?;
    c.add(ToolSpec::new("disturbance_remove", Cat::Disturbance, "Remove a disturbance").param(id()), |rt, a| {
        let id = s(a, "disturbance_id");
        rt.remove_disturbance(id)?;
        out(json!({"disturbance_id": id}), format!("Disturbance '{id}' removed"))
    })?;
    c.add(
        ToolSpec::new("disturbance_query", Cat::Disturbance, "Describe one disturbance, or list all")
            .param(P::optional("disturbance_id", K::String, "Disturbance ID (omit to list all)")),
        |rt, a| match os(a, "disturbance_id") {
            Some(id) => out(json!({"disturbance": val(rt.disturbance(id)?)}), format!("Disturbance '{id}'")),
            None => {
                let all: Vec<Value> = rt.disturbances()?.into_iter().map(val).collect();
                let n = all.len();
                out(json!({"disturbances": all}), format!("{n} disturbance(s)"))
            }
        },
    )?;
    c.add(
        ToolSpec::new("disturbance_select", Cat::Disturbance, "Prefer this disturbance over others of the same kind")
            .param(id()),
        |rt, a| {
            let id = s(a, "disturbance_id");
            rt.select_disturbance(id)?;
            out(json!({"disturbance_id": id, "selected": true}), format!("Disturbance '{id}' selected"))
        },
    )
}

fn environment_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    c.add(
        ToolSpec::new("environment_add", Cat::Environment, "Add a simulation environment (timestep and horizon)")
            .param(P::required("env_id", K::String, "Unique identifier for the environment"))
            .param(num("timestep_s", "Simulation timestep, s").with_default(DEFAULT_TIMESTEP_S))
            .param(num("horizon_hours", "Simulation horizon, h").with_default(DEFAULT_HORIZON_HOURS))
            .param(P::optional("config_id", K::String, "Target configuration (defaults to the active one)")),
        |rt, a| {
            let id = s(a, "env_id");
            let env = Environment {
                env_id: id.into(),
                timestep_s: of(a, "timestep_s").unwrap_or(DEFAULT_TIMESTEP_S),
                horizon_hours: of(a, "horizon_hours").unwrap_or(DEFAULT_HORIZON_HOURS),
            };
            let env = rt.add_environment(env, os(a, "config_id"))?;
            out(json!({"environment": val(env)}), format!("Environment '{id}' added"))
        },
    )?;
    c.add(
        ToolSpec::new("environment_update", Cat::Environment, "Change an environment's timestep or horizon")
            .param(P::required("env_id", K::String, "Environment ID"))
            .param(num("timestep_s", "Simulation timestep, s"))
            .param(num("horizon_hours", "Simulation horizon, h")),
        |rt, a| {
            let id = s(a, "env_id");
            let env = rt.update_environment(id, of(a, "timestep_s"), of(a, "horizon_hours"))?;
            out(json!({"environment": val(env)}), format!("Environment '{id}' updated"))
        },
    )?;
    c.add(
        ToolSpec::new("environment_select", Cat::Environment, "Select the environment simulations run in")
            .param(P::required("env_id", K::String, "Environment ID")),
        |rt, a| {
            let id = s(a, "env_id");
            rt.select_environment(id)?;
            out(json!({"env_id": id, "selected": true}), format!("Environment '{id}' selected"))
        },
    )
}

fn simulation_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    let run_id = || P::required("run_id", K::String, "Simulation run ID");
    c.add(
        ToolSpec::new("simulation_run", Cat::Simulation, "Run a simulation of the active configuration")
            .param(P::optional("run_id", K::String, "Identifier for the run (generated when omitted)"))
            .param(P::optional("config_id", K::String, "Configuration to run (defaults to the active one)"))
            .param(P::optional("env_id", K::String, "Environment to use (defaults to the selected one)"))
            .param(num("horizon_hours", "Override the environment horizon, h"))
            .param(num("timestep_s", "Override the environment timestep, s")),
        |rt, a| {
            let req = RunRequest {
                run_id: os(a, "run_id").map(str::to_string),
                config_id: os(a, "config_id").map(str::to_string),
                env_id: os(a, "env_id").map(str::to_string),
                horizon_hours: of(a, "horizon_hours"),
                timestep_s: of(a, "timestep_s"),
            };
            let id = rt.run_simulation(&req)?.run_id.clone();
            let summary = rt.run_summary(&id)?;
            let energy = rt.analyze(&id, Facet::Energy)?;
            out(
                json!({"run": val(&summary), "energy": energy}),
                format!("Simulation '{id}' completed: {} steps", summary.steps),
            )
        },
    )?;
    c.add(
        ToolSpec::new("simulation_save", Cat::Simulation, "Write a run's per-step results to JSON and CSV")
            .param(run_id())
            .param(P::optional("path", K::String, "JSON output path relative to the results directory")),
        |rt, a| {
            let id = s(a, "run_id");
            let path = rt.save_run(id, os(a, "path"))?;
            out(json!({"run_id": id, "path": path}), format!("Run '{id}' saved to {path}"))
        },
    )?;
    c.add(
        ToolSpec::new("simulation_get_status", Cat::Simulation, "Report the status of a simulation run")
            .param(run_id()),
        |rt, a| {
            let summary = rt.run_summary(s(a, "run_id"))?;
            let msg = format!("Run '{}' {}", summary.run_id, summary.status);
            out(json!({"run": val(&summary)}), msg)
        },
    )?;
    c.add(ToolSpec::new("simulation_list_results", Cat::Simulation, "List completed simulation runs"), |rt, _| {
        let runs = rt.run_ids().iter().map(|id| rt.run_summary(id).map(|s| val(&s))).collect::<Result<Vec<_>, _>>()?;
        let n = runs.len();
        out(json!({"runs": runs}), format!("{n} run(s)"))
    })
}

fn analysis_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    for facet in Facet::ALL {
        let label = facet.label();
        let name = format!("analysis_{label}");
        let spec = ToolSpec::new(&name, Cat::Analysis, &format!("Compute {label} metrics for a simulation run"))
            .param(P::required("run_id", K::String, "Simulation run ID"));
        c.add(spec, move |rt, a| {
            let id = s(a, "run_id");
            let metrics = rt.analyze(id, parse_facet(label))?;
            out(json!({"run_id": id, "facet": label, "metrics": metrics}), format!("{label} analysis of run '{id}'"))
        })?;
    }
    Ok(())
}

fn comparison_tools(c: &mut Catalog) -> Result<(), RegistryError> {
    for facet in Facet::ALL {
        let label = facet.label();
        let name = format!("comparison_{label}");
        let spec = ToolSpec::new(
            &name,
            Cat::Comparison,
            &format!("Compare {label} metrics of two runs (comparison relative to baseline)"),
        )
        .param(P::required("baseline_run_id", K::String, "Baseline run ID"))
        .param(P::required("comparison_run_id", K::String, "Run compared against the baseline"));
        c.add(spec, move |rt, a| {
            let (b, x) = (s(a, "baseline_run_id"), s(a, "comparison_run_id"));
            let report = rt.compare(b, x, parse_facet(label))?;
            out(json!({"report": val(&report)}), format!("{label} comparison of '{x}' against '{b}'"))
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use bemas_toolbus::ListDetail;

    #[test]
    fn catalog_has_sixty_one_tools_across_eleven_categories() {
        let (_, reg) = shared_registry(Runtime::new());
        assert_eq!(reg.len(), 61);
        let list = reg.list(ListDetail::Full);
        for cat in Cat::ALL {
            assert!(list.iter().any(|t| t.category == cat), "{cat} has no tools");
        }
        assert!(reg.contains("config_list"));
        assert!(reg.describe("config_list").unwrap().params.is_empty());
    }
}
