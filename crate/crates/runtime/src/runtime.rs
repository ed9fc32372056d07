//! The mutable runtime instance behind the tool catalog: configurations,
//! CRUD on the entity hierarchy, and the run store.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{self, ComparisonReport, Facet};
use crate::error::RuntimeError;
use crate::model::*;
use crate::sim::{Simulation, SimulationResult};
use crate::validate::validate_config;

/// Entity families addressed by id within the active configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Building,
    Hvac,
    Der,
    Controller,
    Disturbance,
}

impl Entity {
    pub fn label(self) -> &'static str {
        match self {
            Entity::Building => "building",
            Entity::Hvac => "hvac system",
            Entity::Der => "der system",
            Entity::Controller => "controller",
            Entity::Disturbance => "disturbance",
        }
    }

    fn in_cluster(self, c: &Cluster, id: &str) -> bool {
        match self {
            Entity::Building => c.buildings.contains_key(id),
            Entity::Hvac => c.hvac_systems.contains_key(id),
            Entity::Der => c.der_systems.contains_key(id),
            Entity::Controller => c.controllers.contains_key(id),
            Entity::Disturbance => c.disturbances.contains_key(id),
        }
    }
}

/// Options for one simulation run; unset fields come from the environment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub run_id: Option<String>,
    pub config_id: Option<String>,
    pub env_id: Option<String>,
    pub horizon_hours: Option<f64>,
    pub timestep_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub config_id: String,
    pub status: String,
    pub steps: usize,
    pub timestep_s: f64,
    pub horizon_hours: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Default)]
pub struct Runtime {
    configs: BTreeMap<String, Configuration>,
    runs: BTreeMap<String, SimulationResult>,
    saved: BTreeMap<String, String>,
    run_counter: u64,
    results_dir: Option<PathBuf>,
    data_dir: Option<PathBuf>,
}

impl Runtime {
    /// A runtime with no configurations at all.
    pub fn empty() -> Self {
        Self::default()
    }

    /// A fresh runtime holding the active reference configuration.
    pub fn new() -> Self {
        let mut rt = Self::default();
        let cfg = crate::reference::reference_config();
        rt.configs.insert(cfg.config_id.clone(), cfg);
        rt
    }

    /// Directory for persisted runs and configuration snapshots.
    pub fn with_results_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.results_dir = Some(dir.into());
        self
    }

    /// Directory that relative disturbance CSV paths resolve against.
    pub fn with_data_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.data_dir = Some(dir.into());
        self
    }

    pub fn results_dir(&self) -> Option<&Path> {
        self.results_dir.as_deref()
    }

    // ---- configurations ----

    pub fn configs(&self) -> impl Iterator<Item = &Configuration> {
        self.configs.values()
    }

    pub fn config(&self, id: &str) -> Result<&Configuration, RuntimeError> {
        self.configs.get(id).ok_or_else(|| RuntimeError::unknown("configuration", id))
    }

    pub fn active_id(&self) -> Option<&str> {
        self.configs.values().find(|c| c.active).map(|c| c.config_id.as_str())
    }

    pub fn active(&self) -> Result<&Configuration, RuntimeError> {
        self.configs.values().find(|c| c.active).ok_or(RuntimeError::NoActiveConfig)
    }

    /// One-paragraph listing of the active configuration's entity ids.
    pub fn context_summary(&self) -> String {
        let Ok(cfg) = self.active() else {
            return "no active configuration".into();
        };
        let ids = |it: Vec<&String>| {
            if it.is_empty() {
                "none".to_string()
            } else {
                it.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            }
        };
        let mut lines = vec![format!("active configuration: {}", cfg.config_id)];
        for (cid, cl) in &cfg.clusters {
            lines.push(format!(
                "cluster {cid}: buildings [{}], hvac [{}], der [{}], controllers [{}], disturbances [{}]",
                ids(cl.buildings.keys().collect()),
                ids(cl.hvac_systems.keys().collect()),
                ids(cl.der_systems.keys().collect()),
                ids(cl.controllers.keys().collect()),
                ids(cl.disturbances.keys().collect()),
            ));
        }
        lines.push(format!("environments: [{}]", ids(cfg.environments.keys().collect())));
        let runs = self.run_ids();
        if !runs.is_empty() {
            lines.push(format!("completed runs: [{}]", runs.join(", ")));
        }
        lines.join("\n")
    }

    pub fn active_mut(&mut self) -> Result<&mut Configuration, RuntimeError> {
        self.configs.values_mut().find(|c| c.active).ok_or(RuntimeError::NoActiveConfig)
    }

    fn resolve(&self, id: Option<&str>) -> Result<&Configuration, RuntimeError> {
        match id {
            Some(id) => self.config(id),
            None => self.active(),
        }
    }

    /// Inserts a configuration. With `reference` the new configuration is a
    /// copy of the built-in reference setup.
    pub fn create_config(
        &mut self,
        id: &str,
        description: &str,
        reference: bool,
        set_active: bool,
    ) -> Result<&Configuration, RuntimeError> {
        if self.configs.contains_key(id) {
            return Err(RuntimeError::duplicate("configuration", id));
        }
        let mut cfg = if reference {
            let mut c = crate::reference::reference_config();
            c.config_id = id.to_string();
            c
        } else {
            Configuration::new(id)
        };
        cfg.active = false;
        cfg.description = description.to_string();
        self.configs.insert(id.to_string(), cfg);
        if set_active || self.active_id().is_none() {
            self.set_active(id)?;
        }
        self.config(id)
    }

    pub fn set_active(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.config(id)?;
        for (k, c) in self.configs.iter_mut() {
            c.active = k == id;
        }
        Ok(())
    }

    pub fn validate(&self, id: Option<&str>) -> Result<Vec<String>, RuntimeError> {
        Ok(validate_config(self.resolve(id)?))
    }

    /// JSON snapshot of a configuration; written to the results directory
    /// when one is configured. Returns the snapshot and the relative path.
    pub fn save_config(&self, id: Option<&str>, path: Option<&str>) -> Result<(Value, Option<String>), RuntimeError> {
        let cfg = self.resolve(id)?;
        let snapshot = serde_json::to_value(cfg).expect("configuration serializes");
        let rel = path.map(str::to_string).unwrap_or_else(|| format!("configs/{}.json", cfg.config_id));
        let Some(dir) = &self.results_dir else { return Ok((snapshot, None)) };
        write_json(&dir.join(&rel), &snapshot)?;
        Ok((snapshot, Some(rel)))
    }

    // ---- clusters ----

    pub fn cluster(&self, id: &str) -> Result<&Cluster, RuntimeError> {
        self.active()?.clusters.get(id).ok_or_else(|| RuntimeError::unknown("cluster", id))
    }

    fn cluster_mut(&mut self, id: &str) -> Result<&mut Cluster, RuntimeError> {
        self.active_mut()?.clusters.get_mut(id).ok_or_else(|| RuntimeError::unknown("cluster", id))
    }

    pub fn add_cluster(
        &mut self,
        id: &str,
        name: Option<&str>,
        config_id: Option<&str>,
    ) -> Result<&Cluster, RuntimeError> {
        let cfg = match config_id {
            Some(c) => self.configs.get_mut(c).ok_or_else(|| RuntimeError::unknown("configuration", c))?,
            None => self.active_mut()?,
        };
        if cfg.clusters.contains_key(id) {
            return Err(RuntimeError::duplicate("cluster", id));
        }
        let mut c = Cluster::new(id);
        c.name = name.unwrap_or_default().to_string();
        Ok(cfg.clusters.entry(id.to_string()).or_insert(c))
    }

    pub fn update_cluster(&mut self, id: &str, patch: &JsonMap) -> Result<&Cluster, RuntimeError> {
        let c = self.cluster_mut(id)?;
        let mut patch = patch.clone();
        patch.remove("cluster_id");
        let mut next: Cluster = patched(c, &patch)?;
        next.cluster_id = id.to_string();
        *c = next;
        Ok(c)
    }

    pub fn remove_cluster(&mut self, id: &str) -> Result<Cluster, RuntimeError> {
        let cfg = self.active_mut()?;
        let c = cfg.clusters.remove(id).ok_or_else(|| RuntimeError::unknown("cluster", id))?;
        if cfg.selection.cluster.as_deref() == Some(id) {
            cfg.selection.cluster = None;
        }
        Ok(c)
    }

    pub fn select_cluster(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.cluster(id)?;
        self.active_mut()?.selection.cluster = Some(id.to_string());
        Ok(())
    }

    // ---- generic entity lookup ----

    /// Cluster that owns `id` of the given family in the active configuration.
    pub fn owner(&self, kind: Entity, id: &str) -> Result<String, RuntimeError> {
        self.active()?
            .clusters
            .values()
            .find(|c| kind.in_cluster(c, id))
            .map(|c| c.cluster_id.clone())
            .ok_or_else(|| RuntimeError::unknown(kind.label(), id))
    }

    fn owner_mut(&mut self, kind: Entity, id: &str) -> Result<&mut Cluster, RuntimeError> {
        let cid = self.owner(kind, id)?;
        self.cluster_mut(&cid)
    }

    /// Checks that `id` is free for a new entity anywhere in the active
    /// configuration and that the target cluster exists.
    fn claim(&self, kind: Entity, cluster_id: &str, id: &str) -> Result<(), RuntimeError> {
        self.cluster(cluster_id)?;
        if self.active()?.clusters.values().any(|c| c.contains_id(id)) {
            return Err(RuntimeError::duplicate(kind.label(), id));
        }
        Ok(())
    }

    fn select(&mut self, kind: Entity, id: &str) -> Result<(), RuntimeError> {
        self.owner(kind, id)?;
        let sel = &mut self.active_mut()?.selection;
        let slot = match kind {
            Entity::Building => &mut sel.building,
            Entity::Hvac => &mut sel.hvac,
            Entity::Der => &mut sel.der,
            Entity::Disturbance => &mut sel.disturbance,
            Entity::Controller => return Err(RuntimeError::InvalidValue("controllers cannot be selected".into())),
        };
        *slot = Some(id.to_string());
        Ok(())
    }

    fn clear_selection(&mut self, kind: Entity, id: &str) {
        if let Ok(cfg) = self.active_mut() {
            let sel = &mut cfg.selection;
            let slot = match kind {
                Entity::Building => &mut sel.building,
                Entity::Hvac => &mut sel.hvac,
                Entity::Der => &mut sel.der,
                Entity::Disturbance => &mut sel.disturbance,
                Entity::Controller => return,
            };
            if slot.as_deref() == Some(id) {
                *slot = None;
            }
        }
    }

    // ---- buildings ----

    pub fn building(&self, id: &str) -> Result<&Building, RuntimeError> {
        let cid = self.owner(Entity::Building, id)?;
        Ok(&self.cluster(&cid)?.buildings[id])
    }

    fn building_mut(&mut self, id: &str) -> Result<&mut Building, RuntimeError> {
        let c = self.owner_mut(Entity::Building, id)?;
        Ok(c.buildings.get_mut(id).expect("owner holds building"))
    }

    pub fn buildings(&self) -> Result<Vec<&Building>, RuntimeError> {
        Ok(self.active()?.clusters.values().flat_map(|c| c.buildings.values()).collect())
    }

    pub fn add_building(&mut self, cluster_id: &str, id: &str, name: Option<&str>) -> Result<&Building, RuntimeError> {
        self.claim(Entity::Building, cluster_id, id)?;
        let mut b = Building::new(id);
        b.name = name.unwrap_or_default().to_string();
        Ok(self.cluster_mut(cluster_id)?.buildings.entry(id.to_string()).or_insert(b))
    }

    /// Merges a patch into the building. `zones` entries are matched to
    /// existing zones by `zone_id` and merged field by field.
    pub fn update_building(
        &mut self,
        id: &str,
        name: Option<&str>,
        zone_id: Option<&str>,
        zone_patch: Option<&JsonMap>,
        electrical: Option<&JsonMap>,
    ) -> Result<&Building, RuntimeError> {
        let b = self.building_mut(id)?;
        let mut next = b.clone();
        if let Some(n) = name {
            next.name = n.to_string();
        }
        if let Some(patch) = zone_patch {
            let zi = match zone_id {
                Some(z) => next
                    .zones
                    .iter()
                    .position(|x| x.zone_id == z)
                    .ok_or_else(|| RuntimeError::unknown("thermal zone", z))?,
                None if next.zones.len() == 1 => 0,
                None => {
                    return Err(RuntimeError::InvalidValue(format!(
                        "building '{id}' has {} thermal zones; name one with zone_id",
                        next.zones.len()
                    )))
                }
            };
            let mut p = patch.clone();
            p.remove("zone_id");
            next.zones[zi] = patched(&next.zones[zi], &p)?;
            next.zones[zi].check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        }
        if let Some(patch) = electrical {
            let ez = next
                .electrical_zone
                .as_ref()
                .ok_or_else(|| RuntimeError::InvalidValue(format!("building '{id}' has no electrical zone")))?;
            let mut p = patch.clone();
            p.remove("zone_id");
            next.electrical_zone = Some(patched(ez, &p)?);
        }
        *b = next;
        Ok(b)
    }

    pub fn remove_building(&mut self, id: &str) -> Result<Building, RuntimeError> {
        let c = self.owner_mut(Entity::Building, id)?;
        let users: Vec<String> = c
            .hvac_systems
            .values()
            .filter(|h| h.buildings.iter().any(|b| b == id))
            .map(|h| h.system_id.clone())
            .chain(c.der_systems.values().filter(|d| d.buildings.iter().any(|b| b == id)).map(|d| d.system_id.clone()))
            .collect();
        if !users.is_empty() {
            return Err(RuntimeError::DanglingReference(format!(
                "building '{id}' is assigned to {}",
                users.join(", ")
            )));
        }
        let b = c.buildings.remove(id).expect("owner holds building");
        self.clear_selection(Entity::Building, id);
        Ok(b)
    }

    pub fn select_building(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.select(Entity::Building, id)
    }

    pub fn add_thermal_zone(&mut self, building_id: &str, zone: ThermalZone) -> Result<&Building, RuntimeError> {
        zone.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let b = self.building_mut(building_id)?;
        if b.zones.iter().any(|z| z.zone_id == zone.zone_id) {
            return Err(RuntimeError::duplicate("thermal zone", &zone.zone_id));
        }
        b.zones.push(zone);
        Ok(b)
    }

    pub fn add_electrical_zone(&mut self, building_id: &str, zone: ElectricalZone) -> Result<&Building, RuntimeError> {
        if !(zone.base_load_kw >= 0.0 && zone.base_load_kw.is_finite()) {
            return Err(RuntimeError::InvalidValue("base_load_kw must be >= 0".into()));
        }
        let b = self.building_mut(building_id)?;
        if let Some(z) = &b.electrical_zone {
            return Err(RuntimeError::duplicate("electrical zone", &z.zone_id));
        }
        b.electrical_zone = Some(zone);
        Ok(b)
    }

    pub fn add_water_zone(&mut self, building_id: &str, zone: WaterZone) -> Result<&Building, RuntimeError> {
        let b = self.building_mut(building_id)?;
        if let Some(z) = &b.water_zone {
            return Err(RuntimeError::duplicate("water zone", &z.zone_id));
        }
        b.water_zone = Some(zone);
        Ok(b)
    }

    // ---- HVAC ----

    pub fn hvac(&self, id: &str) -> Result<&HvacSystem, RuntimeError> {
        let cid = self.owner(Entity::Hvac, id)?;
        Ok(&self.cluster(&cid)?.hvac_systems[id])
    }

    pub fn hvacs(&self) -> Result<Vec<&HvacSystem>, RuntimeError> {
        Ok(self.active()?.clusters.values().flat_map(|c| c.hvac_systems.values()).collect())
    }

    pub fn add_hvac(&mut self, cluster_id: &str, sys: HvacSystem) -> Result<&HvacSystem, RuntimeError> {
        self.claim(Entity::Hvac, cluster_id, &sys.system_id)?;
        sys.system_config.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let id = sys.system_id.clone();
        Ok(self.cluster_mut(cluster_id)?.hvac_systems.entry(id).or_insert(sys))
    }

    /// Deep-merges component maps into the system configuration and
    /// re-validates; on failure nothing changes.
    pub fn update_hvac(
        &mut self,
        id: &str,
        name: Option<&str>,
        config_patch: &JsonMap,
        parameters: Option<&JsonMap>,
    ) -> Result<&HvacSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Hvac, id)?;
        let h = c.hvac_systems.get_mut(id).expect("owner holds system");
        let mut next = h.clone();
        next.system_config = patched(&h.system_config, config_patch)?;
        next.system_config.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        if let Some(n) = name {
            next.system_name = Some(n.to_string());
        }
        if let Some(p) = parameters {
            next.parameters.extend(p.clone());
        }
        *h = next;
        Ok(h)
    }

    pub fn remove_hvac(&mut self, id: &str) -> Result<HvacSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Hvac, id)?;
        refuse_if_controlled(c, id)?;
        let h = c.hvac_systems.remove(id).expect("owner holds system");
        self.clear_selection(Entity::Hvac, id);
        Ok(h)
    }

    pub fn assign_hvac(&mut self, id: &str, buildings: &[String]) -> Result<&HvacSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Hvac, id)?;
        check_buildings(c, buildings)?;
        let h = c.hvac_systems.get_mut(id).expect("owner holds system");
        for b in buildings {
            if !h.buildings.contains(b) {
                h.buildings.push(b.clone());
            }
        }
        Ok(h)
    }

    pub fn select_hvac(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.select(Entity::Hvac, id)
    }

    // ---- DER ----

    pub fn der(&self, id: &str) -> Result<&DerSystem, RuntimeError> {
        let cid = self.owner(Entity::Der, id)?;
        Ok(&self.cluster(&cid)?.der_systems[id])
    }

    pub fn ders(&self) -> Result<Vec<&DerSystem>, RuntimeError> {
        Ok(self.active()?.clusters.values().flat_map(|c| c.der_systems.values()).collect())
    }

    pub fn add_der(&mut self, cluster_id: &str, sys: DerSystem) -> Result<&DerSystem, RuntimeError> {
        self.claim(Entity::Der, cluster_id, &sys.system_id)?;
        sys.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let id = sys.system_id.clone();
        Ok(self.cluster_mut(cluster_id)?.der_systems.entry(id).or_insert(sys))
    }

    /// Deep-merges `battery` / `pv` maps. A component the system lacks is
    /// created from defaults before merging.
    pub fn update_der(
        &mut self,
        id: &str,
        name: Option<&str>,
        battery: Option<&JsonMap>,
        pv: Option<&JsonMap>,
    ) -> Result<&DerSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Der, id)?;
        let d = c.der_systems.get_mut(id).expect("owner holds system");
        let mut next = d.clone();
        if let Some(p) = battery {
            next.battery = Some(patched(&next.battery.clone().unwrap_or_default(), p)?);
        }
        if let Some(p) = pv {
            next.pv = Some(patched(&next.pv.clone().unwrap_or(Pv { rated_kw: 0.0 }), p)?);
        }
        if let Some(n) = name {
            next.system_name = Some(n.to_string());
        }
        next.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        *d = next;
        Ok(d)
    }

    pub fn remove_der(&mut self, id: &str) -> Result<DerSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Der, id)?;
        refuse_if_controlled(c, id)?;
        let d = c.der_systems.remove(id).expect("owner holds system");
        self.clear_selection(Entity::Der, id);
        Ok(d)
    }

    pub fn assign_der(&mut self, id: &str, buildings: &[String]) -> Result<&DerSystem, RuntimeError> {
        let c = self.owner_mut(Entity::Der, id)?;
        check_buildings(c, buildings)?;
        let d = c.der_systems.get_mut(id).expect("owner holds system");
        for b in buildings {
            if !d.buildings.contains(b) {
                d.buildings.push(b.clone());
            }
        }
        Ok(d)
    }

    pub fn select_der(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.select(Entity::Der, id)
    }

    // ---- controllers ----

    pub fn controller(&self, id: &str) -> Result<&Controller, RuntimeError> {
        let cid = self.owner(Entity::Controller, id)?;
        Ok(&self.cluster(&cid)?.controllers[id])
    }

    pub fn controllers(&self) -> Result<Vec<&Controller>, RuntimeError> {
        Ok(self.active()?.clusters.values().flat_map(|c| c.controllers.values()).collect())
    }

    /// Adds a controller in the cluster that owns its target system.
    pub fn add_controller(&mut self, ctl: Controller) -> Result<&Controller, RuntimeError> {
        let family = if ctl.kind.targets_hvac() { Entity::Hvac } else { Entity::Der };
        let cid = self.owner(family, &ctl.assigned_system).map_err(|_| {
            RuntimeError::DanglingReference(format!(
                "controller '{}' references missing system '{}'",
                ctl.controller_id, ctl.assigned_system
            ))
        })?;
        self.claim(Entity::Controller, &cid, &ctl.controller_id)?;
        ctl.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let id = ctl.controller_id.clone();
        Ok(self.cluster_mut(&cid)?.controllers.entry(id).or_insert(ctl))
    }

    pub fn update_controller(
        &mut self,
        id: &str,
        params: &JsonMap,
        enabled: Option<bool>,
    ) -> Result<&Controller, RuntimeError> {
        let c = self.owner_mut(Entity::Controller, id)?;
        let ctl = c.controllers.get_mut(id).expect("owner holds controller");
        let mut next = ctl.clone();
        next.params = patched(&ctl.params, params)?;
        if let Some(e) = enabled {
            next.enabled = e;
        }
        next.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        *ctl = next;
        Ok(ctl)
    }

    pub fn remove_controller(&mut self, id: &str) -> Result<Controller, RuntimeError> {
        let c = self.owner_mut(Entity::Controller, id)?;
        Ok(c.controllers.remove(id).expect("owner holds controller"))
    }

    /// Re-targets a controller at another system of the right family in the
    /// same cluster.
    pub fn assign_controller(&mut self, id: &str, system_id: &str) -> Result<&Controller, RuntimeError> {
        let c = self.owner_mut(Entity::Controller, id)?;
        let kind = c.controllers[id].kind;
        let ok = if kind.targets_hvac() {
            c.hvac_systems.contains_key(system_id)
        } else {
            c.der_systems.contains_key(system_id)
        };
        if !ok {
            return Err(RuntimeError::DanglingReference(format!(
                "controller '{id}' cannot target '{system_id}': no such {} system in cluster '{}'",
                if kind.targets_hvac() { "hvac" } else { "der" },
                c.cluster_id
            )));
        }
        let ctl = c.controllers.get_mut(id).expect("owner holds controller");
        ctl.assigned_system = system_id.to_string();
        Ok(ctl)
    }

    // ---- disturbances ----

    pub fn disturbance(&self, id: &str) -> Result<&Disturbance, RuntimeError> {
        let cid = self.owner(Entity::Disturbance, id)?;
        Ok(&self.cluster(&cid)?.disturbances[id])
    }

    pub fn disturbances(&self) -> Result<Vec<&Disturbance>, RuntimeError> {
        Ok(self.active()?.clusters.values().flat_map(|c| c.disturbances.values()).collect())
    }

    pub fn add_disturbance(&mut self, cluster_id: &str, d: Disturbance) -> Result<&Disturbance, RuntimeError> {
        self.claim(Entity::Disturbance, cluster_id, &d.disturbance_id)?;
        d.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let id = d.disturbance_id.clone();
        Ok(self.cluster_mut(cluster_id)?.disturbances.entry(id).or_insert(d))
    }

    pub fn update_disturbance(&mut self, id: &str, patch: &JsonMap) -> Result<&Disturbance, RuntimeError> {
        let c = self.owner_mut(Entity::Disturbance, id)?;
        let d = c.disturbances.get_mut(id).expect("owner holds disturbance");
        let mut p = patch.clone();
        p.remove("disturbance_id");
        p.remove("kind");
        let next: Disturbance = patched(d, &p)?;
        next.check().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        *d = next;
        Ok(d)
    }

    pub fn remove_disturbance(&mut self, id: &str) -> Result<Disturbance, RuntimeError> {
        let c = self.owner_mut(Entity::Disturbance, id)?;
        let d = c.disturbances.remove(id).expect("owner holds disturbance");
        self.clear_selection(Entity::Disturbance, id);
        Ok(d)
    }

    pub fn select_disturbance(&mut self, id: &str) -> Result<(), RuntimeError> {
        self.select(Entity::Disturbance, id)
    }

    // ---- environments ----

    pub fn add_environment(&mut self, env: Environment, config_id: Option<&str>) -> Result<&Environment, RuntimeError> {
        env.steps().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        let cfg = match config_id {
            Some(c) => self.configs.get_mut(c).ok_or_else(|| RuntimeError::unknown("configuration", c))?,
            None => self.active_mut()?,
        };
        if cfg.environments.contains_key(&env.env_id) {
            return Err(RuntimeError::duplicate("environment", &env.env_id));
        }
        if cfg.selection.environment.is_none() {
            cfg.selection.environment = Some(env.env_id.clone());
        }
        let id = env.env_id.clone();
        Ok(cfg.environments.entry(id).or_insert(env))
    }

    pub fn update_environment(
        &mut self,
        id: &str,
        timestep_s: Option<f64>,
        horizon_hours: Option<f64>,
    ) -> Result<&Environment, RuntimeError> {
        let cfg = self.active_mut()?;
        let env = cfg.environments.get_mut(id).ok_or_else(|| RuntimeError::unknown("environment", id))?;
        let mut next = env.clone();
        if let Some(t) = timestep_s {
            next.timestep_s = t;
        }
        if let Some(h) = horizon_hours {
            next.horizon_hours = h;
        }
        next.steps().map_err(|e| RuntimeError::ValidationFailed(vec![e]))?;
        *env = next;
        Ok(env)
    }

    pub fn select_environment(&mut self, id: &str) -> Result<(), RuntimeError> {
        let cfg = self.active_mut()?;
        if !cfg.environments.contains_key(id) {
            return Err(RuntimeError::unknown("environment", id));
        }
        cfg.selection.environment = Some(id.to_string());
        Ok(())
    }

    // ---- simulation ----

    fn next_run_id(&mut self) -> String {
        loop {
            self.run_counter += 1;
            let id = format!("run_{:03}", self.run_counter);
            if !self.runs.contains_key(&id) {
                return id;
            }
        }
    }

    /// Runs a configuration over the resolved environment and stores the
    /// result under its run id.
    pub fn run_simulation(&mut self, req: &RunRequest) -> Result<&SimulationResult, RuntimeError> {
        if let Some(id) = &req.run_id {
            if self.runs.contains_key(id) {
                return Err(RuntimeError::duplicate("run", id));
            }
        }
        let cfg = self.resolve(req.config_id.as_deref())?;
        let mut env = match req.env_id.as_deref().or(cfg.selection.environment.as_deref()) {
            Some(e) => cfg.environments.get(e).cloned().ok_or_else(|| RuntimeError::unknown("environment", e))?,
            None => cfg.environments.values().next().cloned().unwrap_or_else(|| Environment::new("default")),
        };
        if let Some(h) = req.horizon_hours {
            env.horizon_hours = h;
        }
        if let Some(t) = req.timestep_s {
            env.timestep_s = t;
        }
        let sim = Simulation::initialize(cfg, &env, self.data_dir.as_deref())?;
        let config_id = cfg.config_id.clone();
        let run_id = match &req.run_id {
            Some(id) => id.clone(),
            None => self.next_run_id(),
        };
        let result = sim.run(&run_id)?;
        if let Some(cfg) = self.configs.get_mut(&config_id) {
            for c in cfg.clusters.values_mut() {
                for (id, meta) in &result.batteries {
                    if let Some(d) = c.der_systems.get_mut(id) {
                        d.throughput_kwh += meta.throughput_kwh;
                    }
                }
            }
        }
        if self.results_dir.is_some() {
            self.persist_run(&result, None)?;
        }
        Ok(self.runs.entry(run_id).or_insert(result))
    }

    pub fn run(&self, id: &str) -> Result<&SimulationResult, RuntimeError> {
        self.runs.get(id).ok_or_else(|| RuntimeError::UnknownRun(id.to_string()))
    }

    pub fn run_summary(&self, id: &str) -> Result<RunSummary, RuntimeError> {
        let r = self.run(id)?;
        Ok(RunSummary {
            run_id: r.run_id.clone(),
            config_id: r.config_id.clone(),
            status: "completed".into(),
            steps: r.records.len(),
            timestep_s: r.timestep_s,
            horizon_hours: r.horizon_hours,
            path: self.saved.get(id).cloned(),
        })
    }

    pub fn run_ids(&self) -> Vec<String> {
        self.runs.keys().cloned().collect()
    }

    fn persist_run(&mut self, r: &SimulationResult, path: Option<&str>) -> Result<String, RuntimeError> {
        let dir = self
            .results_dir
            .clone()
            .ok_or_else(|| RuntimeError::InvalidValue("no results directory configured".into()))?;
        let rel = path.map(str::to_string).unwrap_or_else(|| format!("runs/{}.json", r.run_id));
        let full = dir.join(&rel);
        write_json(&full, &serde_json::to_value(r).expect("result serializes"))?;
        write_summary_csv(&full.with_extension("csv"), r)?;
        self.saved.insert(r.run_id.clone(), rel.clone());
        Ok(rel)
    }

    /// Writes a stored run as JSON plus a per-step CSV summary. Returns the
    /// JSON path relative to the results directory.
    pub fn save_run(&mut self, id: &str, path: Option<&str>) -> Result<String, RuntimeError> {
        let r = self.run(id)?.clone();
        self.persist_run(&r, path)
    }

    pub fn analyze(&self, run_id: &str, facet: Facet) -> Result<JsonMap, RuntimeError> {
        Ok(analysis::analyze(self.run(run_id)?, facet))
    }

    pub fn compare(&self, a: &str, b: &str, facet: Facet) -> Result<ComparisonReport, RuntimeError> {
        analysis::compare(self.run(a)?, self.run(b)?, facet)
    }
}

fn refuse_if_controlled(c: &Cluster, system_id: &str) -> Result<(), RuntimeError> {
    let users: Vec<&str> =
        c.controllers.values().filter(|k| k.assigned_system == system_id).map(|k| k.controller_id.as_str()).collect();
    if users.is_empty() {
        Ok(())
    } else {
        Err(RuntimeError::DanglingReference(format!("system '{system_id}' is controlled by {}", users.join(", "))))
    }
}

fn check_buildings(c: &Cluster, buildings: &[String]) -> Result<(), RuntimeError> {
    match buildings.iter().find(|b| !c.buildings.contains_key(*b)) {
        Some(b) => {
            Err(RuntimeError::DanglingReference(format!("building '{b}' does not exist in cluster '{}'", c.cluster_id)))
        }
        None => Ok(()),
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), RuntimeError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    std::fs::write(path, text)?;
    Ok(())
}

fn write_summary_csv(path: &Path, r: &SimulationResult) -> Result<(), RuntimeError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RuntimeError::Io(e.to_string()))?;
    let io = |e: csv::Error| RuntimeError::Io(e.to_string());
    w.write_record([
        "step",
        "hour",
        "outdoor_c",
        "price",
        "q_cool_w",
        "hvac_elec_kw",
        "load_kw",
        "pv_gen_kw",
        "pv_used_kw",
        "curtailed_kw",
        "batt_charge_kw",
        "batt_discharge_kw",
        "grid_import_kw",
        "cost",
    ])
    .map_err(io)?;
    for s in &r.records {
        let row = [
            s.hour,
            s.outdoor_c,
            s.price,
            s.q_cool_w,
            s.hvac_elec_kw,
            s.load_kw,
            s.pv_gen_kw,
            s.pv_used_kw,
            s.curtailed_kw,
            s.batt_charge_kw,
            s.batt_discharge_kw,
            s.grid_import_kw,
            s.cost,
        ];
        let mut fields = vec![s.step.to_string()];
        fields.extend(row.iter().map(f64::to_string));
        w.write_record(&fields).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
