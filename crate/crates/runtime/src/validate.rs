use crate::model::{Configuration, ControllerKind, DisturbanceKind};

/// Structural check of a configuration. Returns every problem found, in a
/// deterministic order; an empty list means the configuration can run.
pub fn validate_config(cfg: &Configuration) -> Vec<String> {
    let mut errs = Vec::new();
    let mut any_zone = false;
    for c in cfg.clusters.values() {
        let cid = &c.cluster_id;
        for b in c.buildings.values() {
            any_zone |= !b.zones.is_empty();
            let mut seen = std::collections::BTreeSet::new();
            for z in &b.zones {
                if !seen.insert(&z.zone_id) {
                    errs.push(format!("building '{}': duplicate zone '{}'", b.building_id, z.zone_id));
                }
                if let Err(e) = z.check() {
                    errs.push(e);
                }
            }
            if let Some(e) = &b.electrical_zone {
                if !(e.base_load_kw >= 0.0 && e.base_load_kw.is_finite()) {
                    errs.push(format!("building '{}': base_load_kw must be >= 0", b.building_id));
                }
            }
        }
        for h in c.hvac_systems.values() {
            if let Err(e) = h.system_config.check() {
                errs.push(format!("hvac '{}': {e}", h.system_id));
            }
            for b in &h.buildings {
                if !c.buildings.contains_key(b) {
                    errs.push(format!("hvac '{}' assigned to missing building '{b}'", h.system_id));
                }
            }
        }
        for d in c.der_systems.values() {
            if let Err(e) = d.check() {
                errs.push(format!("der '{}': {e}", d.system_id));
            }
            for b in &d.buildings {
                if !c.buildings.contains_key(b) {
                    errs.push(format!("der '{}' assigned to missing building '{b}'", d.system_id));
                }
            }
        }
        for ctl in c.controllers.values() {
            let exists = match ctl.kind {
                ControllerKind::DerSchedule => c.der_systems.contains_key(&ctl.assigned_system),
                _ => c.hvac_systems.contains_key(&ctl.assigned_system),
            };
            if !exists {
                errs.push(format!(
                    "controller '{}' references missing system '{}'",
                    ctl.controller_id, ctl.assigned_system
                ));
            }
            if let Err(e) = ctl.check() {
                errs.push(e);
            }
        }
        for d in c.disturbances.values() {
            if let Err(e) = d.check() {
                errs.push(e);
            }
        }
        let needs_weather = c.buildings.values().any(|b| !b.zones.is_empty()) || !c.der_systems.is_empty();
        if needs_weather && !c.disturbances.values().any(|d| d.kind == DisturbanceKind::Weather) {
            errs.push(format!("cluster '{cid}' has no weather disturbance"));
        }
    }
    if !any_zone {
        errs.push("no building with a thermal zone".to_string());
    }
    for (kind, id) in [("environment", &cfg.selection.environment)] {
        if let Some(id) = id {
            if !cfg.environments.contains_key(id) {
                errs.push(format!("selected {kind} '{id}' does not exist"));
            }
        }
    }
    errs
}
