//! Built-in configuration every fresh runtime starts from.

use crate::model::*;

pub const REFERENCE_CONFIG: &str = "reference";
pub const REFERENCE_CLUSTER: &str = "c1";
pub const REFERENCE_BUILDING: &str = "bldg1";
pub const REFERENCE_HVAC: &str = "hvac1";
pub const REFERENCE_DER: &str = "der1";

/// One office building with a fan-coil unit (COP 3.0), a 13.5 kWh battery
/// with 10 kW of PV, a thermostat, a battery schedule, a hot summer day, an
/// office occupancy profile and a time-of-use tariff.
pub fn reference_config() -> Configuration {
    let mut zone = ThermalZone::new("zone1");
    zone.capacitance = 1.5e7;
    zone.resistance = 2.5e-3;
    zone.internal_gain_w = 800.0;

    let mut bldg = Building::new(REFERENCE_BUILDING);
    bldg.name = "Office building".into();
    bldg.zones.push(zone);
    bldg.electrical_zone = Some(ElectricalZone { zone_id: "elec1".into(), base_load_kw: 3.0 });

    let mut hvac_cfg = HvacConfig::default();
    hvac_cfg.chiller.rated_cop = 3.0;
    let hvac = HvacSystem {
        system_id: REFERENCE_HVAC.into(),
        system_name: Some("FCU System".into()),
        system_config: hvac_cfg,
        parameters: JsonMap::new(),
        buildings: vec![REFERENCE_BUILDING.into()],
    };
    let der = DerSystem {
        system_id: REFERENCE_DER.into(),
        system_name: Some("Battery + PV".into()),
        battery: Some(Battery::default()),
        pv: Some(Pv { rated_kw: 10.0 }),
        throughput_kwh: 0.0,
        buildings: vec![REFERENCE_BUILDING.into()],
    };
    let thermostat = Controller {
        controller_id: "thermostat1".into(),
        kind: ControllerKind::ThermostatDeadband,
        params: ControllerParams::default(),
        assigned_system: REFERENCE_HVAC.into(),
        enabled: true,
    };
    let schedule = Controller {
        controller_id: "der_sched1".into(),
        kind: ControllerKind::DerSchedule,
        params: ControllerParams::default(),
        assigned_system: REFERENCE_DER.into(),
        enabled: true,
    };
    let mut weather = Disturbance::new("weather1", DisturbanceKind::Weather);
    weather.profile = Some("hot_summer_day".into());
    let mut occupancy = Disturbance::new("occupancy1", DisturbanceKind::Occupancy);
    occupancy.profile = Some("office".into());
    let mut price = Disturbance::new("price1", DisturbanceKind::Price);
    price.profile = Some("tou".into());

    let mut cluster = Cluster::new(REFERENCE_CLUSTER);
    cluster.name = "Reference cluster".into();
    cluster.buildings.insert(bldg.building_id.clone(), bldg);
    cluster.hvac_systems.insert(hvac.system_id.clone(), hvac);
    cluster.der_systems.insert(der.system_id.clone(), der);
    for c in [thermostat, schedule] {
        cluster.controllers.insert(c.controller_id.clone(), c);
    }
    for d in [weather, occupancy, price] {
        cluster.disturbances.insert(d.disturbance_id.clone(), d);
    }

    let mut cfg = Configuration::new(REFERENCE_CONFIG);
    cfg.description = "Reference single-building setup".into();
    cfg.active = true;
    cfg.clusters.insert(cluster.cluster_id.clone(), cluster);
    let env = Environment::new("env1");
    cfg.selection.environment = Some(env.env_id.clone());
    cfg.environments.insert(env.env_id.clone(), env);
    cfg
}
