//! Component models: 1R1C zone, effectiveness-limited coil, linear chiller,
//! fan/pump/tower power curves and an efficiency-loss battery.

use crate::model::{Battery, FanCtrl, FanCtrlType, HvacConfig};

/// Zone temperature after one explicit Euler step.
///
/// `T' = T + dt/C · ((T_out − T)/R + Q_int − Q_cool)`
pub fn zone_step(t: f64, t_out: f64, r: f64, c: f64, q_int_w: f64, q_cool_w: f64, dt_s: f64) -> f64 {
    t + dt_s / c * ((t_out - t) / r + q_int_w - q_cool_w)
}

/// Cooling power that would bring the zone exactly to `target` this step.
/// Negative when the zone drifts below target on its own.
pub fn cooling_demand(t: f64, t_out: f64, r: f64, c: f64, q_int_w: f64, dt_s: f64, target: f64) -> f64 {
    let free = zone_step(t, t_out, r, c, q_int_w, 0.0, dt_s);
    (free - target) * c / dt_s
}

/// Cooling the coil can deliver: effectiveness times chiller rating.
pub fn available_cooling_w(cfg: &HvacConfig) -> f64 {
    cfg.coil.effectiveness * cfg.chiller.rated_capacity_w
}

pub fn chiller_power_w(q_cool_w: f64, cop: f64) -> f64 {
    q_cool_w / cop
}

pub fn fan_power_w(rated_w: f64, ctrl: &FanCtrl, plr: f64) -> f64 {
    let plr = plr.clamp(0.0, 1.0);
    if plr <= 0.0 {
        return 0.0;
    }
    match ctrl.ctrl_type {
        FanCtrlType::Constant => rated_w,
        FanCtrlType::Staged => {
            let n = f64::from(ctrl.stages.unwrap_or(2).max(1));
            rated_w * ((plr * n).ceil() / n).powi(3)
        }
        FanCtrlType::Vfd => rated_w * plr.powi(3),
    }
}

pub fn pump_power_w(rated_w: f64, plr: f64) -> f64 {
    rated_w * plr.clamp(0.0, 1.0)
}

pub fn tower_power_w(cfg: &HvacConfig, plr: f64) -> f64 {
    let plr = plr.clamp(0.0, 1.0);
    cfg.tower.rated_fan_power_w * plr + cfg.tower.pump_power_per_flow * cfg.pump.rated_flow_m3s * plr
}

/// Electric draw of one HVAC system, split by component (W).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HvacPower {
    pub chiller: f64,
    pub fan: f64,
    pub pump: f64,
    pub tower: f64,
}

impl HvacPower {
    pub fn total(&self) -> f64 {
        self.chiller + self.fan + self.pump + self.tower
    }
}

pub fn hvac_power(cfg: &HvacConfig, q_cool_w: f64) -> HvacPower {
    let avail = available_cooling_w(cfg);
    let plr = if avail > 0.0 { q_cool_w / avail } else { 0.0 };
    HvacPower {
        chiller: chiller_power_w(q_cool_w, cfg.chiller.rated_cop),
        fan: fan_power_w(cfg.fan.rated_power_w, &cfg.fan_ctrl, plr),
        pump: pump_power_w(cfg.pump.rated_power_w, plr),
        tower: tower_power_w(cfg, plr),
    }
}

/// Mutable battery state used during a run. Powers are kW, energy kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryState {
    pub spec: Battery,
    pub soc: f64,
}

impl BatteryState {
    pub fn new(spec: &Battery) -> Self {
        Self { soc: spec.soc, spec: spec.clone() }
    }

    /// Charges with up to `requested` kW drawn at the terminals. Returns the
    /// power actually drawn after the power and SOC limits.
    pub fn charge(&mut self, requested: f64, dt_h: f64) -> f64 {
        let b = &self.spec;
        let headroom_kwh = ((b.soc_max - self.soc) * b.capacity).max(0.0);
        let limit = headroom_kwh / (b.charge_eff * dt_h);
        let p = requested.min(b.max_power).min(limit).max(0.0);
        self.soc = (self.soc + b.charge_eff * p * dt_h / b.capacity).min(b.soc_max);
        p
    }

    /// Delivers up to `requested` kW at the terminals. Returns the delivered
    /// power; the storage side drains `delivered / discharge_eff`.
    pub fn discharge(&mut self, requested: f64, dt_h: f64) -> f64 {
        let b = &self.spec;
        let stored_kwh = ((self.soc - b.soc_min) * b.capacity).max(0.0);
        let limit = stored_kwh * b.discharge_eff / dt_h;
        let p = requested.min(b.max_power).min(limit).max(0.0);
        self.soc = (self.soc - p / b.discharge_eff * dt_h / b.capacity).max(b.soc_min);
        p
    }
}

pub fn pv_output_kw(rated_kw: f64, irradiance_wm2: f64) -> f64 {
    rated_kw * irradiance_wm2.max(0.0) / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_flux_is_a_fixed_point() {
        assert_eq!(zone_step(27.0, 27.0, 2e-3, 1e7, 0.0, 0.0, 900.0), 27.0);
    }

    #[test]
    fn hand_evaluated_zone_step() {
        // 24 + 900/1e7 · (8/2e-3 + 500 − 3000)
        let oracle = 24.0 + 900.0 / 1e7 * (4000.0 + 500.0 - 3000.0);
        let t = zone_step(24.0, 32.0, 2e-3, 1e7, 500.0, 3000.0, 900.0);
        assert!((t - 24.135).abs() < 1e-12);
        assert!((t - oracle).abs() < 1e-12);
    }

    #[test]
    fn demand_hits_target_exactly() {
        let q = cooling_demand(25.0, 33.0, 2e-3, 1e7, 800.0, 900.0, 24.0);
        let t = zone_step(25.0, 33.0, 2e-3, 1e7, 800.0, q, 900.0);
        assert!((t - 24.0).abs() < 1e-9);
    }

    #[test]
    fn full_battery_refuses_charge() {
        let spec = Battery { soc: 0.95, ..Battery::default() };
        let mut b = BatteryState::new(&spec);
        assert_eq!(b.charge(5.0, 0.25), 0.0);
        assert_eq!(b.soc, 0.95);
    }

    #[test]
    fn discharge_stops_at_soc_min() {
        let spec = Battery { soc: 0.11, ..Battery::default() };
        let mut b = BatteryState::new(&spec);
        let p = b.discharge(5.0, 0.25);
        // 0.01 · 13.5 kWh stored, 95 % delivered over a quarter hour
        assert!((p - 0.01 * 13.5 * 0.95 / 0.25).abs() < 1e-12);
        assert!((b.soc - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fan_curves() {
        let mut ctrl = FanCtrl { ctrl_type: FanCtrlType::Vfd, rated_flow_m3s: None, stages: None };
        assert!((fan_power_w(400.0, &ctrl, 0.5) - 50.0).abs() < 1e-12);
        ctrl.ctrl_type = FanCtrlType::Constant;
        assert_eq!(fan_power_w(400.0, &ctrl, 0.1), 400.0);
        assert_eq!(fan_power_w(400.0, &ctrl, 0.0), 0.0);
        ctrl.ctrl_type = FanCtrlType::Staged;
        ctrl.stages = Some(2);
        assert!((fan_power_w(400.0, &ctrl, 0.3) - 50.0).abs() < 1e-12);
        assert_eq!(fan_power_w(400.0, &ctrl, 0.7), 400.0);
    }
}
