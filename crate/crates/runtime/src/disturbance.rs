//! Exogenous drivers: built-in daily profiles, inline series and CSV files,
//! all materialized at the environment timestep.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::RuntimeError;
use crate::model::{Cluster, Disturbance, DisturbanceKind, Environment, HourWindow, PEAK_WINDOW};

pub const CSV_HEADER: [&str; 5] = ["timestamp", "outdoor_c", "irradiance_wm2", "occupancy", "price_per_kwh"];

pub const WEATHER_PROFILES: [&str; 2] = ["hot_summer_day", "mild_day"];
pub const OCCUPANCY_PROFILES: [&str; 3] = ["office", "residential", "constant"];
pub const PRICE_PROFILES: [&str; 2] = ["tou", "flat"];

pub const OFF_PEAK_PRICE: f64 = 0.12;
pub const PEAK_PRICE: f64 = 0.35;

/// Driver values for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub outdoor_c: f64,
    pub irradiance_wm2: f64,
    pub occupancy: f64,
    pub price: f64,
    pub peak: bool,
}

pub fn hot_summer_day(hour: f64) -> (f64, f64) {
    let t = 29.0 + 6.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin();
    (t, solar(hour, 950.0))
}

pub fn mild_day(hour: f64) -> (f64, f64) {
    let t = 21.0 + 4.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin();
    (t, solar(hour, 700.0))
}

fn solar(hour: f64, peak: f64) -> f64 {
    let h = hour.rem_euclid(24.0);
    if (6.0..18.0).contains(&h) {
        peak * (PI * (h - 6.0) / 12.0).sin()
    } else {
        0.0
    }
}

pub fn occupancy_profile(name: &str, hour: f64) -> Option<f64> {
    let h = hour.rem_euclid(24.0);
    match name {
        "office" => Some(if (8.0..18.0).contains(&h) { 1.0 } else { 0.3 }),
        "residential" => Some(if (9.0..17.0).contains(&h) { 0.5 } else { 1.0 }),
        "constant" => Some(1.0),
        _ => None,
    }
}

/// Time-indexed samples of one disturbance, as parsed from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceTable {
    /// Spacing between rows, when the timestamps allow inferring it.
    pub timestep_s: Option<f64>,
    pub rows: Vec<CsvRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub outdoor_c: f64,
    pub irradiance_wm2: f64,
    pub occupancy: f64,
    pub price_per_kwh: f64,
}

fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp() as f64);
        }
    }
    None
}

pub fn read_csv<R: Read>(reader: R) -> Result<DisturbanceTable, RuntimeError> {
    let bad = |msg: String| RuntimeError::InvalidValue(format!("disturbance csv: {msg}"));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols != CSV_HEADER {
        return Err(bad(format!("header must be '{}', got '{}'", CSV_HEADER.join(","), cols.join(","))));
    }
    let mut stamps = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| bad(format!("line {line}: bad timestamp '{}'", &rec[0])))?;
        let num = |j: usize| -> Result<f64, RuntimeError> {
            rec[j]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("line {line}: bad {} '{}'", CSV_HEADER[j], &rec[j])))
        };
        stamps.push(ts);
        rows.push(CsvRow { outdoor_c: num(1)?, irradiance_wm2: num(2)?, occupancy: num(3)?, price_per_kwh: num(4)? });
    }
    let timestep_s = match stamps.as_slice() {
        [a, b, ..] => {
            let dt = b - a;
            if dt <= 0.0 || stamps.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6) {
                return Err(bad("timestamps must be evenly spaced and increasing".into()));
            }
            Some(dt)
        }
        _ => None,
    };
    Ok(DisturbanceTable { timestep_s, rows })
}

pub fn write_csv<W: std::io::Write>(writer: W, timestep_s: f64, rows: &[CsvRow]) -> Result<(), RuntimeError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| RuntimeError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i as f64 * timestep_s).to_string(),
            r.outdoor_c.to_string(),
            r.irradiance_wm2.to_string(),
            r.occupancy.to_string(),
            r.price_per_kwh.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn load_table(path: &str, base_dir: Option<&Path>) -> Result<DisturbanceTable, RuntimeError> {
    let p = Path::new(path);
    let full = match base_dir {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    };
    let file = std::fs::File::open(&full).map_err(|e| RuntimeError::Io(format!("{}: {e}", full.display())))?;
    read_csv(file)
}

fn series_numbers(d: &Disturbance, series: &[Value]) -> Result<Vec<f64>, RuntimeError> {
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64().ok_or_else(|| {
                RuntimeError::InvalidValue(format!("disturbance '{}': series[{i}] is not a number", d.disturbance_id))
            })
        })
        .collect()
}

fn series_weather(d: &Disturbance, series: &[Value]) -> Result<Vec<(f64, f64)>, RuntimeError> {
    series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = v.get("outdoor_c").and_then(Value::as_f64);
            let g = v.get("irradiance_wm2").and_then(Value::as_f64);
            t.zip(g).ok_or_else(|| {
                RuntimeError::InvalidValue(format!(
                    "disturbance '{}': series[{i}] needs outdoor_c and irradiance_wm2",
                    d.disturbance_id
                ))
            })
        })
        .collect()
}

fn cover<T: Copy>(d: &Disturbance, values: Vec<T>, needed: usize) -> Result<Vec<T>, RuntimeError> {
    if values.len() < needed {
        return Err(RuntimeError::HorizonUncovered { id: d.disturbance_id.clone(), available: values.len(), needed });
    }
    Ok(values.into_iter().take(needed).collect())
}

fn table_for(
    d: &Disturbance,
    env: &Environment,
    base_dir: Option<&Path>,
) -> Result<Option<DisturbanceTable>, RuntimeError> {
    let Some(path) = &d.csv_path else { return Ok(None) };
    let table = load_table(path, base_dir)?;
    if let Some(dt) = table.timestep_s {
        if (dt - env.timestep_s).abs() > 1e-6 {
            return Err(RuntimeError::InvalidValue(format!(
                "disturbance '{}': csv timestep {dt} s does not match environment timestep {} s",
                d.disturbance_id, env.timestep_s
            )));
        }
    }
    Ok(Some(table))
}

fn unknown_profile(d: &Disturbance, name: &str) -> RuntimeError {
    RuntimeError::InvalidValue(format!(
        "disturbance '{}': unknown {} profile '{name}'",
        d.disturbance_id,
        d.kind.label()
    ))
}

fn hours(env: &Environment, n: usize) -> impl Iterator<Item = f64> + '_ {
    (0..n).map(move |k| k as f64 * env.timestep_s / 3600.0)
}

pub fn weather_series(
    d: &Disturbance,
    env: &Environment,
    n: usize,
    base_dir: Option<&Path>,
) -> Result<Vec<(f64, f64)>, RuntimeError> {
    if let Some(s) = &d.series {
        return cover(d, series_weather(d, s)?, n);
    }
    if let Some(t) = table_for(d, env, base_dir)? {
        return cover(d, t.rows.iter().map(|r| (r.outdoor_c, r.irradiance_wm2)).collect(), n);
    }
    let name = d.profile.as_deref().unwrap_or("hot_summer_day");
    let f = match name {
        "hot_summer_day" => hot_summer_day,
        "mild_day" => mild_day,
        _ => return Err(unknown_profile(d, name)),
    };
    Ok(hours(env, n).map(f).collect())
}

pub fn occupancy_series(
    d: &Disturbance,
    env: &Environment,
    n: usize,
    base_dir: Option<&Path>,
) -> Result<Vec<f64>, RuntimeError> {
    if let Some(s) = &d.series {
        return cover(d, series_numbers(d, s)?, n);
    }
    if let Some(t) = table_for(d, env, base_dir)? {
        return cover(d, t.rows.iter().map(|r| r.occupancy).collect(), n);
    }
    let name = d.profile.as_deref().unwrap_or("office");
    hours(env, n).map(|h| occupancy_profile(name, h).ok_or_else(|| unknown_profile(d, name))).collect()
}

pub fn price_series(
    d: &Disturbance,
    env: &Environment,
    n: usize,
    base_dir: Option<&Path>,
) -> Result<Vec<f64>, RuntimeError> {
    if let Some(s) = &d.series {
        return cover(d, series_numbers(d, s)?, n);
    }
    if let Some(t) = table_for(d, env, base_dir)? {
        return cover(d, t.rows.iter().map(|r| r.price_per_kwh).collect(), n);
    }
    let off = d.off_peak_price.unwrap_or(OFF_PEAK_PRICE);
    let name = d.profile.as_deref().unwrap_or("tou");
    let peak_price = match name {
        "tou" => d.peak_price.unwrap_or(PEAK_PRICE),
        "flat" => off,
        _ => return Err(unknown_profile(d, name)),
    };
    let window = d.peak_window();
    Ok(hours(env, n).map(|h| if window.contains(h) { peak_price } else { off }).collect())
}

/// The disturbance of `kind` a cluster uses: the selected one when it has
/// that kind, otherwise the first by id.
pub fn pick<'a>(cluster: &'a Cluster, kind: DisturbanceKind, selected: Option<&str>) -> Option<&'a Disturbance> {
    if let Some(d) = selected.and_then(|id| cluster.disturbances.get(id)) {
        if d.kind == kind {
            return Some(d);
        }
    }
    cluster.disturbances.values().find(|d| d.kind == kind)
}

/// Peak window of a cluster: from its price disturbance, else the default.
pub fn peak_window(cluster: &Cluster, selected: Option<&str>) -> HourWindow {
    pick(cluster, DisturbanceKind::Price, selected).map(Disturbance::peak_window).unwrap_or(PEAK_WINDOW)
}

/// Materializes every driver of a cluster for `n` steps. A missing occupancy
/// disturbance means a multiplier of 1; a missing price means free energy.
pub fn materialize(
    cluster: &Cluster,
    env: &Environment,
    n: usize,
    selected: Option<&str>,
    base_dir: Option<&Path>,
) -> Result<Vec<Sample>, RuntimeError> {
    let weather = pick(cluster, DisturbanceKind::Weather, selected).ok_or_else(|| {
        RuntimeError::ValidationFailed(vec![format!("cluster '{}' has no weather disturbance", cluster.cluster_id)])
    })?;
    let wx = weather_series(weather, env, n, base_dir)?;
    let occ = match pick(cluster, DisturbanceKind::Occupancy, selected) {
        Some(d) => occupancy_series(d, env, n, base_dir)?,
        None => vec![1.0; n],
    };
    let price = match pick(cluster, DisturbanceKind::Price, selected) {
        Some(d) => price_series(d, env, n, base_dir)?,
        None => vec![0.0; n],
    };
    let window = peak_window(cluster, selected);
    Ok(hours(env, n)
        .enumerate()
        .map(|(k, h)| Sample {
            outdoor_c: wx[k].0,
            irradiance_wm2: wx[k].1,
            occupancy: occ[k],
            price: price[k],
            peak: window.contains(h),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_roundtrip_and_timestep_inference() {
        let rows: Vec<CsvRow> = (0..4)
            .map(|i| CsvRow {
                outdoor_c: 30.0 + i as f64,
                irradiance_wm2: 100.0 * i as f64,
                occupancy: 1.0,
                price_per_kwh: 0.1,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, 900.0, &rows).unwrap();
        let table = read_csv(buf.as_slice()).unwrap();
        assert_eq!(table.timestep_s, Some(900.0));
        assert_eq!(table.rows, rows);
    }

    #[test]
    fn csv_accepts_datetime_stamps() {
        let text = "timestamp,outdoor_c,irradiance_wm2,occupancy,price_per_kwh\n\
                    2024-07-01 00:00:00,25,0,0.3,0.12\n\
                    2024-07-01 00:15:00,25,0,0.3,0.12\n";
        assert_eq!(read_csv(text.as_bytes()).unwrap().timestep_s, Some(900.0));
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let text = "time,temp\n0,1\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn short_series_is_uncovered() {
        let mut d = Disturbance::new("p", DisturbanceKind::Price);
        d.series = Some(vec![json!(0.1); 10]);
        let env = Environment::new("e");
        let err = price_series(&d, &env, 96, None).unwrap_err();
        assert_eq!(err, RuntimeError::HorizonUncovered { id: "p".into(), available: 10, needed: 96 });
    }

    #[test]
    fn tou_prices_follow_peak_window() {
        let d = Disturbance::new("p", DisturbanceKind::Price);
        let env = Environment::new("e");
        let p = price_series(&d, &env, 96, None).unwrap();
        assert_eq!(p[63], OFF_PEAK_PRICE);
        assert_eq!(p[64], PEAK_PRICE);
        assert_eq!(p[79], PEAK_PRICE);
        assert_eq!(p[80], OFF_PEAK_PRICE);
    }

    #[test]
    fn no_sun_at_night() {
        assert_eq!(hot_summer_day(3.0).1, 0.0);
        assert!(hot_summer_day(12.0).1 > 900.0);
    }
}
