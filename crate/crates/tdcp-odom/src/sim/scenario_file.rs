//! Key-value scenario file parsing.
//!
//! Format: one `key = value` pair per line, `#` comments. Unknown keys are
//! errors (they are nearly always typos). Example:
//!
//! ```text
//! seed = 7
//! duration = 250          # seconds
//! speed = 1.0             # m/s
//! rate = 1                # epochs per second
//! path = ellipse 55 35    # or: waypoints 20,0,0 20,30,0 ...
//! origin = 45.0 -79.0 150 # lat deg, lon deg, height m
//! start = 2360 345600     # gps week, seconds of week
//! mask_deg = 10
//! truth_rate = 4
//! budget = default        # or zero
//! phase_noise = 0.002
//! code_noise = 0.5
//! doppler_noise = 0.05
//! clock_walk = 1e-9
//! clock_bias = 2e-6
//! slip_rate = 0.05
//! multipath = 0.5 0.005 10   # code sigma, phase sigma, tau; or: off
//! eph_error = 1.5            # per-axis sigma; or: off
//! iono = on
//! tropo = on
//! relpose_drift = 0.02
//! dropout = 20 15 0          # start s, duration s, surviving sats (repeatable)
//! ```

use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::frames::Geodetic;
use crate::time::GpsTime;

use super::{DropoutWindow, ErrorBudget, MultipathModel, PathSpec, ScenarioConfig, SimError};

pub fn parse_scenario_file(path: &Path) -> Result<(ScenarioConfig, ErrorBudget), SimError> {
    let content = fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&content)
}

fn parse_bool(v: &str) -> Result<bool, SimError> {
    match v {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(SimError::Config(format!("expected on/off, got {v:?}"))),
    }
}

fn parse_floats(v: &str) -> Result<Vec<f64>, SimError> {
    v.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| SimError::Config(format!("bad number {t:?}")))
        })
        .collect()
}

pub fn parse_scenario_str(content: &str) -> Result<(ScenarioConfig, ErrorBudget), SimError> {
    let mut cfg = ScenarioConfig::default();
    let mut budget = ErrorBudget::default();
    let mut dropouts = Vec::new();

    for (no, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("line {}: expected key = value", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let one = |v: &str| -> Result<f64, SimError> {
            v.parse::<f64>()
                .map_err(|_| SimError::Config(format!("line {}: bad number {v:?}", no + 1)))
        };
        match key {
            "seed" => cfg.seed = one(value)? as u64,
            "duration" => cfg.duration_s = one(value)?,
            "speed" => cfg.speed_mps = one(value)?,
            "rate" => cfg.epoch_rate_hz = one(value)?,
            "truth_rate" => cfg.truth_rate_hz = one(value)?,
            "mask_deg" => cfg.mask_angle_rad = one(value)?.to_radians(),
            "origin" => {
                let f = parse_floats(value)?;
                if f.len() != 3 {
                    return Err(SimError::Config("origin needs lat lon height".into()));
                }
                cfg.origin = Geodetic {
                    lat: f[0].to_radians(),
                    lon: f[1].to_radians(),
                    height: f[2],
                };
            }
            "start" => {
                let f = parse_floats(value)?;
                if f.len() != 2 {
                    return Err(SimError::Config("start needs week sow".into()));
                }
                cfg.start_time = GpsTime::new(f[0] as i32, f[1]);
            }
            "path" => {
                let mut parts = value.split_whitespace();
                match parts.next() {
                    Some("ellipse") => {
                        let rest: Vec<f64> = parse_floats(&parts.collect::<Vec<_>>().join(" "))?;
                        if rest.len() != 2 {
                            return Err(SimError::Config("ellipse needs two semi-axes".into()));
                        }
                        cfg.path = PathSpec::Ellipse {
                            semi_east: rest[0],
                            semi_north: rest[1],
                        };
                    }
                    Some("waypoints") => {
                        let mut pts = Vec::new();
                        for triple in parts {
                            let chunk: Vec<f64> = triple
                                .split(',')
                                .map(|t| {
                                    t.parse::<f64>().map_err(|_| {
                                        SimError::Config(format!("bad waypoint {triple:?}"))
                                    })
                                })
                                .collect::<Result<_, _>>()?;
                            if chunk.len() != 3 {
                                return Err(SimError::Config(format!(
                                    "waypoint {triple:?} needs x,y,z"
                                )));
                            }
                            pts.push(Vector3::new(chunk[0], chunk[1], chunk[2]));
                        }
                        if pts.is_empty() {
                            return Err(SimError::Config("waypoints path is empty".into()));
                        }
                        cfg.path = PathSpec::Waypoints(pts);
                    }
                    other => return Err(SimError::Config(format!("unknown path kind {other:?}"))),
                }
            }
            "dropout" => {
                let f = parse_floats(value)?;
                if f.len() != 3 {
                    return Err(SimError::Config(
                        "dropout needs start duration surviving".into(),
                    ));
                }
                dropouts.push(DropoutWindow {
                    start_s: f[0],
                    duration_s: f[1],
                    surviving: f[2] as usize,
                });
            }
            "budget" => match value {
                "default" => budget = ErrorBudget::default(),
                "zero" => budget = ErrorBudget::zero(),
                _ => return Err(SimError::Config(format!("unknown budget preset {value:?}"))),
            },
            "phase_noise" => budget.phase_noise_sigma_m = one(value)?,
            "code_noise" => budget.pseudorange_noise_sigma_m = one(value)?,
            "doppler_noise" => budget.doppler_noise_sigma_mps = one(value)?,
            "clock_walk" => budget.clock_walk_s_per_sqrt_s = one(value)?,
            "clock_bias" => budget.clock_initial_bias_s = one(value)?,
            "slip_rate" => budget.cycle_slip_rate_per_min = one(value)?,
            "multipath" => {
                if value == "off" {
                    budget.multipath = None;
                } else {
                    let f = parse_floats(value)?;
                    if f.len() != 3 {
                        return Err(SimError::Config(
                            "multipath needs code phase tau (or off)".into(),
                        ));
                    }
                    budget.multipath = Some(MultipathModel {
                        code_sigma_m: f[0],
                        phase_sigma_m: f[1],
                        tau_s: f[2],
                    });
                }
            }
            "eph_error" => {
                if value == "off" {
                    budget.apply_eph_error = false;
                } else {
                    budget.apply_eph_error = true;
                    budget.eph_error_sigma_m = one(value)?;
                }
            }
            "iono" => budget.apply_iono = parse_bool(value)?,
            "tropo" => budget.apply_tropo = parse_bool(value)?,
            "relpose_drift" => cfg.rel_pose_drift_frac = one(value)?,
            other => {
                return Err(SimError::Config(format!(
                    "line {}: unknown key {other:?}",
                    no + 1
                )))
            }
        }
    }
    if !dropouts.is_empty() {
        cfg.dropouts = dropouts;
    }
    Ok((cfg, budget))
}
