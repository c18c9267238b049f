//! CSV formats shared by the simulator, the estimator, and the evaluation
//! harness.
//!
//! - ground truth: `week,sow,east_m,north_m,up_m,flag`
//! - relative pose: `week_a,sow_a,week_b,sow_b,xi1..xi6,cov11..cov66`
//!   where `xi` is the se(3) log of the vehicle-frame motion a -> b
//! - trajectory: `week,sow,east_m,north_m,up_m,xi1..xi6,w1..w6`
//!   (receiver position plus vehicle pose tangent and body velocity)

use std::fs;
use std::path::Path;

use nalgebra::{Matrix6, Vector3, Vector6};

use super::{GroundTruthSample, IngestError, RelPoseMeasurement};
use crate::se3::{se3_exp, se3_log, Pose, Twist};
use crate::time::GpsTime;

fn split_csv(line: &str) -> Vec<&str> {
    line.split(',').map(|s| s.trim()).collect()
}

fn parse_field<T: std::str::FromStr>(
    file: &str,
    line_no: usize,
    fields: &[&str],
    idx: usize,
) -> Result<T, IngestError> {
    fields
        .get(idx)
        .and_then(|s| s.parse::<T>().ok())
        .ok_or_else(|| IngestError::malformed(file, line_no, format!("bad field {idx}")))
}

/// Reads ground truth, enforcing strictly increasing timestamps.
pub fn parse_ground_truth(path: &Path) -> Result<Vec<GroundTruthSample>, IngestError> {
    let content = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("week") {
            continue;
        }
        let f = split_csv(line);
        let week: i32 = parse_field(&name, i + 1, &f, 0)?;
        let sow: f64 = parse_field(&name, i + 1, &f, 1)?;
        let e: f64 = parse_field(&name, i + 1, &f, 2)?;
        let n: f64 = parse_field(&name, i + 1, &f, 3)?;
        let u: f64 = parse_field(&name, i + 1, &f, 4)?;
        let flag: u8 = parse_field(&name, i + 1, &f, 5)?;
        let sample = GroundTruthSample {
            t: GpsTime::new(week, sow),
            position: Vector3::new(e, n, u),
            quality: flag,
        };
        if let Some(last) = out.last() {
            let last: &GroundTruthSample = last;
            if sample.t <= last.t {
                return Err(IngestError::malformed(
                    &name,
                    i + 1,
                    "timestamps must be strictly increasing",
                ));
            }
        }
        out.push(sample);
    }
    if out.is_empty() {
        return Err(IngestError::NoEpochs(name));
    }
    Ok(out)
}

pub fn write_ground_truth(samples: &[GroundTruthSample], path: &Path) -> Result<(), IngestError> {
    let mut s = String::from("week,sow,east_m,north_m,up_m,flag\n");
    for g in samples {
        s.push_str(&format!(
            "{},{:.9},{:.6},{:.6},{:.6},{}\n",
            g.t.week(),
            g.t.seconds_of_week(),
            g.position.x,
            g.position.y,
            g.position.z,
            g.quality
        ));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Reads relative-pose measurements (46 columns).
pub fn parse_rel_poses(path: &Path) -> Result<Vec<RelPoseMeasurement>, IngestError> {
    let content = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("week") {
            continue;
        }
        let f = split_csv(line);
        if f.len() < 46 {
            return Err(IngestError::malformed(&name, i + 1, "expected 46 columns"));
        }
        let week_a: i32 = parse_field(&name, i + 1, &f, 0)?;
        let sow_a: f64 = parse_field(&name, i + 1, &f, 1)?;
        let week_b: i32 = parse_field(&name, i + 1, &f, 2)?;
        let sow_b: f64 = parse_field(&name, i + 1, &f, 3)?;
        let mut xi = Vector6::zeros();
        for k in 0..6 {
            xi[k] = parse_field(&name, i + 1, &f, 4 + k)?;
        }
        let mut cov = Matrix6::zeros();
        for r in 0..6 {
            for c in 0..6 {
                cov[(r, c)] = parse_field(&name, i + 1, &f, 10 + 6 * r + c)?;
            }
        }
        let m = RelPoseMeasurement {
            t_a: GpsTime::new(week_a, sow_a),
            t_b: GpsTime::new(week_b, sow_b),
            t_ab: se3_exp(&xi),
            covariance: cov,
        };
        m.validate()?;
        out.push(m);
    }
    Ok(out)
}

pub fn write_rel_poses(
    measurements: &[RelPoseMeasurement],
    path: &Path,
) -> Result<(), IngestError> {
    let mut s = String::from("week_a,sow_a,week_b,sow_b,xi1,xi2,xi3,xi4,xi5,xi6,");
    for r in 1..=6 {
        for c in 1..=6 {
            s.push_str(&format!("cov{r}{c}"));
            if !(r == 6 && c == 6) {
                s.push(',');
            }
        }
    }
    s.push('\n');
    for m in measurements {
        let xi = se3_log(&m.t_ab)
            .map_err(|e| IngestError::Invalid(format!("relative pose not loggable: {e}")))?;
        s.push_str(&format!(
            "{},{:.9},{},{:.9}",
            m.t_a.week(),
            m.t_a.seconds_of_week(),
            m.t_b.week(),
            m.t_b.seconds_of_week()
        ));
        for k in 0..6 {
            s.push_str(&format!(",{:.12e}", xi[k]));
        }
        for r in 0..6 {
            for c in 0..6 {
                s.push_str(&format!(",{:.12e}", m.covariance[(r, c)]));
            }
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// One exported trajectory row: receiver position plus full vehicle state.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: GpsTime,
    /// Position of the selected frame (receiver by default) in ENU (m).
    pub position: Vector3<f64>,
    /// se(3) log of the vehicle pose `T_gv`.
    pub pose_tangent: Vector6<f64>,
    /// Body-frame velocity.
    pub twist: Twist,
}

impl TrajectorySample {
    pub fn pose(&self) -> Pose {
        se3_exp(&self.pose_tangent)
    }
}

pub fn write_trajectory_csv(samples: &[TrajectorySample], path: &Path) -> Result<(), IngestError> {
    if samples.is_empty() {
        return Err(IngestError::Invalid("empty trajectory".into()));
    }
    let mut s =
        String::from("week,sow,east_m,north_m,up_m,xi1,xi2,xi3,xi4,xi5,xi6,w1,w2,w3,w4,w5,w6\n");
    for r in samples {
        s.push_str(&format!(
            "{},{:.9},{:.6},{:.6},{:.6}",
            r.t.week(),
            r.t.seconds_of_week(),
            r.position.x,
            r.position.y,
            r.position.z
        ));
        for k in 0..6 {
            s.push_str(&format!(",{:.12e}", r.pose_tangent[k]));
        }
        let w = r.twist.as_vector();
        for k in 0..6 {
            s.push_str(&format!(",{:.12e}", w[k]));
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectorySample>, IngestError> {
    let content = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("week") {
            continue;
        }
        let f = split_csv(line);
        if f.len() < 17 {
            return Err(IngestError::malformed(&name, i + 1, "expected 17 columns"));
        }
        let week: i32 = parse_field(&name, i + 1, &f, 0)?;
        let sow: f64 = parse_field(&name, i + 1, &f, 1)?;
        let e: f64 = parse_field(&name, i + 1, &f, 2)?;
        let n: f64 = parse_field(&name, i + 1, &f, 3)?;
        let u: f64 = parse_field(&name, i + 1, &f, 4)?;
        let mut xi = Vector6::zeros();
        for k in 0..6 {
            xi[k] = parse_field(&name, i + 1, &f, 5 + k)?;
        }
        let mut w = Vector6::zeros();
        for k in 0..6 {
            w[k] = parse_field(&name, i + 1, &f, 11 + k)?;
        }
        out.push(TrajectorySample {
            t: GpsTime::new(week, sow),
            position: Vector3::new(e, n, u),
            pose_tangent: xi,
            twist: Twist::from_vector(&w),
        });
    }
    if out.is_empty() {
        return Err(IngestError::NoEpochs(name));
    }
    Ok(out)
}
