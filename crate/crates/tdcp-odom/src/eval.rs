//! Drift evaluation: section alignment against ground truth and
//! error-versus-distance metrics.
//!
//! The protocol: the truth track is arc-length parameterized and cut into
//! equally spaced test sections; the stretch of trajectory preceding each
//! section aligns the estimate rigidly (rotation + translation, no scale);
//! horizontal translation error is then recorded against distance along the
//! section, with headline values at 25 m and 50 m.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::ingest::GroundTruthSample;
use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("alignment window has {0} samples; need at least 3")]
    TooFewAlignmentSamples(usize),
    #[error("truth track is {got:.1} m; need {need:.1} m for the requested sections")]
    SectionTooShort { got: f64, need: f64 },
    #[error("estimate does not cover the evaluation span")]
    NoOverlap,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Section layout for drift evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DriftConfig {
    pub sections: usize,
    pub section_length_m: f64,
    pub align_span_m: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            sections: 15,
            section_length_m: 50.0,
            align_span_m: 10.0,
        }
    }
}

/// Rigid map applied to estimate positions: `p -> R p + t`.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Least-squares rigid fit (no scale) mapping `src` onto `dst`.
///
/// Falls back to a position-plus-heading fit when the source points are
/// collinear within 1 mm (a straight alignment stretch leaves the roll about
/// the track axis unobservable); the flag reports the fallback.
pub fn rigid_fit(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
) -> Result<(RigidTransform, bool), EvalError> {
    if src.len() < 3 || src.len() != dst.len() {
        return Err(EvalError::TooFewAlignmentSamples(src.len()));
    }
    let n = src.len() as f64;
    let src_mean = src.iter().sum::<Vector3<f64>>() / n;
    let dst_mean = dst.iter().sum::<Vector3<f64>>() / n;

    let mut h = Matrix3::<f64>::zeros();
    for (a, b) in src.iter().zip(dst) {
        h += (a - src_mean) * (b - dst_mean).transpose();
    }
    let svd = nalgebra::SVD::new(h, true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());

    // Collinear source points: the second singular value carries the spread
    // off the principal axis.
    let collinear = svd.singular_values[1].sqrt() < 1.0e-3 * n.sqrt();
    if collinear {
        // Heading-only: rotate about up to align the principal directions.
        let src_dir = src.last().unwrap() - src.first().unwrap();
        let dst_dir = dst.last().unwrap() - dst.first().unwrap();
        let yaw = dst_dir.y.atan2(dst_dir.x) - src_dir.y.atan2(src_dir.x);
        let (s, c) = yaw.sin_cos();
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let translation = dst_mean - rotation * src_mean;
        return Ok((
            RigidTransform {
                rotation,
                translation,
            },
            true,
        ));
    }

    let mut rotation = (u * v_t).transpose();
    if rotation.determinant() < 0.0 {
        let mut v = v_t.transpose();
        v.column_mut(2).scale_mut(-1.0);
        rotation = v * u.transpose();
    }
    let translation = dst_mean - rotation * src_mean;
    Ok((
        RigidTransform {
            rotation,
            translation,
        },
        false,
    ))
}

/// Aligns an estimate onto truth over the given alignment samples:
/// interpolates the estimate at the truth timestamps and fits rigidly.
pub fn align_segment(
    estimate: &Trajectory,
    alignment_truth: &[GroundTruthSample],
) -> Result<(RigidTransform, bool), EvalError> {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for g in alignment_truth {
        if let Ok(p) = estimate.interpolate_position(g.t) {
            src.push(p);
            dst.push(g.position);
        }
    }
    if src.len() < 3 {
        return Err(EvalError::TooFewAlignmentSamples(src.len()));
    }
    rigid_fit(&src, &dst)
}

/// One evaluated section.
#[derive(Debug, Clone)]
pub struct SectionDrift {
    pub section: usize,
    /// Arc length of the section start along the truth track (m).
    pub start_arc_m: f64,
    /// (distance from section start, horizontal error, 3d error).
    pub curve: Vec<(f64, f64, f64)>,
    pub err_25m: f64,
    pub err_50m: f64,
    pub err3d_50m: f64,
    /// R^2 of a linear fit to horizontal error vs distance.
    pub r2: f64,
    pub fallback_alignment: bool,
}

/// Aggregated drift metrics.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub sections: Vec<SectionDrift>,
    pub mean_err_25m: f64,
    pub mean_err_50m: f64,
    /// Percent of distance.
    pub mean_drift_25_pct: f64,
    pub mean_drift_50_pct: f64,
    pub p50_drift_50_pct: f64,
    pub p90_drift_50_pct: f64,
    pub mean_r2: f64,
}

/// Cumulative arc length along the truth samples.
fn truth_arcs(truth: &[GroundTruthSample]) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(truth.len());
    let mut s = 0.0;
    arcs.push(0.0);
    for i in 1..truth.len() {
        s += (truth[i].position - truth[i - 1].position).norm();
        arcs.push(s);
    }
    arcs
}

fn interp_error_at(curve: &[(f64, f64, f64)], d: f64) -> f64 {
    if curve.is_empty() {
        return f64::NAN;
    }
    match curve.iter().position(|(x, _, _)| *x >= d) {
        Some(0) => curve[0].1,
        Some(i) => {
            let (x0, y0, _) = curve[i - 1];
            let (x1, y1, _) = curve[i];
            if x1 > x0 {
                y0 + (y1 - y0) * (d - x0) / (x1 - x0)
            } else {
                y1
            }
        }
        None => curve.last().unwrap().1,
    }
}

fn linear_fit_r2(curve: &[(f64, f64, f64)]) -> f64 {
    let n = curve.len() as f64;
    if curve.len() < 3 {
        return 1.0;
    }
    let mx = curve.iter().map(|(x, _, _)| x).sum::<f64>() / n;
    let my = curve.iter().map(|(_, y, _)| y).sum::<f64>() / n;
    let sxy: f64 = curve.iter().map(|(x, y, _)| (x - mx) * (y - my)).sum();
    let sxx: f64 = curve.iter().map(|(x, _, _)| (x - mx) * (x - mx)).sum();
    let syy: f64 = curve.iter().map(|(_, y, _)| (y - my) * (y - my)).sum();
    if syy < 1.0e-12 {
        return 1.0; // flat curve: a line fits exactly
    }
    let slope = sxy / sxx.max(1.0e-12);
    let ss_res: f64 = curve
        .iter()
        .map(|(x, y, _)| {
            let fit = my + slope * (x - mx);
            (y - fit) * (y - fit)
        })
        .sum();
    1.0 - ss_res / syy
}

/// Evaluates drift over equally spaced sections of the truth track.
pub fn drift_metrics(
    estimate: &Trajectory,
    truth: &[GroundTruthSample],
    cfg: &DriftConfig,
) -> Result<DriftReport, EvalError> {
    let arcs = truth_arcs(truth);
    let total = *arcs.last().unwrap_or(&0.0);
    let need = cfg.align_span_m + cfg.section_length_m;
    if total < need {
        return Err(EvalError::SectionTooShort { got: total, need });
    }
    let first_start = cfg.align_span_m;
    let last_start = total - cfg.section_length_m;
    let starts: Vec<f64> = if cfg.sections <= 1 {
        vec![first_start]
    } else {
        (0..cfg.sections)
            .map(|i| {
                first_start + (last_start - first_start) * i as f64 / (cfg.sections - 1) as f64
            })
            .collect()
    };

    let mut sections = Vec::with_capacity(starts.len());
    for (si, start) in starts.iter().enumerate() {
        let window: Vec<GroundTruthSample> = truth
            .iter()
            .zip(&arcs)
            .filter(|(_, a)| **a >= start - cfg.align_span_m && **a < *start)
            .map(|(g, _)| *g)
            .collect();
        let (transform, fallback) = align_segment(estimate, &window)?;

        let mut curve = Vec::new();
        for (g, arc) in truth.iter().zip(&arcs) {
            if *arc < *start || *arc > start + cfg.section_length_m {
                continue;
            }
            let Ok(p) = estimate.interpolate_position(g.t) else {
                continue;
            };
            let aligned = transform.apply(&p);
            let delta = aligned - g.position;
            curve.push((arc - start, delta.fixed_rows::<2>(0).norm(), delta.norm()));
        }
        if curve.len() < 3 {
            return Err(EvalError::NoOverlap);
        }
        let err_25 = interp_error_at(&curve, 25.0);
        let err_50 = interp_error_at(&curve, cfg.section_length_m.min(50.0));
        let err3d_50 = {
            let last = curve.last().unwrap();
            last.2
        };
        sections.push(SectionDrift {
            section: si,
            start_arc_m: *start,
            r2: linear_fit_r2(&curve),
            curve,
            err_25m: err_25,
            err_50m: err_50,
            err3d_50m: err3d_50,
            fallback_alignment: fallback,
        });
    }

    let n = sections.len() as f64;
    let mean_err_25m = sections.iter().map(|s| s.err_25m).sum::<f64>() / n;
    let mean_err_50m = sections.iter().map(|s| s.err_50m).sum::<f64>() / n;
    let mut drift50: Vec<f64> = sections
        .iter()
        .map(|s| 100.0 * s.err_50m / cfg.section_length_m)
        .collect();
    drift50.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p50 = drift50[drift50.len() / 2];
    let p90 = drift50[((drift50.len() as f64 * 0.9) as usize).min(drift50.len() - 1)];
    let mean_r2 = sections.iter().map(|s| s.r2).sum::<f64>() / n;
    Ok(DriftReport {
        mean_drift_25_pct: 100.0 * mean_err_25m / 25.0,
        mean_drift_50_pct: 100.0 * mean_err_50m / cfg.section_length_m,
        p50_drift_50_pct: p50,
        p90_drift_50_pct: p90,
        mean_err_25m,
        mean_err_50m,
        mean_r2,
        sections,
    })
}

/// Writes the per-section report plus aggregate rows as CSV.
pub fn write_drift_report(report: &DriftReport, path: &std::path::Path) -> std::io::Result<()> {
    let mut s = String::from(
        "section,start_arc_m,err_25m,err_50m,err3d_50m,drift_25_pct,drift_50_pct,r2,fallback_alignment\n",
    );
    for sec in &report.sections {
        s.push_str(&format!(
            "{},{:.3},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            sec.section,
            sec.start_arc_m,
            sec.err_25m,
            sec.err_50m,
            sec.err3d_50m,
            100.0 * sec.err_25m / 25.0,
            100.0 * sec.err_50m / 50.0,
            sec.r2,
            sec.fallback_alignment
        ));
    }
    s.push_str(&format!(
        "mean,,{:.6},{:.6},,{:.6},{:.6},{:.6},\n",
        report.mean_err_25m,
        report.mean_err_50m,
        report.mean_drift_25_pct,
        report.mean_drift_50_pct,
        report.mean_r2
    ));
    s.push_str(&format!(
        "percentiles,,,,,,p50={:.6} p90={:.6},,\n",
        report.p50_drift_50_pct, report.p90_drift_50_pct
    ));
    std::fs::write(path, s)
}

/// Writes every section's error curve as long-form CSV.
pub fn write_error_curves(
    label: &str,
    report: &DriftReport,
    path: &std::path::Path,
) -> std::io::Result<()> {
    let mut s = String::from("algorithm,section,distance_m,err_2d_m,err_3d_m\n");
    for sec in &report.sections {
        for (d, e2, e3) in &sec.curve {
            s.push_str(&format!(
                "{label},{},{:.3},{:.6},{:.6}\n",
                sec.section, d, e2, e3
            ));
        }
    }
    std::fs::write(path, s)
}
