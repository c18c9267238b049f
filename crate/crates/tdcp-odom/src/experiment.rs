//! Matched-seed experiment campaigns: drift comparisons between TDCP and the
//! baselines, and dropout-robustness runs with and without the stand-in
//! odometry factors.
//!
//! Runs fan out across threads; results are keyed by seed and written in
//! deterministic order.

use std::path::Path;

use nalgebra::Matrix3;
use rayon::prelude::*;
use thiserror::Error;

use crate::atmosphere::AtmosphereConfig;
use crate::baselines::{doppler_track, pseudorange_track, BaselineError, BaselineTrack};
use crate::eval::{drift_metrics, DriftConfig, DriftReport, EvalError};
use crate::frames::FrameTag;
use crate::ingest::{GroundTruthSample, NavData};
use crate::pipeline::{run_odometry, GraphConfig, PipelineError, Topology};
use crate::plot::{palette, LinePlot, Series};
use crate::se3::Pose;
use crate::sim::{
    parse_scenario_file, simulate, write_rinex_nav, write_rinex_obs, DropoutWindow, ErrorBudget,
    PathSpec, ScenarioConfig, SimError,
};
use crate::trajectory::{Trajectory, TrajectoryNode};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error("suite: {0}")]
    Suite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentMode {
    /// TDCP vs pseudorange vs Doppler drift on clean scenarios.
    Drift,
    /// TDCP with/without relative-pose factors across dropout variants.
    Dropout,
}

#[derive(Debug, Clone)]
pub struct ExperimentSuite {
    pub mode: ExperimentMode,
    pub scenario: ScenarioConfig,
    pub budget: ErrorBudget,
    pub seeds: Vec<u64>,
    pub drift_cfg: DriftConfig,
    pub dropout_start_s: f64,
    pub dropout_duration_s: f64,
    pub partial_survivors: usize,
}

impl ExperimentSuite {
    pub fn drift_default(seeds: Vec<u64>) -> Self {
        Self {
            mode: ExperimentMode::Drift,
            scenario: ScenarioConfig::default(),
            budget: ErrorBudget::default(),
            seeds,
            drift_cfg: DriftConfig::default(),
            dropout_start_s: 20.0,
            dropout_duration_s: 15.0,
            partial_survivors: 2,
        }
    }

    /// Short run with a turn inside the dropout window, so the motion prior
    /// alone cannot coast through it.
    pub fn dropout_default(seeds: Vec<u64>) -> Self {
        Self {
            mode: ExperimentMode::Dropout,
            scenario: dropout_scenario_base(),
            budget: ErrorBudget::default(),
            seeds,
            drift_cfg: DriftConfig {
                sections: 1,
                section_length_m: 50.0,
                align_span_m: 10.0,
            },
            dropout_start_s: 20.0,
            dropout_duration_s: 15.0,
            partial_survivors: 2,
        }
    }
}

/// About a minute and a half at 1 m/s: 20 m east, a 12 m-radius left turn,
/// then north. The turn sits inside the default 20-35 s dropout window, so
/// coasting on the motion model alone genuinely fails there.
pub fn dropout_scenario_base() -> ScenarioConfig {
    let radius = 12.0;
    let mut points = vec![nalgebra::Vector3::new(20.0, 0.0, 0.0)];
    let centre = nalgebra::Vector3::new(20.0, radius, 0.0);
    for k in 1..=8 {
        let a = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::FRAC_PI_2 / 8.0;
        points.push(centre + radius * nalgebra::Vector3::new(a.cos(), a.sin(), 0.0));
    }
    points.push(nalgebra::Vector3::new(20.0 + radius, 75.0, 0.0));
    ScenarioConfig {
        path: PathSpec::Waypoints(points),
        duration_s: 90.0,
        ..ScenarioConfig::default()
    }
}

/// Parses a suite file: suite keys plus any scenario/budget keys.
pub fn parse_suite_file(path: &Path) -> Result<ExperimentSuite, ExperimentError> {
    let content = std::fs::read_to_string(path)?;
    let mut mode = None;
    let mut seeds = Vec::new();
    let mut drift_cfg = DriftConfig::default();
    let mut dropout_start_s = 20.0;
    let mut dropout_duration_s = 15.0;
    let mut partial_survivors = 2;
    let mut scenario_lines = Vec::new();

    for raw in content.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ExperimentError::Suite(format!(
                "expected key = value: {line:?}"
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "mode" => {
                mode = Some(match value {
                    "drift" => ExperimentMode::Drift,
                    "dropout" => ExperimentMode::Dropout,
                    _ => return Err(ExperimentError::Suite(format!("unknown mode {value:?}"))),
                })
            }
            "seeds" => {
                seeds = value
                    .split_whitespace()
                    .map(|s| {
                        s.parse::<u64>()
                            .map_err(|_| ExperimentError::Suite(format!("bad seed {s:?}")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "sections" => {
                drift_cfg.sections = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad sections".into()))?
            }
            "length" => {
                drift_cfg.section_length_m = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad length".into()))?
            }
            "align" => {
                drift_cfg.align_span_m = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad align".into()))?
            }
            "dropout_start" => {
                dropout_start_s = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad dropout_start".into()))?
            }
            "dropout_duration" => {
                dropout_duration_s = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad dropout_duration".into()))?
            }
            "survivors" => {
                partial_survivors = value
                    .parse()
                    .map_err(|_| ExperimentError::Suite("bad survivors".into()))?
            }
            _ => scenario_lines.push(raw.to_string()),
        }
    }

    let mode = mode.ok_or_else(|| ExperimentError::Suite("missing mode".into()))?;
    if seeds.is_empty() {
        return Err(ExperimentError::Suite("missing seeds".into()));
    }
    let (scenario, budget) =
        crate::sim::parse_scenario_str(&scenario_lines.join("\n")).map_err(ExperimentError::Sim)?;
    let mut suite = match mode {
        ExperimentMode::Drift => ExperimentSuite::drift_default(seeds),
        ExperimentMode::Dropout => {
            let mut s = ExperimentSuite::dropout_default(seeds);
            // Scenario lines may override the default dropout path.
            s.dropout_start_s = dropout_start_s;
            s.dropout_duration_s = dropout_duration_s;
            s.partial_survivors = partial_survivors;
            s
        }
    };
    if !scenario_lines.is_empty() {
        suite.scenario = scenario;
        suite.budget = budget;
    }
    suite.drift_cfg = drift_cfg;
    suite.dropout_start_s = dropout_start_s;
    suite.dropout_duration_s = dropout_duration_s;
    suite.partial_survivors = partial_survivors;
    Ok(suite)
}

/// Receiver trajectory of a TDCP pipeline run.
pub fn pipeline_trajectory(
    pipeline: &crate::pipeline::OdometryPipeline,
) -> Result<Trajectory, ExperimentError> {
    let samples = pipeline.trajectory_samples(FrameTag::Receiver)?;
    Ok(Trajectory::new(
        samples
            .iter()
            .map(|s| TrajectoryNode {
                t: s.t,
                pose: Pose::new(*s.pose().rotation(), s.position),
            })
            .collect(),
    )
    .map_err(EvalError::Trajectory)?)
}

fn track_trajectory(track: &BaselineTrack) -> Result<Trajectory, ExperimentError> {
    Ok(Trajectory::new(
        track
            .samples
            .iter()
            .map(|s| TrajectoryNode {
                t: s.t,
                pose: Pose::new(Matrix3::identity(), s.position),
            })
            .collect(),
    )
    .map_err(EvalError::Trajectory)?)
}

/// Horizontal error at the end of the run after removing the mean offset
/// over the first `align_span_m` metres (translation-only alignment).
///
/// All compared single-receiver methods estimate in the global ENU frame, so
/// no rotation fit is needed; fitting one over a short span would amplify
/// its own noise over a long run and measure the evaluator instead of the
/// algorithm.
pub fn final_error(
    estimate: &Trajectory,
    truth: &[GroundTruthSample],
    align_span_m: f64,
) -> Result<f64, ExperimentError> {
    let mut arc = 0.0;
    let mut offsets = Vec::new();
    let mut last_pos = truth.first().map(|g| g.position);
    let mut final_err = None;
    for g in truth {
        if let Some(lp) = last_pos {
            arc += (g.position - lp).norm();
        }
        last_pos = Some(g.position);
        if let Ok(p) = estimate.interpolate_position(g.t) {
            if arc <= align_span_m {
                offsets.push(g.position - p);
            }
            final_err = Some((g.t, p, g.position));
        }
    }
    if offsets.len() < 3 {
        return Err(ExperimentError::Eval(EvalError::TooFewAlignmentSamples(
            offsets.len(),
        )));
    }
    let mean = offsets.iter().sum::<nalgebra::Vector3<f64>>() / offsets.len() as f64;
    let (_, p, q) = final_err.ok_or(ExperimentError::Eval(EvalError::NoOverlap))?;
    Ok((p + mean - q).fixed_rows::<2>(0).norm())
}

/// Mean-offset-removed horizontal RMS of a baseline track against truth.
pub fn track_rms(track: &BaselineTrack, truth: &[GroundTruthSample]) -> f64 {
    use std::collections::BTreeMap;
    let lookup: BTreeMap<_, _> = truth.iter().map(|g| (g.t, g.position)).collect();
    let mut residuals = Vec::new();
    for s in &track.samples {
        if let Some(p) = lookup.get(&s.t) {
            residuals.push(s.position - p);
        }
    }
    if residuals.is_empty() {
        return f64::NAN;
    }
    let mean = residuals.iter().sum::<nalgebra::Vector3<f64>>() / residuals.len() as f64;
    let sq: f64 = residuals
        .iter()
        .map(|r| (r - mean).fixed_rows::<2>(0).norm_squared())
        .sum();
    (sq / residuals.len() as f64).sqrt()
}

/// One seed of the drift campaign.
#[derive(Debug, Clone)]
pub struct DriftRun {
    pub seed: u64,
    pub tdcp_report: DriftReport,
    pub tdcp_final_m: f64,
    pub fused_final_m: f64,
    pub doppler_final_m: f64,
    pub pseudorange_final_m: f64,
    pub pseudorange_rms_m: f64,
    /// Wall time of the TDCP estimation pass (s).
    pub tdcp_wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct DriftExperiment {
    pub runs: Vec<DriftRun>,
    pub mean_drift_50_pct: f64,
    pub mean_drift_25_pct: f64,
    pub mean_r2: f64,
    pub mean_tdcp_final_m: f64,
    pub mean_fused_final_m: f64,
    pub mean_doppler_final_m: f64,
    pub mean_pseudorange_final_m: f64,
    pub mean_pseudorange_rms_m: f64,
}

fn estimator_config(budget: &ErrorBudget, topology: Topology, fused: bool) -> GraphConfig {
    GraphConfig {
        topology,
        use_rel_pose_factors: fused,
        // Correct what the scenario actually contains; the ionosphere stays
        // uncorrected regardless, matching the estimator's default policy.
        atmosphere: AtmosphereConfig {
            use_tropo: budget.apply_tropo,
            use_iono: false,
        },
        ..GraphConfig::default()
    }
}

/// Runs a single seed through simulate -> TDCP / fused / baselines -> metrics.
pub fn run_drift_seed(
    scenario: &ScenarioConfig,
    budget: &ErrorBudget,
    seed: u64,
    drift_cfg: &DriftConfig,
) -> Result<DriftRun, ExperimentError> {
    let cfg = ScenarioConfig {
        seed,
        ..scenario.clone()
    };
    let out = simulate(&cfg, budget)?;
    let nav = NavData {
        ephemerides: out.ephemerides.clone(),
        klobuchar: Some(out.klobuchar),
    };

    let t0 = std::time::Instant::now();
    let tdcp = run_odometry(
        estimator_config(budget, Topology::Consecutive, false),
        nav.clone(),
        &out.observations,
        None,
    )?;
    let tdcp_wall_s = t0.elapsed().as_secs_f64();
    let tdcp_traj = pipeline_trajectory(&tdcp)?;

    let fused = run_odometry(
        estimator_config(budget, Topology::Consecutive, true),
        nav.clone(),
        &out.observations,
        Some(out.rel_poses.clone()),
    )?;
    let fused_traj = pipeline_trajectory(&fused)?;

    let atmo = AtmosphereConfig {
        use_tropo: budget.apply_tropo,
        use_iono: budget.apply_iono,
    };
    let pr = pseudorange_track(&out.observations, &nav, &atmo)?;
    let dop = doppler_track(&out.observations, &nav, &atmo)?;

    let tdcp_report = drift_metrics(&tdcp_traj, &out.truth, drift_cfg)?;
    Ok(DriftRun {
        seed,
        tdcp_final_m: final_error(&tdcp_traj, &out.truth, drift_cfg.align_span_m)?,
        fused_final_m: final_error(&fused_traj, &out.truth, drift_cfg.align_span_m)?,
        doppler_final_m: final_error(&track_trajectory(&dop)?, &out.truth, drift_cfg.align_span_m)?,
        pseudorange_final_m: final_error(
            &track_trajectory(&pr)?,
            &out.truth,
            drift_cfg.align_span_m,
        )?,
        pseudorange_rms_m: track_rms(&pr, &out.truth),
        tdcp_report,
        tdcp_wall_s,
    })
}

pub fn run_drift_experiment(suite: &ExperimentSuite) -> Result<DriftExperiment, ExperimentError> {
    let mut runs: Vec<DriftRun> = suite
        .seeds
        .par_iter()
        .map(|seed| run_drift_seed(&suite.scenario, &suite.budget, *seed, &suite.drift_cfg))
        .collect::<Result<_, _>>()?;
    runs.sort_by_key(|r| r.seed);
    let n = runs.len() as f64;
    Ok(DriftExperiment {
        mean_drift_50_pct: runs
            .iter()
            .map(|r| r.tdcp_report.mean_drift_50_pct)
            .sum::<f64>()
            / n,
        mean_drift_25_pct: runs
            .iter()
            .map(|r| r.tdcp_report.mean_drift_25_pct)
            .sum::<f64>()
            / n,
        mean_r2: runs.iter().map(|r| r.tdcp_report.mean_r2).sum::<f64>() / n,
        mean_tdcp_final_m: runs.iter().map(|r| r.tdcp_final_m).sum::<f64>() / n,
        mean_fused_final_m: runs.iter().map(|r| r.fused_final_m).sum::<f64>() / n,
        mean_doppler_final_m: runs.iter().map(|r| r.doppler_final_m).sum::<f64>() / n,
        mean_pseudorange_final_m: runs.iter().map(|r| r.pseudorange_final_m).sum::<f64>() / n,
        mean_pseudorange_rms_m: runs.iter().map(|r| r.pseudorange_rms_m).sum::<f64>() / n,
        runs,
    })
}

/// One seed of the dropout campaign: final error per (variant, estimator).
#[derive(Debug, Clone, Copy)]
pub struct DropoutRun {
    pub seed: u64,
    pub none_tdcp: f64,
    pub full_tdcp: f64,
    pub partial_tdcp: f64,
    pub none_fused: f64,
    pub full_fused: f64,
    pub partial_fused: f64,
}

#[derive(Debug, Clone)]
pub struct DropoutExperiment {
    pub runs: Vec<DropoutRun>,
}

pub fn run_dropout_seed(suite: &ExperimentSuite, seed: u64) -> Result<DropoutRun, ExperimentError> {
    let variant = |windows: Vec<DropoutWindow>| -> Result<(f64, f64), ExperimentError> {
        let cfg = ScenarioConfig {
            seed,
            dropouts: windows,
            ..suite.scenario.clone()
        };
        let out = simulate(&cfg, &suite.budget)?;
        let nav = NavData {
            ephemerides: out.ephemerides.clone(),
            klobuchar: Some(out.klobuchar),
        };
        let tdcp = run_odometry(
            estimator_config(&suite.budget, Topology::Consecutive, false),
            nav.clone(),
            &out.observations,
            None,
        )?;
        let fused = run_odometry(
            estimator_config(&suite.budget, Topology::Consecutive, true),
            nav,
            &out.observations,
            Some(out.rel_poses.clone()),
        )?;
        Ok((
            final_error(
                &pipeline_trajectory(&tdcp)?,
                &out.truth,
                suite.drift_cfg.align_span_m,
            )?,
            final_error(
                &pipeline_trajectory(&fused)?,
                &out.truth,
                suite.drift_cfg.align_span_m,
            )?,
        ))
    };

    let (none_tdcp, none_fused) = variant(vec![])?;
    let (full_tdcp, full_fused) = variant(vec![DropoutWindow {
        start_s: suite.dropout_start_s,
        duration_s: suite.dropout_duration_s,
        surviving: 0,
    }])?;
    let (partial_tdcp, partial_fused) = variant(vec![DropoutWindow {
        start_s: suite.dropout_start_s,
        duration_s: suite.dropout_duration_s,
        surviving: suite.partial_survivors,
    }])?;
    Ok(DropoutRun {
        seed,
        none_tdcp,
        full_tdcp,
        partial_tdcp,
        none_fused,
        full_fused,
        partial_fused,
    })
}

pub fn run_dropout_experiment(
    suite: &ExperimentSuite,
) -> Result<DropoutExperiment, ExperimentError> {
    let mut runs: Vec<DropoutRun> = suite
        .seeds
        .par_iter()
        .map(|seed| run_dropout_seed(suite, *seed))
        .collect::<Result<_, _>>()?;
    runs.sort_by_key(|r| r.seed);
    Ok(DropoutExperiment { runs })
}

/// Full campaign with artifacts written under `out_dir`.
pub fn run_experiment(suite: &ExperimentSuite, out_dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    match suite.mode {
        ExperimentMode::Drift => {
            let result = run_drift_experiment(suite)?;
            write_drift_artifacts(suite, &result, out_dir)?;
        }
        ExperimentMode::Dropout => {
            let result = run_dropout_experiment(suite)?;
            write_dropout_artifacts(&result, out_dir)?;
        }
    }
    Ok(())
}

fn write_drift_artifacts(
    suite: &ExperimentSuite,
    result: &DriftExperiment,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    let mut s = String::from(
        "seed,tdcp_drift50_pct,tdcp_r2,tdcp_final_m,fused_final_m,doppler_final_m,pseudorange_final_m,pseudorange_rms_m\n",
    );
    for r in &result.runs {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.seed,
            r.tdcp_report.mean_drift_50_pct,
            r.tdcp_report.mean_r2,
            r.tdcp_final_m,
            r.fused_final_m,
            r.doppler_final_m,
            r.pseudorange_final_m,
            r.pseudorange_rms_m
        ));
    }
    s.push_str(&format!(
        "mean,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        result.mean_drift_50_pct,
        result.mean_r2,
        result.mean_tdcp_final_m,
        result.mean_fused_final_m,
        result.mean_doppler_final_m,
        result.mean_pseudorange_final_m,
        result.mean_pseudorange_rms_m
    ));
    std::fs::write(out_dir.join("summary.csv"), s)?;

    // Mean TDCP error-vs-distance curve across all sections and seeds.
    let grid: Vec<f64> = (0..=suite.drift_cfg.section_length_m as usize)
        .map(|d| d as f64)
        .collect();
    let mut mean_curve = vec![0.0f64; grid.len()];
    let mut count = vec![0usize; grid.len()];
    let mut curves_csv = String::from("seed,section,distance_m,err_2d_m\n");
    for r in &result.runs {
        for sec in &r.tdcp_report.sections {
            for (gi, d) in grid.iter().enumerate() {
                if let Some((_, err, _)) = sec
                    .curve
                    .iter()
                    .min_by(|a, b| (a.0 - d).abs().partial_cmp(&(b.0 - d).abs()).unwrap())
                {
                    mean_curve[gi] += err;
                    count[gi] += 1;
                }
            }
            for (d, e2, _) in &sec.curve {
                curves_csv.push_str(&format!("{},{},{:.3},{:.6}\n", r.seed, sec.section, d, e2));
            }
        }
    }
    std::fs::write(out_dir.join("curves.csv"), curves_csv)?;
    let mean_points: Vec<(f64, f64)> = grid
        .iter()
        .zip(mean_curve.iter().zip(&count))
        .filter(|(_, (_, c))| **c > 0)
        .map(|(d, (sum, c))| (*d, sum / *c as f64))
        .collect();
    LinePlot {
        title: "TDCP drift: mean horizontal error vs distance".into(),
        x_label: "distance along section (m)".into(),
        y_label: "horizontal error (m)".into(),
        series: vec![Series {
            label: "tdcp mean".into(),
            color: palette(0),
            points: mean_points,
        }],
    }
    .write_svg(&out_dir.join("curves.svg"))?;
    Ok(())
}

fn write_dropout_artifacts(
    result: &DropoutExperiment,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    let mut s =
        String::from("seed,none_tdcp,full_tdcp,partial_tdcp,none_fused,full_fused,partial_fused\n");
    for r in &result.runs {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.seed,
            r.none_tdcp,
            r.full_tdcp,
            r.partial_tdcp,
            r.none_fused,
            r.full_fused,
            r.partial_fused
        ));
    }
    std::fs::write(out_dir.join("summary.csv"), s)?;

    let mk = |label: &str, color: usize, f: &dyn Fn(&DropoutRun) -> f64| Series {
        label: label.into(),
        color: palette(color),
        points: result
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| (i as f64, f(r)))
            .collect(),
    };
    LinePlot {
        title: "Final error per seed across dropout variants".into(),
        x_label: "seed index".into(),
        y_label: "final horizontal error (m)".into(),
        series: vec![
            mk("tdcp none", 0, &|r| r.none_tdcp),
            mk("tdcp full dropout", 1, &|r| r.full_tdcp),
            mk("tdcp partial", 2, &|r| r.partial_tdcp),
            mk("fused none", 3, &|r| r.none_fused),
            mk("fused full dropout", 4, &|r| r.full_fused),
            mk("fused partial", 5, &|r| r.partial_fused),
        ],
    }
    .write_svg(&out_dir.join("final_errors.svg"))?;
    Ok(())
}

/// Simulates one scenario and writes its artifact files (RINEX obs + nav,
/// truth CSV, relative-pose CSV). Used by the CLI `simulate` command.
pub fn simulate_to_dir(
    cfg: &ScenarioConfig,
    budget: &ErrorBudget,
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    let out = simulate(cfg, budget)?;
    std::fs::create_dir_all(out_dir)?;
    write_rinex_obs(&out.observations, &out_dir.join("scenario.obs"))?;
    write_rinex_nav(
        &out.ephemerides,
        Some(&out.klobuchar),
        &out_dir.join("scenario.nav"),
    )?;
    crate::ingest::write_ground_truth(&out.truth, &out_dir.join("truth.csv"))?;
    crate::ingest::write_rel_poses(&out.rel_poses, &out_dir.join("relpose.csv"))?;
    Ok(())
}

/// Loads a scenario file and runs [`simulate_to_dir`].
pub fn simulate_file_to_dir(config: &Path, out_dir: &Path) -> Result<(), ExperimentError> {
    let (cfg, budget) = parse_scenario_file(config)?;
    simulate_to_dir(&cfg, &budget, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_seed_produces_consistent_metrics() {
        let suite = ExperimentSuite {
            scenario: ScenarioConfig {
                duration_s: 80.0,
                ..ScenarioConfig::default()
            },
            drift_cfg: DriftConfig {
                sections: 3,
                section_length_m: 50.0,
                align_span_m: 10.0,
            },
            ..ExperimentSuite::drift_default(vec![5])
        };
        let run = run_drift_seed(&suite.scenario, &suite.budget, 5, &suite.drift_cfg).unwrap();
        assert_eq!(run.tdcp_report.sections.len(), 3);
        assert!(run.tdcp_final_m.is_finite());
        assert!(run.pseudorange_rms_m > 0.0);
    }

    #[test]
    fn suite_file_round_trip() {
        let dir = std::env::temp_dir().join("tdcp_suite_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("suite.txt");
        std::fs::write(
            &p,
            "mode = dropout\nseeds = 3 1 2\nduration = 70\ndropout_start = 22\nsurvivors = 2\n",
        )
        .unwrap();
        let suite = parse_suite_file(&p).unwrap();
        assert_eq!(suite.mode, ExperimentMode::Dropout);
        assert_eq!(suite.seeds, vec![3, 1, 2]);
        assert_eq!(suite.dropout_start_s, 22.0);
        assert_eq!(suite.scenario.duration_s, 70.0);
    }
}
