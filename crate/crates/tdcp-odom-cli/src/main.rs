//! Command-line driver for the TDCP odometry engine.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tdcp_odom::atmosphere::AtmosphereConfig;
use tdcp_odom::baselines::{doppler_track, pseudorange_track};
use tdcp_odom::eval::{drift_metrics, write_drift_report, write_error_curves, DriftConfig};
use tdcp_odom::experiment::{parse_suite_file, run_experiment, simulate_file_to_dir};
use tdcp_odom::frames::FrameTag;
use tdcp_odom::ingest::{
    parse_ground_truth, parse_rel_poses, parse_rinex_nav, parse_rinex_obs, read_trajectory_csv,
    write_trajectory_csv, TrajectorySample,
};
use tdcp_odom::pipeline::{run_odometry, GraphConfig, Topology};
use tdcp_odom::se3::{Pose, Twist};
use tdcp_odom::trajectory::{Trajectory, TrajectoryNode};

#[derive(Parser)]
#[command(
    name = "tdcp-odom",
    about = "Single-receiver GPS odometry from time-differenced carrier phase",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Consecutive,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Pseudorange,
    Doppler,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: RINEX obs/nav, ground truth CSV,
    /// relative-pose CSV.
    Simulate {
        /// Scenario description file (key = value lines).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the TDCP sliding-window estimator over an observation file.
    Estimate {
        /// RINEX observation file.
        #[arg(long)]
        obs: PathBuf,
        /// RINEX navigation file.
        #[arg(long)]
        nav: PathBuf,
        /// Relative-pose CSV to fuse as loosely-coupled odometry factors.
        #[arg(long)]
        rel_pose: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "consecutive")]
        topology: TopologyArg,
        /// Sliding window length in seconds.
        #[arg(long, default_value_t = 10.0)]
        window: f64,
        /// Leave the ionosphere uncorrected (the default policy).
        #[arg(long, conflicts_with = "iono")]
        no_iono: bool,
        /// Apply the Klobuchar correction from the navigation header.
        #[arg(long)]
        iono: bool,
        /// Disable the troposphere correction.
        #[arg(long)]
        no_tropo: bool,
        /// Output trajectory CSV (receiver positions).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a pseudorange or integrated-Doppler baseline.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        nav: PathBuf,
        /// Leave the ionosphere uncorrected.
        #[arg(long)]
        no_iono: bool,
        /// Disable the troposphere correction.
        #[arg(long)]
        no_tropo: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate drift of an estimate against ground truth.
    Eval {
        /// Estimate trajectory CSV (as written by `estimate`/`baseline`).
        #[arg(long)]
        estimate: PathBuf,
        /// Ground-truth CSV.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 15)]
        sections: usize,
        /// Section length in metres.
        #[arg(long, default_value_t = 50.0)]
        length: f64,
        /// Alignment span preceding each section, metres.
        #[arg(long, default_value_t = 10.0)]
        align: f64,
        /// Report CSV path; error curves land next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a matched-seed experiment suite.
    Experiment {
        /// Suite description file.
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { config, out_dir } => {
            simulate_file_to_dir(&config, &out_dir)
                .with_context(|| format!("simulating {}", config.display()))?;
            println!("wrote scenario artifacts to {}", out_dir.display());
        }
        Command::Estimate {
            obs,
            nav,
            rel_pose,
            topology,
            window,
            no_iono,
            iono,
            no_tropo,
            out,
        } => {
            let parsed = parse_rinex_obs(&obs)?;
            if parsed.skipped > 0 {
                eprintln!("warning: skipped {} malformed records", parsed.skipped);
            }
            let nav_data = parse_rinex_nav(&nav)?;
            let rel = rel_pose.as_deref().map(parse_rel_poses).transpose()?;
            let cfg = GraphConfig {
                topology: match topology {
                    TopologyArg::Consecutive => Topology::Consecutive,
                    TopologyArg::Dense => Topology::Dense,
                },
                window_length_s: window,
                use_rel_pose_factors: rel.is_some(),
                atmosphere: AtmosphereConfig {
                    use_tropo: !no_tropo,
                    // Uncorrected by default; --iono opts in, --no-iono makes
                    // the default explicit.
                    use_iono: iono && !no_iono,
                },
                ..GraphConfig::default()
            };
            let pipeline = run_odometry(cfg, nav_data, &parsed.epochs, rel)?;
            let samples = pipeline.trajectory_samples(FrameTag::Receiver)?;
            write_trajectory_csv(&samples, &out)?;
            println!("estimated {} states -> {}", samples.len(), out.display());
        }
        Command::Baseline {
            method,
            obs,
            nav,
            no_iono,
            no_tropo,
            out,
        } => {
            let parsed = parse_rinex_obs(&obs)?;
            let nav_data = parse_rinex_nav(&nav)?;
            let atmo = AtmosphereConfig {
                use_tropo: !no_tropo,
                use_iono: !no_iono,
            };
            let track = match method {
                BaselineMethod::Pseudorange => pseudorange_track(&parsed.epochs, &nav_data, &atmo)?,
                BaselineMethod::Doppler => doppler_track(&parsed.epochs, &nav_data, &atmo)?,
            };
            let samples: Vec<TrajectorySample> = track
                .samples
                .iter()
                .map(|s| TrajectorySample {
                    t: s.t,
                    position: s.position,
                    pose_tangent: nalgebra::Vector6::zeros(),
                    twist: Twist::zero(),
                })
                .collect();
            write_trajectory_csv(&samples, &out)?;
            println!("{} baseline samples -> {}", samples.len(), out.display());
        }
        Command::Eval {
            estimate,
            truth,
            sections,
            length,
            align,
            out,
        } => {
            let est_rows = read_trajectory_csv(&estimate)?;
            let truth_rows = parse_ground_truth(&truth)?;
            let traj = Trajectory::new(
                est_rows
                    .iter()
                    .map(|r| TrajectoryNode {
                        t: r.t,
                        pose: Pose::new(*r.pose().rotation(), r.position),
                    })
                    .collect(),
            )?;
            let cfg = DriftConfig {
                sections,
                section_length_m: length,
                align_span_m: align,
            };
            let report = drift_metrics(&traj, &truth_rows, &cfg)?;
            write_drift_report(&report, &out)?;
            let curves = out.with_extension("curves.csv");
            write_error_curves("estimate", &report, &curves)?;
            println!(
                "mean drift: {:.3}% at 25 m, {:.3}% at 50 m (r2 {:.3}) -> {}",
                report.mean_drift_25_pct,
                report.mean_drift_50_pct,
                report.mean_r2,
                out.display()
            );
        }
        Command::Experiment { suite, out_dir } => {
            let suite = parse_suite_file(&suite)?;
            run_experiment(&suite, &out_dir)?;
            println!("experiment artifacts in {}", out_dir.display());
        }
    }
    Ok(())
}
