//! Synthetic GNSS scenario generator: observation streams, ground truth, and
//! stand-in relative-pose odometry, with a configurable error budget and
//! dropout injection.
//!
//! Every random quantity flows from the scenario seed through dedicated
//! sub-streams (one per satellite, one for the receiver clock, one for
//! run-level draws). Satellite streams advance every epoch whether or not
//! the satellite is used, so dropout variants of the same seed share
//! identical noise realizations on the surviving satellites.

mod constellation;
mod path;
mod scenario_file;
mod writers;

pub use constellation::{default_targets, synthetic_constellation, SatTarget};
pub use path::{PathPoint, PathSpec, SampledPath};
pub use scenario_file::{parse_scenario_file, parse_scenario_str};
pub use writers::{write_rinex_nav, write_rinex_obs};

use nalgebra::{Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::atmosphere::{klobuchar_delay, tropo_delay, KlobucharParams, TropoState};
use crate::constants::{L1_WAVELENGTH_M, SPEED_OF_LIGHT};
use crate::ephemeris::{sat_state, signal_emission_state, BroadcastEphemeris};
use crate::factors::StateNode;
use crate::frames::{azimuth_elevation, EnuFrame, Extrinsics, Geodetic};
use crate::ingest::{
    GroundTruthSample, ObservationEpoch, RelPoseMeasurement, SatId, SatObservation,
};
use crate::se3::{se3_exp, Pose, Twist};
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("only {visible} satellites visible at {t} outside any dropout window")]
    InfeasibleVisibility { t: GpsTime, visible: usize },
    #[error("scenario produced no epochs")]
    Empty,
    #[error(transparent)]
    Ephemeris(#[from] crate::ephemeris::EphemerisError),
    #[error("config: {0}")]
    Config(String),
}

/// First-order Gauss-Markov multipath model.
#[derive(Debug, Clone, Copy)]
pub struct MultipathModel {
    pub code_sigma_m: f64,
    pub phase_sigma_m: f64,
    pub tau_s: f64,
}

impl Default for MultipathModel {
    fn default() -> Self {
        Self {
            code_sigma_m: 0.8,
            phase_sigma_m: 0.012,
            tau_s: 10.0,
        }
    }
}

/// Measurement error budget. Defaults are calibrated so that systematic
/// terms dominate the white noise and epoch-wise pseudorange fixes land in
/// the 1-2 m band.
#[derive(Debug, Clone, Copy)]
pub struct ErrorBudget {
    pub phase_noise_sigma_m: f64,
    pub pseudorange_noise_sigma_m: f64,
    pub doppler_noise_sigma_mps: f64,
    /// Receiver clock bias random walk (s / sqrt(s)).
    pub clock_walk_s_per_sqrt_s: f64,
    pub clock_initial_bias_s: f64,
    /// Cycle slips per satellite per minute.
    pub cycle_slip_rate_per_min: f64,
    pub multipath: Option<MultipathModel>,
    pub apply_iono: bool,
    pub apply_tropo: bool,
    pub apply_eph_error: bool,
    /// Per-axis sigma of the constant satellite position error (m).
    pub eph_error_sigma_m: f64,
}

impl Default for ErrorBudget {
    fn default() -> Self {
        Self {
            phase_noise_sigma_m: 0.002,
            pseudorange_noise_sigma_m: 0.6,
            doppler_noise_sigma_mps: 0.05,
            clock_walk_s_per_sqrt_s: 1.0e-9,
            clock_initial_bias_s: 2.0e-6,
            cycle_slip_rate_per_min: 0.05,
            multipath: Some(MultipathModel::default()),
            apply_iono: true,
            apply_tropo: true,
            apply_eph_error: true,
            eph_error_sigma_m: 2.2,
        }
    }
}

impl ErrorBudget {
    /// Everything off: measurements are exact geometry plus satellite clock.
    pub fn zero() -> Self {
        Self {
            phase_noise_sigma_m: 0.0,
            pseudorange_noise_sigma_m: 0.0,
            doppler_noise_sigma_mps: 0.0,
            clock_walk_s_per_sqrt_s: 0.0,
            clock_initial_bias_s: 0.0,
            cycle_slip_rate_per_min: 0.0,
            multipath: None,
            apply_iono: false,
            apply_tropo: false,
            apply_eph_error: false,
            eph_error_sigma_m: 0.0,
        }
    }
}

/// Temporary loss of satellites: only the `surviving` highest-elevation
/// satellites at the window start stay visible (and keep phase lock).
#[derive(Debug, Clone, Copy)]
pub struct DropoutWindow {
    pub start_s: f64,
    pub duration_s: f64,
    pub surviving: usize,
}

#[derive(Debug, Clone)]
pub enum Constellation {
    /// Nine satellites on GPS-like shells with staggered geometry.
    Synthetic,
    /// Use the given broadcast ephemerides (e.g. from a navigation file).
    Ephemerides(Vec<BroadcastEphemeris>),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub path: PathSpec,
    pub speed_mps: f64,
    pub epoch_rate_hz: f64,
    pub duration_s: f64,
    pub origin: Geodetic,
    pub start_time: GpsTime,
    pub mask_angle_rad: f64,
    pub constellation: Constellation,
    pub dropouts: Vec<DropoutWindow>,
    pub seed: u64,
    pub truth_rate_hz: f64,
    pub extrinsics: Extrinsics,
    pub klobuchar: KlobucharParams,
    /// Scale-drift class of the stand-in odometry (fraction of distance).
    pub rel_pose_drift_frac: f64,
    pub rel_pose_trans_noise_m: f64,
    pub rel_pose_rot_noise_rad: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            path: PathSpec::Ellipse {
                semi_east: 55.0,
                semi_north: 35.0,
            },
            speed_mps: 1.0,
            epoch_rate_hz: 1.0,
            duration_s: 250.0,
            origin: Geodetic {
                lat: 45.0f64.to_radians(),
                lon: -79.0f64.to_radians(),
                height: 150.0,
            },
            start_time: GpsTime::new(2360, 414_000.0),
            mask_angle_rad: 10.0f64.to_radians(),
            constellation: Constellation::Synthetic,
            dropouts: Vec::new(),
            seed: 1,
            truth_rate_hz: 4.0,
            extrinsics: Extrinsics::default(),
            klobuchar: KlobucharParams::typical(),
            rel_pose_drift_frac: 0.02,
            rel_pose_trans_noise_m: 0.02,
            rel_pose_rot_noise_rad: 0.002,
        }
    }
}

/// Everything a scenario produces.
pub struct SimOutput {
    pub observations: Vec<ObservationEpoch>,
    pub truth: Vec<GroundTruthSample>,
    pub truth_states: Vec<StateNode>,
    pub rel_poses: Vec<RelPoseMeasurement>,
    pub ephemerides: Vec<BroadcastEphemeris>,
    pub klobuchar: KlobucharParams,
    pub frame: EnuFrame,
}

impl SimOutput {
    /// Visible-satellite count per epoch.
    pub fn satellite_counts(&self) -> Vec<usize> {
        self.observations.iter().map(|e| e.records.len()).collect()
    }
}

/// Per-satellite deterministic noise stream. Advances every epoch.
struct SatStream {
    rng: ChaCha20Rng,
    mp_code: f64,
    mp_phase: f64,
    ambiguity: f64,
    locked: bool,
}

struct EpochDraws {
    slip: f64,
    mp_code_in: f64,
    mp_phase_in: f64,
    phase_eps: f64,
    code_eps: f64,
    doppler_eps: f64,
    ambiguity_draw: i64,
}

impl SatStream {
    fn new(seed: u64, prn: u8) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(prn as u64 * 0x1000_0000_01B3),
        );
        let mp_code = rng.random::<f64>() * 2.0 - 1.0;
        let mp_phase = rng.random::<f64>() * 2.0 - 1.0;
        Self {
            rng,
            mp_code,
            mp_phase,
            ambiguity: 0.0,
            locked: false,
        }
    }

    /// One epoch's worth of draws, consumed regardless of visibility.
    fn draw(&mut self) -> EpochDraws {
        let normal = Normal::new(0.0, 1.0).unwrap();
        EpochDraws {
            slip: self.rng.random::<f64>(),
            mp_code_in: normal.sample(&mut self.rng),
            mp_phase_in: normal.sample(&mut self.rng),
            phase_eps: normal.sample(&mut self.rng),
            code_eps: normal.sample(&mut self.rng),
            doppler_eps: normal.sample(&mut self.rng),
            ambiguity_draw: self.rng.random_range(-200_000..200_000),
        }
    }
}

pub fn simulate(cfg: &ScenarioConfig, budget: &ErrorBudget) -> Result<SimOutput, SimError> {
    if cfg.duration_s <= 0.0 || cfg.epoch_rate_hz <= 0.0 {
        return Err(SimError::Config(
            "duration and rate must be positive".into(),
        ));
    }
    let frame = EnuFrame::new(cfg.origin);
    let ephemerides = match &cfg.constellation {
        Constellation::Synthetic => {
            synthetic_constellation(&cfg.origin, cfg.start_time, &default_targets())
        }
        Constellation::Ephemerides(e) => e.clone(),
    };
    if ephemerides.is_empty() {
        return Err(SimError::Config("empty constellation".into()));
    }
    let path = SampledPath::new(&cfg.path);
    let dt = 1.0 / cfg.epoch_rate_hz;
    let n_epochs = (cfg.duration_s * cfg.epoch_rate_hz).round() as usize + 1;

    let tropo_state = TropoState {
        latitude_rad: cfg.origin.lat,
        day_of_year: cfg.start_time.day_of_year(),
        height_m: cfg.origin.height,
    };

    // Run-level deterministic draws.
    let mut run_rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5851_F42D_4C95_7F2D);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut sats: Vec<&BroadcastEphemeris> = ephemerides.iter().collect();
    sats.sort_by_key(|e| e.sat);
    let eph_errors: Vec<Vector3<f64>> = sats
        .iter()
        .map(|_| {
            let v = Vector3::new(
                normal.sample(&mut run_rng),
                normal.sample(&mut run_rng),
                normal.sample(&mut run_rng),
            );
            if budget.apply_eph_error {
                v * budget.eph_error_sigma_m
            } else {
                Vector3::zeros()
            }
        })
        .collect();

    // Stand-in odometry biases. Stereo-odometry drift is mostly orientation
    // drift, which integrates quadratically with distance, plus a scale
    // error; the split below makes a 50 m section drift by about
    // `rel_pose_drift_frac` of its length on average.
    let rel_scale = 1.0 + 0.4 * cfg.rel_pose_drift_frac * normal.sample(&mut run_rng);
    let rel_yaw_bias = 4.25e-2 * cfg.rel_pose_drift_frac * normal.sample(&mut run_rng);

    let mut clock_rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_97F4_A7C1);
    let mut clock_bias_s = budget.clock_initial_bias_s;

    let mut streams: Vec<SatStream> = sats
        .iter()
        .map(|e| SatStream::new(cfg.seed, e.sat.0))
        .collect();
    // Multipath states start at the stationary distribution.
    if let Some(mp) = &budget.multipath {
        for s in &mut streams {
            s.mp_code *= mp.code_sigma_m;
            s.mp_phase *= mp.phase_sigma_m;
        }
    }

    // Dropout survivor sets are chosen at each window start.
    let mut dropout_survivors: Vec<Option<Vec<SatId>>> = vec![None; cfg.dropouts.len()];

    let mut observations = Vec::with_capacity(n_epochs);
    let mut truth_states = Vec::with_capacity(n_epochs);
    let slip_p = budget.cycle_slip_rate_per_min / 60.0 * dt;

    for k in 0..n_epochs {
        let t_off = k as f64 * dt;
        let t = cfg.start_time.add_seconds(t_off);
        let sample = path.sample(cfg.speed_mps * t_off);
        let pose = Pose::from_yaw_translation(sample.yaw, sample.position);
        let twist = Twist::new(
            Vector3::new(cfg.speed_mps, 0.0, 0.0),
            Vector3::new(0.0, 0.0, sample.curvature * cfg.speed_mps),
        );
        truth_states.push(StateNode { t, pose, twist });

        let rx_enu = pose.act(&cfg.extrinsics.lever_arm);
        let rx_ecef = frame.enu_to_ecef(&rx_enu);
        let rx_vel_enu =
            pose.rotation() * (twist.linear + twist.angular.cross(&cfg.extrinsics.lever_arm));

        // Receiver clock: bias random walk, realized drift applied to Doppler.
        let eta = normal.sample(&mut clock_rng) * budget.clock_walk_s_per_sqrt_s * dt.sqrt();
        let clock_drift = eta / dt;

        // Geometry pass: who is above the mask.
        let mut geo: Vec<(usize, f64, f64)> = Vec::new(); // (sat index, az, el)
        for (i, eph) in sats.iter().enumerate() {
            let (sat_pos, _) = signal_emission_state(eph, t, &rx_ecef)?;
            let sat_enu = frame.ecef_to_enu(&sat_pos);
            let (az, el) = azimuth_elevation(&rx_enu, &sat_enu);
            if el >= cfg.mask_angle_rad {
                geo.push((i, az, el));
            }
        }

        // Dropout filtering.
        let mut in_dropout = false;
        let mut allowed: Option<Vec<SatId>> = None;
        for (w, window) in cfg.dropouts.iter().enumerate() {
            if t_off >= window.start_s && t_off < window.start_s + window.duration_s {
                in_dropout = true;
                if dropout_survivors[w].is_none() {
                    let mut by_el = geo.clone();
                    by_el.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
                    dropout_survivors[w] = Some(
                        by_el
                            .iter()
                            .take(window.surviving)
                            .map(|(i, _, _)| sats[*i].sat)
                            .collect(),
                    );
                }
                allowed = dropout_survivors[w].clone();
            }
        }

        if !in_dropout && geo.len() < 4 {
            return Err(SimError::InfeasibleVisibility {
                t,
                visible: geo.len(),
            });
        }

        let mut records: Vec<SatObservation> = Vec::new();
        for (i, eph) in sats.iter().enumerate() {
            let draws = streams[i].draw();
            let visible_geom = geo.iter().find(|(gi, _, _)| *gi == i);
            let visible = match (&allowed, visible_geom) {
                (_, None) => false,
                (Some(list), Some(_)) => list.contains(&eph.sat),
                (None, Some(_)) => true,
            };

            // Multipath states evolve continuously while the channel exists.
            if let Some(mp) = &budget.multipath {
                let phi = (-dt / mp.tau_s).exp();
                let q = (1.0 - phi * phi).sqrt();
                streams[i].mp_code =
                    phi * streams[i].mp_code + q * mp.code_sigma_m * draws.mp_code_in;
                streams[i].mp_phase =
                    phi * streams[i].mp_phase + q * mp.phase_sigma_m * draws.mp_phase_in;
            }

            if !visible {
                streams[i].locked = false;
                continue;
            }
            let (_, az, el) = *visible_geom.unwrap();

            // Phase datum: new ambiguity on (re)acquisition or cycle slip.
            let mut lock_lost = false;
            if !streams[i].locked {
                streams[i].ambiguity = draws.ambiguity_draw as f64;
                streams[i].locked = true;
                lock_lost = k > 0;
            } else if slip_p > 0.0 && draws.slip < slip_p {
                streams[i].ambiguity = draws.ambiguity_draw as f64;
                lock_lost = true;
            }

            let (sat_pos, sat_clock) = signal_emission_state(eph, t, &rx_ecef)?;
            let sat_enu = frame.ecef_to_enu(&sat_pos);
            let los = sat_enu - rx_enu;
            let rho = los.norm();
            let u = los / rho;

            let tropo = if budget.apply_tropo {
                tropo_delay(&tropo_state, el).unwrap_or(0.0)
            } else {
                0.0
            };
            let iono = if budget.apply_iono {
                klobuchar_delay(&cfg.klobuchar, &cfg.origin, az, el, t)
            } else {
                0.0
            };
            let eph_err = u.dot(&eph_errors[i]);

            let (mp_code, mp_phase) = if budget.multipath.is_some() {
                (streams[i].mp_code, streams[i].mp_phase)
            } else {
                (0.0, 0.0)
            };

            let clock_term = SPEED_OF_LIGHT * (clock_bias_s - sat_clock);
            let phase_m = rho + clock_term + eph_err + tropo - iono
                + mp_phase
                + budget.phase_noise_sigma_m * draws.phase_eps;
            let code_m = rho
                + clock_term
                + eph_err
                + tropo
                + iono
                + mp_code
                + budget.pseudorange_noise_sigma_m * draws.code_eps;

            // Range rate with satellite velocity at reception time.
            let sat_vel_enu = frame.rotation_ecef_to_enu() * sat_state(eph, t)?.velocity;
            let sat_clock_drift = eph.af1 + 2.0 * eph.af2 * t.diff_seconds(&eph.toc);
            let range_rate = u.dot(&(sat_vel_enu - rx_vel_enu));
            let doppler_hz = -(range_rate
                + SPEED_OF_LIGHT * (clock_drift - sat_clock_drift)
                + budget.doppler_noise_sigma_mps * draws.doppler_eps)
                / L1_WAVELENGTH_M;

            records.push(SatObservation {
                sat: eph.sat,
                phase_cycles: phase_m / L1_WAVELENGTH_M + streams[i].ambiguity,
                pseudorange_m: code_m,
                doppler_hz,
                lock_lost,
                snr_dbhz: 38.0 + 12.0 * el.sin(),
            });
        }

        clock_bias_s += eta;
        records.sort_by_key(|r| r.sat);
        observations.push(ObservationEpoch { t, records });
    }

    if observations.is_empty() {
        return Err(SimError::Empty);
    }

    // Ground truth at its own rate: receiver positions.
    let n_truth = (cfg.duration_s * cfg.truth_rate_hz).round() as usize + 1;
    let truth = (0..n_truth)
        .map(|j| {
            let t_off = j as f64 / cfg.truth_rate_hz;
            let sample = path.sample(cfg.speed_mps * t_off);
            let pose = Pose::from_yaw_translation(sample.yaw, sample.position);
            GroundTruthSample {
                t: cfg.start_time.add_seconds(t_off),
                position: pose.act(&cfg.extrinsics.lever_arm),
                quality: 0,
            }
        })
        .collect();

    // Stand-in odometry between consecutive vertices: per-run scale and
    // yaw-rate bias plus white noise, covariance inflated accordingly.
    let mut rel_rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x1234_5678_9ABC_DEF0);
    let mut rel_poses = Vec::new();
    for pair in truth_states.windows(2) {
        let t_ab = pair[0].pose.between(&pair[1].pose);
        let mut noisy_translation = t_ab.translation() * rel_scale;
        for c in 0..3 {
            noisy_translation[c] += cfg.rel_pose_trans_noise_m * normal.sample(&mut rel_rng);
        }
        let mut delta = Vector6::zeros();
        for c in 3..6 {
            delta[c] = cfg.rel_pose_rot_noise_rad * normal.sample(&mut rel_rng);
        }
        delta[5] += rel_yaw_bias;
        let measured = Pose::new(*t_ab.rotation(), noisy_translation).compose(&se3_exp(&delta));
        let step = t_ab.translation().norm();
        // Per-axis: the scale bias acts along-track (body x), the yaw-rate
        // bias about body z; the other axes carry white noise only.
        let white_t = cfg.rel_pose_trans_noise_m.powi(2).max(1.0e-10);
        let white_r = cfg.rel_pose_rot_noise_rad.powi(2).max(1.0e-12);
        let mut cov = Matrix6::zeros();
        cov[(0, 0)] = white_t + (0.4 * cfg.rel_pose_drift_frac * step).powi(2);
        cov[(1, 1)] = white_t;
        cov[(2, 2)] = white_t;
        cov[(3, 3)] = white_r;
        cov[(4, 4)] = white_r;
        cov[(5, 5)] = white_r + (4.25e-2 * cfg.rel_pose_drift_frac).powi(2);
        rel_poses.push(RelPoseMeasurement {
            t_a: pair[0].t,
            t_b: pair[1].t,
            t_ab: measured,
            covariance: cov,
        });
    }

    Ok(SimOutput {
        observations,
        truth,
        truth_states,
        rel_poses,
        ephemerides,
        klobuchar: cfg.klobuchar,
        frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_cfg() -> ScenarioConfig {
        ScenarioConfig {
            // A static receiver: zero speed on a dummy polyline.
            path: PathSpec::Waypoints(vec![Vector3::new(1.0, 0.0, 0.0)]),
            speed_mps: 0.0,
            duration_s: 20.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_budget_static_phase_double_differences_vanish() {
        let out = simulate(&static_cfg(), &ErrorBudget::zero()).unwrap();
        let a = &out.observations[3];
        let b = &out.observations[11];
        // Phase minus geometric range leaves N - c*deltaS/lambda; double
        // differencing across satellites and epochs must cancel everything
        // except... nothing. Check directly on the phase observable against
        // recomputed ranges.
        let frame = &out.frame;
        let truth_at = |t: &GpsTime| {
            out.truth_states
                .iter()
                .find(|s| s.t == *t)
                .unwrap()
                .pose
                .act(&ScenarioConfig::default().extrinsics.lever_arm)
        };
        let rx_a = truth_at(&a.t);
        let rx_b = truth_at(&b.t);
        let sats: Vec<SatId> = a.records.iter().map(|r| r.sat).collect();
        let range = |t: GpsTime, rx: &Vector3<f64>, sat: SatId| {
            let eph = out.ephemerides.iter().find(|e| e.sat == sat).unwrap();
            let rx_ecef = frame.enu_to_ecef(rx);
            let (pos, clk) = signal_emission_state(eph, t, &rx_ecef).unwrap();
            (frame.ecef_to_enu(&pos) - rx).norm() - SPEED_OF_LIGHT * clk
        };
        for pair in sats.windows(2) {
            let (s1, s2) = (pair[0], pair[1]);
            let phase = |e: &ObservationEpoch, s: SatId| {
                e.record(s).unwrap().phase_cycles * L1_WAVELENGTH_M
            };
            let dd_phase = (phase(b, s2) - phase(a, s2)) - (phase(b, s1) - phase(a, s1));
            let dd_range = (range(b.t, &rx_b, s2) - range(a.t, &rx_a, s2))
                - (range(b.t, &rx_b, s1) - range(a.t, &rx_a, s1));
            // The ranges behind both sides are ~2.2e7 m doubles, so the
            // comparison floor is a few ulp of that, ~1e-8 m.
            assert!(
                (dd_phase - dd_range).abs() < 2.0e-8,
                "dd mismatch {} for {s1}/{s2}",
                dd_phase - dd_range
            );
        }
    }

    #[test]
    fn determinism_same_seed_same_output() {
        let cfg = ScenarioConfig {
            duration_s: 30.0,
            ..ScenarioConfig::default()
        };
        let b = ErrorBudget::default();
        let o1 = simulate(&cfg, &b).unwrap();
        let o2 = simulate(&cfg, &b).unwrap();
        for (e1, e2) in o1.observations.iter().zip(&o2.observations) {
            assert_eq!(e1.records.len(), e2.records.len());
            for (r1, r2) in e1.records.iter().zip(&e2.records) {
                assert_eq!(r1.phase_cycles, r2.phase_cycles);
                assert_eq!(r1.pseudorange_m, r2.pseudorange_m);
                assert_eq!(r1.doppler_hz, r2.doppler_hz);
            }
        }
        let c2 = ScenarioConfig { seed: 2, ..cfg };
        let o3 = simulate(&c2, &b).unwrap();
        assert_ne!(
            o1.observations[1].records[0].phase_cycles,
            o3.observations[1].records[0].phase_cycles
        );
    }

    #[test]
    fn satellite_count_statistics_match_band() {
        let cfg = ScenarioConfig::default();
        let out = simulate(&cfg, &ErrorBudget::default()).unwrap();
        let mut counts = out.satellite_counts();
        let min = *counts.iter().min().unwrap();
        let max = *counts.iter().max().unwrap();
        counts.sort_unstable();
        let median = counts[counts.len() / 2];
        assert!(min >= 4, "min {min}");
        assert!(max <= 9, "max {max}");
        assert!((6..=8).contains(&median), "median {median}");
        // The visible set must actually change during the run.
        assert!(min < max, "static visibility: {min}..{max}");
    }

    #[test]
    fn dropout_restricts_to_highest_elevation_survivors() {
        let cfg = ScenarioConfig {
            dropouts: vec![DropoutWindow {
                start_s: 20.0,
                duration_s: 15.0,
                surviving: 2,
            }],
            duration_s: 60.0,
            ..ScenarioConfig::default()
        };
        let out = simulate(&cfg, &ErrorBudget::default()).unwrap();
        let counts = out.satellite_counts();
        for (k, c) in counts.iter().enumerate() {
            let t = k as f64;
            if (20.0..35.0).contains(&t) {
                assert_eq!(*c, 2, "epoch {k}");
            } else {
                assert!(*c >= 4);
            }
        }
        // Survivors keep lock across the window (no LLI when it ends).
        let survivors: Vec<SatId> = out.observations[25].records.iter().map(|r| r.sat).collect();
        for s in &survivors {
            for k in 21..40 {
                if let Some(r) = out.observations[k].record(*s) {
                    assert!(!r.lock_lost, "survivor {s} slipped at {k}");
                }
            }
        }
        // Non-survivors reacquire with a loss-of-lock flag.
        let after: &ObservationEpoch = &out.observations[35];
        let flagged = after
            .records
            .iter()
            .filter(|r| r.lock_lost && !survivors.contains(&r.sat))
            .count();
        assert!(flagged >= 4, "reacquired without LLI");
    }

    #[test]
    fn rel_pose_whitening_is_consistent() {
        // Whitened residuals of the stand-in odometry against truth carry
        // unit variance: chi-square mean per measurement ~ 6 across runs.
        let mut chi2_sum = 0.0;
        let mut n = 0usize;
        for seed in 0..40u64 {
            let cfg = ScenarioConfig {
                seed,
                duration_s: 60.0,
                ..ScenarioConfig::default()
            };
            let out = simulate(&cfg, &ErrorBudget::zero()).unwrap();
            for (m, pair) in out.rel_poses.iter().zip(out.truth_states.windows(2)) {
                let truth_rel = pair[0].pose.between(&pair[1].pose);
                let e = crate::se3::se3_log(&m.t_ab.inverse().compose(&truth_rel)).unwrap();
                let l = nalgebra::Cholesky::new(m.covariance).unwrap().l();
                let white = l.solve_lower_triangular(&e).unwrap();
                chi2_sum += white.norm_squared();
                n += 1;
            }
        }
        let mean = chi2_sum / n as f64;
        assert!(
            (mean / 6.0 - 1.0).abs() < 0.05,
            "whitened chi2 mean {mean:.3} vs 6"
        );
    }

    #[test]
    fn stand_in_odometry_drifts_at_its_class() {
        // Integrate the rel-pose chain alone and measure 50 m drift.
        let mut drifts = Vec::new();
        for seed in 0..30u64 {
            let cfg = ScenarioConfig {
                seed,
                duration_s: 50.0,
                ..ScenarioConfig::default()
            };
            let out = simulate(&cfg, &ErrorBudget::zero()).unwrap();
            let mut pose = out.truth_states[0].pose;
            for m in &out.rel_poses {
                pose = pose.compose(&m.t_ab);
            }
            let err = (pose.translation() - out.truth_states.last().unwrap().pose.translation())
                .fixed_rows::<2>(0)
                .norm();
            drifts.push(100.0 * err / 50.0);
        }
        let mean = drifts.iter().sum::<f64>() / drifts.len() as f64;
        assert!(
            (1.0..3.5).contains(&mean),
            "stand-in drift class {mean:.2}% not ~2%"
        );
    }

    #[test]
    fn full_dropout_produces_empty_epochs() {
        let cfg = ScenarioConfig {
            dropouts: vec![DropoutWindow {
                start_s: 20.0,
                duration_s: 15.0,
                surviving: 0,
            }],
            duration_s: 60.0,
            ..ScenarioConfig::default()
        };
        let out = simulate(&cfg, &ErrorBudget::default()).unwrap();
        assert!(out.observations[25].records.is_empty());
        assert!(out.observations[40].records.len() >= 4);
    }
}
