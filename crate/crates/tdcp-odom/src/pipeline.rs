//! The sliding-window TDCP odometry pipeline.
//!
//! Runs as a forward-pass filter: each incoming observation epoch becomes a
//! state node, TDCP pair factors are formed against lock-maintained common
//! satellites, the motion prior and nonholonomic factors tie the chain
//! together, and the window is re-solved by dogleg Gauss-Newton. The
//! estimate reported for an epoch is the one available when that epoch
//! arrived; later refinements inside the window never rewrite history.

use std::collections::BTreeMap;

use nalgebra::{Vector3, Vector6};
use thiserror::Error;

use crate::atmosphere::{
    differenced_atmo_correction, klobuchar_delay, tropo_delay, AtmosphereConfig, SlantDelay,
    TropoState,
};
use crate::baselines::{doppler_velocity, pseudorange_fix, BaselineError};
use crate::constants::{L1_WAVELENGTH_M, SPEED_OF_LIGHT};
use crate::ephemeris::{select_ephemeris, signal_emission_state};
use crate::factors::{tdcp_residual, Factor, FactorError, StateNode, TdcpPairMeasurement};
use crate::frames::{azimuth_elevation, ecef_to_geodetic, EnuFrame, Extrinsics, FrameTag};
use crate::ingest::{
    IngestError, NavData, ObservationEpoch, RelPoseMeasurement, SatId, TrajectorySample,
};
use crate::se3::{se3_exp, se3_log, Pose, Twist};
use crate::solver::{solve_window, SolveError, SolveReport, SolverConfig};
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot initialize: {0}")]
    CannotInitialize(String),
    #[error("epoch at {0} precedes the previous node")]
    NonMonotoneEpoch(GpsTime),
    #[error("relative pose at {0}..{1} does not match nodes within 1 ms")]
    RelPoseTimestamps(GpsTime, GpsTime),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Frame(#[from] crate::frames::FrameError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// How TDCP factors connect epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Pairs against the previous vertex only.
    Consecutive,
    /// Pairs against every vertex still in the window.
    Dense,
}

/// Estimator configuration.
#[derive(Debug, Clone)]
pub struct GraphConfig {
    pub topology: Topology,
    pub window_length_s: f64,
    pub use_rel_pose_factors: bool,
    pub atmosphere: AtmosphereConfig,
    pub solver: SolverConfig,
    /// Constant double-difference phase sigma (m).
    pub tdcp_sigma_m: f64,
    /// Optional 1/sin(el) inflation of the TDCP sigma.
    pub elevation_weighting: bool,
    pub dcs_phi: f64,
    pub nonholonomic_sigma_lateral: f64,
    pub nonholonomic_sigma_vertical: f64,
    /// WNOA power spectral density diagonal.
    pub qc_diag: Vector6<f64>,
    pub mask_angle_rad: f64,
    pub extrinsics: Extrinsics,
    pub init_prior_sigma_m: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Consecutive,
            window_length_s: 10.0,
            use_rel_pose_factors: false,
            atmosphere: AtmosphereConfig::default(),
            solver: SolverConfig::default(),
            tdcp_sigma_m: 0.01,
            elevation_weighting: false,
            dcs_phi: 4.0,
            nonholonomic_sigma_lateral: 0.05,
            nonholonomic_sigma_vertical: 0.05,
            qc_diag: Vector6::from_column_slice(&[0.01, 0.01, 0.01, 0.001, 0.001, 0.01]),
            mask_angle_rad: 10.0f64.to_radians(),
            extrinsics: Extrinsics::default(),
            init_prior_sigma_m: 2.0,
        }
    }
}

/// Everything frozen about one epoch that TDCP pairing needs later.
#[derive(Debug, Clone)]
struct EpochSnapshot {
    /// Receiver position the satellite states were computed against.
    approx_receiver: Vector3<f64>,
    sats: BTreeMap<SatId, SnapshotSat>,
}

#[derive(Debug, Clone, Copy)]
struct SnapshotSat {
    /// Clock-corrected carrier phase (m).
    phase_m: f64,
    /// Emission-corrected satellite position in the run's ENU frame.
    position: Vector3<f64>,
    azimuth: f64,
    elevation: f64,
}

struct WindowNode {
    id: u64,
    state: StateNode,
    snapshot: EpochSnapshot,
}

/// Per-satellite phase-lock streaks. A pair (t_a, t_b) is TDCP-eligible iff
/// the satellite has been continuously locked since at or before t_a.
#[derive(Debug, Default)]
pub struct PhaseLockTracker {
    streak_start: BTreeMap<SatId, GpsTime>,
    last_seen: BTreeMap<SatId, GpsTime>,
}

impl PhaseLockTracker {
    /// Feeds one epoch's visibility and loss-of-lock flags.
    pub fn update(&mut self, epoch: &ObservationEpoch, previous_epoch: Option<GpsTime>) {
        for r in &epoch.records {
            let continuous = !r.lock_lost
                && previous_epoch.is_some()
                && self.last_seen.get(&r.sat) == previous_epoch.as_ref();
            if !continuous {
                self.streak_start.insert(r.sat, epoch.t);
            }
            self.streak_start.entry(r.sat).or_insert(epoch.t);
            self.last_seen.insert(r.sat, epoch.t);
        }
    }

    pub fn locked_since(&self, sat: SatId) -> Option<GpsTime> {
        self.streak_start.get(&sat).copied()
    }

    /// Eligibility across [t_a, t_b]: locked at or before t_a and still
    /// tracked at t_b.
    pub fn eligible(&self, sat: SatId, t_a: GpsTime, t_b: GpsTime) -> bool {
        match (self.streak_start.get(&sat), self.last_seen.get(&sat)) {
            (Some(start), Some(seen)) => *start <= t_a && *seen >= t_b,
            _ => false,
        }
    }
}

/// Forward-only sliding-window estimator.
pub struct OdometryPipeline {
    cfg: GraphConfig,
    nav: NavData,
    frame: Option<EnuFrame>,
    tropo: Option<TropoState>,
    window: Vec<WindowNode>,
    factors: Vec<Factor>,
    lock: PhaseLockTracker,
    rel_poses: Vec<RelPoseMeasurement>,
    first_epoch: Option<ObservationEpoch>,
    first_fix_enu: Option<Vector3<f64>>,
    reported: Vec<StateNode>,
    solve_reports: Vec<SolveReport>,
    next_id: u64,
    previous_epoch_time: Option<GpsTime>,
    start_time: Option<GpsTime>,
}

impl OdometryPipeline {
    pub fn new(cfg: GraphConfig, nav: NavData) -> Self {
        Self {
            cfg,
            nav,
            frame: None,
            tropo: None,
            window: Vec::new(),
            factors: Vec::new(),
            lock: PhaseLockTracker::default(),
            rel_poses: Vec::new(),
            first_epoch: None,
            first_fix_enu: None,
            reported: Vec::new(),
            solve_reports: Vec::new(),
            next_id: 0,
            previous_epoch_time: None,
            start_time: None,
        }
    }

    /// Supplies relative-pose measurements (consumed as their epochs arrive).
    pub fn add_rel_poses(&mut self, measurements: Vec<RelPoseMeasurement>) {
        self.rel_poses.extend(measurements);
    }

    pub fn enu_frame(&self) -> Option<&EnuFrame> {
        self.frame.as_ref()
    }

    /// Online (filter) trajectory: one state per processed epoch, never
    /// rewritten by later epochs.
    pub fn reported_states(&self) -> &[StateNode] {
        &self.reported
    }

    pub fn solve_reports(&self) -> &[SolveReport] {
        &self.solve_reports
    }

    /// Node ids carrying a position prior; by policy only the first node.
    pub fn prior_factor_nodes(&self) -> Vec<u64> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                Factor::PositionPrior { node, .. } => Some(*node),
                _ => None,
            })
            .collect()
    }

    /// Receiver- or vehicle-frame samples of the reported trajectory.
    pub fn trajectory_samples(
        &self,
        frame: FrameTag,
    ) -> Result<Vec<TrajectorySample>, PipelineError> {
        self.reported
            .iter()
            .map(|s| {
                let position = match frame {
                    FrameTag::Receiver => s.receiver_position(&self.cfg.extrinsics.lever_arm),
                    _ => *s.pose.translation(),
                };
                let pose_tangent =
                    se3_log(&s.pose).map_err(|e| PipelineError::Factor(FactorError::Se3(e)))?;
                Ok(TrajectorySample {
                    t: s.t,
                    position,
                    pose_tangent,
                    twist: s.twist,
                })
            })
            .collect()
    }

    /// Feeds one observation epoch; returns once the window is re-solved.
    pub fn add_epoch(&mut self, epoch: &ObservationEpoch) -> Result<(), PipelineError> {
        if self.frame.is_none() {
            return self.buffer_for_initialization(epoch);
        }
        if let Some(prev) = self.previous_epoch_time {
            if epoch.t <= prev {
                return Err(PipelineError::NonMonotoneEpoch(epoch.t));
            }
        }
        self.append_node(epoch)?;
        self.slide_window();
        self.solve()?;
        self.report_latest();
        Ok(())
    }

    /// Buffers the first epoch, then initializes from the first two
    /// pseudorange fixes: the ENU origin sits at the first fix and the
    /// initial yaw comes from the fix-to-fix displacement.
    fn buffer_for_initialization(&mut self, epoch: &ObservationEpoch) -> Result<(), PipelineError> {
        if epoch.records.len() < 4 {
            return Err(PipelineError::CannotInitialize(format!(
                "{} satellites at {}; need at least 4",
                epoch.records.len(),
                epoch.t
            )));
        }
        let fix = pseudorange_fix(epoch, &self.nav, &self.cfg.atmosphere)?;
        match self.first_epoch.take() {
            None => {
                let origin = ecef_to_geodetic(&fix.position)?;
                self.frame = Some(EnuFrame::new(origin));
                self.tropo = Some(TropoState {
                    latitude_rad: origin.lat,
                    day_of_year: epoch.t.day_of_year(),
                    height_m: origin.height,
                });
                self.first_fix_enu = Some(Vector3::zeros());
                self.first_epoch = Some(epoch.clone());
                self.start_time = Some(epoch.t);
                Ok(())
            }
            Some(_) => unreachable!("first_epoch cleared only after frame is set"),
        }
    }

    /// Creates the anchor node from the buffered first epoch. The initial
    /// heading and speed come from the Doppler velocity (course over ground),
    /// which pins the heading to a few degrees; a heading from differencing
    /// two metre-noise pseudorange fixes over one metre of motion can be off
    /// by tens of degrees and poisons the first seconds of the filter. The
    /// second epoch's fix is the fallback when Doppler cannot be solved.
    fn create_anchor(&mut self, second: &ObservationEpoch) -> Result<(), PipelineError> {
        let first = self.first_epoch.take().expect("buffered first epoch");
        let frame = self.frame.as_ref().unwrap().clone();
        let (speed, yaw) = match doppler_velocity(&first, &self.nav, &frame, &Vector3::zeros()) {
            Ok(v) => {
                let horizontal = v.fixed_rows::<2>(0).norm();
                let yaw = if horizontal > 0.3 {
                    v.y.atan2(v.x)
                } else {
                    0.0
                };
                (horizontal.min(10.0), yaw)
            }
            Err(_) => {
                let fix2 = pseudorange_fix(second, &self.nav, &self.cfg.atmosphere)?;
                let displacement = frame.ecef_to_enu(&fix2.position);
                let dt = second.t.diff_seconds(&first.t);
                let yaw = if displacement.fixed_rows::<2>(0).norm() > 0.2 {
                    displacement.y.atan2(displacement.x)
                } else {
                    0.0
                };
                ((displacement.norm() / dt).min(10.0), yaw)
            }
        };

        let lever = self.cfg.extrinsics.lever_arm;
        // Vehicle pose that puts the receiver at the first fix.
        let rot = Pose::from_yaw_translation(yaw, Vector3::zeros());
        let vehicle_pos = -(rot.rotation() * lever);
        let pose1 = Pose::from_yaw_translation(yaw, vehicle_pos);
        let twist = Twist::new(Vector3::new(speed, 0.0, 0.0), Vector3::zeros());

        self.lock.update(&first, None);
        let snap1 = self.snapshot(&first, &pose1.act(&lever))?;
        let id1 = self.next_id;
        self.next_id += 1;
        self.window.push(WindowNode {
            id: id1,
            state: StateNode {
                t: first.t,
                pose: pose1,
                twist,
            },
            snapshot: snap1,
        });
        self.factors.push(Factor::PositionPrior {
            node: id1,
            position: Vector3::zeros(),
            sigma: self.cfg.init_prior_sigma_m,
        });
        self.factors.push(Factor::Nonholonomic {
            node: id1,
            sigma_lateral: self.cfg.nonholonomic_sigma_lateral,
            sigma_vertical: self.cfg.nonholonomic_sigma_vertical,
        });
        self.previous_epoch_time = Some(first.t);
        self.report_latest();
        Ok(())
    }

    /// Satellite snapshot for one epoch at the given receiver estimate.
    fn snapshot(
        &self,
        epoch: &ObservationEpoch,
        approx_receiver: &Vector3<f64>,
    ) -> Result<EpochSnapshot, PipelineError> {
        let frame = self.frame.as_ref().unwrap();
        let rx_ecef = frame.enu_to_ecef(approx_receiver);
        let mut sats = BTreeMap::new();
        for r in &epoch.records {
            let Some(eph) = select_ephemeris(&self.nav.ephemerides, r.sat, epoch.t) else {
                continue;
            };
            let Ok((sat_pos, sat_clock)) = signal_emission_state(eph, epoch.t, &rx_ecef) else {
                continue;
            };
            let sat_enu = frame.ecef_to_enu(&sat_pos);
            let (az, el) = azimuth_elevation(approx_receiver, &sat_enu);
            if el < self.cfg.mask_angle_rad {
                continue;
            }
            sats.insert(
                r.sat,
                SnapshotSat {
                    phase_m: r.phase_cycles * L1_WAVELENGTH_M + SPEED_OF_LIGHT * sat_clock,
                    position: sat_enu,
                    azimuth: az,
                    elevation: el,
                },
            );
        }
        Ok(EpochSnapshot {
            approx_receiver: *approx_receiver,
            sats,
        })
    }

    fn slant(&self, s: &SnapshotSat, t: GpsTime) -> SlantDelay {
        let tropo = if self.cfg.atmosphere.use_tropo {
            tropo_delay(self.tropo.as_ref().unwrap(), s.elevation).unwrap_or(0.0)
        } else {
            0.0
        };
        let iono = match (&self.nav.klobuchar, self.cfg.atmosphere.use_iono) {
            (Some(k), true) => klobuchar_delay(
                k,
                self.frame.as_ref().unwrap().origin(),
                s.azimuth,
                s.elevation,
                t,
            ),
            _ => 0.0,
        };
        SlantDelay {
            tropo_m: tropo,
            iono_m: iono,
        }
    }

    /// Creates the node for this epoch and all factors touching it.
    fn append_node(&mut self, epoch: &ObservationEpoch) -> Result<(), PipelineError> {
        if self.window.is_empty() {
            self.create_anchor(epoch)?;
        }
        let prev_time = self.previous_epoch_time;
        self.lock.update(epoch, prev_time);

        let lever = self.cfg.extrinsics.lever_arm;
        let prev = self.window.last().unwrap();
        let dt = epoch.t.diff_seconds(&prev.state.t);
        if dt <= 0.0 {
            return Err(PipelineError::NonMonotoneEpoch(epoch.t));
        }

        // Constant-twist extrapolation as the initial guess.
        let guess_pose = prev
            .state
            .pose
            .compose(&se3_exp(&(dt * prev.state.twist.as_vector())))
            .orthonormalized();
        let guess = StateNode {
            t: epoch.t,
            pose: guess_pose,
            twist: prev.state.twist,
        };
        let snapshot = self.snapshot(epoch, &guess.receiver_position(&lever))?;
        let id = self.next_id;
        self.next_id += 1;
        let prev_id = prev.id;

        // Motion prior and nonholonomic constraint.
        self.factors
            .push(Factor::wnoa(prev_id, id, &self.cfg.qc_diag, dt)?);
        self.factors.push(Factor::Nonholonomic {
            node: id,
            sigma_lateral: self.cfg.nonholonomic_sigma_lateral,
            sigma_vertical: self.cfg.nonholonomic_sigma_vertical,
        });

        // TDCP partners per topology.
        let partner_range = match self.cfg.topology {
            Topology::Consecutive => self.window.len() - 1..self.window.len(),
            Topology::Dense => 0..self.window.len(),
        };
        let mut tdcp_factors = Vec::new();
        for pi in partner_range {
            let partner = &self.window[pi];
            tdcp_factors.extend(self.tdcp_pairs(partner, &snapshot, epoch.t, partner.id, id));
        }

        // Warm start: a displacement-only least squares over this epoch's
        // consecutive TDCP pairs, applied to the extrapolated guess. Keeps
        // the robust kernel honest when the prediction is off, e.g. while
        // heading is re-established after an outage; without it, large valid
        // innovations would be down-weighted as outliers indefinitely.
        let guess = self.tdcp_warm_start(guess, &tdcp_factors, prev_id, id);
        let snapshot = if (guess.receiver_position(&lever) - snapshot.approx_receiver).norm() > 0.5
        {
            // Re-freeze satellite states about the corrected position.
            self.snapshot(epoch, &guess.receiver_position(&lever))?
        } else {
            snapshot
        };
        // Rebuild the pair measurements against the refreshed snapshot.
        let mut tdcp_factors = Vec::new();
        for pi in match self.cfg.topology {
            Topology::Consecutive => self.window.len() - 1..self.window.len(),
            Topology::Dense => 0..self.window.len(),
        } {
            let partner = &self.window[pi];
            tdcp_factors.extend(self.tdcp_pairs(partner, &snapshot, epoch.t, partner.id, id));
        }
        self.factors.extend(tdcp_factors);

        // Optional relative-pose factor from the external odometry source.
        if self.cfg.use_rel_pose_factors {
            let matched: Vec<RelPoseMeasurement> = self
                .rel_poses
                .iter()
                .filter(|m| m.t_b.diff_seconds(&epoch.t).abs() < 1.0e-3)
                .cloned()
                .collect();
            for m in matched {
                let node_a = self
                    .window
                    .iter()
                    .find(|n| n.state.t.diff_seconds(&m.t_a).abs() < 1.0e-3)
                    .map(|n| n.id)
                    .ok_or(PipelineError::RelPoseTimestamps(m.t_a, m.t_b))?;
                self.factors.push(Factor::rel_pose(node_a, id, m)?);
            }
        }

        self.window.push(WindowNode {
            id,
            state: guess,
            snapshot,
        });
        self.previous_epoch_time = Some(epoch.t);
        Ok(())
    }

    /// Displacement-only linear solve over the new epoch's TDCP pairs against
    /// the previous node: shifts the predicted position so the residuals the
    /// robust window solve sees start small. Falls back to the prediction when
    /// the geometry is too thin (fewer than 3 pairs or ill-conditioned).
    fn tdcp_warm_start(
        &self,
        guess: StateNode,
        tdcp_factors: &[Factor],
        prev_id: u64,
        new_id: u64,
    ) -> StateNode {
        let lever = self.cfg.extrinsics.lever_arm;
        let prev = self.window.last().unwrap();
        // Collect (residual, direction) per consecutive pair.
        let mut rows: Vec<(f64, Vector3<f64>)> = Vec::new();
        for f in tdcp_factors {
            let Factor::Tdcp {
                node_a,
                node_b,
                measurement,
            } = f
            else {
                continue;
            };
            if *node_a != prev_id || *node_b != new_id {
                continue;
            }
            let (e, _, _) = tdcp_residual(measurement, &prev.state, &guess, &lever);
            // de/d(position of b) from the line-of-sight difference.
            let u_ref = (measurement.sat_ref_b - guess.receiver_position(&lever)).normalize();
            let u_other = (measurement.sat_other_b - guess.receiver_position(&lever)).normalize();
            rows.push((e, u_other - u_ref));
        }
        let solve = |rows: &[(f64, Vector3<f64>)]| -> Option<Vector3<f64>> {
            if rows.len() < 3 {
                return None;
            }
            let mut h = nalgebra::Matrix3::<f64>::zeros();
            let mut g = Vector3::<f64>::zeros();
            for (e, j) in rows {
                h += j * j.transpose();
                g += j * *e;
            }
            let eig = h.symmetric_eigenvalues();
            if eig.min() < 1.0e-3 * eig.max().max(1.0e-9) {
                return None;
            }
            let d = nalgebra::Cholesky::new(h)?.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) && d.norm() <= 50.0 {
                Some(d)
            } else {
                None
            }
        };
        let Some(d) = solve(&rows) else { return guess };
        // Trim pairs a single bad phase would leave with large post-fit
        // residuals, then re-solve. The warm start must not hand the robust
        // kernel an outlier-dragged linearization point.
        let mut post: Vec<f64> = rows.iter().map(|(e, j)| (e + j.dot(&d)).abs()).collect();
        let mut sorted = post.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let gate = (6.0 * median).max(0.3);
        let kept: Vec<(f64, Vector3<f64>)> = rows
            .iter()
            .zip(post.drain(..))
            .filter(|(_, r)| *r <= gate)
            .map(|(row, _)| *row)
            .collect();
        let d = if kept.len() < rows.len() {
            solve(&kept).unwrap_or(d)
        } else {
            d
        };
        StateNode {
            t: guess.t,
            pose: Pose::new(*guess.pose.rotation(), guess.pose.translation() + d),
            twist: guess.twist,
        }
    }

    /// Double-differenced TDCP measurements between a partner node and the
    /// incoming epoch.
    fn tdcp_pairs(
        &self,
        partner: &WindowNode,
        snapshot_b: &EpochSnapshot,
        t_b: GpsTime,
        id_a: u64,
        id_b: u64,
    ) -> Vec<Factor> {
        let t_a = partner.state.t;
        let snap_a = &partner.snapshot;
        let common: Vec<SatId> = snap_a
            .sats
            .keys()
            .filter(|s| snapshot_b.sats.contains_key(*s))
            .filter(|s| self.lock.eligible(**s, t_a, t_b))
            .copied()
            .collect();
        if common.len() < 2 {
            return Vec::new();
        }
        // Reference: highest elevation at t_a, ties toward the lower id.
        let reference = *common
            .iter()
            .max_by(|a, b| {
                let ea = snap_a.sats[a].elevation;
                let eb = snap_a.sats[b].elevation;
                ea.partial_cmp(&eb).unwrap().then_with(|| b.cmp(a))
            })
            .unwrap();
        let ref_a = snap_a.sats[&reference];
        let ref_b = snapshot_b.sats[&reference];
        let slant_ref_a = self.slant(&ref_a, t_a);
        let slant_ref_b = self.slant(&ref_b, t_b);

        let mut out = Vec::new();
        for sat in common {
            if sat == reference {
                continue;
            }
            let other_a = snap_a.sats[&sat];
            let other_b = snapshot_b.sats[&sat];
            let phase_dd = (other_b.phase_m - other_a.phase_m) - (ref_b.phase_m - ref_a.phase_m);
            let atmo_dd = differenced_atmo_correction(
                &slant_ref_a,
                &slant_ref_b,
                &self.slant(&other_a, t_a),
                &self.slant(&other_b, t_b),
            );
            let sigma = if self.cfg.elevation_weighting {
                self.cfg.tdcp_sigma_m / other_b.elevation.sin().max(0.17)
            } else {
                self.cfg.tdcp_sigma_m
            };
            let measurement = TdcpPairMeasurement::new(
                t_a,
                t_b,
                reference,
                sat,
                phase_dd,
                ref_a.position,
                ref_b.position,
                other_a.position,
                other_b.position,
                snap_a.approx_receiver,
                snapshot_b.approx_receiver,
                atmo_dd,
                1.0 / (sigma * sigma),
            );
            out.push(Factor::Tdcp {
                node_a: id_a,
                node_b: id_b,
                measurement: Box::new(measurement),
            });
        }
        out
    }

    /// Drops nodes older than the window, oldest-first, together with any
    /// factor touching them.
    fn slide_window(&mut self) {
        let newest = self.window.last().map(|n| n.state.t);
        let Some(newest) = newest else { return };
        let mut dropped = Vec::new();
        while self.window.len() > 2 {
            let oldest = &self.window[0];
            if newest.diff_seconds(&oldest.state.t) <= self.cfg.window_length_s {
                break;
            }
            dropped.push(self.window.remove(0).id);
        }
        if !dropped.is_empty() {
            self.factors
                .retain(|f| f.node_ids().iter().all(|id| !dropped.contains(id)));
        }
    }

    fn solve(&mut self) -> Result<(), PipelineError> {
        let ids: Vec<u64> = self.window.iter().map(|n| n.id).collect();
        let mut states: Vec<StateNode> = self.window.iter().map(|n| n.state).collect();
        let mut fixed = vec![false; ids.len()];
        fixed[0] = true; // gauge: the oldest node anchors the window
        let report = solve_window(
            &ids,
            &mut states,
            &fixed,
            &self.factors,
            &self.cfg.extrinsics.lever_arm,
            self.cfg.dcs_phi,
            &self.cfg.solver,
        )?;
        for (node, state) in self.window.iter_mut().zip(states) {
            node.state = state;
        }
        self.solve_reports.push(report);
        Ok(())
    }

    fn report_latest(&mut self) {
        if let Some(node) = self.window.last() {
            self.reported.push(node.state);
        }
    }
}

/// Convenience driver: runs a full observation set through the pipeline.
pub fn run_odometry(
    cfg: GraphConfig,
    nav: NavData,
    epochs: &[ObservationEpoch],
    rel_poses: Option<Vec<RelPoseMeasurement>>,
) -> Result<OdometryPipeline, PipelineError> {
    let mut pipeline = OdometryPipeline::new(cfg, nav);
    if let Some(rp) = rel_poses {
        pipeline.add_rel_poses(rp);
    }
    for epoch in epochs {
        pipeline.add_epoch(epoch)?;
    }
    Ok(pipeline)
}
