//! File ingestion: RINEX observation/navigation, ground-truth CSV, and
//! relative-pose CSV.
//!
//! The observation path accepts RINEX 2.11 and a GPS-only subset of 3.x.
//! Binary receiver logs are deliberately out of scope; the same information
//! content arrives through RINEX-style text, which keeps fixtures testable.

mod csvio;
mod rinex_nav;
mod rinex_obs;

pub use csvio::{
    parse_ground_truth, parse_rel_poses, read_trajectory_csv, write_ground_truth, write_rel_poses,
    write_trajectory_csv, TrajectorySample,
};
pub use rinex_nav::{parse_rinex_nav, parse_rinex_nav_str, NavData};
pub use rinex_obs::{parse_rinex_obs, parse_rinex_obs_str, ParsedObs};

use std::fmt;

use nalgebra::{Matrix6, Vector3};
use thiserror::Error;

use crate::se3::Pose;
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {msg}")]
    Malformed {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("missing or unsupported RINEX header: {0}")]
    Header(String),
    #[error("zero epochs parsed from {0}")]
    NoEpochs(String),
    #[error("{0}")]
    Invalid(String),
}

impl IngestError {
    pub(crate) fn malformed(file: &str, line: usize, msg: impl Into<String>) -> Self {
        IngestError::Malformed {
            file: file.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

/// GPS satellite identifier (PRN).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatId(pub u8);

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{:02}", self.0)
    }
}

/// One satellite's observables at one epoch.
#[derive(Debug, Clone, Copy)]
pub struct SatObservation {
    pub sat: SatId,
    /// L1 carrier phase (cycles).
    pub phase_cycles: f64,
    /// C/A pseudorange (m).
    pub pseudorange_m: f64,
    /// L1 Doppler (Hz).
    pub doppler_hz: f64,
    /// Loss-of-lock indicator: the phase datum is discontinuous at this epoch.
    pub lock_lost: bool,
    /// Carrier-to-noise density (dB-Hz).
    pub snr_dbhz: f64,
}

/// All satellite records at one receiver timestamp.
#[derive(Debug, Clone)]
pub struct ObservationEpoch {
    pub t: GpsTime,
    /// Sorted by satellite id; ids unique within the epoch.
    pub records: Vec<SatObservation>,
}

impl ObservationEpoch {
    pub fn record(&self, sat: SatId) -> Option<&SatObservation> {
        self.records
            .binary_search_by_key(&sat, |r| r.sat)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// RTK-style reference position sample, nominally at 4 Hz.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruthSample {
    pub t: GpsTime,
    /// Receiver position in the run's ENU frame (m).
    pub position: Vector3<f64>,
    pub quality: u8,
}

/// Relative vehicle pose between two timestamps, as produced by an external
/// odometry source.
#[derive(Debug, Clone)]
pub struct RelPoseMeasurement {
    pub t_a: GpsTime,
    pub t_b: GpsTime,
    /// Vehicle-frame motion from a to b.
    pub t_ab: Pose,
    /// 6x6 covariance of the tangent-space error, SPD.
    pub covariance: Matrix6<f64>,
}

impl RelPoseMeasurement {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.t_b <= self.t_a {
            return Err(IngestError::Invalid(format!(
                "relative pose must advance in time ({} -> {})",
                self.t_a, self.t_b
            )));
        }
        let chol = nalgebra::Cholesky::new(self.covariance);
        if chol.is_none() {
            return Err(IngestError::Invalid(
                "relative pose covariance is not positive definite".into(),
            ));
        }
        Ok(())
    }
}
