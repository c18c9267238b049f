//! Single-receiver GPS odometry from time-differenced carrier phase (TDCP).
//!
//! The crate estimates an SE(3) vehicle trajectory from L1 carrier-phase
//! measurements of one receiver by double-differencing phase across epochs and
//! satellites, then smoothing over a sliding window with a motion prior and
//! nonholonomic constraints. It ships with:
//!
//! - a synthetic GNSS scenario generator ([`sim`]) with a configurable error
//!   budget, RINEX output, and dropout injection,
//! - pseudorange and integrated-Doppler baselines ([`baselines`]),
//! - a drift-evaluation harness ([`eval`]) with section alignment and
//!   error-versus-distance metrics,
//! - an experiment driver ([`experiment`]) that runs matched-seed comparisons.

pub mod atmosphere;
pub mod baselines;
pub mod constants;
pub mod ephemeris;
pub mod eval;
pub mod experiment;
pub mod factors;
pub mod frames;
pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod se3;
pub mod sim;
pub mod solver;
pub mod time;
pub mod trajectory;

pub use atmosphere::{AtmosphereConfig, KlobucharParams, TropoState};
pub use ephemeris::BroadcastEphemeris;
pub use factors::{Factor, StateNode, TdcpPairMeasurement};
pub use frames::{EcefPoint, EnuFrame, Extrinsics, FrameTag, Geodetic};
pub use ingest::{GroundTruthSample, ObservationEpoch, RelPoseMeasurement, SatId};
pub use pipeline::{GraphConfig, OdometryPipeline, Topology};
pub use se3::{Pose, Twist};
pub use sim::{ErrorBudget, ScenarioConfig};
pub use time::GpsTime;
pub use trajectory::Trajectory;
