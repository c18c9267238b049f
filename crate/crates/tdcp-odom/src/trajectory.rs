//! Time-indexed pose sequences with geodesic interpolation.

use nalgebra::Vector3;
use thiserror::Error;

use crate::se3::{se3_exp, se3_log, Pose, Se3Error};
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one node")]
    Empty,
    #[error("node timestamps must be strictly increasing (index {0})")]
    NonMonotone(usize),
    #[error("query time {query} outside trajectory span [{first}, {last}]")]
    OutOfSpan {
        query: GpsTime,
        first: GpsTime,
        last: GpsTime,
    },
    #[error(transparent)]
    Se3(#[from] Se3Error),
}

/// A pose sample along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryNode {
    pub t: GpsTime,
    pub pose: Pose,
}

/// Time-ordered pose sequence supporting interpolation at arbitrary times
/// within its span.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    nodes: Vec<TrajectoryNode>,
}

impl Trajectory {
    pub fn new(nodes: Vec<TrajectoryNode>) -> Result<Self, TrajectoryError> {
        if nodes.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for i in 1..nodes.len() {
            if nodes[i].t <= nodes[i - 1].t {
                return Err(TrajectoryError::NonMonotone(i));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[TrajectoryNode] {
        &self.nodes
    }

    pub fn first_time(&self) -> GpsTime {
        self.nodes[0].t
    }

    pub fn last_time(&self) -> GpsTime {
        self.nodes[self.nodes.len() - 1].t
    }

    /// Constant-twist geodesic interpolation:
    /// `T(t) = T_k * exp(alpha * log(T_k^-1 T_{k+1}))`.
    pub fn interpolate_pose(&self, t: GpsTime) -> Result<Pose, TrajectoryError> {
        let (first, last) = (self.first_time(), self.last_time());
        if t < first || t > last {
            return Err(TrajectoryError::OutOfSpan {
                query: t,
                first,
                last,
            });
        }
        // Last node is an exact hit.
        if t == last {
            return Ok(self.nodes[self.nodes.len() - 1].pose);
        }
        let idx = match self.nodes.binary_search_by(|n| n.t.cmp(&t)) {
            Ok(i) => return Ok(self.nodes[i].pose),
            Err(i) => i - 1,
        };
        let (a, b) = (&self.nodes[idx], &self.nodes[idx + 1]);
        let alpha = t.diff_seconds(&a.t) / b.t.diff_seconds(&a.t);
        let rel = se3_log(&a.pose.between(&b.pose))?;
        Ok(a.pose.compose(&se3_exp(&(alpha * rel))))
    }

    /// Interpolated position, convenient for metric code.
    pub fn interpolate_position(&self, t: GpsTime) -> Result<Vector3<f64>, TrajectoryError> {
        Ok(*self.interpolate_pose(t)?.translation())
    }
}
