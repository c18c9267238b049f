//! Residuals, analytic Jacobians, and robust weighting for every factor type
//! in the sliding-window graph.
//!
//! All Jacobians are with respect to right perturbations of each node's
//! 12-dof tangent `[pose xi (6); twist w (6)]`. Pose-only factors return 6-column
//! blocks; the solver widens them with zero velocity columns.
//!
//! The TDCP residual evaluates the full nonlinear double-differenced range,
//! but as a *delta* against the ranges at the measurement's linearization
//! positions. Forming `rho - rho0 = ((r0 - r) . (d + d0)) / (rho + rho0)`
//! avoids the catastrophic cancellation of differencing ~2.5e7 m norms, which
//! keeps the residual smooth at the metre scale where the optimizer works.

use nalgebra::{Matrix6, RowVector6, SMatrix, SVector, Vector2, Vector3, Vector6};
use thiserror::Error;

use crate::ingest::{RelPoseMeasurement, SatId};
use crate::se3::{
    se3_left_jacobian_inv, se3_log, se3_right_jacobian_inv, skew, Pose, Se3Error, Twist,
};
use crate::time::GpsTime;

/// Residual plus per-node Jacobian blocks of a two-node 12-dof factor.
pub type Residual12 = (SVector<f64, 12>, SMatrix<f64, 12, 12>, SMatrix<f64, 12, 12>);
/// Residual plus per-node pose Jacobians of a relative-pose factor.
pub type Residual6 = (Vector6<f64>, Matrix6<f64>, Matrix6<f64>);

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("non-positive time step {0}")]
    NonPositiveDt(f64),
    #[error("covariance is not positive definite")]
    BadCovariance,
    #[error(transparent)]
    Se3(#[from] Se3Error),
}

/// Vehicle state at one estimation time.
#[derive(Debug, Clone, Copy)]
pub struct StateNode {
    pub t: GpsTime,
    /// Vehicle pose in the global ENU frame.
    pub pose: Pose,
    /// Body-frame generalized velocity.
    pub twist: Twist,
}

impl StateNode {
    /// Applies a 12-dof tangent update: pose on the right, twist additively.
    pub fn retract(&self, dx: &SVector<f64, 12>) -> StateNode {
        StateNode {
            t: self.t,
            pose: self.pose.retract(&dx.fixed_rows::<6>(0).into_owned()),
            twist: Twist::from_vector(
                &(self.twist.as_vector() + dx.fixed_rows::<6>(6).into_owned()),
            ),
        }
    }

    /// Receiver antenna position in the global frame.
    pub fn receiver_position(&self, lever_arm: &Vector3<f64>) -> Vector3<f64> {
        self.pose.act(lever_arm)
    }
}

/// d(receiver position)/d(pose tangent): `[R, -R * skew(lever)]`.
fn receiver_position_jacobian(pose: &Pose, lever_arm: &Vector3<f64>) -> SMatrix<f64, 3, 6> {
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(pose.rotation());
    j.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-pose.rotation() * skew(lever_arm)));
    j
}

/// Stable range change from `r0` to `r` against a fixed satellite position,
/// plus the current line-of-sight unit vector.
fn delta_range(
    sat: &Vector3<f64>,
    r: &Vector3<f64>,
    r0: &Vector3<f64>,
    rho0: f64,
) -> (f64, Vector3<f64>) {
    let d = sat - r;
    let rho = d.norm();
    let d0 = sat - r0;
    let drho = (r0 - r).dot(&(d + d0)) / (rho + rho0);
    (drho, d / rho)
}

/// One double-differenced phase measurement between two epochs and two
/// satellites, with everything frozen that optimization must not move.
#[derive(Debug, Clone)]
pub struct TdcpPairMeasurement {
    pub t_a: GpsTime,
    pub t_b: GpsTime,
    pub ref_sat: SatId,
    pub other_sat: SatId,
    /// Double-differenced phase (m): (other_b - other_a) - (ref_b - ref_a).
    pub phase_dd_m: f64,
    /// Emission-corrected satellite positions in ENU (m).
    pub sat_ref_a: Vector3<f64>,
    pub sat_ref_b: Vector3<f64>,
    pub sat_other_a: Vector3<f64>,
    pub sat_other_b: Vector3<f64>,
    /// Receiver positions the ranges were linearized about.
    pub r0_a: Vector3<f64>,
    pub r0_b: Vector3<f64>,
    /// Unit vectors receiver -> satellite at t_a (diagnostics / weighting).
    pub u_ref_a: Vector3<f64>,
    pub u_other_a: Vector3<f64>,
    /// Modelled atmospheric double difference (m), subtracted from the phase.
    pub atmo_dd_m: f64,
    /// Scalar weight 1/sigma^2 (1/m^2).
    pub weight: f64,
    /// Cached `phase_dd - atmo_dd - rho_dd(r0_a, r0_b)`.
    z: f64,
    rho0_ref_a: f64,
    rho0_ref_b: f64,
    rho0_other_a: f64,
    rho0_other_b: f64,
}

#[allow(clippy::too_many_arguments)]
impl TdcpPairMeasurement {
    pub fn new(
        t_a: GpsTime,
        t_b: GpsTime,
        ref_sat: SatId,
        other_sat: SatId,
        phase_dd_m: f64,
        sat_ref_a: Vector3<f64>,
        sat_ref_b: Vector3<f64>,
        sat_other_a: Vector3<f64>,
        sat_other_b: Vector3<f64>,
        r0_a: Vector3<f64>,
        r0_b: Vector3<f64>,
        atmo_dd_m: f64,
        weight: f64,
    ) -> Self {
        let rho0_ref_a = (sat_ref_a - r0_a).norm();
        let rho0_ref_b = (sat_ref_b - r0_b).norm();
        let rho0_other_a = (sat_other_a - r0_a).norm();
        let rho0_other_b = (sat_other_b - r0_b).norm();
        let rho0_dd = (rho0_other_b - rho0_other_a) - (rho0_ref_b - rho0_ref_a);
        Self {
            t_a,
            t_b,
            ref_sat,
            other_sat,
            phase_dd_m,
            sat_ref_a,
            sat_ref_b,
            sat_other_a,
            sat_other_b,
            r0_a,
            r0_b,
            u_ref_a: (sat_ref_a - r0_a) / rho0_ref_a,
            u_other_a: (sat_other_a - r0_a) / rho0_other_a,
            atmo_dd_m,
            weight,
            z: phase_dd_m - atmo_dd_m - rho0_dd,
            rho0_ref_a,
            rho0_ref_b,
            rho0_other_a,
            rho0_other_b,
        }
    }

    /// The same measurement expressed in a translated frame. Relative
    /// geometry is untouched, so the cached ranges carry over exactly.
    pub fn translated(&self, shift: &Vector3<f64>) -> Self {
        let mut out = self.clone();
        out.sat_ref_a += shift;
        out.sat_ref_b += shift;
        out.sat_other_a += shift;
        out.sat_other_b += shift;
        out.r0_a += shift;
        out.r0_b += shift;
        out
    }
}

/// TDCP residual (m) and pose Jacobians for both nodes.
///
/// `e = phase_dd - rho_dd(nodes) - atmo_dd`, with the geometric double
/// difference evaluated through the full nonlinear range model.
pub fn tdcp_residual(
    m: &TdcpPairMeasurement,
    node_a: &StateNode,
    node_b: &StateNode,
    lever_arm: &Vector3<f64>,
) -> (f64, RowVector6<f64>, RowVector6<f64>) {
    let r_a = node_a.receiver_position(lever_arm);
    let r_b = node_b.receiver_position(lever_arm);

    let (d_ref_a, u_ref_a) = delta_range(&m.sat_ref_a, &r_a, &m.r0_a, m.rho0_ref_a);
    let (d_ref_b, u_ref_b) = delta_range(&m.sat_ref_b, &r_b, &m.r0_b, m.rho0_ref_b);
    let (d_other_a, u_other_a) = delta_range(&m.sat_other_a, &r_a, &m.r0_a, m.rho0_other_a);
    let (d_other_b, u_other_b) = delta_range(&m.sat_other_b, &r_b, &m.r0_b, m.rho0_other_b);

    let delta_dd = (d_other_b - d_other_a) - (d_ref_b - d_ref_a);
    let e = m.z - delta_dd;

    // de/dr_b = u_other_b - u_ref_b; de/dr_a is the negative pattern at a.
    let de_dr_b = (u_other_b - u_ref_b).transpose();
    let de_dr_a = (u_ref_a - u_other_a).transpose();

    let j_a = de_dr_a * receiver_position_jacobian(&node_a.pose, lever_arm);
    let j_b = de_dr_b * receiver_position_jacobian(&node_b.pose, lever_arm);
    (e, j_a, j_b)
}

/// White-noise-on-acceleration block covariance over a step of `dt`:
/// `[[dt^3/3 Qc, dt^2/2 Qc], [dt^2/2 Qc, dt Qc]]` with diagonal `Qc`.
pub fn wnoa_covariance(qc_diag: &Vector6<f64>, dt: f64) -> SMatrix<f64, 12, 12> {
    let mut q = SMatrix::<f64, 12, 12>::zeros();
    for k in 0..6 {
        let qc = qc_diag[k];
        q[(k, k)] = dt.powi(3) / 3.0 * qc;
        q[(k, k + 6)] = dt * dt / 2.0 * qc;
        q[(k + 6, k)] = dt * dt / 2.0 * qc;
        q[(k + 6, k + 6)] = dt * qc;
    }
    q
}

/// WNOA motion-prior residual between consecutive nodes.
///
/// `e = [log(T_a^-1 T_b) - dt * w_a ; w_b - w_a]`, unwhitened. The velocity
/// block keeps the identity approximation of the inverse left Jacobian, which
/// holds well below 1 rad and metres of per-step motion.
pub fn wnoa_residual(node_a: &StateNode, node_b: &StateNode) -> Result<Residual12, FactorError> {
    let dt = node_b.t.diff_seconds(&node_a.t);
    if dt <= 0.0 {
        return Err(FactorError::NonPositiveDt(dt));
    }
    let tau = se3_log(&node_a.pose.between(&node_b.pose))?;
    let w_a = node_a.twist.as_vector();
    let w_b = node_b.twist.as_vector();

    let mut e = SVector::<f64, 12>::zeros();
    e.fixed_rows_mut::<6>(0).copy_from(&(tau - dt * w_a));
    e.fixed_rows_mut::<6>(6).copy_from(&(w_b - w_a));

    let jl_inv = se3_left_jacobian_inv(&tau);
    let jr_inv = se3_right_jacobian_inv(&tau);

    let mut j_a = SMatrix::<f64, 12, 12>::zeros();
    j_a.fixed_view_mut::<6, 6>(0, 0).copy_from(&(-jl_inv));
    j_a.fixed_view_mut::<6, 6>(0, 6)
        .copy_from(&(-dt * Matrix6::identity()));
    j_a.fixed_view_mut::<6, 6>(6, 6)
        .copy_from(&(-Matrix6::identity()));

    let mut j_b = SMatrix::<f64, 12, 12>::zeros();
    j_b.fixed_view_mut::<6, 6>(0, 0).copy_from(&jr_inv);
    j_b.fixed_view_mut::<6, 6>(6, 6)
        .copy_from(&Matrix6::identity());

    Ok((e, j_a, j_b))
}

/// Nonholonomic constraint: whitened lateral and vertical body velocity.
pub fn nonholonomic_residual(
    node: &StateNode,
    sigma_lateral: f64,
    sigma_vertical: f64,
) -> (Vector2<f64>, SMatrix<f64, 2, 12>) {
    let e = Vector2::new(
        node.twist.linear.y / sigma_lateral,
        node.twist.linear.z / sigma_vertical,
    );
    let mut j = SMatrix::<f64, 2, 12>::zeros();
    j[(0, 7)] = 1.0 / sigma_lateral;
    j[(1, 8)] = 1.0 / sigma_vertical;
    (e, j)
}

/// Relative-pose factor residual: `e = log(m.T_ab^-1 * (T_ga^-1 T_gb))`,
/// unwhitened, with pose Jacobians for both nodes.
pub fn rel_pose_residual(
    m: &RelPoseMeasurement,
    node_a: &StateNode,
    node_b: &StateNode,
) -> Result<Residual6, FactorError> {
    let t_est = node_a.pose.between(&node_b.pose);
    let e = se3_log(&m.t_ab.inverse().compose(&t_est))?;
    let jr_inv = se3_right_jacobian_inv(&e);
    let j_b = jr_inv;
    let j_a = -jr_inv * t_est.inverse().adjoint();
    Ok((e, j_a, j_b))
}

/// Position prior on the receiver antenna, whitened by `sigma`.
pub fn position_prior_residual(
    node: &StateNode,
    prior_position: &Vector3<f64>,
    sigma: f64,
    lever_arm: &Vector3<f64>,
) -> (Vector3<f64>, SMatrix<f64, 3, 6>) {
    let r = node.receiver_position(lever_arm);
    let e = (r - prior_position) / sigma;
    let j = receiver_position_jacobian(&node.pose, lever_arm) / sigma;
    (e, j)
}

/// Dynamic covariance scaling: `s = min(1, 2 phi / (phi + chi2))`.
///
/// Applied by scaling a factor's whitened residual and Jacobian by `s`.
pub fn dcs_scale(chi2: f64, phi: f64) -> f64 {
    (2.0 * phi / (phi + chi2)).min(1.0)
}

/// A factor in the window graph, addressing nodes by stable id.
#[derive(Debug, Clone)]
pub enum Factor {
    Tdcp {
        node_a: u64,
        node_b: u64,
        measurement: Box<TdcpPairMeasurement>,
    },
    Wnoa {
        node_a: u64,
        node_b: u64,
        /// Inverse square root (Cholesky) of Q(dt).
        sqrt_info: Box<SMatrix<f64, 12, 12>>,
    },
    Nonholonomic {
        node: u64,
        sigma_lateral: f64,
        sigma_vertical: f64,
    },
    RelPose {
        node_a: u64,
        node_b: u64,
        measurement: Box<RelPoseMeasurement>,
        sqrt_info: Box<Matrix6<f64>>,
    },
    PositionPrior {
        node: u64,
        position: Vector3<f64>,
        sigma: f64,
    },
}

impl Factor {
    pub fn wnoa(
        node_a: u64,
        node_b: u64,
        qc_diag: &Vector6<f64>,
        dt: f64,
    ) -> Result<Self, FactorError> {
        if dt <= 0.0 {
            return Err(FactorError::NonPositiveDt(dt));
        }
        let q = wnoa_covariance(qc_diag, dt);
        let chol = nalgebra::Cholesky::new(q).ok_or(FactorError::BadCovariance)?;
        let l_inv = chol.l().try_inverse().ok_or(FactorError::BadCovariance)?;
        Ok(Factor::Wnoa {
            node_a,
            node_b,
            sqrt_info: Box::new(l_inv),
        })
    }

    pub fn rel_pose(node_a: u64, node_b: u64, m: RelPoseMeasurement) -> Result<Self, FactorError> {
        let chol = nalgebra::Cholesky::new(m.covariance).ok_or(FactorError::BadCovariance)?;
        let l_inv = chol.l().try_inverse().ok_or(FactorError::BadCovariance)?;
        Ok(Factor::RelPose {
            node_a,
            node_b,
            measurement: Box::new(m),
            sqrt_info: Box::new(l_inv),
        })
    }

    pub fn node_ids(&self) -> Vec<u64> {
        match self {
            Factor::Tdcp { node_a, node_b, .. }
            | Factor::Wnoa { node_a, node_b, .. }
            | Factor::RelPose { node_a, node_b, .. } => vec![*node_a, *node_b],
            Factor::Nonholonomic { node, .. } | Factor::PositionPrior { node, .. } => vec![*node],
        }
    }

    pub fn is_tdcp(&self) -> bool {
        matches!(self, Factor::Tdcp { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Tdcp { .. } => 1,
            Factor::Wnoa { .. } => 12,
            Factor::Nonholonomic { .. } => 2,
            Factor::RelPose { .. } => 6,
            Factor::PositionPrior { .. } => 3,
        }
    }
}

/// Whitened residual and per-node 12-column Jacobian blocks.
#[derive(Debug, Clone)]
pub struct FactorEval {
    pub nodes: Vec<u64>,
    pub residual: nalgebra::DVector<f64>,
    pub jacobians: Vec<nalgebra::DMatrix<f64>>,
}

/// Widens a pose-only Jacobian block to the full 12-dof node tangent.
fn widen6(j: &SMatrix<f64, 1, 6>) -> nalgebra::DMatrix<f64> {
    let mut out = nalgebra::DMatrix::zeros(1, 12);
    out.view_mut((0, 0), (1, 6)).copy_from(j);
    out
}

impl Factor {
    /// Evaluates the whitened residual and Jacobians at the given nodes.
    /// Robust (DCS) scaling is the solver's job, not done here.
    pub fn evaluate(
        &self,
        lever_arm: &Vector3<f64>,
        get: &dyn Fn(u64) -> StateNode,
    ) -> Result<FactorEval, FactorError> {
        match self {
            Factor::Tdcp {
                node_a,
                node_b,
                measurement,
            } => {
                let a = get(*node_a);
                let b = get(*node_b);
                let (e, j_a, j_b) = tdcp_residual(measurement, &a, &b, lever_arm);
                let s = measurement.weight.sqrt();
                Ok(FactorEval {
                    nodes: vec![*node_a, *node_b],
                    residual: nalgebra::DVector::from_element(1, e * s),
                    jacobians: vec![widen6(&(j_a * s)), widen6(&(j_b * s))],
                })
            }
            Factor::Wnoa {
                node_a,
                node_b,
                sqrt_info,
            } => {
                let a = get(*node_a);
                let b = get(*node_b);
                let (e, j_a, j_b) = wnoa_residual(&a, &b)?;
                let wi = sqrt_info.as_ref();
                Ok(FactorEval {
                    nodes: vec![*node_a, *node_b],
                    residual: nalgebra::DVector::from_column_slice((wi * e).as_slice()),
                    jacobians: vec![
                        nalgebra::DMatrix::from_column_slice(12, 12, (wi * j_a).as_slice()),
                        nalgebra::DMatrix::from_column_slice(12, 12, (wi * j_b).as_slice()),
                    ],
                })
            }
            Factor::Nonholonomic {
                node,
                sigma_lateral,
                sigma_vertical,
            } => {
                let n = get(*node);
                let (e, j) = nonholonomic_residual(&n, *sigma_lateral, *sigma_vertical);
                Ok(FactorEval {
                    nodes: vec![*node],
                    residual: nalgebra::DVector::from_column_slice(e.as_slice()),
                    jacobians: vec![nalgebra::DMatrix::from_column_slice(2, 12, j.as_slice())],
                })
            }
            Factor::RelPose {
                node_a,
                node_b,
                measurement,
                sqrt_info,
            } => {
                let a = get(*node_a);
                let b = get(*node_b);
                let (e, j_a, j_b) = rel_pose_residual(measurement, &a, &b)?;
                let wi = sqrt_info.as_ref();
                let widen = |j: &Matrix6<f64>| {
                    let mut out = nalgebra::DMatrix::zeros(6, 12);
                    out.view_mut((0, 0), (6, 6)).copy_from(&(wi * j));
                    out
                };
                Ok(FactorEval {
                    nodes: vec![*node_a, *node_b],
                    residual: nalgebra::DVector::from_column_slice((wi * e).as_slice()),
                    jacobians: vec![widen(&j_a), widen(&j_b)],
                })
            }
            Factor::PositionPrior {
                node,
                position,
                sigma,
            } => {
                let n = get(*node);
                let (e, j) = position_prior_residual(&n, position, *sigma, lever_arm);
                let mut jw = nalgebra::DMatrix::zeros(3, 12);
                jw.view_mut((0, 0), (3, 6)).copy_from(&j);
                Ok(FactorEval {
                    nodes: vec![*node],
                    residual: nalgebra::DVector::from_column_slice(e.as_slice()),
                    jacobians: vec![jw],
                })
            }
        }
    }
}
