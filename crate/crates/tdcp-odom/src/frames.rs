//! Coordinate frames and WGS-84 geodetic conversions.
//!
//! Everything downstream works in a local east-north-up (ENU) frame tangent
//! to the ellipsoid at the run origin; this module provides the ECEF and
//! geodetic plumbing around it.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::constants::{WGS84_A, WGS84_B, WGS84_E2};
use crate::se3::Pose;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("ECEF point too close to the geocentre (norm {0:.1} m)")]
    DegenerateEcef(f64),
    #[error("geodetic conversion did not converge after {0} iterations")]
    NoConvergence(usize),
}

/// Geodetic coordinates on the WGS-84 ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodetic {
    /// Latitude (rad), positive north.
    pub lat: f64,
    /// Longitude (rad), positive east.
    pub lon: f64,
    /// Height above the ellipsoid (m).
    pub height: f64,
}

/// Earth-centred Earth-fixed point (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }
}

/// The five frames of interest. Only tags quantities in APIs where mixing
/// frames is an easy mistake; no camera processing happens in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameTag {
    /// Global ENU frame, fixed at the run origin.
    Global,
    /// Vehicle frame at the centre of the platform, x forward.
    Vehicle,
    /// GPS receiver (antenna phase centre) frame.
    Receiver,
    /// Satellite antenna phase centre.
    Satellite,
    /// Camera frame; housed for completeness, never processed here.
    Camera,
}

/// Rigid mounting of sensors on the vehicle.
#[derive(Debug, Clone, Copy)]
pub struct Extrinsics {
    /// Receiver antenna lever arm in the vehicle frame (m).
    pub lever_arm: Vector3<f64>,
    /// Camera-in-vehicle transform. Documentation only; no camera data flows
    /// through this crate.
    pub camera_in_vehicle: Pose,
}

impl Default for Extrinsics {
    fn default() -> Self {
        // Front-mounted antenna: 0.5 m forward, 1.0 m up. A config default,
        // not ground truth.
        Self {
            lever_arm: Vector3::new(0.5, 0.0, 1.0),
            camera_in_vehicle: Pose::identity(),
        }
    }
}

/// Converts geodetic coordinates to ECEF using the WGS-84 closed form.
pub fn geodetic_to_ecef(g: &Geodetic) -> EcefPoint {
    let sin_lat = g.lat.sin();
    let cos_lat = g.lat.cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    EcefPoint::new(
        (n + g.height) * cos_lat * g.lon.cos(),
        (n + g.height) * cos_lat * g.lon.sin(),
        (n * (1.0 - WGS84_E2) + g.height) * sin_lat,
    )
}

/// Inverts [`geodetic_to_ecef`] by fixed-point iteration on the latitude.
///
/// Errors on inputs closer than 1000 km to the geocentre or if the iteration
/// has not converged after 20 rounds, both of which signal corrupt input.
pub fn ecef_to_geodetic(p: &EcefPoint) -> Result<Geodetic, FrameError> {
    const MAX_ITER: usize = 20;
    let norm = p.norm();
    if !norm.is_finite() || norm <= 1.0e6 {
        return Err(FrameError::DegenerateEcef(norm));
    }
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let lon = p.y.atan2(p.x);

    // Near the poles the longitude/latitude iteration degenerates; handle
    // directly.
    if rho < 1.0e-9 {
        let lat = if p.z >= 0.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        return Ok(Geodetic {
            lat,
            lon,
            height: p.z.abs() - WGS84_B,
        });
    }

    let mut lat = (p.z / (rho * (1.0 - WGS84_E2))).atan();
    let mut height = 0.0;
    for _ in 0..MAX_ITER {
        let sin_lat = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        // Near the poles rho/cos(lat) is ill-conditioned; switch to the
        // z-based height above 80 degrees.
        let new_height = if lat.abs() < 1.396 {
            rho / lat.cos() - n
        } else {
            p.z / sin_lat - n * (1.0 - WGS84_E2)
        };
        let new_lat = (p.z / (rho * (1.0 - WGS84_E2 * n / (n + new_height)))).atan();
        // Height tolerance must stay above the ulp of the ~6.4e6 m terms
        // it is computed from, and scale with very large altitudes.
        let h_tol = 1.0e-8 + 1.0e-15 * new_height.abs();
        let converged = (new_lat - lat).abs() < 1.0e-14 && (new_height - height).abs() < h_tol;
        lat = new_lat;
        height = new_height;
        if converged {
            return Ok(Geodetic { lat, lon, height });
        }
    }
    Err(FrameError::NoConvergence(MAX_ITER))
}

/// A local east-north-up tangent frame.
#[derive(Debug, Clone)]
pub struct EnuFrame {
    origin: Geodetic,
    origin_ecef: EcefPoint,
    /// Rows are the east, north, up unit vectors expressed in ECEF.
    rot_ecef_to_enu: Matrix3<f64>,
}

impl EnuFrame {
    pub fn new(origin: Geodetic) -> Self {
        let (sin_lat, cos_lat) = (origin.lat.sin(), origin.lat.cos());
        let (sin_lon, cos_lon) = (origin.lon.sin(), origin.lon.cos());
        let rot = Matrix3::new(
            -sin_lon,
            cos_lon,
            0.0,
            -sin_lat * cos_lon,
            -sin_lat * sin_lon,
            cos_lat,
            cos_lat * cos_lon,
            cos_lat * sin_lon,
            sin_lat,
        );
        Self {
            origin,
            origin_ecef: geodetic_to_ecef(&origin),
            rot_ecef_to_enu: rot,
        }
    }

    pub fn origin(&self) -> &Geodetic {
        &self.origin
    }

    pub fn origin_ecef(&self) -> &EcefPoint {
        &self.origin_ecef
    }

    pub fn rotation_ecef_to_enu(&self) -> &Matrix3<f64> {
        &self.rot_ecef_to_enu
    }

    pub fn ecef_to_enu(&self, p: &EcefPoint) -> Vector3<f64> {
        self.rot_ecef_to_enu * (p.as_vector() - self.origin_ecef.as_vector())
    }

    pub fn enu_to_ecef(&self, enu: &Vector3<f64>) -> EcefPoint {
        EcefPoint::from_vector(
            &(self.rot_ecef_to_enu.transpose() * enu + self.origin_ecef.as_vector()),
        )
    }
}

/// Azimuth (rad, clockwise from north) and elevation (rad) of `target` as
/// seen from `observer`, both in the same ENU frame.
pub fn azimuth_elevation(observer: &Vector3<f64>, target: &Vector3<f64>) -> (f64, f64) {
    let los = target - observer;
    let range = los.norm();
    let el = (los.z / range).asin();
    let az = los.x.atan2(los.y);
    (az, el)
}
