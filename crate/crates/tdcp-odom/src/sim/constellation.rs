//! Synthetic GPS constellation built from desired sky positions.
//!
//! Each satellite is placed on a circular GPS-like shell (a = 26560 km,
//! i = 55 deg) so that it appears at a requested azimuth/elevation from the
//! scenario origin at the scenario start time. The ascending/descending
//! branch choice controls how the sky position evolves over the run.

use nalgebra::Vector3;

use crate::constants::OMEGA_EARTH;
use crate::ephemeris::BroadcastEphemeris;
use crate::frames::{geodetic_to_ecef, EnuFrame, Geodetic};
use crate::ingest::SatId;
use crate::time::GpsTime;

/// Sky placement request for one synthetic satellite.
#[derive(Debug, Clone, Copy)]
pub struct SatTarget {
    pub prn: u8,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Use the ascending-latitude branch of the orbit.
    pub ascending: bool,
}

const SHELL_RADIUS_M: f64 = 26_559_700.0;
const INCLINATION_RAD: f64 = 0.959_931_088_596_881_5; // 55 deg

/// Default nine-satellite geometry: six solid mid/high satellites, one that
/// sets early, one that rises late, and one low but steady. Tuned so the
/// default scenario sees a median of about seven satellites above a 10 deg
/// mask with the visible set changing during the run.
pub fn default_targets() -> Vec<SatTarget> {
    vec![
        SatTarget {
            prn: 2,
            azimuth_deg: 45.0,
            elevation_deg: 72.0,
            ascending: true,
        },
        SatTarget {
            prn: 5,
            azimuth_deg: 180.0,
            elevation_deg: 50.0,
            ascending: false,
        },
        SatTarget {
            prn: 7,
            azimuth_deg: 160.0,
            elevation_deg: 47.0,
            ascending: true,
        },
        SatTarget {
            prn: 9,
            azimuth_deg: 250.0,
            elevation_deg: 39.0,
            ascending: true,
        },
        SatTarget {
            prn: 12,
            azimuth_deg: 95.0,
            elevation_deg: 33.0,
            ascending: false,
        },
        SatTarget {
            prn: 15,
            azimuth_deg: 200.0,
            elevation_deg: 24.0,
            ascending: true,
        },
        SatTarget {
            prn: 18,
            azimuth_deg: 300.0,
            elevation_deg: 16.0,
            ascending: false,
        },
        SatTarget {
            prn: 21,
            azimuth_deg: 130.0,
            elevation_deg: 10.25,
            ascending: false,
        },
        SatTarget {
            prn: 26,
            azimuth_deg: 290.0,
            elevation_deg: 8.9,
            ascending: true,
        },
    ]
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(std::f64::consts::TAU);
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Builds circular-orbit broadcast ephemerides placing each target at its
/// requested sky position at `t0` as seen from `origin`.
///
/// Panics if a target's sub-satellite latitude exceeds the shell's
/// inclination (such sky positions are unreachable, like the real northern
/// hole of the GPS constellation at mid latitudes).
pub fn synthetic_constellation(
    origin: &Geodetic,
    t0: GpsTime,
    targets: &[SatTarget],
) -> Vec<BroadcastEphemeris> {
    let frame = EnuFrame::new(*origin);
    let rx = geodetic_to_ecef(origin).as_vector();
    let mut out = Vec::with_capacity(targets.len());

    for target in targets {
        let az = target.azimuth_deg.to_radians();
        let el = target.elevation_deg.to_radians();
        // Line of sight in ENU, then ECEF.
        let los_enu = Vector3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin());
        let los = frame.rotation_ecef_to_enu().transpose() * los_enu;
        // Intersect with the orbital shell.
        let b = rx.dot(&los);
        let c = rx.norm_squared() - SHELL_RADIUS_M * SHELL_RADIUS_M;
        let range = -b + (b * b - c).sqrt();
        let sat = rx + range * los;
        let n = sat / sat.norm();

        // Orbit through that point at inclination i: argument of latitude
        // from the sub-satellite latitude, node from the longitude.
        let sin_u = n.z / INCLINATION_RAD.sin();
        assert!(
            sin_u.abs() <= 1.0,
            "target prn {} az {} el {} is outside the constellation's latitude band",
            target.prn,
            target.azimuth_deg,
            target.elevation_deg
        );
        let u = if target.ascending {
            sin_u.asin()
        } else {
            std::f64::consts::PI - sin_u.asin()
        };
        let lambda = n.y.atan2(n.x);
        let node_ecef = lambda - (u.sin() * INCLINATION_RAD.cos()).atan2(u.cos());
        // omega_k(toe) = omega0 - omega_e * toe_sow. Wrapped so the value
        // survives the 12-digit navigation-file quantization.
        let omega0 = wrap_angle(node_ecef + OMEGA_EARTH * t0.seconds_of_week());

        out.push(BroadcastEphemeris {
            sat: SatId(target.prn),
            toe: t0,
            toc: t0,
            sqrt_a: SHELL_RADIUS_M.sqrt(),
            eccentricity: 0.0,
            i0: INCLINATION_RAD,
            idot: 0.0,
            omega0,
            omega_dot: 0.0,
            omega: 0.0,
            m0: wrap_angle(u),
            delta_n: 0.0,
            cuc: 0.0,
            cus: 0.0,
            crc: 0.0,
            crs: 0.0,
            cic: 0.0,
            cis: 0.0,
            // Distinct clock offsets per satellite, microsecond scale.
            af0: (target.prn as f64 - 12.0) * 2.0e-6,
            af1: (target.prn as f64 - 12.0) * 3.0e-13,
            af2: 0.0,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::sat_state;
    use crate::frames::azimuth_elevation;

    #[test]
    fn targets_land_at_requested_sky_positions() {
        let origin = Geodetic {
            lat: 45.0f64.to_radians(),
            lon: -79.0f64.to_radians(),
            height: 150.0,
        };
        let t0 = GpsTime::new(2360, 345_600.0);
        let targets = default_targets();
        let ephs = synthetic_constellation(&origin, t0, &targets);
        let frame = EnuFrame::new(origin);
        let rx_enu = Vector3::zeros();

        for (target, eph) in targets.iter().zip(&ephs) {
            let s = sat_state(eph, t0).unwrap();
            let sat_enu = frame.ecef_to_enu(&s.position);
            let (az, el) = azimuth_elevation(&rx_enu, &sat_enu);
            let az_deg = az.to_degrees().rem_euclid(360.0);
            let el_deg = el.to_degrees();
            let az_err = (az_deg - target.azimuth_deg)
                .abs()
                .min(360.0 - (az_deg - target.azimuth_deg).abs());
            assert!(
                az_err < 0.2,
                "prn {} az {az_deg} vs {}",
                target.prn,
                target.azimuth_deg
            );
            assert!(
                (el_deg - target.elevation_deg).abs() < 0.2,
                "prn {} el {el_deg} vs {}",
                target.prn,
                target.elevation_deg
            );
            // Shell radius respected.
            assert!((s.position.norm() - SHELL_RADIUS_M).abs() < 1.0);
        }
    }
}
