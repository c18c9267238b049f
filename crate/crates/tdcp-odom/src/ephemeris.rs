//! Broadcast ephemeris propagation: satellite position, velocity, and clock
//! bias at arbitrary times.
//!
//! Positions follow the standard GPS quasi-Keplerian expansion; velocity is
//! the analytic derivative of the same expansion. Satellites move at about
//! 3.9 km/s, so callers recompute the state at every measurement epoch rather
//! than caching positions across epochs.

use nalgebra::Vector3;
use thiserror::Error;

use crate::constants::{GM_EARTH, OMEGA_EARTH, RELATIVISTIC_F, SPEED_OF_LIGHT};
use crate::frames::EcefPoint;
use crate::ingest::SatId;
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum EphemerisError {
    #[error("ephemeris for {sat} stale at {t}: |t - toe| = {age:.0} s exceeds 4 h")]
    Stale { sat: SatId, t: GpsTime, age: f64 },
    #[error("Kepler iteration for {0} did not converge in 30 rounds")]
    KeplerDiverged(SatId),
}

/// Quasi-Keplerian broadcast ephemeris for one satellite, plus its clock
/// polynomial.
#[derive(Debug, Clone, Copy)]
pub struct BroadcastEphemeris {
    pub sat: SatId,
    /// Reference time of ephemeris.
    pub toe: GpsTime,
    /// Square root of the semi-major axis (m^1/2).
    pub sqrt_a: f64,
    pub eccentricity: f64,
    /// Inclination at toe (rad) and its rate (rad/s).
    pub i0: f64,
    pub idot: f64,
    /// Right ascension at the weekly epoch (rad) and its rate (rad/s).
    pub omega0: f64,
    pub omega_dot: f64,
    /// Argument of perigee (rad).
    pub omega: f64,
    /// Mean anomaly at toe (rad) and mean motion correction (rad/s).
    pub m0: f64,
    pub delta_n: f64,
    /// Harmonic corrections: argument of latitude, radius, inclination.
    pub cuc: f64,
    pub cus: f64,
    pub crc: f64,
    pub crs: f64,
    pub cic: f64,
    pub cis: f64,
    /// Clock polynomial (s, s/s, s/s^2) about `toc`.
    pub af0: f64,
    pub af1: f64,
    pub af2: f64,
    pub toc: GpsTime,
}

/// Satellite state at one instant.
#[derive(Debug, Clone, Copy)]
pub struct SatState {
    pub position: EcefPoint,
    pub velocity: Vector3<f64>,
    /// Clock bias (s), including the relativistic eccentricity term when
    /// enabled.
    pub clock_bias: f64,
}

/// Validity window for broadcast ephemerides.
const MAX_AGE_S: f64 = 4.0 * 3600.0;

/// Propagates the ephemeris to `t`, with the relativistic clock term applied.
pub fn sat_state(eph: &BroadcastEphemeris, t: GpsTime) -> Result<SatState, EphemerisError> {
    sat_state_with_options(eph, t, true)
}

/// Propagation with the relativistic clock correction toggleable. Double
/// differencing largely cancels the term, but the simulator needs it for
/// honest pseudorange levels.
pub fn sat_state_with_options(
    eph: &BroadcastEphemeris,
    t: GpsTime,
    relativistic_clock: bool,
) -> Result<SatState, EphemerisError> {
    let tk = t.diff_seconds(&eph.toe);
    if tk.abs() > MAX_AGE_S {
        return Err(EphemerisError::Stale {
            sat: eph.sat,
            t,
            age: tk.abs(),
        });
    }

    let a = eph.sqrt_a * eph.sqrt_a;
    let n0 = (GM_EARTH / (a * a * a)).sqrt();
    let n = n0 + eph.delta_n;
    let e = eph.eccentricity;

    // Kepler's equation by Newton iteration.
    let mk = eph.m0 + n * tk;
    let mut ek = mk;
    let mut converged = false;
    for _ in 0..30 {
        let delta = (ek - e * ek.sin() - mk) / (1.0 - e * ek.cos());
        ek -= delta;
        if delta.abs() < 1.0e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EphemerisError::KeplerDiverged(eph.sat));
    }

    let (sin_e, cos_e) = ek.sin_cos();
    let one_minus_ecos = 1.0 - e * cos_e;
    let nu = ((1.0 - e * e).sqrt() * sin_e).atan2(cos_e - e);
    let phi = nu + eph.omega;
    let (sin_2phi, cos_2phi) = (2.0 * phi).sin_cos();

    let du = eph.cus * sin_2phi + eph.cuc * cos_2phi;
    let dr = eph.crs * sin_2phi + eph.crc * cos_2phi;
    let di = eph.cis * sin_2phi + eph.cic * cos_2phi;

    let u = phi + du;
    let r = a * one_minus_ecos + dr;
    let i = eph.i0 + di + eph.idot * tk;

    let (sin_u, cos_u) = u.sin_cos();
    let x_orb = r * cos_u;
    let y_orb = r * sin_u;

    // Longitude of ascending node in ECEF at t.
    let omega_k =
        eph.omega0 + (eph.omega_dot - OMEGA_EARTH) * tk - OMEGA_EARTH * eph.toe.seconds_of_week();
    let (sin_om, cos_om) = omega_k.sin_cos();
    let (sin_i, cos_i) = i.sin_cos();

    let x = x_orb * cos_om - y_orb * cos_i * sin_om;
    let y = x_orb * sin_om + y_orb * cos_i * cos_om;
    let z = y_orb * sin_i;

    // Analytic time derivatives of the same expansion.
    let ek_dot = n / one_minus_ecos;
    let nu_dot = ek_dot * (1.0 - e * e).sqrt() / one_minus_ecos;
    let du_dot = 2.0 * nu_dot * (eph.cus * cos_2phi - eph.cuc * sin_2phi);
    let dr_dot = 2.0 * nu_dot * (eph.crs * cos_2phi - eph.crc * sin_2phi);
    let di_dot = 2.0 * nu_dot * (eph.cis * cos_2phi - eph.cic * sin_2phi);

    let u_dot = nu_dot + du_dot;
    let r_dot = a * e * sin_e * ek_dot + dr_dot;
    let i_dot = eph.idot + di_dot;
    let omega_k_dot = eph.omega_dot - OMEGA_EARTH;

    let x_orb_dot = r_dot * cos_u - r * sin_u * u_dot;
    let y_orb_dot = r_dot * sin_u + r * cos_u * u_dot;

    let vx = x_orb_dot * cos_om - y_orb_dot * cos_i * sin_om + y_orb * sin_i * sin_om * i_dot
        - y * omega_k_dot;
    let vy = x_orb_dot * sin_om + y_orb_dot * cos_i * cos_om - y_orb * sin_i * cos_om * i_dot
        + x * omega_k_dot;
    let vz = y_orb_dot * sin_i + y_orb * cos_i * i_dot;

    let dt_clock = t.diff_seconds(&eph.toc);
    let mut clock_bias = eph.af0 + eph.af1 * dt_clock + eph.af2 * dt_clock * dt_clock;
    if relativistic_clock {
        clock_bias += RELATIVISTIC_F * e * eph.sqrt_a * sin_e;
    }

    Ok(SatState {
        position: EcefPoint::new(x, y, z),
        velocity: Vector3::new(vx, vy, vz),
        clock_bias,
    })
}

/// Satellite position at signal emission, and the emission-time clock bias.
///
/// Iterates the emission time `t_e = t_r - rho/c` twice, then rotates the
/// position about z by the Earth rotation during transit so that ranges taken
/// against a receiver expressed at reception time are geometrically
/// consistent (Sagnac correction).
pub fn signal_emission_state(
    eph: &BroadcastEphemeris,
    receive_time: GpsTime,
    approx_receiver: &EcefPoint,
) -> Result<(EcefPoint, f64), EphemerisError> {
    signal_emission_state_with_rate(eph, receive_time, approx_receiver, OMEGA_EARTH)
}

pub(crate) fn signal_emission_state_with_rate(
    eph: &BroadcastEphemeris,
    receive_time: GpsTime,
    approx_receiver: &EcefPoint,
    earth_rate: f64,
) -> Result<(EcefPoint, f64), EphemerisError> {
    let rx = approx_receiver.as_vector();
    let mut emission = receive_time;
    let mut state = sat_state(eph, emission)?;
    for _ in 0..2 {
        let rho = (state.position.as_vector() - rx).norm();
        emission = receive_time.add_seconds(-rho / SPEED_OF_LIGHT);
        state = sat_state(eph, emission)?;
    }
    let transit = receive_time.diff_seconds(&emission);
    let angle = earth_rate * transit;
    let (sin_a, cos_a) = angle.sin_cos();
    let p = state.position;
    let rotated = EcefPoint::new(cos_a * p.x + sin_a * p.y, -sin_a * p.x + cos_a * p.y, p.z);
    Ok((rotated, state.clock_bias))
}

/// Picks the ephemeris with toe nearest to `t` for `sat`, ties broken toward
/// the earlier record.
pub fn select_ephemeris(
    ephemerides: &[BroadcastEphemeris],
    sat: SatId,
    t: GpsTime,
) -> Option<&BroadcastEphemeris> {
    ephemerides.iter().filter(|e| e.sat == sat).min_by(|a, b| {
        let da = t.diff_seconds(&a.toe).abs();
        let db = t.diff_seconds(&b.toe).abs();
        da.partial_cmp(&db).unwrap().then_with(|| a.toe.cmp(&b.toe))
    })
}
