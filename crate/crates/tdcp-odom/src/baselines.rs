//! Pseudorange and integrated-Doppler baselines.
//!
//! Both consume the same parsed observation epochs as the TDCP pipeline so
//! comparisons stay fair.

use nalgebra::{Matrix4, Vector3, Vector4};
use thiserror::Error;

use crate::atmosphere::{klobuchar_delay, tropo_delay, AtmosphereConfig, TropoState};
use crate::constants::{L1_WAVELENGTH_M, SPEED_OF_LIGHT};
use crate::ephemeris::{sat_state, select_ephemeris, signal_emission_state};
use crate::frames::{azimuth_elevation, ecef_to_geodetic, EcefPoint, EnuFrame};
use crate::ingest::{NavData, ObservationEpoch};
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("only {0} usable satellites at {1}; need at least 4")]
    TooFewSatellites(usize, GpsTime),
    #[error("pseudorange solution diverged at {0}")]
    Diverged(GpsTime),
    #[error("normal matrix singular at {0}")]
    Singular(GpsTime),
    #[error(transparent)]
    Frame(#[from] crate::frames::FrameError),
    #[error(transparent)]
    Ephemeris(#[from] crate::ephemeris::EphemerisError),
    #[error("no epochs")]
    Empty,
}

/// Single-epoch pseudorange solution.
#[derive(Debug, Clone, Copy)]
pub struct PseudorangeFix {
    pub t: GpsTime,
    pub position: EcefPoint,
    /// Receiver clock bias expressed in metres.
    pub clock_bias_m: f64,
    pub used_sats: usize,
}

/// Iterated least squares over position and clock bias.
///
/// Atmospheric corrections (per `atmo`) switch on once the position estimate
/// is good enough to give meaningful elevations.
pub fn pseudorange_fix(
    epoch: &ObservationEpoch,
    nav: &NavData,
    atmo: &AtmosphereConfig,
) -> Result<PseudorangeFix, BaselineError> {
    if epoch.records.len() < 4 {
        return Err(BaselineError::TooFewSatellites(
            epoch.records.len(),
            epoch.t,
        ));
    }
    let mut x = Vector4::<f64>::zeros(); // [ecef position; clock bias (m)]
    let mut converged = false;
    for _ in 0..20 {
        let pos = EcefPoint::new(x[0], x[1], x[2]);
        // Engage atmosphere only for terrestrial iterates; wild intermediate
        // solutions would feed garbage elevations into the models.
        let plausible = (6.2e6..6.6e6).contains(&pos.norm());
        let (frame, tropo_state) = if plausible {
            let g = ecef_to_geodetic(&pos)?;
            (
                Some(EnuFrame::new(g)),
                Some(TropoState {
                    latitude_rad: g.lat,
                    day_of_year: epoch.t.day_of_year(),
                    height_m: g.height,
                }),
            )
        } else {
            (None, None)
        };

        let mut h = Matrix4::<f64>::zeros();
        let mut g_vec = Vector4::<f64>::zeros();
        let mut used = 0usize;
        for r in &epoch.records {
            let Some(eph) = select_ephemeris(&nav.ephemerides, r.sat, epoch.t) else {
                continue;
            };
            let (sat_pos, sat_clock) = signal_emission_state(eph, epoch.t, &pos)?;
            let los = sat_pos.as_vector() - pos.as_vector();
            let rho = los.norm();
            let u = los / rho;

            let mut correction = 0.0;
            if let (Some(frame), Some(ts)) = (&frame, &tropo_state) {
                let rx_enu = frame.ecef_to_enu(&pos);
                let sat_enu = frame.ecef_to_enu(&sat_pos);
                let (az, el) = azimuth_elevation(&rx_enu, &sat_enu);
                if el > 0.05 {
                    if atmo.use_tropo {
                        correction += tropo_delay(ts, el).unwrap_or(0.0);
                    }
                    if atmo.use_iono {
                        if let Some(k) = &nav.klobuchar {
                            correction += klobuchar_delay(k, frame.origin(), az, el, epoch.t);
                        }
                    }
                }
            }

            let predicted = rho + x[3] - SPEED_OF_LIGHT * sat_clock + correction;
            let residual = r.pseudorange_m - predicted;
            let row = Vector4::new(-u.x, -u.y, -u.z, 1.0);
            h += row * row.transpose();
            g_vec += row * residual;
            used += 1;
        }
        if used < 4 {
            return Err(BaselineError::TooFewSatellites(used, epoch.t));
        }
        let delta = h
            .lu()
            .solve(&g_vec)
            .ok_or(BaselineError::Singular(epoch.t))?;
        x += delta;
        if !x.iter().all(|v| v.is_finite()) || x.fixed_rows::<3>(0).norm() > 1.0e9 {
            return Err(BaselineError::Diverged(epoch.t));
        }
        if delta.fixed_rows::<3>(0).norm() < 1.0e-4 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(BaselineError::Diverged(epoch.t));
    }
    Ok(PseudorangeFix {
        t: epoch.t,
        position: EcefPoint::new(x[0], x[1], x[2]),
        clock_bias_m: x[3],
        used_sats: epoch.records.len(),
    })
}

/// A baseline position track in the ENU frame of its first fix.
#[derive(Debug, Clone)]
pub struct BaselineTrack {
    pub frame: EnuFrame,
    pub samples: Vec<BaselineSample>,
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineSample {
    pub t: GpsTime,
    pub position: Vector3<f64>,
    /// Set when the epoch could not be solved and was bridged instead.
    pub flagged: bool,
}

/// Epoch-wise pseudorange positioning. Unsolvable epochs are skipped.
pub fn pseudorange_track(
    epochs: &[ObservationEpoch],
    nav: &NavData,
    atmo: &AtmosphereConfig,
) -> Result<BaselineTrack, BaselineError> {
    let mut frame: Option<EnuFrame> = None;
    let mut samples = Vec::new();
    for epoch in epochs {
        match pseudorange_fix(epoch, nav, atmo) {
            Ok(fix) => {
                if frame.is_none() {
                    frame = Some(EnuFrame::new(ecef_to_geodetic(&fix.position)?));
                }
                let f = frame.as_ref().unwrap();
                samples.push(BaselineSample {
                    t: epoch.t,
                    position: f.ecef_to_enu(&fix.position),
                    flagged: false,
                });
            }
            Err(BaselineError::TooFewSatellites(..)) => continue,
            Err(e) => return Err(e),
        }
    }
    match frame {
        Some(frame) if !samples.is_empty() => Ok(BaselineTrack { frame, samples }),
        _ => Err(BaselineError::Empty),
    }
}

/// Doppler velocity solve at one epoch: receiver velocity (ENU) and clock
/// drift (m/s) from range-rate residuals.
pub fn doppler_velocity(
    epoch: &ObservationEpoch,
    nav: &NavData,
    frame: &EnuFrame,
    rx_enu: &Vector3<f64>,
) -> Result<Vector3<f64>, BaselineError> {
    if epoch.records.len() < 4 {
        return Err(BaselineError::TooFewSatellites(
            epoch.records.len(),
            epoch.t,
        ));
    }
    let rx_ecef = frame.enu_to_ecef(rx_enu);
    let mut h = Matrix4::<f64>::zeros();
    let mut g_vec = Vector4::<f64>::zeros();
    let mut used = 0usize;
    for r in &epoch.records {
        let Some(eph) = select_ephemeris(&nav.ephemerides, r.sat, epoch.t) else {
            continue;
        };
        let (sat_pos, _) = signal_emission_state(eph, epoch.t, &rx_ecef)?;
        let state = sat_state(eph, epoch.t)?;
        let sat_enu = frame.ecef_to_enu(&sat_pos);
        let los = sat_enu - rx_enu;
        let u = los / los.norm();
        let sat_vel_enu = frame.rotation_ecef_to_enu() * state.velocity;
        let sat_clock_drift = eph.af1 + 2.0 * eph.af2 * epoch.t.diff_seconds(&eph.toc);

        let measured_rate = -L1_WAVELENGTH_M * r.doppler_hz;
        let y = measured_rate - u.dot(&sat_vel_enu) + SPEED_OF_LIGHT * sat_clock_drift;
        let row = Vector4::new(-u.x, -u.y, -u.z, 1.0);
        h += row * row.transpose();
        g_vec += row * y;
        used += 1;
    }
    if used < 4 {
        return Err(BaselineError::TooFewSatellites(used, epoch.t));
    }
    let x = h
        .lu()
        .solve(&g_vec)
        .ok_or(BaselineError::Singular(epoch.t))?;
    Ok(x.fixed_rows::<3>(0).into_owned())
}

/// Integrated-Doppler positioning: per-epoch velocity least squares,
/// trapezoidal integration from the first pseudorange fix. Epochs without
/// enough satellites hold the last velocity and are flagged.
pub fn doppler_track(
    epochs: &[ObservationEpoch],
    nav: &NavData,
    atmo: &AtmosphereConfig,
) -> Result<BaselineTrack, BaselineError> {
    let first = epochs.first().ok_or(BaselineError::Empty)?;
    let fix = pseudorange_fix(first, nav, atmo)?;
    let frame = EnuFrame::new(ecef_to_geodetic(&fix.position)?);
    let mut position = frame.ecef_to_enu(&fix.position);

    let mut samples = vec![BaselineSample {
        t: first.t,
        position,
        flagged: false,
    }];
    let mut last_vel = doppler_velocity(first, nav, &frame, &position)?;
    let mut last_t = first.t;
    for epoch in &epochs[1..] {
        let dt = epoch.t.diff_seconds(&last_t);
        // Solve at the velocity-predicted position so the line-of-sight
        // vectors belong to this epoch, not the previous one.
        let predicted = position + last_vel * dt;
        let (vel, flagged) = match doppler_velocity(epoch, nav, &frame, &predicted) {
            Ok(v) => (v, false),
            Err(BaselineError::TooFewSatellites(..)) => (last_vel, true),
            Err(e) => return Err(e),
        };
        position += 0.5 * (last_vel + vel) * dt;
        samples.push(BaselineSample {
            t: epoch.t,
            position,
            flagged,
        });
        last_vel = vel;
        last_t = epoch.t;
    }
    Ok(BaselineTrack { frame, samples })
}
