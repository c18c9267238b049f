//! Ionospheric (Klobuchar) and tropospheric (UNB3 zenith delays with Niell
//! mapping) models.
//!
//! The same functions serve two roles: the simulator uses them to generate
//! the true delays, and the estimator uses them to correct measurements. The
//! estimator omits the ionospheric correction by default; the simulator still
//! generates ionospheric delay so the omission is stress-tested honestly.

use thiserror::Error;

use crate::constants::SPEED_OF_LIGHT;
use crate::frames::Geodetic;
use crate::time::GpsTime;

#[derive(Debug, Error)]
pub enum AtmosphereError {
    #[error("elevation {0:.4} rad below the troposphere model's validity floor")]
    ElevationTooLow(f64),
}

/// Broadcast Klobuchar coefficients (alpha in s, s/sc, ...; beta in s).
#[derive(Debug, Clone, Copy)]
pub struct KlobucharParams {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

impl KlobucharParams {
    /// A typical high-activity broadcast set; used by the simulator when no
    /// navigation file supplies coefficients.
    pub fn typical() -> Self {
        Self {
            alpha: [1.490e-8, 2.235e-8, -1.192e-7, -1.192e-7],
            beta: [9.216e4, 1.311e5, -6.554e4, -5.243e5],
        }
    }
}

/// Receiver-side inputs for the troposphere model.
#[derive(Debug, Clone, Copy)]
pub struct TropoState {
    pub latitude_rad: f64,
    pub day_of_year: u32,
    pub height_m: f64,
}

/// Which corrections the estimator applies.
#[derive(Debug, Clone, Copy)]
pub struct AtmosphereConfig {
    pub use_tropo: bool,
    pub use_iono: bool,
}

impl Default for AtmosphereConfig {
    fn default() -> Self {
        // Troposphere modelled, ionosphere omitted.
        Self {
            use_tropo: true,
            use_iono: false,
        }
    }
}

/// Slant delays of one satellite at one epoch (m).
#[derive(Debug, Clone, Copy, Default)]
pub struct SlantDelay {
    pub tropo_m: f64,
    pub iono_m: f64,
}

/// Reference Klobuchar slant ionospheric delay (m, non-negative).
///
/// Angles follow the broadcast algorithm's semicircle convention internally;
/// the public interface is radians.
pub fn klobuchar_delay(
    p: &KlobucharParams,
    user: &Geodetic,
    azimuth_rad: f64,
    elevation_rad: f64,
    t: GpsTime,
) -> f64 {
    let el_sc = elevation_rad / std::f64::consts::PI; // semicircles
    let lat_sc = user.lat / std::f64::consts::PI;
    let lon_sc = user.lon / std::f64::consts::PI;

    // Earth-centred angle to the ionospheric pierce point.
    let psi = 0.0137 / (el_sc + 0.11) - 0.022;
    let mut phi_i = lat_sc + psi * azimuth_rad.cos();
    phi_i = phi_i.clamp(-0.416, 0.416);
    let lambda_i = lon_sc + psi * azimuth_rad.sin() / (phi_i * std::f64::consts::PI).cos();
    let phi_m = phi_i + 0.064 * ((lambda_i - 1.617) * std::f64::consts::PI).cos();

    // Local time at the pierce point.
    let mut t_local = 4.32e4 * lambda_i + t.seconds_of_week();
    t_local = t_local.rem_euclid(86_400.0);

    let obliquity = 1.0 + 16.0 * (0.53 - el_sc).powi(3);

    let mut period = 0.0;
    let mut amplitude = 0.0;
    let mut phi_pow = 1.0;
    for k in 0..4 {
        period += p.beta[k] * phi_pow;
        amplitude += p.alpha[k] * phi_pow;
        phi_pow *= phi_m;
    }
    period = period.max(72_000.0);
    amplitude = amplitude.max(0.0);

    let x = 2.0 * std::f64::consts::PI * (t_local - 50_400.0) / period;
    let t_iono = if x.abs() < 1.57 {
        obliquity * (5.0e-9 + amplitude * (1.0 - x * x / 2.0 + x.powi(4) / 24.0))
    } else {
        obliquity * 5.0e-9
    };
    SPEED_OF_LIGHT * t_iono
}

// UNB3 lookup table: latitude rows at 15, 30, 45, 60, 75 degrees.
// Columns: pressure (mbar), temperature (K), water vapour pressure (mbar),
// temperature lapse rate (K/m), water vapour lapse factor (dimensionless).
const UNB3_LAT_DEG: [f64; 5] = [15.0, 30.0, 45.0, 60.0, 75.0];
const UNB3_AVG: [[f64; 5]; 5] = [
    [1013.25, 299.65, 26.31, 6.30e-3, 2.77],
    [1017.25, 294.15, 21.79, 6.05e-3, 3.15],
    [1015.75, 283.15, 11.66, 5.58e-3, 2.57],
    [1011.75, 272.15, 6.78, 5.39e-3, 1.81],
    [1013.00, 263.65, 4.11, 4.53e-3, 1.55],
];
const UNB3_AMP: [[f64; 5]; 5] = [
    [0.00, 0.00, 0.00, 0.00e-3, 0.00],
    [-3.75, 7.00, 8.85, 0.25e-3, 0.33],
    [-2.25, 11.00, 7.24, 0.32e-3, 0.46],
    [-1.75, 15.00, 5.36, 0.81e-3, 0.74],
    [-0.50, 14.50, 3.39, 0.62e-3, 0.30],
];

// Niell hydrostatic mapping coefficients (average and seasonal amplitude) and
// wet coefficients at the same latitude rows.
const NIELL_HYD_AVG: [[f64; 3]; 5] = [
    [1.2769934e-3, 2.9153695e-3, 62.610505e-3],
    [1.2683230e-3, 2.9152299e-3, 62.837393e-3],
    [1.2465397e-3, 2.9288445e-3, 63.721774e-3],
    [1.2196049e-3, 2.9022565e-3, 63.824265e-3],
    [1.2045996e-3, 2.9024912e-3, 64.258455e-3],
];
const NIELL_HYD_AMP: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [1.2709626e-5, 2.1414979e-5, 9.0128400e-5],
    [2.6523662e-5, 3.0160779e-5, 4.3497037e-5],
    [3.4000452e-5, 7.2562722e-5, 84.795348e-5],
    [4.1202191e-5, 11.723375e-5, 170.37206e-5],
];
const NIELL_WET: [[f64; 3]; 5] = [
    [5.8021897e-4, 1.4275268e-3, 4.3472961e-2],
    [5.6794847e-4, 1.5138625e-3, 4.6729510e-2],
    [5.8118019e-4, 1.4572752e-3, 4.3908931e-2],
    [5.9727542e-4, 1.5007428e-3, 4.4626982e-2],
    [6.1641693e-4, 1.7599082e-3, 5.4736038e-2],
];
const NIELL_HEIGHT: [f64; 3] = [2.53e-5, 5.49e-3, 1.14e-3];

/// Linear interpolation across the 5-row latitude tables.
fn interp_lat(table: &[[f64; 5]; 5], abs_lat_deg: f64, col: usize) -> f64 {
    interp_rows(&table.map(|row| row[col]), abs_lat_deg)
}

fn interp_rows(rows: &[f64; 5], abs_lat_deg: f64) -> f64 {
    if abs_lat_deg <= UNB3_LAT_DEG[0] {
        return rows[0];
    }
    if abs_lat_deg >= UNB3_LAT_DEG[4] {
        return rows[4];
    }
    let i = UNB3_LAT_DEG
        .windows(2)
        .position(|w| abs_lat_deg < w[1])
        .unwrap_or(3);
    let f = (abs_lat_deg - UNB3_LAT_DEG[i]) / (UNB3_LAT_DEG[i + 1] - UNB3_LAT_DEG[i]);
    rows[i] + f * (rows[i + 1] - rows[i])
}

/// Seasonal cosine: minimum on day 28 (north) or 211 (south).
fn seasonal(avg: f64, amp: f64, day_of_year: u32, southern: bool) -> f64 {
    let dmin = if southern { 211.0 } else { 28.0 };
    avg - amp * ((day_of_year as f64 - dmin) * 2.0 * std::f64::consts::PI / 365.25).cos()
}

/// Normalized three-term continued fraction used by the Niell mapping.
fn niell_fraction(sin_el: f64, a: f64, b: f64, c: f64) -> f64 {
    let top = 1.0 + a / (1.0 + b / (1.0 + c));
    let bottom = sin_el + a / (sin_el + b / (sin_el + c));
    top / bottom
}

/// UNB3 zenith delays (hydrostatic, wet) in metres.
pub fn unb3_zenith_delays(s: &TropoState) -> (f64, f64) {
    const K1: f64 = 77.604; // K/mbar
    const K2: f64 = 382_000.0; // K^2/mbar
    const RD: f64 = 287.054; // J/(kg K)
    const GM: f64 = 9.784; // m/s^2
    const G: f64 = 9.80665; // m/s^2

    let abs_lat = s.latitude_rad.abs().to_degrees();
    let southern = s.latitude_rad < 0.0;
    let doy = s.day_of_year;

    let p = seasonal(
        interp_lat(&UNB3_AVG, abs_lat, 0),
        interp_lat(&UNB3_AMP, abs_lat, 0),
        doy,
        southern,
    );
    let t = seasonal(
        interp_lat(&UNB3_AVG, abs_lat, 1),
        interp_lat(&UNB3_AMP, abs_lat, 1),
        doy,
        southern,
    );
    let e = seasonal(
        interp_lat(&UNB3_AVG, abs_lat, 2),
        interp_lat(&UNB3_AMP, abs_lat, 2),
        doy,
        southern,
    );
    let beta = seasonal(
        interp_lat(&UNB3_AVG, abs_lat, 3),
        interp_lat(&UNB3_AMP, abs_lat, 3),
        doy,
        southern,
    );
    let lambda = seasonal(
        interp_lat(&UNB3_AVG, abs_lat, 4),
        interp_lat(&UNB3_AMP, abs_lat, 4),
        doy,
        southern,
    );

    let h = s.height_m;
    let base = (1.0 - beta * h / t).max(1.0e-6);

    let zh0 = 1.0e-6 * K1 * RD * p / GM;
    let zh = zh0 * base.powf(G / (RD * beta));

    let zw0 = 1.0e-6 * K2 * RD / (GM * (lambda + 1.0) - beta * RD) * (e / t);
    let zw = zw0 * base.powf((lambda + 1.0) * G / (RD * beta) - 1.0);

    (zh, zw)
}

/// Niell hydrostatic and wet mapping factors at `elevation_rad`.
pub fn niell_mapping(s: &TropoState, elevation_rad: f64) -> (f64, f64) {
    let abs_lat = s.latitude_rad.abs().to_degrees();
    let southern = s.latitude_rad < 0.0;
    let sin_el = elevation_rad.sin();

    let a_h = seasonal(
        interp_rows(&NIELL_HYD_AVG.map(|r| r[0]), abs_lat),
        interp_rows(&NIELL_HYD_AMP.map(|r| r[0]), abs_lat),
        s.day_of_year,
        southern,
    );
    let b_h = seasonal(
        interp_rows(&NIELL_HYD_AVG.map(|r| r[1]), abs_lat),
        interp_rows(&NIELL_HYD_AMP.map(|r| r[1]), abs_lat),
        s.day_of_year,
        southern,
    );
    let c_h = seasonal(
        interp_rows(&NIELL_HYD_AVG.map(|r| r[2]), abs_lat),
        interp_rows(&NIELL_HYD_AMP.map(|r| r[2]), abs_lat),
        s.day_of_year,
        southern,
    );

    let mut m_h = niell_fraction(sin_el, a_h, b_h, c_h);
    // Height correction, per kilometre of station height.
    let dm =
        1.0 / sin_el - niell_fraction(sin_el, NIELL_HEIGHT[0], NIELL_HEIGHT[1], NIELL_HEIGHT[2]);
    m_h += dm * s.height_m / 1000.0;

    let a_w = interp_rows(&NIELL_WET.map(|r| r[0]), abs_lat);
    let b_w = interp_rows(&NIELL_WET.map(|r| r[1]), abs_lat);
    let c_w = interp_rows(&NIELL_WET.map(|r| r[2]), abs_lat);
    let m_w = niell_fraction(sin_el, a_w, b_w, c_w);

    (m_h, m_w)
}

/// Total slant tropospheric delay: UNB3 zenith delays mapped by Niell.
///
/// Errors below 0.05 rad elevation where the mapping is invalid.
pub fn tropo_delay(s: &TropoState, elevation_rad: f64) -> Result<f64, AtmosphereError> {
    if elevation_rad <= 0.05 {
        return Err(AtmosphereError::ElevationTooLow(elevation_rad));
    }
    let (zh, zw) = unb3_zenith_delays(s);
    let (mh, mw) = niell_mapping(s, elevation_rad);
    Ok(zh * mh + zw * mw)
}

/// Double difference (epoch b minus a, other satellite minus reference) of
/// modelled atmospheric delays, to be subtracted from the TDCP observable.
///
/// Sign convention per the phase-range model: troposphere adds to the phase
/// range, ionosphere subtracts.
pub fn differenced_atmo_correction(
    ref_a: &SlantDelay,
    ref_b: &SlantDelay,
    other_a: &SlantDelay,
    other_b: &SlantDelay,
) -> f64 {
    let tropo_dd = (other_b.tropo_m - other_a.tropo_m) - (ref_b.tropo_m - ref_a.tropo_m);
    let iono_dd = (other_b.iono_m - other_a.iono_m) - (ref_b.iono_m - ref_a.iono_m);
    tropo_dd - iono_dd
}
