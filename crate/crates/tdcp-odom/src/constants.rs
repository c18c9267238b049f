//! Physical constants: WGS-84 ellipsoid, GPS orbital model, L1 signal.
//!
//! Values follow the interface control values used by broadcast ephemeris
//! consumers; they are collected here so every module shares one table.

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;

/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// WGS-84 semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);

/// WGS-84 first eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Earth gravitational parameter used by the GPS orbital model (m^3/s^2).
pub const GM_EARTH: f64 = 3.986_005e14;

/// Earth rotation rate (rad/s).
pub const OMEGA_EARTH: f64 = 7.292_115_146_7e-5;

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// GPS L1 carrier frequency (Hz).
pub const L1_FREQUENCY_HZ: f64 = 1_575.42e6;

/// GPS L1 carrier wavelength (m).
pub const L1_WAVELENGTH_M: f64 = SPEED_OF_LIGHT / L1_FREQUENCY_HZ;

/// Relativistic clock correction constant -2*sqrt(mu)/c^2 (s / sqrt(m)).
pub const RELATIVISTIC_F: f64 = -4.442_807_633e-10;

/// Fixed GPS-UTC offset (s). Leap seconds beyond this are not modelled.
pub const GPS_UTC_LEAP_SECONDS: i64 = 18;

/// Seconds per GPS week.
pub const SECONDS_PER_WEEK: f64 = 604_800.0;

/// Nanoseconds per GPS week.
pub const NANOS_PER_WEEK: i64 = 604_800_000_000_000;
