//! GPS time as integer nanoseconds within an integer week.
//!
//! Storing whole nanoseconds keeps epoch differencing exact at week
//! boundaries and avoids float accumulation over multi-minute runs.

use std::fmt;

use crate::constants::NANOS_PER_WEEK;

/// A GPS time instant: week number plus nanoseconds into the week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GpsTime {
    week: i32,
    nanos: i64,
}

impl GpsTime {
    /// Builds a time from a week number and (fractional) seconds of week,
    /// rounding to the nearest nanosecond and normalizing week rollovers.
    pub fn new(week: i32, seconds_of_week: f64) -> Self {
        let nanos = (seconds_of_week * 1.0e9).round() as i64;
        Self::from_week_nanos(week, nanos)
    }

    /// Builds a time from whole nanoseconds of week, normalizing rollovers.
    pub fn from_week_nanos(week: i32, nanos: i64) -> Self {
        let (mut week, mut nanos) = (week, nanos);
        while nanos < 0 {
            nanos += NANOS_PER_WEEK;
            week -= 1;
        }
        while nanos >= NANOS_PER_WEEK {
            nanos -= NANOS_PER_WEEK;
            week += 1;
        }
        Self { week, nanos }
    }

    pub fn week(&self) -> i32 {
        self.week
    }

    /// Seconds of week in [0, 604800).
    pub fn seconds_of_week(&self) -> f64 {
        self.nanos as f64 / 1.0e9
    }

    pub fn nanos_of_week(&self) -> i64 {
        self.nanos
    }

    /// `self - other` in seconds, exact across week boundaries.
    pub fn diff_seconds(&self, other: &GpsTime) -> f64 {
        let dw = (self.week - other.week) as i128;
        let dn = dw * NANOS_PER_WEEK as i128 + (self.nanos - other.nanos) as i128;
        dn as f64 / 1.0e9
    }

    /// Adds (possibly negative) seconds, rounded to the nearest nanosecond.
    pub fn add_seconds(&self, seconds: f64) -> GpsTime {
        let dn = (seconds * 1.0e9).round() as i64;
        Self::from_week_nanos(self.week, self.nanos + dn)
    }

    /// Days since the GPS epoch (1980-01-06) as of this instant.
    fn days_since_gps_epoch(&self) -> i64 {
        self.week as i64 * 7 + self.nanos / 86_400_000_000_000
    }

    /// Calendar date and time-of-day (y, m, d, h, min, seconds).
    pub fn to_civil(&self) -> (i32, u32, u32, u32, u32, f64) {
        let days = self.days_since_gps_epoch() + GPS_EPOCH_DAYS;
        let (y, m, d) = civil_from_days(days);
        let day_nanos = self.nanos % 86_400_000_000_000;
        let h = day_nanos / 3_600_000_000_000;
        let rem = day_nanos % 3_600_000_000_000;
        let min = rem / 60_000_000_000;
        let sec = (rem % 60_000_000_000) as f64 / 1.0e9;
        (y, m as u32, d as u32, h as u32, min as u32, sec)
    }

    /// Builds a GPS time from a calendar date and time-of-day (GPS scale).
    pub fn from_civil(y: i32, m: u32, d: u32, h: u32, min: u32, sec: f64) -> GpsTime {
        let days = days_from_civil(y, m as i64, d as i64) - GPS_EPOCH_DAYS;
        let week = days.div_euclid(7);
        let day_of_week = days.rem_euclid(7);
        let nanos = day_of_week * 86_400_000_000_000
            + h as i64 * 3_600_000_000_000
            + min as i64 * 60_000_000_000
            + (sec * 1.0e9).round() as i64;
        Self::from_week_nanos(week as i32, nanos)
    }

    /// Day of year in [1, 366], needed by seasonal atmosphere models.
    pub fn day_of_year(&self) -> u32 {
        let (y, m, d, _, _, _) = self.to_civil();
        let jan1 = days_from_civil(y, 1, 1);
        (days_from_civil(y, m as i64, d as i64) - jan1 + 1) as u32
    }
}

impl fmt::Display for GpsTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:.9}", self.week, self.seconds_of_week())
    }
}

/// Days from civil epoch 1970-01-01 to 1980-01-06 (GPS epoch).
const GPS_EPOCH_DAYS: i64 = 3_657;

/// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm).
fn days_from_civil(y: i32, m: i64, d: i64) -> i64 {
    let y = y as i64 - if m <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let doy = (153 * (m + if m > 2 { -3 } else { 9 }) + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i32, i64, i64) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = mp + if mp < 10 { 3 } else { -9 };
    ((y + if m <= 2 { 1 } else { 0 }) as i32, m, d)
}
