//! RINEX 2.11 writers for the simulator's observation and navigation output.
//!
//! Output is byte-deterministic: no wall-clock timestamps go into headers.

use std::fs;
use std::path::Path;

use crate::atmosphere::KlobucharParams;
use crate::ephemeris::BroadcastEphemeris;
use crate::ingest::{IngestError, ObservationEpoch};

fn header_line(content: &str, label: &str) -> String {
    format!("{content:<60}{label}\n")
}

/// F14.3 + LLI + SNR-flag observation field.
fn obs_field(value: f64, lli: Option<u8>, snr_flag: Option<u8>) -> String {
    let lli = match lli {
        Some(d) => char::from(b'0' + d.min(9)),
        None => ' ',
    };
    let snr = match snr_flag {
        Some(d) => char::from(b'0' + d.min(9)),
        None => ' ',
    };
    format!("{value:>14.3}{lli}{snr}")
}

/// Normalized Fortran D19.12 field (leading `0.`, two-digit exponent).
fn fortran_d19(v: f64) -> String {
    if v == 0.0 {
        return " 0.000000000000D+00".to_string();
    }
    let s = format!("{:.11E}", v.abs());
    let (mantissa, exp) = s.split_once('E').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let exp = exp + 1; // shift to 0.xxx normalization
    format!(
        "{}0.{}D{}{:02}",
        if v < 0.0 { "-" } else { " " },
        &digits[..12],
        if exp < 0 { "-" } else { "+" },
        exp.abs()
    )
}

/// Writes observations as RINEX 2.11 with L1/C1/D1/S1 observables.
pub fn write_rinex_obs(epochs: &[ObservationEpoch], path: &Path) -> Result<(), IngestError> {
    if epochs.is_empty() {
        return Err(IngestError::Invalid("no epochs to write".into()));
    }
    let mut s = String::new();
    s.push_str(&header_line(
        "     2.11           OBSERVATION DATA    G (GPS)",
        "RINEX VERSION / TYPE",
    ));
    s.push_str(&header_line(
        "tdcp-odom sim       synthetic           synthetic",
        "PGM / RUN BY / DATE",
    ));
    s.push_str(&header_line("SIM- synthetic scenario", "MARKER NAME"));
    s.push_str(&header_line(
        "     4    L1    C1    D1    S1",
        "# / TYPES OF OBSERV",
    ));
    let (y, m, d, h, min, sec) = epochs[0].t.to_civil();
    s.push_str(&header_line(
        &format!("{y:>6}{m:>6}{d:>6}{h:>6}{min:>6}{sec:>13.7}     GPS"),
        "TIME OF FIRST OBS",
    ));
    s.push_str(&header_line("", "END OF HEADER"));

    for epoch in epochs {
        let (y, m, d, h, min, sec) = epoch.t.to_civil();
        let yy = y.rem_euclid(100);
        s.push_str(&format!(
            " {yy:02} {m:>2} {d:>2} {h:>2} {min:>2}{sec:>11.7}  0{:>3}",
            epoch.records.len()
        ));
        for (i, r) in epoch.records.iter().enumerate() {
            if i > 0 && i % 12 == 0 {
                s.push_str("\n                                ");
            }
            s.push_str(&format!("G{:02}", r.sat.0));
        }
        s.push('\n');
        for r in &epoch.records {
            let snr_flag = ((r.snr_dbhz / 6.0) as u8).clamp(1, 9);
            s.push_str(&obs_field(
                r.phase_cycles,
                if r.lock_lost { Some(1) } else { None },
                Some(snr_flag),
            ));
            s.push_str(&obs_field(r.pseudorange_m, None, Some(snr_flag)));
            s.push_str(&obs_field(r.doppler_hz, None, None));
            s.push_str(&obs_field(r.snr_dbhz, None, None));
            s.push('\n');
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes broadcast ephemerides as a RINEX 2.11 GPS navigation file.
pub fn write_rinex_nav(
    ephemerides: &[BroadcastEphemeris],
    klobuchar: Option<&KlobucharParams>,
    path: &Path,
) -> Result<(), IngestError> {
    if ephemerides.is_empty() {
        return Err(IngestError::Invalid("no ephemerides to write".into()));
    }
    let mut s = String::new();
    s.push_str(&header_line(
        "     2.11           N: GPS NAV DATA",
        "RINEX VERSION / TYPE",
    ));
    s.push_str(&header_line(
        "tdcp-odom sim       synthetic           synthetic",
        "PGM / RUN BY / DATE",
    ));
    if let Some(k) = klobuchar {
        let ion = |v: [f64; 4]| -> String {
            let mut line = String::from("  ");
            for x in v {
                // D12.4 fields.
                if x == 0.0 {
                    line.push_str("  0.0000D+00");
                    continue;
                }
                let t = format!("{:.3E}", x.abs());
                let (mant, exp) = t.split_once('E').unwrap();
                let exp: i32 = exp.parse::<i32>().unwrap() + 1;
                let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
                line.push_str(&format!(
                    "{}0.{}D{}{:02}",
                    if x < 0.0 { " -" } else { "  " },
                    &digits[..4],
                    if exp < 0 { "-" } else { "+" },
                    exp.abs()
                ));
            }
            line
        };
        s.push_str(&header_line(&ion(k.alpha), "ION ALPHA"));
        s.push_str(&header_line(&ion(k.beta), "ION BETA"));
    }
    s.push_str(&header_line("", "END OF HEADER"));

    let mut sorted: Vec<&BroadcastEphemeris> = ephemerides.iter().collect();
    sorted.sort_by_key(|e| (e.sat, e.toe));
    for e in sorted {
        let (y, m, d, h, min, sec) = e.toc.to_civil();
        let yy = y.rem_euclid(100);
        s.push_str(&format!(
            "{:>2} {yy:02} {m:>2} {d:>2} {h:>2} {min:>2}{sec:>5.1}{}{}{}\n",
            e.sat.0,
            fortran_d19(e.af0),
            fortran_d19(e.af1),
            fortran_d19(e.af2)
        ));
        let rows = [
            [0.0, e.crs, e.delta_n, e.m0],
            [e.cuc, e.eccentricity, e.cus, e.sqrt_a],
            [e.toe.seconds_of_week(), e.cic, e.omega0, e.cis],
            [e.i0, e.crc, e.omega, e.omega_dot],
            [e.idot, 0.0, e.toe.week() as f64, 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [e.toe.seconds_of_week(), 4.0, 0.0, 0.0],
        ];
        for row in rows {
            s.push_str("   ");
            for v in row {
                s.push_str(&fortran_d19(v));
            }
            s.push('\n');
        }
    }
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_rinex_nav, parse_rinex_obs};
    use crate::sim::{simulate, ErrorBudget, ScenarioConfig};

    #[test]
    fn fortran_field_formatting() {
        assert_eq!(fortran_d19(0.0), " 0.000000000000D+00");
        assert_eq!(fortran_d19(1.0), " 0.100000000000D+01");
        assert_eq!(fortran_d19(-2.3e-4), "-0.230000000000D-03");
        assert_eq!(fortran_d19(5153.6), " 0.515360000000D+04");
        assert_eq!(fortran_d19(345_600.0), " 0.345600000000D+06");
        for s in [1.0, -0.5, 3.25e-9, 604_800.0, -7.7e-33] {
            let f = fortran_d19(s);
            assert_eq!(f.len(), 19, "width of {f:?}");
            let back: f64 = f.trim().replace('D', "E").parse().unwrap();
            assert!(((back - s) / s).abs() < 1e-11, "{f} -> {back} vs {s}");
        }
    }

    #[test]
    fn obs_write_parse_round_trip() {
        let cfg = ScenarioConfig {
            duration_s: 25.0,
            ..ScenarioConfig::default()
        };
        let out = simulate(&cfg, &ErrorBudget::default()).unwrap();
        let dir = std::env::temp_dir().join("tdcp_writer_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("roundtrip.obs");
        write_rinex_obs(&out.observations, &p).unwrap();
        let parsed = parse_rinex_obs(&p).unwrap();
        assert_eq!(parsed.skipped, 0);
        assert_eq!(parsed.epochs.len(), out.observations.len());
        for (a, b) in out.observations.iter().zip(&parsed.epochs) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.records.len(), b.records.len());
            for (ra, rb) in a.records.iter().zip(&b.records) {
                assert_eq!(ra.sat, rb.sat);
                assert!((ra.phase_cycles - rb.phase_cycles).abs() <= 5.1e-4);
                assert!((ra.pseudorange_m - rb.pseudorange_m).abs() <= 5.1e-4);
                assert!((ra.doppler_hz - rb.doppler_hz).abs() <= 5.1e-4);
                assert_eq!(ra.lock_lost, rb.lock_lost);
            }
        }
    }

    #[test]
    fn nav_write_parse_round_trip() {
        let cfg = ScenarioConfig::default();
        let out = simulate(
            &ScenarioConfig {
                duration_s: 5.0,
                ..cfg
            },
            &ErrorBudget::zero(),
        )
        .unwrap();
        let dir = std::env::temp_dir().join("tdcp_writer_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("roundtrip.nav");
        write_rinex_nav(&out.ephemerides, Some(&out.klobuchar), &p).unwrap();
        let nav = parse_rinex_nav(&p).unwrap();
        assert_eq!(nav.ephemerides.len(), out.ephemerides.len());
        let k = nav.klobuchar.expect("klobuchar header");
        for i in 0..4 {
            assert!((k.alpha[i] - out.klobuchar.alpha[i]).abs() <= 1e-12);
        }
        for (a, b) in out.ephemerides.iter().zip(&nav.ephemerides) {
            assert_eq!(a.sat, b.sat);
            assert_eq!(a.toe, b.toe);
            assert!((a.sqrt_a - b.sqrt_a).abs() < 1e-6);
            assert!((a.omega0 - b.omega0).abs() < 1e-11);
            assert!((a.i0 - b.i0).abs() < 1e-11);
            assert!((a.m0 - b.m0).abs() < 1e-11);
            assert!((a.af0 - b.af0).abs() < 1e-16);
        }
    }

    #[test]
    fn empty_epoch_list_is_an_error() {
        let p = std::env::temp_dir().join("tdcp_writer_tests_none.obs");
        assert!(write_rinex_obs(&[], &p).is_err());
    }

    #[test]
    fn lli_flag_round_trips_through_files() {
        let cfg = ScenarioConfig {
            duration_s: 120.0,
            ..ScenarioConfig::default()
        };
        let budget = ErrorBudget {
            cycle_slip_rate_per_min: 3.0,
            ..ErrorBudget::default()
        };
        let out = simulate(&cfg, &budget).unwrap();
        let slips: usize = out
            .observations
            .iter()
            .map(|e| e.records.iter().filter(|r| r.lock_lost).count())
            .sum();
        assert!(slips > 0, "expected some slips at 3/min over 2 min");
        let dir = std::env::temp_dir().join("tdcp_writer_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("slips.obs");
        write_rinex_obs(&out.observations, &p).unwrap();
        let parsed = parse_rinex_obs(&p).unwrap();
        let parsed_slips: usize = parsed
            .epochs
            .iter()
            .map(|e| e.records.iter().filter(|r| r.lock_lost).count())
            .sum();
        assert_eq!(slips, parsed_slips);
    }
}
