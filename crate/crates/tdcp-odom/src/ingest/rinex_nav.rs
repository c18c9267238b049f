//! RINEX navigation parsing: broadcast ephemerides plus the Klobuchar
//! coefficients from the header when present.

use std::fs;
use std::path::Path;

use super::{IngestError, SatId};
use crate::atmosphere::KlobucharParams;
use crate::ephemeris::BroadcastEphemeris;
use crate::time::GpsTime;

/// Parsed navigation data.
#[derive(Debug, Clone, Default)]
pub struct NavData {
    pub ephemerides: Vec<BroadcastEphemeris>,
    pub klobuchar: Option<KlobucharParams>,
}

pub fn parse_rinex_nav(path: &Path) -> Result<NavData, IngestError> {
    let content = fs::read_to_string(path)?;
    parse_rinex_nav_str(&content, &path.display().to_string())
}

fn field(line: &str, start: usize, end: usize) -> Option<&str> {
    line.get(start..end.min(line.len()))
}

fn parse_f64(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    t.replace(['D', 'd'], "E").parse::<f64>().ok()
}

/// Reads the four D12.4 fields of an ION ALPHA / ION BETA header line.
fn parse_ion_line(line: &str) -> Option<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = parse_f64(field(line, 2 + 12 * k, 2 + 12 * (k + 1))?)?;
    }
    Some(out)
}

pub fn parse_rinex_nav_str(content: &str, name: &str) -> Result<NavData, IngestError> {
    let mut lines = content.lines().enumerate();
    let mut version_seen = false;
    let mut alpha: Option<[f64; 4]> = None;
    let mut beta: Option<[f64; 4]> = None;
    let mut header_done = false;
    let mut header_lines = 0usize;

    for (idx, line) in lines.by_ref() {
        header_lines = idx + 1;
        let label = field(line, 60, 80).unwrap_or("").trim();
        match label {
            "RINEX VERSION / TYPE" => {
                let ver = field(line, 0, 9).and_then(parse_f64).unwrap_or(0.0);
                if !(2.0..4.0).contains(&ver) {
                    return Err(IngestError::Header(format!(
                        "{name}: unsupported nav version {ver}"
                    )));
                }
                version_seen = true;
            }
            "ION ALPHA" => alpha = parse_ion_line(line),
            "ION BETA" => beta = parse_ion_line(line),
            "IONOSPHERIC CORR" => {
                // v3 style: GPSA / GPSB with four D12.4 fields from column 5.
                let kind = field(line, 0, 4).unwrap_or("").trim();
                let mut vals = [0.0; 4];
                let mut ok = true;
                for (k, slot) in vals.iter_mut().enumerate() {
                    match field(line, 5 + 12 * k, 5 + 12 * (k + 1)).and_then(parse_f64) {
                        Some(v) => *slot = v,
                        None => ok = false,
                    }
                }
                if ok {
                    match kind {
                        "GPSA" => alpha = Some(vals),
                        "GPSB" => beta = Some(vals),
                        _ => {}
                    }
                }
            }
            "END OF HEADER" => {
                header_done = true;
                break;
            }
            _ => {}
        }
    }

    if !version_seen || !header_done {
        return Err(IngestError::Header(format!(
            "{name}: missing RINEX nav header"
        )));
    }

    let body: Vec<&str> = content.lines().skip(header_lines).collect();
    let mut ephemerides = Vec::new();
    let mut i = 0usize;
    while i < body.len() {
        if body[i].trim().is_empty() {
            i += 1;
            continue;
        }
        match parse_record(&body, i) {
            Some((eph, consumed)) => {
                ephemerides.push(eph);
                i += consumed;
            }
            None => {
                return Err(IngestError::malformed(
                    name,
                    header_lines + i + 1,
                    "unreadable navigation record",
                ));
            }
        }
    }

    if ephemerides.is_empty() {
        return Err(IngestError::NoEpochs(name.to_string()));
    }

    let klobuchar = match (alpha, beta) {
        (Some(alpha), Some(beta)) => Some(KlobucharParams { alpha, beta }),
        _ => None,
    };
    Ok(NavData {
        ephemerides,
        klobuchar,
    })
}

/// Parses one 8-line record in either v2 (` 1 26 ...`) or v3 (`G01 2026 ...`)
/// layout. Returns the ephemeris and the number of lines consumed.
fn parse_record(body: &[&str], start: usize) -> Option<(BroadcastEphemeris, usize)> {
    let first = body.get(start)?;
    let v3 = first.starts_with('G');

    let (prn, toc, clock_fields) = if v3 {
        let prn = field(first, 1, 3)?.trim().parse::<u8>().ok()?;
        let year = field(first, 4, 8)?.trim().parse::<i32>().ok()?;
        let month = field(first, 9, 11)?.trim().parse::<u32>().ok()?;
        let day = field(first, 12, 14)?.trim().parse::<u32>().ok()?;
        let hour = field(first, 15, 17)?.trim().parse::<u32>().ok()?;
        let minute = field(first, 18, 20)?.trim().parse::<u32>().ok()?;
        let sec = field(first, 21, 23)?.trim().parse::<f64>().ok()?;
        let toc = GpsTime::from_civil(year, month, day, hour, minute, sec);
        let mut vals = [0.0; 3];
        for (k, slot) in vals.iter_mut().enumerate() {
            *slot = parse_f64(field(first, 23 + 19 * k, 23 + 19 * (k + 1))?)?;
        }
        (prn, toc, vals)
    } else {
        let prn = field(first, 0, 2)?.trim().parse::<u8>().ok()?;
        let yy = field(first, 3, 5)?.trim().parse::<i32>().ok()?;
        let year = if yy >= 80 { 1900 + yy } else { 2000 + yy };
        let month = field(first, 6, 8)?.trim().parse::<u32>().ok()?;
        let day = field(first, 9, 11)?.trim().parse::<u32>().ok()?;
        let hour = field(first, 12, 14)?.trim().parse::<u32>().ok()?;
        let minute = field(first, 15, 17)?.trim().parse::<u32>().ok()?;
        let sec = field(first, 17, 22)?.trim().parse::<f64>().ok()?;
        let toc = GpsTime::from_civil(year, month, day, hour, minute, sec);
        let mut vals = [0.0; 3];
        for (k, slot) in vals.iter_mut().enumerate() {
            *slot = parse_f64(field(first, 22 + 19 * k, 22 + 19 * (k + 1))?)?;
        }
        (prn, toc, vals)
    };
    if prn == 0 || prn > 64 {
        return None;
    }

    // Seven orbit lines of four D19.12 fields each.
    let offset = if v3 { 4 } else { 3 };
    let mut orbit = [0.0f64; 28];
    for line_no in 0..7 {
        let line = body.get(start + 1 + line_no)?;
        for k in 0..4 {
            let idx = line_no * 4 + k;
            let s = field(line, offset + 19 * k, offset + 19 * (k + 1));
            // Spare fields on the last line may be blank.
            orbit[idx] = match s.and_then(parse_f64) {
                Some(v) => v,
                None if line_no == 6 && k >= 1 => 0.0,
                None => return None,
            };
        }
    }

    // Orbit line layout: [IODE Crs dn M0] [Cuc e Cus sqrtA] [Toe Cic OMEGA0 Cis]
    // [i0 Crc omega OMEGADOT] [IDOT codesL2 week L2P] [acc health TGD IODC]
    // [transmission fit spare spare]. The GPS week goes with Toe.
    let week = orbit[18] as i32;
    let eph = BroadcastEphemeris {
        sat: SatId(prn),
        af0: clock_fields[0],
        af1: clock_fields[1],
        af2: clock_fields[2],
        toc,
        crs: orbit[1],
        delta_n: orbit[2],
        m0: orbit[3],
        cuc: orbit[4],
        eccentricity: orbit[5],
        cus: orbit[6],
        sqrt_a: orbit[7],
        toe: GpsTime::new(week, orbit[8]),
        cic: orbit[9],
        omega0: orbit[10],
        cis: orbit[11],
        i0: orbit[12],
        crc: orbit[13],
        omega: orbit[14],
        omega_dot: orbit[15],
        idot: orbit[16],
    };
    Some((eph, 8))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str =
        "     2.11           N: GPS NAV DATA                         RINEX VERSION / TYPE
     .7451D-08   .1490D-07  -.5960D-07  -.5960D-07          ION ALPHA
     .9216D+05   .1311D+06  -.6554D+05  -.5243D+06          ION BETA
                                                            END OF HEADER
 7 26  8  8 12  0  0.0-0.230000000000D-03 0.110000000000D-10 0.000000000000D+00
    0.100000000000D+02 0.250000000000D+02 0.450000000000D-08 0.500000000000D+00
    0.120000000000D-05 0.123000000000D-01 0.730000000000D-05 0.515360000000D+04
    0.345600000000D+06-0.600000000000D-07 0.100000000000D+01 0.900000000000D-07
    0.958000000000D+00 0.230000000000D+03 0.770000000000D+00-0.800000000000D-08
   -0.300000000000D-09 0.000000000000D+00 0.236000000000D+04 0.000000000000D+00
    0.200000000000D+01 0.000000000000D+00 0.000000000000D+00 0.000000000000D+00
    0.342000000000D+06 0.400000000000D+01
";

    #[test]
    fn parses_single_record_fixture() {
        let nav = parse_rinex_nav_str(FIXTURE, "fixture").unwrap();
        assert_eq!(nav.ephemerides.len(), 1);
        let e = &nav.ephemerides[0];
        assert_eq!(e.sat, SatId(7));
        assert_eq!(e.af0, -2.3e-4);
        assert_eq!(e.af1, 1.1e-11);
        assert_eq!(e.crs, 25.0);
        assert_eq!(e.delta_n, 4.5e-9);
        assert_eq!(e.m0, 0.5);
        assert_eq!(e.cuc, 1.2e-6);
        assert_eq!(e.eccentricity, 1.23e-2);
        assert_eq!(e.cus, 7.3e-6);
        assert_eq!(e.sqrt_a, 5153.6);
        assert_eq!(e.toe.week(), 2360);
        assert!((e.toe.seconds_of_week() - 345_600.0).abs() < 1e-9);
        assert_eq!(e.omega0, 1.0);
        assert_eq!(e.cis, 9.0e-8);
        assert_eq!(e.i0, 0.958);
        assert_eq!(e.crc, 230.0);
        assert_eq!(e.omega, 0.77);
        assert_eq!(e.omega_dot, -8.0e-9);
        assert_eq!(e.idot, -3.0e-10);

        let k = nav.klobuchar.expect("klobuchar present");
        assert_eq!(k.alpha[0], 7.451e-9);
        assert_eq!(k.beta[3], -5.243e5);
    }

    #[test]
    fn missing_ion_headers_mean_no_klobuchar() {
        let stripped: String = FIXTURE
            .lines()
            .filter(|l| !l.contains("ION ALPHA") && !l.contains("ION BETA"))
            .collect::<Vec<_>>()
            .join("\n");
        let nav = parse_rinex_nav_str(&stripped, "noion").unwrap();
        assert!(nav.klobuchar.is_none());
        assert_eq!(nav.ephemerides.len(), 1);
    }

    #[test]
    fn header_without_version_is_an_error() {
        assert!(parse_rinex_nav_str("junk\n", "junk").is_err());
    }
}
