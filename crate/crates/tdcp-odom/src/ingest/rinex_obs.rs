//! RINEX observation parsing (2.11 and a GPS-only 3.x subset).
//!
//! The parser is deliberately forgiving: malformed records are skipped and
//! counted rather than aborting the file, and it never panics on arbitrary
//! bytes. Structural problems (bad header, zero epochs) are hard errors.

use std::fs;
use std::path::Path;

use super::{IngestError, ObservationEpoch, SatId, SatObservation};
use crate::time::GpsTime;

/// Parse result: epochs plus a count of records that had to be skipped.
#[derive(Debug, Clone)]
pub struct ParsedObs {
    pub epochs: Vec<ObservationEpoch>,
    pub skipped: usize,
}

pub fn parse_rinex_obs(path: &Path) -> Result<ParsedObs, IngestError> {
    let content = fs::read_to_string(path)?;
    parse_rinex_obs_str(&content, &path.display().to_string())
}

/// Byte-range field access that tolerates short lines and non-ASCII bytes.
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

fn parse_usize(s: &str) -> Option<usize> {
    s.trim().parse::<usize>().ok()
}

fn parse_i32(s: &str) -> Option<i32> {
    s.trim().parse::<i32>().ok()
}

struct ObsLayout {
    version_major: u8,
    /// Indices of L1, C1, D1, S1 within the observation record, in file order.
    l1: usize,
    c1: usize,
    d1: usize,
    s1: usize,
    n_types: usize,
}

pub fn parse_rinex_obs_str(content: &str, name: &str) -> Result<ParsedObs, IngestError> {
    let mut lines = content.lines().enumerate();

    // Header.
    let mut version_major: Option<u8> = None;
    let mut types_v2: Vec<String> = Vec::new();
    let mut types_v3: Vec<String> = Vec::new();
    let mut header_done = false;
    let mut header_lines = 0usize;

    for (idx, line) in lines.by_ref() {
        header_lines = idx + 1;
        let label = field(line, 60, 80).unwrap_or("").trim();
        if label == "RINEX VERSION / TYPE" {
            let ver = field(line, 0, 9)
                .and_then(parse_f64)
                .ok_or_else(|| IngestError::Header(format!("{name}: unreadable version number")))?;
            let kind = field(line, 20, 21).unwrap_or("");
            if kind != "O" {
                return Err(IngestError::Header(format!(
                    "{name}: not an observation file (type {kind:?})"
                )));
            }
            if !(2.0..4.0).contains(&ver) {
                return Err(IngestError::Header(format!(
                    "{name}: unsupported version {ver}"
                )));
            }
            version_major = Some(ver as u8);
        } else if label == "# / TYPES OF OBSERV" {
            // v2: count then names, 9 per line (continuations have blank count).
            for k in 0..9 {
                if let Some(t) = field(line, 10 + 6 * k, 10 + 6 * k + 6) {
                    let t = t.trim();
                    if !t.is_empty() {
                        types_v2.push(t.to_string());
                    }
                }
            }
        } else if label == "SYS / # / OBS TYPES" {
            let sys = field(line, 0, 1).unwrap_or("");
            if sys == "G" || (sys.trim().is_empty() && !types_v3.is_empty()) {
                for k in 0..13 {
                    if let Some(t) = field(line, 7 + 4 * k, 7 + 4 * k + 3) {
                        let t = t.trim();
                        if !t.is_empty() {
                            types_v3.push(t.to_string());
                        }
                    }
                }
            }
        } else if label == "END OF HEADER" {
            header_done = true;
            break;
        }
    }

    let version_major = version_major
        .ok_or_else(|| IngestError::Header(format!("{name}: missing RINEX VERSION / TYPE")))?;
    if !header_done {
        return Err(IngestError::Header(format!(
            "{name}: missing END OF HEADER"
        )));
    }

    let find = |types: &[String], prefix: &str| -> Option<usize> {
        types.iter().position(|t| t.starts_with(prefix))
    };
    let layout = if version_major == 2 {
        ObsLayout {
            version_major,
            l1: find(&types_v2, "L1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no L1 observable")))?,
            c1: find(&types_v2, "C1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no C1 observable")))?,
            d1: find(&types_v2, "D1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no D1 observable")))?,
            s1: find(&types_v2, "S1").unwrap_or(usize::MAX),
            n_types: types_v2.len(),
        }
    } else {
        ObsLayout {
            version_major,
            l1: find(&types_v3, "L1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no L1 observable")))?,
            c1: find(&types_v3, "C1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no C1 observable")))?,
            d1: find(&types_v3, "D1")
                .ok_or_else(|| IngestError::Header(format!("{name}: no D1 observable")))?,
            s1: find(&types_v3, "S1").unwrap_or(usize::MAX),
            n_types: types_v3.len(),
        }
    };

    let body: Vec<&str> = content.lines().skip(header_lines).collect();
    let mut epochs = Vec::new();
    let mut skipped = 0usize;
    let mut i = 0usize;

    while i < body.len() {
        let line = body[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let parsed = if layout.version_major == 2 {
            parse_epoch_v2(&layout, &body, &mut i, &mut skipped)
        } else {
            parse_epoch_v3(&layout, &body, &mut i, &mut skipped)
        };
        match parsed {
            Some(Some(epoch)) => epochs.push(epoch),
            Some(None) => {} // event records or empty epoch, consumed
            None => {
                skipped += 1;
                i += 1;
            }
        }
    }

    if epochs.is_empty() {
        return Err(IngestError::NoEpochs(name.to_string()));
    }
    Ok(ParsedObs { epochs, skipped })
}

/// Limits runaway satellite counts fabricated by corrupt epoch lines.
const MAX_SATS_PER_EPOCH: usize = 64;

fn parse_epoch_time_v2(line: &str) -> Option<GpsTime> {
    let yy = parse_i32(field(line, 1, 3)?)?;
    let year = if yy >= 80 { 1900 + yy } else { 2000 + yy };
    let month = parse_usize(field(line, 4, 6)?)? as u32;
    let day = parse_usize(field(line, 7, 9)?)? as u32;
    let hour = parse_usize(field(line, 10, 12)?)? as u32;
    let minute = parse_usize(field(line, 13, 15)?)? as u32;
    let sec = parse_f64(field(line, 15, 26)?)?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) || hour > 23 || minute > 59 {
        return None;
    }
    Some(GpsTime::from_civil(year, month, day, hour, minute, sec))
}

/// Returns Some(Some(epoch)) on success, Some(None) for consumed non-data
/// blocks, None if the line is not a valid epoch header.
fn parse_epoch_v2(
    layout: &ObsLayout,
    body: &[&str],
    i: &mut usize,
    skipped: &mut usize,
) -> Option<Option<ObservationEpoch>> {
    let header = body[*i];
    let flag = parse_usize(field(header, 28, 29)?).unwrap_or(0);
    let count = parse_usize(field(header, 29, 32)?)?;
    if flag > 1 {
        // Event block: the count field holds the number of records to skip.
        let skip = count.min(MAX_SATS_PER_EPOCH);
        *i += 1 + skip;
        return Some(None);
    }
    let t = parse_epoch_time_v2(header)?;
    if count > MAX_SATS_PER_EPOCH {
        return None;
    }

    // Satellite list, 12 per line with continuations.
    let mut sats = Vec::with_capacity(count);
    let mut line_idx = *i;
    let mut pos = 32usize;
    for _ in 0..count {
        if pos >= 68 {
            line_idx += 1;
            pos = 32;
        }
        let line = body.get(line_idx)?;
        let sys = field(line, pos, pos + 1)?;
        let prn = parse_usize(field(line, pos + 1, pos + 3)?)?;
        if !(sys == "G" || sys == " ") || prn == 0 || prn > 64 {
            return None;
        }
        sats.push(SatId(prn as u8));
        pos += 3;
    }

    // One record line per satellite (4-5 observables fit in one line).
    let lines_per_sat = layout.n_types.div_ceil(5);
    let mut records: Vec<SatObservation> = Vec::with_capacity(sats.len());
    let mut row = line_idx + 1;
    for sat in sats {
        let mut values = vec![None::<(f64, u8)>; layout.n_types];
        for l in 0..lines_per_sat {
            if let Some(line) = body.get(row + l) {
                for k in 0..5 {
                    let slot = l * 5 + k;
                    if slot >= layout.n_types {
                        break;
                    }
                    let start = 16 * k;
                    if let Some(v) = field(line, start, start + 14).and_then(parse_f64) {
                        let lli = field(line, start + 14, start + 15)
                            .and_then(|s| s.trim().parse::<u8>().ok())
                            .unwrap_or(0);
                        values[slot] = Some((v, lli));
                    }
                }
            }
        }
        row += lines_per_sat;
        match build_record(layout, sat, &values) {
            Some(r) => {
                if records.iter().any(|existing| existing.sat == r.sat) {
                    *skipped += 1;
                } else {
                    records.push(r);
                }
            }
            None => *skipped += 1,
        }
    }
    *i = row;
    records.sort_by_key(|r| r.sat);
    // Zero-satellite epochs are legitimate: the receiver is alive with
    // nothing tracked (e.g. during an outage). Keep them.
    Some(Some(ObservationEpoch { t, records }))
}

fn parse_epoch_v3(
    layout: &ObsLayout,
    body: &[&str],
    i: &mut usize,
    skipped: &mut usize,
) -> Option<Option<ObservationEpoch>> {
    let header = body[*i];
    if !header.starts_with('>') {
        return None;
    }
    let year = parse_i32(field(header, 2, 6)?)?;
    let month = parse_usize(field(header, 7, 9)?)? as u32;
    let day = parse_usize(field(header, 10, 12)?)? as u32;
    let hour = parse_usize(field(header, 13, 15)?)? as u32;
    let minute = parse_usize(field(header, 16, 18)?)? as u32;
    let sec = parse_f64(field(header, 18, 29)?)?;
    let flag = parse_usize(field(header, 31, 32)?).unwrap_or(0);
    let count = parse_usize(field(header, 32, 35)?)?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) || hour > 23 || minute > 59 {
        return None;
    }
    if flag > 1 {
        *i += 1 + count.min(MAX_SATS_PER_EPOCH);
        return Some(None);
    }
    if count > MAX_SATS_PER_EPOCH {
        return None;
    }
    let t = GpsTime::from_civil(year, month, day, hour, minute, sec);

    let mut records: Vec<SatObservation> = Vec::new();
    for k in 0..count {
        let Some(line) = body.get(*i + 1 + k) else {
            *skipped += 1;
            continue;
        };
        let sys = field(line, 0, 1).unwrap_or("");
        if sys != "G" {
            // Other constellations are out of scope; not an error.
            continue;
        }
        let Some(prn) = field(line, 1, 3).and_then(parse_usize) else {
            *skipped += 1;
            continue;
        };
        if prn == 0 || prn > 64 {
            *skipped += 1;
            continue;
        }
        let mut values = vec![None::<(f64, u8)>; layout.n_types];
        for (slot, value) in values.iter_mut().enumerate() {
            let start = 3 + 16 * slot;
            if let Some(v) = field(line, start, start + 14).and_then(parse_f64) {
                let lli = field(line, start + 14, start + 15)
                    .and_then(|s| s.trim().parse::<u8>().ok())
                    .unwrap_or(0);
                *value = Some((v, lli));
            }
        }
        match build_record(layout, SatId(prn as u8), &values) {
            Some(r) => {
                if records.iter().any(|existing| existing.sat == r.sat) {
                    *skipped += 1;
                } else {
                    records.push(r);
                }
            }
            None => *skipped += 1,
        }
    }
    *i += 1 + count;
    records.sort_by_key(|r| r.sat);
    Some(Some(ObservationEpoch { t, records }))
}

fn build_record(
    layout: &ObsLayout,
    sat: SatId,
    values: &[Option<(f64, u8)>],
) -> Option<SatObservation> {
    let (phase, lli) = values.get(layout.l1).copied().flatten()?;
    let (pseudorange, _) = values.get(layout.c1).copied().flatten()?;
    let (doppler, _) = values.get(layout.d1).copied().flatten()?;
    let snr = values
        .get(layout.s1)
        .copied()
        .flatten()
        .map(|(v, _)| v)
        .unwrap_or(0.0);
    if !phase.is_finite() || !pseudorange.is_finite() || !doppler.is_finite() {
        return None;
    }
    Some(SatObservation {
        sat,
        phase_cycles: phase,
        pseudorange_m: pseudorange,
        doppler_hz: doppler,
        lock_lost: lli & 1 == 1,
        snr_dbhz: snr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE_V2: &str =
        "     2.11           OBSERVATION DATA    G (GPS)             RINEX VERSION / TYPE
test                                                        PGM / RUN BY / DATE
     4    L1    C1    D1    S1                              # / TYPES OF OBSERV
  2026     8     8    12     0    0.0000000     GPS         TIME OF FIRST OBS
                                                            END OF HEADER
 26  8  8 12  0  0.0000000  0  5G02G05G07G11G20
 123456789.12314  22123456.789        -512.345          45.000
 113456789.500    22345678.901         312.250          41.200
 103456700.250    20123456.000      -1500.125          48.900
  93456600.125    21234567.250         250.500          39.500
  83456500.750    23345678.125        1250.875          44.100
 26  8  8 12  0  1.0000000  0  5G02G05G07G11G20
 123457301.468    22123551.780        -511.950          45.000
 113456477.250    22345619.151         312.300          41.200
 103458200.375    20123741.900      -1500.200          48.900
  93456349.625    21234519.550         250.600          39.500
  83455249.875    23345440.750        1250.900          44.100
";

    #[test]
    fn parses_two_epoch_fixture_exactly() {
        let parsed = parse_rinex_obs_str(FIXTURE_V2, "fixture").unwrap();
        assert_eq!(parsed.epochs.len(), 2);
        assert_eq!(parsed.skipped, 0);
        let e0 = &parsed.epochs[0];
        assert_eq!(e0.records.len(), 5);
        let (y, m, d, h, min, s) = e0.t.to_civil();
        assert_eq!((y, m, d, h, min), (2026, 8, 8, 12, 0));
        assert!(s.abs() < 1e-9);

        let g2 = e0.record(SatId(2)).unwrap();
        assert_eq!(g2.phase_cycles, 123456789.123);
        assert_eq!(g2.pseudorange_m, 22123456.789);
        assert_eq!(g2.doppler_hz, -512.345);
        assert_eq!(g2.snr_dbhz, 45.0);
        assert!(g2.lock_lost, "LLI=1 must map to lock_lost");

        let g5 = e0.record(SatId(5)).unwrap();
        assert!(!g5.lock_lost);
        assert_eq!(g5.pseudorange_m, 22345678.901);

        let e1 = &parsed.epochs[1];
        assert_eq!(e1.t.diff_seconds(&e0.t), 1.0);
        assert_eq!(e1.record(SatId(20)).unwrap().doppler_hz, 1250.900);
    }

    #[test]
    fn missing_header_is_an_error() {
        let res = parse_rinex_obs_str(" 26  8  8 12  0  0.0\n", "nohdr");
        assert!(matches!(res, Err(IngestError::Header(_))));
    }

    #[test]
    fn zero_epochs_is_an_error() {
        let only_header: String = FIXTURE_V2.lines().take(5).collect::<Vec<_>>().join("\n");
        let res = parse_rinex_obs_str(&only_header, "empty");
        assert!(matches!(res, Err(IngestError::NoEpochs(_))));
    }

    #[test]
    fn unsupported_version_is_an_error() {
        let bad = FIXTURE_V2.replace("     2.11", "     5.00");
        assert!(matches!(
            parse_rinex_obs_str(&bad, "v5"),
            Err(IngestError::Header(_))
        ));
    }

    #[test]
    fn malformed_record_is_skipped_with_warning() {
        let broken = FIXTURE_V2.replace(
            " 113456789.500    22345678.901",
            " garbage-phase     not-a-number",
        );
        let parsed = parse_rinex_obs_str(&broken, "broken").unwrap();
        assert_eq!(parsed.epochs.len(), 2);
        assert_eq!(parsed.epochs[0].records.len(), 4);
        assert_eq!(parsed.skipped, 1);
    }

    const FIXTURE_V3: &str =
        "     3.03           OBSERVATION DATA    G: GPS              RINEX VERSION / TYPE
G    4 C1C L1C D1C S1C                                      SYS / # / OBS TYPES
                                                            END OF HEADER
> 2026 08 08 12 00  0.0000000  0  2
G02  22123456.789   123456789.123        -512.345          45.000
G05  22345678.901   113456789.5001        312.250          41.200
";

    #[test]
    fn parses_v3_subset() {
        let parsed = parse_rinex_obs_str(FIXTURE_V3, "v3").unwrap();
        assert_eq!(parsed.epochs.len(), 1);
        let e = &parsed.epochs[0];
        assert_eq!(e.records.len(), 2);
        assert_eq!(e.record(SatId(2)).unwrap().pseudorange_m, 22123456.789);
        assert!(e.record(SatId(5)).unwrap().lock_lost);
    }
}
