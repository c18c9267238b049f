//! Property suites over the algebraic core: exact time arithmetic, geodetic
//! round trips, SE(3) inverses, robust-kernel shape, and parser safety.

use proptest::prelude::*;

use tdcp_odom::factors::dcs_scale;
use tdcp_odom::frames::{ecef_to_geodetic, geodetic_to_ecef, EnuFrame, Geodetic};
use tdcp_odom::ingest::{parse_rinex_nav_str, parse_rinex_obs_str};
use tdcp_odom::se3::{se3_exp, se3_log};
use tdcp_odom::time::GpsTime;

proptest! {
    /// (t + dt) - t returns dt exactly for nanosecond-representable steps.
    #[test]
    fn gps_time_add_diff_exact(week in 0i32..3000, sow in 0.0f64..604_799.0, dt_ns in -86_400_000_000_000i64..86_400_000_000_000) {
        let t = GpsTime::new(week, sow);
        let dt = dt_ns as f64 / 1.0e9;
        let t2 = t.add_seconds(dt);
        prop_assert_eq!(t2.diff_seconds(&t), dt);
    }

    #[test]
    fn geodetic_round_trip(lat in -1.55f64..1.55, lon in -3.1f64..3.1, h in -100.0f64..3.0e7) {
        let g = Geodetic { lat, lon, height: h };
        let back = ecef_to_geodetic(&geodetic_to_ecef(&g)).unwrap();
        prop_assert!((back.lat - lat).abs() < 1e-11);
        prop_assert!((back.lon - lon).abs() < 1e-11);
        prop_assert!((back.height - h).abs() < 1e-6);
    }

    #[test]
    fn enu_round_trip_is_identity(
        lat in -1.4f64..1.4,
        lon in -3.1f64..3.1,
        e in -1.0e5f64..1.0e5,
        n in -1.0e5f64..1.0e5,
        u in -1.0e4f64..1.0e4,
    ) {
        let frame = EnuFrame::new(Geodetic { lat, lon, height: 120.0 });
        let p = nalgebra::Vector3::new(e, n, u);
        let back = frame.ecef_to_enu(&frame.enu_to_ecef(&p));
        prop_assert!((back - p).norm() < 1e-6);
    }

    #[test]
    fn se3_exp_log_round_trip(
        v in prop::array::uniform3(-2.0f64..2.0),
        w in prop::array::uniform3(-0.9f64..0.9),
    ) {
        let mut xi = nalgebra::Vector6::zeros();
        for k in 0..3 {
            xi[k] = v[k];
            xi[3 + k] = w[k];
        }
        let back = se3_log(&se3_exp(&xi)).unwrap();
        prop_assert!((back - xi).norm() < 1e-9);
    }

    #[test]
    fn dcs_scale_shape(chi2 in 0.0f64..1.0e6, phi in 1.0e-3f64..100.0) {
        let s = dcs_scale(chi2, phi);
        prop_assert!(s > 0.0 && s <= 1.0);
        // Non-increasing against a slightly larger residual.
        prop_assert!(dcs_scale(chi2 + 1.0, phi) <= s);
        // Inactive inside the gate.
        if chi2 <= phi {
            prop_assert_eq!(s, 1.0);
        }
    }

    /// Structured garbage never panics the parsers.
    #[test]
    fn parsers_never_panic(input in "\\PC{0,400}") {
        let _ = parse_rinex_obs_str(&input, "prop");
        let _ = parse_rinex_nav_str(&input, "prop");
    }
}
