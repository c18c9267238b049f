//! Integration checks that tie the simulator, factors, and solver together
//! at truth: measurement residuals vanish at the true states, and the window
//! solve pulls perturbed states back onto them.

use nalgebra::Vector3;

use tdcp_odom::atmosphere::AtmosphereConfig;
use tdcp_odom::constants::{L1_WAVELENGTH_M, SPEED_OF_LIGHT};
use tdcp_odom::ephemeris::signal_emission_state;
use tdcp_odom::factors::{tdcp_residual, Factor, StateNode, TdcpPairMeasurement};
use tdcp_odom::ingest::{NavData, SatId};
use tdcp_odom::pipeline::{run_odometry, GraphConfig, Topology};
use tdcp_odom::se3::Pose;
use tdcp_odom::sim::{simulate, ErrorBudget, ScenarioConfig};
use tdcp_odom::solver::{solve_window, SolverConfig};

fn no_atmo() -> GraphConfig {
    GraphConfig {
        atmosphere: AtmosphereConfig {
            use_tropo: false,
            use_iono: false,
        },
        ..GraphConfig::default()
    }
}

/// Builds TDCP pair measurements for two consecutive epochs directly from
/// simulator output, evaluated against the true receiver positions.
fn measurements_at_truth(
    out: &tdcp_odom::sim::SimOutput,
    k: usize,
    lever: &Vector3<f64>,
) -> (StateNode, StateNode, Vec<TdcpPairMeasurement>) {
    let (ea, eb) = (&out.observations[k], &out.observations[k + 1]);
    let (sa, sb) = (out.truth_states[k], out.truth_states[k + 1]);
    let rx_a = sa.pose.act(lever);
    let rx_b = sb.pose.act(lever);
    let frame = &out.frame;

    let sat_state = |t, rx: &Vector3<f64>, sat: SatId| {
        let eph = out.ephemerides.iter().find(|e| e.sat == sat).unwrap();
        let (pos, clk) = signal_emission_state(eph, t, &frame.enu_to_ecef(rx)).unwrap();
        (frame.ecef_to_enu(&pos), clk)
    };
    let phase_m = |e: &tdcp_odom::ingest::ObservationEpoch, sat: SatId, clk: f64| {
        e.record(sat).unwrap().phase_cycles * L1_WAVELENGTH_M + SPEED_OF_LIGHT * clk
    };

    let common: Vec<SatId> = ea
        .records
        .iter()
        .map(|r| r.sat)
        .filter(|s| eb.record(*s).is_some())
        .collect();
    let reference = common[0];
    let (ref_a, clk_ra) = sat_state(ea.t, &rx_a, reference);
    let (ref_b, clk_rb) = sat_state(eb.t, &rx_b, reference);
    let mut ms = Vec::new();
    for sat in common.iter().skip(1) {
        let (oa, clk_oa) = sat_state(ea.t, &rx_a, *sat);
        let (ob, clk_ob) = sat_state(eb.t, &rx_b, *sat);
        let phase_dd = (phase_m(eb, *sat, clk_ob) - phase_m(ea, *sat, clk_oa))
            - (phase_m(eb, reference, clk_rb) - phase_m(ea, reference, clk_ra));
        ms.push(TdcpPairMeasurement::new(
            ea.t, eb.t, reference, *sat, phase_dd, ref_a, ref_b, oa, ob, rx_a, rx_b, 0.0, 1.0e4,
        ));
    }
    (sa, sb, ms)
}

#[test]
fn zero_budget_tdcp_residual_vanishes_at_truth() {
    let cfg = ScenarioConfig {
        duration_s: 30.0,
        ..ScenarioConfig::default()
    };
    let out = simulate(&cfg, &ErrorBudget::zero()).unwrap();
    let lever = cfg.extrinsics.lever_arm;
    for k in [0usize, 10, 25] {
        let (sa, sb, ms) = measurements_at_truth(&out, k, &lever);
        for m in &ms {
            let (e, _, _) = tdcp_residual(m, &sa, &sb, &lever);
            assert!(e.abs() < 1.0e-6, "residual {e} at epoch {k}");
        }
    }
}

#[test]
fn perturbed_zero_noise_window_recovers_truth() {
    // Circular path: truth is exactly constant-twist, so the motion prior
    // vanishes at truth and the window minimum coincides with it. (On the
    // default ellipse the varying curvature legitimately biases the optimum
    // by ~0.1 mm.)
    let cfg = ScenarioConfig {
        duration_s: 8.0,
        path: tdcp_odom::sim::PathSpec::Ellipse {
            semi_east: 42.0,
            semi_north: 42.0,
        },
        ..ScenarioConfig::default()
    };
    let out = simulate(&cfg, &ErrorBudget::zero()).unwrap();
    let lever = cfg.extrinsics.lever_arm;

    // A chain of truth states with TDCP pair factors between consecutive
    // epochs plus the motion priors the pipeline would add.
    let n = out.truth_states.len();
    let ids: Vec<u64> = (0..n as u64).collect();
    let truth: Vec<StateNode> = out.truth_states.clone();
    let mut factors = Vec::new();
    let qc = GraphConfig::default().qc_diag;
    for k in 0..n - 1 {
        let (_, _, ms) = measurements_at_truth(&out, k, &lever);
        for m in ms {
            factors.push(Factor::Tdcp {
                node_a: k as u64,
                node_b: (k + 1) as u64,
                measurement: Box::new(m),
            });
        }
        factors.push(Factor::wnoa(k as u64, (k + 1) as u64, &qc, 1.0).unwrap());
    }
    for k in 0..n {
        factors.push(Factor::Nonholonomic {
            node: k as u64,
            sigma_lateral: 0.05,
            sigma_vertical: 0.05,
        });
    }

    // Perturb every free node by 0.5 m in a fixed direction.
    let mut states = truth.clone();
    let kick = Vector3::new(0.3, -0.4, 0.0); // |kick| = 0.5
    for s in states.iter_mut().skip(1) {
        s.pose = Pose::new(*s.pose.rotation(), s.pose.translation() + kick);
    }
    let mut fixed = vec![false; n];
    fixed[0] = true;

    // Run to full convergence; the default relative tolerance stops a hair
    // above the recovery bound.
    let cfg_solve = SolverConfig {
        max_iter: 50,
        cost_rel_tol: 1.0e-12,
        ..SolverConfig::default()
    };
    solve_window(&ids, &mut states, &fixed, &factors, &lever, 4.0, &cfg_solve).unwrap();

    for (s, t) in states.iter().zip(&truth).skip(1) {
        let err = (s.pose.translation() - t.pose.translation()).norm();
        assert!(err < 1.0e-4, "node at {} off by {err}", s.t);
    }
}

#[test]
fn position_prior_attaches_to_first_node_only() {
    // Stay within one window length so the first node has not slid out
    // (the prior leaves the graph with its node).
    let cfg = ScenarioConfig {
        duration_s: 8.0,
        ..ScenarioConfig::default()
    };
    let out = simulate(&cfg, &ErrorBudget::zero()).unwrap();
    let nav = NavData {
        ephemerides: out.ephemerides.clone(),
        klobuchar: Some(out.klobuchar),
    };
    let pipeline = run_odometry(
        GraphConfig {
            topology: Topology::Consecutive,
            ..no_atmo()
        },
        nav,
        &out.observations,
        None,
    )
    .unwrap();
    let priors = pipeline.prior_factor_nodes();
    assert_eq!(priors, vec![0], "priors on nodes {priors:?}");
}
