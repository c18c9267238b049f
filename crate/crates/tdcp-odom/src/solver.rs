//! Dogleg Gauss-Newton solver over a window of state nodes.
//!
//! Each iteration linearizes every factor (applying the per-iteration DCS
//! scale to TDCP factors), assembles dense normal equations over the stacked
//! free tangents, and takes a dogleg step blending the Gauss-Newton and
//! steepest-descent directions inside the trust radius. Steps are accepted or
//! rejected on the gain ratio with the robust scales frozen, which keeps the
//! accepted-step cost sequence non-increasing within each iteration.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SVector, Vector3};
use thiserror::Error;

use crate::factors::{dcs_scale, Factor, FactorError, StateNode};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("window has no free states")]
    NoFreeStates,
    #[error("factor references unknown node {0}")]
    UnknownNode(u64),
    #[error(
        "normal equations not positive definite (n={n}, diag range [{min_diag:.3e}, {max_diag:.3e}])"
    )]
    NormalEquations {
        n: usize,
        min_diag: f64,
        max_diag: f64,
    },
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// Iteration controls. Defaults match the pipeline configuration.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub cost_rel_tol: f64,
    pub trust_radius_init: f64,
    pub trust_radius_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 20,
            cost_rel_tol: 1.0e-6,
            trust_radius_init: 1.0,
            trust_radius_max: 100.0,
        }
    }
}

/// One accepted or rejected dogleg attempt.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub cost_before: f64,
    pub cost_after: f64,
    pub gain_ratio: f64,
    pub trust_radius: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub final_cost: f64,
    pub iterations: usize,
    pub steps: Vec<StepRecord>,
}

struct Layout {
    /// Column of each node's 12-dof block, or usize::MAX when gauge-fixed.
    node_col: Vec<usize>,
    n_cols: usize,
}

fn layout(fixed: &[bool]) -> Layout {
    let mut node_col = Vec::with_capacity(fixed.len());
    let mut next = 0usize;
    for f in fixed {
        if *f {
            node_col.push(usize::MAX);
        } else {
            node_col.push(next);
            next += 12;
        }
    }
    Layout {
        node_col,
        n_cols: next,
    }
}

struct Linearization {
    h: DMatrix<f64>,
    g: DVector<f64>,
    cost: f64,
    scales: Vec<f64>,
}

/// Evaluates all factors, returning whitened & robust-scaled residual cost.
/// With `frozen_scales` given, reuses those DCS scales instead of recomputing.
fn evaluate_cost(
    factors: &[Factor],
    states: &[StateNode],
    idx: &BTreeMap<u64, usize>,
    lever_arm: &Vector3<f64>,
    dcs_phi: f64,
    frozen_scales: Option<&[f64]>,
) -> Result<(f64, Vec<f64>), SolveError> {
    let get = |id: u64| states[idx[&id]];
    let mut cost = 0.0;
    let mut scales = Vec::with_capacity(factors.len());
    for (k, f) in factors.iter().enumerate() {
        let eval = f.evaluate(lever_arm, &get)?;
        let s = match frozen_scales {
            Some(fs) => fs[k],
            None => {
                if f.is_tdcp() {
                    dcs_scale(eval.residual.norm_squared(), dcs_phi)
                } else {
                    1.0
                }
            }
        };
        cost += 0.5 * s * s * eval.residual.norm_squared();
        scales.push(s);
    }
    Ok((cost, scales))
}

fn linearize(
    factors: &[Factor],
    states: &[StateNode],
    idx: &BTreeMap<u64, usize>,
    lay: &Layout,
    lever_arm: &Vector3<f64>,
    dcs_phi: f64,
) -> Result<Linearization, SolveError> {
    let get = |id: u64| states[idx[&id]];
    let n = lay.n_cols;
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut g = DVector::<f64>::zeros(n);
    let mut cost = 0.0;
    let mut scales = Vec::with_capacity(factors.len());

    for f in factors {
        let eval = f.evaluate(lever_arm, &get)?;
        let s = if f.is_tdcp() {
            dcs_scale(eval.residual.norm_squared(), dcs_phi)
        } else {
            1.0
        };
        scales.push(s);
        let r = &eval.residual * s;
        cost += 0.5 * r.norm_squared();

        // Gather the scaled jacobian into global columns.
        let dim = r.len();
        let node_ids = f.node_ids();
        let mut j_global: Vec<(usize, DMatrix<f64>)> = Vec::new();
        for (blk, id) in node_ids.iter().enumerate() {
            let node_i = *idx.get(id).ok_or(SolveError::UnknownNode(*id))?;
            if lay.node_col[node_i] == usize::MAX {
                continue;
            }
            j_global.push((lay.node_col[node_i], &eval.jacobians[blk] * s));
        }

        for (ca, ja) in &j_global {
            // g += J^T r
            for c in 0..12 {
                let mut acc = 0.0;
                for row in 0..dim {
                    acc += ja[(row, c)] * r[row];
                }
                g[ca + c] += acc;
            }
            for (cb, jb) in &j_global {
                if cb < ca {
                    continue; // fill upper triangle, mirror later
                }
                for c1 in 0..12 {
                    for c2 in 0..12 {
                        let mut acc = 0.0;
                        for row in 0..dim {
                            acc += ja[(row, c1)] * jb[(row, c2)];
                        }
                        h[(ca + c1, cb + c2)] += acc;
                    }
                }
            }
        }
    }

    // Mirror to the lower triangle.
    for r in 0..n {
        for c in (r + 1)..n {
            h[(c, r)] = h[(r, c)];
        }
    }

    Ok(Linearization { h, g, cost, scales })
}

fn apply_step(states: &[StateNode], lay: &Layout, step: &DVector<f64>) -> Vec<StateNode> {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if lay.node_col[i] == usize::MAX {
                return *s;
            }
            let mut dx = SVector::<f64, 12>::zeros();
            for k in 0..12 {
                dx[k] = step[lay.node_col[i] + k];
            }
            s.retract(&dx)
        })
        .collect()
}

/// Dogleg step for trust radius `radius` given the GN step and gradient.
fn dogleg_step(
    h_gn: &DVector<f64>,
    gradient: &DVector<f64>,
    hessian: &DMatrix<f64>,
    radius: f64,
) -> DVector<f64> {
    let gn_norm = h_gn.norm();
    if gn_norm <= radius {
        return h_gn.clone();
    }
    let g_norm2 = gradient.norm_squared();
    let hg = hessian * gradient;
    let ghg = gradient.dot(&hg);
    let alpha = if ghg > 1.0e-300 { g_norm2 / ghg } else { 0.0 };
    let cauchy = gradient * (-alpha);
    let cauchy_norm = cauchy.norm();
    if cauchy_norm >= radius {
        return gradient * (-radius / g_norm2.sqrt());
    }
    // Blend from the Cauchy point toward the GN step to the boundary.
    let v = h_gn - &cauchy;
    let a = v.norm_squared();
    let b = cauchy.dot(&v);
    let c = cauchy_norm * cauchy_norm - radius * radius;
    let disc = (b * b - a * c).max(0.0).sqrt();
    let beta = if b <= 0.0 {
        (-b + disc) / a.max(1.0e-300)
    } else {
        -c / (b + disc).max(1.0e-300)
    };
    &cauchy + v * beta.clamp(0.0, 1.0)
}

/// Solves the window in place, returning the iteration trace.
#[allow(clippy::too_many_arguments)]
pub fn solve_window(
    ids: &[u64],
    states: &mut [StateNode],
    fixed: &[bool],
    factors: &[Factor],
    lever_arm: &Vector3<f64>,
    dcs_phi: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    assert_eq!(ids.len(), states.len());
    assert_eq!(ids.len(), fixed.len());
    let idx: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let lay = layout(fixed);
    if lay.n_cols == 0 || states.is_empty() {
        return Err(SolveError::NoFreeStates);
    }

    let mut report = SolveReport::default();
    let mut radius = cfg.trust_radius_init;
    let mut current: Vec<StateNode> = states.to_vec();

    for _ in 0..cfg.max_iter {
        report.iterations += 1;
        let lin = linearize(factors, &current, &idx, &lay, lever_arm, dcs_phi)?;
        report.final_cost = lin.cost;
        if lin.cost < 1.0e-30 || lin.g.norm() < 1.0e-14 {
            break;
        }

        let chol = nalgebra::linalg::Cholesky::new(lin.h.clone()).ok_or_else(|| {
            let mut min_diag = f64::INFINITY;
            let mut max_diag = f64::NEG_INFINITY;
            for i in 0..lin.h.nrows() {
                min_diag = min_diag.min(lin.h[(i, i)]);
                max_diag = max_diag.max(lin.h[(i, i)]);
            }
            SolveError::NormalEquations {
                n: lin.h.nrows(),
                min_diag,
                max_diag,
            }
        })?;
        let h_gn = chol.solve(&(-&lin.g));

        // Try steps with the current linearization, shrinking on rejection.
        let mut converged = false;
        let mut accepted = false;
        for _ in 0..12 {
            let step = dogleg_step(&h_gn, &lin.g, &lin.h, radius);
            let step_norm = step.norm();
            if step_norm < 1.0e-14 {
                converged = true;
                break;
            }
            let predicted = -lin.g.dot(&step) - 0.5 * step.dot(&(&lin.h * &step));
            let candidate = apply_step(&current, &lay, &step);
            let cand_cost = match evaluate_cost(
                factors,
                &candidate,
                &idx,
                lever_arm,
                dcs_phi,
                Some(&lin.scales),
            ) {
                Ok((c, _)) => c,
                // A wild step can push a relative pose past the log domain;
                // treat it as a rejected step rather than a fatal error.
                Err(SolveError::Factor(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            let gain = if predicted.abs() > 1.0e-300 {
                (lin.cost - cand_cost) / predicted
            } else if cand_cost < lin.cost {
                1.0
            } else {
                0.0
            };
            report.steps.push(StepRecord {
                cost_before: lin.cost,
                cost_after: cand_cost,
                gain_ratio: gain,
                trust_radius: radius,
                step_norm,
                accepted: gain > 0.25,
            });
            if gain > 0.25 {
                current = candidate;
                if gain > 0.75 {
                    radius = radius.max(3.0 * step_norm).min(cfg.trust_radius_max);
                }
                report.final_cost = cand_cost;
                if (lin.cost - cand_cost).abs() <= cfg.cost_rel_tol * lin.cost.max(1.0e-300) {
                    converged = true;
                }
                accepted = true;
                break;
            }
            radius *= 0.5;
            if radius < 1.0e-12 {
                converged = true;
                break;
            }
        }
        if converged || !accepted {
            break;
        }
    }

    states.clone_from_slice(&current);
    Ok(report)
}
