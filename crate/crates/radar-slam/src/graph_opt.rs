//! Nonlinear least-squares over keyframe poses.
//!
//! Minimizes the sum of `e^T L e` over all graph edges with
//! `e = log(Z^-1 * T_i^-1 * T_j)`, the anchor node held fixed as the
//! gauge. Levenberg-Marquardt with analytic Jacobians under the left
//! perturbation; dense Cholesky on the reduced normal equations.

use crate::map::PoseGraph;
use crate::se2::{log_pose, perturb, wrap_angle, Pose2};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct GraphOptConfig {
    pub max_iterations: usize,
    /// Relative chi-squared change below which iteration stops.
    pub relative_tolerance: f64,
    pub lm_initial_damping: f64,
}

impl Default for GraphOptConfig {
    fn default() -> Self {
        GraphOptConfig {
            max_iterations: 100,
            relative_tolerance: 1e-9,
            lm_initial_damping: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub poses: BTreeMap<u64, Pose2>,
    pub initial_chi2: f64,
    pub final_chi2: f64,
    pub iterations: usize,
}

/// Edge residual `log(Z^-1 * T_i^-1 * T_j)`.
pub fn edge_residual(measurement: &Pose2, t_i: &Pose2, t_j: &Pose2) -> Vector3<f64> {
    log_pose(&measurement.inverse().compose(&t_i.inverse()).compose(t_j))
}

/// Analytic edge Jacobians `(J_i, J_j)` under left perturbation of each
/// endpoint.
pub fn edge_jacobians(measurement: &Pose2, t_i: &Pose2, t_j: &Pose2) -> (Matrix3<f64>, Matrix3<f64>) {
    let b = measurement.inverse().compose(&t_i.inverse());
    let (sb, cb) = b.rotation().sin_cos();
    let tj = t_j.translation();
    let d = Matrix3::new(
        cb, -sb, cb * (-tj.y) - sb * tj.x, //
        sb, cb, sb * (-tj.y) + cb * tj.x, //
        0.0, 0.0, 1.0,
    );
    (-d, d)
}

fn chi2(graph: &PoseGraph, poses: &BTreeMap<u64, Pose2>) -> f64 {
    let mut total = 0.0;
    for e in graph.edges() {
        let r = edge_residual(&e.measurement, &poses[&e.from], &poses[&e.to]);
        total += (r.transpose() * e.information * r)[(0, 0)];
    }
    total
}

fn check_connected(graph: &PoseGraph) -> Result<()> {
    let ids: Vec<u64> = graph.nodes().keys().cloned().collect();
    if ids.len() <= 1 {
        return Ok(());
    }
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    for e in graph.edges() {
        let (a, b) = (index[&e.from], index[&e.to]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; ids.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::Graph("pose graph is disconnected".into()))
    }
}

/// Optimizes all node poses with the anchor held fixed.
pub fn optimize(graph: &PoseGraph, anchor: u64, cfg: &GraphOptConfig) -> Result<OptimizeReport> {
    if !graph.nodes().contains_key(&anchor) {
        return Err(Error::Graph(format!("anchor node {anchor} does not exist")));
    }
    check_connected(graph)?;
    let mut poses: BTreeMap<u64, Pose2> = graph.nodes().clone();
    // Column index per free (non-anchor) node.
    let free: BTreeMap<u64, usize> = poses
        .keys()
        .filter(|&&id| id != anchor)
        .enumerate()
        .map(|(i, &id)| (id, 3 * i))
        .collect();
    let dim = 3 * free.len();
    let initial_chi2 = chi2(graph, &poses);
    if !initial_chi2.is_finite() {
        return Err(Error::NumericalFailure("non-finite initial chi2".into()));
    }
    if dim == 0 || graph.edges().is_empty() {
        return Ok(OptimizeReport {
            poses,
            initial_chi2,
            final_chi2: initial_chi2,
            iterations: 0,
        });
    }
    let mut cost = initial_chi2;
    let mut damping = cfg.lm_initial_damping;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut b = DVector::<f64>::zeros(dim);
        for e in graph.edges() {
            let r = edge_residual(&e.measurement, &poses[&e.from], &poses[&e.to]);
            let (j_i, j_j) = edge_jacobians(&e.measurement, &poses[&e.from], &poses[&e.to]);
            let blocks = [(free.get(&e.from), j_i), (free.get(&e.to), j_j)];
            for (col_a, j_a) in &blocks {
                let Some(&ca) = col_a else { continue };
                let ta = j_a.transpose() * e.information;
                for (col_b, j_b) in &blocks {
                    let Some(&cb) = col_b else { continue };
                    let block = ta * j_b;
                    for r_ in 0..3 {
                        for c_ in 0..3 {
                            h[(ca + r_, cb + c_)] += block[(r_, c_)];
                        }
                    }
                }
                let g = ta * r;
                for r_ in 0..3 {
                    b[ca + r_] += g[r_];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..10 {
            let mut lhs = h.clone();
            for i in 0..dim {
                lhs[(i, i)] += damping;
            }
            let Some(chol) = lhs.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&b));
            let mut candidate = poses.clone();
            for (&id, &col) in &free {
                let d = Vector3::new(delta[col], delta[col + 1], delta[col + 2]);
                candidate.insert(id, perturb(&d, &poses[&id]));
            }
            let new_cost = chi2(graph, &candidate);
            if !new_cost.is_finite() {
                return Err(Error::NumericalFailure("non-finite chi2 during optimization".into()));
            }
            if new_cost <= cost {
                let rel = if cost > 0.0 { (cost - new_cost) / cost } else { 0.0 };
                poses = candidate;
                cost = new_cost;
                damping = (damping * 0.3).max(1e-15);
                accepted = true;
                if rel < cfg.relative_tolerance {
                    return Ok(OptimizeReport {
                        poses,
                        initial_chi2,
                        final_chi2: cost,
                        iterations,
                    });
                }
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(OptimizeReport {
        poses,
        initial_chi2,
        final_chi2: cost,
        iterations,
    })
}

/// Maximum relative deviation between analytic edge Jacobians and central
/// finite differences over all edges of the graph.
pub fn jacobian_check(graph: &PoseGraph) -> f64 {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for e in graph.edges() {
        let t_i = graph.nodes()[&e.from];
        let t_j = graph.nodes()[&e.to];
        let (j_i, j_j) = edge_jacobians(&e.measurement, &t_i, &t_j);
        for k in 0..3 {
            let mut d = Vector3::zeros();
            d[k] = h;
            let fd_col = |plus: Vector3<f64>, which_i: bool| -> Vector3<f64> {
                let (pi, pj) = if which_i {
                    (perturb(&plus, &t_i), t_j)
                } else {
                    (t_i, perturb(&plus, &t_j))
                };
                edge_residual(&e.measurement, &pi, &pj)
            };
            for (which_i, analytic) in [(true, j_i.column(k)), (false, j_j.column(k))] {
                let rp = fd_col(d, which_i);
                let rm = fd_col(-d, which_i);
                let mut fd = (rp - rm) / (2.0 * h);
                // Angle row may cross the wrap branch.
                fd[2] = wrap_angle(rp[2] - rm[2]) / (2.0 * h);
                let scale = fd.norm().max(1.0);
                worst = worst.max((fd - analytic).norm() / scale);
            }
        }
    }
    worst
}

/// Plain-text graph dump (`VERTEX_SE2` / `EDGE_SE2` lines) for external
/// cross-checking. Edge information listed upper-triangular row-major.
pub fn dump_graph(graph: &PoseGraph) -> String {
    let mut out = String::new();
    for (&id, pose) in graph.nodes() {
        out.push_str(&format!(
            "VERTEX_SE2 {id} {:.9} {:.9} {:.9}\n",
            pose.x(),
            pose.y(),
            pose.rotation()
        ));
    }
    for e in graph.edges() {
        let m = &e.measurement;
        let i = &e.information;
        out.push_str(&format!(
            "EDGE_SE2 {} {} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}\n",
            e.from,
            e.to,
            m.x(),
            m.y(),
            m.rotation(),
            i[(0, 0)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 1)],
            i[(1, 2)],
            i[(2, 2)]
        ));
    }
    out
}
