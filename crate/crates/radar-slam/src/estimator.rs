//! Joint optimization of the current radar pose and velocity with per-beam
//! motion compensation.
//!
//! Each tracked feature observed at beam time `t` contributes the residual
//! `r = T_wj^-1 * p_w - exp(v*t) * p_local`, robustified with a Cauchy
//! weight; a velocity prior `e_v = v - log(T_prev^-1 * T_wj) / dt` couples
//! the pose and twist. Levenberg-Marquardt with analytic Jacobians over the
//! stacked state `[v, pose-perturbation]`.

use crate::se2::{exp_twist, log_pose, perturb, Pose2, Twist2};
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x6, Matrix6, Vector2, Vector3, Vector6};

/// One motion-compensated feature residual term.
#[derive(Debug, Clone)]
pub struct FeatureObservation {
    /// Landmark in the world frame.
    pub world_point: Vector2<f64>,
    /// Raw observation in the beam's local frame.
    pub observed_local: Vector2<f64>,
    /// Beam capture time relative to the scan center, seconds.
    pub beam_time: f64,
    /// 2x2 SPD information of the observation.
    pub information: Matrix2<f64>,
}

/// The optimized state: current pose and twist.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorState {
    pub pose: Pose2,
    pub twist: Twist2,
}

/// Solver settings and residual weights.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// 3x3 SPD information of the velocity prior.
    pub velocity_information: Matrix3<f64>,
    /// Cauchy scale in meters.
    pub cauchy_scale: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub lm_initial_damping: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            velocity_information: Matrix3::from_diagonal(&Vector3::new(25.0, 25.0, 100.0)),
            cauchy_scale: 0.5,
            max_iterations: 50,
            convergence_tol: 1e-12,
            lm_initial_damping: 1e-4,
        }
    }
}

/// One accepted or rejected solver step.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub damping: f64,
    pub accepted: bool,
}

/// Solve outcome: final state, cost and diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub state: EstimatorState,
    pub final_cost: f64,
    pub iterations: Vec<IterationRecord>,
    /// Fewer observations than unknowns; the prior dominates.
    pub degenerate: bool,
    /// Pose block of the Gauss-Newton Hessian at the solution.
    pub pose_information: Matrix3<f64>,
}

impl SolveReport {
    /// Plain-text log lines: `iter cost damping accepted`.
    pub fn log_lines(&self) -> Vec<String> {
        self.iterations
            .iter()
            .map(|r| {
                format!(
                    "iter={} cost={:.6e} damping={:.3e} accepted={}",
                    r.iteration, r.cost, r.damping, r.accepted
                )
            })
            .collect()
    }
}

/// Raw (unweighted) feature residual of Eq-style motion compensation.
pub fn feature_residual_raw(obs: &FeatureObservation, state: &EstimatorState) -> Vector2<f64> {
    let compensated = exp_twist(&state.twist, obs.beam_time).act_on_point(&obs.observed_local);
    state.pose.inverse().act_on_point(&obs.world_point) - compensated
}

/// Cauchy IRLS weight for a residual under the given information.
pub fn cauchy_weight(residual: &Vector2<f64>, information: &Matrix2<f64>, scale: f64) -> f64 {
    let q = (residual.transpose() * information * residual)[(0, 0)];
    1.0 / (1.0 + q / (scale * scale))
}

/// Feature residual with the Cauchy weight folded into the information
/// (returned as the pair used by the normal equations).
pub fn feature_residual(
    obs: &FeatureObservation,
    state: &EstimatorState,
    cauchy_scale: f64,
) -> (Vector2<f64>, Matrix2<f64>) {
    let r = feature_residual_raw(obs, state);
    let w = cauchy_weight(&r, &obs.information, cauchy_scale);
    (r, obs.information * w)
}

/// Velocity prior residual `v - log(T_prev^-1 * T) / dt`.
pub fn velocity_residual(state: &EstimatorState, prev_pose: &Pose2, dt: f64) -> Vector3<f64> {
    let rel = prev_pose.inverse().compose(&state.pose);
    state.twist.as_vector() - log_pose(&rel) / dt
}

/// Analytic Jacobian of the feature residual, split `[J_v | J_p]` over the
/// twist and the left pose perturbation.
pub fn feature_jacobian(obs: &FeatureObservation, state: &EstimatorState) -> (Matrix2x3<f64>, Matrix2x3<f64>) {
    let t = obs.beam_time;
    let (s, c) = (state.twist.vtheta * t).sin_cos();
    let (px, py) = (obs.observed_local.x, obs.observed_local.y);
    // d(exp(v t) p)/dv, negated.
    let j_v = -Matrix2x3::new(
        t, 0.0, t * (-s * px - c * py), //
        0.0, t, t * (c * px - s * py),
    );
    // d(T^-1 p_w)/d(delta) for T <- exp(delta) * T.
    let (sp, cp) = state.pose.rotation().sin_cos();
    let r_t_inv = Matrix2::new(cp, sp, -sp, cp);
    let (wx, wy) = (obs.world_point.x, obs.world_point.y);
    let j_p = r_t_inv * Matrix2x3::new(-1.0, 0.0, wy, 0.0, -1.0, -wx);
    (j_v, j_p)
}

/// Analytic Jacobian of the velocity prior, split `[J_v | J_p]`.
pub fn velocity_prior_jacobian(state: &EstimatorState, prev_pose: &Pose2, dt: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let j_v = Matrix3::identity();
    // d log(B exp(delta) T)/d delta with B = prev^-1.
    let b = prev_pose.inverse();
    let (sb, cb) = b.rotation().sin_cos();
    let t_cur = state.pose.translation();
    let d = Matrix3::new(
        cb, -sb, cb * (-t_cur.y) - sb * t_cur.x, //
        sb, cb, sb * (-t_cur.y) + cb * t_cur.x, //
        0.0, 0.0, 1.0,
    );
    let j_p = -d / dt;
    (j_v, j_p)
}

fn total_cost(
    observations: &[FeatureObservation],
    state: &EstimatorState,
    prev_pose: &Pose2,
    dt: f64,
    cfg: &EstimatorConfig,
) -> f64 {
    let s2 = cfg.cauchy_scale * cfg.cauchy_scale;
    let mut cost = 0.0;
    for obs in observations {
        let r = feature_residual_raw(obs, state);
        let q = (r.transpose() * obs.information * r)[(0, 0)];
        cost += s2 * (1.0 + q / s2).ln();
    }
    let ev = velocity_residual(state, prev_pose, dt);
    cost + (ev.transpose() * cfg.velocity_information * ev)[(0, 0)]
}

/// Jointly optimizes pose and twist with Levenberg-Marquardt.
///
/// The increment applies as plain addition on the twist and as a left
/// perturbation on the pose. Terminates when the accepted cost change
/// drops below `convergence_tol` or the iteration budget is exhausted.
pub fn solve(
    observations: &[FeatureObservation],
    init: &EstimatorState,
    prev_pose: &Pose2,
    dt: f64,
    cfg: &EstimatorConfig,
) -> Result<SolveReport> {
    if dt <= 0.0 {
        return Err(Error::invalid("solve: dt must be positive"));
    }
    let degenerate = observations.len() < 3;
    let mut state = *init;
    let mut damping = cfg.lm_initial_damping;
    let mut cost = total_cost(observations, &state, prev_pose, dt, cfg);
    if !cost.is_finite() {
        return Err(Error::NumericalFailure("non-finite initial cost".into()));
    }
    let mut iterations = Vec::new();
    for iteration in 0..cfg.max_iterations {
        let (h, b) = normal_equations(observations, &state, prev_pose, dt, cfg);
        let mut accepted = false;
        let mut attempt_damping = damping;
        // Inner damping search: at most a few rejects per outer iteration.
        for _ in 0..8 {
            let lhs = h + Matrix6::identity() * attempt_damping;
            let delta = match lhs.cholesky() {
                Some(chol) => chol.solve(&(-b)),
                None => {
                    attempt_damping *= 10.0;
                    continue;
                }
            };
            let candidate = apply_increment(&state, &delta);
            let new_cost = total_cost(observations, &candidate, prev_pose, dt, cfg);
            if !new_cost.is_finite() {
                return Err(Error::NumericalFailure("non-finite cost during solve".into()));
            }
            if new_cost <= cost {
                let improvement = cost - new_cost;
                state = candidate;
                cost = new_cost;
                damping = (attempt_damping * 0.3).max(1e-12);
                iterations.push(IterationRecord {
                    iteration,
                    cost,
                    damping: attempt_damping,
                    accepted: true,
                });
                accepted = true;
                if improvement < cfg.convergence_tol {
                    let (h_final, _) = normal_equations(observations, &state, prev_pose, dt, cfg);
                    return Ok(finish(state, cost, iterations, degenerate, h_final));
                }
                break;
            }
            iterations.push(IterationRecord {
                iteration,
                cost: new_cost,
                damping: attempt_damping,
                accepted: false,
            });
            attempt_damping *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let (h_final, _) = normal_equations(observations, &state, prev_pose, dt, cfg);
    Ok(finish(state, cost, iterations, degenerate, h_final))
}

fn finish(
    state: EstimatorState,
    cost: f64,
    iterations: Vec<IterationRecord>,
    degenerate: bool,
    h: Matrix6<f64>,
) -> SolveReport {
    let pose_information = h.fixed_view::<3, 3>(3, 3).into_owned();
    SolveReport {
        state,
        final_cost: cost,
        iterations,
        degenerate,
        pose_information,
    }
}

fn apply_increment(state: &EstimatorState, delta: &Vector6<f64>) -> EstimatorState {
    let dv = Vector3::new(delta[0], delta[1], delta[2]);
    let dp = Vector3::new(delta[3], delta[4], delta[5]);
    EstimatorState {
        twist: Twist2::from_vector(&(state.twist.as_vector() + dv)),
        pose: perturb(&dp, &state.pose),
    }
}

fn normal_equations(
    observations: &[FeatureObservation],
    state: &EstimatorState,
    prev_pose: &Pose2,
    dt: f64,
    cfg: &EstimatorConfig,
) -> (Matrix6<f64>, Vector6<f64>) {
    let mut h = Matrix6::zeros();
    let mut b = Vector6::zeros();
    for obs in observations {
        let (r, info) = feature_residual(obs, state, cfg.cauchy_scale);
        let (j_v, j_p) = feature_jacobian(obs, state);
        let mut j = nalgebra::Matrix2x6::zeros();
        j.fixed_view_mut::<2, 3>(0, 0).copy_from(&j_v);
        j.fixed_view_mut::<2, 3>(0, 3).copy_from(&j_p);
        h += j.transpose() * info * j;
        b += j.transpose() * info * r;
    }
    let ev = velocity_residual(state, prev_pose, dt);
    let (jv_v, jv_p) = velocity_prior_jacobian(state, prev_pose, dt);
    let mut jv = Matrix3x6::zeros();
    jv.fixed_view_mut::<3, 3>(0, 0).copy_from(&jv_v);
    jv.fixed_view_mut::<3, 3>(0, 3).copy_from(&jv_p);
    h += jv.transpose() * cfg.velocity_information * jv;
    b += jv.transpose() * cfg.velocity_information * ev;
    (h, b)
}

/// World position of a newly tracked point under the optimized state:
/// `p_w = T * exp(v*t) * p_local`.
pub fn place_new_point(obs_local: &Vector2<f64>, beam_time: f64, state: &EstimatorState) -> Vector2<f64> {
    let compensated = exp_twist(&state.twist, beam_time).act_on_point(obs_local);
    state.pose.act_on_point(&compensated)
}
