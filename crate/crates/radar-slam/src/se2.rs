//! SE(2) poses, twists and the exponential/logarithm maps used by the
//! estimator and the pose graph.
//!
//! The exponential map follows the closed form used by the motion model:
//! the translation column is `[vx*t, vy*t]` directly, not the textbook
//! V-matrix form. The logarithm is defined as the exact inverse of that
//! closed form so round trips hold for any rotation magnitude below pi.

use nalgebra::{Matrix3, Vector2, Vector3};

/// Canonical angle representative in (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * std::f64::consts::PI);
    if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    a
}

/// Planar rigid transform: rotation angle plus metric translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    rotation: f64,
    translation: Vector2<f64>,
}

/// SE(2) velocity `[vx, vy, vtheta]` in m/s and rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist2 {
    pub vx: f64,
    pub vy: f64,
    pub vtheta: f64,
}

impl Twist2 {
    pub fn new(vx: f64, vy: f64, vtheta: f64) -> Self {
        Twist2 { vx, vy, vtheta }
    }

    pub fn zero() -> Self {
        Twist2::new(0.0, 0.0, 0.0)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.vtheta)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Twist2::new(v.x, v.y, v.z)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Twist2::new(self.vx * s, self.vy * s, self.vtheta * s)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.vtheta.is_finite()
    }
}

impl Pose2 {
    pub fn new(rotation: f64, translation: Vector2<f64>) -> Self {
        Pose2 {
            rotation: wrap_angle(rotation),
            translation,
        }
    }

    pub fn from_xy_theta(x: f64, y: f64, theta: f64) -> Self {
        Pose2::new(theta, Vector2::new(x, y))
    }

    pub fn identity() -> Self {
        Pose2::new(0.0, Vector2::zeros())
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn translation(&self) -> Vector2<f64> {
        self.translation
    }

    pub fn x(&self) -> f64 {
        self.translation.x
    }

    pub fn y(&self) -> f64 {
        self.translation.y
    }

    /// Homogeneous 3x3 matrix form.
    pub fn matrix(&self) -> Matrix3<f64> {
        let (s, c) = self.rotation.sin_cos();
        Matrix3::new(
            c, -s, self.translation.x, //
            s, c, self.translation.y, //
            0.0, 0.0, 1.0,
        )
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.rotation.sin_cos();
        let t = Vector2::new(
            c * other.translation.x - s * other.translation.y + self.translation.x,
            s * other.translation.x + c * other.translation.y + self.translation.y,
        );
        Pose2::new(self.rotation + other.rotation, t)
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.rotation.sin_cos();
        let t = Vector2::new(
            -(c * self.translation.x + s * self.translation.y),
            -(-s * self.translation.x + c * self.translation.y),
        );
        Pose2::new(-self.rotation, t)
    }

    /// Applies `R*p + t` to a metric point.
    pub fn act_on_point(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let (s, c) = self.rotation.sin_cos();
        Vector2::new(
            c * p.x - s * p.y + self.translation.x,
            s * p.x + c * p.y + self.translation.y,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.is_finite() && self.translation.x.is_finite() && self.translation.y.is_finite()
    }
}

/// Closed-form exponential of a twist over a duration.
///
/// Rotation is `vtheta*t`; translation is `[vx*t, vy*t]` verbatim.
pub fn exp_twist(v: &Twist2, t: f64) -> Pose2 {
    Pose2::new(v.vtheta * t, Vector2::new(v.vx * t, v.vy * t))
}

/// Inverse of [`exp_twist`] with `t = 1`.
///
/// A rotation of exactly pi maps to `vtheta = pi` (the canonical branch).
pub fn log_pose(pose: &Pose2) -> Vector3<f64> {
    Vector3::new(pose.translation.x, pose.translation.y, pose.rotation)
}

/// Left-perturbation operator: `omega (+) T = exp(omega^) * T`.
pub fn perturb(omega: &Vector3<f64>, pose: &Pose2) -> Pose2 {
    let delta = Pose2::new(omega.z, Vector2::new(omega.x, omega.y));
    delta.compose(pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_pose(rng: &mut StdRng) -> Pose2 {
        Pose2::from_xy_theta(
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-3.0..3.0),
        )
    }

    #[test]
    fn exp_pure_translation() {
        let p = exp_twist(&Twist2::new(1.0, 0.0, 0.0), 2.0);
        assert_eq!(p.rotation(), 0.0);
        assert_eq!(p.translation(), Vector2::new(2.0, 0.0));
    }

    #[test]
    fn exp_pure_rotation() {
        let p = exp_twist(&Twist2::new(0.0, 0.0, std::f64::consts::FRAC_PI_2), 1.0);
        assert_abs_diff_eq!(p.rotation(), std::f64::consts::FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(p.translation(), Vector2::zeros());
    }

    #[test]
    fn exp_matches_trig_oracle() {
        // Independent scalar evaluation of the closed-form matrix.
        let (vx, vy, vth, t) = (1.0, 0.5, 0.3, 0.25);
        let p = exp_twist(&Twist2::new(vx, vy, vth), t);
        let m = p.matrix();
        assert_abs_diff_eq!(m[(0, 0)], (vth * t).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], -(vth * t).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 0)], (vth * t).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 2)], vx * t, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 2)], vy * t, epsilon = 1e-15);
    }

    #[test]
    fn log_identity_is_zero() {
        assert_eq!(log_pose(&Pose2::identity()), Vector3::zeros());
    }

    #[test]
    fn log_exp_round_trip() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let v = Vector3::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-3.0..3.0),
            );
            let back = log_pose(&exp_twist(&Twist2::from_vector(&v), 1.0));
            assert_abs_diff_eq!((back - v).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn log_at_pi_boundary() {
        let p = Pose2::from_xy_theta(1.0, 2.0, std::f64::consts::PI);
        assert_eq!(log_pose(&p).z, std::f64::consts::PI);
    }

    #[test]
    fn perturb_zero_is_identity_action() {
        let t = Pose2::from_xy_theta(3.0, -1.0, 0.7);
        assert_eq!(perturb(&Vector3::zeros(), &t), t);
    }

    #[test]
    fn perturb_log_recovers_pose() {
        let s = Pose2::from_xy_theta(2.0, -0.5, 1.2);
        let got = perturb(&log_pose(&s), &Pose2::identity());
        assert_abs_diff_eq!(got.rotation(), s.rotation(), epsilon = 1e-10);
        assert_abs_diff_eq!((got.translation() - s.translation()).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn perturb_matches_matrix_product() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let omega = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let t = random_pose(&mut rng);
            let got = perturb(&omega, &t).matrix();
            let exp_m = exp_twist(&Twist2::from_vector(&omega), 1.0).matrix();
            let want = exp_m * t.matrix();
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let t = random_pose(&mut rng);
            let i = t.compose(&t.inverse());
            assert_abs_diff_eq!(i.rotation(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(i.translation().norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn act_on_point_identity() {
        let p = Vector2::new(4.0, -2.0);
        assert_eq!(Pose2::identity().act_on_point(&p), p);
    }

    #[test]
    fn compose_chain_matches_matrix_oracle() {
        let mut rng = StdRng::seed_from_u64(21);
        let mut pose = Pose2::identity();
        let mut mat = Matrix3::identity();
        for _ in 0..100 {
            let t = random_pose(&mut rng);
            pose = pose.compose(&t);
            mat *= t.matrix();
        }
        assert_abs_diff_eq!((pose.matrix() - mat).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn associativity() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let c = random_pose(&mut rng);
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert_abs_diff_eq!(left.rotation(), right.rotation(), epsilon = 1e-10);
            assert_abs_diff_eq!((left.translation() - right.translation()).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rotation_block_matches_power_series() {
        // The rotation block of the closed form agrees with a 20-term power
        // series of (v*t)^; the translation column intentionally does not
        // for vtheta != 0.
        let v = Twist2::new(0.3, -0.2, 0.9);
        let t = 0.7;
        let gen = Matrix3::new(
            0.0, -v.vtheta * t, v.vx * t, //
            v.vtheta * t, 0.0, v.vy * t, //
            0.0, 0.0, 0.0,
        );
        let mut series = Matrix3::identity();
        let mut term = Matrix3::identity();
        for k in 1..20 {
            term = term * gen / k as f64;
            series += term;
        }
        let closed = exp_twist(&v, t).matrix();
        let rot_err = (closed.fixed_view::<2, 2>(0, 0) - series.fixed_view::<2, 2>(0, 0)).norm();
        assert!(rot_err < 1e-12, "rotation block mismatch: {rot_err}");
        let trans_err = (closed.fixed_view::<2, 1>(0, 2) - series.fixed_view::<2, 1>(0, 2)).norm();
        assert!(trans_err > 1e-3, "translation should follow the printed closed form, not the series");
    }
}
