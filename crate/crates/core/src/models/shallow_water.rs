use rand::Rng;

use super::{check_equil, companion_radius, require_positive, vec2, VACUUM_FLOOR};
use crate::densecore::{Mat, Vector};
use crate::error::Result;
use crate::system::{EntropyPair, EquilVec, RelaxationModel, SampleRng, StateVec};

/// Shallow water with quadratic friction `kappa(h)^2 g hv |hv|`,
/// `kappa(h) = kappa0 / h`, relaxing on the slower `1/eps^2` scale.
///
/// The effective coefficient is singular on flat water; gradients are floored
/// at `grad_floor` wherever they enter a coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowWaterFriction {
    pub g: f64,
    pub kappa0: f64,
    pub grad_floor: f64,
}

impl ShallowWaterFriction {
    pub fn new(g: f64, kappa0: f64, grad_floor: f64) -> Result<Self> {
        Ok(Self {
            g: require_positive("g", g)?,
            kappa0: require_positive("kappa0", kappa0)?,
            grad_floor: require_positive("grad_floor", grad_floor)?,
        })
    }

    pub fn friction(&self, h: f64) -> f64 {
        self.kappa0 / h
    }

    /// `sqrt(h) / (kappa(h) sqrt|dh/dx|)` without regularization.
    pub fn effective_coefficient_exact(&self, h: f64, dh_dx: f64) -> f64 {
        h.sqrt() / (self.friction(h) * dh_dx.abs().sqrt())
    }

    /// `c(u) = g kappa(h) sqrt(h |dh/dx|)`, the rate in
    /// `R(E(u) + M(0) U1) = c(u) U1`.
    pub fn corrector_rate(&self, h: f64, dh_dx: f64) -> f64 {
        self.g * self.friction(h) * (h * dh_dx.abs().max(self.grad_floor)).sqrt()
    }
}

impl RelaxationModel for ShallowWaterFriction {
    fn name(&self) -> &'static str {
        "shallow_water_friction"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn equil_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["h", "hv"]
    }

    fn equil_names(&self) -> &'static [&'static str] {
        &["h"]
    }

    fn relax_exponent(&self) -> u32 {
        2
    }

    fn q_matrix(&self) -> Mat {
        Mat::from_rows(&[&[1.0, 0.0]])
    }

    fn flux(&self, s: &StateVec) -> Vector {
        let (h, m) = (s[0], s[1]);
        vec2(m, m * m / h + 0.5 * self.g * h * h)
    }

    fn relaxation(&self, s: &StateVec) -> Vector {
        let (h, m) = (s[0], s[1]);
        let k = self.friction(h);
        vec2(0.0, k * k * self.g * m * m.abs())
    }

    fn flux_jacobian(&self, s: &StateVec) -> Mat {
        let (h, m) = (s[0], s[1]);
        let v = m / h;
        Mat::from_rows(&[&[0.0, 1.0], &[self.g * h - v * v, 2.0 * v]])
    }

    fn relaxation_jacobian(&self, s: &StateVec) -> Mat {
        let (h, m) = (s[0], s[1]);
        let k2 = self.kappa0 * self.kappa0;
        Mat::from_rows(&[
            &[0.0, 0.0],
            &[
                -2.0 * k2 / h.powi(3) * self.g * m * m.abs(),
                2.0 * k2 / (h * h) * self.g * m.abs(),
            ],
        ])
    }

    fn equilibrium(&self, u: &EquilVec) -> Result<StateVec> {
        check_equil(self, u)?;
        Ok(vec2(u[0], 0.0))
    }

    fn equilibrium_jacobian(&self, u: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        Ok(Mat::from_rows(&[&[1.0], &[0.0]]))
    }

    fn admissible(&self, s: &StateVec) -> bool {
        s.dim() == 2 && s.is_finite() && s[0] > VACUUM_FLOOR
    }

    fn equil_admissible(&self, u: &EquilVec) -> bool {
        u.dim() == 1 && u[0].is_finite() && u[0] > VACUUM_FLOOR
    }

    fn spectral_radius(&self, s: &StateVec) -> f64 {
        let v = s[1] / s[0];
        companion_radius(self.g * s[0] - v * v, 2.0 * v)
    }

    fn effective_matrix(&self, u: &EquilVec, du_dx: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        let h = u[0];
        let grad = du_dx[0].abs().max(self.grad_floor);
        Ok(Mat::diag(&[h.sqrt() / (self.friction(h) * grad.sqrt())]))
    }

    /// Secant of `V -> R(E(u) + M(0) V)` along the corrector: `c(u) diag(0, 1)`.
    fn corrector_matrix(&self, u: &EquilVec, du_dx: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        Ok(Mat::diag(&[0.0, self.corrector_rate(u[0], du_dx[0])]))
    }

    /// Friction balancing the hydrostatic gradient:
    /// `g kappa(h)^2 hv |hv| = -g h dh/dx`, with `|dh/dx|` floored as in `M`.
    fn corrector_closed_form(&self, u: &EquilVec, du_dx: &EquilVec) -> Option<Result<StateVec>> {
        Some(check_equil(self, u).map(|_| {
            let h = u[0];
            let grad = du_dx[0].abs().max(self.grad_floor);
            let m = -du_dx[0].signum() * (h.powi(3) * grad).sqrt() / self.kappa0
                * (du_dx[0].abs() / grad);
            vec2(0.0, m)
        }))
    }

    fn relaxation_scaling(&self, eps: f64) -> Option<Mat> {
        Some(Mat::diag(&[eps, 1.0]))
    }

    fn entropy(&self) -> Option<&dyn EntropyPair> {
        Some(self)
    }

    fn sample_state(&self, rng: &mut SampleRng) -> StateVec {
        let h = rng.random_range(0.5..2.0);
        let v = rng.random_range(-1.0..1.0);
        vec2(h, h * v)
    }

    fn sample_equil(&self, rng: &mut SampleRng) -> EquilVec {
        Vector::from_slice(&[rng.random_range(0.5..2.0)])
    }

    fn sample_gradient(&self, rng: &mut SampleRng) -> EquilVec {
        // keep clear of the flat-water singularity
        let mag = rng.random_range(0.1..1.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        Vector::from_slice(&[sign * mag])
    }
}

impl EntropyPair for ShallowWaterFriction {
    fn entropy(&self, s: &StateVec) -> f64 {
        let (h, m) = (s[0], s[1]);
        0.5 * m * m / h + 0.5 * self.g * h * h
    }

    fn entropy_flux(&self, s: &StateVec) -> f64 {
        let (h, m) = (s[0], s[1]);
        let v = m / h;
        (0.5 * h * v * v + self.g * h * h) * v
    }

    fn entropy_gradient(&self, s: &StateVec) -> Vector {
        let v = s[1] / s[0];
        vec2(-0.5 * v * v + self.g * s[0], v)
    }

    fn entropy_hessian(&self, s: &StateVec) -> Mat {
        let h = s[0];
        let v = s[1] / h;
        Mat::from_rows(&[&[v * v / h + self.g, -v / h], &[-v / h, 1.0 / h]])
    }
}
