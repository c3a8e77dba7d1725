use rand::Rng;

use super::{check_equil, companion_radius, require_positive, vec2, VACUUM_FLOOR};
use crate::densecore::{Mat, Vector};
use crate::error::Result;
use crate::system::{EntropyPair, EquilVec, RelaxationModel, SampleRng, StateVec};

/// Isentropic Euler equations with linear friction, `U = (rho, rho v)`,
/// polytropic pressure `p = kappa_p rho^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFriction {
    pub kappa_p: f64,
    pub gamma: f64,
}

impl EulerFriction {
    pub fn new(kappa_p: f64, gamma: f64) -> Result<Self> {
        require_positive("kappa_p", kappa_p)?;
        if !(gamma > 1.0) {
            return Err(crate::Error::Config(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        Ok(Self { kappa_p, gamma })
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.kappa_p * rho.powf(self.gamma)
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.kappa_p * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `rho e(rho)` with `e' = p / rho^2`.
    fn internal_energy_density(&self, rho: f64) -> f64 {
        self.kappa_p * rho.powf(self.gamma) / (self.gamma - 1.0)
    }
}

impl RelaxationModel for EulerFriction {
    fn name(&self) -> &'static str {
        "euler_friction"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn equil_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["rho", "rho_v"]
    }

    fn equil_names(&self) -> &'static [&'static str] {
        &["rho"]
    }

    fn q_matrix(&self) -> Mat {
        Mat::from_rows(&[&[1.0, 0.0]])
    }

    fn flux(&self, s: &StateVec) -> Vector {
        let (rho, m) = (s[0], s[1]);
        vec2(m, m * m / rho + self.pressure(rho))
    }

    fn relaxation(&self, s: &StateVec) -> Vector {
        vec2(0.0, s[1])
    }

    fn flux_jacobian(&self, s: &StateVec) -> Mat {
        let (rho, m) = (s[0], s[1]);
        let v = m / rho;
        Mat::from_rows(&[
            &[0.0, 1.0],
            &[self.pressure_derivative(rho) - v * v, 2.0 * v],
        ])
    }

    fn relaxation_jacobian(&self, _s: &StateVec) -> Mat {
        Mat::diag(&[0.0, 1.0])
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
        let a = self.pressure_derivative(s[0]) - v * v;
        companion_radius(a, 2.0 * v)
    }

    fn effective_matrix(&self, u: &EquilVec, _du_dx: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        Ok(Mat::diag(&[self.pressure_derivative(u[0])]))
    }

    /// `(0, -dp/dx)`
    fn corrector_closed_form(&self, u: &EquilVec, du_dx: &EquilVec) -> Option<Result<StateVec>> {
        Some(check_equil(self, u).map(|_| vec2(0.0, -self.pressure_derivative(u[0]) * du_dx[0])))
    }

    fn entropy(&self) -> Option<&dyn EntropyPair> {
        Some(self)
    }

    fn sample_state(&self, rng: &mut SampleRng) -> StateVec {
        let rho = rng.random_range(0.5..2.0);
        let v = rng.random_range(-1.0..1.0);
        vec2(rho, rho * v)
    }

    fn sample_equil(&self, rng: &mut SampleRng) -> EquilVec {
        Vector::from_slice(&[rng.random_range(0.5..2.0)])
    }
}

impl EntropyPair for EulerFriction {
    fn entropy(&self, s: &StateVec) -> f64 {
        let (rho, m) = (s[0], s[1]);
        0.5 * m * m / rho + self.internal_energy_density(rho)
    }

    fn entropy_flux(&self, s: &StateVec) -> f64 {
        let (rho, m) = (s[0], s[1]);
        let v = m / rho;
        0.5 * rho * v * v * v + (self.internal_energy_density(rho) + self.pressure(rho)) * v
    }

    fn entropy_gradient(&self, s: &StateVec) -> Vector {
        let (rho, m) = (s[0], s[1]);
        let v = m / rho;
        let d_rho_e = self.kappa_p * self.gamma * rho.powf(self.gamma - 1.0) / (self.gamma - 1.0);
        vec2(-0.5 * v * v + d_rho_e, v)
    }

    fn entropy_hessian(&self, s: &StateVec) -> Mat {
        let (rho, m) = (s[0], s[1]);
        let v = m / rho;
        Mat::from_rows(&[
            &[v * v / rho + self.pressure_derivative(rho) / rho, -v / rho],
            &[-v / rho, 1.0 / rho],
        ])
    }
}
