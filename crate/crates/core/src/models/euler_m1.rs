use rand::Rng;

use super::m1::{radiative_admissible, radiative_pressure_gradient, radiative_speed};
use super::{check_equil, companion_radius, eddington, require_positive, VACUUM_FLOOR};
use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};
use crate::system::{EquilVec, RelaxationModel, SampleRng, StateVec};

/// Euler equations with friction driven by an M1 radiation field,
/// `U = (rho, rho v, e, f)`, equilibrium variables `(rho, e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerM1 {
    pub kappa: f64,
    pub sigma_a: f64,
    pub c_p: f64,
    pub eta: f64,
}

impl EulerM1 {
    pub fn new(kappa: f64, sigma_a: f64, c_p: f64, eta: f64) -> Result<Self> {
        require_positive("kappa", kappa)?;
        require_positive("sigma_a", sigma_a)?;
        require_positive("C_p", c_p)?;
        if !(eta > 1.0) {
            return Err(Error::Config(format!("eta must exceed 1, got {eta}")));
        }
        Ok(Self {
            kappa,
            sigma_a,
            c_p,
            eta,
        })
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.c_p * rho.powf(self.eta)
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.c_p * self.eta * rho.powf(self.eta - 1.0)
    }
}

impl RelaxationModel for EulerM1 {
    fn name(&self) -> &'static str {
        "euler_m1"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn equil_dim(&self) -> usize {
        2
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["rho", "rho_v", "e", "f"]
    }

    fn equil_names(&self) -> &'static [&'static str] {
        &["rho", "e"]
    }

    fn q_matrix(&self) -> Mat {
        Mat::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]])
    }

    fn flux(&self, s: &StateVec) -> Vector {
        let (rho, m, e, f) = (s[0], s[1], s[2], s[3]);
        Vector::from_slice(&[m, m * m / rho + self.pressure(rho), f, eddington(f / e) * e])
    }

    fn relaxation(&self, s: &StateVec) -> Vector {
        let (m, f) = (s[1], s[3]);
        Vector::from_slice(&[
            0.0,
            self.kappa * m - self.sigma_a * f,
            0.0,
            self.sigma_a * f,
        ])
    }

    fn flux_jacobian(&self, s: &StateVec) -> Mat {
        let v = s[1] / s[0];
        let (a, b) = radiative_pressure_gradient(s[2], s[3]);
        Mat::from_rows(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[self.pressure_derivative(s[0]) - v * v, 2.0 * v, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, a, b],
        ])
    }

    fn relaxation_jacobian(&self, _s: &StateVec) -> Mat {
        let (k, sg) = (self.kappa, self.sigma_a);
        Mat::from_rows(&[
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, k, 0.0, -sg],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, sg],
        ])
    }

    fn equilibrium(&self, u: &EquilVec) -> Result<StateVec> {
        check_equil(self, u)?;
        Ok(Vector::from_slice(&[u[0], 0.0, u[1], 0.0]))
    }

    fn equilibrium_jacobian(&self, u: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        Ok(Mat::from_rows(&[
            &[1.0, 0.0],
            &[0.0, 0.0],
            &[0.0, 1.0],
            &[0.0, 0.0],
        ]))
    }

    fn admissible(&self, s: &StateVec) -> bool {
        s.dim() == 4
            && s[0].is_finite()
            && s[1].is_finite()
            && s[0] > VACUUM_FLOOR
            && radiative_admissible(s[2], s[3])
    }

    fn equil_admissible(&self, u: &EquilVec) -> bool {
        u.dim() == 2 && u.is_finite() && u[0] > VACUUM_FLOOR && u[1] > VACUUM_FLOOR
    }

    fn spectral_radius(&self, s: &StateVec) -> f64 {
        let v = s[1] / s[0];
        let fluid = companion_radius(self.pressure_derivative(s[0]) - v * v, 2.0 * v);
        fluid.max(radiative_speed(s[2], s[3]))
    }

    fn effective_matrix(&self, u: &EquilVec, _du_dx: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        let (k, sg) = (self.kappa, self.sigma_a);
        Ok(Mat::from_rows(&[
            &[self.pressure_derivative(u[0]) / k, 1.0 / (3.0 * k)],
            &[0.0, 1.0 / (3.0 * sg)],
        ]))
    }

    /// `(0, -(p' drho/dx + de/dx / 3) / kappa, 0, -de/dx / (3 sigma_a))`
    fn corrector_closed_form(&self, u: &EquilVec, du_dx: &EquilVec) -> Option<Result<StateVec>> {
        Some(check_equil(self, u).map(|_| {
            let m = -(self.pressure_derivative(u[0]) * du_dx[0] + du_dx[1] / 3.0) / self.kappa;
            Vector::from_slice(&[0.0, m, 0.0, -du_dx[1] / (3.0 * self.sigma_a)])
        }))
    }

    fn sample_state(&self, rng: &mut SampleRng) -> StateVec {
        let rho = rng.random_range(0.5..2.0);
        let v = rng.random_range(-1.0..1.0);
        let e = rng.random_range(0.5..2.0);
        let xi = rng.random_range(-0.9..0.9);
        Vector::from_slice(&[rho, rho * v, e, xi * e])
    }

    fn sample_equil(&self, rng: &mut SampleRng) -> EquilVec {
        Vector::from_slice(&[rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)])
    }
}
