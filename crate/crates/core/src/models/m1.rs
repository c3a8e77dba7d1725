use rand::Rng;

use super::{
    check_equil, companion_radius, eddington, eddington_derivative, tau_from_u, VACUUM_FLOOR,
};
use crate::densecore::{Mat, Vector};
use crate::error::Result;
use crate::system::{EquilVec, RelaxationModel, SampleRng, StateVec};

/// Grey M1 radiative transfer coupled to a material temperature,
/// `U = (e, f, tau)`, equilibrium variable `u = e + tau`.
///
/// No entropy pair is provided for this model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct M1;

/// `d(chi(f/e) e)/de` and `d(chi(f/e) e)/df`.
pub(crate) fn radiative_pressure_gradient(e: f64, f: f64) -> (f64, f64) {
    let xi = f / e;
    let dchi = eddington_derivative(xi);
    (eddington(xi) - xi * dchi, dchi)
}

/// Spectral radius of the (e, f) block of the flux Jacobian.
pub(crate) fn radiative_speed(e: f64, f: f64) -> f64 {
    let (a, b) = radiative_pressure_gradient(e, f);
    companion_radius(a, b)
}

pub(crate) fn radiative_admissible(e: f64, f: f64) -> bool {
    e.is_finite() && f.is_finite() && e > VACUUM_FLOOR && f.abs() <= e
}

impl RelaxationModel for M1 {
    fn name(&self) -> &'static str {
        "m1"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn equil_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["e", "f", "tau"]
    }

    fn equil_names(&self) -> &'static [&'static str] {
        &["u"]
    }

    fn q_matrix(&self) -> Mat {
        Mat::from_rows(&[&[1.0, 0.0, 1.0]])
    }

    fn flux(&self, s: &StateVec) -> Vector {
        let (e, f) = (s[0], s[1]);
        Vector::from_slice(&[f, eddington(f / e) * e, 0.0])
    }

    fn relaxation(&self, s: &StateVec) -> Vector {
        let (e, f, t) = (s[0], s[1], s[2]);
        let t4 = t.powi(4);
        Vector::from_slice(&[e - t4, f, t4 - e])
    }

    fn flux_jacobian(&self, s: &StateVec) -> Mat {
        let (a, b) = radiative_pressure_gradient(s[0], s[1]);
        Mat::from_rows(&[&[0.0, 1.0, 0.0], &[a, b, 0.0], &[0.0, 0.0, 0.0]])
    }

    fn relaxation_jacobian(&self, s: &StateVec) -> Mat {
        let t3 = 4.0 * s[2].powi(3);
        Mat::from_rows(&[&[1.0, 0.0, -t3], &[0.0, 1.0, 0.0], &[-1.0, 0.0, t3]])
    }

    fn equilibrium(&self, u: &EquilVec) -> Result<StateVec> {
        check_equil(self, u)?;
        let t = tau_from_u(u[0])?;
        Ok(Vector::from_slice(&[t.powi(4), 0.0, t]))
    }

    fn equilibrium_jacobian(&self, u: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        let t = tau_from_u(u[0])?;
        let dt_du = 1.0 / (1.0 + 4.0 * t.powi(3));
        Ok(Mat::from_rows(&[
            &[4.0 * t.powi(3) * dt_du],
            &[0.0],
            &[dt_du],
        ]))
    }

    fn admissible(&self, s: &StateVec) -> bool {
        s.dim() == 3 && radiative_admissible(s[0], s[1]) && s[2].is_finite() && s[2] > VACUUM_FLOOR
    }

    fn equil_admissible(&self, u: &EquilVec) -> bool {
        u.dim() == 1 && u[0].is_finite() && u[0] > 0.0
    }

    fn spectral_radius(&self, s: &StateVec) -> f64 {
        radiative_speed(s[0], s[1])
    }

    fn effective_matrix(&self, u: &EquilVec, _du_dx: &EquilVec) -> Result<Mat> {
        check_equil(self, u)?;
        let t = tau_from_u(u[0])?;
        let t3 = t.powi(3);
        Ok(Mat::diag(&[4.0 * t3 / (3.0 * (1.0 + 4.0 * t3))]))
    }

    /// `(0, -(4/3) tau^3 dtau/dx, 0)` with `dtau/dx = (du/dx) / (1 + 4 tau^3)`.
    fn corrector_closed_form(&self, u: &EquilVec, du_dx: &EquilVec) -> Option<Result<StateVec>> {
        Some(check_equil(self, u).and_then(|_| {
            let t = tau_from_u(u[0])?;
            let dtau = du_dx[0] / (1.0 + 4.0 * t.powi(3));
            Ok(Vector::from_slice(&[
                0.0,
                -4.0 / 3.0 * t.powi(3) * dtau,
                0.0,
            ]))
        }))
    }

    fn sample_state(&self, rng: &mut SampleRng) -> StateVec {
        let e = rng.random_range(0.5..2.0);
        let xi = rng.random_range(-0.9..0.9);
        let t = rng.random_range(0.5..1.5);
        Vector::from_slice(&[e, xi * e, t])
    }

    fn sample_equil(&self, rng: &mut SampleRng) -> EquilVec {
        let t: f64 = rng.random_range(0.5..1.5);
        Vector::from_slice(&[t + t.powi(4)])
    }
}
