//! Concrete relaxation systems: Euler with friction, the M1 radiative
//! transfer model, their coupling, and shallow water with nonlinear friction.

mod euler_friction;
mod euler_m1;
mod m1;
mod shallow_water;

pub use euler_friction::EulerFriction;
pub use euler_m1::EulerM1;
pub use m1::M1;
pub use shallow_water::ShallowWaterFriction;

use serde::{Deserialize, Serialize};

use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};
use crate::system::{EquilVec, RelaxationModel, StateVec};

/// Densities below this are treated as vacuum and rejected.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Registry names accepted by [`build_model`].
pub const MODEL_NAMES: [&str; 4] = ["euler_friction", "m1", "euler_m1", "shallow_water_friction"];

/// Model parameters as they appear in the `[model]` config section. Keys
/// that do not apply to the selected model are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub kappa_p: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub sigma_a: Option<f64>,
    #[serde(rename = "C_p")]
    pub c_p: Option<f64>,
    pub eta: Option<f64>,
    pub g: Option<f64>,
    pub kappa0: Option<f64>,
    pub grad_floor: Option<f64>,
}

impl ModelParams {
    /// Sets a parameter by its config key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "kappa_p" => &mut self.kappa_p,
            "gamma" => &mut self.gamma,
            "kappa" => &mut self.kappa,
            "sigma_a" => &mut self.sigma_a,
            "C_p" => &mut self.c_p,
            "eta" => &mut self.eta,
            "g" => &mut self.g,
            "kappa0" => &mut self.kappa0,
            "grad_floor" => &mut self.grad_floor,
            other => return Err(Error::Config(format!("unknown model parameter `{other}`"))),
        };
        *slot = Some(value);
        Ok(())
    }
}

/// Looks up a model by registry name.
pub fn build_model(name: &str, params: &ModelParams) -> Result<Box<dyn RelaxationModel>> {
    Ok(match name {
        "euler_friction" => Box::new(EulerFriction::new(
            params.kappa_p.unwrap_or(1.0),
            params.gamma.unwrap_or(2.0),
        )?),
        "m1" => Box::new(M1),
        "euler_m1" => Box::new(EulerM1::new(
            params.kappa.unwrap_or(1.0),
            params.sigma_a.unwrap_or(1.0),
            params.c_p.unwrap_or(1.0),
            params.eta.unwrap_or(2.0),
        )?),
        "shallow_water_friction" => Box::new(ShallowWaterFriction::new(
            params.g.unwrap_or(1.0),
            params.kappa0.unwrap_or(1.0),
            params.grad_floor.unwrap_or(1e-8),
        )?),
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Config(format!(
            "parameter {name} must be positive, got {value}"
        )))
    }
}

/// Eddington factor `chi(xi) = (3 + 4 xi^2) / (5 + 2 sqrt(4 - 3 xi^2))`.
pub fn eddington(xi: f64) -> f64 {
    (3.0 + 4.0 * xi * xi) / (5.0 + 2.0 * (4.0 - 3.0 * xi * xi).sqrt())
}

/// Derivative of [`eddington`].
pub fn eddington_derivative(xi: f64) -> f64 {
    let s = (4.0 - 3.0 * xi * xi).sqrt();
    let den = 5.0 + 2.0 * s;
    (8.0 * xi * den + (3.0 + 4.0 * xi * xi) * 6.0 * xi / s) / (den * den)
}

/// Positive root of `tau + tau^4 = u`.
pub fn tau_from_u(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::NonPositive(u));
    }
    let f = |t: f64| t + t.powi(4) - u;
    let (mut lo, mut hi) = (0.0, u.max(1.0));
    // tau <= u and tau <= u^(1/4) bound the root; start from the tighter one
    let mut t = u.min(u.powf(0.25));
    for _ in 0..200 {
        let ft = f(t);
        if ft == 0.0 {
            return Ok(t);
        }
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = ft / (1.0 + 4.0 * t.powi(3));
        let mut next = t - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * (1.0 + t) {
            t = next;
            break;
        }
        t = next;
    }
    Ok(t)
}

/// Closed-form effective diffusion matrix of `model` at `u`.
pub fn effective_matrix_analytic(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<Mat> {
    model.effective_matrix(u, du_dx)
}

/// `(Phi(U), Psi(U))` for models that carry an entropy pair.
pub fn entropy_pair(model: &dyn RelaxationModel, s: &StateVec) -> Result<(f64, f64)> {
    let ent = model
        .entropy()
        .ok_or_else(|| Error::EntropyUnavailable(model.name().to_string()))?;
    if !model.admissible(s) {
        return Err(Error::OutOfDomain(format!("{s:?}")));
    }
    Ok((ent.entropy(s), ent.entropy_flux(s)))
}

/// Spectral radius of the 2x2 block `[[0, 1], [a, b]]` arising in the
/// Euler and M1 flux Jacobians.
pub(crate) fn companion_radius(a: f64, b: f64) -> f64 {
    let disc = b * b + 4.0 * a;
    if disc >= 0.0 {
        let r = disc.sqrt();
        ((b + r) / 2.0).abs().max(((b - r) / 2.0).abs())
    } else {
        // complex pair: |lambda|^2 = -a
        (-a).sqrt()
    }
}

pub(crate) fn check_equil(model: &dyn RelaxationModel, u: &EquilVec) -> Result<()> {
    if u.dim() != model.equil_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} expects {} equilibrium components, got {}",
            model.name(),
            model.equil_dim(),
            u.dim()
        )));
    }
    if !model.equil_admissible(u) {
        return Err(Error::OutOfDomain(format!(
            "{} equilibrium {u:?}",
            model.name()
        )));
    }
    Ok(())
}

pub(crate) fn vec2(a: f64, b: f64) -> Vector {
    Vector::from_slice(&[a, b])
}
