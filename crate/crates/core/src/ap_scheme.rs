//! Asymptotic-preserving finite-volume scheme for `eps dU/dt + dF/dx = -R/eps^q`.
//!
//! Each interface carries a matrix `sigma` chosen so that
//! `Q (I + sigma)^{-1} = M Q / b^2`, where `M` is the effective diffusion
//! matrix at the interface. The relaxation enters through
//! `alpha = (I + gamma dx/(2b) (I + sigma))^{-1}`, and the update is
//!
//! ```text
//! U_i <- U_i - (dt/dx) [a_r F_r - a_l F_l - (a_r - a_l) F(U_i)] - dt gamma/2 (a_r + a_l) R(U_i)
//! ```
//!
//! with `F_r`, `F_l` the HLL fluxes. In late-time mode `dt` is the fast step
//! `dt_slow / eps` and `gamma = 1/eps`; as `eps -> 0` the equilibrium part
//! reduces to the three-point diffusion stencil of [`discrete_diffusion_limit`].

use serde::{Deserialize, Serialize};

use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};
use crate::hll::{check_cfl, hll_flux, intermediate_state};
use crate::system::{Boundary, EquilVec, GridState, RelaxationModel, StateVec};

/// Floor applied to the diagonal of `M` at an interface before inversion.
pub const M_FLOOR: f64 = 1e-10;

/// How the part of `I + sigma` acting off the equilibrium manifold is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPolicy {
    /// `I + sigma = b^2 D_uE M^{-1} Q + C`, with `C` the corrector matrix.
    /// The stiff modes of the explicit source update then all contract by
    /// the same factor `1 - 2 cfl`.
    #[default]
    Relaxation,
    /// `I + sigma = b^2 D_uE M^{-1} Q + (I - D_uE Q)`: identity off the
    /// equilibrium block.
    IdentityFill,
}

/// `sigma` at one interface together with the `M` it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFace {
    pub sigma: Mat,
    pub m_face: Mat,
    /// Whether `M` had to be floored.
    pub floored: bool,
}

/// `(I + gamma dx / (2b) (I + sigma))^{-1}`
pub fn alpha_matrix(sigma: &Mat, gamma: f64, dx: f64, b: f64) -> Result<Mat> {
    let n = sigma.rows();
    let k = gamma * dx / (2.0 * b);
    let id = Mat::identity(n);
    let ip = &id + sigma;
    (&id + &ip.scale(k))
        .inverse()
        .map_err(|_| Error::SingularAlpha)
}

/// Builds `sigma` at an interface from the effective matrix at `u_face`.
pub fn build_sigma(
    model: &dyn RelaxationModel,
    u_face: &EquilVec,
    du_dx_face: &EquilVec,
    b: f64,
    policy: SigmaPolicy,
) -> Result<SigmaFace> {
    let mut m_face = model.effective_matrix(u_face, du_dx_face)?;
    let mut floored = false;
    for k in 0..m_face.rows() {
        if !(m_face[(k, k)] >= M_FLOOR) {
            m_face[(k, k)] = M_FLOOR;
            floored = true;
        }
    }
    let m_inv = m_face.inverse().map_err(|_| Error::SingularM)?;
    let q = model.q_matrix();
    let ep = model.equilibrium_jacobian(u_face)?;
    let equil_block = &(&ep * &m_inv) * &q;
    let off_block = match policy {
        SigmaPolicy::Relaxation => model.corrector_matrix(u_face, du_dx_face)?,
        SigmaPolicy::IdentityFill => &Mat::identity(q.cols()) - &(&ep * &q),
    };
    let ip_sigma = &equil_block.scale(b * b) + &off_block;
    let sigma = &ip_sigma - &Mat::identity(q.cols());
    Ok(SigmaFace {
        sigma,
        m_face,
        floored,
    })
}

/// `|Q (I + sigma)^{-1} - M Q / b^2|_max`
pub fn commutation_defect(q: &Mat, sigma: &Mat, m_face: &Mat, b: f64) -> Result<f64> {
    let ip = &Mat::identity(sigma.rows()) + sigma;
    let t = ip.inverse().map_err(|_| Error::SingularSigma)?;
    let lhs = q * &t;
    let rhs = (m_face * q).scale(1.0 / (b * b));
    Ok((&lhs - &rhs).max_abs() / (1.0 + rhs.max_abs()))
}

/// Interface states `U*L`, `U*R` of the modified Riemann solver.
pub fn interface_states(
    ul: &StateVec,
    ur: &StateVec,
    alpha: &Mat,
    sigma: &Mat,
    b: f64,
    model: &dyn RelaxationModel,
) -> Result<(StateVec, StateVec)> {
    let id = Mat::identity(sigma.rows());
    let t = (&id + sigma).inverse().map_err(|_| Error::SingularSigma)?;
    let star = alpha.mul_vec(&intermediate_state(ul, ur, b, model));
    let rest = &id - alpha;
    let side = |u: &StateVec| {
        let relaxed = u - &t.mul_vec(&model.relaxation(u));
        &star + &rest.mul_vec(&relaxed)
    };
    Ok((side(ul), side(ur)))
}

/// How the relaxation rate is tied to `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "gamma")]
pub enum GammaMode {
    /// `dt` is slow time, the fast step is `dt/eps` and the rate is `1/eps`
    /// applied to `R / eps^(q-1)`.
    LateTime,
    /// `dU/dt + dF/dx = -gamma R` with a fixed rate; `dt` is the step as is.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApStepConfig {
    pub eps: f64,
    pub dt: f64,
    pub b: f64,
    pub gamma_mode: GammaMode,
    pub policy: SigmaPolicy,
}

impl ApStepConfig {
    /// Step actually taken on the hyperbolic clock.
    pub fn fast_dt(&self) -> f64 {
        match self.gamma_mode {
            GammaMode::LateTime => self.dt / self.eps,
            GammaMode::Fixed(_) => self.dt,
        }
    }

    /// `(gamma, scale)` with the source written as `gamma * scale * R`.
    fn rates(&self, q: u32) -> (f64, f64) {
        match self.gamma_mode {
            GammaMode::LateTime => (1.0 / self.eps, self.eps.powi(1 - q as i32)),
            GammaMode::Fixed(g) => (g, 1.0),
        }
    }
}

/// Diagnostics for one AP step.
#[derive(Debug, Clone, PartialEq)]
pub struct ApStepInfo {
    pub cfl_number: f64,
    pub floor_events: usize,
    pub max_commutation_defect: f64,
    /// `M` at every interface, in face order.
    pub m_faces: Vec<Mat>,
}

/// Interface data `(u_face, du/dx_face)` from the two neighbouring cells.
pub fn face_equilibrium(q: &Mat, ul: &StateVec, ur: &StateVec, dx: f64) -> (EquilVec, EquilVec) {
    let ql = q.mul_vec(ul);
    let qr = q.mul_vec(ur);
    ((&ql + &qr).scale(0.5), (&qr - &ql).scale(1.0 / dx))
}

/// One step of the AP scheme.
pub fn ap_step(
    grid: &GridState,
    cfg: &ApStepConfig,
    model: &dyn RelaxationModel,
) -> Result<(GridState, ApStepInfo)> {
    if !(cfg.eps > 0.0) {
        return Err(Error::Config(format!(
            "eps must be positive, got {}",
            cfg.eps
        )));
    }
    let dt_fast = cfg.fast_dt();
    let cfl_number = check_cfl(cfg.b, dt_fast, grid.dx)?;
    let (gamma, r_scale) = cfg.rates(model.relax_exponent());
    let q = model.q_matrix();
    let nf = grid.num_faces();

    let mut alphas = Vec::with_capacity(nf);
    let mut fluxes = Vec::with_capacity(nf);
    let mut m_faces = Vec::with_capacity(nf);
    let mut floor_events = 0;
    let mut max_defect = 0.0f64;
    for k in 0..nf {
        let (ul, ur) = grid.face_states(k);
        let (u_face, du_face) = face_equilibrium(&q, ul, ur, grid.dx);
        let sf = build_sigma(model, &u_face, &du_face, cfg.b, cfg.policy)?;
        if cfg!(debug_assertions) {
            let d = commutation_defect(&q, &sf.sigma, &sf.m_face, cfg.b)?;
            debug_assert!(d <= 1e-10, "commutation defect {d:e} at face {k}");
            max_defect = max_defect.max(d);
        }
        floor_events += sf.floored as usize;
        alphas.push(alpha_matrix(&sf.sigma, gamma, grid.dx, cfg.b)?);
        fluxes.push(hll_flux(ul, ur, cfg.b, model));
        m_faces.push(sf.m_face);
    }

    let lambda = dt_fast / grid.dx;
    let src = 0.5 * dt_fast * gamma * r_scale;
    let mut next = grid.clone();
    for (i, cell) in next.cells.iter_mut().enumerate() {
        let u = &grid.cells[i];
        let (fl, fr) = grid.cell_faces(i);
        let fu = model.flux(u);
        let right = alphas[fr].mul_vec(&(&fluxes[fr] - &fu));
        let left = alphas[fl].mul_vec(&(&fluxes[fl] - &fu));
        cell.axpy(-lambda, &(&right - &left));
        let a_sum = &alphas[fr] + &alphas[fl];
        cell.axpy(-src, &a_sum.mul_vec(&model.relaxation(u)));
    }
    next.time = grid.time + cfg.dt;
    if let Some((cell, component, value)) = next.first_inadmissible(model) {
        return Err(Error::InadmissibleResult {
            cell,
            component,
            value,
            time: next.time,
        });
    }
    Ok((
        next,
        ApStepInfo {
            cfl_number,
            floor_events,
            max_commutation_defect: max_defect,
            m_faces,
        },
    ))
}

/// Largest absolute row sum over the interface matrices, an upper bound on
/// their spectral radii.
pub fn max_row_sum(m_faces: &[Mat]) -> f64 {
    m_faces
        .iter()
        .flat_map(|m| (0..m.rows()).map(move |i| m.row(i).iter().map(|x| x.abs()).sum::<f64>()))
        .fold(0.0, f64::max)
}

/// Explicit stability bound `dx^2 / (2 max_row_sum(M))` of the limit stencil.
pub fn diffusion_stability_limit(dx: f64, m_faces: &[Mat]) -> f64 {
    let top = max_row_sum(m_faces);
    if top == 0.0 {
        f64::INFINITY
    } else {
        dx * dx / (2.0 * top)
    }
}

/// Equilibrium values `(left, right)` at face `k`, using the same face
/// numbering as [`GridState`].
pub(crate) fn face_pair(u: &[EquilVec], boundary: Boundary, k: usize) -> (&EquilVec, &EquilVec) {
    let n = u.len();
    match boundary {
        Boundary::Periodic => (&u[k], &u[(k + 1) % n]),
        Boundary::Outflow => (&u[k.saturating_sub(1)], &u[k.min(n - 1)]),
    }
}

pub(crate) fn num_faces(n: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Periodic => n,
        Boundary::Outflow => n + 1,
    }
}

/// Three-point diffusion stencil
/// `u_i += dt/dx^2 [M_r (u_{i+1} - u_i) + M_l (u_{i-1} - u_i)]`.
pub fn discrete_diffusion_limit(
    u: &[EquilVec],
    dt: f64,
    dx: f64,
    m_faces: &[Mat],
    boundary: Boundary,
) -> Result<Vec<EquilVec>> {
    let n = u.len();
    if m_faces.len() != num_faces(n, boundary) {
        return Err(Error::DimensionMismatch(format!(
            "{} face matrices for {} cells",
            m_faces.len(),
            n
        )));
    }
    let limit = diffusion_stability_limit(dx, m_faces);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, limit });
    }
    let fluxes: Vec<Vector> = (0..m_faces.len())
        .map(|k| {
            let (l, r) = face_pair(u, boundary, k);
            m_faces[k].mul_vec(&(r - l))
        })
        .collect();
    let c = dt / (dx * dx);
    Ok(u.iter()
        .enumerate()
        .map(|(i, ui)| {
            let (fl, fr) = match boundary {
                Boundary::Periodic => ((i + n - 1) % n, i),
                Boundary::Outflow => (i, i + 1),
            };
            let mut next = ui.clone();
            next.axpy(c, &(&fluxes[fr] - &fluxes[fl]));
            next
        })
        .collect())
}
