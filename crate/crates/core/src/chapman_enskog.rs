//! First-order Chapman-Enskog corrector and the effective diffusion it
//! induces, evaluated pointwise from `(u, du/dx)`.

use crate::densecore::{
    constrained_residuals, generalized_inverse_apply, solve_constrained, Mat, Vector,
};
use crate::error::{Error, Result};
use crate::system::{sample_rng, EntropyPair, EquilVec, RelaxationModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorResult {
    /// First-order corrector `U1`, with `Q U1 = 0`.
    pub u1: Vector,
    /// Effective flux `D = -Q A(E(u)) U1`, so that `du/dt = dD/dx`.
    pub effective_flux: Vector,
    /// `|C U1 - J|_inf`
    pub solve_residual: f64,
    /// `|Q U1|_inf`
    pub constraint_residual: f64,
}

/// `-A(E(u)) D_u E(u) du/dx`, the right-hand side of the corrector problem.
pub fn corrector_rhs(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<Vector> {
    let e = model.equilibrium(u)?;
    let de = model.equilibrium_jacobian(u)?.mul_vec(du_dx);
    Ok(-&model.flux_jacobian(&e).mul_vec(&de))
}

/// Solves `C U1 = -A(E(u)) dE/dx`, `Q U1 = 0` and returns the corrector with
/// its effective flux. `C` is the model's corrector matrix (`B(E(u))` for
/// linear relaxation).
pub fn corrector(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<CorrectorResult> {
    if du_dx.dim() != model.equil_dim() {
        return Err(Error::DimensionMismatch(format!(
            "gradient has {} components, model has {}",
            du_dx.dim(),
            model.equil_dim()
        )));
    }
    let e = model.equilibrium(u)?;
    let q = model.q_matrix();
    let a = model.flux_jacobian(&e);
    let j = corrector_rhs(model, u, du_dx)?;
    let c = model.corrector_matrix(u, du_dx)?;
    let u1 = solve_constrained(&c, &q, &j)?;
    let (solve_residual, constraint_residual) = constrained_residuals(&c, &q, &j, &u1);
    let effective_flux = -&(&q * &a).mul_vec(&u1);
    Ok(CorrectorResult {
        u1,
        effective_flux,
        solve_residual,
        constraint_residual,
    })
}

/// Assembles `M(u)` column by column from correctors with unit gradients.
/// Only defined when the effective flux is linear in the gradient.
pub fn effective_matrix_numeric(model: &dyn RelaxationModel, u: &EquilVec) -> Result<Mat> {
    if model.relax_exponent() > 1 {
        return Err(Error::NotLinearRegime(model.name().to_string()));
    }
    let n = model.equil_dim();
    let cols = (0..n)
        .map(|k| corrector(model, u, &Vector::unit(n, k)).map(|r| r.effective_flux))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat::from_columns(&cols))
}

/// Entropy form of the effective equations: `L = S Lambda^{-1} S^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyStructure {
    /// `L(u)`, n x n
    pub l: Mat,
    /// `S(u) = Q A(E(u))`, n x N
    pub s: Mat,
    /// `D^2 Phi(E(u)) C`, N x N
    pub lambda: Mat,
}

fn require_entropy(model: &dyn RelaxationModel) -> Result<&dyn EntropyPair> {
    model
        .entropy()
        .ok_or_else(|| Error::EntropyUnavailable(model.name().to_string()))
}

/// Builds `L(u)`. The gradient only matters for models whose corrector matrix
/// depends on it (nonlinear relaxation); linear models ignore it.
pub fn entropy_structure(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<EntropyStructure> {
    let ent = require_entropy(model)?;
    let e = model.equilibrium(u)?;
    let q = model.q_matrix();
    let s = &q * &model.flux_jacobian(&e);
    let lambda = &ent.entropy_hessian(&e) * &model.corrector_matrix(u, du_dx)?;
    let st = s.transpose();
    let mut cols = Vec::with_capacity(st.cols());
    for k in 0..st.cols() {
        let b = st.column(k);
        let defect = q.mul_vec(&b).norm_inf();
        if defect > 1e-12 * (1.0 + b.norm_inf()) {
            return Err(Error::ConstraintViolated { defect });
        }
        cols.push(generalized_inverse_apply(&lambda, &q, &b)?);
    }
    let l = &s * &Mat::from_columns(&cols);
    Ok(EntropyStructure { l, s, lambda })
}

/// `d/dx (D_u Phi(E(u)))^T`. With `D_U Phi(E) = nu Q` this is the derivative
/// of `nu = (Q Q^T)^{-1} Q D_U Phi(E)^T`, i.e. `(Q Q^T)^{-1} Q D^2 Phi(E) D_u E du/dx`.
pub fn entropy_variable_gradient(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<Vector> {
    let ent = require_entropy(model)?;
    let e = model.equilibrium(u)?;
    let q = model.q_matrix();
    let dstate = model.equilibrium_jacobian(u)?.mul_vec(du_dx);
    let dgrad = ent.entropy_hessian(&e).mul_vec(&dstate);
    let qqt_inv = (&q * &q.transpose()).inverse()?;
    Ok(qqt_inv.mul_vec(&q.mul_vec(&dgrad)))
}

/// Effective flux in entropy form, `L(u) d/dx(D_u Phi(E(u)))^T`.
pub fn entropy_form_flux(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<Vector> {
    let st = entropy_structure(model, u, du_dx)?;
    Ok(st.l.mul_vec(&entropy_variable_gradient(model, u, du_dx)?))
}

/// Smallest eigenvalue of the symmetric part of `D^2 Phi(E(u)) B(E(u))`.
pub fn dissipation_check(model: &dyn RelaxationModel, u: &EquilVec) -> Result<f64> {
    let ent = require_entropy(model)?;
    let e = model.equilibrium(u)?;
    let m = &ent.entropy_hessian(&e) * &model.relaxation_jacobian(&e);
    Ok(m.symmetric_eigenvalues()[0])
}

/// Entropy production `U1^T D^2 Phi(E) C U1` of a corrector; non-negative
/// whenever the entropy is compatible with the relaxation.
pub fn entropy_production(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<f64> {
    let ent = require_entropy(model)?;
    let e = model.equilibrium(u)?;
    let r = corrector(model, u, du_dx)?;
    let m = &ent.entropy_hessian(&e) * &model.corrector_matrix(u, du_dx)?;
    Ok(r.u1.dot(&m.mul_vec(&r.u1)))
}

/// Max over sampled equilibria of `|d/du Psi(E(u))|` for an arbitrary
/// entropy-flux function, by central differences.
pub fn equilibrium_flux_derivative<P>(
    model: &dyn RelaxationModel,
    psi: P,
    samples: usize,
    seed: u64,
) -> Result<f64>
where
    P: Fn(&Vector) -> f64,
{
    let mut rng = sample_rng(seed);
    let n = model.equil_dim();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let u = model.sample_equil(&mut rng);
        for k in 0..n {
            let h = 1e-6 * u[k].abs().max(1.0);
            let mut up = u.clone();
            up[k] += h;
            let mut um = u.clone();
            um[k] -= h;
            let d = (psi(&model.equilibrium(&up)?) - psi(&model.equilibrium(&um)?)) / (2.0 * h);
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// `max |D_u Psi(E(u))|` over `samples` random equilibria using the model's
/// own entropy flux. Should vanish identically.
pub fn equilibrium_entropy_flux_check(
    model: &dyn RelaxationModel,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let ent = require_entropy(model)?;
    equilibrium_flux_derivative(model, |s| ent.entropy_flux(s), samples, seed)
}

/// Residual of the leading-order relaxation balance satisfied by the
/// corrector: `|B(E) U1 + A dE/dx|` for linear relaxation and
/// `|R(E + M(0) U1) + A dE/dx|` under the `eps^q` scaling.
pub fn relaxation_balance_defect(
    model: &dyn RelaxationModel,
    u: &EquilVec,
    du_dx: &EquilVec,
) -> Result<f64> {
    let r = corrector(model, u, du_dx)?;
    let e = model.equilibrium(u)?;
    let j = corrector_rhs(model, u, du_dx)?;
    let lhs = match model.relaxation_scaling(0.0) {
        Some(m0) => model.relaxation(&(&e + &m0.mul_vec(&r.u1))),
        None => model.relaxation_jacobian(&e).mul_vec(&r.u1),
    };
    Ok((&lhs - &j).norm_inf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelParams};

    fn model(name: &str) -> Box<dyn RelaxationModel> {
        build_model(name, &ModelParams::default()).unwrap()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x)
    }

    fn close(a: &Vector, b: &[f64], tol: f64) {
        assert_eq!(a.dim(), b.len());
        for k in 0..b.len() {
            assert!(
                (a[k] - b[k]).abs() <= tol * (1.0 + b[k].abs()),
                "{a:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn euler_corrector() {
        let m = model("euler_friction");
        let r = corrector(m.as_ref(), &v(&[1.0]), &v(&[0.5])).unwrap();
        close(&r.u1, &[0.0, -1.0], 1e-14);
        close(&r.effective_flux, &[1.0], 1e-14);
    }

    #[test]
    fn m1_corrector_follows_proposition_sign() {
        let m = model("m1");
        // tau = 1, dtau/dx = 1  =>  u = 2, du/dx = 1 + 4 tau^3 = 5
        let r = corrector(m.as_ref(), &v(&[2.0]), &v(&[5.0])).unwrap();
        close(&r.u1, &[0.0, -4.0 / 3.0, 0.0], 1e-13);
        close(&r.effective_flux, &[4.0 / 3.0], 1e-13);
    }

    #[test]
    fn coupled_corrector() {
        let m = model("euler_m1");
        let r = corrector(m.as_ref(), &v(&[1.0, 1.0]), &v(&[1.0, 3.0])).unwrap();
        close(&r.u1, &[0.0, -3.0, 0.0, -1.0], 1e-13);
    }

    #[test]
    fn numeric_effective_matrices() {
        let m = effective_matrix_numeric(model("euler_friction").as_ref(), &v(&[1.0])).unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-13);
        let m = effective_matrix_numeric(model("m1").as_ref(), &v(&[2.0])).unwrap();
        assert!((m[(0, 0)] - 4.0 / 15.0).abs() < 1e-13);
        let m = effective_matrix_numeric(model("euler_m1").as_ref(), &v(&[1.0, 1.0])).unwrap();
        let expect = Mat::from_rows(&[&[2.0, 1.0 / 3.0], &[0.0, 1.0 / 3.0]]);
        assert!((&m - &expect).max_abs() < 1e-13, "{m:?}");
    }

    #[test]
    fn nonlinear_model_has_no_constant_matrix() {
        let err = effective_matrix_numeric(model("shallow_water_friction").as_ref(), &v(&[1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::NotLinearRegime(_)));
    }

    #[test]
    fn euler_entropy_form_matches_corrector() {
        let m = model("euler_friction");
        let flux = entropy_form_flux(m.as_ref(), &v(&[1.0]), &v(&[1.0])).unwrap();
        // p'(1) * 1
        close(&flux, &[2.0], 1e-13);
        let st = entropy_structure(m.as_ref(), &v(&[1.0]), &v(&[1.0])).unwrap();
        assert!((st.l[(0, 0)] - 1.0).abs() < 1e-13, "L = rho");
    }

    #[test]
    fn shallow_water_flat_state_has_zero_flux() {
        let m = model("shallow_water_friction");
        let r = corrector(m.as_ref(), &v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(r.effective_flux.norm_inf(), 0.0);
        let flux = entropy_form_flux(m.as_ref(), &v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(flux.norm_inf(), 0.0);
    }

    #[test]
    fn shallow_water_corrector_matches_closed_form() {
        let m = model("shallow_water_friction");
        let r = corrector(m.as_ref(), &v(&[1.0]), &v(&[1.0])).unwrap();
        close(&r.effective_flux, &[1.0], 1e-13);
        assert!(relaxation_balance_defect(m.as_ref(), &v(&[1.3]), &v(&[-0.4])).unwrap() < 1e-12);
    }

    #[test]
    fn dissipation_signs() {
        let d = dissipation_check(model("euler_friction").as_ref(), &v(&[1.0])).unwrap();
        assert!(d.abs() < 1e-14);
        let d = dissipation_check(model("shallow_water_friction").as_ref(), &v(&[1.0])).unwrap();
        assert!(d >= -1e-10);
        assert!(matches!(
            dissipation_check(model("m1").as_ref(), &v(&[2.0])),
            Err(Error::EntropyUnavailable(_))
        ));
    }

    #[test]
    fn equilibrium_entropy_flux_vanishes() {
        for name in ["euler_friction", "shallow_water_friction"] {
            let m = model(name);
            assert!(equilibrium_entropy_flux_check(m.as_ref(), 50, 3).unwrap() <= 1e-6);
            let ent = m.entropy().unwrap();
            // negative control: Psi + u^2 has a nonzero derivative
            let bad = equilibrium_flux_derivative(
                m.as_ref(),
                |s| ent.entropy_flux(s) + s[0] * s[0],
                50,
                3,
            )
            .unwrap();
            assert!(bad > 1e-6);
        }
    }
}
