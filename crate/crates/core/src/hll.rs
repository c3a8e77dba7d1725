//! Single-speed HLL scheme for the homogeneous system `dU/dt + dF(U)/dx = 0`.

use crate::densecore::Vector;
use crate::error::{Error, Result};
use crate::system::{GridState, RelaxationModel, StateVec};

/// Hyperbolic CFL bound `b dt / dx <= 1/2`.
pub const CFL_LIMIT: f64 = 0.5;
pub const DEFAULT_CFL: f64 = 0.45;
pub const DEFAULT_SAFETY: f64 = 1.1;
const MIN_SPEED: f64 = 1e-8;

/// `(F(UL) + F(UR))/2 - b (UR - UL)/2`
pub fn hll_flux(ul: &StateVec, ur: &StateVec, b: f64, model: &dyn RelaxationModel) -> Vector {
    let mut f = &model.flux(ul) + &model.flux(ur);
    let jump = ur - ul;
    for k in 0..f.dim() {
        f[k] = 0.5 * f[k] - 0.5 * b * jump[k];
    }
    f
}

/// Intermediate HLL state `(UL + UR)/2 - (F(UR) - F(UL)) / (2b)`.
pub fn intermediate_state(
    ul: &StateVec,
    ur: &StateVec,
    b: f64,
    model: &dyn RelaxationModel,
) -> StateVec {
    let dflux = &model.flux(ur) - &model.flux(ul);
    let mut s = ul + ur;
    for k in 0..s.dim() {
        s[k] = 0.5 * s[k] - dflux[k] / (2.0 * b);
    }
    s
}

/// `b = safety * max_i rho(A(U_i))`, floored away from zero.
pub fn wave_speed(model: &dyn RelaxationModel, grid: &GridState, safety: f64) -> Result<f64> {
    let mut top = 0.0f64;
    for c in &grid.cells {
        let r = model.spectral_radius(c);
        if !r.is_finite() {
            return Err(Error::DegenerateState);
        }
        top = top.max(r);
    }
    Ok((safety * top).max(MIN_SPEED))
}

/// Per-step record: the speed, the CFL number it implies and the face fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousStep {
    pub b: f64,
    pub cfl: f64,
    pub fluxes: Vec<Vector>,
}

pub fn face_fluxes(grid: &GridState, b: f64, model: &dyn RelaxationModel) -> Vec<Vector> {
    (0..grid.num_faces())
        .map(|k| {
            let (l, r) = grid.face_states(k);
            hll_flux(l, r, b, model)
        })
        .collect()
}

pub(crate) fn check_cfl(b: f64, dt: f64, dx: f64) -> Result<f64> {
    let number = b * dt / dx;
    if !(number <= CFL_LIMIT * (1.0 + 1e-12)) || !(dt >= 0.0) {
        return Err(Error::CflViolation {
            number,
            limit: CFL_LIMIT,
        });
    }
    Ok(number)
}

/// One conservative HLL update. The result is rejected, never clipped, when a
/// cell leaves the admissible set.
pub fn step_homogeneous(
    grid: &GridState,
    dt: f64,
    b: f64,
    model: &dyn RelaxationModel,
) -> Result<GridState> {
    Ok(step_homogeneous_detailed(grid, dt, b, model)?.0)
}

pub fn step_homogeneous_detailed(
    grid: &GridState,
    dt: f64,
    b: f64,
    model: &dyn RelaxationModel,
) -> Result<(GridState, HomogeneousStep)> {
    let cfl = check_cfl(b, dt, grid.dx)?;
    let fluxes = face_fluxes(grid, b, model);
    let lambda = dt / grid.dx;
    let mut next = grid.clone();
    for (i, cell) in next.cells.iter_mut().enumerate() {
        let (fl, fr) = grid.cell_faces(i);
        let diff = &fluxes[fr] - &fluxes[fl];
        cell.axpy(-lambda, &diff);
    }
    next.time = grid.time + dt;
    if let Some((cell, component, value)) = next.first_inadmissible(model) {
        debug_assert!(
            !(0..grid.num_faces()).all(|k| {
                let (l, r) = grid.face_states(k);
                model.admissible(&intermediate_state(l, r, b, model))
            }),
            "admissible intermediate states produced an inadmissible cell"
        );
        return Err(Error::InadmissibleResult {
            cell,
            component,
            value,
            time: next.time,
        });
    }
    Ok((next, HomogeneousStep { b, cfl, fluxes }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelParams};
    use crate::system::Boundary;

    fn euler() -> Box<dyn RelaxationModel> {
        build_model("euler_friction", &ModelParams::default()).unwrap()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x)
    }

    #[test]
    fn flux_values() {
        let m = euler();
        let f = hll_flux(&v(&[1.0, 0.0]), &v(&[2.0, 0.0]), 3.0, m.as_ref());
        assert_eq!(f.as_slice(), &[-1.5, 2.5]);
        let u = v(&[1.3, 0.4]);
        assert_eq!(hll_flux(&u, &u, 2.0, m.as_ref()), m.flux(&u));
    }

    #[test]
    fn intermediate_values() {
        let m = euler();
        let (l, r) = (v(&[1.0, 0.0]), v(&[2.0, 0.0]));
        let s = intermediate_state(&l, &r, 3.0, m.as_ref());
        assert!((s[0] - 1.5).abs() < 1e-15 && (s[1] + 0.5).abs() < 1e-15);
        // convex-combination form
        let b = 3.0;
        let alt = &(&l + &m.flux(&l).scale(1.0 / b)).scale(0.5)
            + &(&r - &m.flux(&r).scale(1.0 / b)).scale(0.5);
        assert!((&alt - &s).norm_inf() < 1e-15);
        let u = v(&[0.7, -0.2]);
        assert!((&intermediate_state(&u, &u, 1.0, m.as_ref()) - &u).norm_inf() < 1e-16);
    }

    #[test]
    fn speeds() {
        let m = euler();
        let g = GridState::new(0.0, 1.0, Boundary::Periodic, vec![v(&[1.0, 0.0])]).unwrap();
        assert!((wave_speed(m.as_ref(), &g, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        let sw = build_model("shallow_water_friction", &ModelParams::default()).unwrap();
        let g = GridState::new(0.0, 1.0, Boundary::Periodic, vec![v(&[1.0, 0.0])]).unwrap();
        assert!((wave_speed(sw.as_ref(), &g, 1.2).unwrap() - 1.2).abs() < 1e-15);

        let m1 = build_model("m1", &ModelParams::default()).unwrap();
        let g = GridState::new(0.0, 1.0, Boundary::Periodic, vec![v(&[1.0, 0.0, 1.0])]).unwrap();
        assert!((wave_speed(m1.as_ref(), &g, 1.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let m = euler();
        let g = GridState::new(0.0, 1.0, Boundary::Periodic, vec![v(&[1.0, 0.0]); 10]).unwrap();
        let err = step_homogeneous(&g, 0.1, 1.0, m.as_ref()).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn constant_state_is_fixed() {
        let m = euler();
        for bc in [Boundary::Periodic, Boundary::Outflow] {
            let g = GridState::new(0.0, 1.0, bc, vec![v(&[1.2, 0.3]); 16]).unwrap();
            let next = step_homogeneous(&g, 0.01, 2.0, m.as_ref()).unwrap();
            for c in &next.cells {
                assert!((c - &g.cells[0]).norm_inf() < 1e-15);
            }
        }
    }
}
