//! Explicit reference solver for the effective equation `du/dt = d/dx (M(u) du/dx)`.

use crate::ap_scheme::{diffusion_stability_limit, discrete_diffusion_limit, face_pair, num_faces};
use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};
use crate::system::{Boundary, EquilVec, RelaxationModel};

pub const DEFAULT_SAFETY: f64 = 0.9;

/// Analytic `M` at every face, evaluated at the face average with the
/// one-sided difference as gradient.
pub fn face_matrices(
    u: &[EquilVec],
    dx: f64,
    model: &dyn RelaxationModel,
    boundary: Boundary,
) -> Result<Vec<Mat>> {
    (0..num_faces(u.len(), boundary))
        .map(|k| {
            let (l, r) = face_pair(u, boundary, k);
            let mid = (l + r).scale(0.5);
            let grad = (r - l).scale(1.0 / dx);
            model.effective_matrix(&mid, &grad)
        })
        .collect()
}

/// Largest stable step for the current data.
pub fn stable_dt(
    u: &[EquilVec],
    dx: f64,
    model: &dyn RelaxationModel,
    boundary: Boundary,
) -> Result<f64> {
    Ok(diffusion_stability_limit(
        dx,
        &face_matrices(u, dx, model, boundary)?,
    ))
}

pub fn parabolic_step(
    u: &[EquilVec],
    dt: f64,
    dx: f64,
    model: &dyn RelaxationModel,
    boundary: Boundary,
) -> Result<Vec<EquilVec>> {
    let m = face_matrices(u, dx, model, boundary)?;
    discrete_diffusion_limit(u, dt, dx, &m, boundary)
}

/// Marches to `t_end` with `dt = safety * stable_dt`, truncating the last step.
///
/// Produces the same iterates as repeated [`parabolic_step`] calls but works
/// on flat buffers, since reference runs take on the order of 10^6 steps.
pub fn solve_to_time(
    u0: &[EquilVec],
    t_end: f64,
    dx: f64,
    model: &dyn RelaxationModel,
    boundary: Boundary,
    safety: f64,
) -> Result<Vec<EquilVec>> {
    if !(t_end >= 0.0) {
        return Err(Error::Config(format!(
            "end time must be non-negative, got {t_end}"
        )));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::Config(format!(
            "safety must lie in (0, 1], got {safety}"
        )));
    }
    let cells = u0.len();
    let n = model.equil_dim();
    if cells == 0 || u0.iter().any(|x| x.dim() != n) {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} equilibrium components per cell"
        )));
    }
    let faces = num_faces(cells, boundary);
    let neighbours = |k: usize| match boundary {
        Boundary::Periodic => (k, (k + 1) % cells),
        Boundary::Outflow => (k.saturating_sub(1), k.min(cells - 1)),
    };
    let mut u: Vec<f64> = u0.iter().flat_map(|x| x.iter().copied()).collect();
    let mut m = vec![0.0; faces * n * n];
    let mut flux = vec![0.0; faces * n];
    let mut t = 0.0;
    while t < t_end {
        let mut top = 0.0f64;
        for k in 0..faces {
            let (l, r) = neighbours(k);
            let (ul, ur) = (&u[l * n..(l + 1) * n], &u[r * n..(r + 1) * n]);
            let mid: Vector = ul.iter().zip(ur).map(|(a, b)| 0.5 * (a + b)).collect();
            let grad: Vector = ul.iter().zip(ur).map(|(a, b)| (b - a) / dx).collect();
            let mk = model.effective_matrix(&mid, &grad)?;
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    m[(k * n + i) * n + j] = mk[(i, j)];
                    row += mk[(i, j)].abs();
                }
                top = top.max(row);
            }
        }
        let limit = if top == 0.0 {
            f64::INFINITY
        } else {
            dx * dx / (2.0 * top)
        };
        let dt = (safety * limit).min(t_end - t);
        for k in 0..faces {
            let (l, r) = neighbours(k);
            for i in 0..n {
                flux[k * n + i] = (0..n)
                    .map(|j| m[(k * n + i) * n + j] * (u[r * n + j] - u[l * n + j]))
                    .sum();
            }
        }
        let c = dt / (dx * dx);
        for cell in 0..cells {
            let (fl, fr) = match boundary {
                Boundary::Periodic => ((cell + cells - 1) % cells, cell),
                Boundary::Outflow => (cell, cell + 1),
            };
            for i in 0..n {
                u[cell * n + i] += c * (flux[fr * n + i] - flux[fl * n + i]);
            }
        }
        if let Some(bad) = (0..cells)
            .find(|&i| !model.equil_admissible(&Vector::from_slice(&u[i * n..(i + 1) * n])))
        {
            return Err(Error::InadmissibleResult {
                cell: bad,
                component: 0,
                value: u[bad * n],
                time: t + dt,
            });
        }
        t = if t_end - t <= dt { t_end } else { t + dt };
    }
    Ok(u.chunks(n).map(Vector::from_slice).collect())
}
