//! The relaxation-system contract shared by every model, the admissibility and
//! structure checks run against it, and the 1-D grid container.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};

pub type StateVec = Vector;
pub type EquilVec = Vector;

/// Deterministic generator handed to model samplers.
pub type SampleRng = ChaCha8Rng;

pub fn sample_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Absolute threshold for the structural checks in [`validate_model`].
pub const VALIDATION_TOL: f64 = 1e-8;

/// A balance law `eps dU/dt + dF(U)/dx = -R(U)/eps^q` with linear conserved
/// combinations `Q`, equilibria `E`, and optionally an entropy pair.
///
/// Implementors are immutable parameter holders; every method is a pure
/// function of its arguments.
pub trait RelaxationModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// N, the number of conserved variables.
    fn state_dim(&self) -> usize;

    /// n, the number of equilibrium variables.
    fn equil_dim(&self) -> usize;

    fn state_names(&self) -> &'static [&'static str];

    fn equil_names(&self) -> &'static [&'static str];

    /// Exponent q of the relaxation scaling `R / eps^q`.
    fn relax_exponent(&self) -> u32 {
        1
    }

    fn q_matrix(&self) -> Mat;

    fn flux(&self, s: &StateVec) -> Vector;

    fn relaxation(&self, s: &StateVec) -> Vector;

    fn flux_jacobian(&self, s: &StateVec) -> Mat;

    fn relaxation_jacobian(&self, s: &StateVec) -> Mat;

    fn equilibrium(&self, u: &EquilVec) -> Result<StateVec>;

    /// `D_u E(u)`, an N x n matrix.
    fn equilibrium_jacobian(&self, u: &EquilVec) -> Result<Mat>;

    fn admissible(&self, s: &StateVec) -> bool;

    fn equil_admissible(&self, u: &EquilVec) -> bool;

    /// Largest characteristic speed `max |lambda(A(U))|`.
    fn spectral_radius(&self, s: &StateVec) -> f64;

    /// Closed-form effective diffusion matrix `M` with `du/dt = d/dx(M du/dx)`.
    /// The gradient matters only for nonlinear relaxation (q > 1).
    fn effective_matrix(&self, u: &EquilVec, du_dx: &EquilVec) -> Result<Mat>;

    /// Matrix `C` in the corrector problem `C U1 = -A(E) dE/dx`, `Q U1 = 0`.
    ///
    /// For linear relaxation this is `B(E(u))`. Nonlinear models return the
    /// secant matrix along the corrector direction, which depends on the
    /// gradient.
    fn corrector_matrix(&self, u: &EquilVec, _du_dx: &EquilVec) -> Result<Mat> {
        let e = self.equilibrium(u)?;
        Ok(self.relaxation_jacobian(&e))
    }

    /// `M(eps)` in `R(E(u) + eps U) = eps^q R(E(u) + M(eps) U)`, for q > 1.
    fn relaxation_scaling(&self, _eps: f64) -> Option<Mat> {
        None
    }

    fn entropy(&self) -> Option<&dyn EntropyPair> {
        None
    }

    /// Hand-derived first-order corrector `U1(u, du/dx)`, when one is known.
    fn corrector_closed_form(&self, _u: &EquilVec, _du_dx: &EquilVec) -> Option<Result<StateVec>> {
        None
    }

    /// Random state strictly inside the admissible set.
    fn sample_state(&self, rng: &mut SampleRng) -> StateVec;

    /// Random equilibrium variable strictly inside `omega`.
    fn sample_equil(&self, rng: &mut SampleRng) -> EquilVec;

    /// Random gradient of the equilibrium variables.
    fn sample_gradient(&self, rng: &mut SampleRng) -> EquilVec {
        use rand::Rng;
        Vector::from_vec(
            (0..self.equil_dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
    }
}

/// Convex entropy `Phi` with flux `Psi`, `D Phi A = D Psi`.
pub trait EntropyPair {
    fn entropy(&self, s: &StateVec) -> f64;
    fn entropy_flux(&self, s: &StateVec) -> f64;
    fn entropy_gradient(&self, s: &StateVec) -> Vector;
    fn entropy_hessian(&self, s: &StateVec) -> Mat;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Zero-gradient ghost cells.
    Outflow,
}

/// Uniform mesh with one state per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub x_min: f64,
    pub dx: f64,
    pub boundary: Boundary,
    pub cells: Vec<StateVec>,
    pub time: f64,
}

impl GridState {
    pub fn new(x_min: f64, x_max: f64, boundary: Boundary, cells: Vec<StateVec>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        if !(x_max > x_min) {
            return Err(Error::Config(format!("empty domain [{x_min}, {x_max}]")));
        }
        let dx = (x_max - x_min) / cells.len() as f64;
        Ok(Self {
            x_min,
            dx,
            boundary,
            cells,
            time: 0.0,
        })
    }

    /// Samples `profile` at cell midpoints.
    pub fn from_profile<F>(
        x_min: f64,
        x_max: f64,
        num_cells: usize,
        boundary: Boundary,
        profile: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> StateVec,
    {
        let dx = (x_max - x_min) / num_cells as f64;
        let cells = (0..num_cells)
            .map(|i| profile(x_min + (i as f64 + 0.5) * dx))
            .collect();
        Self::new(x_min, x_max, boundary, cells)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.dx * self.cells.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    /// Number of interfaces carrying a flux: one per cell when periodic
    /// (interface k sits right of cell k), otherwise `num_cells + 1` with
    /// interface k sitting left of cell k.
    pub fn num_faces(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.cells.len(),
            Boundary::Outflow => self.cells.len() + 1,
        }
    }

    /// Left and right states of face `k` (see [`GridState::num_faces`]).
    pub fn face_states(&self, k: usize) -> (&StateVec, &StateVec) {
        let n = self.cells.len();
        match self.boundary {
            Boundary::Periodic => (&self.cells[k], &self.cells[(k + 1) % n]),
            Boundary::Outflow => {
                let l = k.saturating_sub(1);
                let r = k.min(n - 1);
                (&self.cells[l], &self.cells[r])
            }
        }
    }

    /// Indices of the faces to the left and right of cell `i`.
    pub fn cell_faces(&self, i: usize) -> (usize, usize) {
        let n = self.cells.len();
        match self.boundary {
            Boundary::Periodic => ((i + n - 1) % n, i),
            Boundary::Outflow => (i, i + 1),
        }
    }

    /// `sum_i Q U_i dx`, accumulated in cell order.
    pub fn totals(&self, q: &Mat) -> Vector {
        let mut acc = Vector::zeros(q.rows());
        for c in &self.cells {
            acc.axpy(self.dx, &q.mul_vec(c));
        }
        acc
    }

    /// Equilibrium variables `Q U_i` for every cell.
    pub fn equilibrium_values(&self, q: &Mat) -> Vec<EquilVec> {
        self.cells.iter().map(|c| q.mul_vec(c)).collect()
    }

    /// First cell (and component) failing the model's admissibility predicate.
    pub fn first_inadmissible(&self, model: &dyn RelaxationModel) -> Option<(usize, usize, f64)> {
        self.cells.iter().enumerate().find_map(|(i, c)| {
            if model.admissible(c) {
                None
            } else {
                let k = c
                    .iter()
                    .position(|x| !x.is_finite() || *x <= 0.0)
                    .unwrap_or(0);
                Some((i, k, c[k]))
            }
        })
    }
}

/// Central-difference Jacobian of `f` at `s` with per-component step
/// `h * max(1, |s_j|)`.
pub fn jacobian_fd<F, A>(f: F, admissible: A, s: &StateVec, h: f64) -> Result<Mat>
where
    F: Fn(&Vector) -> Vector,
    A: Fn(&Vector) -> bool,
{
    if !(h > 0.0) {
        return Err(Error::NonPositive(h));
    }
    let n = s.dim();
    let rows = f(s).dim();
    let mut jac = Mat::zeros(rows, n);
    for j in 0..n {
        let step = h * s[j].abs().max(1.0);
        let mut plus = s.clone();
        plus[j] += step;
        let mut minus = s.clone();
        minus[j] -= step;
        if !admissible(&plus) || !admissible(&minus) {
            return Err(Error::InadmissiblePerturbation { component: j });
        }
        let fp = f(&plus);
        let fm = f(&minus);
        for i in 0..rows {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Result of an entropy check that may not apply to a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyCheck {
    Skipped,
    Measured(f64),
}

impl EntropyCheck {
    fn violation(self) -> f64 {
        match self {
            EntropyCheck::Skipped => 0.0,
            EntropyCheck::Measured(v) => v,
        }
    }
}

impl fmt::Display for EntropyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyCheck::Skipped => write!(f, "skipped"),
            EntropyCheck::Measured(v) => write!(f, "{v:.3e}"),
        }
    }
}

/// Worst violation of each structural identity over the sampled points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub model: String,
    pub samples: usize,
    pub q_rank_ok: bool,
    /// `|Q R(U)|`
    pub conservation: f64,
    /// `|R(E(u))|`
    pub equilibrium_residual: f64,
    /// `|Q E(u) - u|`
    pub equilibrium_projection: f64,
    /// `|Q F(E(u))|`
    pub equilibrium_flux: f64,
    /// Samples where the kernel of the corrector matrix had the wrong
    /// dimension or met its image.
    pub kernel_failures: usize,
    /// `max(0, -D Phi R)` over samples.
    pub entropy_dissipation: EntropyCheck,
    /// Asymmetry of `D^2 Phi A`, relative to its size.
    pub entropy_symmetry: EntropyCheck,
    /// Distance of `D Phi(E(u))` from the row space of `Q`.
    pub entropy_rowspace: EntropyCheck,
}

impl ValidationReport {
    pub fn worst(&self) -> f64 {
        [
            self.conservation,
            self.equilibrium_residual,
            self.equilibrium_projection,
            self.equilibrium_flux,
            self.entropy_dissipation.violation(),
            self.entropy_symmetry.violation(),
            self.entropy_rowspace.violation(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.q_rank_ok && self.kernel_failures == 0 && self.worst() <= VALIDATION_TOL
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {} ({} samples)", self.model, self.samples)?;
        writeln!(
            f,
            "  rank(Q) = n            {}",
            if self.q_rank_ok { "ok" } else { "FAIL" }
        )?;
        writeln!(f, "  |Q R(U)|               {:.3e}", self.conservation)?;
        writeln!(
            f,
            "  |R(E(u))|              {:.3e}",
            self.equilibrium_residual
        )?;
        writeln!(
            f,
            "  |Q E(u) - u|           {:.3e}",
            self.equilibrium_projection
        )?;
        writeln!(f, "  |Q F(E(u))|            {:.3e}", self.equilibrium_flux)?;
        writeln!(f, "  kernel failures        {}", self.kernel_failures)?;
        writeln!(f, "  entropy dissipation    {}", self.entropy_dissipation)?;
        writeln!(f, "  entropy symmetry       {}", self.entropy_symmetry)?;
        write!(f, "  entropy row space      {}", self.entropy_rowspace)
    }
}

/// Spot-checks the structural assumptions of `model` at `samples` random
/// points and fails with [`Error::ModelInvalid`] when any identity is off by
/// more than [`VALIDATION_TOL`].
pub fn validate_model(
    model: &dyn RelaxationModel,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let report = measure_model(model, samples, seed)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::ModelInvalid {
            model: model.name().to_string(),
            detail: report.to_string(),
        })
    }
}

/// Same measurements as [`validate_model`] without the pass/fail decision.
pub fn measure_model(
    model: &dyn RelaxationModel,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if samples == 0 {
        return Err(Error::Config("validation needs at least one sample".into()));
    }
    let n = model.equil_dim();
    let q = model.q_matrix();
    let mut rng = sample_rng(seed);
    let mut report = ValidationReport {
        model: model.name().to_string(),
        samples,
        q_rank_ok: q.rows() == n && q.cols() == model.state_dim() && q.rank(1e-12) == n,
        conservation: 0.0,
        equilibrium_residual: 0.0,
        equilibrium_projection: 0.0,
        equilibrium_flux: 0.0,
        kernel_failures: 0,
        entropy_dissipation: EntropyCheck::Skipped,
        entropy_symmetry: EntropyCheck::Skipped,
        entropy_rowspace: EntropyCheck::Skipped,
    };
    let entropy = model.entropy();
    let mut dissipation = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut rowspace = 0.0f64;
    // projector onto the row space of Q: Q^T (Q Q^T)^{-1} Q
    let qt = q.transpose();
    let row_proj = (&q * &qt).inverse().map(|g| &(&qt * &g) * &q);

    for _ in 0..samples {
        let s = model.sample_state(&mut rng);
        let r = model.relaxation(&s);
        let qr = q.mul_vec(&r).norm_inf() / (1.0 + r.norm_inf());
        report.conservation = report.conservation.max(qr);

        let u = model.sample_equil(&mut rng);
        let du = model.sample_gradient(&mut rng);
        let e = model.equilibrium(&u)?;
        let scale = 1.0 + e.norm_inf();
        report.equilibrium_residual = report
            .equilibrium_residual
            .max(model.relaxation(&e).norm_inf() / scale);
        report.equilibrium_projection = report
            .equilibrium_projection
            .max((&q.mul_vec(&e) - &u).norm_inf() / (1.0 + u.norm_inf()));
        let fe = model.flux(&e);
        report.equilibrium_flux = report
            .equilibrium_flux
            .max(q.mul_vec(&fe).norm_inf() / (1.0 + fe.norm_inf()));

        let c = model.corrector_matrix(&u, &du)?;
        if !kernel_structure_ok(&c, n) {
            report.kernel_failures += 1;
        }

        if let Some(ent) = entropy {
            let g = ent.entropy_gradient(&s);
            let d = g.dot(&r);
            dissipation = dissipation.max(-d / (1.0 + g.norm_inf() * r.norm_inf()));

            let h = ent.entropy_hessian(&s);
            let ha = &h * &model.flux_jacobian(&s);
            let asym = (&ha - &ha.transpose()).max_abs() / (1.0 + ha.max_abs());
            symmetry = symmetry.max(asym);

            if let Ok(p) = &row_proj {
                let ge = ent.entropy_gradient(&e);
                let off = (&ge - &p.transpose().mul_vec(&ge)).norm_inf() / (1.0 + ge.norm_inf());
                rowspace = rowspace.max(off);
            } else {
                rowspace = f64::INFINITY;
            }
        }
    }
    if entropy.is_some() {
        report.entropy_dissipation = EntropyCheck::Measured(dissipation);
        report.entropy_symmetry = EntropyCheck::Measured(symmetry);
        report.entropy_rowspace = EntropyCheck::Measured(rowspace);
    }
    Ok(report)
}

/// `dim ker C = n` and `ker C` meets `im C` only at zero, tested through
/// singular values: rank(C) = N - n and rank(C^2) = rank(C).
fn kernel_structure_ok(c: &Mat, n: usize) -> bool {
    let big_n = c.rows();
    let rank = c.rank(1e-10);
    rank + n == big_n && (c * c).rank(1e-10) == rank
}
