//! Snapshot comparison, grid-convergence sweeps and the corrector cross-check.

use std::fmt;
use std::str::FromStr;

use crate::chapman_enskog::{corrector, effective_matrix_numeric};
use crate::densecore::Vector;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::io::Snapshot;
use crate::harness::sim::Simulation;
use crate::system::{sample_rng, EquilVec, RelaxationModel};

/// Environment variable bounding the worker threads of a sweep.
pub const THREADS_ENV: &str = "RELAX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            "linf" | "max" => Ok(Self::Linf),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L1 => "L1",
            Self::L2 => "L2",
            Self::Linf => "Linf",
        })
    }
}

/// Cell averages over blocks of `factor` cells.
pub fn coarsen(u: &[EquilVec], factor: usize) -> Vec<EquilVec> {
    u.chunks(factor)
        .map(|block| {
            let mut s = block[0].clone();
            for b in &block[1..] {
                s.axpy(1.0, b);
            }
            s.scale(1.0 / block.len() as f64)
        })
        .collect()
}

/// Restricts the finer of `a`, `b` onto the coarser grid.
fn align(a: &[EquilVec], b: &[EquilVec]) -> Result<(Vec<EquilVec>, Vec<EquilVec>)> {
    let (na, nb) = (a.len(), b.len());
    let mismatch = Error::GridMismatch { a: na, b: nb };
    if na == 0 || nb == 0 {
        return Err(mismatch);
    }
    if nb >= na && nb % na == 0 {
        Ok((a.to_vec(), coarsen(b, nb / na)))
    } else if na % nb == 0 {
        Ok((coarsen(a, na / nb), b.to_vec()))
    } else {
        Err(mismatch)
    }
}

/// Norm of `a - b` on the coarser of the two grids; `dx` belongs to `a`.
pub fn compare_values(a: &[EquilVec], b: &[EquilVec], dx_a: f64, norm: Norm) -> Result<f64> {
    let n_a = a.len();
    let (a, b) = align(a, b)?;
    if a.iter().zip(&b).any(|(x, y)| x.dim() != y.dim()) {
        return Err(Error::DimensionMismatch(
            "snapshots have different components".into(),
        ));
    }
    let dx = dx_a * n_a as f64 / a.len() as f64;
    let diffs = a.iter().zip(&b).flat_map(|(x, y)| (x - y).into_vec());
    Ok(match norm {
        Norm::L1 => diffs.map(f64::abs).sum::<f64>() * dx,
        Norm::L2 => (diffs.map(|d| d * d).sum::<f64>() * dx).sqrt(),
        Norm::Linf => diffs.fold(0.0, |m, d| m.max(d.abs())),
    })
}

/// Norm of the difference of the equilibrium variables `QU` of two snapshots.
pub fn compare(a: &Snapshot, b: &Snapshot, norm: Norm) -> Result<f64> {
    compare_values(
        &a.equilibrium_values()?,
        &b.equilibrium_values()?,
        a.dx(),
        norm,
    )
}

/// Worker count from [`THREADS_ENV`], defaulting to the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub cells: Vec<usize>,
    /// L1 distance between consecutive levels, on the coarser grid.
    pub errors: Vec<f64>,
    /// `log2(e_k / e_{k+1})`
    pub orders: Vec<f64>,
}

/// Runs `cfg` on `levels` grids, doubling the cell count each time. Levels
/// run concurrently on up to `threads` workers; results do not depend on
/// the thread count.
pub fn converge(cfg: &RunConfig, levels: usize, threads: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Config("converge needs at least 2 levels".into()));
    }
    let configs: Vec<RunConfig> = (0..levels)
        .map(|k| {
            let mut c = cfg.clone();
            c.grid.num_cells = cfg.grid.num_cells << k;
            c.output.dir = None;
            c
        })
        .collect();
    type Level = Result<(Vec<EquilVec>, f64)>;
    let run_one = |c: &RunConfig| -> Level {
        let mut sim = Simulation::from_config(c)?;
        sim.advance_to(c.scheme.end_time)?;
        Ok((sim.equilibrium_values(), sim.grid().dx))
    };
    let threads = threads.clamp(1, levels);
    let mut results: Vec<Option<Level>> = (0..levels).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slot) in results.chunks_mut(levels.div_ceil(threads)).enumerate() {
            let configs = &configs;
            let run_one = &run_one;
            let base = w * levels.div_ceil(threads);
            scope.spawn(move || {
                for (j, out) in slot.iter_mut().enumerate() {
                    *out = Some(run_one(&configs[base + j]));
                }
            });
        }
    });
    let runs = results
        .into_iter()
        .map(|r| r.expect("every level is assigned to a worker"))
        .collect::<Result<Vec<_>>>()?;
    let errors = runs
        .windows(2)
        .map(|w| compare_values(&w[0].0, &w[1].0, w[0].1, Norm::L1))
        .collect::<Result<Vec<_>>>()?;
    let orders = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    Ok(ConvergenceReport {
        cells: configs.iter().map(|c| c.grid.num_cells).collect(),
        errors,
        orders,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorRow {
    pub u: EquilVec,
    pub du_dx: EquilVec,
    pub u1_numeric: Vector,
    pub u1_closed_form: Option<Vector>,
    /// Relative max-norm gap between the two correctors.
    pub u1_error: Option<f64>,
    /// Relative gap between the numerically assembled and the model's `M`;
    /// only for relaxation that is linear in the corrector.
    pub m_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorReport {
    pub model: String,
    pub rows: Vec<CorrectorRow>,
}

impl CorrectorReport {
    pub fn max_error(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.u1_error.into_iter().chain(r.m_error))
            .fold(0.0, f64::max)
    }
}

fn rel_gap(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm_inf() / b.norm_inf().max(1e-300).max(1.0)
}

/// Tabulates numeric against closed-form correctors at random `(u, du/dx)`.
pub fn corrector_report(
    model: &dyn RelaxationModel,
    samples: usize,
    seed: u64,
) -> Result<CorrectorReport> {
    let mut rng = sample_rng(seed);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = model.sample_equil(&mut rng);
        let du = model.sample_gradient(&mut rng);
        let numeric = corrector(model, &u, &du)?.u1;
        let closed = model.corrector_closed_form(&u, &du).transpose()?;
        let m_error = if model.relax_exponent() == 1 {
            let mn = effective_matrix_numeric(model, &u)?;
            let ma = model.effective_matrix(&u, &du)?;
            Some((&mn - &ma).max_abs() / ma.max_abs().max(1.0))
        } else {
            None
        };
        rows.push(CorrectorRow {
            u1_error: closed.as_ref().map(|c| rel_gap(&numeric, c)),
            u,
            du_dx: du,
            u1_numeric: numeric,
            u1_closed_form: closed,
            m_error,
        });
    }
    Ok(CorrectorReport {
        model: model.name().to_string(),
        rows,
    })
}
