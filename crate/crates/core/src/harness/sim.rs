//! Time marching for the three schemes, with per-step diagnostics.

use std::time::{Duration, Instant};

use crate::ap_scheme::{ap_step, ApStepConfig, GammaMode};
use crate::densecore::Vector;
use crate::error::{Error, Result};
use crate::harness::config::{RunConfig, SchemeConfig, SchemeKind};
use crate::harness::io::{write_diagnostics, write_snapshot};
use crate::hll::{step_homogeneous, wave_speed};
use crate::models::entropy_pair;
use crate::parabolic_ref;
use crate::system::{Boundary, GridState, RelaxationModel};

/// Relative per-step entropy increase tolerated before a step is flagged.
pub const ENTROPY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub time: f64,
    pub step: usize,
    /// `sum_i Q U_i dx`
    pub mass: Vec<f64>,
    /// `sum_i Phi(U_i) dx`, when the model has an entropy.
    pub entropy: Option<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// CFL number `b dt_fast / dx` of the last step (diffusion number for `parabolic`).
    pub cfl: f64,
    /// Cumulative count of floored interface matrices.
    pub floor_events: usize,
}

#[derive(Debug)]
pub struct Simulation {
    model: Box<dyn RelaxationModel>,
    scheme: SchemeConfig,
    gamma_mode: GammaMode,
    grid: GridState,
    steps: usize,
    floor_events: usize,
    last_cfl: f64,
    entropy: Option<f64>,
    entropy_violations: usize,
    worst_entropy_increase: f64,
}

impl Simulation {
    pub fn new(
        model: Box<dyn RelaxationModel>,
        scheme: SchemeConfig,
        grid: GridState,
    ) -> Result<Self> {
        scheme.validate()?;
        let gamma_mode = match scheme.kind {
            SchemeKind::Ap => scheme.gamma_mode()?,
            _ => GammaMode::LateTime,
        };
        if let Some((cell, component, value)) = grid.first_inadmissible(model.as_ref()) {
            return Err(Error::InadmissibleResult {
                cell,
                component,
                value,
                time: grid.time,
            });
        }
        let mut sim = Self {
            model,
            scheme,
            gamma_mode,
            grid,
            steps: 0,
            floor_events: 0,
            last_cfl: 0.0,
            entropy: None,
            entropy_violations: 0,
            worst_entropy_increase: f64::NEG_INFINITY,
        };
        sim.entropy = sim.total_entropy()?;
        Ok(sim)
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.build_model()?;
        let grid = cfg.initial_grid(model.as_ref())?;
        Self::new(model, cfg.scheme.clone(), grid)
    }

    pub fn model(&self) -> &dyn RelaxationModel {
        self.model.as_ref()
    }

    pub fn grid(&self) -> &GridState {
        &self.grid
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    pub fn time(&self) -> f64 {
        self.grid.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn entropy_violations(&self) -> usize {
        self.entropy_violations
    }

    /// Largest relative per-step entropy change seen so far.
    pub fn worst_entropy_increase(&self) -> f64 {
        self.worst_entropy_increase
    }

    fn total_entropy(&self) -> Result<Option<f64>> {
        if self.model.entropy().is_none() {
            return Ok(None);
        }
        let mut sum = 0.0;
        for c in &self.grid.cells {
            sum += entropy_pair(self.model.as_ref(), c)?.0;
        }
        Ok(Some(sum * self.grid.dx))
    }

    /// Takes one step, shortened so as not to pass `t_target`.
    pub fn step(&mut self, t_target: f64) -> Result<()> {
        let remaining = t_target - self.grid.time;
        if !(remaining > 0.0) {
            return Ok(());
        }
        let model = self.model.as_ref();
        let dx = self.grid.dx;
        let next = match self.scheme.kind {
            SchemeKind::Hll => {
                let b = wave_speed(model, &self.grid, self.scheme.safety)?;
                let dt = (self.scheme.cfl * dx / b).min(remaining);
                self.last_cfl = b * dt / dx;
                step_homogeneous(&self.grid, dt, b, model)?
            }
            SchemeKind::Ap => {
                let b = wave_speed(model, &self.grid, self.scheme.safety)?;
                let full = match self.gamma_mode {
                    GammaMode::LateTime => self.scheme.cfl * self.scheme.eps * dx / b,
                    GammaMode::Fixed(_) => self.scheme.cfl * dx / b,
                };
                let cfg = ApStepConfig {
                    eps: self.scheme.eps,
                    dt: full.min(remaining),
                    b,
                    gamma_mode: self.gamma_mode,
                    policy: self.scheme.sigma,
                };
                let (next, info) = ap_step(&self.grid, &cfg, model)?;
                self.last_cfl = info.cfl_number;
                self.floor_events += info.floor_events;
                next
            }
            SchemeKind::Parabolic => {
                let q = model.q_matrix();
                let u = self.grid.equilibrium_values(&q);
                let m = parabolic_ref::face_matrices(&u, dx, model, self.grid.boundary)?;
                let limit = crate::ap_scheme::diffusion_stability_limit(dx, &m);
                let dt = (self.scheme.parabolic_safety * limit).min(remaining);
                let u =
                    crate::ap_scheme::discrete_diffusion_limit(&u, dt, dx, &m, self.grid.boundary)?;
                self.last_cfl = dt / limit;
                let mut next = self.grid.clone();
                for (i, (cell, ui)) in next.cells.iter_mut().zip(&u).enumerate() {
                    *cell = model
                        .equilibrium(ui)
                        .map_err(|_| Error::InadmissibleResult {
                            cell: i,
                            component: 0,
                            value: ui[0],
                            time: self.grid.time + dt,
                        })?;
                }
                next.time = self.grid.time + dt;
                next
            }
        };
        let landed = next.time >= t_target || t_target - next.time <= 1e-14 * t_target.abs();
        self.grid = next;
        if landed {
            self.grid.time = t_target;
        }
        self.steps += 1;
        let entropy = self.total_entropy()?;
        if let (Some(old), Some(new)) = (self.entropy, entropy) {
            if self.grid.boundary == Boundary::Periodic {
                let rel = (new - old) / old.abs().max(f64::MIN_POSITIVE);
                self.worst_entropy_increase = self.worst_entropy_increase.max(rel);
                if rel > ENTROPY_TOL {
                    self.entropy_violations += 1;
                }
            }
        }
        self.entropy = entropy;
        Ok(())
    }

    /// Steps until `t_target`; returns the number of steps taken.
    pub fn advance_to(&mut self, t_target: f64) -> Result<usize> {
        let start = self.steps;
        while self.grid.time < t_target {
            self.step(t_target)?;
        }
        Ok(self.steps - start)
    }

    pub fn diagnostics(&self) -> DiagnosticRow {
        let nn = self.model.state_dim();
        let mut min = vec![f64::INFINITY; nn];
        let mut max = vec![f64::NEG_INFINITY; nn];
        for c in &self.grid.cells {
            for k in 0..nn {
                min[k] = min[k].min(c[k]);
                max[k] = max[k].max(c[k]);
            }
        }
        DiagnosticRow {
            time: self.grid.time,
            step: self.steps,
            mass: self.grid.totals(&self.model.q_matrix()).into_vec(),
            entropy: self.entropy,
            min,
            max,
            cfl: self.last_cfl,
            floor_events: self.floor_events,
        }
    }

    pub fn equilibrium_values(&self) -> Vec<Vector> {
        self.grid.equilibrium_values(&self.model.q_matrix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: usize,
    pub final_time: f64,
    pub wall_time: Duration,
    pub final_mass: Vec<f64>,
    pub initial_mass: Vec<f64>,
    pub entropy_violations: usize,
    pub floor_events: usize,
    pub snapshots: usize,
    pub diagnostics: Vec<DiagnosticRow>,
}

impl RunReport {
    /// Largest `|mass_final - mass_initial| / |mass_initial|` over components.
    pub fn mass_drift(&self) -> f64 {
        self.final_mass
            .iter()
            .zip(&self.initial_mass)
            .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Runs a configuration to its end time, writing snapshots and diagnostics
/// when an output directory is set.
pub fn run(cfg: &RunConfig) -> Result<(Simulation, RunReport)> {
    let start = Instant::now();
    let mut sim = Simulation::from_config(cfg)?;
    let out = cfg.output.dir.as_deref();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let mut rows = vec![sim.diagnostics()];
    let mut snapshots = 0;
    let mut snap = |sim: &Simulation| -> Result<()> {
        if let Some(dir) = out {
            write_snapshot(
                &dir.join(format!("snapshot_{snapshots:05}.csv")),
                sim.grid(),
                sim.model(),
            )?;
        }
        snapshots += 1;
        Ok(())
    };
    snap(&sim)?;
    let t_end = cfg.scheme.end_time;
    while sim.time() < t_end {
        sim.step(t_end)?;
        if cfg.output.strict && sim.entropy_violations() > 0 {
            return Err(Error::EntropyIncrease {
                step: sim.steps(),
                time: sim.time(),
                increase: sim.worst_entropy_increase(),
            });
        }
        let at_cadence = cfg.output.cadence > 0 && sim.steps() % cfg.output.cadence == 0;
        if at_cadence && sim.time() < t_end {
            snap(&sim)?;
            rows.push(sim.diagnostics());
        }
    }
    if sim.steps() > 0 {
        snap(&sim)?;
        rows.push(sim.diagnostics());
    }
    if let Some(dir) = out {
        write_diagnostics(&dir.join("diagnostics.csv"), &rows, sim.model())?;
    }
    let last = rows.last().cloned().unwrap_or_else(|| sim.diagnostics());
    let report = RunReport {
        steps: sim.steps(),
        final_time: sim.time(),
        wall_time: start.elapsed(),
        final_mass: last.mass.clone(),
        initial_mass: rows[0].mass.clone(),
        entropy_violations: sim.entropy_violations(),
        floor_events: last.floor_events,
        snapshots,
        diagnostics: rows,
    };
    Ok((sim, report))
}
