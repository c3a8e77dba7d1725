//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! name = "euler_friction"
//! [model.params]
//! kappa_p = 1.0
//! gamma = 2.0
//!
//! [scheme]
//! kind = "ap"            # ap | hll | parabolic
//! eps = 1e-3
//! end_time = 0.05
//!
//! [grid]
//! num_cells = 200
//!
//! [ic]
//! profile = "gaussian"
//! center = 0.5
//! width = 0.1
//! amplitude = 0.5
//! floor = 1.0
//!
//! [output]
//! dir = "out"
//! cadence = 1000
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ap_scheme::{GammaMode, SigmaPolicy};
use crate::densecore::{Mat, Vector};
use crate::error::{Error, Result};
use crate::hll::{DEFAULT_CFL, DEFAULT_SAFETY};
use crate::models::{build_model, ModelParams};
use crate::parabolic_ref;
use crate::system::{Boundary, EquilVec, GridState, RelaxationModel, StateVec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub ic: InitialCondition,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Ap,
    Hll,
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaModeName {
    #[default]
    LateTime,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Slow time for `ap` in late-time mode and for `parabolic`; fast time otherwise.
    pub end_time: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Multiplier on the largest spectral radius when choosing `b`.
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default)]
    pub gamma_mode: GammaModeName,
    /// Relaxation rate for `gamma_mode = "fixed"`.
    pub gamma: Option<f64>,
    #[serde(default)]
    pub sigma: SigmaPolicy,
    /// Fraction of the explicit diffusion bound used by `parabolic`.
    #[serde(default = "default_parabolic_safety")]
    pub parabolic_safety: f64,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_safety() -> f64 {
    DEFAULT_SAFETY
}

fn default_parabolic_safety() -> f64 {
    parabolic_ref::DEFAULT_SAFETY
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, end_time: f64) -> Self {
        Self {
            kind,
            end_time,
            eps: default_eps(),
            cfl: default_cfl(),
            safety: default_safety(),
            gamma_mode: GammaModeName::LateTime,
            gamma: None,
            sigma: SigmaPolicy::default(),
            parabolic_safety: default_parabolic_safety(),
        }
    }

    pub fn gamma_mode(&self) -> Result<GammaMode> {
        match (self.gamma_mode, self.gamma) {
            (GammaModeName::LateTime, _) => Ok(GammaMode::LateTime),
            (GammaModeName::Fixed, Some(g)) if g >= 0.0 && g.is_finite() => Ok(GammaMode::Fixed(g)),
            (GammaModeName::Fixed, g) => Err(Error::Config(format!(
                "gamma_mode = \"fixed\" needs a finite gamma >= 0, got {g:?}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.end_time >= 0.0) || !self.end_time.is_finite() {
            return Err(Error::Config(format!(
                "end_time must be >= 0, got {}",
                self.end_time
            )));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= crate::hll::CFL_LIMIT) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 0.5], got {}",
                self.cfl
            )));
        }
        if !(self.safety >= 1.0) || !self.safety.is_finite() {
            return Err(Error::Config(format!(
                "safety must be >= 1, got {}",
                self.safety
            )));
        }
        if !(self.parabolic_safety > 0.0 && self.parabolic_safety <= 1.0) {
            return Err(Error::Config(format!(
                "parabolic_safety must lie in (0, 1], got {}",
                self.parabolic_safety
            )));
        }
        if self.kind == SchemeKind::Ap {
            self.gamma_mode()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_cells")]
    pub num_cells: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_x_max() -> f64 {
    1.0
}

fn default_cells() -> usize {
    200
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: default_x_max(),
            num_cells: default_cells(),
            boundary: Boundary::Periodic,
        }
    }
}

/// Initial profile of the equilibrium variables `u`. The scalar profiles
/// drive component `component`; the others take their value from `base`
/// (default 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `floor + amplitude exp(-((x - center)/width)^2)`
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        floor: f64,
        #[serde(default)]
        component: usize,
        base: Option<Vec<f64>>,
        #[serde(default)]
        perturbation: f64,
    },
    /// `mean + amplitude sin(2 pi k (x - x_min) / L)`, `k` an integer mode number.
    SineMode {
        k: u32,
        amplitude: f64,
        mean: f64,
        #[serde(default)]
        component: usize,
        base: Option<Vec<f64>>,
        #[serde(default)]
        perturbation: f64,
    },
    /// `left` for `x < location`, `right` otherwise.
    Riemann {
        left: Vec<f64>,
        right: Vec<f64>,
        location: f64,
        #[serde(default)]
        perturbation: f64,
    },
}

impl InitialCondition {
    fn perturbation(&self) -> f64 {
        match self {
            Self::Gaussian { perturbation, .. }
            | Self::SineMode { perturbation, .. }
            | Self::Riemann { perturbation, .. } => *perturbation,
        }
    }

    /// Equilibrium values at `x` on `[x_min, x_max]`.
    pub fn equilibrium_at(&self, x: f64, x_min: f64, x_max: f64, n: usize) -> Result<EquilVec> {
        let scalar = |component: usize, base: &Option<Vec<f64>>, value: f64| -> Result<EquilVec> {
            let mut u = match base {
                Some(b) if b.len() == n => Vector::from_slice(b),
                Some(b) => {
                    return Err(Error::Config(format!(
                        "ic.base has {} entries, model has {n}",
                        b.len()
                    )));
                }
                None => Vector::from_vec(vec![1.0; n]),
            };
            if component >= n {
                return Err(Error::Config(format!(
                    "ic.component {component} out of range for {n} components"
                )));
            }
            u[component] = value;
            Ok(u)
        };
        match self {
            Self::Gaussian {
                center,
                width,
                amplitude,
                floor,
                component,
                base,
                ..
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
                scalar(
                    *component,
                    base,
                    floor + amplitude * (-((x - center) / width).powi(2)).exp(),
                )
            }
            Self::SineMode {
                k,
                amplitude,
                mean,
                component,
                base,
                ..
            } => {
                let phase = 2.0 * PI * f64::from(*k) * (x - x_min) / (x_max - x_min);
                scalar(*component, base, mean + amplitude * phase.sin())
            }
            Self::Riemann {
                left,
                right,
                location,
                ..
            } => {
                let side = if x < *location { left } else { right };
                if side.len() != n {
                    return Err(Error::Config(format!(
                        "riemann state has {} entries, model has {n}",
                        side.len()
                    )));
                }
                Ok(Vector::from_slice(side))
            }
        }
    }

    /// Cell state `E(u)`, plus `perturbation` along the off-equilibrium
    /// direction `(I - D_uE Q) 1`, which leaves `QU` unchanged.
    pub fn state_at(
        &self,
        model: &dyn RelaxationModel,
        x: f64,
        x_min: f64,
        x_max: f64,
    ) -> Result<StateVec> {
        let u = self.equilibrium_at(x, x_min, x_max, model.equil_dim())?;
        let mut s = model.equilibrium(&u)?;
        let p = self.perturbation();
        if p != 0.0 {
            let nn = model.state_dim();
            let proj = &Mat::identity(nn) - &(&model.equilibrium_jacobian(&u)? * &model.q_matrix());
            s.axpy(p, &proj.mul_vec(&Vector::from_vec(vec![1.0; nn])));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for snapshots and diagnostics; nothing is written when absent.
    pub dir: Option<PathBuf>,
    /// Steps between snapshots; 0 keeps only the initial and final ones.
    #[serde(default)]
    pub cadence: usize,
    /// Turn diagnostic violations into errors.
    #[serde(default)]
    pub strict: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if self.grid.num_cells < 4 {
            return Err(Error::Config(format!(
                "num_cells must be >= 4, got {}",
                self.grid.num_cells
            )));
        }
        if !(self.grid.x_max > self.grid.x_min) {
            return Err(Error::Config("x_max must exceed x_min".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Box<dyn RelaxationModel>> {
        build_model(&self.model.name, &self.model.params)
    }

    /// Initial grid, rejecting inadmissible cells.
    pub fn initial_grid(&self, model: &dyn RelaxationModel) -> Result<GridState> {
        let g = &self.grid;
        let dx = (g.x_max - g.x_min) / g.num_cells as f64;
        let cells = (0..g.num_cells)
            .map(|i| {
                self.ic
                    .state_at(model, g.x_min + (i as f64 + 0.5) * dx, g.x_min, g.x_max)
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = GridState::new(g.x_min, g.x_max, g.boundary, cells)?;
        if let Some((cell, component, value)) = grid.first_inadmissible(model) {
            return Err(Error::InadmissibleResult {
                cell,
                component,
                value,
                time: 0.0,
            });
        }
        Ok(grid)
    }
}
