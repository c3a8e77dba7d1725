//! CSV snapshots (`x,<state components>`) and the diagnostics series.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::densecore::Vector;
use crate::error::{Error, Result};
use crate::harness::sim::DiagnosticRow;
use crate::models::{build_model, ModelParams, MODEL_NAMES};
use crate::system::{EquilVec, GridState, RelaxationModel};

/// 17 significant digits, locale independent.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}").to_lowercase()
    }
}

pub fn snapshot_csv(grid: &GridState, model: &dyn RelaxationModel) -> String {
    let mut out = String::from("x");
    for name in model.state_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, c) in grid.cells.iter().enumerate() {
        out.push_str(&fmt_num(grid.center(i)));
        for v in c.iter() {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, grid: &GridState, model: &dyn RelaxationModel) -> Result<()> {
    fs::write(path, snapshot_csv(grid, model))?;
    Ok(())
}

pub fn diagnostics_csv(rows: &[DiagnosticRow], model: &dyn RelaxationModel) -> String {
    let mut out = String::from("t");
    for k in 1..=model.equil_dim() {
        let _ = write!(out, ",mass_{k}");
    }
    out.push_str(",entropy");
    for prefix in ["min", "max"] {
        for name in model.state_names() {
            let _ = write!(out, ",{prefix}_{name}");
        }
    }
    out.push_str(",cfl,floor_events\n");
    for r in rows {
        out.push_str(&fmt_num(r.time));
        for v in r
            .mass
            .iter()
            .chain(std::iter::once(&r.entropy.unwrap_or(f64::NAN)))
            .chain(&r.min)
            .chain(&r.max)
        {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        let _ = writeln!(out, ",{},{}", fmt_num(r.cfl), r.floor_events);
    }
    out
}

pub fn write_diagnostics(
    path: &Path,
    rows: &[DiagnosticRow],
    model: &dyn RelaxationModel,
) -> Result<()> {
    fs::write(path, diagnostics_csv(rows, model))?;
    Ok(())
}

/// A snapshot read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub columns: Vec<String>,
    pub x: Vec<f64>,
    pub states: Vec<Vector>,
}

impl Snapshot {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Io("empty snapshot".into()))?;
        let mut columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if columns.first().map(String::as_str) != Some("x") || columns.len() < 2 {
            return Err(Error::Io(format!("unexpected snapshot header `{header}`")));
        }
        columns.remove(0);
        let mut x = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Io(format!("row {}: {e}", row + 1)))?;
            if vals.len() != columns.len() + 1 {
                return Err(Error::Io(format!(
                    "row {} has {} fields",
                    row + 1,
                    vals.len()
                )));
            }
            x.push(vals[0]);
            states.push(Vector::from_slice(&vals[1..]));
        }
        if x.is_empty() {
            return Err(Error::Io("snapshot has no rows".into()));
        }
        Ok(Self { columns, x, states })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn dx(&self) -> f64 {
        if self.x.len() > 1 {
            self.x[1] - self.x[0]
        } else {
            1.0
        }
    }

    /// The model whose state names match the header.
    pub fn model(&self) -> Result<Box<dyn RelaxationModel>> {
        for name in MODEL_NAMES {
            let m = build_model(name, &ModelParams::default())?;
            if m.state_names()
                .iter()
                .copied()
                .eq(self.columns.iter().map(String::as_str))
            {
                return Ok(m);
            }
        }
        Err(Error::UnknownModel(self.columns.join(",")))
    }

    /// `u = Q U` per cell.
    pub fn equilibrium_values(&self) -> Result<Vec<EquilVec>> {
        let q = self.model()?.q_matrix();
        Ok(self.states.iter().map(|s| q.mul_vec(s)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Boundary;

    #[test]
    fn snapshot_round_trip() {
        let m = build_model("m1", &ModelParams::default()).unwrap();
        let cells = (0..5)
            .map(|i| Vector::from_slice(&[1.0 + 0.1 * i as f64, 0.01 / 3.0, 0.7]))
            .collect();
        let g = GridState::new(0.0, 1.0, Boundary::Periodic, cells).unwrap();
        let text = snapshot_csv(&g, m.as_ref());
        assert!(text.starts_with("x,e,f,tau\n"));
        let s = Snapshot::parse(&text).unwrap();
        assert_eq!(s.states, g.cells);
        assert_eq!(s.x[2], g.center(2));
        assert_eq!(s.model().unwrap().name(), "m1");
        assert!((s.equilibrium_values().unwrap()[0][0] - 1.7).abs() < 1e-15);
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert!(Snapshot::parse("y,a\n1,2\n").is_err());
        assert!(Snapshot::parse("x,rho\n1,2,3\n").is_err());
    }
}
