//! Configuration, run orchestration, diagnostics and data export.

pub mod analysis;
pub mod config;
pub mod io;
pub mod sim;

pub use analysis::{compare, converge, corrector_report, Norm};
pub use config::{RunConfig, SchemeConfig, SchemeKind};
pub use io::Snapshot;
pub use sim::{run, RunReport, Simulation};
