//! Config-driven scenario runner: check catalogue, execution, reports and artifacts.

mod artifacts;
mod catalogue;
mod config;
mod runner;

pub use artifacts::{write_atomic, write_operator, write_table, Format};
pub use catalogue::{catalogue, find, Bound, CheckGroup, CheckInfo};
pub use config::{GridSpec, Resolution, Scenario};
pub use runner::{export, output_dir, run, CheckRecord, Context, RunReport, Verdict, EXPORTABLE};
