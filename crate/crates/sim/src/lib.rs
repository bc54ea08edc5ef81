//! Monte Carlo experiments for the maxcusum change-point test.
//!
//! An [`ExperimentPlan`] names scenario cells, competing methods and grids;
//! [`run_size`], [`run_power`] and [`run_rmse`] turn it into an
//! [`ExperimentReport`] whose CSV form is identical for any worker count.

pub mod error;
pub mod harness;
pub mod plan;
pub mod report;

pub use error::{Result, SimError};
pub use harness::{cell_key, replicate_streams, run, run_power, run_rmse, run_size};
pub use plan::{default_alpha_grid, ExperimentPlan, Method, Metric};
pub use report::{proportion_se, CellRecord, ExperimentReport, ReportRow, CSV_COLUMNS};
