pub mod amgr;
pub mod anneal;
pub mod coarsen;
pub mod error;
pub mod metrics;
pub mod mmio;
pub mod partition;
pub mod problems;
pub mod sparse;
pub mod splitting;

pub use error::{Error, Result};
pub use sparse::CsrMatrix;
pub use splitting::{CfSplitting, Label};
