//! Simulated-annealing coarsening on subdomains with halo-aware fitness.

mod config;
mod engine;
mod moves;

pub use config::{temperature_schedule, AnnealConfig, Exchange};
pub use engine::{fitness, sa_coarsen, HaloView, SaEngine, SaOutcome, SaStats, Trace, TraceRecord};
pub use moves::{acceptance_probability, swap_fc};
