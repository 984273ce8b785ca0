//! Reduction-based AMG: diagonal `D_FF`, interpolation and restriction,
//! Galerkin coarse operators, F-relaxation, the Ruge–Stüben second pass and
//! multilevel cycles.

mod dff;
mod hierarchy;
mod strength;
mod transfer;

pub use dff::{build_dff, build_dff_with, epsilon_for, sigma_for, Dff, DffRule};
pub use hierarchy::{
    build_hierarchy, AmgrHierarchy, AmgrLevel, AmgrOptions, CycleKind, InterpolationKind, LevelCoarsener,
};
pub use strength::{second_pass, second_pass_violations, strength_graph};
pub use transfer::{build_interpolation, build_restriction, classical_interpolation, galerkin_coarse};
