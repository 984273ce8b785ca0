//! Coarse/fine partitioning building blocks: the greedy baseline, subdomain
//! decompositions, by-hand reference splittings and an exhaustive oracle.

mod brute;
mod byhand;
mod decomp;
mod greedy;

pub use brute::{brute_force_optimal_f, BruteForceResult, BRUTE_FORCE_LIMIT};
pub use byhand::{by_hand_fd, by_hand_fe};
pub use decomp::{
    geometric_blocks, global_subdomain, lloyd_aggregate, lloyd_aggregate_pinned, SubdomainDecomposition,
};
pub use greedy::{greedy_coarsen, prepin_safe_f};
