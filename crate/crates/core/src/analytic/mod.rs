//! Semi-analytic coverage through Laplace transforms of the interference.

pub mod coverage;
pub mod direct;
pub mod engine;
pub mod lognormal;

pub use coverage::{
    combine_tiers, inversion_agreement, network_coverage, per_tier_coverage, NetworkCoverage,
    TierCoverageTable,
};
