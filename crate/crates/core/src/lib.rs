//! Two-type competition growth driven by Bernoulli bond percolation on `Z^d`.
//!
//! All randomness flows from a single uniform edge field: an edge `e` is
//! `p`-open iff its weight `w_e <= p`, so every parameter value is coupled
//! through the same field. On top of that field the crate provides
//!
//! - [`lattice`]: finite boxes, hashed edge weights and the random boundary
//!   operator,
//! - [`percolation`]: clusters, chemical distance and tail statistics,
//! - [`competition`]: the competition automaton in its local-rule and
//!   field-driven forms,
//! - [`shape`]: asymptotic norm, norm-comparison and speed estimators,
//! - [`renorm`]: the renormalization grid, main crossings and box coloring,
//! - [`sweep`] and [`render`]: coexistence sweeps and PPM snapshots.

pub mod competition;
pub mod error;
pub mod hash;
pub mod lattice;
pub mod percolation;
pub mod render;
pub mod renorm;
pub mod shape;
pub mod stats;
pub mod sweep;

pub use competition::{
    local_transition_distribution, run_competition, step_field, step_sampled, CompetitionParams,
    CompetitionState, Configuration, RunRecord, RunSummary, SiteState, TransitionLaw,
};
pub use error::{Error, Result};
pub use hash::{derive_seed, mix64};
pub use lattice::{p_boundary, BoxDomain, DenseField, EdgeId, EdgeWeights, HashedField};
pub use percolation::{
    chemical_distance_field, clusters, tail_statistics, ClusterLabeling, DistanceField,
    TailConfig, TailRow,
};
pub use render::{encode_ppm, write_ppm, PaletteGrid};
pub use renorm::{
    box_is_black, estimate_pn, main_crossings, Crossing, CrossingSequence, NBox, PnRow,
    RenormGrid,
};
pub use shape::{
    cpq_estimate, norm_estimate, reach_metrics, speed_ratio_experiment, CpqTable, FanNorm,
    L1Norm, NormEstimate, NormEvaluator, ReachValues, SpeedRatioResult,
};
pub use sweep::{run_sweep, SweepConfig, SweepResult, SweepRow};
