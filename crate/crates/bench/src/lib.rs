//! Fixtures shared by the benchmarks.

use percomp_core::{BoxDomain, CompetitionParams, DenseField, HashedField};

/// A hashed field on the box of half-width `half` in the plane.
pub fn plane_field(seed: u64, half: u32) -> HashedField {
    HashedField::new(seed, BoxDomain::new(2, half).expect("valid box"))
}

/// The same field materialized into a dense weight table.
pub fn dense_plane_field(seed: u64, half: u32) -> DenseField {
    DenseField::materialize(&plane_field(seed, half))
}

/// Neighbouring sources at the origin.
pub fn adjacent_sources(p: f64, q: f64) -> CompetitionParams {
    CompetitionParams::new(p, q, vec![0, 0], vec![1, 0]).expect("valid parameters")
}
