//! Seeded inputs shared by the benchmarks.

use entsum::gen::{random_dist, random_set, trial_rng};
use entsum::{FinDist, GroupContext, GroupSet};

pub const SEED: u64 = 7;

/// `n` random sets of the given size in Z^dim, coordinates in [-4, 4].
pub fn lattice_sets(dim: usize, size: usize, n: usize) -> Vec<GroupSet> {
    let ctx = GroupContext::z(dim);
    (0..n)
        .map(|i| random_set(&mut trial_rng(SEED, "bench-set", i as u64), &ctx, size, 4).unwrap())
        .collect()
}

/// A pair of random laws with the given support size.
pub fn law_pair(ctx: &GroupContext, support: usize, index: u64) -> (FinDist, FinDist) {
    let mut rng = trial_rng(SEED, "bench-law", index);
    (
        random_dist(&mut rng, ctx, support, 4).unwrap(),
        random_dist(&mut rng, ctx, support, 4).unwrap(),
    )
}
