//! Seeded random instances. Every trial gets its own generator derived from
//! (seed, suite, trial index), so results do not depend on evaluation order.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::FinDist;
use crate::error::Result;
use crate::group::{Elem, GroupContext, GroupSet};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Generator for trial `index` of `suite` under `seed`.
pub fn trial_rng(seed: u64, suite: &str, index: u64) -> ChaCha8Rng {
    let s = splitmix64(seed ^ splitmix64(fnv1a(suite) ^ splitmix64(index)));
    ChaCha8Rng::seed_from_u64(s)
}

/// Half-width of the coordinate box used for sets in ℤ^D.
pub const LATTICE_RADIUS: i64 = 4;

fn random_coords(rng: &mut impl Rng, ctx: &GroupContext, radius: i64) -> Vec<i64> {
    match ctx {
        GroupContext::ZLattice { dim } => (0..*dim).map(|_| rng.random_range(-radius..=radius)).collect(),
        GroupContext::F2Vec { dim } | GroupContext::QuotientF2 { dim, .. } => {
            (0..*dim).map(|_| rng.random_range(0..2)).collect()
        }
        GroupContext::ZModProduct { moduli } => moduli.iter().map(|m| rng.random_range(0..*m)).collect(),
    }
}

/// Number of distinct elements available to the generators.
fn universe_size(ctx: &GroupContext, radius: i64) -> u128 {
    match ctx.order() {
        Some(n) if ctx.is_finite() => n,
        _ => ((2 * radius + 1) as u128).saturating_pow(ctx.dim() as u32),
    }
}

/// A random element of `ctx` (inside the box [−r, r]^D for lattices).
pub fn random_elem(rng: &mut impl Rng, ctx: &GroupContext, radius: i64) -> Result<Elem> {
    ctx.canonicalize(&random_coords(rng, ctx, radius))
}

/// A random set with exactly `size` elements, capped by the universe size.
pub fn random_set(rng: &mut impl Rng, ctx: &GroupContext, size: usize, radius: i64) -> Result<GroupSet> {
    let size = (size as u128).min(universe_size(ctx, radius)).max(1) as usize;
    if ctx.is_finite() && ctx.order().is_some_and(|n| n <= 4096) {
        let all = ctx.elements()?;
        let picks = sample(rng, all.len(), size);
        return GroupSet::new(ctx.clone(), picks.iter().map(|i| all[i].coords().to_vec()));
    }
    let mut elems = std::collections::BTreeSet::new();
    while elems.len() < size {
        elems.insert(random_elem(rng, ctx, radius)?);
    }
    GroupSet::new(ctx.clone(), elems.iter().map(|e| e.coords().to_vec()))
}

/// A random law on a random support of `size` elements with masses drawn
/// from Exp(1), so that both near-uniform and skewed laws appear.
pub fn random_dist(rng: &mut impl Rng, ctx: &GroupContext, size: usize, radius: i64) -> Result<FinDist> {
    let support = random_set(rng, ctx, size, radius)?;
    random_law_on(rng, &support)
}

/// A random law whose support is exactly `support`.
pub fn random_law_on(rng: &mut impl Rng, support: &GroupSet) -> Result<FinDist> {
    let w: Vec<f64> = (0..support.len())
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    let total: f64 = w.iter().sum();
    FinDist::new(
        support.ctx().clone(),
        support.iter().zip(&w).map(|(x, p)| (x.coords().to_vec(), p / total)),
    )
}

/// (1 − t)·u + t·q for a random law q on `h`: a law on `h` whose ℓ¹ distance
/// to the uniform law is at most 2t.
pub fn perturbed_uniform(rng: &mut impl Rng, h: &GroupSet, t: f64) -> Result<FinDist> {
    let q = random_law_on(rng, h)?;
    let u = 1.0 / h.len() as f64;
    FinDist::new(
        h.ctx().clone(),
        h.iter().map(|x| (x.coords().to_vec(), (1.0 - t) * u + t * q.mass(x))),
    )
}

/// A law with mass at least 1 − δ on one point.
pub fn concentrated_dist(rng: &mut impl Rng, ctx: &GroupContext, size: usize, delta: f64) -> Result<FinDist> {
    let support = random_set(rng, ctx, size, LATTICE_RADIUS)?;
    let heavy = rng.random_range(0..support.len());
    let tail = delta * rng.random::<f64>();
    let rest = random_law_on(rng, &support)?;
    FinDist::new(
        ctx.clone(),
        support.iter().enumerate().map(|(i, x)| {
            let p = tail * rest.mass(x) + if i == heavy { 1.0 - tail } else { 0.0 };
            (x.coords().to_vec(), p)
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_order() {
        let a: u64 = trial_rng(7, "x", 3).random();
        let _ = trial_rng(7, "x", 2).random::<u64>();
        assert_eq!(a, trial_rng(7, "x", 3).random::<u64>());
        assert_ne!(a, trial_rng(7, "y", 3).random::<u64>());
        assert_ne!(a, trial_rng(8, "x", 3).random::<u64>());
    }

    #[test]
    fn generators_respect_sizes() {
        let mut rng = trial_rng(1, "gen", 0);
        let f2 = GroupContext::f2(2);
        assert_eq!(random_set(&mut rng, &f2, 10, 4).unwrap().len(), 4);
        let z = GroupContext::z(2);
        for size in 1..12 {
            assert_eq!(random_set(&mut rng, &z, size, 4).unwrap().len(), size);
            let p = concentrated_dist(&mut rng, &z, size, 0.05).unwrap();
            assert!(p.max_mass() >= 0.95);
        }
        let h = GroupSet::whole(&GroupContext::zmod(&[5]).unwrap()).unwrap();
        let p = perturbed_uniform(&mut rng, &h, 0.1).unwrap();
        assert!(crate::dist::tv_l1(&p, &h).unwrap() <= 0.2 + 1e-12);
    }
}
