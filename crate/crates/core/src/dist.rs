//! Finitely supported distributions and the entropy calculus on them.
//!
//! All logarithms are natural. Distributions store only strictly positive
//! masses, which is how the 0·log 0 = 0 convention is enforced.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Elem, GroupContext, GroupSet, Homomorphism, Sign};

/// Inputs whose total mass is this close to 1 are renormalized; anything
/// further off is rejected.
pub const MASS_SUM_TOLERANCE: f64 = 1e-9;

/// The law of a random variable with finite support. Serializes as the
/// group fields plus `"mass": [[x₁, …, x_D, p], …]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinDist {
    #[serde(flatten)]
    ctx: GroupContext,
    #[serde(serialize_with = "serialize_rows")]
    mass: BTreeMap<Elem, f64>,
}

pub(crate) fn serialize_rows<S: serde::Serializer>(
    mass: &BTreeMap<Elem, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Row<'a>(&'a Elem, f64);
    impl Serialize for Row<'_> {
        fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(self.0.dim() + 1))?;
            for c in self.0.coords() {
                seq.serialize_element(c)?;
            }
            seq.serialize_element(&self.1)?;
            seq.end()
        }
    }
    let mut seq = s.serialize_seq(Some(mass.len()))?;
    for (x, p) in mass {
        seq.serialize_element(&Row(x, *p))?;
    }
    seq.end()
}

impl FinDist {
    /// Builds a distribution from (element, mass) pairs. Coordinates are
    /// canonicalized, repeated elements accumulate, zero masses are dropped.
    pub fn new<I, C>(ctx: GroupContext, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, f64)>,
        C: AsRef<[i64]>,
    {
        let mut mass: BTreeMap<Elem, f64> = BTreeMap::new();
        for (c, p) in items {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("invalid probability {p}")));
            }
            let x = ctx.canonicalize(c.as_ref())?;
            *mass.entry(x).or_insert(0.0) += p;
        }
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(Error::MassSum(total));
        }
        mass.retain(|_, p| *p > 0.0);
        // Sums already within rounding error of 1 are kept as given, so that
        // parsing a written law returns it bit for bit.
        if (total - 1.0).abs() > 1e-12 {
            for p in mass.values_mut() {
                *p /= total;
            }
        }
        Ok(FinDist { ctx, mass })
    }

    /// Internal constructor for masses that are already canonical and sum to
    /// one up to rounding.
    pub(crate) fn from_raw(ctx: GroupContext, mut mass: BTreeMap<Elem, f64>) -> Self {
        mass.retain(|_, p| *p > 0.0);
        FinDist { ctx, mass }
    }

    /// U_A.
    pub fn uniform(set: &GroupSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Empty("uniform distribution support"));
        }
        let p = 1.0 / set.len() as f64;
        Ok(FinDist {
            ctx: set.ctx().clone(),
            mass: set.iter().map(|x| (x.clone(), p)).collect(),
        })
    }

    /// δ_x.
    pub fn point(ctx: GroupContext, x: Elem) -> Result<Self> {
        if !ctx.contains(&x) {
            return Err(Error::ContextMismatch(format!("{x:?} is not an element of {ctx}")));
        }
        Ok(FinDist {
            ctx,
            mass: BTreeMap::from([(x, 1.0)]),
        })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn mass(&self, x: &Elem) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &BTreeMap<Elem, f64> {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Elem, f64)> + '_ {
        self.mass.iter().map(|(x, p)| (x, *p))
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn support(&self) -> GroupSet {
        GroupSet::from_canonical(self.ctx.clone(), self.mass.keys().cloned())
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.mass.values().copied().fold(0.0, f64::max)
    }

    /// Highest-mass element, lexicographically smallest among ties.
    pub fn mode(&self) -> &Elem {
        let mut best: Option<(&Elem, f64)> = None;
        for (x, p) in &self.mass {
            if best.map_or(true, |(_, q)| p > &q) {
                best = Some((x, *p));
            }
        }
        best.expect("distributions are non-empty").0
    }

    /// Law of X + t.
    pub fn translate(&self, t: &Elem) -> Result<FinDist> {
        let mass = self
            .mass
            .iter()
            .map(|(x, p)| Ok((self.ctx.add(x, t)?, *p)))
            .collect::<Result<_>>()?;
        Ok(FinDist::from_raw(self.ctx.clone(), mass))
    }

    /// Law of −X.
    pub fn negate(&self) -> Result<FinDist> {
        let mass = self
            .mass
            .iter()
            .map(|(x, p)| Ok((self.ctx.neg(x)?, *p)))
            .collect::<Result<_>>()?;
        Ok(FinDist::from_raw(self.ctx.clone(), mass))
    }

    pub fn is_uniform_on(&self, set: &GroupSet) -> bool {
        self.support() == *set && {
            let u = 1.0 / set.len() as f64;
            self.mass.values().all(|p| (p - u).abs() <= 1e-12)
        }
    }
}

/// Σ p log(1/p) over the given masses; non-positive masses contribute 0.
pub fn shannon<I: IntoIterator<Item = f64>>(masses: I) -> f64 {
    masses
        .into_iter()
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Entropy of any keyed table of masses, aggregating repeated keys first.
/// Handy for the joint and marginal entropies of small sample spaces.
pub fn entropy_by<K: Ord, I: IntoIterator<Item = (K, f64)>>(items: I) -> f64 {
    let mut agg: BTreeMap<K, f64> = BTreeMap::new();
    for (k, p) in items {
        *agg.entry(k).or_insert(0.0) += p;
    }
    shannon(agg.into_values())
}

/// H(X) in nats.
pub fn entropy(p: &FinDist) -> f64 {
    shannon(p.mass.values().copied())
}

/// Rényi entropy of order `alpha`; α = 1 is the Shannon entropy.
pub fn renyi_entropy(p: &FinDist, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("Renyi order {alpha} must be non-negative")));
    }
    if alpha == 0.0 {
        return Ok((p.support_size() as f64).ln());
    }
    if alpha == 1.0 {
        return Ok(entropy(p));
    }
    if alpha.is_infinite() {
        return Ok(-p.max_mass().ln());
    }
    let s: f64 = p.mass.values().map(|q| q.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

/// Law of X ± Y for independent X ~ p, Y ~ q.
pub fn convolve(p: &FinDist, q: &FinDist, sign: Sign) -> Result<FinDist> {
    p.ctx.check_same(&q.ctx)?;
    let mut mass: BTreeMap<Elem, f64> = BTreeMap::new();
    for (x, px) in &p.mass {
        for (y, qy) in &q.mass {
            *mass.entry(p.ctx.combine(x, y, sign)?).or_insert(0.0) += px * qy;
        }
    }
    Ok(FinDist::from_raw(p.ctx.clone(), mass))
}

/// H(X : Y) = Σ p log(1/q); +∞ when supp p ⊄ supp q.
pub fn cross_entropy(p: &FinDist, q: &FinDist) -> Result<f64> {
    p.ctx.check_same(&q.ctx)?;
    let mut acc = 0.0;
    for (x, px) in &p.mass {
        let qx = q.mass(x);
        if qx <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc -= px * qx.ln();
    }
    Ok(acc)
}

/// D_KL(p ‖ q); +∞ when supp p ⊄ supp q.
pub fn kl_divergence(p: &FinDist, q: &FinDist) -> Result<f64> {
    p.ctx.check_same(&q.ctx)?;
    let mut acc = 0.0;
    for (x, px) in &p.mass {
        let qx = q.mass(x);
        if qx <= 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += px * (px / qx).ln();
    }
    // Rounding can leave a tiny negative value when p = q.
    Ok(acc.max(0.0))
}

/// ‖p − u_S‖₁, summed over supp p ∪ S.
pub fn tv_l1(p: &FinDist, set: &GroupSet) -> Result<f64> {
    p.ctx.check_same(set.ctx())?;
    if set.is_empty() {
        return Err(Error::Empty("reference set"));
    }
    let u = 1.0 / set.len() as f64;
    let mut acc = 0.0;
    for (x, px) in &p.mass {
        acc += if set.contains(x) { (px - u).abs() } else { *px };
    }
    acc += set.iter().filter(|x| !p.mass.contains_key(*x)).count() as f64 * u;
    Ok(acc)
}

/// Law of π(X).
pub fn pushforward(p: &FinDist, h: &Homomorphism) -> Result<FinDist> {
    let cod = h.codomain(&p.ctx)?;
    let mut mass: BTreeMap<Elem, f64> = BTreeMap::new();
    for (x, px) in &p.mass {
        *mass.entry(h.apply(&p.ctx, x)?).or_insert(0.0) += px;
    }
    Ok(FinDist::from_raw(cod, mass))
}

/// Law of (X | π(X) = y).
pub fn condition_on_fiber(p: &FinDist, h: &Homomorphism, y: &Elem) -> Result<FinDist> {
    let mut mass: BTreeMap<Elem, f64> = BTreeMap::new();
    for (x, px) in &p.mass {
        if &h.apply(&p.ctx, x)? == y {
            mass.insert(x.clone(), *px);
        }
    }
    let total: f64 = mass.values().sum();
    if total <= 0.0 {
        return Err(Error::EmptyConditioning);
    }
    mass.values_mut().for_each(|q| *q /= total);
    Ok(FinDist::from_raw(p.ctx.clone(), mass))
}

/// The fiber decomposition of X under π: (y, P(π(X) = y), law of X | π(X) = y)
/// for every y in the image, in increasing order of y.
pub fn fiber_decomposition(p: &FinDist, h: &Homomorphism) -> Result<Vec<(Elem, f64, FinDist)>> {
    let mut groups: BTreeMap<Elem, BTreeMap<Elem, f64>> = BTreeMap::new();
    for (x, px) in &p.mass {
        groups
            .entry(h.apply(&p.ctx, x)?)
            .or_default()
            .insert(x.clone(), *px);
    }
    Ok(groups
        .into_iter()
        .map(|(y, mut mass)| {
            let w: f64 = mass.values().sum();
            mass.values_mut().for_each(|q| *q /= w);
            (y, w, FinDist::from_raw(p.ctx.clone(), mass))
        })
        .collect())
}

/// H(X | π(X)) = Σ_y P(π(X)=y) H(X | π(X)=y), computed fiber by fiber.
pub fn conditional_entropy_given_image(p: &FinDist, h: &Homomorphism) -> Result<f64> {
    Ok(fiber_decomposition(p, h)?
        .iter()
        .map(|(_, w, f)| w * entropy(f))
        .sum())
}

/// A joint law of a pair (X, Y).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDist {
    ctx_x: GroupContext,
    ctx_y: GroupContext,
    #[serde(serialize_with = "serialize_pairs")]
    mass: BTreeMap<(Elem, Elem), f64>,
}

fn serialize_pairs<S: serde::Serializer>(
    mass: &BTreeMap<(Elem, Elem), f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(mass.len()))?;
    for ((x, y), p) in mass {
        seq.serialize_element(&(x, y, p))?;
    }
    seq.end()
}

impl JointDist {
    /// Builds a joint law; masses must sum to one within [`MASS_SUM_TOLERANCE`].
    pub fn new(
        ctx_x: GroupContext,
        ctx_y: GroupContext,
        items: impl IntoIterator<Item = ((Elem, Elem), f64)>,
    ) -> Result<Self> {
        let mut mass: BTreeMap<(Elem, Elem), f64> = BTreeMap::new();
        for ((x, y), p) in items {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("invalid probability {p}")));
            }
            if !ctx_x.contains(&x) || !ctx_y.contains(&y) {
                return Err(Error::ContextMismatch(format!("pair ({x:?}, {y:?})")));
            }
            *mass.entry((x, y)).or_insert(0.0) += p;
        }
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(Error::MassSum(total));
        }
        mass.retain(|_, p| *p > 0.0);
        Ok(JointDist { ctx_x, ctx_y, mass })
    }

    pub(crate) fn from_raw(
        ctx_x: GroupContext,
        ctx_y: GroupContext,
        mut mass: BTreeMap<(Elem, Elem), f64>,
    ) -> Self {
        mass.retain(|_, p| *p > 0.0);
        JointDist { ctx_x, ctx_y, mass }
    }

    /// The product coupling p ⊗ q.
    pub fn independent(p: &FinDist, q: &FinDist) -> Self {
        let mass = p
            .iter()
            .flat_map(|(x, px)| q.iter().map(move |(y, qy)| ((x.clone(), y.clone()), px * qy)))
            .collect();
        JointDist::from_raw(p.ctx().clone(), q.ctx().clone(), mass)
    }

    pub fn masses(&self) -> &BTreeMap<(Elem, Elem), f64> {
        &self.mass
    }

    pub fn mass(&self, x: &Elem, y: &Elem) -> f64 {
        self.mass.get(&(x.clone(), y.clone())).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn marginal_x(&self) -> FinDist {
        let mut m: BTreeMap<Elem, f64> = BTreeMap::new();
        for ((x, _), p) in &self.mass {
            *m.entry(x.clone()).or_insert(0.0) += p;
        }
        FinDist::from_raw(self.ctx_x.clone(), m)
    }

    pub fn marginal_y(&self) -> FinDist {
        let mut m: BTreeMap<Elem, f64> = BTreeMap::new();
        for ((_, y), p) in &self.mass {
            *m.entry(y.clone()).or_insert(0.0) += p;
        }
        FinDist::from_raw(self.ctx_y.clone(), m)
    }

    /// Law of X − Y.
    pub fn difference_law(&self) -> Result<FinDist> {
        self.ctx_x.check_same(&self.ctx_y)?;
        let mut m: BTreeMap<Elem, f64> = BTreeMap::new();
        for ((x, y), p) in &self.mass {
            *m.entry(self.ctx_x.sub(x, y)?).or_insert(0.0) += p;
        }
        Ok(FinDist::from_raw(self.ctx_x.clone(), m))
    }

    /// H(X, Y).
    pub fn entropy(&self) -> f64 {
        shannon(self.mass.values().copied())
    }
}

/// ℓ¹ distance between two laws on the same group.
pub fn l1_distance(p: &FinDist, q: &FinDist) -> f64 {
    let mut acc = 0.0;
    for (x, px) in p.iter() {
        acc += (px - q.mass(x)).abs();
    }
    for (y, qy) in q.iter() {
        if p.mass(y) == 0.0 {
            acc += qy;
        }
    }
    acc
}
