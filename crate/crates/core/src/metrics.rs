//! Doubling constants, Ruzsa distances, additive energy and the sandwich
//! relating them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dist::{convolve, entropy, shannon, FinDist};
use crate::dstar::{d_star, DStarConfig, DStarResult};
use crate::error::{Error, Result};
use crate::group::{bits_of, Elem, GroupContext, GroupSet, Sign, SubgroupF2};

/// Slack allowed when recording an inequality as holding.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// One recorded inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::with_tolerance(name, lhs, rhs, BOUND_TOLERANCE)
    }

    pub fn with_tolerance(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + tol,
        }
    }

    /// lhs / rhs, the fraction of the bound that is used up. For rhs ≤ 0 the
    /// ratio is meaningless; a check that holds with lhs ≥ rhs counts as
    /// tight (1), one with lhs < rhs as slack (0).
    pub fn utilization(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs < self.rhs {
            0.0
        } else if self.holds {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// Additive-structure summary of a distribution (or of a set through its
/// uniform law). Combinatorial fields refer to the support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub entropy: f64,
    pub sigma_ent: f64,
    pub sigma_comb: f64,
    pub energy: u64,
    pub energy_ratio: f64,
    pub d_ent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_star: Option<DStarResult>,
    pub bounds_checked: Vec<BoundCheck>,
}

impl MetricReport {
    pub fn all_hold(&self) -> bool {
        self.bounds_checked.iter().all(|b| b.holds)
    }
}

/// h(p) = p log 1/p + (1 − p) log 1/(1 − p).
pub fn binary_entropy(pr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pr) {
        return Err(Error::Domain(format!("binary entropy argument {pr} outside [0, 1]")));
    }
    Ok(shannon([pr, 1.0 - pr]))
}

/// σ_ent[X] = exp(H(X₁ + X₂) − H(X)).
pub fn sigma_ent(p: &FinDist) -> f64 {
    let s = convolve(p, p, Sign::Plus).expect("a distribution shares its own context");
    (entropy(&s) - entropy(p)).exp()
}

/// d(X, Y) = H(X′ − Y′) − ½H(X) − ½H(Y) for independent copies.
pub fn d_ent(p: &FinDist, q: &FinDist) -> Result<f64> {
    let diff = convolve(p, q, Sign::Minus)?;
    Ok(entropy(&diff) - 0.5 * entropy(p) - 0.5 * entropy(q))
}

/// d(X, U_H) through the coset formula H(π(X)) + ½(log|H| − H(X)), where π
/// is the quotient map by the finite subgroup `h`.
pub fn d_ent_subgroup(p: &FinDist, h: &GroupSet) -> Result<f64> {
    p.ctx().check_same(h.ctx())?;
    if h.is_empty() || !h.is_subgroup() {
        return Err(Error::Domain("reference set is not a subgroup".into()));
    }
    let mut cosets: BTreeMap<Elem, f64> = BTreeMap::new();
    for (x, px) in p.iter() {
        *cosets.entry(h.coset_rep(x)?).or_insert(0.0) += px;
    }
    Ok(shannon(cosets.into_values()) + 0.5 * ((h.len() as f64).ln() - entropy(p)))
}

/// [`d_ent_subgroup`] for a subspace of 𝔽₂^D given by its echelon basis.
pub fn d_ent_subspace(p: &FinDist, h: &SubgroupF2) -> Result<f64> {
    match p.ctx() {
        GroupContext::F2Vec { dim } if *dim == h.dim() => {}
        other => {
            return Err(Error::ContextMismatch(format!(
                "subspace of F2^{} against {other}",
                h.dim()
            )))
        }
    }
    let mut cosets: BTreeMap<u64, f64> = BTreeMap::new();
    for (x, px) in p.iter() {
        *cosets.entry(h.reduce(bits_of(x))).or_insert(0.0) += px;
    }
    Ok(shannon(cosets.into_values()) + 0.5 * (h.rank() as f64 * std::f64::consts::LN_2 - entropy(p)))
}

/// Sum-representation counts r(s) = #{(a, b) ∈ A² : a + b = s}.
fn representation_counts(a: &GroupSet) -> Result<BTreeMap<Elem, u64>> {
    let ctx = a.ctx();
    let mut r: BTreeMap<Elem, u64> = BTreeMap::new();
    for x in a.iter() {
        for y in a.iter() {
            *r.entry(ctx.add(x, y)?).or_insert(0) += 1;
        }
    }
    Ok(r)
}

/// E[A] = #{(a₁, a₂, a₃, a₄) ∈ A⁴ : a₁ + a₂ = a₃ + a₄} = Σ_s r(s)².
pub fn energy(a: &GroupSet) -> Result<u64> {
    if a.is_empty() {
        return Err(Error::Empty("set"));
    }
    Ok(representation_counts(a)?.values().map(|r| r * r).sum())
}

/// σ[A] = |A + A| / |A|.
pub fn sigma_comb(a: &GroupSet) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty("set"));
    }
    a.doubling()
}

/// Evaluates |A|³/E[A] ≤ σ_ent[A] ≤ σ[A] and records all three values.
pub fn sandwich_check(a: &GroupSet) -> Result<MetricReport> {
    let u = FinDist::uniform(a)?;
    metric_report(&u, None, None)
}

/// Full report for X (and optionally Y). Without `q`, the distance fields
/// refer to d(X, X). The sandwich is recorded only when X is uniform on its
/// support, which is where it applies.
pub fn metric_report(
    p: &FinDist,
    q: Option<&FinDist>,
    d_star_cfg: Option<&DStarConfig>,
) -> Result<MetricReport> {
    let support = p.support();
    let n = support.len() as f64;
    let e = energy(&support)?;
    let energy_ratio = n * n * n / e as f64;
    let s_ent = sigma_ent(p);
    let s_comb = sigma_comb(&support)?;
    let other = q.unwrap_or(p);
    let d = d_ent(p, other)?;

    let mut bounds = Vec::new();
    if p.is_uniform_on(&support) {
        bounds.push(BoundCheck::new("energy_ratio <= sigma_ent", energy_ratio, s_ent));
        bounds.push(BoundCheck::new("sigma_ent <= sigma_comb", s_ent, s_comb));
    }
    bounds.push(BoundCheck::new("sigma_ent >= 1", 1.0, s_ent));
    let half_gap = 0.5 * (entropy(p) - entropy(other)).abs();
    bounds.push(BoundCheck::new("|H(X)-H(Y)|/2 <= d_ent", half_gap, d));

    let d_star = match d_star_cfg {
        Some(cfg) => {
            let r = d_star(p, other, cfg)?;
            bounds.push(BoundCheck::new("d_ent <= d_star", d, r.upper_bound));
            bounds.push(BoundCheck::new("d_star <= 3 d_ent", r.value, 3.0 * d));
            Some(r)
        }
        None => None,
    };

    Ok(MetricReport {
        entropy: entropy(p),
        sigma_ent: s_ent,
        sigma_comb: s_comb,
        energy: e,
        energy_ratio,
        d_ent: d,
        d_star,
        bounds_checked: bounds,
    })
}
