//! Structure extraction from small entropic distance: the KL-threshold set,
//! Freiman's closure test, subgroup localization, the fiber inequality for
//! homomorphisms and the lemmas built on it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dist::{
    conditional_entropy_given_image, convolve, entropy, fiber_decomposition, kl_divergence,
    pushforward, shannon, FinDist,
};
use crate::dstar::{d_star, DStarConfig};
use crate::error::{Error, Result};
use crate::group::{
    bits_of, enumerate_subgroups, enumerate_supergroups, Elem, GroupContext, GroupSet,
    Homomorphism, Sign, SubgroupF2, DEFAULT_SUBGROUP_CAP,
};
use crate::metrics::{binary_entropy, d_ent, d_ent_subgroup, BoundCheck, BOUND_TOLERANCE};

/// Slack on the KL threshold defining S, so that points sitting exactly on
/// the threshold are not lost to rounding.
pub const KL_THRESHOLD_TOLERANCE: f64 = 1e-9;

/// Outcome of a bound that can only be certified up to an optimizer gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DStarCheck {
    pub value: f64,
    pub gap: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub s: GroupSet,
    pub c_param: f64,
    pub k: f64,
    /// (C + 2)k + h(1 − 2/C).
    pub bound_approx: f64,
    /// (2C + 4)k + 2h(1 − 2/C).
    pub bound_doubling: f64,
    /// H(Y) − 2h(1 − 2/C) − 4k, a lower bound for log|S|.
    pub bound_size: f64,
    /// d(U_S, Y).
    pub measured_dist: f64,
    /// log(|S − S| / |S|).
    pub measured_doubling: f64,
    /// P(X ∈ S), at least 1 − 2/C.
    pub mass_in_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_star: Option<DStarCheck>,
    pub checks: Vec<BoundCheck>,
}

impl ExtractionResult {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
            && self.d_star.as_ref().map_or(true, |c| c.verdict != Verdict::Violated)
    }
}

/// S = {x : p_X(x) > 0, D_KL(x − Y ‖ X − Y) ≤ Ck}, with k = d(X, Y), plus
/// numerical verification of the bounds it satisfies. With `d_star_cfg`
/// the distance bound is also checked for d*(U_S, Y).
pub fn extract_structured_set(
    px: &FinDist,
    py: &FinDist,
    c: f64,
    d_star_cfg: Option<&DStarConfig>,
) -> Result<ExtractionResult> {
    if !(c >= 4.0) {
        return Err(Error::Parameter(format!("C = {c} must be at least 4")));
    }
    px.ctx().check_same(py.ctx())?;
    let k = d_ent(px, py)?;
    let diff = convolve(px, py, Sign::Minus)?;
    let neg_y = py.negate()?;
    let threshold = c * k + KL_THRESHOLD_TOLERANCE;
    let mut members = Vec::new();
    let mut mass_in_s = 0.0;
    for (x, p) in px.iter() {
        if kl_divergence(&neg_y.translate(x)?, &diff)? <= threshold {
            members.push(x.clone());
            mass_in_s += p;
        }
    }
    let s = GroupSet::from_canonical(px.ctx().clone(), members);
    if s.is_empty() {
        return Err(Error::Degenerate("threshold set is empty".into()));
    }
    let h = binary_entropy(1.0 - 2.0 / c)?;
    let bound_approx = (c + 2.0) * k + h;
    let bound_doubling = (2.0 * c + 4.0) * k + 2.0 * h;
    let bound_size = entropy(py) - 2.0 * h - 4.0 * k;
    let us = FinDist::uniform(&s)?;
    let measured_dist = d_ent(&us, py)?;
    let n = s.len() as f64;
    let measured_doubling = (s.sumset(&s, Sign::Minus)?.len() as f64 / n).ln();

    let mut checks = vec![
        BoundCheck::new("P(X in S) >= 1 - 2/C", 1.0 - 2.0 / c, mass_in_s),
        BoundCheck::new("log|S| >= H(Y) - 2h(1-2/C) - 4k", bound_size, n.ln()),
        BoundCheck::new("d(U_S,Y) <= (C+2)k + h(1-2/C)", measured_dist, bound_approx),
        BoundCheck::new(
            "log(|S-S|/|S|) <= (2C+4)k + 2h(1-2/C)",
            measured_doubling,
            bound_doubling,
        ),
    ];
    if c == 4.0 {
        checks.push(BoundCheck::new(
            "d(U_S,Y) <= 6k + log 2",
            measured_dist,
            6.0 * k + std::f64::consts::LN_2,
        ));
        checks.push(BoundCheck::new(
            "|S-S| <= 4 exp(12k)|S|",
            (measured_doubling).exp() * n,
            4.0 * (12.0 * k).exp() * n,
        ));
    }
    let d_star = match d_star_cfg {
        Some(cfg) => {
            let r = d_star(&us, py, cfg)?;
            let verdict = if r.value > bound_approx + BOUND_TOLERANCE {
                Verdict::Violated
            } else if r.gap < 1e-6 {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            };
            Some(DStarCheck {
                value: r.value,
                gap: r.gap,
                bound: bound_approx,
                verdict,
            })
        }
        None => None,
    };
    Ok(ExtractionResult {
        s,
        c_param: c,
        k,
        bound_approx,
        bound_doubling,
        bound_size,
        measured_dist,
        measured_doubling,
        mass_in_s,
        d_star,
        checks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FreimanOutcome {
    /// |S − S| < 3/2·|S| and S − S passed the exhaustive closure check.
    Subgroup { h: GroupSet, ratio: f64 },
    /// The doubling hypothesis fails, or (never for a correct group
    /// implementation) the closure check does.
    Failure { ratio: f64, closure_checked: bool },
}

/// If |S − S| < (3/2)|S| then S − S is a subgroup; this verifies closure
/// exhaustively rather than trusting the classical argument.
pub fn freiman_closure_test(s: &GroupSet) -> Result<FreimanOutcome> {
    if s.is_empty() {
        return Err(Error::Empty("set"));
    }
    let d = s.sumset(s, Sign::Minus)?;
    let ratio = d.len() as f64 / s.len() as f64;
    if 2 * d.len() >= 3 * s.len() {
        return Ok(FreimanOutcome::Failure {
            ratio,
            closure_checked: false,
        });
    }
    let ctx = s.ctx();
    for x in d.iter() {
        for y in d.iter() {
            if !d.contains(&ctx.add(x, y)?) {
                return Ok(FreimanOutcome::Failure {
                    ratio,
                    closure_checked: true,
                });
            }
        }
    }
    Ok(FreimanOutcome::Subgroup { h: d, ratio })
}

/// The subgroup generated by a subset of a finite group.
pub fn generated_subgroup(gens: &GroupSet) -> Result<GroupSet> {
    let ctx = gens.ctx();
    if !ctx.is_finite() {
        return Err(Error::Domain(format!("{ctx} has no finite subgroups besides 0")));
    }
    let mut h: BTreeSet<Elem> = BTreeSet::from([ctx.zero()]);
    let mut frontier: Vec<Elem> = vec![ctx.zero()];
    while let Some(x) = frontier.pop() {
        for g in gens.iter() {
            let y = ctx.add(&x, g)?;
            if h.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    Ok(GroupSet::from_canonical(ctx.clone(), h))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizeConfig {
    /// Largest distance d(X, Y) for which localization is attempted.
    pub eps0: f64,
    /// Largest 𝔽₂ dimension for subgroup enumeration.
    pub subgroup_cap: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        LocalizeConfig {
            eps0: 0.01,
            subgroup_cap: DEFAULT_SUBGROUP_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizeMethod {
    /// ℤ^D has no finite subgroup other than {0}.
    Trivial,
    /// S − S from the threshold set passed the Freiman closure test.
    Freiman,
    /// Exhaustive search over subspaces of 𝔽₂^D.
    Oracle,
    /// The subgroup generated by S − S.
    Generated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCrossCheck {
    pub subgroup: GroupSet,
    pub d_x: f64,
    pub d_y: f64,
    pub confirms_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Localization {
    pub subgroup: GroupSet,
    pub method: LocalizeMethod,
    pub eps: f64,
    pub c_param: f64,
    /// Representative of the heaviest coset of X; translating X by its
    /// negative puts most mass on the subgroup itself.
    pub offset: Elem,
    pub d_x: f64,
    pub d_y: f64,
    /// 12·d(X, Y).
    pub bound: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCrossCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LocalizeOutcome {
    Found(Localization),
    NotApplicable { eps: f64, eps0: f64 },
}

impl LocalizeOutcome {
    pub fn found(&self) -> Option<&Localization> {
        match self {
            LocalizeOutcome::Found(l) => Some(l),
            LocalizeOutcome::NotApplicable { .. } => None,
        }
    }
}

/// Finds a finite subgroup H with d(X, U_H), d(Y, U_H) ≤ 12·d(X, Y) when
/// d(X, Y) ≤ eps0: extraction at C = max(4, ε^{−1/2}), Freiman closure, then
/// fallbacks when that pipeline does not deliver the bound.
pub fn localize_subgroup(px: &FinDist, py: &FinDist, cfg: &LocalizeConfig) -> Result<LocalizeOutcome> {
    let ctx = px.ctx().clone();
    ctx.check_same(py.ctx())?;
    let eps = d_ent(px, py)?;
    if eps > cfg.eps0 {
        return Ok(LocalizeOutcome::NotApplicable { eps, eps0: cfg.eps0 });
    }
    let bound = 12.0 * eps;
    let c = if eps > 0.0 { eps.powf(-0.5).max(4.0) } else { 4.0 };
    let evaluate = |h: &GroupSet| -> Result<(f64, f64)> {
        Ok((d_ent_subgroup(px, h)?, d_ent_subgroup(py, h)?))
    };
    let oracle_pair = |h: &SubgroupF2| -> Result<OracleCrossCheck> {
        let set = h.to_set();
        let (d_x, d_y) = evaluate(&set)?;
        Ok(OracleCrossCheck {
            subgroup: set,
            d_x,
            d_y,
            confirms_bound: d_x.max(d_y) <= bound + BOUND_TOLERANCE,
        })
    };
    let f2_dim = match &ctx {
        GroupContext::F2Vec { dim } if *dim <= cfg.subgroup_cap => Some(*dim),
        _ => None,
    };
    let oracle = match f2_dim {
        Some(_) => Some(oracle_pair(&brute_pfr_oracle_pair(px, py, cfg.subgroup_cap)?)?),
        None => None,
    };

    let (subgroup, method) = if ctx.is_torsion_free() {
        (GroupSet::singleton(ctx.clone(), ctx.zero())?, LocalizeMethod::Trivial)
    } else {
        let ex = extract_structured_set(px, py, c, None)?;
        let candidate = match freiman_closure_test(&ex.s)? {
            FreimanOutcome::Subgroup { h, .. } => Some(h),
            FreimanOutcome::Failure { .. } => None,
        };
        let good = |h: &GroupSet| -> Result<bool> {
            let (a, b) = evaluate(h)?;
            Ok(a.max(b) <= bound + BOUND_TOLERANCE)
        };
        match candidate {
            Some(h) if good(&h)? => (h, LocalizeMethod::Freiman),
            _ => match &oracle {
                Some(o) => (o.subgroup.clone(), LocalizeMethod::Oracle),
                None => {
                    let d = ex.s.sumset(&ex.s, Sign::Minus)?;
                    (generated_subgroup(&d)?, LocalizeMethod::Generated)
                }
            },
        }
    };

    let (d_x, d_y) = evaluate(&subgroup)?;
    let mut cosets: BTreeMap<Elem, f64> = BTreeMap::new();
    for (x, p) in px.iter() {
        *cosets.entry(subgroup.coset_rep(x)?).or_insert(0.0) += p;
    }
    let offset = cosets
        .iter()
        .fold(None::<(&Elem, f64)>, |best, (x, p)| match best {
            Some((_, q)) if *p <= q => best,
            _ => Some((x, *p)),
        })
        .map(|(x, _)| x.clone())
        .unwrap_or_else(|| ctx.zero());
    Ok(LocalizeOutcome::Found(Localization {
        holds: d_x.max(d_y) <= bound + BOUND_TOLERANCE,
        subgroup,
        method,
        eps,
        c_param: c,
        offset,
        d_x,
        d_y,
        bound,
        oracle,
    }))
}

/// Both sides of the fiber inequality for π and the exact slack identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionAudit {
    /// d(X₁, X₂).
    pub lhs: f64,
    /// d(Y₁, Y₂) + Σ p_{Y₁}(y₁) p_{Y₂}(y₂) d(X₁|Y₁=y₁, X₂|Y₂=y₂).
    pub rhs: f64,
    pub d_images: f64,
    pub fiber_term: f64,
    /// H(X₁ − X₂ | Y₁ − Y₂) − H(X₁ − X₂ | Y₁, Y₂), each computed fiber by fiber.
    pub slack: f64,
    pub inequality_holds: bool,
    pub identity_holds: bool,
}

/// Audits d(X₁, X₂) ≥ d(π X₁, π X₂) + Σ p p d(fibers) for independent X₁, X₂.
pub fn projection_inequality_audit(
    px1: &FinDist,
    px2: &FinDist,
    pi: &Homomorphism,
) -> Result<ProjectionAudit> {
    px1.ctx().check_same(px2.ctx())?;
    let lhs = d_ent(px1, px2)?;
    let y1 = pushforward(px1, pi)?;
    let y2 = pushforward(px2, pi)?;
    let d_images = d_ent(&y1, &y2)?;
    let f1 = fiber_decomposition(px1, pi)?;
    let f2 = fiber_decomposition(px2, pi)?;
    let mut fiber_term = 0.0;
    let mut h_given_pair = 0.0;
    for (_, w1, a) in &f1 {
        for (_, w2, b) in &f2 {
            let diff = convolve(a, b, Sign::Minus)?;
            let h = entropy(&diff);
            h_given_pair += w1 * w2 * h;
            fiber_term += w1 * w2 * (h - 0.5 * entropy(a) - 0.5 * entropy(b));
        }
    }
    let diff = convolve(px1, px2, Sign::Minus)?;
    let h_given_diff = conditional_entropy_given_image(&diff, pi)?;
    let slack = h_given_diff - h_given_pair;
    let rhs = d_images + fiber_term;
    Ok(ProjectionAudit {
        lhs,
        rhs,
        d_images,
        fiber_term,
        slack,
        inequality_holds: lhs >= rhs - BOUND_TOLERANCE,
        identity_holds: ((lhs - rhs) - slack).abs() <= BOUND_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberPigeonholeWitness {
    pub x: Elem,
    pub y: Elem,
    pub alpha_x: f64,
    pub beta_y: f64,
    /// d(U_A, U_B).
    pub k: f64,
    /// d(φ(U_A), φ(U_B)).
    pub k_bar: f64,
    /// H(φ(U_A)) + H(φ(U_B)).
    pub m: f64,
    /// d(U_{A_x}, U_{B_y}).
    pub k_prime: f64,
    pub a_fiber: GroupSet,
    pub b_fiber: GroupSet,
}

impl FiberPigeonholeWitness {
    /// log(1/α_x) + log(1/β_y), the size lost by passing to the fibers.
    pub fn log_loss(&self) -> f64 {
        -(self.alpha_x * self.beta_y).ln()
    }

    pub fn check(&self) -> BoundCheck {
        BoundCheck::new(
            "k_bar log(1/(alpha beta)) <= M (k - k')",
            self.k_bar * self.log_loss(),
            self.m * (self.k - self.k_prime),
        )
    }
}

/// Fibers A_x, B_y with k̄ log(1/(α_x β_y)) ≤ M(k − d(U_{A_x}, U_{B_y})),
/// taking the lexicographically smallest (x, y) that satisfies it.
pub fn fiber_pigeonhole(a: &GroupSet, b: &GroupSet, phi: &Homomorphism) -> Result<FiberPigeonholeWitness> {
    a.ctx().check_same(b.ctx())?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("set"));
    }
    let ua = FinDist::uniform(a)?;
    let ub = FinDist::uniform(b)?;
    let k = d_ent(&ua, &ub)?;
    let pa = pushforward(&ua, phi)?;
    let pb = pushforward(&ub, phi)?;
    let k_bar = d_ent(&pa, &pb)?;
    let m = entropy(&pa) + entropy(&pb);
    if m <= 0.0 {
        return Err(Error::Degenerate(
            "both images are single points, so M = 0".into(),
        ));
    }
    let fa = a.fibers(phi)?;
    let fb = b.fibers(phi)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut best: Option<(f64, FiberPigeonholeWitness)> = None;
    for (x, ax) in &fa {
        let dax = FinDist::uniform(ax)?;
        for (y, by) in &fb {
            let k_prime = d_ent(&dax, &FinDist::uniform(by)?)?;
            let w = FiberPigeonholeWitness {
                x: x.clone(),
                y: y.clone(),
                alpha_x: ax.len() as f64 / na,
                beta_y: by.len() as f64 / nb,
                k,
                k_bar,
                m,
                k_prime,
                a_fiber: ax.clone(),
                b_fiber: by.clone(),
            };
            let excess = k_bar * w.log_loss() - m * (k - k_prime);
            if excess <= BOUND_TOLERANCE {
                return Ok(w);
            }
            if best.as_ref().map_or(true, |(e, _)| excess < *e) {
                best = Some((excess, w));
            }
        }
    }
    // The averaging argument guarantees a satisfier; reaching this point
    // means rounding beyond tolerance.
    let (excess, _) = best.expect("fibers are non-empty");
    Err(Error::Degenerate(format!(
        "no fiber pair satisfies the pigeonhole inequality (best excess {excess:e})"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingLemmaCheck {
    /// d(X, 2Y).
    pub d_x2y: f64,
    /// d(X, Y).
    pub d_xy: f64,
    /// 5·d(X, Y).
    pub bound: f64,
    pub holds: bool,
}

/// d(X, 2Y) ≤ 5 d(X, Y) in a torsion-free group.
pub fn torsion_free_doubling_bound(px: &FinDist, py: &FinDist) -> Result<DoublingLemmaCheck> {
    if !px.ctx().is_torsion_free() {
        return Err(Error::Domain(format!("{} has torsion", px.ctx())));
    }
    let d_xy = d_ent(px, py)?;
    let d_x2y = d_ent(px, &pushforward(py, &Homomorphism::Double)?)?;
    Ok(DoublingLemmaCheck {
        d_x2y,
        d_xy,
        bound: 5.0 * d_xy,
        holds: d_x2y <= 5.0 * d_xy + BOUND_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mod2EntropyCheck {
    pub h_phi_x: f64,
    pub h_phi_y: f64,
    /// 10·d(X, Y).
    pub bound: f64,
    pub holds: bool,
}

/// H(φ(X)), H(φ(Y)) ≤ 10 d(X, Y) for φ the reduction ℤ^D → 𝔽₂^D.
pub fn mod2_entropy_bound(px: &FinDist, py: &FinDist) -> Result<Mod2EntropyCheck> {
    if !px.ctx().is_torsion_free() {
        return Err(Error::Domain(format!("{} is not a lattice", px.ctx())));
    }
    let d = d_ent(px, py)?;
    let h_phi_x = entropy(&pushforward(px, &Homomorphism::Mod2)?);
    let h_phi_y = entropy(&pushforward(py, &Homomorphism::Mod2)?);
    Ok(Mod2EntropyCheck {
        h_phi_x,
        h_phi_y,
        bound: 10.0 * d,
        holds: h_phi_x.max(h_phi_y) <= 10.0 * d + BOUND_TOLERANCE,
    })
}

fn f2_dim(p: &FinDist) -> Result<usize> {
    match p.ctx() {
        GroupContext::F2Vec { dim } => Ok(*dim),
        other => Err(Error::Domain(format!("expected F2^D, got {other}"))),
    }
}

/// Bit-packed law of X reduced modulo a subspace.
fn coset_entropy(law: &[(u64, f64)], h: &SubgroupF2) -> f64 {
    let mut m: BTreeMap<u64, f64> = BTreeMap::new();
    for (v, p) in law {
        *m.entry(h.reduce(*v)).or_insert(0.0) += p;
    }
    shannon(m.into_values())
}

fn packed(p: &FinDist) -> Vec<(u64, f64)> {
    p.iter().map(|(x, w)| (bits_of(x), w)).collect()
}

/// d(X, U_H) minimized over every subspace H of 𝔽₂^D. Ties go to the
/// smaller subspace, then to the lexicographically smaller basis.
pub fn brute_pfr_oracle(px: &FinDist, cap: usize) -> Result<SubgroupF2> {
    let dim = f2_dim(px)?;
    let law = packed(px);
    let hx = entropy(px);
    let mut best: Option<(f64, SubgroupF2)> = None;
    for h in enumerate_subgroups(dim, cap)? {
        let d = coset_entropy(&law, &h) + 0.5 * (h.rank() as f64 * std::f64::consts::LN_2 - hx);
        if best.as_ref().map_or(true, |(b, _)| d < b - 1e-12) {
            best = Some((d, h));
        }
    }
    Ok(best.expect("the trivial subspace is always enumerated").1)
}

/// The subspace minimizing max(d(X, U_H), d(Y, U_H)), same tie-breaking.
pub fn brute_pfr_oracle_pair(px: &FinDist, py: &FinDist, cap: usize) -> Result<SubgroupF2> {
    px.ctx().check_same(py.ctx())?;
    let dim = f2_dim(px)?;
    let base = SubgroupF2::trivial(dim);
    Ok(oracle_over_supergroups(px, py, &base, cap)?.0)
}

/// Among subspaces K ⊇ `base`, the one minimizing
/// max(d(ψX, U_{K/base}), d(ψY, U_{K/base})) where ψ is reduction modulo
/// `base`. Returns K and the minimized value.
pub fn oracle_over_supergroups(
    px: &FinDist,
    py: &FinDist,
    base: &SubgroupF2,
    cap: usize,
) -> Result<(SubgroupF2, f64)> {
    supergroup_search(px, py, base, cap, false)?
        .ok_or_else(|| Error::Degenerate("no supergroup enumerated".into()))
}

/// As [`oracle_over_supergroups`], optionally skipping `base` itself; `None`
/// when `base` is the whole space and `strict` is set.
pub(crate) fn supergroup_search(
    px: &FinDist,
    py: &FinDist,
    base: &SubgroupF2,
    cap: usize,
    strict: bool,
) -> Result<Option<(SubgroupF2, f64)>> {
    let lx = packed(px);
    let ly = packed(py);
    let hx = coset_entropy(&lx, base);
    let hy = coset_entropy(&ly, base);
    let mut best: Option<(f64, SubgroupF2)> = None;
    for k in enumerate_supergroups(base, cap)? {
        if strict && k == *base {
            continue;
        }
        let log_index = (k.rank() - base.rank()) as f64 * std::f64::consts::LN_2;
        let dx = coset_entropy(&lx, &k) + 0.5 * (log_index - hx);
        let dy = coset_entropy(&ly, &k) + 0.5 * (log_index - hy);
        let d = dx.max(dy);
        if best.as_ref().map_or(true, |(b, _)| d < b - 1e-12) {
            best = Some((d, k));
        }
    }
    Ok(best.map(|(d, k)| (k, d)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuzsaCover {
    /// t with A ⊆ ⋃ (t + H).
    pub translates: Vec<Elem>,
    /// |A ∩ (H + x₀)|.
    pub u_size: usize,
    /// |A + U| / |U|.
    pub bound: f64,
    pub covered: bool,
    pub holds: bool,
}

/// Covers A by translates of the subgroup H: a maximal T ⊆ A with the sets
/// t + U pairwise disjoint, U = A ∩ (H + x₀), so that A ⊆ T + (U − U) ⊆ T + H
/// and |T| ≤ |A + U| / |U|.
pub fn ruzsa_cover(a: &GroupSet, h: &GroupSet, x0: &Elem) -> Result<RuzsaCover> {
    a.ctx().check_same(h.ctx())?;
    if !h.is_subgroup() {
        return Err(Error::Domain("covering set is not a subgroup".into()));
    }
    let coset = h.translate(x0)?;
    let u = a.intersection(&coset)?;
    if u.is_empty() {
        return Err(Error::Empty("A ∩ (H + x0)"));
    }
    let ctx = a.ctx();
    let mut used: BTreeSet<Elem> = BTreeSet::new();
    let mut translates = Vec::new();
    for t in a.iter() {
        let shifted = u.translate(t)?;
        if shifted.iter().all(|s| !used.contains(s)) {
            used.extend(shifted.iter().cloned());
            translates.push(t.clone());
        }
    }
    let mut covered = true;
    for x in a.iter() {
        let mut hit = false;
        for t in &translates {
            if h.contains(&ctx.sub(x, t)?) {
                hit = true;
                break;
            }
        }
        covered &= hit;
    }
    let bound = a.sumset(&u, Sign::Plus)?.len() as f64 / u.len() as f64;
    Ok(RuzsaCover {
        holds: translates.len() as f64 <= bound + BOUND_TOLERANCE,
        translates,
        u_size: u.len(),
        bound,
        covered,
    })
}

/// From small doubling to a covering subspace: σ[A] = K, H from the oracle
/// applied to U_A, x₀ the densest coset, and the Ruzsa cover of A by H.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinatorialPfr {
    pub doubling: f64,
    pub subgroup: GroupSet,
    pub d_to_subgroup: f64,
    pub x0: Elem,
    pub cover: RuzsaCover,
}

pub fn pfr_cover_from_entropy(a: &GroupSet, cap: usize) -> Result<CombinatorialPfr> {
    let ua = FinDist::uniform(a)?;
    let h = brute_pfr_oracle(&ua, cap)?;
    let hs = h.to_set();
    let mut counts: BTreeMap<Elem, usize> = BTreeMap::new();
    for x in a.iter() {
        *counts.entry(hs.coset_rep(x)?).or_insert(0) += 1;
    }
    let x0 = counts
        .iter()
        .fold(None::<(&Elem, usize)>, |best, (x, c)| match best {
            Some((_, b)) if *c <= b => best,
            _ => Some((x, *c)),
        })
        .map(|(x, _)| x.clone())
        .expect("A is non-empty");
    Ok(CombinatorialPfr {
        doubling: a.doubling()?,
        d_to_subgroup: d_ent_subgroup(&ua, &hs)?,
        cover: ruzsa_cover(a, &hs, &x0)?,
        subgroup: hs,
        x0,
    })
}

/// From a covering statement to an entropic one: S from extraction at
/// C = 4, then the subspace H with |H| ≤ |S| covering S by the fewest
/// cosets, and the distances d(X, U_H), d(Y, U_H) compared with k.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropicPfr {
    pub k: f64,
    pub s: GroupSet,
    pub subgroup: GroupSet,
    pub cosets_covering_s: usize,
    pub d_x: f64,
    pub d_y: f64,
}

pub fn pfr_entropic_from_cover(px: &FinDist, py: &FinDist, cap: usize) -> Result<EntropicPfr> {
    let dim = f2_dim(px)?;
    let ex = extract_structured_set(px, py, 4.0, None)?;
    let s_bits: Vec<u64> = ex.s.iter().map(bits_of).collect();
    let mut best: Option<(usize, SubgroupF2)> = None;
    for h in enumerate_subgroups(dim, cap)? {
        if h.order() as usize > ex.s.len() {
            continue;
        }
        let n: BTreeSet<u64> = s_bits.iter().map(|v| h.reduce(*v)).collect();
        if best.as_ref().map_or(true, |(b, _)| n.len() < *b) {
            best = Some((n.len(), h));
        }
    }
    let (cosets_covering_s, h) = best.expect("the trivial subspace always qualifies");
    let hs = h.to_set();
    Ok(EntropicPfr {
        k: ex.k,
        d_x: d_ent_subgroup(px, &hs)?,
        d_y: d_ent_subgroup(py, &hs)?,
        s: ex.s,
        subgroup: hs,
        cosets_covering_s,
    })
}
