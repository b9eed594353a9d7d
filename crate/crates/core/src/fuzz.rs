//! Seeded property fuzzing of the inequalities implemented in this crate.
//!
//! Each trial draws its instance from [`trial_rng`], trials run in parallel
//! and are reduced in index order, so a report depends only on the seed and
//! the configuration, never on the thread count.

use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coupling::{solve_three_marginal, CouplingOutcome, CouplingProblem, DEFAULT_LP_CAP};
use crate::dist::{convolve, entropy, kl_divergence, l1_distance, renyi_entropy, tv_l1, FinDist};
use crate::dstar::{d_star, DStarConfig};
use crate::error::{Error, Result};
use crate::gen::{concentrated_dist, perturbed_uniform, random_dist, random_elem, random_set, trial_rng, LATTICE_RADIUS};
use crate::group::{enumerate_subgroups, GroupContext, GroupSet, Homomorphism, Sign};
use crate::metrics::{d_ent, energy, sandwich_check, BoundCheck};
use crate::structure::{
    extract_structured_set, fiber_pigeonhole, generated_subgroup, mod2_entropy_bound, projection_inequality_audit,
    torsion_free_doubling_bound,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// |A|³/E[A] ≤ σ_ent[A] ≤ σ[A].
    Sandwich,
    /// Symmetry and the triangle inequality for d_ent.
    Triangle,
    /// d ≤ d* ≤ 3d.
    DStar,
    /// The fiber inequality under a homomorphism and its exact slack.
    Projection,
    /// H(X) ≤ 2d(X, X) for X concentrated on one point of ℤ/7.
    Concentration,
    /// log|H| − H(X) ≤ 2d(X, X) for X nearly uniform on H.
    NearUniform,
    /// Feasibility of the three-marginal coupling when Σ‖pᵢ − u_H‖₁ ≤ 1.
    Coupling,
    /// Soundness of infeasibility certificates.
    CouplingCertificate,
    /// d(X, 2Y) ≤ 5d(X, Y) in ℤ^D.
    Doubling,
    /// H(φX), H(φY) ≤ 10d(X, Y) for the reduction mod 2.
    Mod2Entropy,
    /// The fiber pigeonhole inequality.
    Pigeonhole,
    /// Bounds on the threshold set S.
    Extraction,
    /// Rényi identities for X₁ + X₂ and monotonicity in α.
    Renyi,
    /// max p ≥ e^{−H}, H(X − Y) ≥ max(H(X), H(Y)), Pinsker.
    EntropyFacts,
}

impl Suite {
    pub const ALL: [Suite; 14] = [
        Suite::Sandwich,
        Suite::Triangle,
        Suite::DStar,
        Suite::Projection,
        Suite::Concentration,
        Suite::NearUniform,
        Suite::Coupling,
        Suite::CouplingCertificate,
        Suite::Doubling,
        Suite::Mod2Entropy,
        Suite::Pigeonhole,
        Suite::Extraction,
        Suite::Renyi,
        Suite::EntropyFacts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::Triangle => "triangle",
            Suite::DStar => "d_star",
            Suite::Projection => "projection",
            Suite::Concentration => "concentration",
            Suite::NearUniform => "near_uniform",
            Suite::Coupling => "coupling",
            Suite::CouplingCertificate => "coupling_certificate",
            Suite::Doubling => "doubling",
            Suite::Mod2Entropy => "mod2_entropy",
            Suite::Pigeonhole => "pigeonhole",
            Suite::Extraction => "extraction",
            Suite::Renyi => "renyi",
            Suite::EntropyFacts => "entropy_facts",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: usize,
    /// Groups for the suites that are not tied to a specific group.
    pub groups: Vec<GroupContext>,
    /// Inclusive range of support sizes.
    pub min_support: usize,
    pub max_support: usize,
    pub suites: Vec<Suite>,
    pub tolerance: f64,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 1,
            trials: 100,
            groups: vec![
                GroupContext::z(2),
                GroupContext::f2(3),
                GroupContext::ZModProduct { moduli: vec![12] },
            ],
            min_support: 1,
            max_support: 12,
            suites: Suite::ALL.to_vec(),
            tolerance: crate::metrics::BOUND_TOLERANCE,
            threads: None,
        }
    }
}

impl FuzzConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::Parameter("the group menu is empty".into()));
        }
        if self.min_support == 0 || self.min_support > self.max_support {
            return Err(Error::Parameter(format!(
                "bad support range {}..={}",
                self.min_support, self.max_support
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Parameter(format!("tolerance {} is negative", self.tolerance)));
        }
        Ok(())
    }
}

/// The instance on which one check was evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub check: BoundCheck,
    pub instance: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    /// Trials without a defined instance (e.g. a pigeonhole with M = 0).
    pub skipped: usize,
    pub checks: usize,
    pub failures: usize,
    /// Trials where a library call returned an error.
    pub errors: usize,
    /// Largest lhs/rhs over all checks.
    pub max_utilization: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tightest: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    pub suites: Vec<SuiteReport>,
}

impl FuzzReport {
    pub fn failures(&self) -> usize {
        self.suites.iter().map(|s| s.failures + s.errors).sum()
    }

    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }
}

enum Trial {
    Done { checks: Vec<BoundCheck>, instance: Value },
    Skipped,
}

fn bound(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> BoundCheck {
    BoundCheck::with_tolerance(name, lhs, rhs, tol)
}

/// Re-evaluates a check produced by the library at the run's tolerance.
fn at_tolerance(mut c: BoundCheck, tol: f64) -> BoundCheck {
    c.holds = c.lhs <= c.rhs + tol;
    c
}

/// |lhs − rhs| ≤ tol, recorded as a bound on the difference.
fn identity(name: &str, lhs: f64, rhs: f64, tol: f64) -> BoundCheck {
    BoundCheck::with_tolerance(name, (lhs - rhs).abs(), tol, 0.0)
}

fn utilization(c: &BoundCheck) -> f64 {
    let u = c.utilization();
    if u.is_nan() {
        0.0
    } else {
        u
    }
}

pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    cfg.validate()?;
    let work = || -> Vec<SuiteReport> { cfg.suites.iter().map(|&s| run_suite(cfg, s)).collect() };
    let suites = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(FuzzReport {
        seed: cfg.seed,
        trials: cfg.trials,
        tolerance: cfg.tolerance,
        suites,
    })
}

fn run_suite(cfg: &FuzzConfig, suite: Suite) -> SuiteReport {
    let outcomes: Vec<Result<Trial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, suite.name(), i as u64);
            trial(cfg, suite, &mut rng)
        })
        .collect();
    let mut rep = SuiteReport {
        suite,
        trials: cfg.trials,
        skipped: 0,
        checks: 0,
        failures: 0,
        errors: 0,
        max_utilization: 0.0,
        tightest: None,
        first_failure: None,
        first_error: None,
    };
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Err(e) => {
                rep.errors += 1;
                rep.first_error.get_or_insert_with(|| format!("trial {i}: {e}"));
            }
            Ok(Trial::Skipped) => rep.skipped += 1,
            Ok(Trial::Done { checks, instance }) => {
                for c in checks {
                    rep.checks += 1;
                    let u = utilization(&c);
                    let witness = || Witness {
                        trial: i,
                        check: c.clone(),
                        instance: instance.clone(),
                    };
                    if !c.holds {
                        rep.failures += 1;
                        if rep.first_failure.is_none() {
                            rep.first_failure = Some(witness());
                        }
                    }
                    if rep.tightest.is_none() || u > rep.max_utilization {
                        rep.max_utilization = rep.max_utilization.max(u);
                        rep.tightest = Some(witness());
                    }
                }
            }
        }
    }
    rep
}

fn support_size(cfg: &FuzzConfig, rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(cfg.min_support..=cfg.max_support)
}

fn set_in(cfg: &FuzzConfig, rng: &mut ChaCha8Rng, ctx: &GroupContext) -> Result<GroupSet> {
    let n = support_size(cfg, rng);
    random_set(rng, ctx, n, LATTICE_RADIUS)
}

fn dist_in(cfg: &FuzzConfig, rng: &mut ChaCha8Rng, ctx: &GroupContext) -> Result<FinDist> {
    let n = support_size(cfg, rng);
    random_dist(rng, ctx, n, LATTICE_RADIUS)
}

fn dist_sized(rng: &mut ChaCha8Rng, ctx: &GroupContext, sizes: std::ops::RangeInclusive<usize>) -> Result<FinDist> {
    let n = rng.random_range(sizes);
    random_dist(rng, ctx, n, LATTICE_RADIUS)
}

fn pick_group<'a>(cfg: &'a FuzzConfig, rng: &mut ChaCha8Rng) -> &'a GroupContext {
    cfg.groups.choose(rng).expect("menu is non-empty")
}

/// Lattices from the menu, or ℤ² when it has none.
fn pick_lattice(cfg: &FuzzConfig, rng: &mut ChaCha8Rng) -> GroupContext {
    let lattices: Vec<&GroupContext> = cfg.groups.iter().filter(|g| g.is_torsion_free()).collect();
    lattices.choose(rng).map_or(GroupContext::z(2), |g| (*g).clone())
}

fn random_hom(rng: &mut ChaCha8Rng, ctx: &GroupContext) -> Result<Homomorphism> {
    let coord = Homomorphism::CoordProject(rng.random_range(0..ctx.dim().max(1)));
    Ok(match ctx {
        GroupContext::ZLattice { .. } if rng.random_bool(0.5) => Homomorphism::Mod2,
        GroupContext::F2Vec { dim } if rng.random_bool(0.5) => {
            let subs = enumerate_subgroups(*dim, crate::group::DEFAULT_SUBGROUP_CAP)?;
            Homomorphism::QuotientBy(subs.choose(rng).expect("at least the trivial subgroup").clone())
        }
        GroupContext::ZModProduct { .. } if rng.random_bool(0.5) => Homomorphism::Double,
        _ => coord,
    })
}

fn trial(cfg: &FuzzConfig, suite: Suite, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let tol = cfg.tolerance;
    let r = LATTICE_RADIUS;
    let done = |checks, instance| Ok(Trial::Done { checks, instance });
    match suite {
        Suite::Sandwich => {
            let ctx = pick_group(cfg, rng).clone();
            let a = set_in(cfg, rng, &ctx)?;
            let rep = sandwich_check(&a)?;
            done(rep.bounds_checked.into_iter().map(|c| at_tolerance(c, tol)).collect(), json!({ "a": a }))
        }
        Suite::Triangle => {
            let ctx = pick_group(cfg, rng).clone();
            let [x, y, z] = [(); 3].map(|_| dist_in(cfg, rng, &ctx));
            let (x, y, z) = (x?, y?, z?);
            let (dxy, dyz, dxz) = (d_ent(&x, &y)?, d_ent(&y, &z)?, d_ent(&x, &z)?);
            let checks = vec![
                bound("d(X,Z) <= d(X,Y) + d(Y,Z)", dxz, dxy + dyz, tol),
                identity("d(X,Y) = d(Y,X)", dxy, d_ent(&y, &x)?, tol),
                bound("|H(X)-H(Y)|/2 <= d(X,Y)", 0.5 * (entropy(&x) - entropy(&y)).abs(), dxy, tol),
            ];
            done(checks, json!({ "x": x, "y": y, "z": z }))
        }
        Suite::DStar => {
            let ctx = pick_group(cfg, rng).clone();
            let sizes = cfg.min_support.min(4)..=cfg.max_support.min(4);
            let x = dist_sized(rng, &ctx, sizes.clone())?;
            let y = dist_sized(rng, &ctx, sizes)?;
            let d = d_ent(&x, &y)?;
            let s = d_star(&x, &y, &DStarConfig::default())?;
            let checks = vec![
                bound("d <= d*", d, s.upper_bound, tol),
                bound("d* <= 3d", s.value, 3.0 * d, tol),
            ];
            done(checks, json!({ "x": x, "y": y, "d_star": s.value, "gap": s.gap }))
        }
        Suite::Projection => {
            let ctx = pick_group(cfg, rng).clone();
            let x1 = dist_in(cfg, rng, &ctx)?;
            let x2 = dist_in(cfg, rng, &ctx)?;
            let pi = random_hom(rng, &ctx)?;
            let a = projection_inequality_audit(&x1, &x2, &pi)?;
            let checks = vec![
                bound("rhs <= d(X1,X2)", a.rhs, a.lhs, tol),
                identity("d(X1,X2) - rhs = slack", a.lhs - a.rhs, a.slack, tol),
            ];
            done(checks, json!({ "x1": x1, "x2": x2, "pi": format!("{pi:?}") }))
        }
        Suite::Concentration => {
            let ctx = GroupContext::zmod(&[7])?;
            let size = rng.random_range(1..=7);
            let x = concentrated_dist(rng, &ctx, size, 1.0 / 20.0)?;
            let checks = vec![bound("H(X) <= 2 d(X,X)", entropy(&x), 2.0 * d_ent(&x, &x)?, tol)];
            done(checks, json!({ "x": x }))
        }
        Suite::NearUniform => {
            let h = if rng.random_bool(0.5) {
                let subs = enumerate_subgroups(3, 3)?;
                let sub = subs.choose(rng).expect("non-empty").clone();
                GroupSet::new(GroupContext::f2(3), sub.to_set().iter().map(|e| e.coords().to_vec()))?
            } else {
                let ctx = GroupContext::zmod(&[12])?;
                let g = random_elem(rng, &ctx, r)?;
                generated_subgroup(&GroupSet::singleton(ctx, g)?)?
            };
            let log_h = (h.len() as f64).ln();
            let mut t: f64 = rng.random();
            let x = loop {
                let x = perturbed_uniform(rng, &h, t)?;
                if entropy(&x) >= log_h - 0.125 {
                    break x;
                }
                t /= 2.0;
            };
            let checks = vec![
                bound("log|H| - H(X) <= 2 d(X,X)", log_h - entropy(&x), 2.0 * d_ent(&x, &x)?, tol),
                bound("hypothesis H(X) >= log|H| - 1/8", log_h - 0.125, entropy(&x), tol),
            ];
            done(checks, json!({ "h": h, "x": x }))
        }
        Suite::Coupling => {
            let ctx = if rng.random_bool(0.5) {
                GroupContext::f2(2)
            } else {
                GroupContext::zmod(&[5])?
            };
            let h = GroupSet::whole(&ctx)?;
            // Budgets w₁ + w₂ + w₃ = s ≤ 1 split the ℓ¹ allowance.
            let s: f64 = rng.random();
            let cuts = {
                let mut c = [rng.random::<f64>(), rng.random::<f64>()];
                c.sort_by(f64::total_cmp);
                c
            };
            let w = [cuts[0], cuts[1] - cuts[0], 1.0 - cuts[1]].map(|v| v * s);
            let p1 = perturbed_uniform(rng, &h, w[0] / 2.0)?;
            let p2 = perturbed_uniform(rng, &h, w[1] / 2.0)?;
            let p3 = perturbed_uniform(rng, &h, w[2] / 2.0)?;
            let prob = CouplingProblem::new(p1, p2, p3)?;
            let tv = prob.tv_to_uniform(&h)?;
            let mut checks = vec![bound("hypothesis sum of l1 distances <= 1", tv, 1.0, tol)];
            match solve_three_marginal(&prob, DEFAULT_LP_CAP)? {
                CouplingOutcome::Feasible { coupling } => {
                    let err = [
                        l1_distance(&coupling.marginal_x(), &prob.p1),
                        l1_distance(&coupling.marginal_y(), &prob.p2),
                        l1_distance(&coupling.difference_law()?, &prob.p3),
                    ];
                    checks.push(BoundCheck::with_tolerance("feasible", 0.0, 0.0, 0.0));
                    for (name, e) in ["marginal 1 error", "marginal 2 error", "difference law error"].into_iter().zip(err) {
                        checks.push(BoundCheck::with_tolerance(name, e, 1e-9, 0.0));
                    }
                }
                CouplingOutcome::Infeasible { .. } => {
                    checks.push(BoundCheck::with_tolerance("feasible", 1.0, 0.0, 0.0));
                }
            }
            done(checks, json!({ "p1": prob.p1, "p2": prob.p2, "p3": prob.p3 }))
        }
        Suite::CouplingCertificate => {
            let ctx = if rng.random_bool(0.5) {
                GroupContext::f2(2)
            } else {
                GroupContext::zmod(&[5])?
            };
            let n = ctx.order().expect("finite") as usize;
            let (p1, p2, p3) = if rng.random_bool(0.5) {
                // Point masses force X − Y = a − b; p₃ avoids it.
                let a = random_elem(rng, &ctx, r)?;
                let b = random_elem(rng, &ctx, r)?;
                let z = ctx.sub(&a, &b)?;
                let others: Vec<_> = ctx.elements()?.into_iter().filter(|e| *e != z).collect();
                let k = rng.random_range(1..=others.len());
                let support = GroupSet::new(ctx.clone(), others[..k].iter().map(|e| e.coords().to_vec()))?;
                (
                    FinDist::point(ctx.clone(), a)?,
                    FinDist::point(ctx.clone(), b)?,
                    crate::gen::random_law_on(rng, &support)?,
                )
            } else {
                let sizes = 1..=n;
                (
                    dist_sized(rng, &ctx, sizes.clone())?,
                    dist_sized(rng, &ctx, sizes.clone())?,
                    dist_sized(rng, &ctx, sizes)?,
                )
            };
            let prob = CouplingProblem::new(p1, p2, p3)?;
            let mut checks = Vec::new();
            match solve_three_marginal(&prob, DEFAULT_LP_CAP)? {
                CouplingOutcome::Feasible { coupling } => {
                    let err = l1_distance(&coupling.marginal_x(), &prob.p1)
                        + l1_distance(&coupling.marginal_y(), &prob.p2)
                        + l1_distance(&coupling.difference_law()?, &prob.p3);
                    checks.push(BoundCheck::with_tolerance("marginal errors", err, 1e-9, 0.0));
                }
                CouplingOutcome::Infeasible { certificate } => {
                    let all = ctx.elements()?;
                    let lo = certificate.min_pointwise(&ctx, &all, &all)?;
                    let pairing = certificate.pairing_with(&prob);
                    checks.push(bound("-(f1(x)+f2(y)+f3(x-y)) <= 0", -lo, 0.0, tol));
                    checks.push(BoundCheck::with_tolerance("pairing < 0", pairing, -tol, 0.0));
                    checks.push(identity("reported pairing", certificate.pairing, pairing, tol));
                }
            }
            done(checks, json!({ "p1": prob.p1, "p2": prob.p2, "p3": prob.p3 }))
        }
        Suite::Doubling => {
            let ctx = pick_lattice(cfg, rng);
            let x = dist_in(cfg, rng, &ctx)?;
            let y = dist_in(cfg, rng, &ctx)?;
            let c = torsion_free_doubling_bound(&x, &y)?;
            done(vec![bound("d(X,2Y) <= 5 d(X,Y)", c.d_x2y, c.bound, tol)], json!({ "x": x, "y": y }))
        }
        Suite::Mod2Entropy => {
            let ctx = pick_lattice(cfg, rng);
            let x = dist_in(cfg, rng, &ctx)?;
            let y = dist_in(cfg, rng, &ctx)?;
            let c = mod2_entropy_bound(&x, &y)?;
            let checks = vec![
                bound("H(phi X) <= 10 d(X,Y)", c.h_phi_x, c.bound, tol),
                bound("H(phi Y) <= 10 d(X,Y)", c.h_phi_y, c.bound, tol),
            ];
            done(checks, json!({ "x": x, "y": y }))
        }
        Suite::Pigeonhole => {
            let ctx = pick_lattice(cfg, rng);
            let a = set_in(cfg, rng, &ctx)?;
            let b = set_in(cfg, rng, &ctx)?;
            let phi = if rng.random_bool(0.5) {
                Homomorphism::Mod2
            } else {
                Homomorphism::CoordProject(rng.random_range(0..ctx.dim()))
            };
            match fiber_pigeonhole(&a, &b, &phi) {
                Ok(w) => done(vec![at_tolerance(w.check(), tol)], json!({ "a": a, "b": b, "phi": format!("{phi:?}") })),
                Err(Error::Degenerate(_)) => Ok(Trial::Skipped),
                Err(e) => Err(e),
            }
        }
        Suite::Extraction => {
            let ctx = pick_group(cfg, rng).clone();
            let x = dist_in(cfg, rng, &ctx)?;
            let y = dist_in(cfg, rng, &ctx)?;
            let k = d_ent(&x, &y)?;
            let c = match rng.random_range(0..3) {
                0 => 4.0,
                1 => 8.0,
                _ => if k > 0.0 { k.powf(-0.5) } else { 4.0 }.max(4.0),
            };
            let e = extract_structured_set(&x, &y, c, None)?;
            done(e.checks.into_iter().map(|c| at_tolerance(c, tol)).collect(), json!({ "x": x, "y": y, "c": c }))
        }
        Suite::Renyi => {
            let ctx = pick_group(cfg, rng).clone();
            let a = set_in(cfg, rng, &ctx)?;
            let u = FinDist::uniform(&a)?;
            let sum = convolve(&u, &u, Sign::Plus)?;
            let n = a.len() as f64;
            let apa = a.sumset(&a, Sign::Plus)?.len() as f64;
            let e = energy(&a)? as f64;
            let mut checks = vec![
                identity("exp(H0(X1+X2)) = |A+A|", renyi_entropy(&sum, 0.0)?.exp() / apa, 1.0, tol),
                identity("exp(H2(X1+X2)) = |A|^4/E[A]", renyi_entropy(&sum, 2.0)?.exp() / (n.powi(4) / e), 1.0, tol),
            ];
            let x = dist_in(cfg, rng, &ctx)?;
            let alphas = [0.0, 0.5, 1.0, 2.0, 3.0];
            let hs = alphas.iter().map(|&al| renyi_entropy(&x, al)).collect::<Result<Vec<_>>>()?;
            for (w, al) in hs.windows(2).zip(alphas.windows(2)) {
                checks.push(bound(format!("H_{} <= H_{}", al[1], al[0]), w[1], w[0], tol));
            }
            checks.push(identity("H_1 = H", hs[2], entropy(&x), tol));
            done(checks, json!({ "a": a, "x": x }))
        }
        Suite::EntropyFacts => {
            let ctx = pick_group(cfg, rng).clone();
            let x = dist_in(cfg, rng, &ctx)?;
            let y = dist_in(cfg, rng, &ctx)?;
            let (hx, hy) = (entropy(&x), entropy(&y));
            let hd = entropy(&convolve(&x, &y, Sign::Minus)?);
            let mut checks = vec![
                bound("exp(-H(X)) <= max p", (-hx).exp(), x.max_mass(), tol),
                bound("max(H(X),H(Y)) <= H(X-Y)", hx.max(hy), hd, tol),
            ];
            if ctx.order().is_some_and(|n| n <= 4096) && ctx.is_finite() {
                let g = GroupSet::whole(&ctx)?;
                let ug = FinDist::uniform(&g)?;
                let kl = kl_divergence(&x, &ug)?;
                checks.push(bound("||p - u||_1 <= sqrt(2 KL)", tv_l1(&x, &g)?, (2.0 * kl).sqrt(), tol));
                checks.push(identity("KL(p||u) = log|G| - H(p)", kl, (g.len() as f64).ln() - hx, tol));
            }
            done(checks, json!({ "x": x, "y": y }))
        }
    }
}
