//! Couplings with prescribed marginals and prescribed difference law, and
//! the explicit coupling whose difference is uniform on S − S.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::dist::{tv_l1, FinDist, JointDist};
use crate::error::{Error, Result};
use crate::group::{Elem, GroupContext, GroupSet, Sign};
use crate::lp::{self, Feasibility, Phase1, Scalar};

/// Largest number of LP variables (|supp p1| · |supp p2|) accepted.
pub const DEFAULT_LP_CAP: usize = 4096;

/// Target laws for (X, Y, X − Y).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingProblem {
    pub p1: FinDist,
    pub p2: FinDist,
    pub p3: FinDist,
}

impl CouplingProblem {
    pub fn new(p1: FinDist, p2: FinDist, p3: FinDist) -> Result<Self> {
        p1.ctx().check_same(p2.ctx())?;
        p1.ctx().check_same(p3.ctx())?;
        Ok(CouplingProblem { p1, p2, p3 })
    }

    pub fn ctx(&self) -> &GroupContext {
        self.p1.ctx()
    }

    /// Σᵢ ‖pᵢ − u_H‖₁ for a reference subgroup H.
    pub fn tv_to_uniform(&self, h: &GroupSet) -> Result<f64> {
        Ok(tv_l1(&self.p1, h)? + tv_l1(&self.p2, h)? + tv_l1(&self.p3, h)?)
    }
}

/// A separating functional (f₁, f₂, f₃) with f₁(x) + f₂(y) + f₃(x − y) ≥ 0
/// for all x, y and Σp₁f₁ + Σp₂f₂ + Σp₃f₃ < 0. Elements not listed take
/// the `*_default` value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(serialize_with = "crate::dist::serialize_rows")]
    pub f1: BTreeMap<Elem, f64>,
    #[serde(serialize_with = "crate::dist::serialize_rows")]
    pub f2: BTreeMap<Elem, f64>,
    #[serde(serialize_with = "crate::dist::serialize_rows")]
    pub f3: BTreeMap<Elem, f64>,
    pub f1_default: f64,
    pub f2_default: f64,
    pub f3_default: f64,
    pub pairing: f64,
}

impl Certificate {
    pub fn eval(&self, ctx: &GroupContext, x: &Elem, y: &Elem) -> Result<f64> {
        let z = ctx.sub(x, y)?;
        Ok(self.f1.get(x).copied().unwrap_or(self.f1_default)
            + self.f2.get(y).copied().unwrap_or(self.f2_default)
            + self.f3.get(&z).copied().unwrap_or(self.f3_default))
    }

    /// Recomputes the pairing against the problem's laws.
    pub fn pairing_with(&self, prob: &CouplingProblem) -> f64 {
        let side = |p: &FinDist, f: &BTreeMap<Elem, f64>, d: f64| -> f64 {
            p.iter().map(|(x, px)| px * f.get(x).copied().unwrap_or(d)).sum()
        };
        side(&prob.p1, &self.f1, self.f1_default)
            + side(&prob.p2, &self.f2, self.f2_default)
            + side(&prob.p3, &self.f3, self.f3_default)
    }

    /// Smallest value of f₁(x) + f₂(y) + f₃(x − y) over the given points.
    pub fn min_pointwise(&self, ctx: &GroupContext, xs: &[Elem], ys: &[Elem]) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for x in xs {
            for y in ys {
                lo = lo.min(self.eval(ctx, x, y)?);
            }
        }
        Ok(lo)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CouplingOutcome {
    Feasible { coupling: JointDist },
    Infeasible { certificate: Certificate },
}

impl CouplingOutcome {
    pub fn coupling(&self) -> Option<&JointDist> {
        match self {
            CouplingOutcome::Feasible { coupling } => Some(coupling),
            CouplingOutcome::Infeasible { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CouplingOutcome::Infeasible { certificate } => Some(certificate),
            CouplingOutcome::Feasible { .. } => None,
        }
    }
}

/// The LP rows: x-marginals, y-marginals, then one row per difference z.
struct Layout {
    xs: Vec<Elem>,
    ys: Vec<Elem>,
    zs: Vec<Elem>,
    /// Cell (i, j) ↦ row index of x_i − y_j within `zs`.
    diff: Vec<usize>,
}

impl Layout {
    fn lp<T: Scalar>(&self, rhs: Vec<T>) -> Feasibility<T> {
        let (n, m) = (self.xs.len(), self.ys.len());
        let cols = (0..n * m)
            .map(|c| vec![c / m, n + c % m, n + m + self.diff[c]])
            .collect();
        Feasibility {
            n_rows: n + m + self.zs.len(),
            cols,
            rhs,
        }
    }
}

fn ell1_errors(prob: &CouplingProblem, joint: &JointDist) -> Result<f64> {
    use crate::dist::l1_distance;
    Ok(l1_distance(&joint.marginal_x(), &prob.p1)
        + l1_distance(&joint.marginal_y(), &prob.p2)
        + l1_distance(&joint.difference_law()?, &prob.p3))
}

/// Finds (X, Y) with p_X = p1, p_Y = p2 and p_{X−Y} = p3, or a separating
/// certificate when none exists. Any such coupling lives on
/// supp p1 × supp p2, so the LP is posed on that window for every group.
pub fn solve_three_marginal(prob: &CouplingProblem, cap: usize) -> Result<CouplingOutcome> {
    let ctx = prob.ctx().clone();
    let xs: Vec<Elem> = prob.p1.masses().keys().cloned().collect();
    let ys: Vec<Elem> = prob.p2.masses().keys().cloned().collect();
    if xs.len() * ys.len() > cap {
        return Err(Error::Capacity {
            what: "coupling LP variables",
            limit: cap,
            got: xs.len() * ys.len(),
        });
    }
    let mut zindex: BTreeMap<Elem, usize> = BTreeMap::new();
    for z in prob.p3.masses().keys() {
        let k = zindex.len();
        zindex.entry(z.clone()).or_insert(k);
    }
    let mut diff = Vec::with_capacity(xs.len() * ys.len());
    for x in &xs {
        for y in &ys {
            let z = ctx.sub(x, y)?;
            let k = zindex.len();
            diff.push(*zindex.entry(z).or_insert(k));
        }
    }
    let mut zs = vec![Elem::default(); zindex.len()];
    for (z, k) in &zindex {
        zs[*k] = z.clone();
    }
    let layout = Layout { xs, ys, zs, diff };

    let rhs: Vec<f64> = layout
        .xs
        .iter()
        .map(|x| prob.p1.mass(x))
        .chain(layout.ys.iter().map(|y| prob.p2.mass(y)))
        .chain(layout.zs.iter().map(|z| prob.p3.mass(z)))
        .collect();

    if let Some(out) = finish(prob, &layout, lp::solve(&layout.lp(rhs.clone())))? {
        return Ok(out);
    }
    // Floating point was not conclusive: redo the pivots exactly, with each
    // law rescaled to total exactly one.
    let exact = exact_rhs(&rhs, layout.xs.len(), layout.ys.len());
    let sol = match lp::solve(&layout.lp(exact)) {
        Phase1::Feasible(x) => Phase1::Feasible(x.iter().map(Scalar::to_f64).collect()),
        Phase1::Infeasible { y } => Phase1::Infeasible {
            y: y.iter().map(Scalar::to_f64).collect(),
        },
    };
    finish(prob, &layout, sol)?.ok_or_else(|| {
        Error::Degenerate("coupling LP result could not be verified to tolerance".into())
    })
}

fn exact_rhs(rhs: &[f64], n: usize, m: usize) -> Vec<BigRational> {
    let exact: Vec<BigRational> = rhs
        .iter()
        .map(|v| BigRational::from_float(*v).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0))))
        .collect();
    let mut out = Vec::with_capacity(exact.len());
    for block in [&exact[..n], &exact[n..n + m], &exact[n + m..]] {
        let total = block
            .iter()
            .fold(BigRational::from_integer(BigInt::from(0)), |a, b| a + b);
        out.extend(block.iter().map(|v| v / &total));
    }
    out
}

/// Converts an LP outcome to a verified result; `None` when it fails
/// verification at 1e−9.
fn finish(prob: &CouplingProblem, layout: &Layout, sol: Phase1<f64>) -> Result<Option<CouplingOutcome>> {
    let ctx = prob.ctx();
    let m = layout.ys.len();
    match sol {
        Phase1::Feasible(x) => {
            let mut mass = BTreeMap::new();
            for (c, v) in x.into_iter().enumerate() {
                if v > 0.0 {
                    mass.insert((layout.xs[c / m].clone(), layout.ys[c % m].clone()), v);
                }
            }
            let joint = JointDist::from_raw(ctx.clone(), ctx.clone(), mass);
            if ell1_errors(prob, &joint)? <= 1e-9 {
                Ok(Some(CouplingOutcome::Feasible { coupling: joint }))
            } else {
                Ok(None)
            }
        }
        Phase1::Infeasible { y } => {
            let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(scale > 0.0) {
                return Ok(None);
            }
            let n = layout.xs.len();
            let f: Vec<f64> = y.iter().map(|v| -v / scale).collect();
            let cert = Certificate {
                f1: layout.xs.iter().cloned().zip(f[..n].iter().copied()).collect(),
                f2: layout.ys.iter().cloned().zip(f[n..n + m].iter().copied()).collect(),
                f3: layout.zs.iter().cloned().zip(f[n + m..].iter().copied()).collect(),
                // With every listed value in [−1, 1], an outside value of 2
                // keeps each pointwise sum non-negative.
                f1_default: 2.0,
                f2_default: 2.0,
                f3_default: 0.0,
                pairing: 0.0,
            };
            let pairing = cert.pairing_with(prob);
            let cert = Certificate { pairing, ..cert };
            let lo = cert.min_pointwise(ctx, &layout.xs, &layout.ys)?;
            if lo >= -1e-9 && pairing < -1e-9 {
                Ok(Some(CouplingOutcome::Infeasible { certificate: cert }))
            } else {
                Ok(None)
            }
        }
    }
}

/// A pair (Z, Z′) supported on S × S whose difference Z − Z′ is uniform on
/// S − S:
/// p(s₁, s₂) = 1 / (|S − S| · #{(t₁, t₂) ∈ S² : t₁ − t₂ = s₁ − s₂}).
pub fn uniform_difference_coupling(s: &GroupSet) -> Result<JointDist> {
    if s.is_empty() {
        return Err(Error::Empty("set"));
    }
    let ctx = s.ctx();
    let mut counts: BTreeMap<Elem, usize> = BTreeMap::new();
    for a in s.iter() {
        for b in s.iter() {
            *counts.entry(ctx.sub(a, b)?).or_insert(0) += 1;
        }
    }
    let n_diff = counts.len() as f64;
    let mut mass = BTreeMap::new();
    for a in s.iter() {
        for b in s.iter() {
            let c = counts[&ctx.sub(a, b)?] as f64;
            mass.insert((a.clone(), b.clone()), 1.0 / (n_diff * c));
        }
    }
    Ok(JointDist::from_raw(ctx.clone(), ctx.clone(), mass))
}

/// A self-coupling (X₁, X₂) of X with X₁ − X₂ uniform on H, for X supported
/// on the finite subgroup H with ‖p_X − u_H‖₁ ≤ ½.
pub fn near_uniform_selfcoupling(p: &FinDist, h: &GroupSet, cap: usize) -> Result<JointDist> {
    p.ctx().check_same(h.ctx())?;
    if !h.is_subgroup() {
        return Err(Error::Domain("reference set is not a subgroup".into()));
    }
    if !p.support().is_subset(h) {
        return Err(Error::Precondition("support is not contained in the subgroup".into()));
    }
    let tv = tv_l1(p, h)?;
    if tv > 0.5 + 1e-12 {
        return Err(Error::Precondition(format!(
            "distance {tv} from uniform exceeds 1/2"
        )));
    }
    let prob = CouplingProblem::new(p.clone(), p.clone(), FinDist::uniform(h)?)?;
    match solve_three_marginal(&prob, cap)? {
        CouplingOutcome::Feasible { coupling } => Ok(coupling),
        CouplingOutcome::Infeasible { .. } => Err(Error::Degenerate(
            "no self-coupling with uniform difference was found".into(),
        )),
    }
}

/// Law of X₁ + X₂ or X₁ − X₂ under a joint law on G × G.
pub fn combined_law(joint: &JointDist, ctx: &GroupContext, sign: Sign) -> Result<FinDist> {
    let mut m: BTreeMap<Elem, f64> = BTreeMap::new();
    for ((x, y), p) in joint.masses() {
        *m.entry(ctx.combine(x, y, sign)?).or_insert(0.0) += p;
    }
    Ok(FinDist::from_raw(ctx.clone(), m))
}
