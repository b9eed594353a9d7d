//! A small dense Phase-I simplex for feasibility of `A x = b, x ≥ 0` with
//! `b ≥ 0`. Bland's rule makes the pivot sequence deterministic and
//! cycle-free. The same code runs over `f64` (with a tolerance) or exact
//! rationals.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub(crate) trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn to_f64(&self) -> f64;
}

const F64_TOL: f64 = 1e-12;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_pos(&self) -> bool {
        *self > F64_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -F64_TOL
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Sparse column-oriented constraint matrix with 0/1 entries: `cols[j]`
/// lists the rows where variable j has coefficient 1.
pub(crate) struct Feasibility<T> {
    pub n_rows: usize,
    pub cols: Vec<Vec<usize>>,
    pub rhs: Vec<T>,
}

pub(crate) enum Phase1<T> {
    Feasible(Vec<T>),
    /// Dual vector y with `Aᵀy ≤ 0` and `bᵀy > 0`.
    Infeasible { y: Vec<T> },
}

pub(crate) fn solve<T: Scalar>(lp: &Feasibility<T>) -> Phase1<T> {
    let m = lp.n_rows;
    let nv = lp.cols.len();
    let width = nv + m + 1;
    let mut tab = vec![T::zero(); m * width];
    for (j, rows) in lp.cols.iter().enumerate() {
        for &i in rows {
            tab[i * width + j] = tab[i * width + j].clone() + T::one();
        }
    }
    for i in 0..m {
        tab[i * width + nv + i] = T::one();
        tab[i * width + width - 1] = lp.rhs[i].clone();
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    // Reduced costs of the Phase-I objective Σ artificials.
    let mut cost = vec![T::zero(); width];
    for j in 0..nv {
        let mut s = T::zero();
        for i in 0..m {
            s = s - tab[i * width + j].clone();
        }
        cost[j] = s;
    }
    {
        let mut s = T::zero();
        for i in 0..m {
            s = s - tab[i * width + width - 1].clone();
        }
        cost[width - 1] = s;
    }

    loop {
        let Some(enter) = (0..nv + m).find(|&j| cost[j].is_neg()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best: Option<T> = None;
        for i in 0..m {
            let a = &tab[i * width + enter];
            if !a.is_pos() {
                continue;
            }
            let ratio = tab[i * width + width - 1].clone() / a.clone();
            let better = match (&best, leave) {
                (None, _) => true,
                (Some(b), Some(l)) => {
                    let diff = ratio.clone() - b.clone();
                    diff.is_neg() || (!diff.is_pos() && basis[i] < basis[l])
                }
                _ => unreachable!(),
            };
            if better {
                best = Some(ratio);
                leave = Some(i);
            }
        }
        // Phase I is bounded below by 0, so some row always limits the step.
        let r = leave.expect("phase one objective is bounded");
        pivot(&mut tab, &mut cost, width, m, r, enter);
        basis[r] = enter;
    }

    let mut infeasibility = T::zero();
    for i in 0..m {
        if basis[i] >= nv {
            infeasibility = infeasibility + tab[i * width + width - 1].clone();
        }
    }
    if infeasibility.is_pos() {
        let y = (0..m).map(|i| T::one() - cost[nv + i].clone()).collect();
        return Phase1::Infeasible { y };
    }
    let mut x = vec![T::zero(); nv];
    for i in 0..m {
        if basis[i] < nv {
            x[basis[i]] = tab[i * width + width - 1].clone();
        }
    }
    Phase1::Feasible(x)
}

fn pivot<T: Scalar>(tab: &mut [T], cost: &mut [T], width: usize, m: usize, r: usize, c: usize) {
    let piv = tab[r * width + c].clone();
    for k in 0..width {
        tab[r * width + k] = tab[r * width + k].clone() / piv.clone();
    }
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = tab[i * width + c].clone();
        if f.is_pos() || f.is_neg() {
            for k in 0..width {
                let v = tab[r * width + k].clone();
                tab[i * width + k] = tab[i * width + k].clone() - f.clone() * v;
            }
        }
    }
    let f = cost[c].clone();
    for k in 0..width {
        cost[k] = cost[k].clone() - f.clone() * tab[r * width + k].clone();
    }
}
