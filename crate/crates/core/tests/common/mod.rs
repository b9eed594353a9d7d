//! Brute-force reference implementations. None of these call the routine
//! they are used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use entsum::{Elem, FinDist, GroupContext, GroupSet};

pub fn shannon(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter().filter(|p| *p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Law of X ± Y for independent X, Y by enumerating all pairs.
pub fn pair_law(p: &FinDist, q: &FinDist, minus: bool) -> BTreeMap<Elem, f64> {
    let ctx = p.ctx();
    let mut out = BTreeMap::new();
    for (x, px) in p.iter() {
        for (y, qy) in q.iter() {
            let z = if minus { ctx.sub(x, y) } else { ctx.add(x, y) }.unwrap();
            *out.entry(z).or_insert(0.0) += px * qy;
        }
    }
    out
}

pub fn entropy(p: &FinDist) -> f64 {
    shannon(p.iter().map(|(_, w)| w))
}

/// H(X − Y) − ½H(X) − ½H(Y) from the pair enumeration.
pub fn ruzsa(p: &FinDist, q: &FinDist) -> f64 {
    shannon(pair_law(p, q, true).into_values()) - 0.5 * entropy(p) - 0.5 * entropy(q)
}

/// Number of quadruples with a₁ + a₂ = a₃ + a₄, by direct enumeration.
pub fn energy(a: &GroupSet) -> u64 {
    let ctx = a.ctx();
    let v: Vec<&Elem> = a.iter().collect();
    let mut n = 0;
    for a1 in &v {
        for a2 in &v {
            let s = ctx.add(a1, a2).unwrap();
            for a3 in &v {
                for a4 in &v {
                    if ctx.add(a3, a4).unwrap() == s {
                        n += 1;
                    }
                }
            }
        }
    }
    n
}

pub fn sumset(a: &GroupSet, b: &GroupSet, minus: bool) -> BTreeSet<Elem> {
    let ctx = a.ctx();
    let mut out = BTreeSet::new();
    for x in a.iter() {
        for y in b.iter() {
            out.insert(if minus { ctx.sub(x, y) } else { ctx.add(x, y) }.unwrap());
        }
    }
    out
}

/// All subgroups of 𝔽₂^D (D ≤ 4), found by testing every subset for
/// closure under addition.
pub fn f2_subgroups(dim: usize) -> Vec<BTreeSet<u32>> {
    assert!(dim <= 4);
    let n = 1u32 << dim;
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let s: BTreeSet<u32> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if s.contains(&0) && s.iter().all(|a| s.iter().all(|b| s.contains(&(a ^ b)))) {
            out.push(s);
        }
    }
    out
}

/// d(X, U_H) computed as a plain Ruzsa distance against the uniform law.
pub fn distance_to_subgroup(p: &FinDist, h: &BTreeSet<u32>) -> f64 {
    let dim = p.ctx().dim();
    let pts: Vec<Vec<i64>> = h
        .iter()
        .map(|v| (0..dim).map(|i| (v >> i & 1) as i64).collect())
        .collect();
    let u = FinDist::uniform(&GroupSet::new(p.ctx().clone(), pts).unwrap()).unwrap();
    ruzsa(p, &u)
}

/// dim_*(A) ≤ r, straight from the recursive definition.
fn skew_at_most(points: &[Vec<i64>], r: usize) -> bool {
    if points.len() <= 1 {
        return true;
    }
    if r == 0 {
        return false;
    }
    let dim = points[0].len();
    (0..dim).any(|c| {
        let mut fibers: BTreeMap<i64, Vec<Vec<i64>>> = BTreeMap::new();
        for p in points {
            fibers.entry(p[c]).or_default().push(p.clone());
        }
        fibers.len() > 1 && fibers.values().all(|f| skew_at_most(f, r - 1))
    })
}

pub fn skew_dimension(a: &GroupSet) -> usize {
    let pts: Vec<Vec<i64>> = a.iter().map(|x| x.coords().to_vec()).collect();
    (0..).find(|&r| skew_at_most(&pts, r)).unwrap()
}

/// Rank over ℚ by fraction-free (Bareiss) elimination.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, p);
        for r in rank + 1..m.len() {
            for k in c + 1..cols {
                m[r][k] = (m[rank][c] * m[r][k] - m[r][c] * m[rank][k]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
    }
    rank
}

/// dim A as the rank of {a − a₀}.
pub fn affine_dimension(a: &GroupSet) -> usize {
    let a0 = a.first().unwrap().coords().to_vec();
    let rows: Vec<Vec<i64>> = a
        .iter()
        .map(|x| x.coords().iter().zip(&a0).map(|(u, v)| u - v).collect())
        .collect();
    rank(&rows)
}

/// max over couplings of H(X′ − Y′) − ½H(X) − ½H(Y), by exact line searches
/// along every simple cycle of the transportation polytope, started from the
/// product coupling and from north-west-corner vertices for every ordering
/// of the rows. Every feasible direction splits conformally into simple
/// cycles, so a point where no cycle improves is a maximum.
pub struct CycleAscent {
    pub value: f64,
    pub coupling: Vec<Vec<f64>>,
}

pub fn d_star_by_cycles(p: &FinDist, q: &FinDist) -> CycleAscent {
    let ctx = p.ctx();
    let xs: Vec<(&Elem, f64)> = p.iter().collect();
    let ys: Vec<(&Elem, f64)> = q.iter().collect();
    let (n, m) = (xs.len(), ys.len());
    let mut diffs: BTreeMap<Elem, usize> = BTreeMap::new();
    let mut z = vec![vec![0usize; m]; n];
    for i in 0..n {
        for j in 0..m {
            let d = ctx.sub(xs[i].0, ys[j].0).unwrap();
            let next = diffs.len();
            z[i][j] = *diffs.entry(d).or_insert(next);
        }
    }
    let nz = diffs.len();
    let cycles = simple_cycles(n, m);
    let base = 0.5 * shannon(xs.iter().map(|x| x.1)) + 0.5 * shannon(ys.iter().map(|y| y.1));

    let law = |pi: &Vec<Vec<f64>>| {
        let mut r = vec![0.0; nz];
        for i in 0..n {
            for j in 0..m {
                r[z[i][j]] += pi[i][j];
            }
        }
        r
    };

    let mut starts = vec![(0..n).map(|i| (0..m).map(|j| xs[i].1 * ys[j].1).collect::<Vec<_>>()).collect::<Vec<_>>()];
    for order in permutations(n) {
        starts.push(north_west(&order, &xs.iter().map(|x| x.1).collect::<Vec<_>>(), &ys.iter().map(|y| y.1).collect::<Vec<_>>()));
    }

    let mut best = CycleAscent {
        value: f64::NEG_INFINITY,
        coupling: Vec::new(),
    };
    for mut pi in starts {
        for _sweep in 0..5000 {
            let mut improved = false;
            for cyc in &cycles {
                let r = law(&pi);
                // δr for one unit along the cycle.
                let mut dr = vec![0.0; nz];
                for &(i, j) in &cyc.0 {
                    dr[z[i][j]] += 1.0;
                }
                for &(i, j) in &cyc.1 {
                    dr[z[i][j]] -= 1.0;
                }
                if dr.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let hi = cyc.1.iter().map(|&(i, j)| pi[i][j]).fold(f64::INFINITY, f64::min);
                let lo = -cyc.0.iter().map(|&(i, j)| pi[i][j]).fold(f64::INFINITY, f64::min);
                if hi - lo <= 1e-18 {
                    continue;
                }
                let h = |t: f64| shannon(r.iter().zip(&dr).map(|(a, b)| (a + t * b).max(0.0)));
                let slope = |t: f64| -> f64 {
                    r.iter()
                        .zip(&dr)
                        .filter(|(_, b)| **b != 0.0)
                        .map(|(a, b)| {
                            let v = a + t * b;
                            if v <= 0.0 {
                                if *b > 0.0 {
                                    f64::INFINITY
                                } else {
                                    f64::NEG_INFINITY
                                }
                            } else {
                                -b * v.ln()
                            }
                        })
                        .sum()
                };
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let s = slope(mid);
                    if s.is_nan() {
                        break;
                    }
                    if s > 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let t = 0.5 * (a + b);
                if h(t) > h(0.0) + 1e-15 {
                    for &(i, j) in &cyc.0 {
                        pi[i][j] += t;
                    }
                    for &(i, j) in &cyc.1 {
                        pi[i][j] = (pi[i][j] - t).max(0.0);
                    }
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let v = shannon(law(&pi)) - base;
        if v > best.value {
            best = CycleAscent { value: v, coupling: pi };
        }
    }
    best
}

type Cycle = (Vec<(usize, usize)>, Vec<(usize, usize)>);

/// Simple cycles of K_{n,m} as (plus cells, minus cells), one orientation
/// each.
fn simple_cycles(n: usize, m: usize) -> Vec<Cycle> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in 2..=n.min(m) {
        for rows in arrangements(n, k) {
            for cols in arrangements(m, k) {
                let plus: Vec<(usize, usize)> = (0..k).map(|t| (rows[t], cols[t])).collect();
                let minus: Vec<(usize, usize)> = (0..k).map(|t| (rows[t], cols[(t + 1) % k])).collect();
                let mut sp = plus.clone();
                sp.sort();
                let mut sm = minus.clone();
                sm.sort();
                let key = if sp < sm { (sp, sm) } else { (sm, sp) };
                if seen.insert(key) {
                    out.push((plus, minus));
                }
            }
        }
    }
    out
}

fn arrangements(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in arrangements(n, k - 1) {
        for v in 0..n {
            if !rest.contains(&v) {
                let mut r = rest.clone();
                r.push(v);
                out.push(r);
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    arrangements(n, n)
}

fn north_west(order: &[usize], p: &[f64], q: &[f64]) -> Vec<Vec<f64>> {
    let mut pi = vec![vec![0.0; q.len()]; p.len()];
    let mut rows: Vec<f64> = p.to_vec();
    let mut cols: Vec<f64> = q.to_vec();
    let (mut a, mut j) = (0, 0);
    while a < order.len() && j < q.len() {
        let i = order[a];
        let t = rows[i].min(cols[j]);
        pi[i][j] += t;
        rows[i] -= t;
        cols[j] -= t;
        if rows[i] <= 1e-15 {
            a += 1;
        } else {
            j += 1;
        }
    }
    pi
}

/// Sets in ℤ^D as sorted coordinate vectors, for readable test fixtures.
pub fn zset(dim: usize, pts: &[&[i64]]) -> GroupSet {
    GroupSet::new(GroupContext::z(dim), pts.iter()).unwrap()
}
