//! Exact integer linear algebra for sublattices of ℤ^D: an echelon (Hermite)
//! basis, coordinates with respect to it, and rank.

use crate::error::{Error, Result};

/// Row-echelon integer basis of the lattice spanned by `vectors`. Pivots are
/// positive and strictly move right; entries above a pivot are reduced into
/// [0, pivot).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    dim: usize,
    rows: Vec<Vec<i128>>,
    pivots: Vec<usize>,
}

fn checked(v: Option<i128>) -> Result<i128> {
    v.ok_or(Error::Overflow)
}

impl LatticeBasis {
    pub fn new(dim: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        let mut rows: Vec<Vec<i128>> = vectors
            .iter()
            .filter(|v| v.iter().any(|c| *c != 0))
            .map(|v| {
                if v.len() != dim {
                    return Err(Error::Domain(format!("vector of length {} in Z^{dim}", v.len())));
                }
                Ok(v.iter().map(|c| *c as i128).collect())
            })
            .collect::<Result<_>>()?;
        let mut pivots = Vec::new();
        let mut top = 0;
        for col in 0..dim {
            if top == rows.len() {
                break;
            }
            // Euclid on the column until one row holds the gcd.
            loop {
                let mut best: Option<usize> = None;
                for r in top..rows.len() {
                    if rows[r][col] != 0
                        && best.map_or(true, |b| rows[r][col].abs() < rows[b][col].abs())
                    {
                        best = Some(r);
                    }
                }
                let Some(b) = best else { break };
                rows.swap(top, b);
                let mut done = true;
                for r in top + 1..rows.len() {
                    if rows[r][col] != 0 {
                        let q = rows[r][col].div_euclid(rows[top][col]);
                        for c in col..dim {
                            let sub = checked(q.checked_mul(rows[top][c]))?;
                            rows[r][c] = checked(rows[r][c].checked_sub(sub))?;
                        }
                        if rows[r][col] != 0 {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if rows[top][col] == 0 {
                continue;
            }
            if rows[top][col] < 0 {
                for c in col..dim {
                    rows[top][c] = -rows[top][c];
                }
            }
            let p = rows[top][col];
            for r in 0..top {
                let q = rows[r][col].div_euclid(p);
                if q != 0 {
                    for c in col..dim {
                        let sub = checked(q.checked_mul(rows[top][c]))?;
                        rows[r][c] = checked(rows[r][c].checked_sub(sub))?;
                    }
                }
            }
            pivots.push(col);
            top += 1;
            rows.retain(|row| row.iter().any(|c| *c != 0));
        }
        rows.truncate(top);
        Ok(LatticeBasis { dim, rows, pivots })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<i128>] {
        &self.rows
    }

    /// Integer coordinates of `v` in this basis, or `None` when `v` is not
    /// in the lattice.
    pub fn coordinates(&self, v: &[i64]) -> Result<Option<Vec<i64>>> {
        let mut rest: Vec<i128> = v.iter().map(|c| *c as i128).collect();
        let mut out = Vec::with_capacity(self.rank());
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if rest[..p].iter().any(|c| *c != 0) {
                return Ok(None);
            }
            if rest[p] % row[p] != 0 {
                return Ok(None);
            }
            let q = rest[p] / row[p];
            for c in p..self.dim {
                let sub = checked(q.checked_mul(row[c]))?;
                rest[c] = checked(rest[c].checked_sub(sub))?;
            }
            out.push(i64::try_from(q).map_err(|_| Error::Overflow)?);
        }
        if rest.iter().any(|c| *c != 0) {
            return Ok(None);
        }
        Ok(Some(out))
    }
}

/// Rank over ℚ of a list of integer vectors.
pub fn integer_rank(dim: usize, vectors: &[Vec<i64>]) -> Result<usize> {
    Ok(LatticeBasis::new(dim, vectors)?.rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_and_coordinates() {
        let b = LatticeBasis::new(2, &[vec![2, 0], vec![0, 2], vec![2, 2]]).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(b.coordinates(&[4, -2]).unwrap(), Some(vec![2, -1]));
        assert_eq!(b.coordinates(&[1, 0]).unwrap(), None);

        let b = LatticeBasis::new(3, &[vec![1, 1, 0], vec![2, 2, 0]]).unwrap();
        assert_eq!(b.rank(), 1);
        assert_eq!(b.coordinates(&[3, 3, 0]).unwrap(), Some(vec![3]));
        assert_eq!(b.coordinates(&[3, 3, 1]).unwrap(), None);

        let b = LatticeBasis::new(2, &[vec![3, 1], vec![5, 2]]).unwrap();
        assert_eq!(b.rank(), 2);
        for v in [[1, 0], [0, 1], [-7, 4]] {
            let c = b.coordinates(&v).unwrap().unwrap();
            let mut back = [0i128; 2];
            for (ci, row) in c.iter().zip(b.rows()) {
                back[0] += *ci as i128 * row[0];
                back[1] += *ci as i128 * row[1];
            }
            assert_eq!(back, [v[0] as i128, v[1] as i128]);
        }
        assert_eq!(LatticeBasis::new(3, &[]).unwrap().rank(), 0);
    }

    #[test]
    fn ranks() {
        assert_eq!(integer_rank(3, &[vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0]]).unwrap(), 2);
        assert_eq!(integer_rank(2, &[vec![0, 0]]).unwrap(), 0);
        assert_eq!(integer_rank(1, &[vec![1], vec![2]]).unwrap(), 1);
    }
}
