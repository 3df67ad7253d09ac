//! Integer kernels and torsion via Smith normal form.

use crate::error::{Error, Result};

/// Solution data for `E x = 0` over Z, together with the diagonal form
/// `P E Q = diag(σ_1, …, σ_r, 0, …)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeKernel {
    /// Number of columns of `E`.
    pub cols: usize,
    /// Invariant factors σ_1 | σ_2 | … | σ_r, all positive.
    pub invariant_factors: Vec<i64>,
    /// Unimodular column transform `Q`, stored row-major as `cols × cols`.
    pub transform: Vec<Vec<i64>>,
}

impl LatticeKernel {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    /// Integer basis of {x : E x = 0}: the last `cols - rank` columns of `Q`.
    pub fn kernel_basis(&self) -> Vec<Vec<i64>> {
        (self.rank()..self.cols)
            .map(|j| (0..self.cols).map(|i| self.transform[i][j]).collect())
            .collect()
    }

    /// Invariant factors greater than one; Z^cols / rowspace(E) has torsion
    /// ⊕ Z/σ for these σ.
    pub fn torsion(&self) -> Vec<i64> {
        self.invariant_factors.iter().copied().filter(|&s| s > 1).collect()
    }
}

fn overflow() -> Error {
    Error::Overflow("integer lattice reduction overflowed i64".into())
}

fn checked_axpy(target: &mut [i64], factor: i64, source: &[i64]) -> Result<()> {
    for (t, &s) in target.iter_mut().zip(source) {
        *t = factor
            .checked_mul(s)
            .and_then(|p| t.checked_sub(p))
            .ok_or_else(overflow)?;
    }
    Ok(())
}

/// Smith normal form of an integer matrix given by rows. Only the column
/// transform is tracked.
pub fn integer_lattice_kernel(rows: &[Vec<i64>], cols: usize) -> Result<LatticeKernel> {
    let mut a: Vec<Vec<i64>> = rows.to_vec();
    for r in &a {
        if r.len() != cols {
            return Err(Error::DimensionMismatch("ragged integer matrix".into()));
        }
    }
    let m = a.len();
    let mut q: Vec<Vec<i64>> = (0..cols)
        .map(|i| (0..cols).map(|j| i64::from(i == j)).collect())
        .collect();

    let col_axpy = |a: &mut Vec<Vec<i64>>, q: &mut Vec<Vec<i64>>, dst: usize, f: i64, src: usize| -> Result<()> {
        for row in a.iter_mut().chain(q.iter_mut()) {
            row[dst] = f
                .checked_mul(row[src])
                .and_then(|p| row[dst].checked_sub(p))
                .ok_or_else(overflow)?;
        }
        Ok(())
    };
    let col_swap = |a: &mut Vec<Vec<i64>>, q: &mut Vec<Vec<i64>>, i: usize, j: usize| {
        for row in a.iter_mut().chain(q.iter_mut()) {
            row.swap(i, j);
        }
    };

    let mut t = 0;
    while t < m.min(cols) {
        // smallest nonzero |entry| in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..cols {
                if a[i][j] != 0
                    && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        col_swap(&mut a, &mut q, t, pj);

        loop {
            let mut done = true;
            for i in t + 1..m {
                if a[i][t] != 0 {
                    let f = a[i][t].div_euclid(a[t][t]);
                    let (head, tail) = a.split_at_mut(i);
                    checked_axpy(&mut tail[0], f, &head[t])?;
                    if tail[0][t] != 0 {
                        done = false;
                    }
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 {
                    let f = a[t][j].div_euclid(a[t][t]);
                    col_axpy(&mut a, &mut q, j, f, t)?;
                    if a[t][j] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                // divisibility of the trailing block by the pivot
                let p = a[t][t];
                let bad = (t + 1..m).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
                match bad {
                    None => break,
                    Some(i) => {
                        let (head, tail) = a.split_at_mut(i);
                        for (x, y) in head[t].iter_mut().zip(tail[0].iter()) {
                            *x = x.checked_add(*y).ok_or_else(overflow)?;
                        }
                        continue;
                    }
                }
            }
            // move the smallest remaining entry of row/column t to the pivot
            let mut best = (t, t);
            for i in t..m {
                if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                a.swap(t, best.0);
            } else if best.1 != t {
                col_swap(&mut a, &mut q, t, best.1);
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
        }
        t += 1;
    }

    let invariant_factors = (0..t).map(|i| a[i][i]).collect();
    Ok(LatticeKernel {
        cols,
        invariant_factors,
        transform: q,
    })
}
