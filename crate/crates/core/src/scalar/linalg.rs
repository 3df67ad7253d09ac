//! Exact dense vectors and matrices over Q(ζ_L).

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::CycNumber;

#[derive(Clone, PartialEq, Eq)]
pub struct CycVector {
    order: u32,
    entries: Vec<CycNumber>,
}

impl CycVector {
    pub fn new(order: u32, entries: Vec<CycNumber>) -> Result<CycVector> {
        if let Some(e) = entries.iter().find(|e| e.order() != order) {
            return Err(Error::InvalidOrder(format!(
                "entry of order {} in a vector of order {order}",
                e.order()
            )));
        }
        Ok(CycVector { order, entries })
    }

    pub fn zeros(len: usize, order: u32) -> CycVector {
        CycVector {
            order,
            entries: vec![CycNumber::zero(order); len],
        }
    }

    pub fn from_ints(values: &[i64], order: u32) -> CycVector {
        CycVector {
            order,
            entries: values.iter().map(|&v| CycNumber::from_int(v, order)).collect(),
        }
    }

    pub fn unit(len: usize, index: usize, order: u32) -> CycVector {
        let mut v = CycVector::zeros(len, order);
        v.entries[index] = CycNumber::one(order);
        v
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CycNumber] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<CycNumber> {
        self.entries
    }

    pub fn get(&self, i: usize) -> &CycNumber {
        &self.entries[i]
    }

    pub fn set(&mut self, i: usize, value: CycNumber) {
        assert_eq!(value.order(), self.order);
        self.entries[i] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(CycNumber::is_zero)
    }

    /// Indices of nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn conj(&self) -> CycVector {
        CycVector {
            order: self.order,
            entries: self.entries.iter().map(CycNumber::conj).collect(),
        }
    }

    pub fn scale(&self, s: &CycNumber) -> CycVector {
        CycVector {
            order: self.order,
            entries: self
                .entries
                .iter()
                .map(|e| if e.is_zero() { e.clone() } else { e * s })
                .collect(),
        }
    }

    pub fn add(&self, other: &CycVector) -> CycVector {
        assert_eq!(self.len(), other.len());
        CycVector {
            order: self.order,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self - s * other`.
    pub fn sub_scaled(&self, s: &CycNumber, other: &CycVector) -> CycVector {
        assert_eq!(self.len(), other.len());
        CycVector {
            order: self.order,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| if b.is_zero() { a.clone() } else { a - &(s * b) })
                .collect(),
        }
    }

    /// Kronecker product, `self` being the more significant factor.
    pub fn kron(&self, other: &CycVector) -> CycVector {
        let mut entries = Vec::with_capacity(self.len() * other.len());
        for a in &self.entries {
            for b in &other.entries {
                entries.push(if a.is_zero() || b.is_zero() {
                    CycNumber::zero(self.order)
                } else {
                    a * b
                });
            }
        }
        CycVector {
            order: self.order,
            entries,
        }
    }

    pub fn promote(&self, order: u32) -> Result<CycVector> {
        Ok(CycVector {
            order,
            entries: self
                .entries
                .iter()
                .map(|e| e.promote(order))
                .collect::<Result<_>>()?,
        })
    }

    pub fn norm_sqr(&self) -> CycNumber {
        inner_product(self, self).expect("same length")
    }

    pub fn to_c64(&self) -> Vec<num_complex::Complex64> {
        self.entries.iter().map(CycNumber::to_c64).collect()
    }

    /// True when `other = c * self` for some scalar `c` (both nonzero).
    pub fn is_proportional(&self, other: &CycVector) -> bool {
        if self.len() != other.len() || self.order != other.order {
            return false;
        }
        let Some(p) = self.entries.iter().position(|e| !e.is_zero()) else {
            return false;
        };
        if other.entries[p].is_zero() {
            return false;
        }
        let ratio = other.entries[p].div(&self.entries[p]).expect("nonzero pivot");
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| &(a * &ratio) == b)
    }
}

impl fmt::Debug for CycVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.entries).finish()
    }
}

impl fmt::Display for CycVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Σ conj(u_i) v_i.
pub fn inner_product(u: &CycVector, v: &CycVector) -> Result<CycNumber> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.order != v.order {
        return Err(Error::InvalidOrder("inner product across orders".into()));
    }
    let mut acc = CycNumber::zero(u.order);
    for (a, b) in u.entries.iter().zip(&v.entries) {
        if a.is_zero() || b.is_zero() {
            continue;
        }
        acc = &acc + &(&a.conj() * b);
    }
    Ok(acc)
}

#[derive(Clone, PartialEq, Eq)]
pub struct CycMatrix {
    order: u32,
    rows: usize,
    cols: usize,
    entries: Vec<CycNumber>,
}

impl CycMatrix {
    pub fn zeros(rows: usize, cols: usize, order: u32) -> CycMatrix {
        CycMatrix {
            order,
            rows,
            cols,
            entries: vec![CycNumber::zero(order); rows * cols],
        }
    }

    pub fn identity(n: usize, order: u32) -> CycMatrix {
        let mut m = CycMatrix::zeros(n, n, order);
        for i in 0..n {
            m.set(i, i, CycNumber::one(order));
        }
        m
    }

    pub fn from_rows(order: u32, rows: &[CycVector]) -> Result<CycMatrix> {
        let cols = rows.first().map_or(0, CycVector::len);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch("ragged matrix rows".into()));
            }
            if r.order() != order {
                return Err(Error::InvalidOrder("matrix row of a different order".into()));
            }
            entries.extend(r.entries.iter().cloned());
        }
        Ok(CycMatrix {
            order,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn from_ints(rows: &[&[i64]], order: u32) -> CycMatrix {
        let vecs: Vec<CycVector> = rows.iter().map(|r| CycVector::from_ints(r, order)).collect();
        CycMatrix::from_rows(order, &vecs).expect("rectangular input")
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &CycNumber {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: CycNumber) {
        assert_eq!(v.order(), self.order);
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> CycVector {
        CycVector {
            order: self.order,
            entries: self.entries[r * self.cols..(r + 1) * self.cols].to_vec(),
        }
    }

    pub fn column(&self, c: usize) -> CycVector {
        CycVector {
            order: self.order,
            entries: (0..self.rows).map(|r| self.get(r, c).clone()).collect(),
        }
    }

    pub fn rows(&self) -> Vec<CycVector> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn adjoint(&self) -> CycMatrix {
        let mut out = CycMatrix::zeros(self.cols, self.rows, self.order);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.rows == self.cols && *self == self.adjoint()
    }

    pub fn mul(&self, other: &CycMatrix) -> Result<CycMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("matrix product shapes".into()));
        }
        let mut out = CycMatrix::zeros(self.rows, other.cols, self.order);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.entries[idx] = &out.entries[idx] + &(a * b);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> CycNumber {
        let mut acc = CycNumber::zero(self.order);
        for i in 0..self.rows.min(self.cols) {
            acc = &acc + self.get(i, i);
        }
        acc
    }

    pub fn to_c64(&self) -> nalgebra::DMatrix<num_complex::Complex64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).to_c64())
    }

    /// Exact rank by fraction-free (Bareiss) elimination.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<CycNumber>> = (0..self.rows)
            .map(|r| self.entries[r * self.cols..(r + 1) * self.cols].to_vec())
            .collect();
        let mut prev = CycNumber::one(self.order);
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == a.len() {
                break;
            }
            let Some(p) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            let prev_inv = prev.inv().expect("nonzero pivot");
            let (top, rest) = a.split_at_mut(rank + 1);
            let pivot_row = &top[rank];
            let pivot = pivot_row[col].clone();
            for row in rest.iter_mut() {
                let f = row[col].clone();
                for k in col + 1..self.cols {
                    let lhs = if row[k].is_zero() { None } else { Some(&pivot * &row[k]) };
                    let rhs = if f.is_zero() || pivot_row[k].is_zero() {
                        None
                    } else {
                        Some(&f * &pivot_row[k])
                    };
                    let v = match (lhs, rhs) {
                        (None, None) => continue,
                        (Some(l), None) => l,
                        (None, Some(r)) => -r,
                        (Some(l), Some(r)) => &l - &r,
                    };
                    row[k] = if prev_inv.is_one() { v } else { &v * &prev_inv };
                }
                row[col] = CycNumber::zero(self.order);
            }
            prev = pivot;
            rank += 1;
        }
        rank
    }

    /// Reduced row echelon form; returns the matrix and its pivot columns.
    pub fn rref(&self) -> (CycMatrix, Vec<usize>) {
        let mut a: Vec<Vec<CycNumber>> = (0..self.rows)
            .map(|r| self.entries[r * self.cols..(r + 1) * self.cols].to_vec())
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            if r == a.len() {
                break;
            }
            let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else {
                continue;
            };
            a.swap(r, p);
            let inv = a[r][col].inv().expect("nonzero pivot");
            if !inv.is_one() {
                for k in col..self.cols {
                    if !a[r][k].is_zero() {
                        a[r][k] = &a[r][k] * &inv;
                    }
                }
            }
            let pivot_row = a[r].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == r || row[col].is_zero() {
                    continue;
                }
                let f = row[col].clone();
                for k in col..self.cols {
                    if !pivot_row[k].is_zero() {
                        row[k] = &row[k] - &(&f * &pivot_row[k]);
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        let entries = a.into_iter().flatten().collect();
        (
            CycMatrix {
                order: self.order,
                rows: self.rows,
                cols: self.cols,
                entries,
            },
            pivots,
        )
    }

    /// Basis of the right null space {x : Mx = 0}.
    pub fn kernel_basis(&self) -> Vec<CycVector> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![None; self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            is_pivot[p] = Some(i);
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free].is_some() {
                continue;
            }
            let mut v = CycVector::zeros(self.cols, self.order);
            v.set(free, CycNumber::one(self.order));
            for (i, &p) in pivots.iter().enumerate() {
                let e = r.get(i, free);
                if !e.is_zero() {
                    v.set(p, -e);
                }
            }
            basis.push(v);
        }
        basis
    }
}

impl fmt::Debug for CycMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CycMatrix {}x{} (order {})", self.rows, self.cols, self.order)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

/// Rank of a list of equal-length vectors.
pub fn rank_of(vectors: &[CycVector], order: u32) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    CycMatrix::from_rows(order, vectors).expect("equal lengths").rank()
}

/// Exact Gram–Schmidt without normalisation. Dependent inputs are dropped.
pub fn gram_schmidt(vectors: &[CycVector]) -> Vec<CycVector> {
    let mut out: Vec<(CycVector, CycNumber)> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for (u, uu) in &out {
            let c = inner_product(u, &w).expect("same length");
            if !c.is_zero() {
                let coef = c.div(uu).expect("nonzero norm");
                w = w.sub_scaled(&coef, u);
            }
        }
        if !w.is_zero() {
            let ww = w.norm_sqr();
            out.push((w, ww));
        }
    }
    out.into_iter().map(|(u, _)| u).collect()
}

/// Basis of the subspace of vectors orthogonal to every input vector.
pub fn orthogonal_complement(vectors: &[CycVector], len: usize, order: u32) -> Vec<CycVector> {
    if vectors.is_empty() {
        return (0..len).map(|i| CycVector::unit(len, i, order)).collect();
    }
    let conj: Vec<CycVector> = vectors.iter().map(CycVector::conj).collect();
    CycMatrix::from_rows(order, &conj)
        .expect("equal lengths")
        .kernel_basis()
}
