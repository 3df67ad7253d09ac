#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tileupb::complement::{Analysis, FamilyKind};
use tileupb::scalar::{CycNumber, CycVector};
use tileupb::tiles::{random_tile_structure, Bipartition, TileStructure};

/// Random dims with 2 or 3 parties and at most 36 cells.
pub fn random_dims(rng: &mut StdRng) -> Vec<usize> {
    loop {
        let n = rng.gen_range(2..=3);
        let dims: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=6)).collect();
        if dims.iter().product::<usize>() <= 36 {
            return dims;
        }
    }
}

/// The seeded corpus of random tile structures used by the property suites.
pub fn corpus(seed: u64, count: usize) -> Vec<TileStructure> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dims = random_dims(&mut rng);
            random_tile_structure(&dims, &mut rng).unwrap()
        })
        .collect()
}

/// Vector of a sum of basis kets, e.g. `&[(1, "01"), (-4, "22")]` on dims 3,3.
pub fn kets(dims: &[usize], terms: &[(i64, &str)], order: u32) -> CycVector {
    let len: usize = dims.iter().product();
    let mut v = CycVector::zeros(len, order);
    for &(c, digits) in terms {
        let idx = digits
            .bytes()
            .zip(dims)
            .fold(0, |acc, (b, &d)| acc * d + (b - b'0') as usize);
        let cur = v.get(idx).clone();
        v.set(idx, &cur + &CycNumber::from_int(c, order));
    }
    v
}

/// Product of per-group ket sums, groups given in party order.
pub fn product(groups: &[(&[usize], &[(i64, &str)])], order: u32) -> CycVector {
    let mut out = CycVector::new(order, vec![CycNumber::one(order)]).unwrap();
    for (dims, terms) in groups {
        out = out.kron(&kets(dims, terms, order));
    }
    out
}

/// Moves party `perm[j]` of the input to position `j` (all dims equal).
pub fn permute_parties(v: &CycVector, dims: &[usize], perm: &[usize]) -> CycVector {
    let n = dims.len();
    let mut out = CycVector::zeros(v.len(), v.order());
    for y in 0..v.len() {
        let ycoords = tileupb::tiles::cell_coords(dims, y);
        let x: Vec<usize> = (0..n).map(|j| ycoords[perm[j]]).collect();
        let xdims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        out.set(tileupb::tiles::cell_index(&xdims, &x), v.get(y).clone());
    }
    out
}

/// Independent rectangle-union check: no union of 2..s-1 tiles is a
/// combinatorial rectangle in the flattening `bp`.
pub fn brute_force_utile(ts: &TileStructure, bp: &Bipartition) -> bool {
    let s = ts.num_tiles();
    let dims = ts.dims();
    let tiles: Vec<Vec<(usize, usize)>> = ts
        .tiles()
        .iter()
        .map(|t| {
            t.cells(dims)
                .into_iter()
                .map(|c| bp.split_coords(dims, &tileupb::tiles::cell_coords(dims, c)))
                .collect()
        })
        .collect();
    for subset in 1u64..(1u64 << s) {
        let k = subset.count_ones() as usize;
        if k < 2 || k > s - 1 {
            continue;
        }
        let mut rows = std::collections::BTreeSet::new();
        let mut cols = std::collections::BTreeSet::new();
        let mut count = 0;
        for (i, cells) in tiles.iter().enumerate() {
            if subset >> i & 1 == 1 {
                for &(r, c) in cells {
                    rows.insert(r);
                    cols.insert(c);
                }
                count += cells.len();
            }
        }
        if count == rows.len() * cols.len() {
            return false;
        }
    }
    true
}

pub fn brute_force_utile_all(ts: &TileStructure) -> bool {
    Bipartition::all(ts.parties())
        .iter()
        .all(|bp| brute_force_utile(ts, bp))
}

/// Complex matrix whose columns are the given exact vectors.
pub fn columns(vs: &[CycVector], len: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(len, vs.len());
    for (j, v) in vs.iter().enumerate() {
        for (i, z) in v.to_c64().into_iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    m
}

/// Orthonormal basis of the column span (numeric rank at tolerance 1e-9).
pub fn orthonormal_span(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-9 * svd.singular_values.max().max(1.0))
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Relative distance from `x` to the span of the columns of `q` (orthonormal).
pub fn distance_to_span(q: &DMatrix<Complex64>, x: &[Complex64]) -> f64 {
    let x = nalgebra::DVector::from_column_slice(x);
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let proj = q * (q.adjoint() * &x);
    (x - proj).norm() / norm
}

/// Outcome of the numeric cross-oracle on one bipartition.
#[derive(Default, Debug)]
pub struct OracleOutcome {
    pub starts: usize,
    pub found: usize,
    pub unmatched: usize,
}

/// Alternating projections between the complement and rank-one matrices of
/// the flattening, from random starts. Converged points have σ₂/σ₁ < 1e-10;
/// each must lie in an enumerated family with the same tile support and
/// within 1e-6 of that family's span.
pub fn numeric_oracle(
    ts: &TileStructure,
    complement: &[CycVector],
    bp: &Bipartition,
    analysis: &Analysis,
    starts: usize,
    rng: &mut StdRng,
) -> OracleOutcome {
    let dims = ts.dims();
    let d: usize = dims.iter().product();
    let q = orthonormal_span(&columns(complement, d));
    let k = q.ncols();
    let (h1, h2) = (bp.h1(dims), bp.h2(dims));
    let map = bp.cell_map(dims);
    let owners = ts.cell_owners();
    let fams: Vec<(Vec<usize>, DMatrix<Complex64>, FamilyKind)> = analysis
        .families
        .iter()
        .map(|f| (f.support.clone(), orthonormal_span(&columns(&f.basis, ts.num_tiles())), f.kind))
        .collect();
    let mut out = OracleOutcome::default();
    if k == 0 {
        return out;
    }
    for _ in 0..starts {
        out.starts += 1;
        let c = nalgebra::DVector::from_fn(k, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let mut v = &q * c;
        v /= Complex64::from(v.norm());
        let mut converged = false;
        let mut prev = f64::INFINITY;
        for _ in 0..400 {
            let mut m = DMatrix::zeros(h1, h2);
            for (x, &(r, col)) in map.iter().enumerate() {
                m[(r, col)] = v[x];
            }
            let svd = m.svd(true, true);
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let s1 = svd.singular_values[order[0]];
            let s2 = order.get(1).map_or(0.0, |&i| svd.singular_values[i]);
            let ratio = s2 / s1;
            if ratio < 1e-10 {
                converged = true;
                break;
            }
            if ratio > prev * 0.9999 && ratio > 1e-4 {
                break;
            }
            prev = ratio;
            let top = order[0];
            let rank1 = nalgebra::DVector::from_fn(d, |x, _| {
                let (r, col) = map[x];
                u[(r, top)] * vt[(top, col)] * s1
            });
            v = &q * (q.adjoint() * rank1);
            let nv = v.norm();
            if nv < 1e-14 {
                break;
            }
            v /= Complex64::from(nv);
        }
        if !converged {
            continue;
        }
        out.found += 1;
        // tile coefficients of the (tile-constant) limit
        let mut a = vec![Complex64::new(0.0, 0.0); ts.num_tiles()];
        for (x, &t) in owners.iter().enumerate() {
            a[t] = v[x];
        }
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let support: Vec<usize> = (0..a.len()).filter(|&i| a[i].norm() > 1e-6 * scale).collect();
        let matched = fams.iter().any(|(sup, span, kind)| {
            *sup == support && (*kind == FamilyKind::Inconclusive || distance_to_span(span, &a) < 1e-6)
        });
        if !matched {
            out.unmatched += 1;
        }
    }
    out
}
