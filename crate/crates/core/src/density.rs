//! The normalised projector onto a complement, partial transposes, and the
//! range test for entanglement.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complement::{find_product_states, is_product_tensor, ComplementModel, Mode};
use crate::error::{Error, Result};
use crate::scalar::{gram_schmidt, inner_product, orthogonal_complement, CycMatrix, CycNumber, CycVector};
use crate::states::{builtin, OPSet};
use crate::tiles::{cell_coords, cell_index, Bipartition};

pub const PPT_TOL: f64 = 1e-9;

/// (I - Σ |ψ⟩⟨ψ|/⟨ψ|ψ⟩) / (D - |S|), kept exact.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    exact: CycMatrix,
}

impl DensityMatrix {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.exact.nrows()
    }

    pub fn exact(&self) -> &CycMatrix {
        &self.exact
    }

    pub fn trace(&self) -> CycNumber {
        self.exact.trace()
    }

    pub fn is_hermitian(&self) -> bool {
        self.exact.is_hermitian()
    }

    pub fn to_c64(&self) -> DMatrix<Complex64> {
        self.exact.to_c64()
    }

    /// Transpose of the parties on side D of `bp`.
    pub fn partial_transpose(&self, bp: &Bipartition) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            exact: partial_transpose(&self.exact, &self.dims, bp.side_d())?,
        })
    }
}

/// Exchanges row and column indices of the listed parties.
pub fn partial_transpose(m: &CycMatrix, dims: &[usize], parties: &[usize]) -> Result<CycMatrix> {
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "{}×{} matrix over dims {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = CycMatrix::zeros(d, d, m.order());
    for x in 0..d {
        let cx = cell_coords(dims, x);
        for y in 0..d {
            let v = m.get(x, y);
            if v.is_zero() {
                continue;
            }
            let (mut nx, mut ny) = (cx.clone(), cell_coords(dims, y));
            for &p in parties {
                std::mem::swap(&mut nx[p], &mut ny[p]);
            }
            out.set(cell_index(dims, &nx), cell_index(dims, &ny), v.clone());
        }
    }
    Ok(out)
}

pub fn rho_bar(set: &OPSet) -> Result<DensityMatrix> {
    let dims = set.dims().to_vec();
    let d: usize = dims.iter().product();
    let order = set.order();
    if set.len() >= d {
        return Err(Error::EmptyComplement(format!("{} states in dimension {d}", set.len())));
    }
    let mut m = CycMatrix::identity(d, order);
    for v in set.vectors() {
        let norm = v.norm_sqr().inv()?;
        let supp = v.support();
        for &x in &supp {
            let vx = &v.get(x).clone() * &norm;
            for &y in &supp {
                let term = &vx * &v.get(y).conj();
                let cur = m.get(x, y).clone();
                m.set(x, y, &cur - &term);
            }
        }
    }
    let scale = CycNumber::from_frac(1, (d - set.len()) as i64, order);
    for x in 0..d {
        for y in 0..d {
            if !m.get(x, y).is_zero() {
                let v = m.get(x, y) * &scale;
                m.set(x, y, v);
            }
        }
    }
    Ok(DensityMatrix { dims, exact: m })
}

/// Minimum eigenvalue of the partial transpose (side D of `bp`).
pub fn ppt_check(rho: &DensityMatrix, bp: &Bipartition) -> Result<f64> {
    let pt = rho.partial_transpose(bp)?;
    Ok(min_eigenvalue(pt.to_c64()))
}

pub fn min_eigenvalue(m: DMatrix<Complex64>) -> f64 {
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub bipartition: Bipartition,
    pub min_eigenvalue: f64,
    pub tol: f64,
}

impl PptReport {
    pub fn passes(&self) -> bool {
        self.min_eigenvalue >= -self.tol
    }
}

/// PPT check in all 2^{n-1} - 1 bipartitions.
pub fn ppt_report(rho: &DensityMatrix, tol: f64) -> Result<Vec<PptReport>> {
    Bipartition::all(rho.dims.len())
        .into_par_iter()
        .map(|bp| {
            Ok(PptReport {
                min_eigenvalue: ppt_check(rho, &bp)?,
                bipartition: bp,
                tol,
            })
        })
        .collect()
}

/// True when the fully product states of the complement do not span it, so
/// the projector onto the complement is entangled by the range criterion.
/// `Ok(false)` means the test is silent.
pub fn entangled_via_range(model: &ComplementModel) -> Result<bool> {
    let analysis = find_product_states(model, &Mode::Multipartite)?;
    if analysis.has_inconclusive() {
        return Err(Error::Inconclusive("a product family could not be decided".into()));
    }
    if analysis.span_upper < analysis.complement_dim {
        Ok(true)
    } else if analysis.span_lower == analysis.complement_dim {
        Ok(false)
    } else {
        Err(Error::Inconclusive(format!(
            "product span between {} and {} in dimension {}",
            analysis.span_lower, analysis.span_upper, analysis.complement_dim
        )))
    }
}

/// The 27 states completing W in the AB|C cut: an orthogonal basis of the
/// complement of the Tiles UPB tensored with |0⟩_C, followed by W.
pub fn w_completion_states() -> Result<Vec<CycVector>> {
    let tiles = builtin("tiles-3x3")?.set;
    let order = tiles.order();
    let ab = gram_schmidt(&orthogonal_complement(&tiles.vectors(), 9, order));
    let zero_c = CycVector::unit(3, 0, order);
    let mut out: Vec<CycVector> = ab.iter().map(|v| v.kron(&zero_c)).collect();
    out.extend(builtin("w-333")?.set.promote(order)?.vectors());
    Ok(out)
}

/// Checks that the completion is 27 nonzero, mutually orthogonal states,
/// each a product across AB|C.
pub fn verify_w_completion() -> Result<bool> {
    let states = w_completion_states()?;
    if states.len() != 27 || states.iter().any(CycVector::is_zero) {
        return Ok(false);
    }
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            if !inner_product(&states[i], &states[j])?.is_zero() {
                return Ok(false);
            }
        }
    }
    for s in &states {
        if is_product_tensor(s, &[9, 3])?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}
