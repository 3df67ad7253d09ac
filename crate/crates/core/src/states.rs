//! Orthogonal product sets generated from tile structures.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{embed_root, inner_product, lcm_orders, CycMatrix, CycNumber, CycVector};
use crate::tiles::{cell_coords, Bipartition, Tile, TileStructure};

/// A product vector stored as one (unnormalised) factor per party.
#[derive(Clone, PartialEq, Eq)]
pub struct ProductState {
    order: u32,
    factors: Vec<CycVector>,
}

impl ProductState {
    pub fn new(factors: Vec<CycVector>) -> Result<ProductState> {
        let order = factors
            .first()
            .ok_or_else(|| Error::Degenerate("product state without factors".into()))?
            .order();
        for (j, f) in factors.iter().enumerate() {
            if f.order() != order {
                return Err(Error::InvalidOrder("factors of different orders".into()));
            }
            if f.is_zero() {
                return Err(Error::Degenerate(format!("factor {j} is the zero vector")));
            }
        }
        Ok(ProductState { order, factors })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn factors(&self) -> &[CycVector] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(CycVector::len).collect()
    }

    /// The full tensor, party 0 most significant.
    pub fn vector(&self) -> CycVector {
        let mut it = self.factors.iter();
        let first = it.next().expect("nonempty").clone();
        it.fold(first, |acc, f| acc.kron(f))
    }

    pub fn promote(&self, order: u32) -> Result<ProductState> {
        Ok(ProductState {
            order,
            factors: self
                .factors
                .iter()
                .map(|f| f.promote(order))
                .collect::<Result<_>>()?,
        })
    }

    /// ⟨self|other⟩ computed factorwise.
    pub fn inner(&self, other: &ProductState) -> Result<CycNumber> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch("product states over different dims".into()));
        }
        let mut acc = CycNumber::one(self.order);
        for (a, b) in self.factors.iter().zip(&other.factors) {
            let ip = inner_product(a, b)?;
            if ip.is_zero() {
                return Ok(ip);
            }
            acc = &acc * &ip;
        }
        Ok(acc)
    }
}

impl fmt::Debug for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.factors).finish()
    }
}

/// An ordered list of product states with provenance labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OPSet {
    dims: Vec<usize>,
    order: u32,
    states: Vec<ProductState>,
    labels: Vec<String>,
}

impl OPSet {
    pub fn new(dims: Vec<usize>, order: u32) -> OPSet {
        OPSet {
            dims,
            order,
            states: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Builds a set from states, promoting all of them to a common order.
    pub fn from_states(dims: Vec<usize>, states: Vec<(ProductState, String)>) -> Result<OPSet> {
        let order = lcm_orders(states.iter().map(|(s, _)| s.order()));
        let mut out = OPSet::new(dims, order);
        for (s, label) in states {
            out.push(s.promote(order)?, label)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, state: ProductState, label: impl Into<String>) -> Result<()> {
        if state.dims() != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} in a set over {:?}",
                state.dims(),
                self.dims
            )));
        }
        let state = if state.order() == self.order {
            state
        } else {
            state.promote(self.order)?
        };
        self.states.push(state);
        self.labels.push(label.into());
        Ok(())
    }

    pub fn extend(&mut self, other: OPSet) -> Result<()> {
        for (s, l) in other.states.into_iter().zip(other.labels) {
            self.push(s, l)?;
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProductState, &str)> {
        self.states.iter().zip(self.labels.iter().map(String::as_str))
    }

    /// Full vectors of every member.
    pub fn vectors(&self) -> Vec<CycVector> {
        self.states.iter().map(ProductState::vector).collect()
    }

    pub fn promote(&self, order: u32) -> Result<OPSet> {
        Ok(OPSet {
            dims: self.dims.clone(),
            order,
            states: self
                .states
                .iter()
                .map(|s| s.promote(order))
                .collect::<Result<_>>()?,
            labels: self.labels.clone(),
        })
    }

    /// Exact pairwise orthogonality; reports the first offending pair.
    pub fn verify_orthogonality(&self) -> Result<()> {
        for i in 0..self.states.len() {
            for j in i + 1..self.states.len() {
                if !self.states[i].inner(&self.states[j])?.is_zero() {
                    return Err(Error::NotOrthogonal(format!(
                        "members {i} ({}) and {j} ({}) overlap",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_orthogonal(&self) -> bool {
        self.verify_orthogonality().is_ok()
    }
}

/// The k×k matrix (w_k^{ae}), over Q(ζ_k) (Q for k ≤ 2).
pub fn fourier_matrix(k: usize) -> CycMatrix {
    assert!(k >= 1, "Fourier matrix of size 0");
    let order = if k <= 2 { 1 } else { k as u32 };
    let mut m = CycMatrix::zeros(k, k, order);
    for a in 0..k {
        for e in 0..k {
            let v = if k == 2 {
                CycNumber::from_int(if a * e % 2 == 0 { 1 } else { -1 }, 1)
            } else if k == 1 {
                CycNumber::one(1)
            } else {
                embed_root(k as u32, (a * e) as i64, order).expect("k divides k")
            };
            m.set(a, e, v);
        }
    }
    m
}

/// Checks a coefficient matrix: square, first row all ones, rows orthogonal.
pub fn check_coefficient_matrix(m: &CycMatrix) -> Result<()> {
    let k = m.nrows();
    if m.ncols() != k || k == 0 {
        return Err(Error::InvalidCoefficients(format!(
            "expected a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !(0..k).all(|e| m.get(0, e).is_one()) {
        return Err(Error::InvalidCoefficients("first row is not all ones".into()));
    }
    let rows = m.rows();
    for a in 0..k {
        if rows[a].is_zero() {
            return Err(Error::InvalidCoefficients(format!("row {a} is zero")));
        }
        for b in a + 1..k {
            if !inner_product(&rows[a], &rows[b])?.is_zero() {
                return Err(Error::InvalidCoefficients(format!("rows {a} and {b} not orthogonal")));
            }
        }
    }
    Ok(())
}

/// Coefficient matrices used for every tile.
#[derive(Clone, Debug, Default)]
pub enum CoefficientSpec {
    /// (w_k^{ae}) for every tile side.
    #[default]
    Fourier,
    /// One matrix per party for every tile, indexed `[tile][party]`.
    Custom(Vec<Vec<CycMatrix>>),
}

impl CoefficientSpec {
    /// Validates the spec against a structure and returns the common order.
    pub fn order_for(&self, ts: &TileStructure) -> Result<u32> {
        match self {
            CoefficientSpec::Fourier => Ok(ts.natural_order()),
            CoefficientSpec::Custom(per_tile) => {
                if per_tile.len() != ts.num_tiles() {
                    return Err(Error::InvalidCoefficients(format!(
                        "{} tile entries for {} tiles",
                        per_tile.len(),
                        ts.num_tiles()
                    )));
                }
                for (i, (mats, tile)) in per_tile.iter().zip(ts.tiles()).enumerate() {
                    check_tile_matrices(tile, mats).map_err(|e| {
                        Error::InvalidCoefficients(format!("tile {i}: {e}"))
                    })?;
                }
                Ok(lcm_orders(per_tile.iter().flatten().map(CycMatrix::order)))
            }
        }
    }

    pub fn matrices(&self, ts: &TileStructure, tile: usize) -> Vec<CycMatrix> {
        match self {
            CoefficientSpec::Fourier => ts.tile(tile).sides().into_iter().map(fourier_matrix).collect(),
            CoefficientSpec::Custom(per_tile) => per_tile[tile].clone(),
        }
    }
}

fn check_tile_matrices(tile: &Tile, mats: &[CycMatrix]) -> Result<()> {
    if mats.len() != tile.subsets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} matrices for {} parties",
            mats.len(),
            tile.subsets.len()
        )));
    }
    for (j, (m, s)) in mats.iter().zip(&tile.subsets).enumerate() {
        if m.nrows() != s.len() {
            return Err(Error::DimensionMismatch(format!(
                "party {j}: {}×{} matrix for a side of length {}",
                m.nrows(),
                m.ncols(),
                s.len()
            )));
        }
        check_coefficient_matrix(m)?;
    }
    Ok(())
}

fn promote_matrix(m: &CycMatrix, order: u32) -> Result<CycMatrix> {
    let rows: Vec<CycVector> = m.rows().iter().map(|r| r.promote(order)).collect::<Result<_>>()?;
    CycMatrix::from_rows(order, &rows)
}

/// The Π k_j states of one tile, indexed by (a_1, …, a_n) in mixed radix.
pub fn tile_ops(ts: &TileStructure, tile: usize, matrices: &[CycMatrix], order: u32) -> Result<OPSet> {
    let t = ts.tile(tile);
    check_tile_matrices(t, matrices)?;
    let dims = ts.dims().to_vec();
    let mats: Vec<CycMatrix> = matrices
        .iter()
        .map(|m| promote_matrix(m, order))
        .collect::<Result<_>>()?;
    // factor for party j and coefficient row a
    let factor = |j: usize, a: usize| -> CycVector {
        let mut v = CycVector::zeros(dims[j], order);
        for (e, &x) in t.subsets[j].iter().enumerate() {
            v.set(x, mats[j].get(a, e).clone());
        }
        v
    };
    let sides = t.sides();
    let total: usize = sides.iter().product();
    let mut out = OPSet::new(dims.clone(), order);
    for flat in 0..total {
        let idx = cell_coords(&sides, flat);
        let factors = idx.iter().enumerate().map(|(j, &a)| factor(j, a)).collect();
        let label = format!(
            "tile:{tile},idx:({})",
            idx.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        );
        out.push(ProductState::new(factors)?, label)?;
    }
    Ok(out)
}

/// The union of all tile sets: an orthogonal basis of the whole space.
pub fn build_opb(ts: &TileStructure, spec: &CoefficientSpec) -> Result<OPSet> {
    ts.ensure_valid()?;
    let order = spec.order_for(ts)?;
    let mut out = OPSet::new(ts.dims().to_vec(), order);
    for i in 0..ts.num_tiles() {
        out.extend(tile_ops(ts, i, &spec.matrices(ts, i), order)?)?;
    }
    Ok(out)
}

/// The all-ones product state.
pub fn stopper(dims: &[usize], order: u32) -> ProductState {
    ProductState::new(
        dims.iter()
            .map(|&d| CycVector::from_ints(&vec![1; d], order))
            .collect(),
    )
    .expect("nonzero factors")
}

/// The all-ones state on one tile (zero elsewhere).
pub fn tile_indicator(ts: &TileStructure, tile: usize, order: u32) -> ProductState {
    let t = ts.tile(tile);
    let factors = ts
        .dims()
        .iter()
        .zip(&t.subsets)
        .map(|(&d, s)| {
            let mut v = CycVector::zeros(d, order);
            for &x in s {
                v.set(x, CycNumber::one(order));
            }
            v
        })
        .collect();
    ProductState::new(factors).expect("nonempty tile")
}

/// Every tile set without its all-coefficient-zero member, followed by the
/// stopper. Has `D - s + 1` members.
pub fn build_s(ts: &TileStructure, spec: &CoefficientSpec) -> Result<OPSet> {
    let mut out = reduced_tile_sets(ts, spec)?;
    let order = out.order();
    out.push(stopper(ts.dims(), order), "stopper")?;
    Ok(out)
}

/// Every tile set without its all-coefficient-zero member.
pub fn reduced_tile_sets(ts: &TileStructure, spec: &CoefficientSpec) -> Result<OPSet> {
    ts.ensure_valid()?;
    let order = spec.order_for(ts)?;
    let mut out = OPSet::new(ts.dims().to_vec(), order);
    for i in 0..ts.num_tiles() {
        let set = tile_ops(ts, i, &spec.matrices(ts, i), order)?;
        for (k, (s, l)) in set.iter().enumerate() {
            if k > 0 {
                out.push(s.clone(), l)?;
            }
        }
    }
    Ok(out)
}

/// Reshapes a full vector into the `h1 × h2` matrix of a bipartition.
pub fn flatten_vector(v: &CycVector, dims: &[usize], bp: &Bipartition) -> Result<CycMatrix> {
    let cells: usize = dims.iter().product();
    if v.len() != cells {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} over dims {dims:?}",
            v.len()
        )));
    }
    if bp.parties() != dims.len() {
        return Err(Error::InvalidBipartition("party count mismatch".into()));
    }
    let mut m = CycMatrix::zeros(bp.h1(dims), bp.h2(dims), v.order());
    for (c, (r, k)) in bp.cell_map(dims).into_iter().enumerate() {
        if !v.get(c).is_zero() {
            m.set(r, k, v.get(c).clone());
        }
    }
    Ok(m)
}

pub fn flatten_state(s: &ProductState, bp: &Bipartition) -> Result<CycMatrix> {
    flatten_vector(&s.vector(), &s.dims(), bp)
}

/// A built-in instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: &'static str,
    pub description: &'static str,
    pub structure: TileStructure,
    pub set: OPSet,
}

pub const BUILTIN_NAMES: [&str; 5] = ["fig1-3x4", "upb-333", "upb-3333", "tiles-3x3", "w-333"];

fn tile(s: &[&[usize]]) -> Tile {
    Tile::new(s.iter().map(|x| x.to_vec()).collect())
}

pub fn fig1_structure() -> TileStructure {
    TileStructure::partition(
        vec![3, 4],
        vec![
            tile(&[&[0], &[0, 1]]),
            tile(&[&[0], &[2]]),
            tile(&[&[0, 1], &[3]]),
            tile(&[&[2], &[1, 2, 3]]),
            tile(&[&[1, 2], &[0]]),
            tile(&[&[1], &[1, 2]]),
        ],
    )
    .expect("valid layout")
}

/// The five-tile 3×3 layout behind the bipartite Tiles UPB.
pub fn tiles_3x3_structure() -> TileStructure {
    TileStructure::partition(
        vec![3, 3],
        vec![
            tile(&[&[0], &[0, 1]]),
            tile(&[&[0, 1], &[2]]),
            tile(&[&[2], &[1, 2]]),
            tile(&[&[1, 2], &[0]]),
            tile(&[&[1], &[1]]),
        ],
    )
    .expect("valid layout")
}

const ETA: &[usize] = &[0, 1];
const XI: &[usize] = &[1, 2];

pub fn upb_333_structure() -> TileStructure {
    TileStructure::partition(
        vec![3, 3, 3],
        vec![
            tile(&[XI, &[0], ETA]),
            tile(&[XI, ETA, &[2]]),
            tile(&[&[2], XI, ETA]),
            tile(&[ETA, &[2], XI]),
            tile(&[ETA, XI, &[0]]),
            tile(&[&[0], ETA, XI]),
            tile(&[&[0], &[0], &[0]]),
            tile(&[&[1], &[1], &[1]]),
            tile(&[&[2], &[2], &[2]]),
        ],
    )
    .expect("valid layout")
}

pub fn upb_3333_structure() -> TileStructure {
    TileStructure::partition(
        vec![3, 3, 3, 3],
        vec![
            tile(&[XI, ETA, &[0], XI]),
            tile(&[XI, &[2], ETA, ETA]),
            tile(&[XI, XI, XI, &[2]]),
            tile(&[XI, &[2], &[0], &[2]]),
            tile(&[&[2], ETA, XI, ETA]),
            tile(&[&[2], ETA, &[0], &[0]]),
            tile(&[&[2], &[0], XI, &[2]]),
            tile(&[&[2], &[2], &[2], ETA]),
            tile(&[ETA, XI, &[2], ETA]),
            tile(&[ETA, &[0], XI, XI]),
            tile(&[ETA, ETA, ETA, &[0]]),
            tile(&[ETA, &[0], &[2], &[0]]),
            tile(&[&[0], XI, ETA, XI]),
            tile(&[&[0], XI, &[2], &[2]]),
            tile(&[&[0], &[2], ETA, &[0]]),
            tile(&[&[0], &[0], &[0], XI]),
            tile(&[&[1], &[1], &[1], &[1]]),
        ],
    )
    .expect("valid layout")
}

/// The 3×3×3 structure whose C = 0 layer is the 3×3 Tiles layout and whose
/// other two layers are split into single cells.
pub fn w_333_structure() -> TileStructure {
    let mut tiles: Vec<Tile> = tiles_3x3_structure()
        .tiles()
        .iter()
        .map(|t| Tile::new(vec![t.subsets[0].clone(), t.subsets[1].clone(), vec![0]]))
        .collect();
    for c in 1..3 {
        for a in 0..3 {
            for b in 0..3 {
                tiles.push(tile(&[&[a], &[b], &[c]]));
            }
        }
    }
    TileStructure::partition(vec![3, 3, 3], tiles).expect("valid layout")
}

fn basis_vector(d: usize, i: usize, order: u32) -> CycVector {
    CycVector::unit(d, i, order)
}

/// The W set: the Tiles UPB tensored with |0⟩_C, plus all computational
/// basis states with C ∈ {1, 2}.
pub fn w_333_set() -> Result<OPSet> {
    let tiles = build_s(&tiles_3x3_structure(), &CoefficientSpec::Fourier)?;
    let mut out = OPSet::new(vec![3, 3, 3], tiles.order());
    for (i, (s, _)) in tiles.iter().enumerate() {
        let mut factors = s.factors().to_vec();
        factors.push(basis_vector(3, 0, s.order()));
        out.push(ProductState::new(factors)?, format!("A1:psi{}", i + 1))?;
    }
    for c in 1..3 {
        for a in 0..3 {
            for b in 0..3 {
                let s = ProductState::new(vec![
                    basis_vector(3, a, 1),
                    basis_vector(3, b, 1),
                    basis_vector(3, c, 1),
                ])?;
                out.push(s, format!("A{}:|{a}{b}{c}>", c + 1))?;
            }
        }
    }
    Ok(out)
}

pub fn builtin(name: &str) -> Result<Instance> {
    let standard = |name: &'static str, description: &'static str, ts: TileStructure| -> Result<Instance> {
        let set = build_s(&ts, &CoefficientSpec::Fourier)?;
        Ok(Instance {
            name,
            description,
            structure: ts,
            set,
        })
    };
    match name {
        "fig1-3x4" => standard(
            "fig1-3x4",
            "six-tile structure in C^3⊗C^4; reduced set is an SUCPB but not a UPB",
            fig1_structure(),
        ),
        "upb-333" => standard(
            "upb-333",
            "19-state UPB in C^3⊗C^3⊗C^3, an SUCPB in every bipartition",
            upb_333_structure(),
        ),
        "upb-3333" => standard(
            "upb-3333",
            "65-state UPB in (C^3)^⊗4, an SUCPB in every bipartition",
            upb_3333_structure(),
        ),
        "tiles-3x3" => standard(
            "tiles-3x3",
            "five-state Tiles UPB in C^3⊗C^3",
            tiles_3x3_structure(),
        ),
        "w-333" => Ok(Instance {
            name: "w-333",
            description: "23-state UPB in C^3⊗C^3⊗C^3 that is completable in the AB|C cut",
            structure: w_333_structure(),
            set: w_333_set()?,
        }),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}
