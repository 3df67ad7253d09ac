//! Product states in the orthogonal complement of a tile-generated set.
//!
//! The complement of `S = (reduced tile sets) ∪ extras` is the space of
//! tile-constant tensors `Σ a_i 1_{t_i}` satisfying one linear constraint
//! per extra state (members inside a single tile contribute nothing). A product state in it has a support that is a union of
//! tiles forming a box (or a rectangle after flattening); on such a support
//! the coefficients satisfy a binomial system, which is parametrised with
//! an integer Smith form before the linear constraints are imposed.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::json::{scalar_to_json, vector_to_json};
use crate::scalar::{
    integer_lattice_kernel, lcm_orders, rank_of, CycMatrix, CycNumber, CycVector,
};
use crate::states::{build_s, CoefficientSpec, OPSet};
use crate::tiles::{cell_coords, cell_index, Bipartition, TileStructure};

const MAX_COSETS: i64 = 4096;

/// Which notion of "product" is tested.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Fully product over all parties.
    Multipartite,
    /// Product across one cut.
    Bipartite(Bipartition),
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Multipartite => "multipartite".into(),
            Mode::Bipartite(bp) => bp.label(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Mode::Multipartite => json!("multipartite"),
            Mode::Bipartite(bp) => json!({"C": bp.side_c(), "D": bp.side_d()}),
        }
    }
}

/// The party system a mode induces: party dims and per-cell coordinates.
#[derive(Clone, Debug)]
struct Coords {
    dims: Vec<usize>,
    of_cell: Vec<Vec<usize>>,
    // cell in mode order -> original cell
    to_cell: Vec<usize>,
}

impl Coords {
    fn new(ts_dims: &[usize], mode: &Mode) -> Result<Coords> {
        let cells: usize = ts_dims.iter().product();
        let (dims, of_cell): (Vec<usize>, Vec<Vec<usize>>) = match mode {
            Mode::Multipartite => (
                ts_dims.to_vec(),
                (0..cells).map(|c| cell_coords(ts_dims, c)).collect(),
            ),
            Mode::Bipartite(bp) => {
                if bp.parties() != ts_dims.len() {
                    return Err(Error::InvalidBipartition(format!(
                        "{} over {} parties",
                        bp.label(),
                        ts_dims.len()
                    )));
                }
                (
                    vec![bp.h1(ts_dims), bp.h2(ts_dims)],
                    bp.cell_map(ts_dims).into_iter().map(|(r, c)| vec![r, c]).collect(),
                )
            }
        };
        let mut to_cell = vec![0; cells];
        for (c, x) in of_cell.iter().enumerate() {
            to_cell[cell_index(&dims, x)] = c;
        }
        Ok(Coords { dims, of_cell, to_cell })
    }
}

/// The complement of a set as constrained tile-constant tensors.
#[derive(Clone, Debug)]
pub struct ComplementModel {
    ts: TileStructure,
    order: u32,
    areas: Vec<usize>,
    constraints: Vec<CycVector>,
    space: Vec<CycVector>,
    members: Vec<CycVector>,
}

/// Standard model: `build_S(ts)` plus tile-constant extra states.
pub fn complement_model(ts: &TileStructure, extras: &[CycVector]) -> Result<ComplementModel> {
    ComplementModel::new(ts, extras)
}

impl ComplementModel {
    /// Model of `build_S(ts) ∪ extras` (Fourier coefficients; the complement
    /// does not depend on that choice).
    pub fn new(ts: &TileStructure, extras: &[CycVector]) -> Result<ComplementModel> {
        let set = build_s(ts, &CoefficientSpec::Fourier)?;
        let mut members = set.vectors();
        for (k, e) in extras.iter().enumerate() {
            if e.len() != ts.cells() {
                return Err(Error::DimensionMismatch(format!(
                    "extra state {k} has length {}, expected {}",
                    e.len(),
                    ts.cells()
                )));
            }
            if tile_values(ts, e).is_none() {
                return Err(Error::NotTileConstant(format!("extra state {k}")));
            }
            members.push(e.clone());
        }
        ComplementModel::from_vectors(ts, members)
    }

    /// Model of an arbitrary set, exact whenever its complement is constant
    /// on tiles; checked against the exact span.
    pub fn from_set(ts: &TileStructure, set: &OPSet) -> Result<ComplementModel> {
        if set.dims() != ts.dims() {
            return Err(Error::DimensionMismatch(format!(
                "set over {:?}, structure over {:?}",
                set.dims(),
                ts.dims()
            )));
        }
        ComplementModel::from_vectors(ts, set.vectors())
    }

    fn from_vectors(ts: &TileStructure, members: Vec<CycVector>) -> Result<ComplementModel> {
        ts.ensure_valid()?;
        let order = lcm_orders(
            members
                .iter()
                .map(CycVector::order)
                .chain(std::iter::once(ts.natural_order())),
        );
        let members: Vec<CycVector> = members
            .iter()
            .map(|m| m.promote(order))
            .collect::<Result<_>>()?;
        let areas: Vec<usize> = ts.tiles().iter().map(|t| t.area()).collect();
        let s = ts.num_tiles();
        // ⟨m, Σ a_i 1_{t_i}⟩ = Σ_i a_i Σ_{x ∈ t_i} conj(m_x)
        let owners = ts.cell_owners();
        let mut constraints: Vec<CycVector> = Vec::new();
        for m in &members {
            let mut c = vec![CycNumber::zero(order); s];
            for &x in &m.support() {
                c[owners[x]] = &c[owners[x]] + &m.get(x).conj();
            }
            let c = CycVector::new(order, c)?;
            if !c.is_zero() && !constraints.iter().any(|d| d.is_proportional(&c)) {
                constraints.push(c);
            }
        }
        let space = if constraints.is_empty() {
            (0..s).map(|i| CycVector::unit(s, i, order)).collect()
        } else {
            CycMatrix::from_rows(order, &constraints)?.kernel_basis()
        };
        let model = ComplementModel {
            ts: ts.clone(),
            order,
            areas,
            constraints,
            space,
            members,
        };
        model.cross_check()?;
        Ok(model)
    }

    /// Exact kernel of the span matrix equals the modelled space.
    fn cross_check(&self) -> Result<()> {
        let full = self.complement_basis();
        for (k, v) in full.iter().enumerate() {
            for (j, m) in self.members.iter().enumerate() {
                if !crate::scalar::inner_product(m, v)?.is_zero() {
                    return Err(Error::ModelMismatch(format!(
                        "modelled complement vector {k} is not orthogonal to member {j}"
                    )));
                }
            }
        }
        let rank = rank_of(&self.members, self.order);
        let kernel_dim = self.ts.cells() - rank;
        if kernel_dim != self.space.len() {
            return Err(Error::ModelMismatch(format!(
                "span matrix kernel has dimension {kernel_dim}, tile model has {}",
                self.space.len()
            )));
        }
        Ok(())
    }

    pub fn structure(&self) -> &TileStructure {
        &self.ts
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn areas(&self) -> &[usize] {
        &self.areas
    }

    /// Rows `c` of the constraints `Σ_i c_i a_i = 0`.
    pub fn constraints(&self) -> &[CycVector] {
        &self.constraints
    }

    /// Dimension of the complement.
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    /// Basis of the constrained coefficient space (length-s vectors).
    pub fn coefficient_basis(&self) -> &[CycVector] {
        &self.space
    }

    /// Basis of the complement as full tensors.
    pub fn complement_basis(&self) -> Vec<CycVector> {
        self.space.iter().map(|a| self.expand(a)).collect()
    }

    /// Members of the underlying set, as full vectors.
    pub fn members(&self) -> &[CycVector] {
        &self.members
    }

    /// The tensor taking value `a_i` on tile `i`.
    pub fn expand(&self, a: &CycVector) -> CycVector {
        let mut v = CycVector::zeros(self.ts.cells(), a.order());
        for (c, &t) in self.ts.cell_owners().iter().enumerate() {
            v.set(c, a.get(t).clone());
        }
        v
    }

    /// Tiles whose coefficient vanishes on the whole complement.
    pub fn forced_zero(&self) -> Vec<bool> {
        (0..self.ts.num_tiles())
            .map(|i| self.space.iter().all(|b| b.get(i).is_zero()))
            .collect()
    }

    /// True when `a` satisfies every constraint.
    pub fn satisfies(&self, a: &CycVector) -> Result<bool> {
        for c in &self.constraints {
            let order = lcm_orders([c.order(), a.order()]);
            let (c, a) = (c.promote(order)?, a.promote(order)?);
            let mut acc = CycNumber::zero(order);
            for (x, y) in c.entries().iter().zip(a.entries()) {
                acc = &acc + &(x * y);
            }
            if !acc.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The coarsest box partition on whose cells the complement of `set` is
/// constant: cells are grouped by their complement values, and groups that
/// are not boxes are split into single cells.
pub fn infer_structure(set: &OPSet) -> Result<TileStructure> {
    let dims = set.dims().to_vec();
    let cells: usize = dims.iter().product();
    if cells > crate::tiles::MAX_CELLS {
        return Err(Error::InvalidStructure(format!("{cells} cells exceed the cap")));
    }
    let basis = crate::scalar::orthogonal_complement(&set.vectors(), cells, set.order());
    let mut groups: Vec<(Vec<CycNumber>, Vec<usize>)> = Vec::new();
    for x in 0..cells {
        let key: Vec<CycNumber> = basis.iter().map(|b| b.get(x).clone()).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(x),
            None => groups.push((key, vec![x])),
        }
    }
    let mut tiles = Vec::new();
    for (_, members) in groups {
        let mut subsets = vec![Vec::new(); dims.len()];
        for &x in &members {
            for (j, c) in cell_coords(&dims, x).into_iter().enumerate() {
                subsets[j].push(c);
            }
        }
        let tile = crate::tiles::Tile::new(subsets);
        if tile.area() == members.len() {
            tiles.push(tile);
        } else {
            for &x in &members {
                tiles.push(crate::tiles::Tile::new(
                    cell_coords(&dims, x).into_iter().map(|c| vec![c]).collect(),
                ));
            }
        }
    }
    tiles.sort_by_key(|t| t.cells(&dims)[0]);
    TileStructure::partition(dims, tiles)
}

/// Per-tile values when `v` is constant on every tile.
fn tile_values(ts: &TileStructure, v: &CycVector) -> Option<Vec<CycNumber>> {
    let mut values: Vec<Option<CycNumber>> = vec![None; ts.num_tiles()];
    for (c, &t) in ts.cell_owners().iter().enumerate() {
        match &values[t] {
            None => values[t] = Some(v.get(c).clone()),
            Some(x) if x == v.get(c) => {}
            Some(_) => return None,
        }
    }
    values.into_iter().collect()
}

/// A union of tiles forming a box in the mode's party system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCandidate {
    pub tiles: Vec<usize>,
    /// Per-party index sets of the box.
    pub box_sides: Vec<Vec<usize>>,
}

fn projections(ts: &TileStructure, coords: &Coords) -> Vec<Vec<u128>> {
    let owners = ts.cell_owners();
    let mut out = vec![vec![0u128; coords.dims.len()]; ts.num_tiles()];
    for (c, &t) in owners.iter().enumerate() {
        for (j, &x) in coords.of_cell[c].iter().enumerate() {
            out[t][j] |= 1u128 << x;
        }
    }
    out
}

/// All tile subsets whose union is a box (multipartite) or a rectangle
/// (bipartite), singletons and the full set included.
pub fn enumerate_supports(ts: &TileStructure, mode: &Mode) -> Result<Vec<SupportCandidate>> {
    enumerate_supports_avoiding(ts, mode, &vec![false; ts.num_tiles()])
}

/// As [`enumerate_supports`], never using tiles flagged in `excluded`.
pub fn enumerate_supports_avoiding(
    ts: &TileStructure,
    mode: &Mode,
    excluded: &[bool],
) -> Result<Vec<SupportCandidate>> {
    let coords = Coords::new(ts.dims(), mode)?;
    let proj = projections(ts, &coords);
    let areas: Vec<usize> = ts.tiles().iter().map(|t| t.area()).collect();
    let n = coords.dims.len();

    struct Walk<'a> {
        proj: &'a [Vec<u128>],
        areas: &'a [usize],
        excluded: &'a [bool],
        n: usize,
        out: Vec<Vec<usize>>,
    }
    fn meets(a: &[u128], b: &[u128]) -> bool {
        a.iter().zip(b).all(|(x, y)| x & y != 0)
    }
    impl Walk<'_> {
        fn go(&mut self, i: usize, chosen: &mut Vec<usize>, boxm: &[u128], area: usize, skipped: &mut Vec<usize>) {
            if i == self.proj.len() {
                let volume: usize = boxm.iter().map(|m| m.count_ones() as usize).product();
                if !chosen.is_empty() && volume == area {
                    self.out.push(chosen.clone());
                }
                return;
            }
            let empty = chosen.is_empty();
            // exclude tile i
            if empty || !meets(&self.proj[i], boxm) {
                skipped.push(i);
                self.go(i + 1, chosen, boxm, area, skipped);
                skipped.pop();
            }
            if self.excluded[i] {
                return;
            }
            // include tile i
            let grown: Vec<u128> = if empty {
                self.proj[i].clone()
            } else {
                boxm.iter().zip(&self.proj[i]).map(|(a, b)| a | b).collect()
            };
            if skipped.iter().any(|&j| meets(&self.proj[j], &grown)) {
                return;
            }
            chosen.push(i);
            self.go(i + 1, chosen, &grown, area + self.areas[i], skipped);
            chosen.pop();
        }
    }
    let mut walk = Walk {
        proj: &proj,
        areas: &areas,
        excluded,
        n,
        out: Vec::new(),
    };
    let start = vec![0u128; walk.n];
    walk.go(0, &mut Vec::new(), &start, 0, &mut Vec::new());
    let mut out: Vec<SupportCandidate> = walk
        .out
        .into_iter()
        .map(|tiles| {
            let mut sides = vec![0u128; n];
            for &t in &tiles {
                for j in 0..n {
                    sides[j] |= proj[t][j];
                }
            }
            SupportCandidate {
                tiles,
                box_sides: sides.iter().map(|&m| bits(m)).collect(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.tiles.len().cmp(&b.tiles.len()).then_with(|| a.tiles.cmp(&b.tiles)));
    Ok(out)
}

fn bits(m: u128) -> Vec<usize> {
    (0..128).filter(|&b| m >> b & 1 == 1).collect()
}

/// How a support's solutions look.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// No product state has exactly this support.
    Empty,
    /// A dense open subset of a linear space of coefficient vectors.
    Linear,
    /// A Laurent hypersurface (or whole component) of a torus orbit.
    Toric,
    /// Existence could not be decided exactly.
    Inconclusive,
}

/// An explicit product state from a family.
#[derive(Clone, Debug)]
pub enum Witness {
    Exact {
        /// Tile coefficients `a_i`.
        coefficients: CycVector,
        /// One factor per party of the mode.
        factors: Vec<CycVector>,
    },
    /// Used only when a Laurent root lies outside the working field.
    Numeric {
        coefficients: Vec<Complex64>,
        factors: Vec<Vec<Complex64>>,
    },
}

impl Witness {
    pub fn is_exact(&self) -> bool {
        matches!(self, Witness::Exact { .. })
    }

    pub fn coefficients_c64(&self) -> Vec<Complex64> {
        match self {
            Witness::Exact { coefficients, .. } => coefficients.to_c64(),
            Witness::Numeric { coefficients, .. } => coefficients.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Witness::Exact { coefficients, factors } => json!({
                "exact": true,
                "coefficients": vector_to_json(coefficients),
                "factors": factors.iter().map(vector_to_json).collect::<Vec<_>>(),
            }),
            Witness::Numeric { coefficients, factors } => {
                let c = |z: &Complex64| json!([z.re, z.im]);
                json!({
                    "exact": false,
                    "coefficients": coefficients.iter().map(c).collect::<Vec<_>>(),
                    "factors": factors.iter().map(|f| f.iter().map(c).collect::<Vec<_>>()).collect::<Vec<_>>(),
                })
            }
        }
    }
}

/// Product states whose support is exactly one candidate.
#[derive(Clone, Debug)]
pub struct SolutionFamily {
    pub support: Vec<usize>,
    pub kind: FamilyKind,
    /// Coefficient vectors spanning the family (exact span for linear
    /// families, an upper bound for toric ones).
    pub basis: Vec<CycVector>,
    /// Exact points of the family; they span a lower bound.
    pub samples: Vec<CycVector>,
    pub span_exact: bool,
    pub witness: Option<Witness>,
    /// Number of root-of-unity cosets of the binomial solution group.
    pub cosets: usize,
    pub diagnostics: Vec<String>,
}

impl SolutionFamily {
    pub fn is_nonempty(&self) -> bool {
        matches!(self.kind, FamilyKind::Linear | FamilyKind::Toric)
    }

    fn empty(support: Vec<usize>, cosets: usize) -> SolutionFamily {
        SolutionFamily {
            support,
            kind: FamilyKind::Empty,
            basis: Vec::new(),
            samples: Vec::new(),
            span_exact: true,
            witness: None,
            cosets,
            diagnostics: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "support": self.support,
            "kind": self.kind,
            "dimension": rank_of_any(&self.basis),
            "span_exact": self.span_exact,
            "basis": self.basis.iter().map(vector_to_json).collect::<Vec<_>>(),
            "witness": self.witness.as_ref().map(Witness::to_json),
            "diagnostics": self.diagnostics,
        })
    }
}

fn rank_of_any(vs: &[CycVector]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let order = lcm_orders(vs.iter().map(CycVector::order));
    let vs: Vec<CycVector> = vs.iter().map(|v| v.promote(order).expect("divides")).collect();
    rank_of(&vs, order)
}

/// x^e for any integer e (x ≠ 0 when e < 0).
fn pow_i(x: &CycNumber, e: i64) -> Result<CycNumber> {
    let base = if e < 0 { x.inv()? } else { x.clone() };
    let mut e = e.unsigned_abs();
    let mut acc = CycNumber::one(x.order());
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    Ok(acc)
}

/// The binomial solution group of a support in monomial form.
struct Parametrisation {
    /// Free exponent vector per support tile.
    free: Vec<Vec<i64>>,
    /// Torsion exponents per support tile, one per invariant factor > 1.
    torsion: Vec<Vec<i64>>,
    factors: Vec<i64>,
}

fn parametrise(ts: &TileStructure, coords: &Coords, support: &[usize], sides: &[Vec<usize>]) -> Result<Parametrisation> {
    // variable index of (party, coordinate)
    let mut var = BTreeMap::new();
    for (j, side) in sides.iter().enumerate() {
        for &x in side {
            let k = var.len();
            var.insert((j, x), k);
        }
    }
    let m = var.len();
    let exps = |cell: usize| -> Vec<i64> {
        let mut e = vec![0i64; m];
        for (j, &x) in coords.of_cell[cell].iter().enumerate() {
            e[var[&(j, x)]] += 1;
        }
        e
    };
    let mut cells_of: BTreeMap<usize, Vec<usize>> = support.iter().map(|&t| (t, Vec::new())).collect();
    for (c, &t) in ts.cell_owners().iter().enumerate() {
        if let Some(v) = cells_of.get_mut(&t) {
            v.push(c);
        }
    }
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut refs = Vec::with_capacity(support.len());
    for &t in support {
        let cells = &cells_of[&t];
        let r = exps(cells[0]);
        for &c in &cells[1..] {
            let row: Vec<i64> = exps(c).iter().zip(&r).map(|(a, b)| a - b).collect();
            if !rows.contains(&row) {
                rows.push(row);
            }
        }
        refs.push(r);
    }
    let lk = integer_lattice_kernel(&rows, m)?;
    let rank = lk.rank();
    let q = &lk.transform;
    let exponent = |e: &[i64], t: usize| -> Result<i64> {
        let mut acc = 0i64;
        for (j, &ej) in e.iter().enumerate() {
            acc = ej
                .checked_mul(q[j][t])
                .and_then(|p| acc.checked_add(p))
                .ok_or_else(|| Error::Overflow("monomial exponent".into()))?;
        }
        Ok(acc)
    };
    let tors_idx: Vec<usize> = (0..rank).filter(|&t| lk.invariant_factors[t] > 1).collect();
    let mut free = Vec::new();
    let mut torsion = Vec::new();
    for r in &refs {
        free.push((rank..m).map(|t| exponent(r, t)).collect::<Result<Vec<_>>>()?);
        torsion.push(tors_idx.iter().map(|&t| exponent(r, t)).collect::<Result<Vec<_>>>()?);
    }
    Ok(Parametrisation {
        free,
        torsion,
        factors: tors_idx.iter().map(|&t| lk.invariant_factors[t]).collect(),
    })
}

/// Root-of-unity patterns ω_i, one per distinct torsion coset.
fn coset_patterns(p: &Parametrisation, order: u32) -> Result<Vec<Vec<CycNumber>>> {
    let count = p.factors.iter().try_fold(1i64, |acc, &f| acc.checked_mul(f));
    match count {
        Some(c) if c <= MAX_COSETS => {}
        _ => {
            return Err(Error::HypothesisNotMet(format!(
                "torsion group of order above {MAX_COSETS}"
            )))
        }
    }
    let mut patterns: Vec<Vec<CycNumber>> = Vec::new();
    let mut k = vec![0i64; p.factors.len()];
    loop {
        let pattern: Vec<CycNumber> = p
            .torsion
            .iter()
            .map(|h| {
                let e: i64 = h
                    .iter()
                    .zip(&k)
                    .zip(&p.factors)
                    .map(|((&hi, &ki), &f)| (hi * ki).rem_euclid(f) * (order as i64 / f))
                    .sum();
                CycNumber::zeta_power(e, order)
            })
            .collect();
        if !patterns.contains(&pattern) {
            patterns.push(pattern);
        }
        // next tuple
        let mut j = 0;
        loop {
            if j == k.len() {
                return Ok(patterns);
            }
            k[j] += 1;
            if k[j] < p.factors[j] {
                break;
            }
            k[j] = 0;
            j += 1;
        }
    }
}

/// Decides which product states have exactly the given support.
pub fn solve_support(candidate: &SupportCandidate, model: &ComplementModel, mode: &Mode) -> Result<SolutionFamily> {
    let coords = Coords::new(model.ts.dims(), mode)?;
    solve_with(candidate, model, &coords)
}

fn solve_with(candidate: &SupportCandidate, model: &ComplementModel, coords: &Coords) -> Result<SolutionFamily> {
    let support = candidate.tiles.clone();
    let p = match parametrise(&model.ts, coords, &support, &candidate.box_sides) {
        Ok(p) => p,
        Err(Error::Overflow(msg)) => return Ok(inconclusive(support, 0, msg)),
        Err(e) => return Err(e),
    };
    let order = lcm_orders(std::iter::once(model.order).chain(p.factors.iter().map(|&f| f as u32)));
    let patterns = match coset_patterns(&p, order) {
        Ok(ps) => ps,
        Err(Error::HypothesisNotMet(msg)) => return Ok(inconclusive(support, 0, msg)),
        Err(e) => return Err(e),
    };
    let constraints: Vec<CycVector> = model
        .constraints
        .iter()
        .map(|c| c.promote(order))
        .collect::<Result<_>>()?;

    // classes of equal free exponent
    let mut class_keys: Vec<Vec<i64>> = Vec::new();
    let mut class_of = Vec::with_capacity(support.len());
    for g in &p.free {
        let k = class_keys.iter().position(|x| x == g).unwrap_or_else(|| {
            class_keys.push(g.clone());
            class_keys.len() - 1
        });
        class_of.push(k);
    }
    let ncls = class_keys.len();
    let linear = {
        let rows: Vec<CycVector> = class_keys.iter().map(|g| CycVector::from_ints(g, 1)).collect();
        !class_keys[0].is_empty() && rank_of(&rows, 1) == ncls
    };

    let mut fam = SolutionFamily::empty(support.clone(), patterns.len());
    fam.kind = FamilyKind::Empty;
    let mut any_inconclusive = None;
    let mut any_toric = false;
    for omega in &patterns {
        // constraint coefficients on the class variables
        let reduced: Vec<CycVector> = constraints
            .iter()
            .map(|c| {
                let mut row = vec![CycNumber::zero(order); ncls];
                for (idx, &t) in support.iter().enumerate() {
                    let term = c.get(t) * &omega[idx];
                    row[class_of[idx]] = &row[class_of[idx]] + &term;
                }
                CycVector::new(order, row).expect("common order")
            })
            .collect();
        let kernel = if reduced.is_empty() {
            (0..ncls).map(|k| CycVector::unit(ncls, k, order)).collect()
        } else {
            CycMatrix::from_rows(order, &reduced)?.kernel_basis()
        };
        let to_a = |b: &CycVector| -> CycVector {
            let mut a = CycVector::zeros(model.ts.num_tiles(), order);
            for (idx, &t) in support.iter().enumerate() {
                a.set(t, &omega[idx] * b.get(class_of[idx]));
            }
            a
        };
        if linear {
            if kernel.is_empty() || (0..ncls).any(|k| kernel.iter().all(|b| b.get(k).is_zero())) {
                continue;
            }
            let b = generic_combination(&kernel, ncls, order);
            let a = to_a(&b);
            fam.basis.extend(kernel.iter().map(to_a));
            if fam.witness.is_none() {
                fam.witness = Some(exact_witness(model, coords, &a)?);
            }
            fam.samples.push(a);
            if fam.kind == FamilyKind::Empty {
                fam.kind = FamilyKind::Linear;
            }
            continue;
        }

        // toric: one Laurent polynomial per constraint
        let nonzero: Vec<&CycVector> = reduced.iter().filter(|r| !r.is_zero()).collect();
        if nonzero.iter().any(|r| r.support().len() == 1) {
            continue;
        }
        let distinct = {
            let mut d: Vec<&CycVector> = Vec::new();
            for r in &nonzero {
                if !d.iter().any(|x| x.is_proportional(r)) {
                    d.push(r);
                }
            }
            d
        };
        if distinct.len() > 1 {
            any_inconclusive = Some(format!(
                "{} independent Laurent conditions on a {}-parameter toric family",
                distinct.len(),
                class_keys[0].len()
            ));
            continue;
        }
        let equation = distinct.first().map(|r| (*r).clone());
        let points = toric_points(&class_keys, equation.as_ref(), order, kernel.len().max(1))?;
        if points.exact.is_empty() && points.numeric.is_none() {
            any_inconclusive = Some("no root of the Laurent condition was constructed".into());
            continue;
        }
        any_toric = true;
        fam.basis.extend(kernel.iter().map(to_a));
        for y in &points.exact {
            fam.samples.push(to_a(y));
        }
        if fam.witness.is_none() {
            if let Some(y) = points.exact.first() {
                let a = to_a(y);
                fam.witness = Some(exact_witness(model, coords, &a)?);
            } else if let Some(yc) = &points.numeric {
                let mut a = vec![Complex64::new(0.0, 0.0); model.ts.num_tiles()];
                for (idx, &t) in support.iter().enumerate() {
                    a[t] = omega[idx].to_c64() * yc[class_of[idx]];
                }
                fam.witness = Some(numeric_witness(model, coords, a));
            }
        }
        fam.kind = FamilyKind::Toric;
    }
    if let Some(msg) = any_inconclusive {
        if fam.kind == FamilyKind::Empty {
            return Ok(inconclusive(support, patterns.len(), msg));
        }
        fam.diagnostics.push(msg);
        fam.span_exact = false;
    }
    if any_toric {
        let upper = rank_of_any(&fam.basis);
        let lower = rank_of_any(&fam.samples);
        fam.span_exact = fam.span_exact && lower == upper;
        if !fam.span_exact {
            fam.diagnostics
                .push(format!("span bounded between {lower} and {upper}"));
        }
    }
    Ok(fam)
}

fn inconclusive(support: Vec<usize>, cosets: usize, msg: String) -> SolutionFamily {
    SolutionFamily {
        kind: FamilyKind::Inconclusive,
        span_exact: false,
        diagnostics: vec![msg],
        ..SolutionFamily::empty(support, cosets)
    }
}

/// A combination of `basis` with every coordinate nonzero; assumes no
/// coordinate vanishes identically.
fn generic_combination(basis: &[CycVector], len: usize, order: u32) -> CycVector {
    // Σ_j t^j b_j has each coordinate a nonzero polynomial in t of degree
    // < basis.len(), so some t ≤ len·basis.len() + 1 works.
    for t in 1..=(len * basis.len() + 2) as i64 {
        let mut acc = CycVector::zeros(len, order);
        let mut w = CycNumber::one(order);
        for b in basis {
            acc = acc.add(&b.scale(&w));
            w = &w * &CycNumber::from_int(t, order);
        }
        if acc.entries().iter().all(|x| !x.is_zero()) {
            return acc;
        }
    }
    unreachable!("a generic combination always exists")
}

struct ToricPoints {
    /// Class values y^{g_k} at exact points.
    exact: Vec<CycVector>,
    numeric: Option<Vec<Complex64>>,
}

/// Points of the torus orbit satisfying the (optional) Laurent equation
/// `Σ_k coef_k y^{g_k} = 0`, as class values.
fn toric_points(classes: &[Vec<i64>], equation: Option<&CycVector>, order: u32, want: usize) -> Result<ToricPoints> {
    let f = classes[0].len();
    let bases = base_points(f, want + 4);
    let eval = |y: &[CycNumber]| -> Result<CycVector> {
        let vals = classes
            .iter()
            .map(|g| {
                let mut acc = CycNumber::one(order);
                for (yt, &e) in y.iter().zip(g) {
                    if e != 0 {
                        acc = &acc * &pow_i(yt, e)?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        CycVector::new(order, vals)
    };
    let mut out = ToricPoints {
        exact: Vec::new(),
        numeric: None,
    };
    let Some(eq) = equation else {
        for b in &bases {
            let y: Vec<CycNumber> = b.iter().map(|&v| CycNumber::from_int(v, order)).collect();
            out.exact.push(eval(&y)?);
            if out.exact.len() >= want {
                break;
            }
        }
        return Ok(out);
    };
    'outer: for b in &bases {
        for dir in 0..f {
            // univariate in s = y_dir, others fixed to b
            let mut terms: BTreeMap<i64, CycNumber> = BTreeMap::new();
            for (k, g) in classes.iter().enumerate() {
                let c = eq.get(k);
                if c.is_zero() {
                    continue;
                }
                let mut coef = c.clone();
                for (t, &e) in g.iter().enumerate() {
                    if t != dir && e != 0 {
                        coef = &coef * &pow_i(&CycNumber::from_int(b[t], order), e)?;
                    }
                }
                let entry = terms.entry(g[dir]).or_insert_with(|| CycNumber::zero(order));
                *entry = &*entry + &coef;
            }
            terms.retain(|_, v| !v.is_zero());
            if terms.len() < 2 {
                continue;
            }
            let lo = *terms.keys().next().expect("nonempty");
            let poly: Vec<(usize, CycNumber)> = terms.into_iter().map(|(e, c)| ((e - lo) as usize, c)).collect();
            let fixed = |s: CycNumber| -> Vec<CycNumber> {
                (0..f)
                    .map(|t| if t == dir { s.clone() } else { CycNumber::from_int(b[t], order) })
                    .collect()
            };
            if let Some(s) = exact_root(&poly, order)? {
                out.exact.push(eval(&fixed(s))?);
                if out.exact.len() >= want {
                    break 'outer;
                }
            } else if out.numeric.is_none() {
                if let Some(s) = numeric_root(&poly) {
                    let vals = classes
                        .iter()
                        .map(|g| {
                            let mut acc = Complex64::new(1.0, 0.0);
                            for t in 0..f {
                                let yt = if t == dir { s } else { Complex64::new(b[t] as f64, 0.0) };
                                acc *= yt.powi(g[t] as i32);
                            }
                            acc
                        })
                        .collect();
                    out.numeric = Some(vals);
                }
            }
        }
    }
    Ok(out)
}

/// Integer points (1,…,1), then vectors of small primes in varying order.
fn base_points(f: usize, count: usize) -> Vec<Vec<i64>> {
    const PRIMES: [i64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let mut out = vec![vec![1; f]];
    let mut shift = 0;
    while out.len() < count {
        out.push((0..f).map(|t| PRIMES[(t + shift) % PRIMES.len()]).collect());
        if shift % 2 == 1 {
            let last = out.last_mut().expect("nonempty");
            if let Some(x) = last.first_mut() {
                *x = -*x;
            }
        }
        shift += 1;
    }
    out
}

fn eval_poly(poly: &[(usize, CycNumber)], s: &CycNumber) -> CycNumber {
    let mut acc = CycNumber::zero(s.order());
    for (e, c) in poly {
        acc = &acc + &(c * &pow_i(s, *e as i64).expect("nonnegative"));
    }
    acc
}

/// A nonzero root in Q(ζ_L): exact for degree one, otherwise searched among
/// small rationals and roots of unity.
fn exact_root(poly: &[(usize, CycNumber)], order: u32) -> Result<Option<CycNumber>> {
    let degree = poly.last().map_or(0, |(e, _)| *e);
    if poly.len() == 2 && degree == 1 {
        let root = -(&poly[0].1.div(&poly[1].1)?);
        return Ok(Some(root));
    }
    let mut candidates = Vec::new();
    for p in 1..=4i64 {
        for q in 1..=4i64 {
            if num_integer::gcd(p, q) == 1 {
                candidates.push(CycNumber::from_frac(p, q, order));
                candidates.push(CycNumber::from_frac(-p, q, order));
            }
        }
    }
    for k in 1..order as i64 {
        candidates.push(CycNumber::zeta_power(k, order));
    }
    Ok(candidates.into_iter().find(|s| eval_poly(poly, s).is_zero()))
}

/// A nonzero numeric root from the companion matrix.
fn numeric_root(poly: &[(usize, CycNumber)]) -> Option<Complex64> {
    let degree = poly.last()?.0;
    if degree == 0 {
        return None;
    }
    let mut c = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (e, v) in poly {
        c[*e] = v.to_c64();
    }
    let lead = c[degree];
    let mut m = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        m[(i, degree - 1)] = -c[i] / lead;
    }
    let eig = m.schur().eigenvalues()?;
    eig.iter().copied().find(|z| z.norm() > 1e-9)
}

/// Factors of a tensor given in the mode's party system, when it is product.
fn factorize_mode(entries: &[CycNumber], dims: &[usize]) -> Result<Option<Vec<CycVector>>> {
    let order = entries
        .first()
        .map(CycNumber::order)
        .ok_or_else(|| Error::Degenerate("empty tensor".into()))?;
    let pivot = entries
        .iter()
        .position(|x| !x.is_zero())
        .ok_or_else(|| Error::Degenerate("zero vector".into()))?;
    let pc = cell_coords(dims, pivot);
    let n = dims.len();
    let mut factors = Vec::with_capacity(n);
    for j in 0..n {
        let mut f = CycVector::zeros(dims[j], order);
        let mut x = pc.clone();
        for y in 0..dims[j] {
            x[j] = y;
            f.set(y, entries[cell_index(dims, &x)].clone());
        }
        factors.push(f);
    }
    if n > 1 {
        let scale = pow_i(&entries[pivot], -(n as i64 - 1))?;
        factors[0] = factors[0].scale(&scale);
    }
    for (idx, value) in entries.iter().enumerate() {
        let x = cell_coords(dims, idx);
        let mut acc = factors[0].get(x[0]).clone();
        for j in 1..n {
            if acc.is_zero() {
                break;
            }
            acc = &acc * factors[j].get(x[j]);
        }
        if &acc != value {
            return Ok(None);
        }
    }
    Ok(Some(factors))
}

/// Exact product test: `Some(factors)` iff `v` is a product over `dims`.
pub fn is_product_tensor(v: &CycVector, dims: &[usize]) -> Result<Option<Vec<CycVector>>> {
    let cells: usize = dims.iter().product();
    if v.len() != cells {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} over dims {dims:?}",
            v.len()
        )));
    }
    factorize_mode(v.entries(), dims)
}

fn mode_entries(v: &CycVector, coords: &Coords) -> Vec<CycNumber> {
    coords.to_cell.iter().map(|&c| v.get(c).clone()).collect()
}

fn exact_witness(model: &ComplementModel, coords: &Coords, a: &CycVector) -> Result<Witness> {
    let v = model.expand(a);
    let factors = factorize_mode(&mode_entries(&v, coords), &coords.dims)?.ok_or_else(|| {
        Error::ModelMismatch("constructed witness is not a product state".into())
    })?;
    for (j, m) in model.members.iter().enumerate() {
        let m = m.promote(lcm_orders([m.order(), v.order()]))?;
        let v = v.promote(m.order())?;
        if !crate::scalar::inner_product(&m, &v)?.is_zero() {
            return Err(Error::ModelMismatch(format!("witness not orthogonal to member {j}")));
        }
    }
    Ok(Witness::Exact {
        coefficients: a.clone(),
        factors,
    })
}

fn numeric_witness(model: &ComplementModel, coords: &Coords, a: Vec<Complex64>) -> Witness {
    let owners = model.ts.cell_owners();
    let entries: Vec<Complex64> = coords.to_cell.iter().map(|&c| a[owners[c]]).collect();
    let pivot = entries
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map_or(0, |(i, _)| i);
    let pc = cell_coords(&coords.dims, pivot);
    let n = coords.dims.len();
    let mut factors: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut x = pc.clone();
            (0..coords.dims[j])
                .map(|y| {
                    x[j] = y;
                    entries[cell_index(&coords.dims, &x)]
                })
                .collect()
        })
        .collect();
    let scale = entries[pivot].powi(-(n as i32 - 1));
    for z in factors[0].iter_mut() {
        *z *= scale;
    }
    Witness::Numeric {
        coefficients: a,
        factors,
    }
}

/// All product-state families of the complement in one mode.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub mode: Mode,
    pub complement_dim: usize,
    pub candidates: usize,
    /// Nonempty and inconclusive families, in support order.
    pub families: Vec<SolutionFamily>,
    /// Dimension of the span of all exact sample points (a lower bound).
    pub span_lower: usize,
    /// Upper bound on the span of all product states.
    pub span_upper: usize,
}

impl Analysis {
    pub fn nonempty(&self) -> impl Iterator<Item = &SolutionFamily> {
        self.families.iter().filter(|f| f.is_nonempty())
    }

    pub fn has_inconclusive(&self) -> bool {
        self.families.iter().any(|f| f.kind == FamilyKind::Inconclusive)
    }

    pub fn span_exact(&self) -> bool {
        !self.has_inconclusive() && self.span_lower == self.span_upper
    }
}

/// Solves every candidate support of the mode (in parallel, merged in order).
pub fn find_product_states(model: &ComplementModel, mode: &Mode) -> Result<Analysis> {
    let coords = Coords::new(model.ts.dims(), mode)?;
    let candidates = enumerate_supports_avoiding(&model.ts, mode, &model.forced_zero())?;
    let solved: Vec<SolutionFamily> = candidates
        .par_iter()
        .map(|c| solve_with(c, model, &coords))
        .collect::<Result<Vec<_>>>()?;
    let families: Vec<SolutionFamily> = solved.into_iter().filter(|f| f.kind != FamilyKind::Empty).collect();
    let order = lcm_orders(
        std::iter::once(model.order).chain(families.iter().flat_map(|f| f.basis.iter().chain(&f.samples).map(CycVector::order))),
    );
    let promote_all = |vs: Vec<&CycVector>| -> Result<Vec<CycVector>> { vs.into_iter().map(|v| v.promote(order)).collect() };
    let upper: Vec<CycVector> = promote_all(families.iter().flat_map(|f| &f.basis).collect())?;
    let lower: Vec<CycVector> = promote_all(
        families
            .iter()
            .flat_map(|f| if f.span_exact && f.kind == FamilyKind::Linear { f.basis.iter().collect::<Vec<_>>() } else { f.samples.iter().collect() })
            .collect(),
    )?;
    Ok(Analysis {
        mode: mode.clone(),
        complement_dim: model.dim(),
        candidates: candidates.len(),
        span_upper: rank_of(&upper, order),
        span_lower: rank_of(&lower, order),
        families,
    })
}

/// Verdict of a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "UPB")]
    Upb,
    #[serde(rename = "NOT-UPB")]
    NotUpb,
    #[serde(rename = "SUCPB")]
    Sucpb,
    /// Product states span the complement, so the span test is silent.
    #[serde(rename = "NOT-CERTIFIED")]
    NotCertified,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Upb => "UPB",
            Verdict::NotUpb => "NOT-UPB",
            Verdict::Sucpb => "SUCPB",
            Verdict::NotCertified => "NOT-CERTIFIED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// A verdict with the data needed to check it.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub verdict: Verdict,
    pub mode: Mode,
    pub complement_dim: usize,
    pub product_span_dim: usize,
    pub product_span_lower: usize,
    pub exact: bool,
    pub families: Vec<SolutionFamily>,
}

impl Certificate {
    /// Witnesses of all nonempty families.
    pub fn witnesses(&self) -> Vec<&Witness> {
        self.families.iter().filter_map(|f| f.witness.as_ref()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "mode": self.mode.to_json(),
            "complement_dim": self.complement_dim,
            "product_span_dim": self.product_span_dim,
            "product_span_lower": self.product_span_lower,
            "exact": self.exact,
            "families": self.families.iter().map(SolutionFamily::to_json).collect::<Vec<_>>(),
        })
    }
}

fn certificate(analysis: &Analysis, verdict: Verdict) -> Certificate {
    Certificate {
        verdict,
        mode: analysis.mode.clone(),
        complement_dim: analysis.complement_dim,
        product_span_dim: analysis.span_upper,
        product_span_lower: analysis.span_lower,
        exact: analysis.span_exact() && analysis.families.iter().all(|f| f.witness.as_ref().is_none_or(Witness::is_exact)),
        families: analysis.families.clone(),
    }
}

pub fn upb_certificate(analysis: &Analysis) -> Result<Certificate> {
    if analysis.complement_dim == 0 {
        return Err(Error::EmptyComplement("the set is a full basis".into()));
    }
    let verdict = if analysis.nonempty().next().is_some() {
        Verdict::NotUpb
    } else if analysis.has_inconclusive() {
        Verdict::Inconclusive
    } else {
        Verdict::Upb
    };
    Ok(certificate(analysis, verdict))
}

pub fn sucpb_certificate(analysis: &Analysis) -> Result<Certificate> {
    if analysis.complement_dim == 0 {
        return Err(Error::EmptyComplement("the set is a full basis".into()));
    }
    let verdict = if analysis.has_inconclusive() {
        Verdict::Inconclusive
    } else if analysis.span_upper < analysis.complement_dim {
        Verdict::Sucpb
    } else if analysis.span_lower == analysis.complement_dim {
        Verdict::NotCertified
    } else {
        Verdict::Inconclusive
    };
    Ok(certificate(analysis, verdict))
}

/// UPB test in the given mode.
pub fn is_upb(model: &ComplementModel, mode: &Mode) -> Result<Certificate> {
    upb_certificate(&find_product_states(model, mode)?)
}

/// Span test for strong uncompletability in one bipartition.
pub fn sucpb_certify(model: &ComplementModel, bp: &Bipartition) -> Result<Certificate> {
    sucpb_certificate(&find_product_states(model, &Mode::Bipartite(bp.clone()))?)
}

/// Both certificates for one bipartition.
#[derive(Clone, Debug)]
pub struct BipartitionReport {
    pub bipartition: Bipartition,
    pub upb: Certificate,
    pub sucpb: Certificate,
}

/// Reports for all bipartitions with headline flags.
#[derive(Clone, Debug)]
pub struct EveryBipartition {
    pub reports: Vec<BipartitionReport>,
}

impl EveryBipartition {
    pub fn sucpb_everywhere(&self) -> bool {
        self.reports.iter().all(|r| r.sucpb.verdict == Verdict::Sucpb)
    }

    pub fn upb_everywhere(&self) -> bool {
        self.reports.iter().all(|r| r.upb.verdict == Verdict::Upb)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.reports
            .iter()
            .any(|r| r.upb.verdict == Verdict::Inconclusive || r.sucpb.verdict == Verdict::Inconclusive)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "sucpb_in_every_bipartition": self.sucpb_everywhere(),
            "upb_in_every_bipartition": self.upb_everywhere(),
            "bipartitions": self.reports.iter().map(|r| json!({
                "bipartition": {"C": r.bipartition.side_c(), "D": r.bipartition.side_d()},
                "label": r.bipartition.label(),
                "upb": r.upb.to_json(),
                "sucpb": r.sucpb.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn check_every_bipartition(model: &ComplementModel) -> Result<EveryBipartition> {
    let n = model.ts.parties();
    if n < 2 {
        return Err(Error::InvalidBipartition("need at least two parties".into()));
    }
    let reports = Bipartition::all(n)
        .into_iter()
        .map(|bp| {
            let analysis = find_product_states(model, &Mode::Bipartite(bp.clone()))?;
            Ok(BipartitionReport {
                bipartition: bp,
                upb: upb_certificate(&analysis)?,
                sucpb: sucpb_certificate(&analysis)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EveryBipartition { reports })
}

/// Coefficient value of a scalar for JSON reports.
pub fn scalar_json(x: &CycNumber) -> Value {
    scalar_to_json(x)
}
