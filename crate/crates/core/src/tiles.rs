//! Tile structures: partitions of a `d_1 × … × d_n` grid into combinatorial
//! boxes, their bipartition flattenings, and the rectangle-union conditions.
//!
//! Cells are indexed in mixed radix with party 0 most significant. A
//! flattening along `C | D` uses the same convention on each side: parties
//! sorted ascending, the earliest party most significant.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of grid cells (cell sets are `u128` masks).
pub const MAX_CELLS: usize = 128;
/// Upper bound on tile counts for the exhaustive subset checks.
pub const MAX_SUBSET_TILES: usize = 24;
/// Smallest tile count for which the rectangle criterion applies.
pub const MIN_UTILE_TILES: usize = 5;

/// A combinatorial box: one nonempty index subset per party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tile {
    pub subsets: Vec<Vec<usize>>,
}

impl Tile {
    pub fn new(mut subsets: Vec<Vec<usize>>) -> Tile {
        for s in &mut subsets {
            s.sort_unstable();
            s.dedup();
        }
        Tile { subsets }
    }

    /// Side lengths `k_j = |X_j|`.
    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn sides(&self) -> Vec<usize> {
        self.subsets.iter().map(Vec::len).collect()
    }

    pub fn area(&self) -> usize {
        self.subsets.iter().map(Vec::len).product()
    }

    /// Cell indices of the tile in ascending order.
    pub fn cells(&self, dims: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for (j, subset) in self.subsets.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * subset.len());
            for &base in &out {
                for &x in subset {
                    next.push(base * dims[j] + x);
                }
            }
            out = next;
        }
        out
    }

    pub fn mask(&self, dims: &[usize]) -> u128 {
        self.cells(dims).into_iter().fold(0, |m, c| m | (1u128 << c))
    }
}

impl fmt::Display for Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, s) in self.subsets.iter().enumerate() {
            if j > 0 {
                write!(f, "×")?;
            }
            write!(f, "{{")?;
            for (i, x) in s.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Dimensions plus a list of tiles. Construction only checks shapes; use
/// [`TileStructure::validate`] for the partition property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTileStructure")]
pub struct TileStructure {
    dims: Vec<usize>,
    tiles: Vec<Tile>,
}

#[derive(Deserialize)]
struct RawTileStructure {
    dims: Vec<usize>,
    tiles: Vec<Tile>,
}

impl TryFrom<RawTileStructure> for TileStructure {
    type Error = Error;
    fn try_from(raw: RawTileStructure) -> Result<Self> {
        TileStructure::new(raw.dims, raw.tiles)
    }
}

/// Outcome of [`TileStructure::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Cells covered more than once, with the tiles covering them.
    pub overlaps: Vec<(Vec<usize>, Vec<usize>)>,
    /// Cells covered by no tile, as coordinates.
    pub uncovered: Vec<Vec<usize>>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.overlaps.is_empty() && self.uncovered.is_empty()
    }
}

impl TileStructure {
    pub fn new(dims: Vec<usize>, tiles: Vec<Tile>) -> Result<TileStructure> {
        if dims.is_empty() {
            return Err(Error::InvalidStructure("no parties".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidStructure(format!("party dimension {d} < 2")));
        }
        let cells: usize = dims.iter().product();
        if cells > MAX_CELLS {
            return Err(Error::InvalidStructure(format!(
                "{cells} cells exceed the supported maximum of {MAX_CELLS}"
            )));
        }
        let tiles: Vec<Tile> = tiles.into_iter().map(|t| Tile::new(t.subsets)).collect();
        for (i, t) in tiles.iter().enumerate() {
            if t.subsets.len() != dims.len() {
                return Err(Error::InvalidStructure(format!(
                    "tile {i} has {} subsets for {} parties",
                    t.subsets.len(),
                    dims.len()
                )));
            }
            for (j, s) in t.subsets.iter().enumerate() {
                if s.is_empty() {
                    return Err(Error::InvalidStructure(format!(
                        "tile {i} has an empty subset for party {j}"
                    )));
                }
                if let Some(x) = s.iter().find(|&&x| x >= dims[j]) {
                    return Err(Error::InvalidStructure(format!(
                        "tile {i} index {x} out of range for party {j} (dimension {})",
                        dims[j]
                    )));
                }
            }
        }
        Ok(TileStructure { dims, tiles })
    }

    /// Builds and validates in one step.
    pub fn partition(dims: Vec<usize>, tiles: Vec<Tile>) -> Result<TileStructure> {
        TileStructure::new(dims, tiles)?.validated()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile(&self, i: usize) -> &Tile {
        &self.tiles[i]
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn num_tiles(&self) -> usize {
        self.tiles.len()
    }

    /// Total number of cells, D = Π d_j.
    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn full_mask(&self) -> u128 {
        full_mask(self.cells())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); self.cells()];
        for (i, t) in self.tiles.iter().enumerate() {
            for c in t.cells(&self.dims) {
                owners[c].push(i);
            }
        }
        let mut report = ValidationReport::default();
        for (c, o) in owners.iter().enumerate() {
            match o.len() {
                0 => report.uncovered.push(self.coords(c)),
                1 => {}
                _ => report.overlaps.push((self.coords(c), o.clone())),
            }
        }
        report
    }

    pub fn validated(self) -> Result<TileStructure> {
        let report = self.validate();
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidStructure(format!(
                "{} overlapping and {} uncovered cells",
                report.overlaps.len(),
                report.uncovered.len()
            )))
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.clone().validated().map(|_| ())
    }

    pub fn coords(&self, cell: usize) -> Vec<usize> {
        cell_coords(&self.dims, cell)
    }

    pub fn cell_index(&self, coords: &[usize]) -> usize {
        cell_index(&self.dims, coords)
    }

    /// `owner[c]` is the tile containing cell `c` (valid structures only).
    pub fn cell_owners(&self) -> Vec<usize> {
        let mut owner = vec![usize::MAX; self.cells()];
        for (i, t) in self.tiles.iter().enumerate() {
            for c in t.cells(&self.dims) {
                owner[c] = i;
            }
        }
        owner
    }

    pub fn tile_masks(&self) -> Vec<u128> {
        self.tiles.iter().map(|t| t.mask(&self.dims)).collect()
    }

    /// Smallest L such that every tile's Fourier matrices live in Q(ζ_L).
    pub fn natural_order(&self) -> u32 {
        crate::scalar::lcm_orders(
            self.tiles
                .iter()
                .flat_map(|t| t.sides())
                .map(|k| k as u32),
        )
    }

    /// Maps every tile through a cell permutation given per party, i.e.
    /// party `j` of the image uses `relabel[j][x]` and `party_perm[j]` says
    /// which original party lands in position `j`.
    pub fn relabeled(&self, party_perm: &[usize], relabel: &[Vec<usize>]) -> Result<TileStructure> {
        let dims: Vec<usize> = party_perm.iter().map(|&p| self.dims[p]).collect();
        let tiles = self
            .tiles
            .iter()
            .map(|t| {
                Tile::new(
                    party_perm
                        .iter()
                        .enumerate()
                        .map(|(j, &p)| t.subsets[p].iter().map(|&x| relabel[j][x]).collect())
                        .collect(),
                )
            })
            .collect();
        TileStructure::new(dims, tiles)
    }
}

impl fmt::Display for TileStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        write!(f, "{} grid, {} tiles:", dims.join("×"), self.tiles.len())?;
        for (i, t) in self.tiles.iter().enumerate() {
            write!(f, " t{i}={t}")?;
        }
        Ok(())
    }
}

pub(crate) fn full_mask(cells: usize) -> u128 {
    if cells >= 128 {
        u128::MAX
    } else {
        (1u128 << cells) - 1
    }
}

pub fn cell_coords(dims: &[usize], mut cell: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        out[j] = cell % dims[j];
        cell /= dims[j];
    }
    out
}

pub fn cell_index(dims: &[usize], coords: &[usize]) -> usize {
    coords.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// A split of the parties into two nonempty sides.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawBipartition")]
pub struct Bipartition {
    #[serde(rename = "C")]
    c: Vec<usize>,
    #[serde(rename = "D")]
    d: Vec<usize>,
}

#[derive(Deserialize)]
struct RawBipartition {
    #[serde(rename = "C")]
    c: Vec<usize>,
    #[serde(rename = "D")]
    d: Vec<usize>,
}

impl TryFrom<RawBipartition> for Bipartition {
    type Error = Error;
    fn try_from(raw: RawBipartition) -> Result<Self> {
        let n = raw.c.len() + raw.d.len();
        Bipartition::new(raw.c, raw.d, n)
    }
}

impl Bipartition {
    /// Sides are sorted; they must be disjoint, nonempty and cover `0..n`.
    pub fn new(mut c: Vec<usize>, mut d: Vec<usize>, n: usize) -> Result<Bipartition> {
        c.sort_unstable();
        d.sort_unstable();
        if c.is_empty() || d.is_empty() {
            return Err(Error::InvalidBipartition("empty side".into()));
        }
        let mut all: Vec<usize> = c.iter().chain(&d).copied().collect();
        all.sort_unstable();
        if all != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidBipartition(format!(
                "sides {c:?} | {d:?} do not partition parties 0..{n}"
            )));
        }
        Ok(Bipartition { c, d })
    }

    /// Every bipartition of `n` parties, with party 0 on side C.
    pub fn all(n: usize) -> Vec<Bipartition> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << (n - 1)) {
            let full = (mask << 1) | 1;
            if full == (1 << n) - 1 {
                continue;
            }
            let c = (0..n).filter(|&j| full >> j & 1 == 1).collect();
            let d = (0..n).filter(|&j| full >> j & 1 == 0).collect();
            out.push(Bipartition { c, d });
        }
        out.sort_by(|a, b| (a.c.len(), &a.c).cmp(&(b.c.len(), &b.c)));
        out
    }

    /// The two-party split `{0} | {1}`.
    pub fn trivial() -> Bipartition {
        Bipartition { c: vec![0], d: vec![1] }
    }

    pub fn side_c(&self) -> &[usize] {
        &self.c
    }

    pub fn side_d(&self) -> &[usize] {
        &self.d
    }

    pub fn parties(&self) -> usize {
        self.c.len() + self.d.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.c.first() < self.d.first()
    }

    pub fn canonical(&self) -> Bipartition {
        if self.is_canonical() {
            self.clone()
        } else {
            self.swapped()
        }
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition {
            c: self.d.clone(),
            d: self.c.clone(),
        }
    }

    pub fn h1(&self, dims: &[usize]) -> usize {
        self.c.iter().map(|&j| dims[j]).product()
    }

    pub fn h2(&self, dims: &[usize]) -> usize {
        self.d.iter().map(|&j| dims[j]).product()
    }

    /// (row, column) of a cell given by coordinates.
    pub fn split_coords(&self, dims: &[usize], coords: &[usize]) -> (usize, usize) {
        let row = self.c.iter().fold(0, |acc, &j| acc * dims[j] + coords[j]);
        let col = self.d.iter().fold(0, |acc, &j| acc * dims[j] + coords[j]);
        (row, col)
    }

    /// (row, column) for every cell index.
    pub fn cell_map(&self, dims: &[usize]) -> Vec<(usize, usize)> {
        let cells: usize = dims.iter().product();
        (0..cells)
            .map(|c| self.split_coords(dims, &cell_coords(dims, c)))
            .collect()
    }

    /// Party names A, B, C, … as in "AB|CD".
    pub fn label(&self) -> String {
        let name = |j: usize| -> String {
            if j < 26 {
                ((b'A' + j as u8) as char).to_string()
            } else {
                format!("P{j}")
            }
        };
        let c: String = self.c.iter().map(|&j| name(j)).collect();
        let d: String = self.d.iter().map(|&j| name(j)).collect();
        format!("{c}|{d}")
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A tile after flattening: a combinatorial rectangle in `Z_{h1} × Z_{h2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatRect {
    pub tile: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl FlatRect {
    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

fn side_indices(dims: &[usize], parties: &[usize], tile: &Tile) -> Vec<usize> {
    let mut out = vec![0usize];
    for &j in parties {
        let mut next = Vec::new();
        for &base in &out {
            for &x in &tile.subsets[j] {
                next.push(base * dims[j] + x);
            }
        }
        out = next;
    }
    out.sort_unstable();
    out
}

/// Flattens every tile along `bp`.
pub fn flatten(ts: &TileStructure, bp: &Bipartition) -> Result<Vec<FlatRect>> {
    check_bipartition(ts, bp)?;
    Ok(ts
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| FlatRect {
            tile: i,
            rows: side_indices(&ts.dims, &bp.c, t),
            cols: side_indices(&ts.dims, &bp.d, t),
        })
        .collect())
}

fn check_bipartition(ts: &TileStructure, bp: &Bipartition) -> Result<()> {
    if bp.parties() != ts.parties() {
        return Err(Error::InvalidBipartition(format!(
            "bipartition over {} parties used with {} parties",
            bp.parties(),
            ts.parties()
        )));
    }
    Ok(())
}

/// Row/column bitmasks of each flattened tile, plus areas.
#[derive(Clone, Debug)]
pub(crate) struct FlatMasks {
    pub rows: Vec<u128>,
    pub cols: Vec<u128>,
    pub areas: Vec<u32>,
}

impl FlatMasks {
    pub fn new(ts: &TileStructure, bp: &Bipartition) -> Result<FlatMasks> {
        let rects = flatten(ts, bp)?;
        let to_mask = |v: &[usize]| v.iter().fold(0u128, |m, &x| m | (1u128 << x));
        Ok(FlatMasks {
            rows: rects.iter().map(|r| to_mask(&r.rows)).collect(),
            cols: rects.iter().map(|r| to_mask(&r.cols)).collect(),
            areas: rects.iter().map(|r| r.area() as u32).collect(),
        })
    }

    pub fn is_rectangle(&self, subset: &[usize]) -> bool {
        let (mut r, mut c, mut a) = (0u128, 0u128, 0u32);
        for &i in subset {
            r |= self.rows[i];
            c |= self.cols[i];
            a += self.areas[i];
        }
        a == r.count_ones() * c.count_ones()
    }
}

/// True iff the union of the given tiles, flattened along `bp`, is a
/// combinatorial rectangle.
pub fn is_rectangle_union(tiles: &[usize], bp: &Bipartition, ts: &TileStructure) -> Result<bool> {
    if tiles.is_empty() {
        return Err(Error::Degenerate("empty tile subset".into()));
    }
    if let Some(&t) = tiles.iter().find(|&&t| t >= ts.num_tiles()) {
        return Err(Error::InvalidStructure(format!("no tile {t}")));
    }
    Ok(FlatMasks::new(ts, bp)?.is_rectangle(tiles))
}

/// Result of the rectangle criterion on one flattening.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum UtileVerdict {
    Ok,
    /// Lexicographically smallest tile subset of size `2..s` whose union is
    /// a rectangle.
    Violation { witness: Vec<usize> },
}

impl UtileVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, UtileVerdict::Ok)
    }
}

fn check_utile_preconditions(ts: &TileStructure) -> Result<()> {
    ts.ensure_valid()?;
    let s = ts.num_tiles();
    if s < MIN_UTILE_TILES {
        return Err(Error::HypothesisNotMet(format!(
            "rectangle criterion needs at least {MIN_UTILE_TILES} tiles, structure has {s}"
        )));
    }
    if s > MAX_SUBSET_TILES {
        return Err(Error::InvalidStructure(format!(
            "{s} tiles exceed the subset-enumeration cap of {MAX_SUBSET_TILES}"
        )));
    }
    Ok(())
}

/// Checks that no union of `r` tiles, `2 <= r <= s-1`, flattens to a
/// rectangle along `bp`.
pub fn utile_check(ts: &TileStructure, bp: &Bipartition) -> Result<UtileVerdict> {
    check_utile_preconditions(ts)?;
    let masks = FlatMasks::new(ts, bp)?;
    Ok(smallest_rectangle_subset(&masks, ts.num_tiles()))
}

/// Depth-first over subsets in lexicographic order of their sorted element
/// lists; the first hit is the lexicographically smallest.
fn smallest_rectangle_subset(masks: &FlatMasks, s: usize) -> UtileVerdict {
    fn go(
        masks: &FlatMasks,
        s: usize,
        stack: &mut Vec<usize>,
        acc: (u128, u128, u32),
    ) -> Option<Vec<usize>> {
        let start = stack.last().map_or(0, |&l| l + 1);
        for i in start..s {
            let next = (acc.0 | masks.rows[i], acc.1 | masks.cols[i], acc.2 + masks.areas[i]);
            stack.push(i);
            let k = stack.len();
            if (2..s).contains(&k) && next.2 == next.0.count_ones() * next.1.count_ones() {
                return Some(stack.clone());
            }
            if k < s - 1 {
                if let Some(w) = go(masks, s, stack, next) {
                    return Some(w);
                }
            }
            stack.pop();
        }
        None
    }
    match go(masks, s, &mut Vec::new(), (0, 0, 0)) {
        Some(witness) => UtileVerdict::Violation { witness },
        None => UtileVerdict::Ok,
    }
}

/// [`utile_check`] over every bipartition, in [`Bipartition::all`] order.
pub fn utile_check_all(ts: &TileStructure) -> Result<Vec<(Bipartition, UtileVerdict)>> {
    check_utile_preconditions(ts)?;
    Bipartition::all(ts.parties())
        .into_par_iter()
        .map(|bp| {
            let masks = FlatMasks::new(ts, &bp)?;
            let v = smallest_rectangle_subset(&masks, ts.num_tiles());
            Ok((bp, v))
        })
        .collect()
}

/// True when every entry of a [`utile_check_all`] report passes.
pub fn all_ok(report: &[(Bipartition, UtileVerdict)]) -> bool {
    report.iter().all(|(_, v)| v.is_ok())
}

/// Masks of every box containing `cell`, i.e. products of subsets `X_j`
/// with `coords_j ∈ X_j`.
pub fn boxes_through(dims: &[usize], cell: usize) -> Vec<(u128, Tile)> {
    let coords = cell_coords(dims, cell);
    let mut partial: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for (j, &d) in dims.iter().enumerate() {
        let others: Vec<usize> = (0..d).filter(|&x| x != coords[j]).collect();
        let mut next = Vec::new();
        for p in &partial {
            for bits in 0u32..(1 << others.len()) {
                let mut s = vec![coords[j]];
                s.extend(
                    others
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| bits >> i & 1 == 1)
                        .map(|(_, &x)| x),
                );
                s.sort_unstable();
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|subsets| {
            let t = Tile::new(subsets);
            (t.mask(dims), t)
        })
        .collect()
}

/// A random partition of the grid into boxes. At each step the smallest
/// uncovered cell is covered by a random box that avoids covered cells.
pub fn random_tile_structure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<TileStructure> {
    let cells: usize = dims.iter().product();
    let probe = TileStructure::new(dims.to_vec(), Vec::new())?;
    let full = probe.full_mask();
    let mut covered = 0u128;
    let mut tiles = Vec::new();
    while covered != full {
        let cell = (!covered).trailing_zeros() as usize;
        let options: Vec<(u128, Tile)> = boxes_through(dims, cell)
            .into_iter()
            .filter(|(m, _)| m & covered == 0)
            .collect();
        let (m, t) = options[rng.gen_range(0..options.len())].clone();
        covered |= m;
        tiles.push(t);
    }
    debug_assert_eq!(covered.count_ones() as usize, cells);
    TileStructure::partition(dims.to_vec(), tiles)
}
