//! Exhaustive search for box partitions in which no union of tiles other
//! than the whole grid flattens to a rectangle, in any bipartition.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiles::{
    all_ok, boxes_through, cell_coords, cell_index, utile_check_all, Bipartition, FlatMasks, Tile, TileStructure,
    MAX_CELLS, MAX_SUBSET_TILES, MIN_UTILE_TILES,
};

/// Largest symmetry group used for canonical forms.
pub const MAX_GROUP_ORDER: usize = 1 << 20;

const NONE: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub dims: Vec<usize>,
    pub min_tiles: usize,
    pub max_tiles: usize,
    /// Reject branches that are not canonical under relabelings.
    pub symmetry: bool,
    /// Reject branches containing a rectangle union. When off, every box
    /// partition in the tile range is reported (used for cross-checks).
    pub rectangle_prune: bool,
    pub checkpoint: Option<PathBuf>,
    /// Nodes between checkpoint writes.
    pub checkpoint_every: u64,
    /// Worker threads (`None`: rayon default).
    pub threads: Option<usize>,
    /// Stop after roughly this many nodes; the run is then incomplete.
    pub max_nodes: Option<u64>,
}

impl SearchConfig {
    pub fn new(dims: Vec<usize>) -> SearchConfig {
        SearchConfig {
            dims,
            min_tiles: MIN_UTILE_TILES,
            max_tiles: MAX_SUBSET_TILES,
            symmetry: true,
            rectangle_prune: true,
            checkpoint: None,
            checkpoint_every: 1_000_000,
            threads: None,
            max_nodes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 1) {
            return Err(Error::InvalidConfig(format!("bad dims {:?}", self.dims)));
        }
        let cells = self.dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if !matches!(cells, Some(c) if c <= MAX_CELLS) {
            return Err(Error::InvalidConfig(format!("more than {MAX_CELLS} cells")));
        }
        if self.min_tiles < 2 {
            return Err(Error::InvalidConfig("min_tiles must be at least 2".into()));
        }
        if self.max_tiles > MAX_SUBSET_TILES || self.max_tiles < self.min_tiles {
            return Err(Error::InvalidConfig(format!(
                "max_tiles must lie in [min_tiles, {MAX_SUBSET_TILES}]"
            )));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint_every must be positive".into()));
        }
        Ok(())
    }

    fn fingerprint(&self) -> serde_json::Value {
        serde_json::json!({
            "dims": self.dims,
            "min_tiles": self.min_tiles,
            "max_tiles": self.max_tiles,
            "symmetry": self.symmetry,
            "rectangle_prune": self.rectangle_prune,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub nodes: u64,
    pub leaves: u64,
    pub pruned_rectangle: u64,
    pub pruned_symmetry: u64,
    pub pruned_tile_cap: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.nodes += o.nodes;
        self.leaves += o.leaves;
        self.pruned_rectangle += o.pruned_rectangle;
        self.pruned_symmetry += o.pruned_symmetry;
        self.pruned_tile_cap += o.pruned_tile_cap;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub dims: Vec<usize>,
    pub found: Vec<TileStructure>,
    pub counters: Counters,
    pub tasks_total: usize,
    pub tasks_done: usize,
    pub wall_time_secs: f64,
    /// True iff the whole search space was exhausted.
    pub complete: bool,
}

/// A permutation of cells induced by per-party relabelings and a
/// permutation of equal-dimension parties.
#[derive(Clone, Debug)]
struct Symmetry {
    /// `inv[y]` = cell mapped to `y`.
    inv: Vec<u8>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            if k.is_multiple_of(2) {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut p, &mut out);
    out.sort();
    out
}

fn group_order(dims: &[usize]) -> Option<usize> {
    let fact = |n: usize| (1..=n).try_fold(1usize, |a, k| a.checked_mul(k));
    let mut total = 1usize;
    for &d in dims {
        total = total.checked_mul(fact(d)?)?;
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in dims {
        *counts.entry(d).or_default() += 1;
    }
    for &c in counts.values() {
        total = total.checked_mul(fact(c)?)?;
    }
    Some(total)
}

fn symmetry_group(dims: &[usize]) -> Result<Vec<Symmetry>> {
    match group_order(dims) {
        Some(g) if g <= MAX_GROUP_ORDER => {}
        _ => {
            return Err(Error::InvalidConfig(format!(
                "symmetry group of {dims:?} exceeds {MAX_GROUP_ORDER} elements"
            )))
        }
    }
    let n = dims.len();
    let cells: usize = dims.iter().product();
    let party_perms: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .filter(|p| (0..n).all(|j| dims[p[j]] == dims[j]))
        .collect();
    let index_perms: Vec<Vec<Vec<usize>>> = dims.iter().map(|&d| permutations(d)).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        for pp in &party_perms {
            // g(x)_{pp[j]} = σ_j(x_j)
            let mut inv = vec![0u8; cells];
            for x in 0..cells {
                let cx = cell_coords(dims, x);
                let mut y = vec![0; n];
                for j in 0..n {
                    y[pp[j]] = index_perms[j][choice[j]][cx[j]];
                }
                inv[cell_index(dims, &y)] = x as u8;
            }
            out.push(Symmetry { inv });
        }
        let mut j = 0;
        loop {
            if j == n {
                return Ok(out);
            }
            choice[j] += 1;
            if choice[j] < index_perms[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

/// Labels of cells by tile in order of first appearance (`NONE` where
/// uncovered), under the symmetry.
fn rgs_under(owner: &[u8], g: Option<&Symmetry>) -> Vec<u8> {
    let mut map = [NONE; 256];
    let mut next = 0u8;
    (0..owner.len())
        .map(|y| {
            let x = g.map_or(y, |g| g.inv[y] as usize);
            let t = owner[x];
            if t == NONE {
                return NONE;
            }
            if map[t as usize] == NONE {
                map[t as usize] = next;
                next += 1;
            }
            map[t as usize]
        })
        .collect()
}

/// Canonical key: the lexicographically smallest first-appearance labelling
/// over all relabelings of indices and of equal-dimension parties.
pub fn canonical_form(ts: &TileStructure) -> Result<Vec<u8>> {
    if ts.cells() > MAX_CELLS {
        return Err(Error::InvalidStructure("too many cells".into()));
    }
    if ts.num_tiles() >= NONE as usize {
        return Err(Error::InvalidStructure("too many tiles".into()));
    }
    let owner = owners_of(ts);
    let group = symmetry_group(ts.dims())?;
    Ok(group
        .iter()
        .map(|g| rgs_under(&owner, Some(g)))
        .min()
        .expect("group contains the identity"))
}

fn owners_of(ts: &TileStructure) -> Vec<u8> {
    let mut owner = vec![NONE; ts.cells()];
    for (i, t) in ts.tiles().iter().enumerate() {
        for c in t.cells(ts.dims()) {
            owner[c] = i as u8;
        }
    }
    owner
}

/// The structure a canonical key describes (tiles in label order).
pub fn from_canonical(dims: &[usize], key: &[u8]) -> Result<TileStructure> {
    let count = key.iter().filter(|&&k| k != NONE).map(|&k| k as usize + 1).max().unwrap_or(0);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (c, &k) in key.iter().enumerate() {
        if k != NONE {
            cells[k as usize].push(c);
        }
    }
    let tiles = cells
        .iter()
        .map(|cs| {
            let mut subsets = vec![Vec::new(); dims.len()];
            for &c in cs {
                for (j, x) in cell_coords(dims, c).into_iter().enumerate() {
                    subsets[j].push(x);
                }
            }
            Tile::new(subsets)
        })
        .collect();
    TileStructure::partition(dims.to_vec(), tiles)
}

/// Flattened masks of one box along every bipartition.
#[derive(Clone, Debug)]
struct BoxInfo {
    mask: u128,
    tile: Tile,
    flat: Vec<(u128, u128, u32)>,
}

struct Space {
    dims: Vec<usize>,
    full: u128,
    cells: usize,
    /// Boxes whose smallest cell is the index.
    boxes: Vec<Vec<BoxInfo>>,
    full_flat: Vec<(u128, u128)>,
    group: Vec<Symmetry>,
}

impl Space {
    fn new(cfg: &SearchConfig) -> Result<Space> {
        let dims = cfg.dims.clone();
        let cells: usize = dims.iter().product();
        let probe = TileStructure::new(dims.clone(), Vec::new())?;
        let bps = Bipartition::all(dims.len());
        let mut boxes: Vec<Vec<BoxInfo>> = vec![Vec::new(); cells];
        for c in 0..cells {
            for (mask, tile) in boxes_through(&dims, c) {
                if mask.trailing_zeros() as usize != c {
                    continue;
                }
                let single = TileStructure::new(dims.clone(), vec![tile.clone()])?;
                let flat = bps
                    .iter()
                    .map(|bp| {
                        let m = FlatMasks::new(&single, bp)?;
                        Ok((m.rows[0], m.cols[0], m.areas[0]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                boxes[c].push(BoxInfo { mask, tile, flat });
            }
        }
        let full_flat = bps
            .iter()
            .map(|bp| {
                let (h1, h2) = (bp.h1(&dims), bp.h2(&dims));
                (low_bits(h1), low_bits(h2))
            })
            .collect();
        let group = if cfg.symmetry {
            symmetry_group(&dims)?.into_iter().skip(1).collect()
        } else {
            Vec::new()
        };
        Ok(Space {
            full: probe.full_mask(),
            dims,
            cells,
            boxes,
            full_flat,
            group,
        })
    }
}

fn low_bits(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// A partial partition: placed boxes (by `(cell, index)`) and cell owners.
#[derive(Clone, Debug)]
struct Node {
    covered: u128,
    placed: Vec<(u8, u16)>,
    owner: Vec<u8>,
}

impl Node {
    fn root(cells: usize) -> Node {
        Node {
            covered: 0,
            placed: Vec::new(),
            owner: vec![NONE; cells],
        }
    }
}

struct Walker<'a> {
    cfg: &'a SearchConfig,
    space: &'a Space,
    counters: Counters,
    found: Vec<Vec<(u8, u16)>>,
    stop: &'a AtomicBool,
    budget: &'a AtomicU64,
    aborted: bool,
}

impl Walker<'_> {
    fn info(&self, p: (u8, u16)) -> &BoxInfo {
        &self.space.boxes[p.0 as usize][p.1 as usize]
    }

    /// True when some union of placed tiles containing the newest one, other
    /// than the whole grid, is a rectangle in some bipartition.
    fn rectangle_violation(&self, node: &Node) -> bool {
        let k = node.placed.len();
        if k < 2 {
            return false;
        }
        let t = self.info(node.placed[k - 1]);
        for (b, &(fr, fc)) in self.space.full_flat.iter().enumerate() {
            let (tr, tc, ta) = t.flat[b];
            for ui in 0..k - 1 {
                let (ur, uc, ua) = self.info(node.placed[ui]).flat[b];
                let (mut r, mut c) = (tr | ur, tc | uc);
                let mut members: u32 = (1 << (k - 1)) | (1 << ui);
                let mut area = ta + ua;
                loop {
                    let mut changed = false;
                    for vi in 0..k - 1 {
                        if members >> vi & 1 == 1 {
                            continue;
                        }
                        let (vr, vc, va) = self.info(node.placed[vi]).flat[b];
                        if vr & r != 0 && vc & c != 0 {
                            members |= 1 << vi;
                            r |= vr;
                            c |= vc;
                            area += va;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                if (r, c) != (fr, fc) && area == r.count_ones() * c.count_ones() {
                    return true;
                }
            }
        }
        false
    }

    /// False when some symmetry maps every completion to a smaller key.
    fn maybe_canonical(&self, node: &Node) -> bool {
        let k = node.placed.len() as u8;
        let owner = &node.owner;
        // labels of placed tiles are their placement indices
        'g: for g in &self.space.group {
            let mut map = [NONE; 256];
            let mut next = 0u8;
            for y in 0..self.space.cells {
                let pv = owner[y];
                let t = owner[g.inv[y] as usize];
                if t == NONE {
                    continue 'g;
                }
                if map[t as usize] == NONE {
                    map[t as usize] = next;
                    next += 1;
                }
                let gv = map[t as usize];
                if pv == NONE {
                    if gv < k {
                        return false;
                    }
                    continue 'g;
                }
                if gv < pv {
                    return false;
                }
                if gv > pv {
                    continue 'g;
                }
            }
        }
        true
    }

    /// Counts a node and handles leaves and frontier cut-offs.
    fn dfs(&mut self, node: &mut Node, until_depth: Option<usize>, frontier: &mut Vec<Node>) {
        if self.aborted {
            return;
        }
        self.counters.nodes += 1;
        if self.counters.nodes.is_multiple_of(4096) {
            self.flush_budget();
            if self.aborted {
                return;
            }
        }
        if node.covered == self.space.full {
            self.counters.leaves += 1;
            let s = node.placed.len();
            if s >= self.cfg.min_tiles && s <= self.cfg.max_tiles {
                self.found.push(node.placed.clone());
            }
            return;
        }
        if until_depth == Some(node.placed.len()) {
            frontier.push(node.clone());
            return;
        }
        self.children(node, until_depth, frontier);
    }

    /// Branches over the boxes through the smallest uncovered cell.
    fn children(&mut self, node: &mut Node, until_depth: Option<usize>, frontier: &mut Vec<Node>) {
        if node.placed.len() == self.cfg.max_tiles {
            self.counters.pruned_tile_cap += 1;
            return;
        }
        let cell = (!node.covered).trailing_zeros() as usize;
        for bi in 0..self.space.boxes[cell].len() {
            let mask = self.space.boxes[cell][bi].mask;
            if mask & node.covered != 0 {
                continue;
            }
            let label = node.placed.len() as u8;
            node.covered |= mask;
            node.placed.push((cell as u8, bi as u16));
            for_each_bit(mask, |c| node.owner[c] = label);
            let ok = if self.cfg.rectangle_prune && self.rectangle_violation(node) {
                self.counters.pruned_rectangle += 1;
                false
            } else if !self.space.group.is_empty() && !self.maybe_canonical(node) {
                self.counters.pruned_symmetry += 1;
                false
            } else {
                true
            };
            if ok {
                self.dfs(node, until_depth, frontier);
            }
            for_each_bit(mask, |c| node.owner[c] = NONE);
            node.placed.pop();
            node.covered &= !mask;
            if self.aborted {
                return;
            }
        }
    }

    fn flush_budget(&mut self) {
        if let Some(limit) = self.cfg.max_nodes {
            let total = self.budget.fetch_add(4096, Ordering::Relaxed) + 4096;
            if total >= limit {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
        if self.stop.load(Ordering::Relaxed) {
            self.aborted = true;
        }
    }
}

fn for_each_bit(mut m: u128, mut f: impl FnMut(usize)) {
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        f(b);
        m &= m - 1;
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct TaskResult {
    counters: Counters,
    found: Vec<Vec<(u8, u16)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: serde_json::Value,
    tasks_total: usize,
    frontier: TaskResult,
    completed: BTreeMap<usize, TaskResult>,
}

const CHECKPOINT_VERSION: u32 = 1;

fn read_checkpoint(path: &Path, cfg: &SearchConfig, tasks: usize) -> Result<Option<Checkpoint>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    let ck: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if ck.version != CHECKPOINT_VERSION || ck.config != cfg.fingerprint() || ck.tasks_total != tasks {
        return Err(Error::Checkpoint(format!(
            "{} belongs to a different search configuration",
            path.display()
        )));
    }
    Ok(Some(ck))
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(ck)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Frontier depth: expand whole levels until there are enough tasks.
const MIN_TASKS: usize = 256;
const MAX_SPLIT_DEPTH: usize = 4;

/// Runs the search; resumes from `cfg.checkpoint` when it exists.
pub fn search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let start = Instant::now();
    let space = Space::new(cfg)?;
    let stop = AtomicBool::new(false);
    let budget = AtomicU64::new(0);

    // deterministic frontier: the shallowest cut giving enough tasks
    let unlimited = SearchConfig { max_nodes: None, ..cfg.clone() };
    let never = AtomicBool::new(false);
    let mut frontier_result;
    let mut tasks;
    let mut depth = 1;
    loop {
        let mut w = Walker {
            cfg: &unlimited,
            space: &space,
            counters: Counters::default(),
            found: Vec::new(),
            stop: &never,
            budget: &budget,
            aborted: false,
        };
        tasks = Vec::new();
        w.dfs(&mut Node::root(space.cells), Some(depth), &mut tasks);
        frontier_result = TaskResult {
            counters: w.counters,
            found: w.found,
        };
        if tasks.len() >= MIN_TASKS || depth >= MAX_SPLIT_DEPTH || tasks.is_empty() {
            break;
        }
        depth += 1;
    }

    let mut completed: BTreeMap<usize, TaskResult> = BTreeMap::new();
    if let Some(path) = &cfg.checkpoint {
        if let Some(ck) = read_checkpoint(path, cfg, tasks.len())? {
            completed = ck.completed;
        }
    }

    let pending: Vec<usize> = (0..tasks.len()).filter(|i| !completed.contains_key(i)).collect();
    let shared = Mutex::new((completed, 0u64));
    let run = || -> Result<()> {
        pending.par_iter().try_for_each(|&i| -> Result<()> {
            if stop.load(Ordering::Relaxed) {
                return Ok(());
            }
            let mut w = Walker {
                cfg,
                space: &space,
                counters: Counters::default(),
                found: Vec::new(),
                stop: &stop,
                budget: &budget,
                aborted: false,
            };
            let mut node = tasks[i].clone();
            // the task root was counted by the frontier pass
            w.children(&mut node, None, &mut Vec::new());
            if w.aborted {
                return Ok(());
            }
            if let Some(limit) = cfg.max_nodes {
                // nodes not yet flushed in whole chunks
                let rest = w.counters.nodes % 4096;
                if budget.fetch_add(rest, Ordering::Relaxed) + rest >= limit {
                    stop.store(true, Ordering::Relaxed);
                }
            }
            let mut guard = shared.lock().expect("poisoned");
            guard.1 += w.counters.nodes;
            guard.0.insert(
                i,
                TaskResult {
                    counters: w.counters,
                    found: w.found,
                },
            );
            if let Some(path) = &cfg.checkpoint {
                if guard.1 >= cfg.checkpoint_every {
                    guard.1 = 0;
                    write_checkpoint(
                        path,
                        &Checkpoint {
                            version: CHECKPOINT_VERSION,
                            config: cfg.fingerprint(),
                            tasks_total: tasks.len(),
                            frontier: frontier_result.clone(),
                            completed: guard.0.clone(),
                        },
                    )?;
                }
            }
            Ok(())
        })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    }
    let (completed, _) = shared.into_inner().expect("poisoned");
    if let Some(path) = &cfg.checkpoint {
        write_checkpoint(
            path,
            &Checkpoint {
                version: CHECKPOINT_VERSION,
                config: cfg.fingerprint(),
                tasks_total: tasks.len(),
                frontier: frontier_result.clone(),
                completed: completed.clone(),
            },
        )?;
    }

    let mut counters = frontier_result.counters;
    let mut placements = frontier_result.found.clone();
    for r in completed.values() {
        counters.add(&r.counters);
        placements.extend(r.found.iter().cloned());
    }
    let mut found = Vec::new();
    for p in &placements {
        let tiles = p
            .iter()
            .map(|&(c, b)| space.boxes[c as usize][b as usize].tile.clone())
            .collect();
        let ts = TileStructure::partition(space.dims.clone(), tiles)?;
        if cfg.rectangle_prune {
            verify_found(&ts)?;
        }
        found.push(ts);
    }
    found.sort_by_key(owners_of);
    Ok(SearchResult {
        dims: cfg.dims.clone(),
        found,
        counters,
        tasks_total: tasks.len(),
        tasks_done: completed.len(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        complete: completed.len() == tasks.len(),
    })
}

/// Independent re-verification of a reported structure.
fn verify_found(ts: &TileStructure) -> Result<()> {
    ts.ensure_valid()?;
    let s = ts.num_tiles();
    let ok = if s >= MIN_UTILE_TILES {
        all_ok(&utile_check_all(ts)?)
    } else {
        Bipartition::all(ts.parties()).iter().all(|bp| {
            (1u32..(1 << s) - 1)
                .filter(|m| m.count_ones() >= 2)
                .all(|m| {
                    let subset: Vec<usize> = (0..s).filter(|i| m >> i & 1 == 1).collect();
                    !crate::tiles::is_rectangle_union(&subset, bp, ts).unwrap_or(true)
                })
        })
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidStructure(format!("search reported a violating structure:\n{ts}")))
    }
}

/// Every box partition of the grid (no pruning, no symmetry).
pub fn enumerate_partitions(dims: &[usize]) -> Result<Vec<TileStructure>> {
    let cfg = SearchConfig {
        min_tiles: 2,
        symmetry: false,
        rectangle_prune: false,
        ..SearchConfig::new(dims.to_vec())
    };
    cfg.validate()?;
    let space = Space::new(&cfg)?;
    let mut out = Vec::new();
    fn go(space: &Space, covered: u128, tiles: &mut Vec<Tile>, out: &mut Vec<TileStructure>) -> Result<()> {
        if covered == space.full {
            out.push(TileStructure::partition(space.dims.clone(), tiles.clone())?);
            return Ok(());
        }
        let cell = (!covered).trailing_zeros() as usize;
        for b in &space.boxes[cell] {
            if b.mask & covered == 0 {
                tiles.push(b.tile.clone());
                go(space, covered | b.mask, tiles, out)?;
                tiles.pop();
            }
        }
        Ok(())
    }
    go(&space, 0, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Prune test of the search on an explicit partial structure: true when a
/// union of tiles containing the last tile, other than the whole grid, is a
/// rectangle in some bipartition.
pub fn incremental_prune(partial: &TileStructure) -> Result<bool> {
    let cfg = SearchConfig {
        symmetry: false,
        ..SearchConfig::new(partial.dims().to_vec())
    };
    let space = Space::new(&cfg)?;
    let mut node = Node::root(space.cells);
    for (i, t) in partial.tiles().iter().enumerate() {
        let mask = t.mask(partial.dims());
        if mask & node.covered != 0 {
            return Err(Error::InvalidStructure(format!("tile {i} overlaps earlier tiles")));
        }
        let cell = mask.trailing_zeros() as usize;
        let bi = space.boxes[cell]
            .iter()
            .position(|b| b.mask == mask)
            .ok_or_else(|| Error::InvalidStructure(format!("tile {i} is not a box")))?;
        node.covered |= mask;
        node.placed.push((cell as u8, bi as u16));
    }
    let stop = AtomicBool::new(false);
    let budget = AtomicU64::new(0);
    let w = Walker {
        cfg: &cfg,
        space: &space,
        counters: Counters::default(),
        found: Vec::new(),
        stop: &stop,
        budget: &budget,
        aborted: false,
    };
    Ok(w.rectangle_violation(&node))
}

/// Checkpoint location from `UPBTILE_CHECKPOINT_DIR`, if set.
pub fn default_checkpoint_path(dims: &[usize]) -> Option<PathBuf> {
    let dir = std::env::var_os("UPBTILE_CHECKPOINT_DIR")?;
    let name = dims.iter().map(ToString::to_string).collect::<Vec<_>>().join("x");
    Some(PathBuf::from(dir).join(format!("search-{name}.json")))
}
