//! Exhaustive search for tile structures passing the rectangle criterion in
//! every bipartition.
//!
//! cargo run --release --example search_grid -- 3,3 [max_nodes]

use tileupb::search::{search, SearchConfig};

fn main() -> tileupb::Result<()> {
    let mut args = std::env::args().skip(1);
    let dims: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "3,3".into())
        .split(',')
        .map(|d| d.trim().parse().expect("dimension"))
        .collect();
    let mut cfg = SearchConfig::new(dims);
    cfg.max_nodes = args.next().map(|n| n.parse().expect("node budget"));
    let r = search(&cfg)?;
    println!(
        "dims {:?}: {} structures, {} nodes, {} leaves, pruned rect {} sym {}, {}/{} tasks, complete {}, {:.2}s",
        r.dims,
        r.found.len(),
        r.counters.nodes,
        r.counters.leaves,
        r.counters.pruned_rectangle,
        r.counters.pruned_symmetry,
        r.tasks_done,
        r.tasks_total,
        r.complete,
        r.wall_time_secs
    );
    for ts in r.found.iter().take(5) {
        println!("{ts}");
    }
    Ok(())
}
