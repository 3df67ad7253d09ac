//! Runs the UPB and per-bipartition span tests on a built-in instance.
//!
//! cargo run --release --example certify_builtin -- upb-333

use std::time::Instant;

use tileupb::complement::{check_every_bipartition, is_upb, ComplementModel, Mode};
use tileupb::states::builtin;

fn main() -> tileupb::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "upb-333".into());
    let inst = builtin(&name)?;
    let start = Instant::now();
    let model = ComplementModel::from_set(&inst.structure, &inst.set)?;
    println!("{}: {} states, complement dimension {}", inst.name, inst.set.len(), model.dim());

    let multi = is_upb(&model, &Mode::Multipartite)?;
    println!("multipartite: {}", multi.verdict.as_str());

    if inst.structure.parties() > 2 {
        let every = check_every_bipartition(&model)?;
        for r in &every.reports {
            println!(
                "  {:<6} upb={:<8} span={:<13} families={:<3} span dim {} / {}",
                r.bipartition.label(),
                r.upb.verdict.as_str(),
                r.sucpb.verdict.as_str(),
                r.upb.families.len(),
                r.sucpb.product_span_dim,
                r.sucpb.complement_dim
            );
        }
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
