//! Recovers a tile structure from a bare set of product states.
//!
//! cargo run --example infer_structure

use tileupb::complement::infer_structure;
use tileupb::states::builtin;

fn main() -> tileupb::Result<()> {
    for name in ["upb-333", "w-333"] {
        let inst = builtin(name)?;
        let ts = infer_structure(&inst.set)?;
        println!("{name}: {} states -> {} tiles", inst.set.len(), ts.num_tiles());
        println!("{ts}");
    }
    Ok(())
}
