//! Forms the normalised complement projector of a built-in set and prints
//! its smallest partial-transpose eigenvalue in each cut.
//!
//! cargo run --release --example ppt_projector -- upb-333

use tileupb::complement::ComplementModel;
use tileupb::density::{entangled_via_range, ppt_report, rho_bar, PPT_TOL};
use tileupb::states::builtin;

fn main() -> tileupb::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "upb-333".into());
    let inst = builtin(&name)?;
    let rho = rho_bar(&inst.set)?;
    println!("{}: dimension {}, trace {}, hermitian {}", inst.name, rho.dim(), rho.trace(), rho.is_hermitian());
    for r in ppt_report(&rho, PPT_TOL)? {
        println!("  {:<6} min eigenvalue {:+.3e} {}", r.bipartition.label(), r.min_eigenvalue, if r.passes() { "ppt" } else { "npt" });
    }
    let model = ComplementModel::from_set(&inst.structure, &inst.set)?;
    println!("entangled by range: {}", entangled_via_range(&model)?);
    Ok(())
}
