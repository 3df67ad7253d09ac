//! Builds the orthogonal product basis and the reduced set S for a tile
//! structure and checks the size laws.
//!
//! cargo run --example construct_sets

use tileupb::states::{build_opb, build_s, fig1_structure, CoefficientSpec};

fn main() -> tileupb::Result<()> {
    let ts = fig1_structure();
    println!("{ts}");
    let b = build_opb(&ts, &CoefficientSpec::Fourier)?;
    let s = build_s(&ts, &CoefficientSpec::Fourier)?;
    println!("|B| = {} (D = {})", b.len(), ts.cells());
    println!("|S| = {} (D - s + 1 = {})", s.len(), ts.cells() - ts.num_tiles() + 1);
    println!("B orthogonal: {}, S orthogonal: {}", b.is_orthogonal(), s.is_orthogonal());
    for (state, label) in s.iter().take(4) {
        let factors: Vec<String> = state.factors().iter().map(|f| f.to_string()).collect();
        println!("  {label}: {}", factors.join(" ⊗ "));
    }
    Ok(())
}
