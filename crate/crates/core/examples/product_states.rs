//! Enumerates the product states in the complement of the fig1 set and
//! shows that adding one witness makes it unextendible.
//!
//! cargo run --example product_states

use tileupb::complement::{complement_model, find_product_states, is_upb, Mode, Witness};

fn main() -> tileupb::Result<()> {
    let ts = tileupb::states::fig1_structure();
    let model = complement_model(&ts, &[])?;
    println!("complement dimension {}", model.dim());
    let analysis = find_product_states(&model, &Mode::Multipartite)?;
    let mut extra = Vec::new();
    for f in analysis.nonempty() {
        println!("support {:?}: {:?}, span {}", f.support, f.kind, f.basis.len());
        if let Some(Witness::Exact { coefficients, factors }) = &f.witness {
            println!("  witness a = {coefficients}");
            for (k, v) in factors.iter().enumerate() {
                println!("  factor {k}: {v}");
            }
            extra.push(model.expand(coefficients));
        }
    }
    let grown = complement_model(&ts, &extra)?;
    println!("with witness: {}", is_upb(&grown, &Mode::Multipartite)?.verdict.as_str());
    Ok(())
}
