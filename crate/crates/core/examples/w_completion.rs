//! Completes the W set to a full orthogonal product basis across AB|C.
//!
//! cargo run --example w_completion

use tileupb::density::{verify_w_completion, w_completion_states};

fn main() -> tileupb::Result<()> {
    let states = w_completion_states()?;
    println!("{} states", states.len());
    println!("orthogonal and product across AB|C: {}", verify_w_completion()?);
    Ok(())
}
