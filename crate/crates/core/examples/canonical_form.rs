//! Relabels a tile structure and checks that its canonical key is unchanged.
//!
//! cargo run --example canonical_form

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use tileupb::search::{canonical_form, from_canonical};
use tileupb::states::upb_333_structure;

fn main() -> tileupb::Result<()> {
    let ts = upb_333_structure();
    let mut rng = StdRng::seed_from_u64(7);
    let mut perm: Vec<usize> = (0..ts.parties()).collect();
    perm.shuffle(&mut rng);
    let relabel: Vec<Vec<usize>> = ts
        .dims()
        .iter()
        .map(|&d| {
            let mut p: Vec<usize> = (0..d).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let image = ts.relabeled(&perm, &relabel)?;
    println!("original:\n{ts}\nrelabeled by {perm:?} {relabel:?}:\n{image}");
    let (a, b) = (canonical_form(&ts)?, canonical_form(&image)?);
    println!("same key: {}", a == b);
    println!("representative:\n{}", from_canonical(ts.dims(), &a)?);
    Ok(())
}
