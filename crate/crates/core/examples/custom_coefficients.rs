//! Builds S with real orthogonal coefficient matrices in place of the
//! Fourier ones and compares the resulting certificates.
//!
//! cargo run --example custom_coefficients

use tileupb::complement::{is_upb, ComplementModel, Mode};
use tileupb::scalar::CycMatrix;
use tileupb::states::{build_s, upb_333_structure, CoefficientSpec};

fn helmert(k: usize) -> CycMatrix {
    let rows: Vec<Vec<i64>> = (0..k)
        .map(|r| {
            (0..k)
                .map(|c| match r {
                    0 => 1,
                    _ if c < r => 1,
                    _ if c == r => -(r as i64),
                    _ => 0,
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    CycMatrix::from_ints(&refs, 1)
}

fn main() -> tileupb::Result<()> {
    let ts = upb_333_structure();
    let custom = CoefficientSpec::Custom(
        ts.tiles()
            .iter()
            .map(|t| t.sides().into_iter().map(helmert).collect())
            .collect(),
    );
    for (name, spec) in [("fourier", CoefficientSpec::Fourier), ("helmert", custom)] {
        let s = build_s(&ts, &spec)?;
        let model = ComplementModel::from_set(&ts, &s)?;
        let cert = is_upb(&model, &Mode::Multipartite)?;
        println!("{name}: field order {}, |S| = {}, {}", s.order(), s.len(), cert.verdict.as_str());
    }
    Ok(())
}
