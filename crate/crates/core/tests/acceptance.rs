//! Acceptance criteria 1-9, one PASS/FAIL line each.

mod common;

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{brute_force_utile, brute_force_utile_all, corpus, numeric_oracle, permute_parties, product};
use tileupb::complement::{
    complement_model, find_product_states, is_upb, sucpb_certify, ComplementModel, Mode, Verdict, Witness,
};
use tileupb::density::{entangled_via_range, ppt_report, rho_bar, verify_w_completion, PPT_TOL};
use tileupb::scalar::{inner_product, CycNumber, lcm_orders, orthogonal_complement, rank_of, CycVector};
use tileupb::search::{search, SearchConfig};
use tileupb::states::{build_s, builtin, CoefficientSpec};
use tileupb::tiles::{utile_check, Bipartition, TileStructure};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn bp(label: &str) -> Bipartition {
    let n = label.chars().filter(char::is_ascii_alphabetic).count();
    Bipartition::all(n)
        .into_iter()
        .find(|b| b.label() == label)
        .expect("known label")
}

/// Full tensors of the witnesses of all nonempty families.
fn witness_tensors(model: &ComplementModel, mode: &Mode) -> Result<Vec<CycVector>, String> {
    let analysis = find_product_states(model, mode).map_err(e)?;
    analysis
        .nonempty()
        .map(|f| match &f.witness {
            Some(Witness::Exact { coefficients, .. }) => Ok(model.expand(coefficients)),
            _ => Err(format!("family {:?} has no exact witness", f.support)),
        })
        .collect()
}

/// Every expected state is proportional to exactly one witness and vice versa.
fn match_up_to_scale(found: &[CycVector], expected: &[CycVector]) -> Result<(), String> {
    ensure(found.len() == expected.len(), format!("{} families, expected {}", found.len(), expected.len()))?;
    for (i, x) in expected.iter().enumerate() {
        let hits = found
            .iter()
            .filter(|f| {
                let order = lcm_orders([f.order(), x.order()]);
                f.promote(order).unwrap().is_proportional(&x.promote(order).unwrap())
            })
            .count();
        ensure(hits == 1, format!("expected state {i} matched {hits} witnesses"))?;
    }
    Ok(())
}

fn criterion1() -> Check {
    let inst = builtin("fig1-3x4").map_err(e)?;
    let model = ComplementModel::from_set(&inst.structure, &inst.set).map_err(e)?;
    ensure(model.dim() == 5, format!("complement dim {}", model.dim()))?;
    let analysis = find_product_states(&model, &Mode::Multipartite).map_err(e)?;
    let fams: Vec<_> = analysis.nonempty().collect();
    ensure(fams.len() == 1 && !analysis.has_inconclusive(), format!("{} families", fams.len()))?;
    let w = witness_tensors(&model, &Mode::Multipartite)?;
    let expected = product(&[(&[3], &[(1, "0")]), (&[4], &[(1, "0"), (1, "1"), (-2, "2")])], model.order());
    match_up_to_scale(&w, &[expected])?;
    let cert = sucpb_certify(&model, &bp("A|B")).map_err(e)?;
    ensure(
        cert.verdict == Verdict::Sucpb && cert.product_span_dim == 1 && cert.exact,
        format!("{} with span {}", cert.verdict.as_str(), cert.product_span_dim),
    )?;
    Ok("one family ∝ |0⟩(|0⟩+|1⟩−2|2⟩), complement 5, SUCPB span 1 < 5".into())
}

fn criterion2() -> Check {
    let inst = builtin("fig1-3x4").map_err(e)?;
    let model = complement_model(&inst.structure, &[]).map_err(e)?;
    let w = witness_tensors(&model, &Mode::Multipartite)?;
    let extended = complement_model(&inst.structure, &w).map_err(e)?;
    let cert = is_upb(&extended, &Mode::Multipartite).map_err(e)?;
    ensure(cert.verdict == Verdict::Upb, format!("verdict {}", cert.verdict.as_str()))?;
    Ok(format!("S ∪ {{witness}} is a UPB, complement {}", extended.dim()))
}

fn upb333_abc_states(order: u32) -> Vec<CycVector> {
    let a: &[usize] = &[3];
    let bc: &[usize] = &[3, 3];
    vec![
        product(&[(a, &[(1, "1"), (1, "2")]), (bc, &[(1, "00"), (1, "01"), (-1, "02"), (-1, "12")])], order),
        product(&[(a, &[(1, "2")]), (bc, &[(1, "11"), (1, "10"), (1, "20"), (1, "21"), (-4, "22")])], order),
        product(&[(a, &[(1, "0"), (1, "1")]), (bc, &[(1, "10"), (1, "20"), (-1, "21"), (-1, "22")])], order),
        product(&[(a, &[(1, "0")]), (bc, &[(1, "01"), (1, "02"), (1, "12"), (1, "11"), (-4, "00")])], order),
    ]
}

fn criterion3() -> Check {
    let inst = builtin("upb-333").map_err(e)?;
    let model = ComplementModel::from_set(&inst.structure, &inst.set).map_err(e)?;
    ensure(model.dim() == 8, format!("complement dim {}", model.dim()))?;
    let multi = is_upb(&model, &Mode::Multipartite).map_err(e)?;
    ensure(multi.verdict == Verdict::Upb, format!("multipartite {}", multi.verdict.as_str()))?;
    // the layout is invariant under the cyclic shift of parties, which carries
    // the A|BC states to the other two cuts
    let dims = [3, 3, 3];
    let shift = [2, 0, 1];
    let shifted = inst.structure.relabeled(&shift, &[vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]]).map_err(e)?;
    let mut a = shifted.tiles().to_vec();
    let mut b = inst.structure.tiles().to_vec();
    a.sort();
    b.sort();
    ensure(a == b, "layout is not cyclically symmetric")?;
    let base = upb333_abc_states(model.order());
    let once: Vec<CycVector> = base.iter().map(|v| permute_parties(v, &dims, &shift)).collect();
    let twice: Vec<CycVector> = once.iter().map(|v| permute_parties(v, &dims, &shift)).collect();
    for (label, expected) in [("A|BC", &base), ("AC|B", &once), ("AB|C", &twice)] {
        let mode = Mode::Bipartite(bp(label));
        let w = witness_tensors(&model, &mode)?;
        match_up_to_scale(&w, expected).map_err(|m| format!("{label}: {m}"))?;
        let cert = sucpb_certify(&model, &bp(label)).map_err(e)?;
        ensure(
            cert.verdict == Verdict::Sucpb && cert.complement_dim == 8 && cert.product_span_dim == 4,
            format!("{label}: {} span {}", cert.verdict.as_str(), cert.product_span_dim),
        )?;
    }
    Ok("UPB; 4 listed families in each of A|BC, AB|C, AC|B; SUCPB span 4 < 8".into())
}

/// The subspaces O_1..O_4 of the A|BCD cut, as generator sets.
fn upb3333_o_spaces(order: u32) -> Vec<Vec<CycVector>> {
    let a: &[usize] = &[3];
    let bcd: &[usize] = &[3, 3, 3];
    let space = |fa: &[(i64, &str)], groups: &[&[&str]], weights: &[i64]| -> Vec<CycVector> {
        // generators of {Σ a_j g_j : Σ w_j a_j = 0}: g_j w_0 - g_0 w_j
        let gens: Vec<CycVector> = groups
            .iter()
            .map(|g| {
                let terms: Vec<(i64, &str)> = g.iter().map(|k| (1, *k)).collect();
                product(&[(a, fa), (bcd, &terms)], order)
            })
            .collect();
        (1..gens.len())
            .map(|j| {
                gens[j]
                    .scale(&CycNumber::from_int(weights[0], order))
                    .sub_scaled(&CycNumber::from_int(weights[j], order), &gens[0])
            })
            .collect()
    };
    vec![
        space(
            &[(1, "1"), (1, "2")],
            &[&["001", "002", "101", "102"], &["200", "210", "201", "211"], &["122", "222", "112", "212"], &["202"]],
            &[4, 4, 4, 1],
        ),
        space(
            &[(1, "2")],
            &[
                &["111", "020", "010", "110", "011", "021", "120", "121"],
                &["000", "100"],
                &["012", "022"],
                &["220", "221"],
            ],
            &[4, 1, 1, 1],
        ),
        space(
            &[(1, "0"), (1, "1")],
            &[&["221", "220", "121", "120"], &["022", "012", "021", "011"], &["100", "000", "110", "010"], &["020"]],
            &[4, 4, 4, 1],
        ),
        space(
            &[(1, "0")],
            &[
                &["111", "202", "212", "112", "211", "201", "102", "101"],
                &["222", "122"],
                &["210", "200"],
                &["002", "001"],
            ],
            &[4, 1, 1, 1],
        ),
    ]
}

fn upb3333_ab_cd_states(order: u32) -> Vec<CycVector> {
    let ab: &[usize] = &[3, 3];
    let p = |x: &[(i64, &str)], y: &[(i64, &str)]| product(&[(ab, x), (ab, y)], order);
    let four = |xs: [&'static str; 4], z: &'static str| -> Vec<(i64, &'static str)> {
        let mut t: Vec<(i64, &str)> = xs.iter().map(|k| (1, *k)).collect();
        t.push((-4, z));
        t
    };
    vec![
        p(&four(["10", "11", "20", "21"], "00"), &[(1, "01"), (1, "02")]),
        p(&[(1, "12"), (1, "22")], &four(["00", "01", "10", "11"], "02")),
        p(&four(["11", "12", "21", "22"], "20"), &[(1, "12"), (1, "22")]),
        p(&[(1, "20"), (1, "21")], &four(["10", "11", "20", "21"], "00")),
        p(&four(["01", "02", "11", "12"], "22"), &[(1, "20"), (1, "21")]),
        p(&[(1, "00"), (1, "10")], &four(["11", "12", "21", "22"], "20")),
        p(&four(["00", "01", "10", "11"], "02"), &[(1, "00"), (1, "10")]),
        p(&[(1, "01"), (1, "02")], &four(["01", "02", "11", "12"], "22")),
    ]
}

fn criterion4() -> Check {
    let inst = builtin("upb-3333").map_err(e)?;
    let model = ComplementModel::from_set(&inst.structure, &inst.set).map_err(e)?;
    let order = model.order();
    ensure(model.dim() == 16, format!("complement dim {}", model.dim()))?;
    let multi = is_upb(&model, &Mode::Multipartite).map_err(e)?;
    ensure(multi.verdict == Verdict::Upb, format!("multipartite {}", multi.verdict.as_str()))?;
    // A|BCD: span of all product families equals O_1 + ... + O_4
    let o: Vec<CycVector> = upb3333_o_spaces(order).into_iter().flatten().collect();
    ensure(rank_of(&o, order) == 12, "O spaces do not span 12 dimensions")?;
    let analysis = find_product_states(&model, &Mode::Bipartite(bp("A|BCD"))).map_err(e)?;
    ensure(analysis.span_exact(), "A|BCD span not exact")?;
    let fam_span: Vec<CycVector> = analysis
        .nonempty()
        .flat_map(|f| f.basis.iter().map(|a| model.expand(&a.promote(order).unwrap())))
        .collect();
    let mut joint = fam_span.clone();
    joint.extend(o.iter().cloned());
    let (rf, rj) = (rank_of(&fam_span, order), rank_of(&joint, order));
    ensure(rf == 12 && rj == 12, format!("family span {rf}, joint span {rj}"))?;
    for v in &o {
        for m in model.members() {
            ensure(inner_product(v, m).map_err(e)?.is_zero(), "O space not in the complement")?;
        }
    }
    // AB|CD: exactly the eight listed states
    let w = witness_tensors(&model, &Mode::Bipartite(bp("AB|CD")))?;
    match_up_to_scale(&w, &upb3333_ab_cd_states(order)).map_err(|m| format!("AB|CD: {m}"))?;
    let mut spans = Vec::new();
    for b in Bipartition::all(4) {
        let cert = sucpb_certify(&model, &b).map_err(e)?;
        let want = if b.side_c().len() == 2 { 8 } else { 12 };
        ensure(
            cert.verdict == Verdict::Sucpb && cert.product_span_dim == want,
            format!("{}: {} span {}", b.label(), cert.verdict.as_str(), cert.product_span_dim),
        )?;
        if b.side_c().len() == 2 {
            ensure(
                cert.families.iter().filter(|f| f.is_nonempty()).count() == 8,
                format!("{}: family count", b.label()),
            )?;
        }
        spans.push(format!("{}:{}", b.label(), cert.product_span_dim));
    }
    Ok(format!("UPB; O_1+…+O_4 = span (12 < 16); AB|CD 8 listed states; SUCPB in all 7 ({})", spans.join(" ")))
}

fn criterion5() -> Check {
    let inst = builtin("w-333").map_err(e)?;
    let model = ComplementModel::from_set(&inst.structure, &inst.set).map_err(e)?;
    let cert = is_upb(&model, &Mode::Multipartite).map_err(e)?;
    ensure(cert.verdict == Verdict::Upb, format!("multipartite {}", cert.verdict.as_str()))?;
    ensure(verify_w_completion().map_err(e)?, "completion check failed")?;
    Ok("UPB multipartite; 27 orthogonal AB|C-product states complete it".into())
}

fn criterion6() -> Check {
    let mut worst = Vec::new();
    for name in ["fig1-3x4", "upb-333", "upb-3333"] {
        let inst = builtin(name).map_err(e)?;
        let rho = rho_bar(&inst.set).map_err(e)?;
        let reports = ppt_report(&rho, PPT_TOL).map_err(e)?;
        let min = reports.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
        ensure(reports.iter().all(|r| r.passes()), format!("{name}: min eigenvalue {min:e}"))?;
        let model = ComplementModel::from_set(&inst.structure, &inst.set).map_err(e)?;
        ensure(entangled_via_range(&model).map_err(e)?, format!("{name}: range criterion silent"))?;
        worst.push(format!("{name} {min:.2e}"));
    }
    Ok(format!("PPT in every cut, entangled by range (min eig: {})", worst.join(", ")))
}

fn criterion7() -> Check {
    let mut notes = Vec::new();
    for dims in [vec![2, 2], vec![2, 3]] {
        let t = Instant::now();
        let r = search(&SearchConfig::new(dims.clone())).map_err(e)?;
        let el = t.elapsed();
        ensure(
            r.found.is_empty() && r.complete && el < Duration::from_secs(1),
            format!("{dims:?}: {} found, complete {}, {el:?}", r.found.len(), r.complete),
        )?;
        notes.push(format!("{dims:?} empty"));
    }
    let r = search(&SearchConfig::new(vec![3, 3])).map_err(e)?;
    let good: Vec<&TileStructure> = r
        .found
        .iter()
        .filter(|ts| ts.num_tiles() == 5 && ts.validate().is_ok() && brute_force_utile_all(ts))
        .collect();
    ensure(!good.is_empty(), "no verified 5-tile structure on 3x3")?;
    notes.push(format!("[3, 3] {} verified 5-tile", good.len()));
    Ok(notes.join(", "))
}

fn criterion8() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let mut cfg = SearchConfig::new(vec![3, 3, 3]);
    cfg.checkpoint = Some(dir.path().join("search-3x3x3.json"));
    let r = search(&cfg).map_err(e)?;
    ensure(r.complete, "search did not complete")?;
    ensure(r.found.is_empty(), format!("{} structures found", r.found.len()))?;
    Ok(format!("empty and complete ({} nodes, {} tasks)", r.counters.nodes, r.tasks_total))
}

fn criterion9() -> Check {
    // (a) model soundness and (b) rectangle condition ⇒ no product states
    let structures = corpus(0x5eed, 200);
    let mut checked_cuts = 0;
    let mut small = 0;
    for (idx, ts) in structures.iter().enumerate() {
        let s = build_s(ts, &CoefficientSpec::Fourier).map_err(e)?;
        let order = s.order();
        let d = ts.cells();
        let kernel = orthogonal_complement(&s.vectors(), d, order);
        let model = complement_model(ts, &[]).map_err(e)?;
        let basis = model.complement_basis();
        ensure(
            kernel.len() == ts.num_tiles() - 1 && model.dim() == kernel.len(),
            format!("structure {idx}: kernel {} model {} s-1 {}", kernel.len(), model.dim(), ts.num_tiles() - 1),
        )?;
        for v in &basis {
            for m in s.vectors() {
                ensure(inner_product(&m, v).map_err(e)?.is_zero(), format!("structure {idx}: model vector not in kernel"))?;
            }
        }
        if ts.num_tiles() < 5 {
            small += 1;
            continue;
        }
        for b in Bipartition::all(ts.parties()) {
            let verdict = utile_check(ts, &b).map_err(e)?;
            ensure(verdict.is_ok() == brute_force_utile(ts, &b), format!("structure {idx}: rectangle check disagrees"))?;
            if verdict.is_ok() {
                let a = find_product_states(&model, &Mode::Bipartite(b.clone())).map_err(e)?;
                ensure(a.families.is_empty(), format!("structure {idx} {}: families despite condition", b.label()))?;
                checked_cuts += 1;
            }
        }
    }
    // rectangle-free structures are rare in the random corpus; add every
    // structure the search finds on small two-party grids
    let mut searched = 0;
    for dims in [vec![3, 3], vec![3, 4], vec![4, 4], vec![3, 5]] {
        for ts in search(&SearchConfig::new(dims)).map_err(e)?.found {
            let model = complement_model(&ts, &[]).map_err(e)?;
            let a = find_product_states(&model, &Mode::Multipartite).map_err(e)?;
            ensure(a.families.is_empty(), format!("searched structure {ts}: product families"))?;
            searched += 1;
        }
    }
    // (c) numeric cross-oracle
    let mut rng = StdRng::seed_from_u64(0x0a11ce);
    let mut found = 0;
    let mut starts = 0;
    for (idx, ts) in corpus(0xc0ffee, 50).iter().enumerate() {
        let model = complement_model(ts, &[]).map_err(e)?;
        let basis = model.complement_basis();
        let cuts = Bipartition::all(ts.parties());
        for (ci, b) in cuts.iter().enumerate() {
            let analysis = find_product_states(&model, &Mode::Bipartite(b.clone())).map_err(e)?;
            let share = 1000 / cuts.len() + usize::from(ci < 1000 % cuts.len());
            let out = numeric_oracle(ts, &basis, b, &analysis, share, &mut rng);
            ensure(out.unmatched == 0, format!("structure {idx} {}: {} unmatched product states", b.label(), out.unmatched))?;
            found += out.found;
            starts += out.starts;
        }
    }
    Ok(format!(
        "200 models sound, {checked_cuts} rectangle-free cuts product-free ({small} with < 5 tiles) plus {searched} searched structures, {found}/{starts} numeric product states all matched"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 9] = [
        ("1 fig1 example", criterion1, Duration::from_secs(1)),
        ("2 extended set is a UPB", criterion2, Duration::from_secs(1)),
        ("3 upb-333 cuts", criterion3, Duration::from_secs(10)),
        ("4 upb-3333 cuts", criterion4, Duration::from_secs(120)),
        ("5 W counterexample", criterion5, Duration::from_secs(5)),
        ("6 PPT regression", criterion6, Duration::from_secs(60)),
        ("7 small-grid search", criterion7, Duration::from_secs(60)),
        ("8 3x3x3 non-existence", criterion8, Duration::from_secs(12 * 3600)),
        ("9 property suites", criterion9, Duration::from_secs(3600)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t = Instant::now();
        let result = f();
        let el = t.elapsed();
        let result = match result {
            Ok(msg) if el > budget => Err(format!("{msg}; took {el:.2?} > {budget:?}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("criterion {name}: PASS ({el:.2?}) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({el:.2?}) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
