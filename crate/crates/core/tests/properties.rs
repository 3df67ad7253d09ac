mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use tileupb::complement::{complement_model, find_product_states, is_product_tensor, Mode, Witness};
use tileupb::density::{min_eigenvalue, partial_transpose, rho_bar};
use tileupb::scalar::{gram_schmidt, inner_product, orthogonal_complement, rank_of, CycMatrix, CycNumber, CycVector};
use tileupb::search::canonical_form;
use tileupb::states::{build_opb, build_s, tile_indicator, tile_ops, CoefficientSpec, ProductState};
use tileupb::tiles::{flatten, is_rectangle_union, random_tile_structure, utile_check, Bipartition, TileStructure};

const ORDERS: [u32; 7] = [1, 2, 3, 4, 5, 8, 12];

fn structure(seed: u64) -> TileStructure {
    let mut rng = StdRng::seed_from_u64(seed);
    let dims = common::random_dims(&mut rng);
    random_tile_structure(&dims, &mut rng).unwrap()
}

fn cyc(order: u32, coeffs: &[i64]) -> CycNumber {
    coeffs
        .iter()
        .enumerate()
        .fold(CycNumber::zero(order), |acc, (k, &c)| {
            &acc + &(&CycNumber::zeta_power(k as i64, order) * &CycNumber::from_int(c, order))
        })
}

fn cyc_strategy() -> impl Strategy<Value = (u32, Vec<i64>, Vec<i64>, Vec<i64>)> {
    (0..ORDERS.len()).prop_flat_map(|i| {
        let l = ORDERS[i];
        let c = || prop::collection::vec(-4i64..=4, l as usize);
        (Just(l), c(), c(), c())
    })
}

#[derive(Clone, Debug)]
enum Expr {
    Leaf(Vec<i64>),
    /// Σ_k ζ^k over a full cycle of the given divisor order.
    Cycle(u32),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

fn expr_strategy(order: u32) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => prop::collection::vec(-3i64..=3, order as usize).prop_map(Expr::Leaf),
        1 => Just(Expr::Cycle(order)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
        ]
    })
}

/// Exact and numeric values; `None` when a division by zero occurs.
fn eval(e: &Expr, order: u32) -> Option<(CycNumber, Complex64)> {
    let zeta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / order as f64);
    Some(match e {
        Expr::Leaf(c) => (
            cyc(order, c),
            c.iter().enumerate().map(|(k, &x)| zeta.powu(k as u32) * x as f64).sum(),
        ),
        Expr::Cycle(l) => {
            let terms = vec![1; *l as usize];
            (cyc(order, &terms), (0..*l).map(|k| zeta.powu(k)).sum())
        }
        Expr::Add(a, b) => {
            let ((x, u), (y, v)) = (eval(a, order)?, eval(b, order)?);
            (&x + &y, u + v)
        }
        Expr::Sub(a, b) => {
            let ((x, u), (y, v)) = (eval(a, order)?, eval(b, order)?);
            (&x - &y, u - v)
        }
        Expr::Mul(a, b) => {
            let ((x, u), (y, v)) = (eval(a, order)?, eval(b, order)?);
            (&x * &y, u * v)
        }
        Expr::Div(a, b) => {
            let ((x, u), (y, v)) = (eval(a, order)?, eval(b, order)?);
            if y.is_zero() {
                return None;
            }
            (x.div(&y).unwrap(), u / v)
        }
    })
}

fn numeric_rank(m: &DMatrix<Complex64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-8).count()
}

/// Real row-orthogonal matrix with all-ones first row: Helmert rows with
/// shuffled columns and random signs on rows past the first.
fn random_coefficient_matrix(k: usize, rng: &mut StdRng) -> CycMatrix {
    let mut rows: Vec<Vec<i64>> = vec![vec![1; k]];
    for r in 1..k {
        let mut row = vec![0; k];
        for x in row.iter_mut().take(r) {
            *x = 1;
        }
        row[r] = -(r as i64);
        rows.push(row);
    }
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let rows: Vec<Vec<i64>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let sign = if i > 0 && rng.gen_bool(0.5) { -1 } else { 1 };
            perm.iter().map(|&p| sign * row[p]).collect()
        })
        .collect();
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    CycMatrix::from_ints(&refs, 1)
}

/// Projector onto the span of mutually orthogonal vectors.
fn projector(vs: &[CycVector], len: usize, order: u32) -> CycMatrix {
    let mut p = CycMatrix::zeros(len, len, order);
    for v in vs {
        let norm = inner_product(v, v).unwrap().inv().unwrap();
        for i in 0..len {
            if v.get(i).is_zero() {
                continue;
            }
            for j in 0..len {
                let term = &(&(v.get(i) * &v.get(j).conj()) * &norm) + p.get(i, j);
                p.set(i, j, term);
            }
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn field_axioms((order, a, b, c) in cyc_strategy()) {
        let (x, y, z) = (cyc(order, &a), cyc(order, &b), cyc(order, &c));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert!((&x - &x).is_zero());
        if !x.is_zero() {
            prop_assert!((&x * &x.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn embedding_agrees_on_zero_status(
        (order, e) in (0..ORDERS.len()).prop_flat_map(|i| (Just(ORDERS[i]), expr_strategy(ORDERS[i])))
    ) {
        if let Some((exact, numeric)) = eval(&e, order) {
            prop_assume!(numeric.norm().is_finite() && numeric.norm() < 1e6);
            prop_assert_eq!(exact.is_zero(), numeric.norm() < 1e-9, "{} vs {}", exact, numeric);
            prop_assert!((exact.to_c64() - numeric).norm() < 1e-6 * (1.0 + numeric.norm()));
        }
    }

    #[test]
    fn exact_rank_matches_numeric_rank(
        order in prop::sample::select(vec![1u32, 3, 4, 8]),
        (rows, cols, inner) in (1usize..6, 1usize..6, 1usize..4),
        seed in any::<u64>(),
    ) {
        // a product of two random factors, so rank deficiency is common
        let mut rng = StdRng::seed_from_u64(seed);
        let mut random = |r: usize, c: usize| {
            let mut m = CycMatrix::zeros(r, c, order);
            for i in 0..r {
                for j in 0..c {
                    let coeffs: Vec<i64> = (0..order).map(|_| rng.gen_range(-2..=2)).collect();
                    m.set(i, j, cyc(order, &coeffs));
                }
            }
            m
        };
        let (a, b) = (random(rows, inner), random(inner, cols));
        let mut m = CycMatrix::zeros(rows, cols, order);
        for i in 0..rows {
            for j in 0..cols {
                let mut s = CycNumber::zero(order);
                for k in 0..inner {
                    s = &s + &(a.get(i, k) * b.get(k, j));
                }
                m.set(i, j, s);
            }
        }
        prop_assert_eq!(m.rank(), numeric_rank(&m.to_c64()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flattening_preserves_cells(seed in any::<u64>()) {
        let ts = structure(seed);
        for bp in Bipartition::all(ts.parties()) {
            let rects = flatten(&ts, &bp).unwrap();
            let total: usize = rects.iter().map(|r| r.area()).sum();
            prop_assert_eq!(total, bp.h1(ts.dims()) * bp.h2(ts.dims()));
            let all: Vec<usize> = (0..ts.num_tiles()).collect();
            prop_assert!(is_rectangle_union(&all, &bp, &ts).unwrap());
            for i in 0..ts.num_tiles() {
                prop_assert!(is_rectangle_union(&[i], &bp, &ts).unwrap());
            }
        }
    }

    #[test]
    fn rectangle_check_is_invariant_under_relabeling(seed in any::<u64>()) {
        let ts = structure(seed);
        prop_assume!(ts.num_tiles() >= 5);
        let mut rng = StdRng::seed_from_u64(seed ^ 0x9e37);
        let relabel: Vec<Vec<usize>> = ts.dims().iter().map(|&d| {
            let mut p: Vec<usize> = (0..d).collect();
            p.shuffle(&mut rng);
            p
        }).collect();
        let identity: Vec<usize> = (0..ts.parties()).collect();
        let image = ts.relabeled(&identity, &relabel).unwrap();
        for bp in Bipartition::all(ts.parties()) {
            let a = utile_check(&ts, &bp).unwrap().is_ok();
            prop_assert_eq!(a, utile_check(&image, &bp).unwrap().is_ok());
            prop_assert_eq!(a, utile_check(&ts, &bp.swapped()).unwrap().is_ok());
            prop_assert_eq!(a, common::brute_force_utile(&ts, &bp));
        }
    }

    #[test]
    fn canonical_form_is_invariant(seed in any::<u64>()) {
        let ts = structure(seed);
        let mut rng = StdRng::seed_from_u64(!seed);
        let relabel: Vec<Vec<usize>> = ts.dims().iter().map(|&d| {
            let mut p: Vec<usize> = (0..d).collect();
            p.shuffle(&mut rng);
            p
        }).collect();
        let identity: Vec<usize> = (0..ts.parties()).collect();
        let image = ts.relabeled(&identity, &relabel).unwrap();
        prop_assert_eq!(canonical_form(&ts).unwrap(), canonical_form(&image).unwrap());
    }

    #[test]
    fn construction_size_laws(seed in any::<u64>()) {
        let ts = structure(seed);
        let d = ts.cells();
        let b = build_opb(&ts, &CoefficientSpec::Fourier).unwrap();
        prop_assert_eq!(b.len(), d);
        prop_assert!(b.is_orthogonal());
        let s = build_s(&ts, &CoefficientSpec::Fourier).unwrap();
        prop_assert_eq!(s.len(), d - ts.num_tiles() + 1);
        prop_assert!(s.is_orthogonal());
        let order = b.order();
        for i in 0..ts.num_tiles() {
            let mats = CoefficientSpec::Fourier.matrices(&ts, i);
            let ops = tile_ops(&ts, i, &mats, order).unwrap();
            prop_assert_eq!(ops.states()[0].vector(), tile_indicator(&ts, i, order).vector());
        }
    }

    #[test]
    fn coefficient_choice_keeps_the_span(seed in any::<u64>()) {
        let ts = structure(seed);
        let mut rng = StdRng::seed_from_u64(seed.rotate_left(7));
        let custom: Vec<Vec<CycMatrix>> = ts.tiles().iter()
            .map(|t| t.sides().into_iter().map(|k| random_coefficient_matrix(k, &mut rng)).collect())
            .collect();
        let spec = CoefficientSpec::Custom(custom);
        let a = build_s(&ts, &CoefficientSpec::Fourier).unwrap();
        let b = build_s(&ts, &spec).unwrap();
        prop_assert_eq!(a.len(), b.len());
        prop_assert!(b.is_orthogonal());
        let order = tileupb::scalar::lcm_orders([a.order(), b.order()]);
        let (a, b) = (a.promote(order).unwrap(), b.promote(order).unwrap());
        let mut joint = a.vectors();
        joint.extend(b.vectors());
        let r = rank_of(&a.vectors(), order);
        prop_assert_eq!(r, rank_of(&b.vectors(), order));
        prop_assert_eq!(r, rank_of(&joint, order));
    }

    #[test]
    fn model_matches_exact_kernel(seed in any::<u64>()) {
        let ts = structure(seed);
        let s = build_s(&ts, &CoefficientSpec::Fourier).unwrap();
        let model = complement_model(&ts, &[]).unwrap();
        prop_assert_eq!(model.dim(), ts.num_tiles() - 1);
        let kernel = orthogonal_complement(&s.vectors(), ts.cells(), s.order());
        prop_assert_eq!(kernel.len(), model.dim());
        let mut joint = kernel.clone();
        joint.extend(model.complement_basis());
        prop_assert_eq!(rank_of(&joint, s.order()), kernel.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn witnesses_are_orthogonal_product_states(seed in any::<u64>()) {
        let ts = structure(seed);
        let model = complement_model(&ts, &[]).unwrap();
        let mut modes = vec![Mode::Multipartite];
        modes.extend(Bipartition::all(ts.parties()).into_iter().map(Mode::Bipartite));
        for mode in modes {
            let analysis = find_product_states(&model, &mode).unwrap();
            for f in analysis.nonempty() {
                let Some(Witness::Exact { coefficients, .. }) = &f.witness else { continue };
                let v = model.expand(coefficients);
                prop_assert!(!v.is_zero());
                for m in model.members() {
                    let order = tileupb::scalar::lcm_orders([m.order(), v.order()]);
                    let ip = inner_product(&m.promote(order).unwrap(), &v.promote(order).unwrap()).unwrap();
                    prop_assert!(ip.is_zero());
                }
                let dims: Vec<usize> = match &mode {
                    Mode::Multipartite => ts.dims().to_vec(),
                    Mode::Bipartite(_) => vec![ts.cells()],
                };
                if let Mode::Bipartite(bp) = &mode {
                    // rank one in the flattening
                    let flat = tileupb::states::flatten_vector(&v, ts.dims(), bp).unwrap();
                    prop_assert_eq!(flat.rank(), 1);
                } else {
                    prop_assert!(is_product_tensor(&v, &dims).unwrap().is_some());
                }
            }
        }
    }

    #[test]
    fn extra_states_never_add_families(seed in any::<u64>()) {
        let ts = structure(seed);
        let base = complement_model(&ts, &[]).unwrap();
        let analysis = find_product_states(&base, &Mode::Multipartite).unwrap();
        let extras: Vec<CycVector> = analysis
            .nonempty()
            .filter_map(|f| match &f.witness {
                Some(Witness::Exact { coefficients, .. }) => Some(base.expand(coefficients)),
                _ => None,
            })
            .take(2)
            .collect();
        prop_assume!(!extras.is_empty());
        let order = tileupb::scalar::lcm_orders(extras.iter().map(CycVector::order).chain([base.order()]));
        let extras: Vec<CycVector> = extras.iter().map(|v| v.promote(order).unwrap()).collect();
        // keep the extras mutually orthogonal so they can join an orthogonal set
        let extras = if extras.len() == 2 && !inner_product(&extras[0], &extras[1]).unwrap().is_zero() {
            vec![extras[0].clone()]
        } else {
            extras
        };
        let grown = complement_model(&ts, &extras).unwrap();
        let before: std::collections::BTreeSet<Vec<usize>> =
            analysis.nonempty().map(|f| f.support.clone()).collect();
        let after = find_product_states(&grown, &Mode::Multipartite).unwrap();
        for f in after.nonempty() {
            prop_assert!(before.contains(&f.support));
        }
    }

    #[test]
    fn rho_bar_is_the_scaled_complement_projector(seed in any::<u64>()) {
        let ts = structure(seed);
        prop_assume!(ts.cells() <= 24 && ts.num_tiles() >= 2);
        let s = build_s(&ts, &CoefficientSpec::Fourier).unwrap();
        let rho = rho_bar(&s).unwrap();
        let d = ts.cells();
        let basis = gram_schmidt(&orthogonal_complement(&s.vectors(), d, s.order()));
        let p = projector(&basis, d, s.order());
        let scale = CycNumber::from_frac(1, (d - s.len()) as i64, s.order());
        for i in 0..d {
            for j in 0..d {
                prop_assert_eq!(rho.exact().get(i, j), &(p.get(i, j) * &scale));
            }
        }
        prop_assert!(rho.trace().is_one());
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let dims = common::random_dims(&mut rng);
        let d: usize = dims.iter().product();
        let order = 4;
        let mut m = CycMatrix::zeros(d, d, order);
        for i in 0..d {
            for j in 0..d {
                if rng.gen_bool(0.3) {
                    let coeffs: Vec<i64> = (0..order).map(|_| rng.gen_range(-3..=3)).collect();
                    m.set(i, j, cyc(order, &coeffs));
                }
            }
        }
        let parties: Vec<usize> = (0..dims.len()).filter(|_| rng.gen_bool(0.5)).collect();
        let twice = partial_transpose(&partial_transpose(&m, &dims, &parties).unwrap(), &dims, &parties).unwrap();
        prop_assert_eq!(twice, m);
    }

    #[test]
    fn separable_mixtures_have_positive_partial_transpose(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let dims = common::random_dims(&mut rng);
        let d: usize = dims.iter().product();
        let order = 4;
        let mut rho = CycMatrix::zeros(d, d, order);
        for _ in 0..rng.gen_range(1..5) {
            let factors: Vec<CycVector> = dims.iter().map(|&k| {
                let entries = (0..k).map(|_| {
                    let coeffs: Vec<i64> = (0..order).map(|_| rng.gen_range(-2..=2)).collect();
                    cyc(order, &coeffs)
                }).collect();
                CycVector::new(order, entries).unwrap()
            }).collect();
            let Ok(state) = ProductState::new(factors) else { continue };
            let v = state.vector();
            let weight = CycNumber::from_int(rng.gen_range(1..4), order);
            for i in 0..d {
                for j in 0..d {
                    let t = &(&(v.get(i) * &v.get(j).conj()) * &weight) + rho.get(i, j);
                    rho.set(i, j, t);
                }
            }
        }
        let scale = rho.to_c64().norm().max(1.0);
        for bp in Bipartition::all(dims.len()) {
            let pt = partial_transpose(&rho, &dims, bp.side_d()).unwrap();
            prop_assert!(min_eigenvalue(pt.to_c64()) >= -1e-9 * scale);
        }
    }
}
