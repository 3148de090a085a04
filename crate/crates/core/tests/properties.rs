use std::sync::Arc;

use hypereg::counting::{intersection_is_empty, product_density};
use hypereg::geometry::{common_refinement, split_cell, BoxCell, BoxPartition, EdgeGeometry};
use hypereg::measure::{EdgeFunction, HypergraphSystem};
use hypereg::norms::{box_norm, cut_norm, OracleMode};
use hypereg::params::ceil_robust;
use hypereg::regularity::{decompose, DecomposeCaps, GrowthFunction};
use hypereg::zn::{ap_average, ApMode, ZnWeight};
use proptest::prelude::*;

fn square(m: usize) -> HypergraphSystem<f64> {
    HypergraphSystem::uniform(2, m, vec![vec![0, 1]]).unwrap()
}

fn cell(geom: &Arc<EdgeGeometry<f64>>, bits: &[bool]) -> BoxCell<f64> {
    let mut it = bits.iter().copied();
    let masks = geom.boundary().iter().map(|b| (0..b.size()).map(|_| it.next().unwrap_or(true)).collect()).collect();
    BoxCell::new(Arc::clone(geom), masks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_is_sandwiched(vals in prop::collection::vec(-1.0f64..1.0, 16), seed in 0u64..1000) {
        let s = square(4);
        let f = EdgeFunction::new(s.edge_face(0), vals).unwrap();
        let exact = cut_norm(&f, OracleMode::Exact, seed, 1 << 20).unwrap();
        let greedy = cut_norm(&f, OracleMode::Greedy, seed, 1 << 20).unwrap();
        prop_assert!(greedy.value <= exact.value + 1e-12);
        prop_assert!(exact.value <= box_norm(&f) + 1e-9);
        prop_assert!(exact.value <= f.lp_norm(1.0).unwrap() + 1e-12);
        let on_witness = f.integrate(Some(&exact.cell)).unwrap().abs();
        prop_assert!((on_witness - exact.value).abs() < 1e-12);
    }

    #[test]
    fn conditional_expectation_preserves_cell_mass(
        vals in prop::collection::vec(0.0f64..3.0, 25),
        bits in prop::collection::vec(any::<bool>(), 10),
        frac in 0.05f64..1.0,
    ) {
        let s = square(5);
        let geom = EdgeGeometry::new(s.edge_face(0));
        let a = cell(&geom, &bits);
        prop_assume!(a.measure() > 0.0);
        let q = split_cell(&a, a.measure() * frac).unwrap().q;
        let f = EdgeFunction::new(s.edge_face(0), vals).unwrap();
        let e = f.cond_exp(&q).unwrap();
        let a_int = f.cell_integrals(&q).unwrap();
        let b_int = e.cell_integrals(&q).unwrap();
        for (x, y) in a_int.iter().zip(&b_int) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let twice = e.cond_exp(&q).unwrap();
        for (x, y) in twice.values().iter().zip(e.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(e.is_measurable(&q));
    }

    #[test]
    fn common_refinement_refines_both(
        b1 in prop::collection::vec(any::<bool>(), 8),
        b2 in prop::collection::vec(any::<bool>(), 8),
    ) {
        let s = square(4);
        let geom = EdgeGeometry::new(s.edge_face(0));
        let parts: Vec<BoxPartition<f64>> = [b1, b2]
            .iter()
            .filter_map(|b| {
                let a = cell(&geom, b);
                (a.measure() > 0.0).then(|| split_cell(&a, a.measure() / 2.0).unwrap().q)
            })
            .collect();
        prop_assume!(parts.len() == 2);
        let r = common_refinement(&parts[0], &parts[1]).unwrap();
        prop_assert!(r.refines(&parts[0]) && r.refines(&parts[1]));
        let total: f64 = r.measures().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_parts_sum_back(vals in prop::collection::vec(prop_oneof![Just(0.0f64), 0.5f64..4.0], 48)) {
        let s = HypergraphSystem::<f64>::simplex(2, 4).unwrap();
        let fs: Vec<_> = vals.chunks(16).enumerate().map(|(e, v)| EdgeFunction::new(s.edge_face(e), v.to_vec()).unwrap()).collect();
        let c = fs.iter().map(|f| f.lp_norm(2.0).unwrap()).fold(1.0, f64::max);
        let g = GrowthFunction::affine(4.0, 1.0).unwrap();
        let d = decompose(&s, &fs, &g, c, 2.0, 0.25, DecomposeCaps::default()).unwrap();
        for (f, e) in fs.iter().zip(&d.edges) {
            prop_assert!(e.q.refines(&e.p));
            for x in 0..16 {
                let sum = e.f_str.values()[x] + e.f_err.values()[x] + e.f_unf.values()[x];
                prop_assert!((sum - f.values()[x]).abs() < 1e-12);
            }
            // Pythagoras for nested conditional expectations.
            let p_norm = e.f_str.lp_norm(2.0).unwrap().powi(2);
            let q_norm = e.f_str.add(&e.f_err).unwrap().lp_norm(2.0).unwrap().powi(2);
            let err = e.f_err.lp_norm(2.0).unwrap().powi(2);
            prop_assert!((p_norm + err - q_norm).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_growth_is_admissible(a in 0.0f64..10.0, b in -5.0f64..10.0, m in 0u64..10_000) {
        let g = GrowthFunction::affine(a, b).unwrap();
        prop_assert!(g.eval(m) >= (m + 1) as f64);
        prop_assert!(g.eval(m + 1) > g.eval(m));
    }

    #[test]
    fn density_is_monotone(
        lo in prop::collection::vec(0.0f64..1.0, 27),
        bump in prop::collection::vec(0.0f64..1.0, 27),
    ) {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let f: Vec<_> = lo.chunks(9).enumerate().map(|(e, v)| EdgeFunction::new(s.edge_face(e), v.to_vec()).unwrap()).collect();
        let g: Vec<_> = f.iter().zip(bump.chunks(9)).map(|(f, b)| f.zip_with(&EdgeFunction::new(f.face().clone(), b.to_vec()).unwrap(), |x, y| x + y).unwrap()).collect();
        let df = product_density(&s, &f).unwrap();
        let dg = product_density(&s, &g).unwrap();
        prop_assert!(df >= 0.0 && df <= dg + 1e-12);
        let sup: f64 = g.iter().map(|h| h.sup_abs()).product();
        prop_assert!(dg <= sup + 1e-12);
    }

    #[test]
    fn support_masks_of_zero_density_are_disjoint(bits in prop::collection::vec(any::<bool>(), 27)) {
        let s = HypergraphSystem::<f64>::simplex(2, 3).unwrap();
        let masks: Vec<Vec<bool>> = bits.chunks(9).map(|c| c.to_vec()).collect();
        let fs: Vec<_> = masks.iter().enumerate().map(|(e, m)| {
            EdgeFunction::new(s.edge_face(e), m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).unwrap()
        }).collect();
        let zero = product_density(&s, &fs).unwrap() == 0.0;
        prop_assert_eq!(intersection_is_empty(&s, &masks).unwrap(), zero);
    }

    #[test]
    fn progression_average_is_shift_and_dilation_invariant(
        vals in prop::collection::vec(0.0f64..2.0, 13),
        t in 0u64..13,
        u in 1u64..13,
    ) {
        let f = ZnWeight::new(vals).unwrap();
        for k in 3..=4 {
            let base = ap_average(&f, k, ApMode::Direct).unwrap();
            prop_assert!((ap_average(&f.shift(t), k, ApMode::Direct).unwrap() - base).abs() < 1e-12);
            prop_assert!((ap_average(&f.dilate(u), k, ApMode::Direct).unwrap() - base).abs() < 1e-12);
        }
        let fft = ap_average(&f, 3, ApMode::Fft).unwrap();
        prop_assert!((fft - ap_average(&f, 3, ApMode::Direct).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn robust_ceiling(n in 1u64..1_000_000, noise in -1e-13f64..1e-13, frac in 0.01f64..0.99) {
        let x = n as f64;
        prop_assert_eq!(ceil_robust(x * (1.0 + noise)), n);
        prop_assert_eq!(ceil_robust(x + frac), n + 1);
    }
}
