use std::sync::Arc;

use caloronkit::chernweil::{chern_character, chern_simons, odd_chern_character, ConnectionPath};
use caloronkit::forms::{sym_trace, MatrixForm};
use caloronkit::geometry::{ConnectionPair, PairPath};
use caloronkit::grid::{Grid, GridSpec};
use caloronkit::kmodel::{direct_sum, inverse_witness};
use caloronkit::lie::holonomy;
use caloronkit::random::{random_one_form, random_pair, random_smooth_map, RandomSpec};
use caloronkit::stringforms::*;
use num_complex::Complex;
use proptest::prelude::*;

fn torus(n: &[usize]) -> Arc<Grid<f64>> {
    Grid::new(GridSpec::torus(n)).unwrap()
}

fn looped(n: &[usize], m: usize) -> Arc<Grid<f64>> {
    Grid::new(GridSpec::torus_with_loop(n, m)).unwrap()
}

fn spec(seed: u64, amp: f64) -> RandomSpec {
    RandomSpec::new(seed, 1, amp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn d_squared_vanishes(seed in 0u64..1000) {
        let g = torus(&[8, 8, 8]);
        let a = random_one_form(&g, 2, &spec(seed, 0.3), false, false, 0b111).unwrap();
        prop_assert!(a.d().d().max_abs() < 1e-12);
        prop_assert!(a.wedge(&a).unwrap().d().d().max_abs() < 1e-12);
    }

    #[test]
    fn scalar_wedge_is_graded_commutative(seed in 0u64..1000) {
        let g = torus(&[8, 8, 8]);
        let a = random_one_form(&g, 1, &spec(seed, 0.3), false, false, 0b111).unwrap();
        let b = random_one_form(&g, 1, &spec(seed, 0.3).fork(1), false, false, 0b111).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        prop_assert!(ab.add(&ba).unwrap().max_abs() < 1e-15);
        let c = ab.wedge(&a).unwrap();
        prop_assert!(c.max_abs_diff(&a.wedge(&ab).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn sym_trace_is_graded_symmetric(seed in 0u64..1000) {
        let g = torus(&[8, 8, 8, 8]);
        let a = random_one_form(&g, 2, &spec(seed, 0.4), true, false, 0b1111).unwrap();
        let b = random_one_form(&g, 2, &spec(seed, 0.4).fork(1), true, false, 0b1111).unwrap();
        let f = a.d().add(&a.wedge(&a).unwrap()).unwrap();
        let x = sym_trace(&[&a, &b, &f]).unwrap();
        prop_assert!(x.add(&sym_trace(&[&b, &a, &f]).unwrap()).unwrap().max_abs() < 1e-15);
        prop_assert!(x.max_abs_diff(&sym_trace(&[&f, &a, &b]).unwrap()).unwrap() < 1e-15);
        prop_assert!(sym_trace(&[&a, &a, &f]).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn caloron_roundtrip_is_bit_exact(seed in 0u64..1000) {
        let g = looped(&[8, 8], 12);
        let p = random_pair(&g, 2, &spec(seed, 0.3), true).unwrap();
        let q = p.caloron_transform().inverse_caloron().unwrap();
        prop_assert_eq!(p.a().components(), q.a().components());
        prop_assert_eq!(p.phi().components(), q.phi().components());
    }

    #[test]
    fn chern_simons_transgresses(seed in 0u64..1000) {
        let g = torus(&[8, 8, 8]);
        let a0 = random_one_form(&g, 2, &spec(seed, 0.3), true, false, 0b111).unwrap();
        let a1 = random_one_form(&g, 2, &spec(seed, 0.3).fork(1), true, false, 0b111).unwrap();
        let delta = chern_character(&a1, 2).unwrap().sub(&chern_character(&a0, 2).unwrap()).unwrap();
        let cs = chern_simons(&ConnectionPath::straight_line(a0, a1).unwrap(), 2).unwrap();
        prop_assert!(cs.d().max_defect(&delta).unwrap() < 1e-12);
    }

    #[test]
    fn string_forms_agree_and_are_closed(seed in 0u64..1000) {
        let g = looped(&[8, 8], 12);
        let p = random_pair(&g, 2, &spec(seed, 0.3), true).unwrap();
        let a = string_form(&p, 2, StringFormAlgorithm::Direct).unwrap();
        let b = string_form(&p, 2, StringFormAlgorithm::ViaCaloron).unwrap();
        prop_assert!(a.max_defect(&b).unwrap() < 1e-12);
        prop_assert!(a.d().max_abs() < 1e-12);
    }

    #[test]
    fn string_potential_reverses_sign(seed in 0u64..1000) {
        let g = looped(&[8, 8], 12);
        let p0 = random_pair(&g, 2, &spec(seed, 0.3), true).unwrap();
        let p1 = random_pair(&g, 2, &spec(seed, 0.3).fork(1), true).unwrap();
        let fwd = PairPath::straight_line(p0.clone(), p1.clone()).unwrap();
        let back = PairPath::straight_line(p1, p0).unwrap();
        let s = string_potential(&fwd, 2, PotentialAlgorithm::Explicit, None).unwrap();
        let r = string_potential(&back, 2, PotentialAlgorithm::Explicit, None).unwrap();
        prop_assert!(s.add(&r).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn string_form_is_additive(seed in 0u64..1000) {
        let g = looped(&[8, 8], 12);
        let p0 = random_pair(&g, 1, &spec(seed, 0.3), true).unwrap();
        let p1 = random_pair(&g, 2, &spec(seed, 0.3).fork(1), true).unwrap();
        let sum = direct_sum(&p0, &p1).unwrap();
        prop_assert_eq!(sum.rank(), 3);
        let lhs = string_form(&sum, 2, StringFormAlgorithm::Direct).unwrap();
        let rhs = string_form(&p0, 2, StringFormAlgorithm::Direct).unwrap()
            .add(&string_form(&p1, 2, StringFormAlgorithm::Direct).unwrap()).unwrap();
        prop_assert!(lhs.max_defect(&rhs).unwrap() < 1e-14);
    }

    #[test]
    fn total_potential_differential_is_string_form(seed in 0u64..1000) {
        let g = looped(&[8, 8], 12);
        let p = random_pair(&g, 2, &spec(seed, 0.3), true).unwrap();
        let t = total_string_potential(&p, 2).unwrap();
        let s = string_form(&p, 2, StringFormAlgorithm::Direct).unwrap();
        prop_assert!(t.d().max_defect(&s).unwrap() < 1e-12);
    }

    #[test]
    fn universal_string_form_is_odd_chern(seed in 0u64..1000) {
        let g = torus(&[8, 8, 8]);
        let m = random_smooth_map(&g, 2, &spec(seed, 0.5), false, false).unwrap();
        let u = universal_string_pullback(&m, 1).unwrap();
        prop_assert!(u.max_defect(&odd_chern_character(&m, 1).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn inverse_witness_is_equivalent(seed in 0u64..1000) {
        let g = torus(&[32, 32]);
        let m = random_smooth_map(&g, 2, &spec(seed, 0.3), true, false).unwrap();
        let w = inverse_witness(&m, 2, 1e-9, None).unwrap();
        prop_assert!(w.report.is_equivalent());
    }

    #[test]
    fn unitary_holonomy_stays_unitary(re in -1.0f64..1.0, im in -1.0f64..1.0, d in -1.0f64..1.0) {
        let phi = [Complex::new(0.0, d), Complex::new(re, im), Complex::new(-re, im), Complex::new(0.0, -d)];
        let samples: Vec<_> = (0..8).flat_map(|_| phi).collect();
        let h = holonomy(&samples, 2, 256, true).unwrap();
        let hh = caloronkit::linalg::matmul(&caloronkit::linalg::adjoint(&h, 2), &h, 2);
        prop_assert!(caloronkit::linalg::max_abs_diff(&hh, &caloronkit::linalg::identity(2)) < 1e-13);
    }

    #[test]
    fn coefficients_match_rationals(j in 1usize..=12, i in 0usize..12) {
        prop_assume!(i < j);
        let exact = string_coefficient_exact(i, j);
        let float = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((string_coefficient::<f64>(i, j) - float).abs() <= 1e-15 * float.abs());
    }
}

#[test]
fn constant_higgs_total_potential_is_trace_average() {
    let g = looped(&[8, 8], 16);
    let mut phi = MatrixForm::<f64>::zeros(&g, 0, 2);
    for m in phi.component_mut(0).chunks_mut(4) {
        m[0] = Complex::new(0.0, 0.4);
        m[3] = Complex::new(0.0, -0.1);
    }
    let p = ConnectionPair::new(MatrixForm::zeros(&g, 1, 2), phi, true).unwrap();
    let t = total_string_potential(&p, 2).unwrap();
    // (1/2 pi i) * 2 pi * tr(Phi) = 0.3
    for q in 0..64 {
        assert!((t.get(0).unwrap().at(0, q)[0] - Complex::new(0.3, 0.0)).norm() < 1e-14);
    }
    let s = string_form(&p, 2, StringFormAlgorithm::Direct).unwrap();
    assert!(t.d().max_defect(&s).unwrap() < 1e-10);
}
