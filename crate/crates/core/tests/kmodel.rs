use caloronkit::forms::Verdict;
use caloronkit::geometry::ConnectionPair;
use caloronkit::grid::{Grid, GridSpec};
use caloronkit::kmodel::{string_data_equivalent, EquivalenceVerdict};
use caloronkit::lie::GroupMap;
use caloronkit::random::{random_pair, random_smooth_map, RandomSpec};
use caloronkit::stringforms::{flat_pair, tau_hat_pullback};
use num_complex::Complex;

fn tau_is_exact(g: &GroupMap<f64>) -> bool {
    tau_hat_pullback(g, 2)
        .unwrap()
        .is_exact(1e-7)
        .unwrap()
        .iter()
        .all(|r| r.verdict == Verdict::Exact)
}

#[test]
fn flat_shift_verdict_follows_tau_hat() {
    let grid = Grid::<f64>::new(GridSpec::torus_with_loop(&[16, 16], 32)).unwrap();
    let trivial = ConnectionPair::trivial(&grid, 1).unwrap();

    let winding = GroupMap::from_fn(&grid, 1, true, true, |p, out| {
        out[0] = Complex::from_polar(1.0, grid.coords(p)[2]);
    })
    .unwrap();
    let r = string_data_equivalent(&trivial, &flat_pair(&winding).unwrap(), 2, 1e-7).unwrap();
    assert_eq!(r.verdict, EquivalenceVerdict::Inequivalent);
    assert!(!tau_is_exact(&winding));

    let small = random_smooth_map(&grid, 1, &RandomSpec::new(2, 1, 0.1), true, true).unwrap();
    let r = string_data_equivalent(&trivial, &flat_pair(&small).unwrap(), 2, 1e-7).unwrap();
    assert_eq!(r.verdict, EquivalenceVerdict::Equivalent);
    assert!(tau_is_exact(&small));
}

#[test]
fn string_data_equivalence_is_reflexive_and_symmetric() {
    let grid = Grid::<f64>::new(GridSpec::torus_with_loop(&[12, 12], 16)).unwrap();
    let p = random_pair(&grid, 2, &RandomSpec::new(1, 1, 0.3), true).unwrap();
    let q = random_pair(&grid, 2, &RandomSpec::new(2, 1, 0.3), true).unwrap();
    let same = string_data_equivalent(&p, &p, 2, 1e-7).unwrap();
    assert!(same.is_equivalent());
    assert_eq!(same.defect.max_abs(), 0.0);
    let pq = string_data_equivalent(&p, &q, 2, 1e-7).unwrap();
    let qp = string_data_equivalent(&q, &p, 2, 1e-7).unwrap();
    assert_eq!(pq.verdict, qp.verdict);
    assert!(pq.defect.add(&qp.defect).unwrap().max_abs() < 1e-14);
}

#[test]
fn non_torus_base_is_unsupported() {
    let grid = Grid::<f64>::new(GridSpec::new(
        vec![
            caloronkit::Factor::Interval { n: 9, a: 0.0, b: 1.0 },
            caloronkit::Factor::Circle { n: 16 },
        ],
        Some(1),
    ))
    .unwrap();
    let p = ConnectionPair::trivial(&grid, 1).unwrap();
    let r = string_data_equivalent(&p, &p, 1, 1e-7).unwrap();
    assert_eq!(r.verdict, EquivalenceVerdict::UnsupportedDomain);
    assert!(r.per_degree.is_empty());
}
