use cfs_core::geometry;
use cfs_core::linalg::{self, random_orthonormal, random_unitary};
use cfs_core::measure::{self, Atom};
use cfs_core::minimize::{self, Constraints, ToyFamily};
use cfs_core::opspace::{self, OperatorPoint};
use cfs_core::spectral::{self, Causality, EigenvalueList};
use cfs_core::{DiscreteMeasure, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, f: usize, n: usize) -> OperatorPoint {
    let pos = rng.random_range(0..=n);
    let neg = rng.random_range(0..=n).max(usize::from(pos == 0));
    let mut spectrum: Vec<f64> = (0..pos).map(|_| rng.random_range(0.1..2.0)).collect();
    spectrum.extend((0..neg).map(|_| -rng.random_range(0.1..2.0)));
    OperatorPoint::from_factors(random_orthonormal(rng, f, spectrum.len()), spectrum, n).unwrap()
}

fn random_measure(seed: u64, atoms: usize, f: usize, n: usize) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..atoms)
        .map(|_| {
            let w = rng.random_range(0.2..3.0);
            Atom::new(random_point(&mut rng, f, n), w)
        })
        .collect();
    DiscreteMeasure::new(atoms).unwrap()
}

fn eigenvalues(n: usize) -> impl Strategy<Value = EigenvalueList> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..=2 * n)
        .prop_map(move |v| EigenvalueList::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect(), n).unwrap())
}

proptest! {
    #[test]
    fn lagrangian_forms_agree_and_are_nonnegative(ev in (1usize..=3).prop_flat_map(eigenvalues)) {
        let closed = spectral::lagrangian(&ev);
        let variance = spectral::lagrangian_variance_form(&ev);
        prop_assert!((closed - variance).abs() <= 1e-10 * (1.0 + closed.abs()));
        prop_assert!(closed >= -1e-12 * (1.0 + spectral::spectral_weight(&ev).powi(2)));
    }

    #[test]
    fn equal_moduli_are_spacelike_with_vanishing_lagrangian(
        r in 0.01f64..10.0,
        phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 4),
    ) {
        let ev = EigenvalueList::new(phases.iter().map(|&p| C64::from_polar(r, p)).collect(), 2).unwrap();
        prop_assert_eq!(spectral::classify_causality(&ev, 1e-8).unwrap(), Causality::Spacelike);
        prop_assert!(spectral::lagrangian(&ev).abs() <= 1e-12 * r * r * 16.0);
    }

    #[test]
    fn product_spectrum_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&mut rng, 8, 2);
        let y = random_point(&mut rng, 8, 2);
        let xy = opspace::product_eigenvalues(&x, &y).unwrap();
        let yx = opspace::product_eigenvalues(&y, &x).unwrap();
        let scale = 1.0 + xy.max_modulus();
        prop_assert!(linalg::multiset_distance(xy.values(), yx.values()) <= 1e-9 * scale);
        let l1 = spectral::lagrangian(&xy);
        let l2 = spectral::lagrangian(&yx);
        prop_assert!((l1 - l2).abs() <= 1e-9 * scale * scale);
    }

    #[test]
    fn closed_chain_matches_product(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(&mut rng, 10, 2);
        let y = random_point(&mut rng, 10, 2);
        let chain = geometry::closed_chain(&x, &y).unwrap();
        let product = opspace::product_eigenvalues(&x, &y).unwrap();
        prop_assert!(linalg::relative_multiset_distance(chain.eigenvalues.values(), product.values()) <= 1e-8);
    }

    #[test]
    fn functionals_are_unitarily_invariant_and_quadratic_in_weights(seed in any::<u64>(), c in 0.1f64..10.0) {
        let rho = random_measure(seed, 4, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let u = random_unitary(&mut rng, 6);
        let s = measure::causal_action(&rho).unwrap();
        let t = measure::boundedness_functional(&rho).unwrap();
        let rotated = rho.conjugated(&u);
        prop_assert!((measure::causal_action(&rotated).unwrap() - s).abs() <= 1e-10 * s.abs().max(1e-300));
        prop_assert!((measure::boundedness_functional(&rotated).unwrap() - t).abs() <= 1e-10 * t);
        let scaled = rho.with_scaled_weights(c).unwrap();
        prop_assert!((measure::causal_action(&scaled).unwrap() - c * c * s).abs() <= 1e-12 * c * c * s.abs().max(1e-300));
        prop_assert!((measure::boundedness_functional(&scaled).unwrap() - c * c * t).abs() <= 1e-12 * c * c * t);
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        q in -4.0f64..4.0, theta in 0.0f64..std::f64::consts::PI, r in -4.0f64..4.0,
        volume in 0.1f64..10.0, trace in 0.1f64..10.0,
    ) {
        let c = Constraints { volume_target: volume, trace_target: trace, bound: None };
        let rho = ToyFamily::TwoAtom.measure(&[q, theta, r]).unwrap();
        let projected = minimize::project_constraints(&rho, &c).unwrap();
        prop_assert!((measure::total_volume(&projected) - volume).abs() <= 1e-10 * volume);
        prop_assert!((measure::trace_integral(&projected) - trace).abs() <= 1e-10 * trace);
        let again = minimize::project_constraints(&projected, &c).unwrap();
        for (a, b) in again.atoms().iter().zip(projected.atoms()) {
            prop_assert!((a.weight - b.weight).abs() <= 1e-12 * b.weight);
            prop_assert!(opspace::operator_distance(&a.point, &b.point) <= 1e-12 * (1.0 + b.point.frobenius_sq().sqrt()));
        }
    }
}

#[test]
fn orthogonal_ranges_are_spacelike() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let u = random_unitary(&mut rng, 8);
        let x = OperatorPoint::from_factors(u.columns(0, 3).into_owned(), vec![1.0, -0.5, 2.0], 2).unwrap();
        let y = OperatorPoint::from_factors(u.columns(3, 4).into_owned(), vec![0.3, 1.1, -0.7, -2.0], 2).unwrap();
        let ev = opspace::product_eigenvalues(&x, &y).unwrap();
        assert_eq!(spectral::classify_causality(&ev, 1e-8).unwrap(), Causality::Spacelike);
        assert!(spectral::lagrangian(&ev).abs() <= 1e-12);
    }
}
