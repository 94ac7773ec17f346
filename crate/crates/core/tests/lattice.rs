use cfs_core::diracsea::{build_system, LatticeSpec, OccupationEdits, WeightConvention};
use cfs_core::{geometry, linalg, opspace};

// Products of vacuum atoms have a degenerate non-trivial spectrum next to a
// zero cluster at roundoff level; every pair must converge.
#[test]
fn every_vacuum_pair_has_a_product_spectrum() {
    let spec = LatticeSpec::new(1.0, 4, 3, 0.5).unwrap();
    let sys = build_system(&spec, &OccupationEdits::default(), WeightConvention::Counting).unwrap();
    let atoms = sys.measure.atoms();
    for (i, a) in atoms.iter().enumerate() {
        for (j, b) in atoms.iter().enumerate() {
            let product = opspace::product_eigenvalues(&a.point, &b.point)
                .unwrap_or_else(|e| panic!("pair ({i}, {j}): {e}"));
            let chain = geometry::closed_chain(&a.point, &b.point).unwrap();
            let d = linalg::relative_multiset_distance(product.values(), chain.eigenvalues.values());
            assert!(d < 1e-6, "pair ({i}, {j}): {d:e}");
        }
    }
}
