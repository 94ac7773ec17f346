//! Discrete measures on `F` and the functionals of the variational principle.
//!
//! Pair sums are evaluated row by row in parallel. Each row is summed serially
//! in index order and the row totals are combined serially in index order, so
//! the result does not depend on the number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::opspace::{self, OpError, OperatorPoint};
use crate::spectral::{self, EigenvalueList};

/// Operator distance below which two atoms count as the same point.
pub const DUPLICATE_DISTANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom {index} has weight {weight}, weights must be positive and finite")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("atom {index} lives on dimension {found}, expected {expected}")]
    HilbertDimMismatch { index: usize, expected: usize, found: usize },
    #[error("atom {index} has spin dimension {found}, expected {expected}")]
    SpinDimMismatch { index: usize, expected: usize, found: usize },
    #[error("atoms {first} and {second} coincide (distance {distance:.3e})")]
    DuplicateAtom { first: usize, second: usize, distance: f64 },
    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: OpError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: OperatorPoint,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: OperatorPoint, weight: f64) -> Self {
        Self { point, weight }
    }
}

/// A positive measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

/// How the double sum over atom pairs is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    /// Every ordered pair `(i, j)` is evaluated.
    Full,
    /// Pairs `i < j` are evaluated once and counted twice.
    #[default]
    Symmetric,
}

/// Both pair functionals from one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSums {
    pub action: f64,
    pub boundedness: f64,
}

impl DiscreteMeasure {
    /// Builds a measure, rejecting non-positive weights, inconsistent
    /// dimensions and coinciding atoms.
    pub fn new(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        check_atoms(&atoms)?;
        if let Some((first, second, distance)) = find_duplicates(&atoms).into_iter().next() {
            return Err(MeasureError::DuplicateAtom { first, second, distance });
        }
        Ok(Self { atoms })
    }

    /// Builds a measure, merging coinciding atoms by adding their weights.
    /// The first occurrence keeps its position.
    pub fn merged(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        check_atoms(&atoms)?;
        let mut target: Vec<usize> = (0..atoms.len()).collect();
        for (first, second, _) in find_duplicates(&atoms) {
            let root = resolve(&target, first.min(second));
            let other = resolve(&target, first.max(second));
            if root != other {
                target[root.max(other)] = root.min(other);
            }
        }
        let mut weights = vec![0.0; atoms.len()];
        for i in 0..atoms.len() {
            weights[resolve(&target, i)] += atoms[i].weight;
        }
        let atoms = atoms
            .into_iter()
            .enumerate()
            .filter(|(i, _)| resolve(&target, *i) == *i)
            .map(|(i, atom)| Atom { weight: weights[i], ..atom })
            .collect();
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.atoms[0].point.hilbert_dim()
    }

    pub fn spin_dim(&self) -> usize {
        self.atoms[0].point.spin_dim()
    }

    pub fn points(&self) -> impl Iterator<Item = &OperatorPoint> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }

    /// The same support with every weight multiplied by `c > 0`.
    pub fn with_scaled_weights(&self, c: f64) -> Result<Self, MeasureError> {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.point.clone(), a.weight * c))
            .collect();
        check_atoms(&atoms)?;
        Ok(Self { atoms })
    }

    /// Every atom conjugated by the same unitary.
    pub fn conjugated(&self, unitary: &CMatrix) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.point.conjugated(unitary), a.weight))
                .collect(),
        }
    }
}

fn resolve(target: &[usize], mut i: usize) -> usize {
    while target[i] != i {
        i = target[i];
    }
    i
}

fn check_atoms(atoms: &[Atom]) -> Result<(), MeasureError> {
    let first = atoms.first().ok_or(MeasureError::Empty)?;
    let f = first.point.hilbert_dim();
    let n = first.point.spin_dim();
    for (index, atom) in atoms.iter().enumerate() {
        if !(atom.weight.is_finite() && atom.weight > 0.0) {
            return Err(MeasureError::NonPositiveWeight { index, weight: atom.weight });
        }
        if atom.point.hilbert_dim() != f {
            return Err(MeasureError::HilbertDimMismatch {
                index,
                expected: f,
                found: atom.point.hilbert_dim(),
            });
        }
        if atom.point.spin_dim() != n {
            return Err(MeasureError::SpinDimMismatch {
                index,
                expected: n,
                found: atom.point.spin_dim(),
            });
        }
    }
    Ok(())
}

/// Fixed unit probe vector used to fingerprint operators.
fn probe(dim: usize) -> Vec<crate::C64> {
    let raw: Vec<crate::C64> = (0..dim)
        .map(|k| {
            let t = k as f64 + 1.0;
            crate::C64::new((1.37 * t).cos() + 0.5, (0.71 * t).sin())
        })
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

/// `<r|x r>` for the fixed probe; bounded in difference by the operator
/// distance.
fn fingerprint(point: &OperatorPoint, r: &[crate::C64]) -> f64 {
    let factors = point.factors();
    let mut value = 0.0;
    for (a, nu) in point.spectrum().iter().enumerate() {
        let overlap: crate::C64 = factors.column(a).iter().zip(r).map(|(e, v)| e.conj() * v).sum();
        value += nu * overlap.norm_sqr();
    }
    value
}

/// Pairs of atoms closer than [`DUPLICATE_DISTANCE`], found by sorting on a
/// scalar fingerprint and sweeping a window around each entry.
fn find_duplicates(atoms: &[Atom]) -> Vec<(usize, usize, f64)> {
    if atoms.len() < 2 {
        return Vec::new();
    }
    let r = probe(atoms[0].point.hilbert_dim());
    let mut keyed: Vec<(f64, usize)> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (fingerprint(&a.point, &r), i))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let window = 2.0 * DUPLICATE_DISTANCE;
    let mut found = Vec::new();
    for s in 0..keyed.len() {
        for t in s + 1..keyed.len() {
            if keyed[t].0 - keyed[s].0 > window {
                break;
            }
            let (i, j) = (keyed[s].1.min(keyed[t].1), keyed[s].1.max(keyed[t].1));
            let distance = opspace::operator_distance(&atoms[i].point, &atoms[j].point);
            if distance <= DUPLICATE_DISTANCE {
                found.push((i, j, distance));
            }
        }
    }
    found.sort_by_key(|a| (a.0, a.1));
    found
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `rho(F)`, the total weight.
pub fn total_volume(rho: &DiscreteMeasure) -> f64 {
    compensated_sum(rho.weights())
}

/// `sum_i w_i tr(x_i)`.
pub fn trace_integral(rho: &DiscreteMeasure) -> f64 {
    compensated_sum(rho.atoms.iter().map(|a| a.weight * a.point.trace()))
}

/// Evaluates `sum_ij w_i w_j g(spec(x_i x_j))` for a per-pair map `g`
/// producing several values at once.
fn pair_sweep<const K: usize>(
    rho: &DiscreteMeasure,
    assembly: Assembly,
    g: impl Fn(&EigenvalueList) -> [f64; K] + Sync,
) -> Result<[f64; K], MeasureError> {
    let atoms = &rho.atoms;
    let rows: Vec<Result<[f64; K], MeasureError>> = (0..atoms.len())
        .into_par_iter()
        .map(|i| {
            let start = match assembly {
                Assembly::Full => 0,
                Assembly::Symmetric => i,
            };
            let mut acc = [0.0; K];
            for j in start..atoms.len() {
                let ev = opspace::product_eigenvalues(&atoms[i].point, &atoms[j].point)
                    .map_err(|source| MeasureError::Pair { i, j, source })?;
                let mut factor = atoms[i].weight * atoms[j].weight;
                if assembly == Assembly::Symmetric && j != i {
                    factor *= 2.0;
                }
                for (slot, v) in acc.iter_mut().zip(g(&ev)) {
                    *slot += factor * v;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = [0.0; K];
    for row in rows {
        for (slot, v) in total.iter_mut().zip(row?) {
            *slot += v;
        }
    }
    Ok(total)
}

/// `S(rho) = sum_ij w_i w_j L(x_i, x_j)`, diagonal included.
pub fn causal_action(rho: &DiscreteMeasure) -> Result<f64, MeasureError> {
    causal_action_with(rho, Assembly::Symmetric)
}

pub fn causal_action_with(rho: &DiscreteMeasure, assembly: Assembly) -> Result<f64, MeasureError> {
    Ok(pair_sweep(rho, assembly, |ev| [spectral::lagrangian(ev)])?[0])
}

/// `T(rho) = sum_ij w_i w_j |x_i x_j|^2`, diagonal included.
pub fn boundedness_functional(rho: &DiscreteMeasure) -> Result<f64, MeasureError> {
    boundedness_functional_with(rho, Assembly::Symmetric)
}

pub fn boundedness_functional_with(rho: &DiscreteMeasure, assembly: Assembly) -> Result<f64, MeasureError> {
    Ok(pair_sweep(rho, assembly, |ev| [spectral::boundedness_integrand(ev)])?[0])
}

/// `S` and `T` from a single sweep over pairs.
pub fn pair_functionals(rho: &DiscreteMeasure, assembly: Assembly) -> Result<PairSums, MeasureError> {
    let [action, boundedness] = pair_sweep(rho, assembly, |ev| {
        [spectral::lagrangian(ev), spectral::boundedness_integrand(ev)]
    })?;
    Ok(PairSums { action, boundedness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, random_orthonormal, random_unitary, C64, ONE, ZERO};
    use crate::opspace::verify_membership;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    fn random_measure(rng: &mut ChaCha8Rng, atoms: usize, f: usize, n: usize) -> DiscreteMeasure {
        let list = (0..atoms)
            .map(|_| {
                let pos = rng.random_range(0..=n);
                let neg = rng.random_range(0..=n).max(usize::from(pos == 0));
                let mut spectrum: Vec<f64> = (0..pos).map(|_| rng.random_range(0.2..2.0)).collect();
                spectrum.extend((0..neg).map(|_| -rng.random_range(0.2..2.0)));
                let factors = random_orthonormal(rng, f, spectrum.len());
                let point = OperatorPoint::from_factors(factors, spectrum, n).unwrap();
                Atom::new(point, rng.random_range(0.1..3.0))
            })
            .collect();
        DiscreteMeasure::new(list).unwrap()
    }

    /// Dense double loop: Schur form of the full `f x f` product, 2n largest.
    fn brute_force(rho: &DiscreteMeasure) -> (f64, f64) {
        let n = rho.spin_dim();
        let dense: Vec<CMatrix> = rho.points().map(|p| p.to_dense()).collect();
        let w: Vec<f64> = rho.weights().collect();
        let (mut s, mut t) = (0.0, 0.0);
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                let (_, upper) = nalgebra::Schur::new(&dense[i] * &dense[j]).unpack();
                let mut ev: Vec<C64> = upper.diagonal().iter().copied().collect();
                ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
                let moduli: Vec<f64> = ev.iter().take(2 * n).map(|z| z.norm()).collect();
                let sum: f64 = moduli.iter().sum();
                let sq: f64 = moduli.iter().map(|m| m * m).sum();
                s += w[i] * w[j] * (sq - sum * sum / (2.0 * n as f64));
                t += w[i] * w[j] * sum * sum;
            }
        }
        (s, t)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn volume_and_trace_examples() {
        let x = verify_membership(&diag(&[2.0, -1.0]), 1, 1e-10).unwrap();
        let y = verify_membership(&diag(&[0.5, -4.0]), 1, 1e-10).unwrap();
        let rho = DiscreteMeasure::new(vec![Atom::new(x.clone(), 1.5), Atom::new(y, 0.5)]).unwrap();
        assert_eq!(total_volume(&rho), 2.0);

        let single = DiscreteMeasure::new(vec![Atom::new(x.clone(), 2.0)]).unwrap();
        assert_eq!(total_volume(&single), 2.0);
        assert!((trace_integral(&single) - 2.0).abs() < 1e-15);

        let traceless = verify_membership(&diag(&[1.0, -1.0]), 1, 1e-10).unwrap();
        let rho = DiscreteMeasure::new(vec![Atom::new(traceless, 3.0)]).unwrap();
        assert!(trace_integral(&rho).abs() < 1e-15);
    }

    #[test]
    fn single_atom_closed_forms() {
        let x = verify_membership(&diag(&[2.0, -1.0]), 1, 1e-10).unwrap();
        let rho = DiscreteMeasure::new(vec![Atom::new(x, 1.0)]).unwrap();
        assert!((causal_action(&rho).unwrap() - 4.5).abs() < 1e-12);
        assert!((boundedness_functional(&rho).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_ranges_contribute_only_diagonal() {
        let e0 = CMatrix::from_column_slice(4, 2, &[ONE, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO]);
        let e1 = CMatrix::from_column_slice(4, 2, &[ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ONE]);
        let x = OperatorPoint::from_factors(e0, vec![2.0, -1.0], 1).unwrap();
        let y = OperatorPoint::from_factors(e1, vec![1.0, -3.0], 1).unwrap();
        let rho = DiscreteMeasure::new(vec![Atom::new(x.clone(), 0.7), Atom::new(y.clone(), 1.9)]).unwrap();
        let self_terms = |p: &OperatorPoint| {
            let ev = opspace::product_eigenvalues(p, p).unwrap();
            (spectral::lagrangian(&ev), spectral::boundedness_integrand(&ev))
        };
        let (lx, tx) = self_terms(&x);
        let (ly, ty) = self_terms(&y);
        let sums = pair_functionals(&rho, Assembly::Full).unwrap();
        assert!((sums.action - (0.49 * lx + 3.61 * ly)).abs() < 1e-12);
        assert!((sums.boundedness - (0.49 * tx + 3.61 * ty)).abs() < 1e-12);
    }

    #[test]
    fn random_measure_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_measure(&mut rng, 6, 8, 2);
        let (s, t) = brute_force(&rho);
        assert!(rel(causal_action(&rho).unwrap(), s) < 1e-9);
        assert!(rel(boundedness_functional(&rho).unwrap(), t) < 1e-9);

        let naive_volume: f64 = rho.weights().sum();
        assert!(rel(total_volume(&rho), naive_volume) < 1e-14);
        let dense_trace: f64 = rho
            .atoms()
            .iter()
            .map(|a| a.weight * linalg::trace(&a.point.to_dense()).re)
            .sum();
        assert!((trace_integral(&rho) - dense_trace).abs() <= 1e-12 * dense_trace.abs().max(1.0));
    }

    #[test]
    fn symmetric_and_full_assembly_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_measure(&mut rng, 9, 10, 2);
        let full = pair_functionals(&rho, Assembly::Full).unwrap();
        let sym = pair_functionals(&rho, Assembly::Symmetric).unwrap();
        assert!(rel(sym.action, full.action) < 1e-12);
        assert!(rel(sym.boundedness, full.boundedness) < 1e-12);
    }

    #[test]
    fn invariance_under_unitaries_and_weight_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = random_measure(&mut rng, 7, 9, 2);
        let base = pair_functionals(&rho, Assembly::Symmetric).unwrap();
        let u = random_unitary(&mut rng, 9);
        let moved = rho.conjugated(&u);
        let after = pair_functionals(&moved, Assembly::Symmetric).unwrap();
        assert!(rel(after.action, base.action) < 1e-10);
        assert!(rel(after.boundedness, base.boundedness) < 1e-10);
        assert!(rel(trace_integral(&moved), trace_integral(&rho)) < 1e-10);

        let c = 2.5;
        let scaled = rho.with_scaled_weights(c).unwrap();
        let sums = pair_functionals(&scaled, Assembly::Symmetric).unwrap();
        assert!(rel(sums.action, c * c * base.action) < 1e-12);
        assert!(rel(sums.boundedness, c * c * base.boundedness) < 1e-12);
        assert!(rel(total_volume(&scaled), c * total_volume(&rho)) < 1e-14);
        assert!(rel(trace_integral(&scaled), c * trace_integral(&rho)) < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_measure(&mut rng, 12, 8, 2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| pair_functionals(&rho, Assembly::Symmetric).unwrap())
        };
        let one = run(1);
        for threads in [2, 8] {
            let other = run(threads);
            assert_eq!(one.action.to_bits(), other.action.to_bits());
            assert_eq!(one.boundedness.to_bits(), other.boundedness.to_bits());
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(DiscreteMeasure::new(vec![]), Err(MeasureError::Empty)));
        let x = verify_membership(&diag(&[2.0, -1.0]), 1, 1e-10).unwrap();
        assert!(matches!(
            DiscreteMeasure::new(vec![Atom::new(x.clone(), 0.0)]),
            Err(MeasureError::NonPositiveWeight { index: 0, .. })
        ));
        let other = OperatorPoint::zero(3, 1);
        assert!(matches!(
            DiscreteMeasure::new(vec![Atom::new(x.clone(), 1.0), Atom::new(other, 1.0)]),
            Err(MeasureError::HilbertDimMismatch { index: 1, .. })
        ));
        assert!(matches!(
            DiscreteMeasure::new(vec![Atom::new(x.clone(), 1.0), Atom::new(x.clone(), 1.0)]),
            Err(MeasureError::DuplicateAtom { first: 0, second: 1, .. })
        ));
    }

    #[test]
    fn merging_adds_weights_of_coinciding_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = verify_membership(&diag(&[2.0, -1.0, 0.0]), 1, 1e-10).unwrap();
        let u = random_unitary(&mut rng, 3);
        let y = x.conjugated(&u);
        let x_again = verify_membership(&x.to_dense(), 1, 1e-12).unwrap();
        let rho = DiscreteMeasure::merged(vec![
            Atom::new(x, 1.0),
            Atom::new(y, 0.5),
            Atom::new(x_again, 2.0),
        ])
        .unwrap();
        assert_eq!(rho.len(), 2);
        assert!((rho.atoms()[0].weight - 3.0).abs() < 1e-15);
        assert!((total_volume(&rho) - 3.5).abs() < 1e-15);
    }
}
