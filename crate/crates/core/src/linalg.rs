//! Small dense complex linear algebra.
//!
//! Everything in this crate reduces pair computations to matrices of size at
//! most `4n`, so the routines here favour robustness on tiny non-normal
//! matrices over asymptotic speed. The general eigensolver is a balanced,
//! Hessenberg-reduced, Wilkinson-shifted complex QR iteration; the
//! characteristic-polynomial route (Faddeev-LeVerrier plus Aberth-Ehrlich) is
//! kept as an independent fallback and cross-check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative disagreement between the QR and polynomial eigenvalue routes
/// above which [`eigenvalues_checked`] flags the result.
pub const SOLVER_DISAGREEMENT_FLAG: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("QR iteration did not converge on a {dim}x{dim} matrix after {iterations} sweeps")]
    NoConvergence { dim: usize, iterations: usize },
    #[error("polynomial root finder did not converge (degree {degree})")]
    RootsNoConvergence { degree: usize },
    #[error("hermitian eigendecomposition failed on a {dim}x{dim} matrix")]
    Hermitian { dim: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Largest entrywise deviation from hermiticity.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues (ascending)
/// and orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix), EigenError> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    // Symmetrize so roundoff-level asymmetry does not leak into the solver.
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or(EigenError::Hermitian { dim })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch). The
/// spectrum is unchanged; row and column norms are equilibrated.
pub fn balance(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut a = m.clone();
    if n < 2 {
        return a;
    }
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

/// Householder reduction to upper Hessenberg form (similarity transform).
pub fn hessenberg(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut a = m.clone();
    if n < 3 {
        return a;
    }
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // A <- (I - 2 v v^H) A
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * a[(k + 1 + t, j)])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= *vt * dot * 2.0;
            }
        }
        // A <- A (I - 2 v v^H)
        for i in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| a[(i, k + 1 + t)] * *vt)
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= dot * vt.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
    a
}

fn givens(a: C64, b: C64) -> (C64, C64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (ONE, ZERO)
    } else {
        (a / r, b / r)
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let mu1 = m + disc;
    let mu2 = m - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Deflation test for `h[(k, k-1)]`: negligible against the whole matrix,
/// or against the neighbouring diagonal refined by the Ahues-Tisseur
/// criterion.
fn negligible_subdiagonal(h: &CMatrix, k: usize, scale: f64) -> bool {
    let n = h.nrows();
    let ulp = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64 / ulp);
    let sub = h[(k, k - 1)].norm();
    if sub <= small || sub <= ulp * scale {
        return true;
    }
    let mut tst = h[(k - 1, k - 1)].norm() + h[(k, k)].norm();
    if tst == 0.0 {
        if k >= 2 {
            tst += h[(k - 1, k - 2)].norm();
        }
        if k + 1 < n {
            tst += h[(k + 1, k)].norm();
        }
    }
    if tst == 0.0 {
        tst = scale;
    }
    if sub > ulp * tst {
        let ab = sub.max(h[(k - 1, k)].norm());
        let ba = sub.min(h[(k - 1, k)].norm());
        let diff = (h[(k - 1, k - 1)] - h[(k, k)]).norm();
        let aa = h[(k, k)].norm().max(diff);
        let bb = h[(k, k)].norm().min(diff);
        let total = aa + ab;
        return ba * (ab / total) <= small.max(ulp * (bb * (aa / total)));
    }
    true
}

/// All eigenvalues of a small general complex matrix via balanced, shifted QR.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>, EigenError> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let mut h = hessenberg(&balance(m));
    let scale = max_abs(&h);
    if scale == 0.0 {
        return Ok(vec![ZERO; n]);
    }
    let mut out = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 30 * n.max(10) * n;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            if negligible_subdiagonal(&h, l, scale) {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(EigenError::NoConvergence { dim: n, iterations: total });
        }
        let mu = if iter.is_multiple_of(11) {
            // Exceptional shift to break symmetric stagnation cycles.
            h[(hi, hi)] + C64::new(0.75, 0.43) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let top = h[(k, j)];
                let bot = h[(k + 1, j)];
                h[(k, j)] = c.conj() * top + s.conj() * bot;
                h[(k + 1, j)] = -s * top + c * bot;
            }
            rotations.push((c, s));
        }
        for (off, (c, s)) in rotations.into_iter().enumerate() {
            let k = l + off;
            let rmax = (k + 2).min(hi);
            for i in l..=rmax {
                let left = h[(i, k)];
                let right = h[(i, k + 1)];
                h[(i, k)] = left * c + right * s;
                h[(i, k + 1)] = -left * s.conj() + right * c.conj();
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(out)
}

/// Coefficients `c[0..=n]` of `det(lambda I - m) = sum c[k] lambda^k`
/// (Faddeev-LeVerrier recursion; `c[n] = 1`).
pub fn characteristic_polynomial(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    let mut c = vec![ZERO; n + 1];
    c[n] = ONE;
    let mut mk = CMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m * &mk;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        let am = m * &next;
        c[n - k] = -trace(&am) / (k as f64);
        mk = next;
    }
    c
}

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of `sum coeffs[k] z^k` by Aberth-Ehrlich simultaneous iteration.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>, EigenError> {
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg] == ZERO {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let monic: Vec<C64> = coeffs[..=deg].iter().map(|c| c / lead).collect();
    // Exact zero roots are factored out so they are returned exactly.
    let zeros = monic.iter().take_while(|c| **c == ZERO).count();
    let reduced = &monic[zeros..];
    let rdeg = deg - zeros;
    let mut roots = vec![ZERO; zeros];
    if rdeg == 0 {
        return Ok(roots);
    }
    let bound = 1.0 + reduced[..rdeg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = reduced[0].norm().powf(1.0 / rdeg as f64).clamp(1e-300, bound);
    let mut z: Vec<C64> = (0..rdeg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / rdeg as f64 + 0.4;
            C64::from_polar(radius, theta)
        })
        .collect();
    let mut converged = false;
    for _ in 0..2_000 {
        let mut max_step = 0.0_f64;
        for i in 0..rdeg {
            let (p, dp) = horner(reduced, z[i]);
            if p == ZERO {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..rdeg)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d == ZERO {
                        ZERO
                    } else {
                        ONE / d
                    }
                })
                .sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(radius));
            }
        }
        if max_step <= 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        // Aberth stalls on exact multiple roots; accept if residuals are tiny.
        let ok = z.iter().all(|&zi| {
            let (p, _) = horner(reduced, zi);
            let mag: f64 = reduced
                .iter()
                .enumerate()
                .map(|(k, c)| c.norm() * zi.norm().powi(k as i32))
                .sum();
            p.norm() <= 1e-8 * mag.max(f64::MIN_POSITIVE)
        });
        if !ok {
            return Err(EigenError::RootsNoConvergence { degree: deg });
        }
    }
    roots.extend(z);
    Ok(roots)
}

/// Eigenvalues through the characteristic polynomial.
pub fn eigenvalues_charpoly(m: &CMatrix) -> Result<Vec<C64>, EigenError> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(vec![ZERO; m.nrows()]);
    }
    let scaled = m / C64::new(scale, 0.0);
    let roots = polynomial_roots(&characteristic_polynomial(&scaled))?;
    Ok(roots.into_iter().map(|r| r * scale).collect())
}

/// Eigenvalues together with the relative disagreement between the QR route
/// and the characteristic-polynomial route. Falls back to the polynomial
/// route when QR fails to converge.
pub fn eigenvalues_checked(m: &CMatrix) -> Result<(Vec<C64>, f64), EigenError> {
    match eigenvalues(m) {
        Ok(qr) => {
            let disagreement = match eigenvalues_charpoly(m) {
                Ok(poly) => relative_multiset_distance(&qr, &poly),
                Err(_) => f64::INFINITY,
            };
            Ok((qr, disagreement))
        }
        Err(_) => {
            let poly = eigenvalues_charpoly(m)?;
            Ok((poly, f64::INFINITY))
        }
    }
}

/// Greedy matching distance between two complex multisets of equal size:
/// each element of `a` (largest modulus first) is paired with the nearest
/// unused element of `b`; returns the largest pairing distance.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].norm().total_cmp(&a[i].norm()));
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for i in order {
        let mut best = None;
        for (j, bj) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (a[i] - bj).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            used[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// [`multiset_distance`] divided by the largest modulus in either set.
pub fn relative_multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().chain(b.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        multiset_distance(a, b) / scale
    }
}

/// Orthonormal basis (columns) of the span of the given columns, by modified
/// Gram-Schmidt with one re-orthogonalization pass. Columns whose residual
/// norm falls below `rel_tol` times the largest input norm are dropped.
pub fn orthonormal_span(columns: &CMatrix, rel_tol: f64) -> CMatrix {
    let f = columns.nrows();
    let scale = (0..columns.ncols())
        .map(|j| columns.column(j).norm())
        .fold(0.0, f64::max);
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    if scale == 0.0 {
        return CMatrix::zeros(f, 0);
    }
    for j in 0..columns.ncols() {
        let mut v = columns.column(j).into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > rel_tol * scale {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    let mut out = CMatrix::zeros(f, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Largest entrywise deviation of `Q^H Q` from the identity.
pub fn orthonormality_defect(q: &CMatrix) -> f64 {
    let gram = q.adjoint() * q;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Complex Gaussian matrix with independent standard normal real and
/// imaginary parts.
pub fn random_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `rows x cols` matrix with orthonormal columns, Haar-distributed.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(cols <= rows, "cannot fit {cols} orthonormal columns in dimension {rows}");
    loop {
        let g = random_gaussian(rng, rows, cols);
        let q = orthonormal_span(&g, 1e-8);
        if q.ncols() == cols {
            return q;
        }
    }
}

/// Haar-random unitary matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    random_orthonormal(rng, dim, dim)
}

/// Determinant by partial-pivoting LU.
pub fn determinant(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[C64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
    }

    #[test]
    fn qr_recovers_similarity_transformed_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=8 {
            let spectrum: Vec<C64> = (0..dim)
                .map(|k| C64::new(k as f64 - 2.5, 0.3 * k as f64))
                .collect();
            let s = random_gaussian(&mut rng, dim, dim);
            let s_inv = s.clone().try_inverse().unwrap();
            let m = &s * diag(&spectrum) * s_inv;
            let ev = eigenvalues(&m).unwrap();
            assert!(relative_multiset_distance(&ev, &spectrum) < 1e-9, "dim {dim}");
        }
    }

    #[test]
    fn qr_handles_defective_and_zero_blocks() {
        // Jordan block: eigenvalue 2 with multiplicity 3.
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0), ONE, ZERO,
                ZERO, C64::new(2.0, 0.0), ONE,
                ZERO, ZERO, C64::new(2.0, 0.0),
            ],
        );
        let ev = eigenvalues(&m).unwrap();
        for z in ev {
            assert!((z - C64::new(2.0, 0.0)).norm() < 1e-10);
        }
        assert_eq!(eigenvalues(&CMatrix::zeros(4, 4)).unwrap(), vec![ZERO; 4]);
    }

    #[test]
    fn rotation_generator_has_imaginary_pair() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, -ONE, ONE, ZERO]);
        let ev = eigenvalues(&m).unwrap();
        let expected = [C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
        assert!(multiset_distance(&ev, &expected) < 1e-14);
    }

    #[test]
    fn charpoly_route_agrees_with_qr() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_gaussian(&mut rng, 6, 6);
            let (_, disagreement) = eigenvalues_checked(&m).unwrap();
            assert!(disagreement < 1e-9, "disagreement {disagreement}");
        }
    }

    #[test]
    fn polynomial_roots_of_known_polynomial() {
        // (z - 1)(z + 2)(z - i) = z^3 + (1 - i) z^2 + (-2 - i) z + 2i
        let coeffs = [
            C64::new(0.0, 2.0),
            C64::new(-2.0, -1.0),
            C64::new(1.0, -1.0),
            ONE,
        ];
        let roots = polynomial_roots(&coeffs).unwrap();
        let expected = [ONE, C64::new(-2.0, 0.0), C64::new(0.0, 1.0)];
        assert!(multiset_distance(&roots, &expected) < 1e-12);
    }

    #[test]
    fn balancing_preserves_spectrum() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                ONE, C64::new(1e6, 0.0), ZERO,
                C64::new(1e-6, 0.0), C64::new(2.0, 0.0), C64::new(1e4, 0.0),
                ZERO, C64::new(1e-4, 0.0), C64::new(3.0, 0.0),
            ],
        );
        let b = balance(&m);
        assert!((trace(&b) - trace(&m)).norm() < 1e-12);
        let direct = eigenvalues_charpoly(&m).unwrap();
        let balanced = eigenvalues(&m).unwrap();
        assert!(relative_multiset_distance(&direct, &balanced) < 1e-8);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 9);
        assert!(orthonormality_defect(&u) < 1e-12);
        assert!((determinant(&u).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigen_sorted_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_gaussian(&mut rng, 5, 5);
        let h = &g + g.adjoint();
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(orthonormality_defect(&vecs) < 1e-12);
        let recon = &vecs * diag(&vals.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
            * vecs.adjoint();
        assert!(max_abs(&(recon - h)) < 1e-10);
    }
}
