//! Dense complex linear algebra helpers for registers of at most a few qubits.
//!
//! Qubit ordering is big-endian: the qubit at register position 0 is the most
//! significant bit of a basis index.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const UNITARY_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Builds a square matrix from row-major real entries.
pub fn real_matrix(dim: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), dim * dim);
    CMatrix::from_row_iterator(dim, dim, entries.iter().map(|&x| real(x)))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Number of qubits for a power-of-two dimension.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest absolute entry of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Returns `(m + m†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues come back sorted in
/// ascending order, with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (v * v.adjoint()).scale(w);
    }
    out
}

/// Tolerance scale for spectral checks: absolute for sub-unit matrices,
/// relative for larger ones.
fn spectral_scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are clamped to zero.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let dev = hermitian_deviation(m);
    let (values, vectors) = hermitian_eigen(m);
    let scale = spectral_scale(&values);
    if dev > HERMITIAN_TOL * scale * 10.0 {
        return Err(Error::NotHermitian(dev));
    }
    let min = values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL * scale {
        return Err(Error::NotPositive(min));
    }
    Ok(spectral_map(&values, &vectors, |x| x.max(0.0).sqrt()))
}

/// Nearest (Frobenius) positive semidefinite matrix: negative eigenvalues are
/// set to zero. Also returns the total clamped mass.
pub fn psd_projection(m: &CMatrix) -> (CMatrix, f64) {
    let (values, vectors) = hermitian_eigen(m);
    let clamped: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    (spectral_map(&values, &vectors, |x| x.max(0.0)), clamped)
}

/// Inverse square root of a positive definite Hermitian matrix.
pub fn inverse_sqrt_pd(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    let min = values.first().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Err(Error::NotPositive(min));
    }
    Ok(spectral_map(&values, &vectors, |x| 1.0 / x.sqrt()))
}

/// Bit masks (in basis-index space) for big-endian qubit positions.
#[inline]
fn bit_of(position: usize, n: usize) -> usize {
    1 << (n - 1 - position)
}

/// Extracts the sub-index formed by `positions` (in order) from a full index.
#[inline]
fn gather(index: usize, positions: &[usize], n: usize) -> usize {
    positions.iter().fold(0, |acc, &p| {
        (acc << 1) | usize::from(index & bit_of(p, n) != 0)
    })
}

/// Writes `sub` into the bits at `positions` of a full index.
#[inline]
fn scatter(sub: usize, positions: &[usize], n: usize) -> usize {
    let k = positions.len();
    positions.iter().enumerate().fold(0, |acc, (j, &p)| {
        if sub & (1 << (k - 1 - j)) != 0 {
            acc | bit_of(p, n)
        } else {
            acc
        }
    })
}

/// Embeds an operator acting on `positions` (ordered, most significant first)
/// into an `n`-qubit register, padding with identity.
pub fn embed(op: &CMatrix, positions: &[usize], n: usize) -> CMatrix {
    let dim = 1usize << n;
    let mask = positions.iter().fold(0, |acc, &p| acc | bit_of(p, n));
    let k = positions.len();
    debug_assert_eq!(op.nrows(), 1 << k);
    let mut out = CMatrix::zeros(dim, dim);
    for rest in (0..dim).filter(|r| r & mask == 0) {
        for a in 0..(1 << k) {
            let row = rest | scatter(a, positions, n);
            for b in 0..(1 << k) {
                let v = op[(a, b)];
                if v != ZERO {
                    out[(row, rest | scatter(b, positions, n))] = v;
                }
            }
        }
    }
    out
}

/// Partial trace keeping the qubits at `keep` (result ordered as listed).
pub fn partial_trace(m: &CMatrix, keep: &[usize], n: usize) -> CMatrix {
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        let ra = scatter(a, keep, n);
        for b in 0..dk {
            let rb = scatter(b, keep, n);
            let mut acc = ZERO;
            for t in 0..dt {
                let rt = scatter(t, &traced, n);
                acc += m[(ra | rt, rb | rt)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Reorders a state vector so that register position `i` of the result is
/// position `order[i]` of the input.
pub fn permute_vector(v: &CVector, order: &[usize]) -> CVector {
    let n = order.len();
    CVector::from_fn(v.len(), |i, _| v[scatter(i, order, n)])
}

/// Matrix analogue of [`permute_vector`].
pub fn permute_matrix(m: &CMatrix, order: &[usize]) -> CMatrix {
    let n = order.len();
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(scatter(i, order, n), scatter(j, order, n))]
    })
}

/// `gather` is exposed for index bookkeeping in tests and tomography.
pub fn sub_index(index: usize, positions: &[usize], n: usize) -> usize {
    gather(index, positions, n)
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product |v><v|.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_psd(seed: u64, dim: usize) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &a * a.adjoint()
    }

    #[test]
    fn sqrt_of_identity_is_identity() {
        let s = matrix_sqrt_psd(&identity(4)).unwrap();
        assert!(frobenius(&(s - identity(4))) < 1e-14);
    }

    #[test]
    fn sqrt_of_diag_4_0() {
        let m = real_matrix(2, &[4.0, 0.0, 0.0, 0.0]);
        let s = matrix_sqrt_psd(&m).unwrap();
        assert!(frobenius(&(s - real_matrix(2, &[2.0, 0.0, 0.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back_for_random_psd() {
        for seed in 0..100 {
            let dim = [2, 4, 8, 16][seed as usize % 4];
            let m = random_psd(seed, dim);
            let s = matrix_sqrt_psd(&m).unwrap();
            assert!(frobenius(&(&s * &s - &m)) < 1e-8, "seed {seed}");
            // independent check through the eigenvalue relation λ(S)² = λ(M)
            let (ls, _) = hermitian_eigen(&s);
            let (lm, _) = hermitian_eigen(&m);
            for (a, b) in ls.iter().zip(&lm) {
                assert!((a * a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sqrt_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalues() {
        let m = real_matrix(2, &[1.0, 0.0, 0.0, -5e-10]);
        let s = matrix_sqrt_psd(&m).unwrap();
        assert_eq!(s[(1, 1)], ZERO);
        let bad = real_matrix(2, &[1.0, 0.0, 0.0, -1e-6]);
        assert!(matches!(matrix_sqrt_psd(&bad), Err(Error::NotPositive(_))));
    }

    #[test]
    fn embed_matches_kron_for_adjacent_targets() {
        let x = real_matrix(2, &[0.0, 1.0, 1.0, 0.0]);
        let full = embed(&x, &[1], 3);
        let expected = kron(&kron(&identity(2), &x), &identity(2));
        assert!(frobenius(&(full - expected)) < 1e-15);
    }

    #[test]
    fn embed_respects_target_order() {
        // CNOT with control on position 1 and target on position 0
        let cnot = real_matrix(
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
            ],
        );
        let full = embed(&cnot, &[1, 0], 2);
        // |01> (control=1 at position 1) -> |11>
        assert_eq!(full[(3, 1)], ONE);
        assert_eq!(full[(0, 0)], ONE);
        assert_eq!(full[(2, 2)], ONE);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = real_matrix(2, &[0.7, 0.1, 0.1, 0.3]);
        let b = real_matrix(2, &[0.5, 0.0, 0.0, 0.5]);
        let ab = kron(&a, &b);
        assert!(frobenius(&(partial_trace(&ab, &[0], 2) - &a)) < 1e-15);
        assert!(frobenius(&(partial_trace(&ab, &[1], 2) - &b)) < 1e-15);
        // keeping both in swapped order permutes
        let swapped = partial_trace(&ab, &[1, 0], 2);
        assert!(frobenius(&(swapped - kron(&b, &a))) < 1e-15);
    }

    #[test]
    fn permutation_round_trip() {
        let v = CVector::from_fn(8, |i, _| real(i as f64));
        let order = [2, 0, 1];
        let p = permute_vector(&v, &order);
        // position 0 of result is old position 2
        assert_eq!(p[0b100], v[0b001]);
        let inverse = [1, 2, 0];
        assert_eq!(permute_vector(&p, &inverse), v);
    }
}
