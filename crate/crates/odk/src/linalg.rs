//! Dense complex linear algebra helpers shared by every module.
//!
//! Matrices are `ndarray` arrays of `Complex64`; decompositions
//! (eigenvalue, SVD, LU) are delegated to the pure-Rust `faer` kernels.
//! Vectorization follows the row-stacking convention:
//! `vec(X)[i*d + j] = X[i, j]`, so `vec(A X B^dag) = (A ⊗ conj(B)) vec(X)`.

use faer::Side;
use ndarray::{Array1, Array2, Axis};

use crate::{C64, CMat, CVec};

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(d: usize) -> CMat {
    Array2::eye(d)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Array2::zeros((rows, cols))
}

fn to_faer(a: &CMat) -> faer::Mat<faer::complex_native::c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        faer::complex_native::c64::new(a[[i, j]].re, a[[i, j]].im)
    })
}

fn from_faer(a: faer::MatRef<'_, faer::complex_native::c64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| {
        let z = a.read(i, j);
        C64::new(z.re, z.im)
    })
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// Hilbert-Schmidt inner product (A, B) = Tr(A^dag B).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Row-stacking vectorization.
pub fn vec_mat(x: &CMat) -> CVec {
    let (r, c) = x.dim();
    Array1::from_iter(x.iter().cloned()).into_shape(r * c).unwrap()
}

/// Inverse of [`vec_mat`]: reshape a length r*c vector into an r x c matrix.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    Array2::from_shape_vec((rows, cols), v.to_vec()).unwrap()
}

/// Partial trace over the second factor of H_A ⊗ H_B.
pub fn partial_trace_b(x: &CMat, da: usize, db: usize) -> CMat {
    let mut out = zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            let mut s = ZERO;
            for k in 0..db {
                s += x[[i * db + k, j * db + k]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

/// Partial trace over the first factor of H_A ⊗ H_B.
pub fn partial_trace_a(x: &CMat, da: usize, db: usize) -> CMat {
    let mut out = zeros(db, db);
    for i in 0..db {
        for j in 0..db {
            let mut s = ZERO;
            for k in 0..da {
                s += x[[k * db + i, k * db + j]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

/// Transpose of the first tensor factor of H_A ⊗ H_B.
pub fn partial_transpose_a(x: &CMat, da: usize, db: usize) -> CMat {
    let mut out = zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[[j * db + k, i * db + l]] = x[[i * db + k, j * db + l]];
                }
            }
        }
    }
    out
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry; cheap max-norm used for convergence checks.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum), used for expm scaling.
pub fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Trace norm ||A||_1 = sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).sum()
}

/// Operator norm ||A||_inf = largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).iter().cloned().fold(0.0, f64::max)
}

/// Hermiticity defect ||A - A^dag||_F.
pub fn herm_defect(a: &CMat) -> f64 {
    fro_norm(&(a - &dagger(a)))
}

/// Hermitian part (A + A^dag)/2.
pub fn hermitize(a: &CMat) -> CMat {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending order,
/// eigenvectors as columns.
pub fn eigh(a: &CMat) -> (Array1<f64>, CMat) {
    let h = hermitize(a);
    let evd = to_faer(&h).selfadjoint_eigendecomposition(Side::Lower);
    let n = a.nrows();
    let mut vals: Vec<(f64, usize)> = (0..n)
        .map(|k| (evd.s().column_vector().read(k).re, k))
        .collect();
    vals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let u = from_faer(evd.u());
    let mut vecs = zeros(n, n);
    let mut out = Array1::zeros(n);
    for (newk, (v, oldk)) in vals.iter().enumerate() {
        out[newk] = *v;
        vecs.column_mut(newk).assign(&u.column(*oldk));
    }
    (out, vecs)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eig_herm(a: &CMat) -> f64 {
    let (vals, _) = eigh(a);
    vals.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// General (non-Hermitian) eigendecomposition; columns of the second
/// return value are right eigenvectors.
pub fn eig(a: &CMat) -> (CVec, CMat) {
    let evd = to_faer(a).complex_eigendecomposition();
    let n = a.nrows();
    let mut vals = Array1::zeros(n);
    for k in 0..n {
        let z = evd.s().column_vector().read(k);
        vals[k] = C64::new(z.re, z.im);
    }
    (vals, from_faer(evd.u()))
}

/// Eigenvalues only.
pub fn eigvals(a: &CMat) -> CVec {
    let vals = to_faer(a).complex_eigenvalues();
    Array1::from_iter(vals.into_iter().map(|z| C64::new(z.re, z.im)))
}

pub fn inv(a: &CMat) -> crate::error::Result<CMat> {
    let n = a.nrows();
    if rank(a, 1e-13) < n {
        return Err(crate::OdkError::Invalid("matrix not invertible".into()));
    }
    use faer::prelude::SpSolver;
    let lu = to_faer(a).partial_piv_lu();
    let id = to_faer(&eye(n));
    Ok(from_faer(lu.solve(&id).as_ref()))
}

/// Solve A X = B.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    use faer::prelude::SpSolver;
    let lu = to_faer(a).partial_piv_lu();
    from_faer(lu.solve(&to_faer(b)).as_ref())
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Array1<f64> {
    let svd = to_faer(a).svd();
    let k = a.nrows().min(a.ncols());
    Array1::from_iter((0..k).map(|i| svd.s_diagonal().read(i).re))
}

/// Full SVD: (U, singular values, V) with A = U diag(s) V^dag.
pub fn svd(a: &CMat) -> (CMat, Array1<f64>, CMat) {
    let svd = to_faer(a).svd();
    let k = a.nrows().min(a.ncols());
    let s = Array1::from_iter((0..k).map(|i| svd.s_diagonal().read(i).re));
    (from_faer(svd.u()), s, from_faer(svd.v()))
}

/// 2-norm condition number; `f64::INFINITY` when numerically singular.
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Numerical rank with relative cutoff `rel_tol * sigma_max`.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

pub fn det(a: &CMat) -> C64 {
    let z = to_faer(a).determinant();
    C64::new(z.re, z.im)
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn func_herm(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let n = a.nrows();
    let mut out = zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        let col = vecs.column(k);
        let fv = c(f(v));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += fv * col[i] * col[j].conj();
            }
        }
    }
    out
}

pub fn sqrtm_psd(a: &CMat) -> CMat {
    func_herm(a, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Positive part A_+ of a Hermitian matrix (clip eigenvalues below 0).
pub fn positive_part(a: &CMat) -> CMat {
    func_herm(a, |x| x.max(0.0))
}

/// Trace of the negative part of a Hermitian matrix (>= 0).
pub fn trace_negative_part(a: &CMat) -> f64 {
    let (vals, _) = eigh(a);
    vals.iter().filter(|&&x| x < 0.0).map(|&x| -x).sum()
}

/// Matrix exponential by scaling-and-squaring with Padé(13).
///
/// For the superoperator sizes used here (<= 256 x 256) this is both
/// fast and accurate to machine precision.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return zeros(0, 0);
    }
    let norm = one_norm(a);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a.mapv(|z| z / c(2f64.powi(s as i32)));
    let mut e = pade13(&a_scaled);
    for _ in 0..s {
        e = e.dot(&e);
    }
    e
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade13(a: &CMat) -> CMat {
    let n = a.nrows();
    let id = eye(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let b = PADE13;
    let u_inner = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let u = a.dot(
        &(a6.dot(&u_inner) + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &id * c(b[1])),
    );
    let v_inner = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = a6.dot(&v_inner) + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &id * c(b[0]);
    let num = &v + &u;
    let den = &v - &u;
    solve(&den, &num)
}

/// Gram-Schmidt column orthonormalization (used for small isometries).
pub fn orthonormalize_columns(a: &CMat) -> CMat {
    let (rows, cols) = a.dim();
    let mut out = a.clone();
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..rows).map(|i| out[[i, k]].conj() * out[[i, j]]).sum();
                for i in 0..rows {
                    let v = out[[i, k]];
                    out[[i, j]] -= proj * v;
                }
            }
        }
        let norm: f64 = (0..rows).map(|i| out[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-14 {
            for i in 0..rows {
                out[[i, j]] = out[[i, j]] / c(norm);
            }
        }
    }
    out
}

/// Real part of every entry, as an f64 matrix.
pub fn re_mat(a: &CMat) -> Array2<f64> {
    a.mapv(|z| z.re)
}

/// Embed a real matrix as a complex one.
pub fn complexify(a: &Array2<f64>) -> CMat {
    a.mapv(c)
}

/// Max-norm distance from the identity.
pub fn identity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    max_abs(&(a - &eye(n)))
}

/// Glue blocks vertically.
pub fn vstack(blocks: &[CMat]) -> CMat {
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    ndarray::concatenate(Axis(0), &views).expect("vstack shape mismatch")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vec_unvec_roundtrip_and_sandwich_rule() {
        let a = crate::basis::pauli(1);
        let b = crate::basis::pauli(2);
        let x = crate::basis::pauli(3);
        // vec(A X B^dag) = (A ⊗ conj(B)) vec(X)
        let lhs = vec_mat(&a.dot(&x).dot(&dagger(&b)));
        let rhs = kron(&a, &b.mapv(|z| z.conj())).dot(&vec_mat(&x));
        assert_abs_diff_eq!(fro_norm(&unvec(&(&lhs - &rhs), 2, 2)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_matches_diagonal_exponential() {
        let mut a = zeros(2, 2);
        a[[0, 0]] = c(-1.0);
        a[[1, 1]] = c(2.0);
        let e = expm(&a);
        assert_abs_diff_eq!(e[[0, 0]].re, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[[1, 1]].re, (2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(-i theta sigma_x / 2) has cos(theta/2) on the diagonal.
        let sx = crate::basis::pauli(1);
        let theta = 0.7;
        let e = expm(&sx.mapv(|z| -I * z * c(theta / 2.0)));
        assert_abs_diff_eq!(e[[0, 0]].re, (theta / 2.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(e[[0, 1]].im, -(theta / 2.0).sin(), epsilon = 1e-12);
    }

    #[test]
    fn eig_recovers_spectrum_of_nonnormal_matrix() {
        // [[0, 1], [0, 0]] + diag(1, 2) has eigenvalues 1 and 2.
        let mut a = zeros(2, 2);
        a[[0, 0]] = c(1.0);
        a[[0, 1]] = c(1.0);
        a[[1, 1]] = c(2.0);
        let mut vals: Vec<f64> = eigvals(&a).iter().map(|z| z.re).collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_traces_are_consistent() {
        let a = crate::basis::random_density(3, 7);
        let b = crate::basis::random_density(2, 8);
        let ab = kron(&a, &b);
        assert_abs_diff_eq!(fro_norm(&(&partial_trace_b(&ab, 3, 2) - &a)), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fro_norm(&(&partial_trace_a(&ab, 3, 2) - &b)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_of_pauli_is_two() {
        assert_abs_diff_eq!(trace_norm(&crate::basis::pauli(3)), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn inv_and_solve_agree() {
        let a = crate::basis::random_density(3, 3) + eye(3).mapv(|z| z * 0.5);
        let ai = inv(&a).unwrap();
        assert_abs_diff_eq!(identity_defect(&a.dot(&ai)), 0.0, epsilon = 1e-10);
    }
}
