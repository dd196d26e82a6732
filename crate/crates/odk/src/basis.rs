//! Operator bases: Pauli, generalized Gell-Mann, Weyl, mutually unbiased
//! bases, plus seeded random states, unitaries and channels.


use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{c, dagger, eye, kron, sqrtm_psd, vstack, zeros, I, ONE};
use crate::{C64, CMat};

/// Pauli matrix sigma_k for k in 0..=3 (sigma_0 = identity).
pub fn pauli(k: usize) -> CMat {
    let mut m = zeros(2, 2);
    match k {
        0 => {
            m[[0, 0]] = ONE;
            m[[1, 1]] = ONE;
        }
        1 => {
            m[[0, 1]] = ONE;
            m[[1, 0]] = ONE;
        }
        2 => {
            m[[0, 1]] = -I;
            m[[1, 0]] = I;
        }
        3 => {
            m[[0, 0]] = ONE;
            m[[1, 1]] = -ONE;
        }
        _ => panic!("pauli index out of range"),
    }
    m
}

pub fn sigma_plus() -> CMat {
    // (sigma_x + i sigma_y)/2 = |0><1| : raises |1> (excited = |1>) under
    // the convention used by the phase-covariant model below.
    let mut m = zeros(2, 2);
    m[[0, 1]] = ONE;
    m
}

pub fn sigma_minus() -> CMat {
    let mut m = zeros(2, 2);
    m[[1, 0]] = ONE;
    m
}

/// Generalized Gell-Mann basis of traceless Hermitian matrices,
/// orthonormal in the Hilbert-Schmidt inner product, ordered as all
/// symmetric pairs (k < l), then all antisymmetric pairs (k < l), then
/// the d-1 diagonal matrices. Pair blocks iterate l (outer) then k.
///
/// For d = 2 the order is sigma_x/√2, sigma_y/√2, sigma_z/√2.
pub fn gell_mann(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d - 1);
    let s = c(1.0 / 2f64.sqrt());
    for l in 1..d {
        for k in 0..l {
            let mut m = zeros(d, d);
            m[[k, l]] = s;
            m[[l, k]] = s;
            out.push(m);
        }
    }
    for l in 1..d {
        for k in 0..l {
            let mut m = zeros(d, d);
            m[[k, l]] = -I * s;
            m[[l, k]] = I * s;
            out.push(m);
        }
    }
    for l in 1..d {
        let norm = c(1.0 / ((l * (l + 1)) as f64).sqrt());
        let mut m = zeros(d, d);
        for k in 0..l {
            m[[k, k]] = norm;
        }
        m[[l, l]] = -c(l as f64) * norm;
        out.push(m);
    }
    out
}

/// Full Hermitian orthonormal basis with F_0 = 1/sqrt(d) prepended.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = vec![eye(d).mapv(|z| z / c((d as f64).sqrt()))];
    out.extend(gell_mann(d));
    out
}

/// Weyl unitary U_{k,l} = sum_m omega^{l m} |k+m><m|, omega = exp(2 pi i/d).
pub fn weyl(d: usize, k: usize, l: usize) -> CMat {
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
    let mut m = zeros(d, d);
    for mm in 0..d {
        m[[(k + mm) % d, mm]] = omega.powu((l * mm) as u32);
    }
    m
}

/// All d^2 Weyl operators indexed by alpha = k*d + l.
pub fn weyl_all(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            out.push(weyl(d, k, l));
        }
    }
    out
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// The d+1 mutually unbiased bases of C^d for prime d, each given as a
/// matrix whose columns are the basis vectors. The first basis is the
/// computational one; the others are eigenbases of X Z^k for k = 0..d-1.
pub fn mub_bases(d: usize) -> Result<Vec<CMat>> {
    if !is_prime(d) {
        return Err(crate::OdkError::NonPrimeDimension(d));
    }
    let mut bases = vec![eye(d)];
    let x = weyl(d, 1, 0);
    let z = weyl(d, 0, 1);
    let mut zk = eye(d);
    for _ in 0..d {
        let u = x.dot(&zk);
        let (_, vecs) = crate::linalg::eig(&u);
        bases.push(crate::linalg::orthonormalize_columns(&vecs));
        zk = zk.dot(&z);
    }
    // Sanity: every pair of distinct bases must be unbiased.
    for a in 0..bases.len() {
        for b in (a + 1)..bases.len() {
            let overlap = dagger(&bases[a]).dot(&bases[b]);
            for z in overlap.iter() {
                if (z.norm_sqr() - 1.0 / d as f64).abs() > 1e-9 {
                    return Err(crate::OdkError::Invalid(format!(
                        "MUB construction failed for d={d}: overlap {}",
                        z.norm_sqr()
                    )));
                }
            }
        }
    }
    Ok(bases)
}

/// Maximally entangled vector sum_i |ii>/sqrt(d) in C^d ⊗ C^d.
pub fn max_entangled(d: usize) -> crate::CVec {
    let mut v = ndarray::Array1::zeros(d * d);
    let a = c(1.0 / (d as f64).sqrt());
    for i in 0..d {
        v[i * d + i] = a;
    }
    v
}

/// Projector |psi+><psi+| onto the maximally entangled state.
pub fn max_entangled_projector(d: usize) -> CMat {
    let v = max_entangled(d);
    let mut p = zeros(d * d, d * d);
    for i in 0..d * d {
        for j in 0..d * d {
            p[[i, j]] = v[i] * v[j].conj();
        }
    }
    p
}

/// Seeded RNG used by every randomized routine in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    let mut m = zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = standard_normal(rng);
            let im: f64 = standard_normal(rng);
            m[[i, j]] = C64::new(re, im);
        }
    }
    m
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    loop {
        let u: f64 = rng.gen::<f64>();
        if u > 1e-300 {
            let v: f64 = rng.gen::<f64>();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(d, d, rng);
    let q = crate::linalg::orthonormalize_columns(&g);
    q
}

/// Haar-random pure state vector.
pub fn random_pure(d: usize, rng: &mut impl Rng) -> crate::CVec {
    let g = random_ginibre(d, 1, rng);
    let norm: f64 = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    g.column(0).mapv(|z| z / c(norm))
}

pub fn projector(v: &crate::CVec) -> CMat {
    let d = v.len();
    let mut p = zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            p[[i, j]] = v[i] * v[j].conj();
        }
    }
    p
}

/// Random full-rank density matrix (Hilbert-Schmidt measure).
pub fn random_density_rng(d: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(d, d, rng);
    let m = g.dot(&dagger(&g));
    let tr = crate::linalg::trace(&m);
    m.mapv(|z| z / tr)
}

pub fn random_density(d: usize, seed: u64) -> CMat {
    random_density_rng(d, &mut rng(seed))
}

/// Random Hermitian matrix with entries O(1).
pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(d, d, rng);
    (&g + &dagger(&g)).mapv(|z| z * 0.5)
}

/// Random CPTP map as `n_kraus` Gram-normalized Kraus operators.
pub fn random_kraus_set(d: usize, n_kraus: usize, rng: &mut impl Rng) -> Vec<CMat> {
    let raw: Vec<CMat> = (0..n_kraus).map(|_| random_ginibre(d, d, rng)).collect();
    let mut gram = zeros(d, d);
    for k in &raw {
        gram = gram + dagger(k).dot(k);
    }
    let g_inv_sqrt = {
        let s = sqrtm_psd(&gram);
        crate::linalg::inv(&s).expect("gram matrix singular")
    };
    raw.into_iter().map(|k| k.dot(&g_inv_sqrt)).collect()
}

/// Stack Kraus operators into the Stinespring isometry V: H -> H_out ⊗ H_E
/// with V = sum_i K_i ⊗ |i>_E.
pub fn stinespring_from_kraus(kraus: &[CMat]) -> CMat {
    let n_env = kraus.len();
    let (dout, _din) = kraus[0].dim();
    let blocks: Vec<CMat> = (0..dout)
        .map(|row| {
            let rows: Vec<CMat> = (0..n_env)
                .map(|e| {
                    kraus[e]
                        .row(row)
                        .to_owned()
                        .insert_axis(ndarray::Axis(0))
                })
                .collect();
            vstack(&rows)
        })
        .collect();
    vstack(&blocks)
}

/// Computational-basis projector |k><k| in dimension d.
pub fn basis_projector(d: usize, k: usize) -> CMat {
    let mut p = zeros(d, d);
    p[[k, k]] = ONE;
    p
}

/// Embed qubit operator on site `which` of a two-factor product space.
pub fn lift_two(a: &CMat, da: usize, db: usize, which: usize) -> CMat {
    match which {
        0 => kron(a, &eye(db)),
        1 => kron(&eye(da), a),
        _ => panic!("lift_two: which must be 0 or 1"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, hs_inner, trace};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gell_mann_is_orthonormal_traceless() {
        for d in [2usize, 3, 4] {
            let basis = gell_mann(d);
            assert_eq!(basis.len(), d * d - 1);
            for (i, a) in basis.iter().enumerate() {
                assert_abs_diff_eq!(trace(a).norm(), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(fro_norm(&(a - &dagger(a))), 0.0, epsilon = 1e-12);
                for (j, b) in basis.iter().enumerate() {
                    let ip = hs_inner(a, b);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ip.re, want, epsilon = 1e-12);
                    assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn weyl_orthogonality() {
        let d = 3;
        let ws = weyl_all(d);
        for (a, wa) in ws.iter().enumerate() {
            for (b, wb) in ws.iter().enumerate() {
                let ip = hs_inner(wa, wb);
                let want = if a == b { d as f64 } else { 0.0 };
                assert_abs_diff_eq!(ip.norm(), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mub_d2_matches_pauli_eigenbases() {
        let bases = mub_bases(2).unwrap();
        assert_eq!(bases.len(), 3);
    }

    #[test]
    fn mub_d3_and_d5_exist() {
        assert_eq!(mub_bases(3).unwrap().len(), 4);
        assert_eq!(mub_bases(5).unwrap().len(), 6);
        assert!(mub_bases(4).is_err());
    }

    #[test]
    fn random_kraus_set_is_trace_preserving() {
        let mut r = rng(5);
        let ks = random_kraus_set(3, 4, &mut r);
        let mut gram = crate::linalg::zeros(3, 3);
        for k in &ks {
            gram = gram + dagger(k).dot(k);
        }
        assert_abs_diff_eq!(
            crate::linalg::identity_defect(&gram),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn stinespring_isometry() {
        let mut r = rng(11);
        let ks = random_kraus_set(2, 3, &mut r);
        let v = stinespring_from_kraus(&ks);
        assert_eq!(v.dim(), (6, 2));
        let vtv = dagger(&v).dot(&v);
        assert_abs_diff_eq!(crate::linalg::identity_defect(&vtv), 0.0, epsilon = 1e-10);
    }
}
