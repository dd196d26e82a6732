//! Structure, classification and spectral analysis of generators of
//! quantum dynamics.
//!
//! The canonical form of a trace-annihilating, Hermiticity-preserving map
//! is L(rho) = -i[H, rho] + sum_kl C_kl (F_k rho F_l - {F_l F_k, rho}/2)
//! over the generalized Gell-Mann basis; C is the Kossakowski matrix and
//! the generator is GKLS exactly when C >= 0.

use ndarray::Array1;
use rand::Rng;

use crate::basis::{self, gell_mann, max_entangled_projector};
use crate::error::Result;
use crate::linalg::{
    anticommutator, c, commutator, dagger, eig, eigh, eye, fro_norm, func_herm, hermitize,
    hs_inner, kron, max_abs, min_eig_herm, rank, trace, unvec, zeros, I, ONE,
};
use crate::repcore::{DensityMatrix, LinearMap};
use crate::{C64, CMat, CVec, OdkError};

/// GKLS-form data: Hamiltonian plus Kossakowski matrix in the fixed
/// traceless orthonormal basis returned by [`gell_mann`].
#[derive(Clone, Debug)]
pub struct GKLSGenerator {
    pub dim: usize,
    pub hamiltonian: CMat,
    pub kossakowski: CMat,
}

impl GKLSGenerator {
    pub fn new(hamiltonian: CMat, kossakowski: CMat) -> Result<Self> {
        let d = hamiltonian.nrows();
        if kossakowski.dim() != (d * d - 1, d * d - 1) {
            return Err(OdkError::DimensionMismatch(format!(
                "Kossakowski matrix must be {n} x {n}",
                n = d * d - 1
            )));
        }
        Ok(Self { dim: d, hamiltonian, kossakowski })
    }

    /// Purely Hamiltonian generator.
    pub fn hamiltonian_only(h: CMat) -> Self {
        let d = h.nrows();
        Self { dim: d, hamiltonian: h, kossakowski: zeros(d * d - 1, d * d - 1) }
    }

    /// Diagonal-form input: rates and jump operators. The jumps need not
    /// be the basis elements; they are expanded over the basis.
    pub fn from_rates_jumps(h: CMat, rates_jumps: &[(f64, CMat)]) -> Self {
        let d = h.nrows();
        let fs = gell_mann(d);
        let n = d * d - 1;
        let mut ckl = zeros(n, n);
        for (gamma, l) in rates_jumps {
            // Expand L = c0 1/sqrt(d) + sum_k u_k F_k; the trace part is
            // absorbed into H and a trace term which must vanish for
            // trace-orthogonal jumps. We require traceless jumps here.
            let u: Vec<C64> = fs.iter().map(|f| hs_inner(f, l)).collect();
            for k in 0..n {
                for m in 0..n {
                    ckl[[k, m]] += c(*gamma) * u[k] * u[m].conj();
                }
            }
        }
        Self { dim: d, hamiltonian: h, kossakowski: ckl }
    }

    /// The generator as a superoperator.
    pub fn to_map(&self) -> LinearMap {
        let d = self.dim;
        let fs = gell_mann(d);
        let n = d * d - 1;
        let h = self.hamiltonian.clone();
        let ckl = self.kossakowski.clone();
        LinearMap::from_action(d, d, move |rho| {
            let mut out = commutator(&h, rho).mapv(|z| -I * z);
            for k in 0..n {
                for l in 0..n {
                    let ck = ckl[[k, l]];
                    if ck.norm() < 1e-300 {
                        continue;
                    }
                    let sandwich = fs[k].dot(rho).dot(&fs[l]);
                    let anti = anticommutator(&fs[l].dot(&fs[k]), rho);
                    out = out + (sandwich - anti.mapv(|z| z * 0.5)).mapv(|z| z * ck);
                }
            }
            out
        })
    }

    /// Diagonalize the Kossakowski matrix into rates and orthonormal
    /// traceless jump operators, descending by rate.
    pub fn diagonal_form(&self) -> Vec<(f64, CMat)> {
        let d = self.dim;
        let fs = gell_mann(d);
        let n = d * d - 1;
        let (vals, vecs) = eigh(&self.kossakowski);
        let mut out: Vec<(f64, CMat)> = (0..n)
            .map(|m| {
                let mut l = zeros(d, d);
                for k in 0..n {
                    l = l + fs[k].mapv(|z| z * vecs[[k, m]]);
                }
                (vals[m], l)
            })
            .collect();
        out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        out
    }

    /// Canonical rates (eigenvalues of the Kossakowski matrix).
    pub fn rates(&self) -> Vec<f64> {
        let (vals, _) = eigh(&self.kossakowski);
        let mut v = vals.to_vec();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    pub fn min_kossakowski_eig(&self) -> f64 {
        min_eig_herm(&self.kossakowski)
    }
}

/// Split a trace-annihilating, Hermiticity-preserving superoperator into
/// its canonical Hamiltonian + Kossakowski form. The rebuilt generator
/// matches the input to ~1e-12 relative accuracy.
pub fn canonical_split(gen: &LinearMap) -> Result<GKLSGenerator> {
    let d = gen.din();
    if d != gen.dout() {
        return Err(OdkError::DimensionMismatch("generator must be square".into()));
    }
    let tr_defect = gen.trace_annihilation_defect();
    let scale = max_abs(gen.superoperator()).max(1.0);
    if tr_defect > 1e-9 * scale {
        return Err(OdkError::TraceNotAnnihilated(tr_defect));
    }
    let herm_defect = gen.hermiticity_preservation_defect();
    if herm_defect > 1e-9 * scale {
        return Err(OdkError::NotHermiticityPreserving(herm_defect));
    }
    let fs = crate::basis::hermitian_basis(d);
    let m = d * d;
    // S = sum_{ab} c_ab F_a ⊗ conj(F_b); the F_a ⊗ conj(F_b) are an
    // orthonormal set, so c_ab is an HS inner product.
    let s = gen.superoperator();
    let mut coeff = zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let basis_el = kron(&fs[a], &fs[b].mapv(|z| z.conj()));
            coeff[[a, b]] = hs_inner(&basis_el, s);
        }
    }
    // H = (i / 2 sqrt(d)) sum_k (c_k0 F_k - c_0k F_k), traceless gauge.
    let mut h = zeros(d, d);
    for k in 1..m {
        let amp = I * (coeff[[k, 0]] - coeff[[0, k]]) / c(2.0 * (d as f64).sqrt());
        h = h + fs[k].mapv(|z| z * amp);
    }
    let h = hermitize(&h);
    let mut ckl = zeros(m - 1, m - 1);
    for k in 1..m {
        for l in 1..m {
            ckl[[k - 1, l - 1]] = coeff[[k, l]];
        }
    }
    let out = GKLSGenerator { dim: d, hamiltonian: h, kossakowski: hermitize(&ckl) };
    let rebuilt = out.to_map();
    let resid = fro_norm(&(rebuilt.superoperator() - gen.superoperator()));
    if resid > 1e-9 * scale * (m as f64) {
        return Err(OdkError::Invalid(format!(
            "canonical split reconstruction residual {resid:.3e}"
        )));
    }
    Ok(out)
}

/// Classification verdict for a generator.
#[derive(Clone, Debug)]
pub struct GeneratorVerdict {
    pub trace_annihilating: bool,
    /// Minimum of Tr(Q L(P) Q)-type probes; a negative value certifies a
    /// conditional-positivity violation.
    pub conditional_min_value: f64,
    pub conditional_violation: bool,
    /// Exact conditionally-completely-positive check via the projected
    /// extended generator.
    pub ccp: bool,
    pub ccp_min_eig: f64,
    /// Exact GKLS check: Kossakowski matrix PSD.
    pub gkls: bool,
    pub min_kossakowski_eig: f64,
}

/// Classify a trace-annihilating generator: GKLS and CCP decided exactly,
/// conditional positivity probed on `probes` random rank-1 projectors
/// (plus the three canonical qubit projectors in d = 2).
pub fn classify_generator(gen: &LinearMap, probes: usize, seed: u64) -> Result<GeneratorVerdict> {
    let d = gen.din();
    let tr_defect = gen.trace_annihilation_defect();
    let scale = max_abs(gen.superoperator()).max(1.0);
    if tr_defect > 1e-8 * scale {
        return Err(OdkError::TraceNotAnnihilated(tr_defect));
    }
    let split = canonical_split(gen)?;
    let min_k = split.min_kossakowski_eig();
    let gkls = min_k >= -1e-10 * scale;

    // CCP: (1 - P+)(id ⊗ L)(P+)(1 - P+) >= 0.
    let ext = gen.ancilla_extend(d);
    let pplus = max_entangled_projector(d);
    let img = ext.apply(&pplus);
    let perp = eye(d * d) - &pplus;
    let projected = perp.dot(&img).dot(&perp);
    let ccp_min_eig = min_eig_herm(&projected);
    let ccp = ccp_min_eig >= -1e-10 * scale;

    // Conditional positivity probes: P_perp L(P) P_perp >= 0 on rank-1 P.
    let mut rng = basis::rng(seed);
    let mut min_val = f64::INFINITY;
    let mut check = |p: &CMat| {
        let pperp = eye(d) - p;
        let m = pperp.dot(&gen.apply(p)).dot(&pperp);
        let v = min_eig_herm(&m);
        if v < min_val {
            min_val = v;
        }
    };
    if d == 2 {
        for p in [
            basis::basis_projector(2, 0),
            basis::projector(&Array1::from_vec(vec![c(0.5f64.sqrt()), c(0.5f64.sqrt())])),
            basis::projector(&Array1::from_vec(vec![c(0.5f64.sqrt()), I * c(0.5f64.sqrt())])),
        ] {
            check(&p);
        }
    }
    for _ in 0..probes {
        let v = basis::random_pure(d, &mut rng);
        check(&basis::projector(&v));
    }

    Ok(GeneratorVerdict {
        trace_annihilating: true,
        conditional_min_value: min_val,
        conditional_violation: min_val < -1e-9 * scale,
        ccp,
        ccp_min_eig,
        gkls,
        min_kossakowski_eig: min_k,
    })
}

/// Spectral data of a generator superoperator.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eigenvalues: CVec,
    /// Relaxation rates -Re l_a.
    pub relaxation_rates: Vec<f64>,
    /// Frequencies -Im l_a.
    pub frequencies: Vec<f64>,
    /// Distinct eigenvalues with their Jordan blocks (eigenvalue, size),
    /// one entry per block.
    pub jordan_blocks: Vec<(C64, usize)>,
    /// Basis of Ker L, as matrices.
    pub steady_states: Vec<CMat>,
    /// Flags per eigenvalue: |Re l| below tolerance.
    pub peripheral: Vec<bool>,
}

const JORDAN_TOL: f64 = 1e-7;

pub fn spectral_report(gen: &LinearMap) -> SpectralReport {
    let s = gen.superoperator();
    let n = s.nrows();
    let raw = crate::linalg::eigvals(s);
    let scale = max_abs(s).max(1.0);

    // Cluster eigenvalues within the Jordan tolerance. A defective
    // eigenvalue is recovered to O(eps) as the cluster mean, while the
    // individually computed copies carry O(sqrt(eps)) error.
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    let mut assignment = vec![0usize; n];
    for (i, v) in raw.iter().enumerate() {
        if let Some((ci, cl)) = clusters
            .iter_mut()
            .enumerate()
            .find(|(_, (w, _))| (*w - *v).norm() < JORDAN_TOL * scale)
        {
            let m = cl.1 as f64;
            cl.0 = (cl.0 * c(m) + v) / c(m + 1.0);
            cl.1 += 1;
            assignment[i] = ci;
        } else {
            assignment[i] = clusters.len();
            clusters.push((*v, 1));
        }
    }
    let vals: CVec = Array1::from_iter(assignment.iter().map(|&ci| clusters[ci].0));

    let mut jordan_blocks = Vec::new();
    for &(lam, mult) in &clusters {
        if mult == 1 {
            jordan_blocks.push((lam, 1));
            continue;
        }
        // Block sizes follow from ranks of powers of (S - lam).
        let a = s - &eye(n).mapv(|z| z * lam);
        let mut ranks = vec![n];
        let mut power = eye(n);
        for _ in 0..mult {
            power = power.dot(&a);
            ranks.push(rank(&power, JORDAN_TOL));
        }
        // blocks of size >= k: ranks[k-1] - ranks[k]
        let mut sizes = Vec::new();
        for k in 1..=mult {
            let geq_k = ranks[k - 1].saturating_sub(ranks[k]);
            let geq_k1 = if k < mult {
                ranks[k].saturating_sub(ranks[k + 1])
            } else {
                0
            };
            let exactly_k = geq_k.saturating_sub(geq_k1);
            for _ in 0..exactly_k {
                sizes.push(k);
            }
        }
        if sizes.is_empty() {
            sizes = vec![1; mult];
        }
        for sz in sizes {
            jordan_blocks.push((lam, sz));
        }
    }

    let (vals_full, vecs) = eig(s);
    let mut steady_states = Vec::new();
    for (k, v) in vals_full.iter().enumerate() {
        if v.norm() < 1e-9 * scale {
            let m = unvec(&vecs.column(k).to_owned(), gen.dout(), gen.dout());
            steady_states.push(m);
        }
    }

    let relaxation_rates = vals.iter().map(|z| -z.re).collect();
    let frequencies = vals.iter().map(|z| -z.im).collect();
    let peripheral = vals.iter().map(|z| z.re.abs() < 1e-9 * scale).collect();
    SpectralReport {
        eigenvalues: vals,
        relaxation_rates,
        frequencies,
        jordan_blocks,
        steady_states,
        peripheral,
    }
}

/// Outcome of the relaxation-rate bound R_a <= 1/d (unital case) or
/// 2 Gamma_k <= Gamma (qubit case).
#[derive(Clone, Debug)]
pub struct RateBoundCheck {
    pub relative_rates: Vec<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Check the relaxation-rate bound on the nonzero relaxation rates of a
/// generator: max_a Gamma_a <= Gamma / d, i.e. relative rates R_a <= 1/d.
pub fn rate_bound_check(report: &SpectralReport, dim: usize) -> RateBoundCheck {
    let total: f64 = report.relaxation_rates.iter().sum();
    let bound = 1.0 / dim as f64;
    if total <= 1e-14 {
        return RateBoundCheck { relative_rates: vec![], bound, pass: true };
    }
    let relative: Vec<f64> = report.relaxation_rates.iter().map(|g| g / total).collect();
    let pass = relative.iter().all(|&r| r <= bound + 1e-8);
    RateBoundCheck { relative_rates: relative, bound, pass }
}

/// Detailed balance residuals of a GKLS generator w.r.t. a full-rank
/// steady state.
#[derive(Clone, Debug)]
pub struct DetailedBalanceCheck {
    /// || L(rho_ss) ||.
    pub steady_residual: f64,
    pub is_steady: bool,
    /// || Phi^dual - tilde(Phi^dual) || over the canonical dissipative part.
    pub self_dual_residual: f64,
    /// || [L, Delta] || with Delta(X) = rho_ss X rho_ss^{-1}.
    pub delta_commutator_residual: f64,
    pub delta_commutes: bool,
}

pub fn detailed_balance_check(
    gen: &GKLSGenerator,
    rho_ss: &DensityMatrix,
) -> Result<DetailedBalanceCheck> {
    let d = gen.dim;
    let (vals, _) = eigh(rho_ss.matrix());
    let min_p = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_p < 1e-12 {
        return Err(OdkError::SingularSteadyState(min_p));
    }
    let lmap = gen.to_map();
    let steady_residual = fro_norm(&lmap.apply(rho_ss.matrix()));
    let rho = rho_ss.matrix().clone();
    let rho_inv = crate::linalg::inv(&rho)?;

    // Canonical dissipative part Phi(X) = sum C_kl F_k X F_l.
    let fs = gell_mann(d);
    let n = d * d - 1;
    let ckl = gen.kossakowski.clone();
    let phi = LinearMap::from_action(d, d, move |x| {
        let mut out = zeros(d, d);
        for k in 0..n {
            for l in 0..n {
                let coef = ckl[[k, l]];
                if coef.norm() < 1e-300 {
                    continue;
                }
                out = out + fs[k].dot(x).dot(&fs[l]).mapv(|z| z * coef);
            }
        }
        out
    });
    let phi_dual = phi.dual();
    // tilde(Psi)(X) = Psi^dual(X rho) rho^{-1} with Psi = Phi^dual.
    let rho2 = rho.clone();
    let rho_inv2 = rho_inv.clone();
    let phi_clone = phi.clone();
    let tilde = LinearMap::from_action(d, d, move |x| {
        phi_clone.apply(&x.dot(&rho2)).dot(&rho_inv2)
    });
    let self_dual_residual = fro_norm(&(tilde.superoperator() - phi_dual.superoperator()));

    let delta = LinearMap::from_action(d, d, move |x| rho.dot(x).dot(&rho_inv));
    let comm = lmap.superoperator().dot(delta.superoperator())
        - delta.superoperator().dot(lmap.superoperator());
    let delta_commutator_residual = fro_norm(&comm);

    Ok(DetailedBalanceCheck {
        steady_residual,
        is_steady: steady_residual < 1e-9,
        self_dual_residual,
        delta_commutator_residual,
        delta_commutes: delta_commutator_residual < 1e-9,
    })
}

/// Result of the Davies construction.
pub struct DaviesResult {
    pub generator: GKLSGenerator,
    pub bohr_frequencies: Vec<f64>,
    pub lamb_shift: CMat,
    pub warnings: Vec<String>,
}

const BOHR_TOL: f64 = 1e-9;

/// Assemble the Davies generator from the system Hamiltonian, coupling
/// operators and spectral data gamma_ab(omega) (PSD per frequency) plus
/// the Lamb-shift data s_ab(omega).
///
/// The jump operator at Bohr frequency omega > 0 lowers the energy by
/// omega: A(omega) = sum_{e' - e = omega} P_e A P_{e'}, so that
/// A(-omega) = A(omega)^dag and a KMS-symmetric gamma fixes the thermal
/// state.
pub fn davies_build(
    h_s: &CMat,
    couplings: &[CMat],
    gamma: &dyn Fn(f64) -> CMat,
    lamb: &dyn Fn(f64) -> CMat,
) -> Result<DaviesResult> {
    let d = h_s.nrows();
    let n_c = couplings.len();
    let (energies, vecs) = eigh(h_s);
    let mut warnings = Vec::new();

    // Cluster energies into levels.
    let mut levels: Vec<(f64, Vec<usize>)> = Vec::new();
    for (k, &e) in energies.iter().enumerate() {
        if let Some(lv) = levels.iter_mut().find(|(w, _)| (*w - e).abs() < BOHR_TOL) {
            lv.1.push(k);
        } else {
            levels.push((e, vec![k]));
        }
    }
    let projectors: Vec<CMat> = levels
        .iter()
        .map(|(_, idx)| {
            let mut p = zeros(d, d);
            for &k in idx {
                let col = vecs.column(k);
                for i in 0..d {
                    for j in 0..d {
                        p[[i, j]] += col[i] * col[j].conj();
                    }
                }
            }
            p
        })
        .collect();

    // Bohr frequencies (clustered) and per-frequency jump components.
    let mut freqs: Vec<f64> = Vec::new();
    for (em, _) in &levels {
        for (en, _) in &levels {
            let w = em - en;
            if !freqs.iter().any(|x| (x - w).abs() < BOHR_TOL) {
                freqs.push(w);
            }
        }
    }
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in freqs.windows(2) {
        if (pair[1] - pair[0]).abs() < 10.0 * BOHR_TOL && (pair[1] - pair[0]).abs() > 0.0 {
            warnings.push(format!(
                "Bohr gap {:.3e} close to clustering tolerance",
                pair[1] - pair[0]
            ));
        }
    }

    // A_alpha(omega) = sum_{e' - e = omega} P_e A_alpha P_{e'}.
    let a_of = |alpha: usize, w: f64| -> CMat {
        let mut out = zeros(d, d);
        for (i, (ei, _)) in levels.iter().enumerate() {
            for (j, (ej, _)) in levels.iter().enumerate() {
                if (ej - ei - w).abs() < BOHR_TOL {
                    out = out + projectors[i].dot(&couplings[alpha]).dot(&projectors[j]);
                }
            }
        }
        out
    };

    let mut lamb_shift = zeros(d, d);
    let mut terms: Vec<(C64, CMat, CMat)> = Vec::new(); // (gamma_ab, A_b, A_a)
    for &w in &freqs {
        let g = gamma(w);
        if g.dim() != (n_c, n_c) {
            return Err(OdkError::DimensionMismatch(format!(
                "gamma(omega) must be {n_c} x {n_c}"
            )));
        }
        let min_g = min_eig_herm(&g);
        if min_g < -1e-10 {
            return Err(OdkError::NonPsdSpectralData("gamma".into(), w, min_g));
        }
        let s = lamb(w);
        let ops: Vec<CMat> = (0..n_c).map(|al| a_of(al, w)).collect();
        for al in 0..n_c {
            for be in 0..n_c {
                if g[[al, be]].norm() > 1e-300 {
                    terms.push((g[[al, be]], ops[be].clone(), ops[al].clone()));
                }
                if s[[al, be]].norm() > 1e-300 {
                    lamb_shift = lamb_shift
                        + dagger(&ops[al]).dot(&ops[be]).mapv(|z| z * s[[al, be]]);
                }
            }
        }
    }
    let lamb_shift = hermitize(&lamb_shift);

    let h_total = h_s + &lamb_shift;
    let lmap = LinearMap::from_action(d, d, move |rho| {
        let mut out = commutator(&h_total, rho).mapv(|z| -I * z);
        for (coef, a_b, a_a) in &terms {
            let sandwich = a_b.dot(rho).dot(&dagger(a_a));
            let anti = anticommutator(&dagger(a_a).dot(a_b), rho);
            out = out + (sandwich - anti.mapv(|z| z * 0.5)).mapv(|z| z * *coef);
        }
        out
    });
    let generator = canonical_split(&lmap)?;
    Ok(DaviesResult {
        generator,
        bohr_frequencies: freqs,
        lamb_shift,
        warnings,
    })
}

/// Thermal state exp(-beta H)/Z.
pub fn thermal_state(h: &CMat, beta: f64) -> DensityMatrix {
    let m = func_herm(h, |e| (-beta * e).exp());
    let z = trace(&m);
    DensityMatrix::new_unchecked(m.mapv(|x| x / z))
}

/// Tilted generator with counting fields, one per reservoir generator.
pub struct TiltedGenerator {
    pub generators: Vec<GKLSGenerator>,
    pub states: Vec<DensityMatrix>,
}

#[derive(Clone, Debug)]
pub struct ScgfResult {
    pub lambda: f64,
    pub leading_simple: bool,
    /// exp(t_probe L_chi) minimum Choi eigenvalue (CP check).
    pub probe_min_choi: f64,
}

impl TiltedGenerator {
    pub fn new(generators: Vec<GKLSGenerator>, states: Vec<DensityMatrix>) -> Result<Self> {
        if generators.len() != states.len() || generators.is_empty() {
            return Err(OdkError::Invalid("need one reference state per generator".into()));
        }
        for (g, s) in generators.iter().zip(&states) {
            let db = detailed_balance_check(g, s)?;
            if !db.is_steady || db.self_dual_residual > 1e-7 {
                return Err(OdkError::DetailedBalanceViolated(format!(
                    "steady residual {:.3e}, self-dual residual {:.3e}",
                    db.steady_residual, db.self_dual_residual
                )));
            }
        }
        Ok(Self { generators, states })
    }

    /// Superoperator of L_chi(rho) = sum_j L_j(rho rho_j^chi_j) rho_j^{-chi_j}.
    pub fn tilted_map(&self, chi: &[f64]) -> LinearMap {
        assert_eq!(chi.len(), self.generators.len());
        let d = self.generators[0].dim;
        let mut total = zeros(d * d, d * d);
        for (j, gen) in self.generators.iter().enumerate() {
            let rho = self.states[j].matrix();
            let pow_plus = func_herm(rho, |p| p.powf(chi[j]));
            let pow_minus = func_herm(rho, |p| p.powf(-chi[j]));
            // right multiplication by M has superoperator 1 ⊗ M^T
            let right_plus = kron(&eye(d), &pow_plus.t().to_owned());
            let right_minus = kron(&eye(d), &pow_minus.t().to_owned());
            let s = gen.to_map();
            total = total + right_minus.dot(s.superoperator()).dot(&right_plus);
        }
        LinearMap::from_super(total, d, d).unwrap()
    }

    /// Scaled cumulant generating function lambda(chi) = max Re spectrum
    /// of the tilted generator, with a simplicity flag and a CP probe of
    /// exp(t_probe L_chi).
    pub fn scgf(&self, chi: &[f64], t_probe: f64) -> ScgfResult {
        let tilted = self.tilted_map(chi);
        let vals = tilted.spectrum();
        let lambda = vals.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let near: usize = vals.iter().filter(|z| (z.re - lambda).abs() < 1e-8).count();
        let exp_map = LinearMap::from_super(
            crate::linalg::expm(&tilted.superoperator().mapv(|z| z * c(t_probe))),
            tilted.din(),
            tilted.dout(),
        )
        .unwrap();
        ScgfResult {
            lambda,
            leading_simple: near == 1,
            probe_min_choi: exp_map.min_choi_eig(),
        }
    }

    /// Legendre-Fenchel rate function I(x) = sup_chi (x·chi - lambda(chi))
    /// evaluated by a dense grid search over the box [-chi_max, chi_max]^N.
    pub fn legendre(&self, x: &[f64], chi_max: f64, grid_points: usize) -> f64 {
        let n = self.generators.len();
        assert_eq!(x.len(), n);
        let mut best = f64::NEG_INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let chi: Vec<f64> = idx
                .iter()
                .map(|&i| -chi_max + 2.0 * chi_max * i as f64 / (grid_points - 1) as f64)
                .collect();
            let lam = self.scgf(&chi, 1.0).lambda;
            let val = x.iter().zip(&chi).map(|(a, b)| a * b).sum::<f64>() - lam;
            if val > best {
                best = val;
            }
            // advance the multi-index
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                idx[k] += 1;
                if idx[k] < grid_points {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Random GKLS generator: random traceless Hermitian H (the canonical
/// gauge) and random PSD Kossakowski matrix, with unit-scale entries.
pub fn random_gkls(d: usize, rng: &mut impl Rng) -> GKLSGenerator {
    let h0 = basis::random_hermitian(d, rng);
    let h = &h0 - &eye(d).mapv(|z| z * trace(&h0) / c(d as f64));
    let n = d * d - 1;
    let g = basis::random_ginibre(n, n, rng);
    let ckl = g.dot(&dagger(&g)).mapv(|z| z / c(n as f64));
    GKLSGenerator { dim: d, hamiltonian: h, kossakowski: ckl }
}

/// Random unital GKLS generator: Hermitian jumps make the generator
/// unital; rates are positive.
pub fn random_unital_gkls(d: usize, rng: &mut impl Rng) -> GKLSGenerator {
    let n = d * d - 1;
    let fs = gell_mann(d);
    // Random orthogonal mixing of the Hermitian basis with positive rates
    // keeps each jump Hermitian, hence the generator unital.
    let mut rates_jumps = Vec::new();
    for k in 0..n {
        let rate: f64 = rng.gen::<f64>() + 0.05;
        let mut l = zeros(d, d);
        // small random Hermitian combination centered on F_k
        for (m, f) in fs.iter().enumerate() {
            let w = if m == k { 1.0 } else { 0.15 * (rng.gen::<f64>() - 0.5) };
            l = l + f.mapv(|z| z * c(w));
        }
        let norm = fro_norm(&l);
        rates_jumps.push((rate, l.mapv(|z| z / c(norm))));
    }
    GKLSGenerator::from_rates_jumps(zeros(d, d), &rates_jumps)
}

/// Qubit Pauli generator L(rho) = 1/2 sum_k gamma_k (sigma_k rho sigma_k - rho).
pub fn pauli_generator(gammas: [f64; 3]) -> LinearMap {
    let sig: Vec<CMat> = (1..=3).map(basis::pauli).collect();
    LinearMap::from_action(2, 2, move |rho| {
        let mut out = zeros(2, 2);
        for k in 0..3 {
            out = out + (sig[k].dot(rho).dot(&sig[k]) - rho).mapv(|z| z * c(0.5 * gammas[k]));
        }
        out
    })
}
