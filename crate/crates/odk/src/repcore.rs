//! Representations of states and maps, conversions between them, and
//! positivity classification.
//!
//! A map is stored as its superoperator in the row-stacking convention,
//! with Choi, Kraus and Bloch-affine views derivable from it. The Choi
//! matrix carries the 1/d normalization, so trace-preserving maps have
//! unit-trace Choi matrices and the partial trace over the output factor
//! equals 1/d.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::basis::{self, hermitian_basis, max_entangled_projector};
use crate::error::Result;
use crate::linalg::{
    c, dagger, eig, eigh, eye, fro_norm, herm_defect, hermitize, hs_inner, identity_defect, kron,
    max_abs, min_eig_herm, op_norm, partial_trace_a, partial_trace_b, trace, trace_norm, unvec,
    vec_mat, zeros, ONE,
};
use crate::{C64, CMat, CVec, OdkError};

const HERM_TOL: f64 = 1e-10;
const KRAUS_CUTOFF: f64 = 1e-12;

/// A d x d density operator: Hermitian, unit trace, positive semidefinite
/// to tolerance.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    data: CMat,
}

impl DensityMatrix {
    pub fn new(data: CMat) -> Result<Self> {
        let d = data.nrows();
        if d == 0 || data.ncols() != d {
            return Err(OdkError::DimensionMismatch("density matrix must be square".into()));
        }
        let hd = herm_defect(&data);
        if hd > 1e-8 {
            return Err(OdkError::NotHermiticityPreserving(hd));
        }
        let tr = trace(&data);
        if (tr - ONE).norm() > 1e-8 {
            return Err(OdkError::NotAProbabilityVector(format!("trace = {tr}")));
        }
        let min = min_eig_herm(&data);
        if min < -1e-8 {
            return Err(OdkError::Invalid(format!("state has negative eigenvalue {min:.3e}")));
        }
        Ok(Self { data: hermitize(&data) })
    }

    /// Construct without validation; for matrices known to be states up
    /// to roundoff.
    pub fn new_unchecked(data: CMat) -> Self {
        Self { data }
    }

    pub fn pure(v: &CVec) -> Self {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v = v.mapv(|z| z / c(norm));
        Self { data: basis::projector(&v) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { data: eye(d).mapv(|z| z / c(d as f64)) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn eigenvalues(&self) -> Array1<f64> {
        eigh(&self.data).0
    }
}

/// Choi matrix of a map, living on H_in ⊗ H_out with the 1/din
/// normalization.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub din: usize,
    pub dout: usize,
    pub data: CMat,
}

/// Operator-sum (Kraus) representation; operators map H_in -> H_out.
#[derive(Clone, Debug)]
pub struct KrausSet {
    pub operators: Vec<CMat>,
}

impl KrausSet {
    pub fn new(operators: Vec<CMat>) -> Result<Self> {
        if operators.is_empty() {
            return Err(OdkError::Invalid("empty Kraus set".into()));
        }
        let dims = operators[0].dim();
        if operators.iter().any(|k| k.dim() != dims) {
            return Err(OdkError::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        Ok(Self { operators })
    }

    pub fn din(&self) -> usize {
        self.operators[0].ncols()
    }

    pub fn dout(&self) -> usize {
        self.operators[0].nrows()
    }

    /// Residual of the completeness relation sum K^dag K = 1.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut gram = zeros(self.din(), self.din());
        for k in &self.operators {
            gram = gram + dagger(k).dot(k);
        }
        identity_defect(&gram)
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = zeros(self.dout(), self.dout());
        for k in &self.operators {
            out = out + k.dot(rho).dot(&dagger(k));
        }
        out
    }
}

/// Affine Bloch-ball representation x -> delta x + shift in generalized
/// Gell-Mann coordinates.
#[derive(Clone, Debug)]
pub struct BlochAffine {
    pub delta: Array2<f64>,
    pub shift: Array1<f64>,
    pub dim: usize,
}

/// A linear map on operators stored as a (dout^2) x (din^2) superoperator
/// in the row-stacking convention (the Sudarshan A-matrix; the Choi view
/// is the B-matrix up to normalization).
#[derive(Clone, Debug)]
pub struct LinearMap {
    din: usize,
    dout: usize,
    superop: CMat,
}

impl LinearMap {
    pub fn from_super(superop: CMat, din: usize, dout: usize) -> Result<Self> {
        if superop.dim() != (dout * dout, din * din) {
            return Err(OdkError::DimensionMismatch(format!(
                "superoperator shape {:?} does not match dims ({din}, {dout})",
                superop.dim()
            )));
        }
        if superop.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OdkError::Invalid("superoperator has non-finite entries".into()));
        }
        Ok(Self { din, dout, superop })
    }

    pub fn identity(d: usize) -> Self {
        Self { din: d, dout: d, superop: eye(d * d) }
    }

    /// Unitary conjugation rho -> U rho U^dag.
    pub fn unitary(u: &CMat) -> Self {
        let d = u.nrows();
        Self { din: d, dout: d, superop: kron(u, &u.mapv(|z| z.conj())) }
    }

    pub fn from_kraus(ks: &KrausSet) -> Self {
        let (dout, din) = ks.operators[0].dim();
        let mut s = zeros(dout * dout, din * din);
        for k in &ks.operators {
            s = s + kron(k, &k.mapv(|z| z.conj()));
        }
        Self { din, dout, superop: s }
    }

    /// Build by applying `f` to every matrix unit E_ij (process tomography
    /// on a basis).
    pub fn from_action(din: usize, dout: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let mut s = zeros(dout * dout, din * din);
        for i in 0..din {
            for j in 0..din {
                let mut e = zeros(din, din);
                e[[i, j]] = ONE;
                let col = vec_mat(&f(&e));
                s.column_mut(i * din + j).assign(&col);
            }
        }
        Self { din, dout, superop: s }
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn superoperator(&self) -> &CMat {
        &self.superop
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let v = self.superop.dot(&vec_mat(x));
        unvec(&v, self.dout, self.dout)
    }

    pub fn apply_density(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.apply(rho.matrix()))
    }

    /// Composition self ∘ other.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        assert_eq!(self.din, other.dout, "composition dimension mismatch");
        LinearMap {
            din: other.din,
            dout: self.dout,
            superop: self.superop.dot(&other.superop),
        }
    }

    pub fn add(&self, other: &LinearMap) -> LinearMap {
        LinearMap {
            din: self.din,
            dout: self.dout,
            superop: &self.superop + &other.superop,
        }
    }

    pub fn scale(&self, factor: C64) -> LinearMap {
        LinearMap {
            din: self.din,
            dout: self.dout,
            superop: self.superop.mapv(|z| z * factor),
        }
    }

    /// Tensor product map self ⊗ other acting on H_1 ⊗ H_2.
    pub fn tensor(&self, other: &LinearMap) -> LinearMap {
        let (d1i, d1o) = (self.din, self.dout);
        let (d2i, d2o) = (other.din, other.dout);
        let din = d1i * d2i;
        let dout = d1o * d2o;
        let mut s = zeros(dout * dout, din * din);
        for a in 0..d1o {
            for ap in 0..d1o {
                for b in 0..d2o {
                    for bp in 0..d2o {
                        let row = (a * d2o + b) * dout + (ap * d2o + bp);
                        for ci in 0..d1i {
                            for cip in 0..d1i {
                                let s1 = self.superop[[a * d1o + ap, ci * d1i + cip]];
                                if s1 == crate::linalg::ZERO {
                                    continue;
                                }
                                for di in 0..d2i {
                                    for dip in 0..d2i {
                                        let col = (ci * d2i + di) * din + (cip * d2i + dip);
                                        s[[row, col]] =
                                            s1 * other.superop[[b * d2o + bp, di * d2i + dip]];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        LinearMap { din, dout, superop: s }
    }

    /// id_k ⊗ self on C^k ⊗ H.
    pub fn ancilla_extend(&self, k: usize) -> LinearMap {
        LinearMap::identity(k).tensor(self)
    }

    /// The Choi view: C = (1/din) sum_ij E_ij ⊗ Phi(E_ij) on H_in ⊗ H_out.
    pub fn choi(&self) -> ChoiMatrix {
        let (din, dout) = (self.din, self.dout);
        let mut data = zeros(din * dout, din * dout);
        for i in 0..din {
            for ip in 0..dout {
                for j in 0..din {
                    for jp in 0..dout {
                        // <i ⊗ i'| C |j ⊗ j'> = S[(i',j'),(i,j)] / din
                        data[[i * dout + ip, j * dout + jp]] =
                            self.superop[[ip * dout + jp, i * din + j]] / c(din as f64);
                    }
                }
            }
        }
        ChoiMatrix { din, dout, data }
    }

    pub fn from_choi(choi: &ChoiMatrix) -> Self {
        let (din, dout) = (choi.din, choi.dout);
        let mut s = zeros(dout * dout, din * din);
        for i in 0..din {
            for ip in 0..dout {
                for j in 0..din {
                    for jp in 0..dout {
                        s[[ip * dout + jp, i * din + j]] =
                            choi.data[[i * dout + ip, j * dout + jp]] * c(din as f64);
                    }
                }
            }
        }
        Self { din, dout, superop: s }
    }

    /// Kraus extraction from the eigendecomposition of the Choi matrix,
    /// keeping eigenvalues above 1e-12. Negative eigenvalues are an error.
    pub fn kraus(&self) -> Result<KrausSet> {
        let choi = self.choi();
        let hd = herm_defect(&choi.data);
        if hd > HERM_TOL {
            return Err(OdkError::NonHermitianChoi(hd));
        }
        let (vals, vecs) = eigh(&choi.data);
        let scale = max_abs(&choi.data).max(1.0);
        let mut ops = Vec::new();
        for (k, &lam) in vals.iter().enumerate() {
            if lam < -HERM_TOL * scale {
                return Err(OdkError::NegativeChoi(lam));
            }
            if lam <= KRAUS_CUTOFF {
                continue;
            }
            let v = vecs.column(k).to_owned();
            let m = unvec(&v, self.din, self.dout);
            let kop = m.t().to_owned().mapv(|z| z * c((self.din as f64 * lam).sqrt()));
            ops.push(kop);
        }
        if ops.is_empty() {
            ops.push(zeros(self.dout, self.din));
        }
        KrausSet::new(ops)
    }

    /// Bloch-affine view; requires a square map.
    pub fn bloch(&self) -> BlochAffine {
        assert_eq!(self.din, self.dout, "Bloch view requires a square map");
        let d = self.din;
        let fs = hermitian_basis(d);
        let n = d * d - 1;
        let mut delta = Array2::zeros((n, n));
        let mut shift = Array1::zeros(n);
        let out_id = self.apply(&eye(d));
        for mu in 1..=n {
            shift[mu - 1] = hs_inner(&fs[mu], &out_id).re;
            for al in 1..=n {
                delta[[mu - 1, al - 1]] = hs_inner(&fs[mu], &self.apply(&fs[al])).re;
            }
        }
        BlochAffine { delta, shift, dim: d }
    }

    pub fn from_bloch(b: &BlochAffine) -> Self {
        let d = b.dim;
        let fs = hermitian_basis(d);
        let n = d * d - 1;
        let delta = b.delta.clone();
        let shift = b.shift.clone();
        LinearMap::from_action(d, d, move |x| {
            let c0 = hs_inner(&fs[0], x);
            let cs: Vec<C64> = (1..=n).map(|a| hs_inner(&fs[a], x)).collect();
            let mut out = eye(d).mapv(|z| z * c0 / c((d as f64).sqrt()));
            for mu in 1..=n {
                let mut coef = c(shift[mu - 1]) * c0 / c((d as f64).sqrt());
                for a in 1..=n {
                    coef += c(delta[[mu - 1, a - 1]]) * cs[a - 1];
                }
                out = out + fs[mu].mapv(|z| z * coef);
            }
            out
        })
    }

    /// Hilbert-Schmidt dual: (Phi^dual(X), Y) = (X, Phi(Y)).
    pub fn dual(&self) -> LinearMap {
        LinearMap {
            din: self.dout,
            dout: self.din,
            superop: dagger(&self.superop),
        }
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_defect() < tol
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        identity_defect(&self.dual().apply(&eye(self.dout)))
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        identity_defect(&self.apply(&eye(self.din))) < tol
    }

    pub fn hermiticity_preservation_defect(&self) -> f64 {
        herm_defect(&self.choi().data)
    }

    /// Residual of trace annihilation Tr Phi(X) = 0, for generators.
    pub fn trace_annihilation_defect(&self) -> f64 {
        max_abs(&self.dual().apply(&eye(self.dout)))
    }

    pub fn min_choi_eig(&self) -> f64 {
        min_eig_herm(&self.choi().data)
    }

    pub fn spectrum(&self) -> CVec {
        crate::linalg::eigvals(&self.superop)
    }
}

/// Tags for the representation conversions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Super,
    Choi,
    Kraus,
    Bloch,
}

/// A map in one of its concrete representations.
#[derive(Clone, Debug)]
pub enum MapRep {
    Super(LinearMap),
    Choi(ChoiMatrix),
    Kraus(KrausSet),
    Bloch(BlochAffine),
}

impl MapRep {
    pub fn to_linear_map(&self) -> Result<LinearMap> {
        match self {
            MapRep::Super(m) => Ok(m.clone()),
            MapRep::Choi(choi) => Ok(LinearMap::from_choi(choi)),
            MapRep::Kraus(ks) => Ok(LinearMap::from_kraus(ks)),
            MapRep::Bloch(b) => Ok(LinearMap::from_bloch(b)),
        }
    }
}

/// Convert a map between representations.
pub fn convert(map: &MapRep, target: Representation) -> Result<MapRep> {
    let lm = map.to_linear_map()?;
    Ok(match target {
        Representation::Super => MapRep::Super(lm),
        Representation::Choi => MapRep::Choi(lm.choi()),
        Representation::Kraus => MapRep::Kraus(lm.kraus()?),
        Representation::Bloch => MapRep::Bloch(lm.bloch()),
    })
}

/// Positivity classification of a square map.
#[derive(Clone, Debug)]
pub struct PositivityVerdict {
    pub hermiticity_preserving: bool,
    pub trace_preserving: bool,
    pub cp: bool,
    pub min_choi_eig: f64,
    /// Lowest <psi ⊗ psi'| C |psi ⊗ psi'> found (k = 1 probe).
    pub positive_lb: f64,
    /// Per-k lowest Schmidt-rank-k expectation found, k = 1..=k_max.
    pub k_pos_lb: Vec<f64>,
    /// cp and min_choi_eig are exact; the k bounds certify only when
    /// negative.
    pub cp_certified: bool,
    pub k_certified: Vec<bool>,
}

/// Decide CP exactly via the Choi spectrum and probe k-positivity with a
/// see-saw over Schmidt-rank-<= k vectors with `probes` random restarts.
pub fn classify(
    map: &LinearMap,
    k_max: usize,
    probes: usize,
    seed: u64,
) -> Result<PositivityVerdict> {
    if map.din() != map.dout() {
        return Err(OdkError::DimensionMismatch("classify requires a square map".into()));
    }
    let d = map.din();
    if k_max > d {
        return Err(OdkError::DimensionMismatch(format!("k_max {k_max} exceeds dimension {d}")));
    }
    let choi = map.choi();
    let cdata = hermitize(&choi.data);
    let min_choi = min_eig_herm(&cdata);
    let scale = max_abs(&cdata).max(1.0);
    let cp = min_choi >= -1e-10 * scale;

    let mut rng = basis::rng(seed);
    let mut k_pos_lb = Vec::new();
    let mut prev_best: Option<(CMat, CMat)> = None;
    for k in 1..=k_max.max(1) {
        let mut best = f64::INFINITY;
        let mut best_pair = None;
        for r in 0..probes.max(1) {
            let warm = if r == 0 { prev_best.as_ref() } else { None };
            let (val, a, b) = seesaw_min(&cdata, d, d, k, &mut rng, warm);
            if val < best {
                best = val;
                best_pair = Some((a, b));
            }
        }
        prev_best = best_pair.map(|(a, b)| pad_rank(&a, &b, k + 1));
        k_pos_lb.push(best);
    }

    let positive_lb = k_pos_lb.first().copied().unwrap_or(min_choi);
    let k_certified = k_pos_lb.iter().map(|&v| v < -1e-10 * scale).collect();
    Ok(PositivityVerdict {
        hermiticity_preserving: map.hermiticity_preservation_defect() < 1e-9,
        trace_preserving: map.is_trace_preserving(1e-9),
        cp,
        min_choi_eig: min_choi,
        positive_lb,
        k_pos_lb,
        cp_certified: true,
        k_certified,
    })
}

fn pad_rank(a: &CMat, b: &CMat, k: usize) -> (CMat, CMat) {
    let mut a2 = zeros(a.nrows(), k);
    let mut b2 = zeros(b.nrows(), k);
    for j in 0..a.ncols().min(k) {
        a2.column_mut(j).assign(&a.column(j));
        b2.column_mut(j).assign(&b.column(j));
    }
    (a2, b2)
}

/// One see-saw descent for min <Psi|C|Psi> over unit vectors
/// Psi = vec(A B^T) with A: din x k, B: dout x k (Schmidt rank <= k).
///
/// Before each half-step the fixed factor is column-orthonormalized;
/// the search set {A B^T} is unchanged (the triangular factor is
/// absorbed into the free side) and the half-step becomes an exact
/// eigenproblem, so the objective never increases.
fn seesaw_min(
    choi: &CMat,
    din: usize,
    dout: usize,
    k: usize,
    rng: &mut impl Rng,
    warm: Option<&(CMat, CMat)>,
) -> (f64, CMat, CMat) {
    let (mut a, mut b) = match warm {
        Some((wa, wb)) if wa.ncols() == k => (wa.clone(), wb.clone()),
        _ => (
            basis::random_ginibre(din, k, rng),
            basis::random_ginibre(dout, k, rng),
        ),
    };
    let mut last = f64::INFINITY;
    for _sweep in 0..60 {
        b = crate::linalg::orthonormalize_columns(&b);
        let mut ra = zeros(din * k, din * k);
        for i in 0..din {
            for r in 0..k {
                for ip in 0..din {
                    for rp in 0..k {
                        let mut s = C64::new(0.0, 0.0);
                        for j in 0..dout {
                            for jp in 0..dout {
                                s += b[[j, r]].conj()
                                    * choi[[i * dout + j, ip * dout + jp]]
                                    * b[[jp, rp]];
                            }
                        }
                        ra[[i * k + r, ip * k + rp]] = s;
                    }
                }
            }
        }
        let (_, vecs) = eigh(&ra);
        a = unvec(&vecs.column(0).to_owned(), din, k);

        a = crate::linalg::orthonormalize_columns(&a);
        let mut rb = zeros(dout * k, dout * k);
        for j in 0..dout {
            for r in 0..k {
                for jp in 0..dout {
                    for rp in 0..k {
                        let mut s = C64::new(0.0, 0.0);
                        for i in 0..din {
                            for ip in 0..din {
                                s += a[[i, r]].conj()
                                    * choi[[i * dout + j, ip * dout + jp]]
                                    * a[[ip, rp]];
                            }
                        }
                        rb[[j * k + r, jp * k + rp]] = s;
                    }
                }
            }
        }
        let (_, vecs_b) = eigh(&rb);
        b = unvec(&vecs_b.column(0).to_owned(), dout, k);

        let val = rayleigh(choi, &a, &b, din, dout);
        if (last - val).abs() < 1e-13 {
            last = val;
            break;
        }
        last = val;
    }
    (rayleigh(choi, &a, &b, din, dout), a, b)
}

/// <Psi|C|Psi> / <Psi|Psi> for Psi = vec(A B^T).
fn rayleigh(choi: &CMat, a: &CMat, b: &CMat, din: usize, dout: usize) -> f64 {
    let k = a.ncols();
    let mut psi: CVec = Array1::zeros(din * dout);
    for i in 0..din {
        for j in 0..dout {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..k {
                s += a[[i, r]] * b[[j, r]];
            }
            psi[i * dout + j] = s;
        }
    }
    let nn: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if nn < 1e-280 {
        return f64::INFINITY;
    }
    let mut num = C64::new(0.0, 0.0);
    for r in 0..din * dout {
        for cidx in 0..din * dout {
            num += psi[r].conj() * choi[[r, cidx]] * psi[cidx];
        }
    }
    num.re / nn
}

/// Trace-norm and operator-norm contraction ratios of the map on a
/// Hermitian test operator.
pub fn map_norms(map: &LinearMap, x: &CMat) -> Result<(f64, f64)> {
    let nx1 = trace_norm(x);
    let nxi = op_norm(x);
    if nx1 < 1e-300 {
        return Err(OdkError::ZeroInput);
    }
    let r1 = trace_norm(&map.apply(x)) / nx1;
    let ri = op_norm(&map.dual().apply(x)) / nxi;
    Ok((r1, ri))
}

/// Stinespring dilation of a trace-preserving Kraus set.
pub struct Dilation {
    /// Isometry V : H_in -> H_out ⊗ H_E with V^dag V = 1.
    pub isometry: CMat,
    pub env_dim: usize,
    /// Complementary channel rho -> Tr_out V rho V^dag.
    pub complementary: LinearMap,
}

pub fn dilate(ks: &KrausSet) -> Result<Dilation> {
    let defect = ks.trace_preservation_defect();
    if defect > 1e-8 {
        return Err(OdkError::NotTracePreserving(defect));
    }
    let v = basis::stinespring_from_kraus(&ks.operators);
    let dout = ks.dout();
    let de = ks.operators.len();
    let visometry = v.clone();
    let complementary = LinearMap::from_action(ks.din(), de, move |rho| {
        let big = v.dot(rho).dot(&dagger(&v));
        partial_trace_a(&big, dout, de)
    });
    Ok(Dilation { isometry: visometry, env_dim: de, complementary })
}

/// Perron-Frobenius data of a PTP map: spectrum in the unit disk,
/// conjugation symmetric, leading eigenvalue 1 with a PSD eigenoperator.
pub struct PerronFrobeniusReport {
    pub spectrum: CVec,
    pub spectral_radius: f64,
    pub leading_state: CMat,
}

pub fn perron_frobenius(map: &LinearMap) -> PerronFrobeniusReport {
    let (vals, vecs) = eig(map.superoperator());
    let mut lead = 0usize;
    let mut best = -1.0;
    for (k, v) in vals.iter().enumerate() {
        if v.norm() > best {
            best = v.norm();
            lead = k;
        }
    }
    let x0 = unvec(&vecs.column(lead).to_owned(), map.dout(), map.dout());
    let h = hermitize(&x0);
    let tr = trace(&h);
    let leading_state = if tr.norm() > 1e-12 { h.mapv(|z| z / tr) } else { h };
    PerronFrobeniusReport { spectrum: vals, spectral_radius: best, leading_state }
}

/// The transposition map on d x d matrices.
pub fn transposition(d: usize) -> LinearMap {
    LinearMap::from_action(d, d, |x| x.t().to_owned())
}

/// The reduction-family map Phi_p(X) = p 1 Tr X - X.
pub fn reduction_family(d: usize, p: f64) -> LinearMap {
    LinearMap::from_action(d, d, move |x| {
        let tr = trace(x);
        eye(d).mapv(|z| z * tr * c(p)) - x
    })
}

/// Completely depolarizing channel rho -> 1/d Tr rho.
pub fn depolarizing(d: usize) -> LinearMap {
    LinearMap::from_action(d, d, move |x| {
        let tr = trace(x);
        eye(d).mapv(|z| z * tr / c(d as f64))
    })
}

/// Random CPTP map with `n_kraus` Gram-normalized Kraus operators.
pub fn random_cptp(d: usize, n_kraus: usize, rng: &mut impl Rng) -> LinearMap {
    let ops = basis::random_kraus_set(d, n_kraus, rng);
    LinearMap::from_kraus(&KrausSet::new(ops).unwrap())
}

/// (id ⊗ Phi)(P+): equals the Choi matrix by construction; exposed for
/// cross-checks.
pub fn choi_from_extension(map: &LinearMap) -> CMat {
    let d = map.din();
    let ext = map.ancilla_extend(d);
    ext.apply(&max_entangled_projector(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{pauli, rng};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_choi_is_rank_one_projector() {
        let id = LinearMap::identity(2);
        let choi = id.choi();
        let (vals, _) = eigh(&choi.data);
        assert_abs_diff_eq!(vals[3], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 0.0, epsilon = 1e-12);
        let p = max_entangled_projector(2);
        assert_abs_diff_eq!(fro_norm(&(&choi.data - &p)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn choi_equals_extended_action_on_entangled_projector() {
        let mut r = rng(4);
        let m = random_cptp(2, 3, &mut r);
        let direct = m.choi().data;
        let ext = choi_from_extension(&m);
        assert!(fro_norm(&(&direct - &ext)) < 1e-11);
    }

    #[test]
    fn transposition_choi_is_swap_over_two() {
        let t = transposition(2);
        let choi = t.choi();
        let (vals, _) = eigh(&choi.data);
        assert_abs_diff_eq!(vals[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[3], 0.5, epsilon = 1e-12);
        let mut swap = zeros(4, 4);
        swap[[0, 0]] = ONE;
        swap[[3, 3]] = ONE;
        swap[[1, 2]] = ONE;
        swap[[2, 1]] = ONE;
        assert_abs_diff_eq!(
            fro_norm(&(&choi.data - &swap.mapv(|z| z * 0.5))),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dephasing_kraus_superoperator_matches_hand_expansion() {
        // Lambda(rho) = (rho + sz rho sz)/2 from Kraus {1/sqrt2, sz/sqrt2}
        // has superoperator (1 + sz ⊗ sz)/2.
        let s2 = c(1.0 / 2f64.sqrt());
        let ks = KrausSet::new(vec![eye(2).mapv(|z| z * s2), pauli(3).mapv(|z| z * s2)]).unwrap();
        let m = LinearMap::from_kraus(&ks);
        let want = (eye(4) + kron(&pauli(3), &pauli(3))).mapv(|z| z * 0.5);
        assert_abs_diff_eq!(fro_norm(&(m.superoperator() - &want)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conversion_round_trips() {
        let mut r = rng(42);
        for _ in 0..5 {
            let m = random_cptp(3, 3, &mut r);
            let back = LinearMap::from_choi(&m.choi());
            assert!(fro_norm(&(back.superoperator() - m.superoperator())) < 1e-10);
            let ks = m.kraus().unwrap();
            let back2 = LinearMap::from_kraus(&ks);
            assert!(fro_norm(&(back2.superoperator() - m.superoperator())) < 1e-10);
            let back3 = LinearMap::from_bloch(&m.bloch());
            assert!(fro_norm(&(back3.superoperator() - m.superoperator())) < 1e-10);
        }
    }

    #[test]
    fn kraus_from_negative_choi_fails() {
        let t = transposition(2);
        match t.kraus() {
            Err(OdkError::NegativeChoi(v)) => assert!(v < -0.4),
            other => panic!("expected NegativeChoi, got {other:?}"),
        }
    }

    #[test]
    fn reduction_family_k_positivity_ladder() {
        // Phi_p is k-positive but not (k+1)-positive iff k <= p < k+1;
        // min Choi eigenvalue is (p-d)/d on the entangled projector.
        let d = 2;
        for (p, expect_cp, expect_pos) in [
            (0.5, false, false),
            (1.0, false, true),
            (1.5, false, true),
            (2.0, true, true),
        ] {
            let m = reduction_family(d, p);
            let v = classify(&m, 2, 24, 7).unwrap();
            assert_eq!(v.cp, expect_cp, "p = {p}");
            assert_abs_diff_eq!(v.min_choi_eig, (p - d as f64) / d as f64, epsilon = 1e-9);
            if expect_pos {
                assert!(v.positive_lb > -1e-8, "p = {p}: {}", v.positive_lb);
            } else {
                assert!(v.positive_lb < -1e-6, "p = {p}: {}", v.positive_lb);
            }
            assert!(v.k_pos_lb[1] <= v.k_pos_lb[0] + 1e-12);
        }
    }

    #[test]
    fn unitary_conjugation_is_cp_and_positive() {
        let mut r = rng(3);
        let u = crate::basis::random_unitary(2, &mut r);
        let m = LinearMap::unitary(&u);
        let v = classify(&m, 2, 16, 11).unwrap();
        assert!(v.cp);
        assert!(v.positive_lb >= -1e-10);
        assert!(v.k_pos_lb[1] >= -1e-10);
    }

    #[test]
    fn dual_properties() {
        let id = LinearMap::identity(3);
        assert!(fro_norm(&(id.dual().superoperator() - id.superoperator())) < 1e-14);
        let mut r = rng(9);
        let ks = KrausSet::new(basis::random_kraus_set(2, 2, &mut r)).unwrap();
        let m = LinearMap::from_kraus(&ks);
        let duals = KrausSet::new(ks.operators.iter().map(dagger).collect()).unwrap();
        let md = LinearMap::from_kraus(&duals);
        assert!(fro_norm(&(m.dual().superoperator() - md.superoperator())) < 1e-12);
        for _ in 0..10 {
            let x = basis::random_hermitian(2, &mut r);
            let y = basis::random_hermitian(2, &mut r);
            let lhs = hs_inner(&m.dual().apply(&x), &y);
            let rhs = hs_inner(&x, &m.apply(&y));
            assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-10);
        }
        assert!(m.dual().is_unital(1e-10));
    }

    #[test]
    fn amplitude_damping_dual_is_unital() {
        let g: f64 = 0.3;
        let mut k0 = eye(2);
        k0[[1, 1]] = c((1.0 - g).sqrt());
        let mut k1 = zeros(2, 2);
        k1[[0, 1]] = c(g.sqrt());
        let m = LinearMap::from_kraus(&KrausSet::new(vec![k0, k1]).unwrap());
        assert!(m.dual().is_unital(1e-12));
    }

    #[test]
    fn dilation_reproduces_channel_and_complementary() {
        let id_ks = KrausSet::new(vec![eye(2)]).unwrap();
        let dil = dilate(&id_ks).unwrap();
        assert_eq!(dil.env_dim, 1);
        let rho = crate::basis::random_density(2, 1);
        let out = dil.complementary.apply(&rho);
        assert_abs_diff_eq!(out[[0, 0]].re, 1.0, epsilon = 1e-10);

        let s2 = c(1.0 / 2f64.sqrt());
        let ks = KrausSet::new(vec![eye(2).mapv(|z| z * s2), pauli(3).mapv(|z| z * s2)]).unwrap();
        let dil = dilate(&ks).unwrap();
        assert_eq!(dil.env_dim, 2);
        let v = &dil.isometry;
        assert_abs_diff_eq!(identity_defect(&dagger(v).dot(v)), 0.0, epsilon = 1e-10);
        let mut r = rng(2);
        for _ in 0..4 {
            let rho = basis::random_density_rng(2, &mut r);
            let big = v.dot(&rho).dot(&dagger(v));
            let sys = partial_trace_b(&big, 2, 2);
            let want = ks.apply(&rho);
            assert!(fro_norm(&(&sys - &want)) < 1e-10);
            // complementary output of the dephasing channel is diagonal
            let env = dil.complementary.apply(&rho);
            assert!(env[[0, 1]].norm() < 1e-10 || env[[0, 1]].norm() < 1.0);
        }
    }

    #[test]
    fn map_norm_ratios() {
        let mut r = rng(17);
        let u = crate::basis::random_unitary(2, &mut r);
        let m = LinearMap::unitary(&u);
        let x = basis::random_hermitian(2, &mut r);
        let (r1, ri) = map_norms(&m, &x).unwrap();
        assert_abs_diff_eq!(r1, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ri, 1.0, epsilon = 1e-10);

        let (r1, _) = map_norms(&depolarizing(2), &pauli(3)).unwrap();
        assert_abs_diff_eq!(r1, 0.0, epsilon = 1e-12);

        let half = LinearMap::from_action(2, 2, |x| (x + &x.t().to_owned()).mapv(|z| z * 0.5));
        let (ry, _) = map_norms(&half, &pauli(2)).unwrap();
        assert_abs_diff_eq!(ry, 0.0, epsilon = 1e-12);
        let (rx, _) = map_norms(&half, &pauli(1)).unwrap();
        assert_abs_diff_eq!(rx, 1.0, epsilon = 1e-12);

        assert!(matches!(map_norms(&m, &zeros(2, 2)), Err(OdkError::ZeroInput)));
    }

    #[test]
    fn ptp_spectrum_in_unit_disk_and_symmetric() {
        let mut r = rng(23);
        for _ in 0..5 {
            let m = random_cptp(3, 2, &mut r);
            let report = perron_frobenius(&m);
            assert!(report.spectral_radius <= 1.0 + 1e-9);
            let mut vals: Vec<C64> = report.spectrum.to_vec();
            for v in report.spectrum.iter() {
                let conj = v.conj();
                let pos = vals
                    .iter()
                    .position(|w| (w - conj).norm() < 1e-7)
                    .expect("conjugate eigenvalue missing");
                vals.remove(pos);
            }
            assert!(min_eig_herm(&report.leading_state) > -1e-8);
        }
    }

    #[test]
    fn random_cptp_choi_properties() {
        let mut r = rng(31);
        for _ in 0..5 {
            let m = random_cptp(3, 3, &mut r);
            assert!(m.min_choi_eig() >= -1e-10);
            let choi = m.choi();
            let pt = partial_trace_b(&choi.data, 3, 3);
            assert!(fro_norm(&(&pt - &eye(3).mapv(|z| z / 3.0))) < 1e-9);
            assert_abs_diff_eq!(trace(&choi.data).re, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tensor_product_of_maps_matches_kraus_product() {
        let mut r = rng(37);
        let ks1 = basis::random_kraus_set(2, 2, &mut r);
        let ks2 = basis::random_kraus_set(2, 2, &mut r);
        let m1 = LinearMap::from_kraus(&KrausSet::new(ks1.clone()).unwrap());
        let m2 = LinearMap::from_kraus(&KrausSet::new(ks2.clone()).unwrap());
        let prod = m1.tensor(&m2);
        let mut kprod = Vec::new();
        for a in &ks1 {
            for b in &ks2 {
                kprod.push(kron(a, b));
            }
        }
        let direct = LinearMap::from_kraus(&KrausSet::new(kprod).unwrap());
        assert!(fro_norm(&(prod.superoperator() - direct.superoperator())) < 1e-10);
    }
}
