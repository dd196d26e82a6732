//! Classical stochastic-matrix semigroups and semi-Markov processes.
//!
//! This module doubles as the oracle layer for the quantum solvers: the
//! populations of covariant quantum models must reproduce these classical
//! trajectories exactly.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::linalg::{c, complexify, expm, re_mat};
use crate::repcore::LinearMap;
use crate::{CMat, OdkError};

const PROB_CLAMP: f64 = 1e-15;

/// Kolmogorov generator given by per-reservoir transition-rate matrices
/// W^(nu) (off-diagonal entries W_ij >= 0 = rate j -> i), with optional
/// level energies for heat currents.
#[derive(Clone, Debug)]
pub struct KolmogorovGenerator {
    pub dim: usize,
    pub reservoirs: Vec<Array2<f64>>,
    pub energies: Option<Vec<f64>>,
}

impl KolmogorovGenerator {
    pub fn new(rates: Array2<f64>) -> Result<Self> {
        Self::multi(vec![rates], None)
    }

    pub fn multi(reservoirs: Vec<Array2<f64>>, energies: Option<Vec<f64>>) -> Result<Self> {
        let d = reservoirs
            .first()
            .ok_or_else(|| OdkError::Invalid("no reservoirs".into()))?
            .nrows();
        for w in &reservoirs {
            if w.dim() != (d, d) {
                return Err(OdkError::DimensionMismatch("rate matrices differ in shape".into()));
            }
            for i in 0..d {
                for j in 0..d {
                    if i != j && w[[i, j]] < 0.0 {
                        return Err(OdkError::NegativeRate(i, j, w[[i, j]]));
                    }
                }
            }
        }
        if let Some(e) = &energies {
            if e.len() != d {
                return Err(OdkError::DimensionMismatch("energies length mismatch".into()));
            }
        }
        Ok(Self { dim: d, reservoirs, energies })
    }

    /// Total transition rates W = sum_nu W^(nu) with zeroed diagonal.
    pub fn rates(&self) -> Array2<f64> {
        let d = self.dim;
        let mut w = Array2::zeros((d, d));
        for r in &self.reservoirs {
            w = w + r;
        }
        for i in 0..d {
            w[[i, i]] = 0.0;
        }
        w
    }

    /// Generator matrix L_ij = W_ij - delta_ij sum_k W_kj (columns sum to 0).
    pub fn matrix(&self) -> Array2<f64> {
        let d = self.dim;
        let w = self.rates();
        let mut l = w.clone();
        for j in 0..d {
            let col_sum: f64 = (0..d).filter(|&i| i != j).map(|i| w[[i, j]]).sum();
            l[[j, j]] = -col_sum;
        }
        l
    }
}

/// Per-state waiting-time distribution.
#[derive(Clone, Debug)]
pub enum WaitingTime {
    Exponential { rate: f64 },
    Erlang2 { rate: f64 },
    /// Density sampled on a uniform grid of the given step, linearly
    /// interpolated in between; mass beyond the last sample is dropped.
    Grid { step: f64, density: Vec<f64> },
}

impl WaitingTime {
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            WaitingTime::Exponential { rate } => rate * (-rate * t).exp(),
            WaitingTime::Erlang2 { rate } => rate * rate * t * (-rate * t).exp(),
            WaitingTime::Grid { step, density } => {
                let x = t / step;
                let i = x.floor() as usize;
                if i + 1 >= density.len() {
                    return 0.0;
                }
                let w = x - i as f64;
                density[i] * (1.0 - w) + density[i + 1] * w
            }
        }
    }

    /// Survival probability g(t) = 1 - integral of the density.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            WaitingTime::Exponential { rate } => (-rate * t).exp(),
            WaitingTime::Erlang2 { rate } => (1.0 + rate * t) * (-rate * t).exp(),
            WaitingTime::Grid { step, density } => {
                // trapezoidal cumulative integral
                let x = (t / step).min((density.len() - 1) as f64);
                let n = x.floor() as usize;
                let mut acc = 0.0;
                for i in 0..n {
                    acc += 0.5 * (density[i] + density[i + 1]) * step;
                }
                let frac = x - n as f64;
                if n + 1 < density.len() && frac > 0.0 {
                    let f_end = density[n] * (1.0 - frac) + density[n + 1] * frac;
                    acc += 0.5 * (density[n] + f_end) * frac * step;
                }
                (1.0 - acc).clamp(0.0, 1.0)
            }
        }
    }

    /// Normalization defect |1 - \int f| estimated on a long grid.
    pub fn normalization_defect(&self, horizon: f64, steps: usize) -> f64 {
        let h = horizon / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            acc += 0.5 * (self.density(i as f64 * h) + self.density((i + 1) as f64 * h)) * h;
        }
        (1.0 - acc).abs()
    }
}

/// Semi-Markov process: column-stochastic jump matrix plus waiting-time
/// distributions (one shared or one per state).
#[derive(Clone, Debug)]
pub struct SemiMarkovSpec {
    pub jump: Array2<f64>,
    pub waiting: Vec<WaitingTime>,
}

impl SemiMarkovSpec {
    pub fn new(jump: Array2<f64>, waiting: Vec<WaitingTime>) -> Result<Self> {
        let d = jump.nrows();
        if jump.ncols() != d {
            return Err(OdkError::DimensionMismatch("jump matrix must be square".into()));
        }
        let mut defect = 0.0f64;
        for j in 0..d {
            let col: f64 = (0..d).map(|i| jump[[i, j]]).sum();
            defect = defect.max((col - 1.0).abs());
            for i in 0..d {
                if jump[[i, j]] < 0.0 {
                    defect = defect.max(-jump[[i, j]]);
                }
            }
        }
        if defect > 1e-9 {
            return Err(OdkError::NonStochasticJumpMatrix(defect));
        }
        if waiting.len() != 1 && waiting.len() != d {
            return Err(OdkError::DimensionMismatch(
                "need one waiting time, or one per state".into(),
            ));
        }
        Ok(Self { jump, waiting })
    }

    fn wait(&self, n: usize) -> &WaitingTime {
        if self.waiting.len() == 1 {
            &self.waiting[0]
        } else {
            &self.waiting[n]
        }
    }
}

/// A classical trajectory of transfer matrices T(t_i).
#[derive(Clone, Debug)]
pub struct ClassicalTrajectory {
    pub grid: TimeGrid,
    pub matrices: Vec<Array2<f64>>,
}

/// Output of [`rate_solve`].
#[derive(Clone, Debug)]
pub struct RateSolution {
    pub grid: TimeGrid,
    pub probabilities: Vec<Array1<f64>>,
    /// Schnakenberg entropy production rate per time sample.
    pub entropy_production: Vec<f64>,
    /// Entropy flux rate per time sample.
    pub entropy_flux: Vec<f64>,
    /// Heat current into each reservoir per time sample (needs energies).
    pub heat_currents: Vec<Vec<f64>>,
    /// Set when probabilities or rate ratios were clamped at 1e-15.
    pub clamped: bool,
}

/// Propagate a Pauli rate equation with exact per-step exponentials and
/// evaluate entropy production, flux and heat currents along the way.
pub fn rate_solve(
    gen: &KolmogorovGenerator,
    p0: &Array1<f64>,
    grid: &TimeGrid,
) -> Result<RateSolution> {
    let d = gen.dim;
    if p0.len() != d {
        return Err(OdkError::DimensionMismatch("p0 length".into()));
    }
    if p0.iter().any(|&x| x < -1e-12) || (p0.sum() - 1.0).abs() > 1e-9 {
        return Err(OdkError::NotAProbabilityVector(format!(
            "sum = {}, min = {}",
            p0.sum(),
            p0.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let l = gen.matrix();
    let step = re_mat(&expm(&complexify(&l).mapv(|z| z * c(grid.step()))));
    let mut clamped = false;
    let mut probabilities = Vec::with_capacity(grid.len());
    let mut p = p0.clone();
    for _ in 0..grid.len() {
        probabilities.push(p.clone());
        p = step.dot(&p);
    }

    let mut entropy_production = Vec::with_capacity(grid.len());
    let mut entropy_flux = Vec::with_capacity(grid.len());
    let mut heat_currents = Vec::with_capacity(grid.len());
    for p in &probabilities {
        // Per-reservoir Schnakenberg sums; the currents of different
        // reservoirs may cancel in the total rates, so resolving them is
        // essential for nonequilibrium steady states.
        let mut sigma = 0.0;
        let mut flux = 0.0;
        for w in &gen.reservoirs {
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    let (wij, wji) = (w[[i, j]], w[[j, i]]);
                    if wij <= 0.0 && wji <= 0.0 {
                        continue;
                    }
                    let pj = p[j].max(PROB_CLAMP);
                    let pi = p[i].max(PROB_CLAMP);
                    if p[j] < PROB_CLAMP || p[i] < PROB_CLAMP {
                        clamped = true;
                    }
                    let wij_c = wij.max(PROB_CLAMP);
                    let wji_c = wji.max(PROB_CLAMP);
                    if wij < PROB_CLAMP || wji < PROB_CLAMP {
                        clamped = true;
                    }
                    let current = wij * pj - wji * pi;
                    sigma += 0.5 * current * ((wij_c * pj) / (wji_c * pi)).ln();
                    // Sign fixed by the balance dS/dt = Sigma + Phi.
                    flux += 0.5 * current * (wji_c / wij_c).ln();
                }
            }
        }
        entropy_production.push(sigma);
        entropy_flux.push(flux);
        let mut js = Vec::new();
        if let Some(e) = &gen.energies {
            for wr in &gen.reservoirs {
                let mut jnu = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        if i != j {
                            jnu += e[i] * (wr[[i, j]] * p[j] - wr[[j, i]] * p[i]);
                        }
                    }
                }
                js.push(jnu);
            }
        }
        heat_currents.push(js);
    }
    Ok(RateSolution {
        grid: grid.clone(),
        probabilities,
        entropy_production,
        entropy_flux,
        heat_currents,
        clamped,
    })
}

/// Shannon entropy of a probability vector with the p log p -> 0 rule.
pub fn shannon_entropy(p: &Array1<f64>) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Classical relative entropy (KL divergence) with clamped support.
pub fn kl_divergence(p: &Array1<f64>, q: &Array1<f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(PROB_CLAMP)).ln())
        .sum()
}

/// Trapezoidal convolution of matrix-valued grid samples:
/// (A * B)(t_n) = int_0^{t_n} A(t_n - tau) B(tau) d tau.
pub fn convolve_matrices(a: &[Array2<f64>], b: &[Array2<f64>], h: f64) -> Vec<Array2<f64>> {
    let n = a.len();
    let (rows, mid) = a[0].dim();
    let cols = b[0].ncols();
    let mut out = Vec::with_capacity(n);
    out.push(Array2::<f64>::zeros((rows, cols)));
    let mut acc = Array2::<f64>::zeros((rows, cols));
    for k in 1..n {
        acc.fill(0.0);
        for j in 0..=k {
            let w = if j == 0 || j == k { 0.5 } else { 1.0 };
            let am = &a[k - j];
            let bm = &b[j];
            for r in 0..rows {
                for cc in 0..cols {
                    let mut s = 0.0;
                    for m in 0..mid {
                        s += am[[r, m]] * bm[[m, cc]];
                    }
                    acc[[r, cc]] += w * s;
                }
            }
        }
        out.push(acc.mapv(|x| x * h));
    }
    out
}

/// Solve the semi-Markov dynamics by the jump series
/// T = n + n*q + n*q*q + ... truncated when the added term's maximal
/// column sum drops below 1e-10.
pub fn semi_markov_solve(spec: &SemiMarkovSpec, grid: &TimeGrid) -> Result<ClassicalTrajectory> {
    let d = spec.jump.nrows();
    let h = grid.step();
    let n_pts = grid.len();

    // n(t) = diag(g_j(t)); q(t)_{mj} = Pi_{mj} f_j(t)
    let mut n_seq = Vec::with_capacity(n_pts);
    let mut q_seq = Vec::with_capacity(n_pts);
    for i in 0..n_pts {
        let t = grid.t(i);
        let mut n_m = Array2::<f64>::zeros((d, d));
        let mut q_m = Array2::<f64>::zeros((d, d));
        for j in 0..d {
            n_m[[j, j]] = spec.wait(j).survival(t);
            let f = spec.wait(j).density(t);
            for m in 0..d {
                q_m[[m, j]] = spec.jump[[m, j]] * f;
            }
        }
        n_seq.push(n_m);
        q_seq.push(q_m);
    }

    let mut total = n_seq.clone();
    let mut term = n_seq.clone();
    let max_terms = 2000;
    let mut converged = false;
    for _ in 0..max_terms {
        term = convolve_matrices(&term, &q_seq, h);
        let mut max_col = 0.0f64;
        for m in &term {
            for jcol in 0..d {
                let s: f64 = (0..d).map(|i| m[[i, jcol]].abs()).sum();
                max_col = max_col.max(s);
            }
        }
        for (tot, t) in total.iter_mut().zip(&term) {
            *tot = &*tot + t;
        }
        if max_col < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        let last: f64 = term
            .iter()
            .map(|m| m.iter().map(|x| x.abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        return Err(OdkError::SeriesNotConverged(max_terms, last));
    }

    // Column stochasticity to 1e-6 at every sample.
    for (i, m) in total.iter().enumerate() {
        for jcol in 0..d {
            let s: f64 = (0..d).map(|r| m[[r, jcol]]).sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(OdkError::Invalid(format!(
                    "semi-Markov solution loses stochasticity at t = {} (column sum {s})",
                    grid.t(i)
                )));
            }
        }
    }
    Ok(ClassicalTrajectory { grid: grid.clone(), matrices: total })
}

/// Extract L_ij = Tr(P_i L(P_j)) of a quantum generator over an orthonormal
/// basis given as the columns of `basis`. The result is a valid Kolmogorov
/// generator whenever the source generates a positive semigroup.
pub fn classical_shadow_generator(gen: &LinearMap, basis: &CMat) -> Result<Array2<f64>> {
    let d = gen.din();
    if gen.trace_annihilation_defect() > 1e-8 {
        return Err(OdkError::InvalidSource("generator does not annihilate the trace".into()));
    }
    if basis.dim() != (d, d) {
        return Err(OdkError::DimensionMismatch("basis must be d x d".into()));
    }
    let mut l = Array2::zeros((d, d));
    for j in 0..d {
        let pj = crate::basis::projector(&basis.column(j).to_owned());
        let img = gen.apply(&pj);
        for i in 0..d {
            let pi = basis.column(i);
            let mut val = c(0.0);
            for r in 0..d {
                for s in 0..d {
                    val += pi[r].conj() * img[[r, s]] * pi[s];
                }
            }
            l[[i, j]] = val.re;
        }
    }
    Ok(l)
}

/// T_ij = <i| Phi(|j><j|) |i> of a trace-preserving map: column stochastic
/// whenever Phi is PTP.
pub fn classical_shadow_map(map: &LinearMap, basis: &CMat) -> Result<Array2<f64>> {
    let d = map.din();
    if !map.is_trace_preserving(1e-7) {
        return Err(OdkError::InvalidSource("map is not trace-preserving".into()));
    }
    let mut t = Array2::zeros((d, d));
    for j in 0..d {
        let pj = crate::basis::projector(&basis.column(j).to_owned());
        let img = map.apply(&pj);
        for i in 0..d {
            let pi = basis.column(i);
            let mut val = c(0.0);
            for r in 0..d {
                for s in 0..d {
                    val += pi[r].conj() * img[[r, s]] * pi[s];
                }
            }
            t[[i, j]] = val.re;
        }
    }
    Ok(t)
}

/// Does a real matrix qualify as a Kolmogorov generator?
pub fn is_kolmogorov(l: &Array2<f64>, tol: f64) -> bool {
    let d = l.nrows();
    for j in 0..d {
        let col: f64 = (0..d).map(|i| l[[i, j]]).sum();
        if col.abs() > tol {
            return false;
        }
        for i in 0..d {
            if i != j && l[[i, j]] < -tol {
                return false;
            }
        }
    }
    true
}

pub fn is_column_stochastic(t: &Array2<f64>, tol: f64) -> bool {
    let d = t.nrows();
    for j in 0..d {
        let col: f64 = (0..d).map(|i| t[[i, j]]).sum();
        if (col - 1.0).abs() > tol {
            return false;
        }
        for i in 0..d {
            if t[[i, j]] < -tol {
                return false;
            }
        }
    }
    true
}

/// One (t, s) entry of the Chapman-Kolmogorov check.
#[derive(Clone, Debug)]
pub struct CkEntry {
    pub t_index: usize,
    pub s_index: usize,
    pub residual: f64,
    pub propagator_stochastic: bool,
    pub min_entry: f64,
}

#[derive(Clone, Debug)]
pub struct CkReport {
    pub entries: Vec<CkEntry>,
    /// Indices s where T(s) was too ill-conditioned to invert.
    pub singular_at: Vec<usize>,
}

/// For sampled pairs s < t compute T(t,s) = T(t) T(s)^{-1}, the residual
/// ||T(t) - T(t,s) T(s)|| and the stochasticity of the propagator.
pub fn chapman_kolmogorov_check(traj: &ClassicalTrajectory, stride: usize) -> Result<CkReport> {
    let n = traj.matrices.len();
    let stride = stride.max(1);
    let mut entries = Vec::new();
    let mut singular_at = Vec::new();
    for s in (0..n).step_by(stride) {
        let ts = &traj.matrices[s];
        let tsc = complexify(ts);
        let cond = crate::linalg::cond(&tsc);
        if cond > 1e8 {
            singular_at.push(s);
            continue;
        }
        let inv = crate::linalg::inv(&tsc)
            .map_err(|_| OdkError::SingularIntermediate(traj.grid.t(s), cond))?;
        for t in ((s + stride)..n).step_by(stride) {
            let prop = re_mat(&complexify(&traj.matrices[t]).dot(&inv));
            let recomposed = prop.dot(ts);
            let residual = (&recomposed - &traj.matrices[t])
                .iter()
                .map(|x| x.abs())
                .fold(0.0, f64::max);
            let min_entry = prop.iter().cloned().fold(f64::INFINITY, f64::min);
            // Entries must be nonnegative to 1e-8; column sums inherit the
            // trajectory's quadrature error, so they get the looser 1e-6.
            let cols_ok = (0..prop.ncols()).all(|jc| {
                ((0..prop.nrows()).map(|ic| prop[[ic, jc]]).sum::<f64>() - 1.0).abs() < 1e-6
            });
            entries.push(CkEntry {
                t_index: t,
                s_index: s,
                residual,
                propagator_stochastic: cols_ok && min_entry > -1e-8,
                min_entry,
            });
        }
    }
    Ok(CkReport { entries, singular_at })
}
