//! Channel recovery from training measurements: orthogonal matching pursuit
//! on the beamspace dictionary, least squares, and the beam-scan baseline.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::linalg::{least_squares, serde_cmatrix, serde_cvector, solve_hpd, unvec, IncrementalQr};
use crate::training::{SensingSystem, TrainingMode, TrainingPlan};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative tolerance for rejecting a dependent atom.
const DEPENDENCE_TOL: f64 = 1e-10;
/// OMP stops once `‖r‖ <= FLOOR ‖y‖`.
const RESIDUAL_FLOOR: f64 = 1e-12;
/// OMP stops if an iteration shrinks `‖r‖` by less than this fraction.
const MIN_DECREASE: f64 = 1e-12;

/// Stopping rules; at least one must be set. OMP stops at whichever fires first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_sparsity: Option<usize>,
    /// Stop once `‖r‖^2 <= epsilon`.
    pub epsilon: Option<f64>,
}

impl StopRule {
    pub fn sparsity(k: usize) -> Self {
        Self { max_sparsity: Some(k), epsilon: None }
    }

    pub fn residual(epsilon: f64) -> Self {
        Self { max_sparsity: None, epsilon: Some(epsilon) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpOutput {
    /// Full-length coefficient vector, nonzero only on `support`.
    pub coefficients: CVector,
    /// Atoms in selection order.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// `‖r‖` before the first iteration and after each accepted one.
    pub residual_history: Vec<f64>,
    /// Selection stopped because the next atom was linearly dependent on the support.
    pub rank_deficient: bool,
}

/// Orthogonal matching pursuit with an incrementally updated QR of the support.
/// Atoms are scored by `|a_j^* r| / ‖a_j‖`; ties go to the lowest index.
pub fn omp(a: &CMatrix, y: &CVector, stop: StopRule) -> Result<OmpOutput> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, A has {m} rows", y.len())));
    }
    if stop.max_sparsity.is_none() && stop.epsilon.is_none() {
        return Err(Error::InvalidParameter("OMP needs a sparsity or residual stopping rule".into()));
    }
    if stop.max_sparsity == Some(0) || stop.epsilon.is_some_and(|e| !(e >= 0.0)) {
        return Err(Error::InvalidParameter("OMP needs k >= 1 and epsilon >= 0".into()));
    }
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::InvalidParameter(format!("dictionary column {j} is zero")));
    }
    let max_k = stop.max_sparsity.unwrap_or(usize::MAX).min(m).min(n);
    let y_norm = y.norm();
    let mut qr = IncrementalQr::new();
    let mut support: Vec<usize> = Vec::new();
    let mut in_support = vec![false; n];
    let mut coeffs: Vec<C64> = Vec::new();
    let mut residual = y.clone();
    let mut history = vec![y_norm];
    let mut rank_deficient = false;
    loop {
        let r_norm = *history.last().unwrap();
        if stop.epsilon.is_some_and(|e| r_norm * r_norm <= e)
            || support.len() >= max_k
            || r_norm <= RESIDUAL_FLOOR * y_norm
        {
            break;
        }
        let corr = a.ad_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_support[j] {
                continue;
            }
            let score = corr[j].norm() / norms[j];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        let mut next = qr.clone();
        if !next.push(&a.column(j).into_owned(), DEPENDENCE_TOL) {
            rank_deficient = true;
            break;
        }
        let (c, r) = next.solve(y);
        let new_norm = r.norm();
        if new_norm > r_norm * (1.0 - MIN_DECREASE) {
            break;
        }
        qr = next;
        support.push(j);
        in_support[j] = true;
        coeffs = c;
        residual = r;
        history.push(new_norm);
    }
    let mut coefficients = CVector::zeros(n);
    for (&j, &c) in support.iter().zip(&coeffs) {
        coefficients[j] = c;
    }
    Ok(OmpOutput {
        coefficients,
        iterations: support.len(),
        residual_norm: *history.last().unwrap(),
        residual_history: history,
        support,
        rank_deficient,
    })
}

/// Beamspace estimate plus the reconstructed channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    #[serde(with = "serde_cvector")]
    pub x_hat: CVector,
    pub support: Vec<usize>,
    #[serde(with = "serde_cmatrix")]
    pub h_hat: CMatrix,
    pub iterations: usize,
    pub residual_norm: f64,
    pub rank_deficient: bool,
}

/// `A_MSD unvec(x) A_BSD^*`, summing only over the nonzero entries of `x`.
pub fn channel_from_beamspace(x: &CVector, a_bsd: &CMatrix, a_msd: &CMatrix) -> Result<CMatrix> {
    let (g_t, g_r) = (a_bsd.ncols(), a_msd.ncols());
    if x.len() != g_t * g_r {
        return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), g_t * g_r)));
    }
    let mut h = CMatrix::zeros(a_msd.nrows(), a_bsd.nrows());
    for (k, &v) in x.iter().enumerate() {
        if v != C64::new(0.0, 0.0) {
            let (gt, gr) = (k / g_r, k % g_r);
            h += (a_msd.column(gr) * a_bsd.column(gt).adjoint()) * v;
        }
    }
    Ok(h)
}

/// Dense variant of [`channel_from_beamspace`].
pub fn channel_from_beamspace_dense(x: &CVector, a_bsd: &CMatrix, a_msd: &CMatrix) -> Result<CMatrix> {
    Ok(a_msd * unvec(x, a_msd.ncols(), a_bsd.ncols())? * a_bsd.adjoint())
}

/// OMP on `y = sqrt(ρ) A x + e`; coefficients are divided by `sqrt(ρ)`.
pub fn omp_estimate(a: &CMatrix, y: &CVector, rho: f64, stop: StopRule, a_bsd: &CMatrix, a_msd: &CMatrix) -> Result<EstimateResult> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("ρ must be positive".into()));
    }
    let out = omp(a, y, stop)?;
    let x_hat = out.coefficients / C64::new(rho.sqrt(), 0.0);
    let h_hat = channel_from_beamspace(&x_hat, a_bsd, a_msd)?;
    Ok(EstimateResult {
        x_hat,
        support: out.support,
        h_hat,
        iterations: out.iterations,
        residual_norm: out.residual_norm,
        rank_deficient: out.rank_deficient,
    })
}

/// Default OMP threshold `ε = E[e^* e] = trace(C_e)`.
pub fn default_epsilon(sensing: &SensingSystem) -> f64 {
    sensing.noise_cov.diagonal().iter().map(|z| z.re).sum()
}

/// Whitens `(A, y)` with the Cholesky factor `C_e = L L^*`: returns `(L^{-1} A, L^{-1} y)`.
/// After whitening the noise is `CN(0, I)`, so the matching threshold is `M`.
pub fn whiten(a: &CMatrix, y: &CVector, noise_cov: &CMatrix) -> Result<(CMatrix, CVector)> {
    let chol = Cholesky::new(noise_cov.clone())
        .ok_or_else(|| Error::RankDeficient("noise covariance is singular; cannot whiten".into()))?;
    let l = chol.l();
    let a_w = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let y_w = l
        .solve_lower_triangular(y)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok((a_w, y_w))
}

/// `(Φ^*Φ)^{-1} Φ^* y / sqrt(ρ)` reshaped to `N_r x N_t`.
pub fn ls_estimate(phi: &CMatrix, y: &CVector, rho: f64, n_r: usize, n_t: usize) -> Result<CMatrix> {
    let (m, n) = phi.shape();
    if n != n_r * n_t {
        return Err(Error::Dimension(format!("Φ has {n} columns, expected N_t N_r = {}", n_t * n_r)));
    }
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, Φ has {m} rows", y.len())));
    }
    if m < n {
        return Err(Error::RankDeficient(format!(
            "LS needs at least N_t N_r = {n} measurements, got M = {m}"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("ρ must be positive".into()));
    }
    let gram = phi.ad_mul(phi);
    let rhs = phi.ad_mul(y);
    let sol = solve_hpd(&gram, &CMatrix::from_column_slice(n, 1, rhs.as_slice())).map_err(|_| {
        Error::RankDeficient(format!("Φ ({m} x {n}) does not have full column rank"))
    })?;
    let h_vec = CVector::from_column_slice(sol.as_slice()) / C64::new(rho.sqrt(), 0.0);
    unvec(&h_vec, n_r, n_t)
}

/// LS for single-combiner plans using the Kronecker structure:
/// `Ĥ = (QQ^*)^{-1} Q Y P^* (PP^*)^{-1} / sqrt(ρ)` with `Y` the `M_r x M_t`
/// measurement matrix. Equivalent to [`ls_estimate`] without forming `Φ`.
pub fn ls_estimate_separable(plan: &TrainingPlan, y: &CVector, rho: f64) -> Result<CMatrix> {
    if plan.mode != TrainingMode::SingleCombiner {
        return Err(Error::InvalidParameter("separable LS needs a single-combiner plan".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("ρ must be positive".into()));
    }
    let (m_t, m_r) = (plan.m_t(), plan.m_r());
    if m_t < plan.n_t() || m_r < plan.n_r() {
        return Err(Error::RankDeficient(format!(
            "LS needs M_t >= N_t and M_r >= N_r (got M_t = {m_t}, M_r = {m_r}, N_t = {}, N_r = {})",
            plan.n_t(),
            plan.n_r()
        )));
    }
    let ymat = unvec(y, m_r, m_t)?;
    let p = plan.effective_p();
    let q = &plan.q_blocks[0];
    let qq = q * q.adjoint();
    let pp = &p * p.adjoint();
    let left = solve_hpd(&qq, &(q * ymat * p.adjoint()))
        .map_err(|_| Error::RankDeficient(format!("QQ^* ({} x {}) is singular", qq.nrows(), qq.ncols())))?;
    // X (PP^*)^{-1} = ((PP^*)^{-1} X^*)^*.
    let right = solve_hpd(&pp, &left.adjoint())
        .map_err(|_| Error::RankDeficient(format!("PP^* ({} x {}) is singular", pp.nrows(), pp.ncols())))?;
    Ok(right.adjoint() / C64::new(rho.sqrt(), 0.0))
}

/// Minimum LS error `σ^2 N_t^2 N_r / (ρ 𝒫)` of orthogonal training with `M_r = N_r`.
pub fn ls_minimum_mse(n_t: usize, n_r: usize, sigma_n2: f64, total_power: f64, rho: f64) -> f64 {
    sigma_n2 * (n_t * n_t * n_r) as f64 / (rho * total_power)
}

/// Beam-scan estimate: keeps the `k` strongest of the `G_t G_r` beam-pair
/// measurements and fits their gains by least squares.
pub fn exhaustive_search_estimate(
    plan: &TrainingPlan,
    y: &CVector,
    k: usize,
    rho: f64,
    a_bsd: &CMatrix,
    a_msd: &CMatrix,
) -> Result<EstimateResult> {
    let (g_t, g_r) = (a_bsd.ncols(), a_msd.ncols());
    if plan.mode != TrainingMode::SingleCombiner || plan.m_t() != g_t || plan.m_r() != g_r {
        return Err(Error::InvalidParameter(format!(
            "beam scan needs a single-combiner plan with {g_t} precoders and {g_r} combiners"
        )));
    }
    if y.len() != g_t * g_r {
        return Err(Error::Dimension(format!("beam scan needs {} measurements, got {}", g_t * g_r, y.len())));
    }
    if k == 0 || k > y.len() {
        return Err(Error::InvalidParameter(format!("K = {k} is out of range")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter("ρ must be positive".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| y[j].norm().total_cmp(&y[i].norm()).then(i.cmp(&j)));
    let support: Vec<usize> = order[..k].to_vec();
    let t = plan.effective_p().transpose() * a_bsd.map(|z| z.conj());
    let r = plan.q_blocks[0].ad_mul(a_msd);
    let mut a_s = CMatrix::zeros(y.len(), k);
    for (col, &atom) in support.iter().enumerate() {
        let (gt, gr) = (atom / g_r, atom % g_r);
        for i in 0..g_t {
            for c in 0..g_r {
                a_s[(i * g_r + c, col)] = t[(i, gt)] * r[(c, gr)];
            }
        }
    }
    let gains = least_squares(&a_s, y)?;
    let resid = (y - &a_s * &gains).norm();
    let mut x_hat = CVector::zeros(g_t * g_r);
    for (&atom, &g) in support.iter().zip(gains.iter()) {
        x_hat[atom] = g / rho.sqrt();
    }
    let h_hat = channel_from_beamspace(&x_hat, a_bsd, a_msd)?;
    Ok(EstimateResult { x_hat, support, h_hat, iterations: 1, residual_norm: resid, rank_deficient: false })
}
