//! Training sequences, sensing matrices and noisy training measurements.
//!
//! A training step transmits one precoder `p` and combines with a block of
//! `L_r` analog combiners. In single-combiner (SC) mode one `N_r x M_r`
//! matrix `Q` is reused for every precoder and swept in blocks of `L_r`
//! columns; in multiple-combiner (MC) mode each precoder has its own
//! `N_r x L_r` block `Q_n`. Measurements are ordered step by step, so for SC
//! the measurement index is `i M_r + c` (precoder `i`, combiner column `c`)
//! and for MC it is `n L_r + l`.

pub mod coherence;
pub mod design;
pub mod greedy;

use serde::{Deserialize, Serialize};

use crate::architectures::{column_feasible, is_feasible, subsets, ArchitectureKind, UNIT_MODULUS_TOL};
use crate::linalg::{frobenius_sq, kron_row, serde_cmatrix, serde_cmatrix_vec};
use crate::random::{complex_gaussian_vector, rng_from_seed};
use crate::{CMatrix, CVector, Error, Result, C64};

pub use coherence::{closed_form_m_t, min_measurements_for_k, mutual_coherence, optimal_split, welch_bound, SplitResult};
pub use design::{exhaustive_search_plan, ls_orthogonal_training, random_training};
pub use greedy::{greedy_training, GreedyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingMode {
    SingleCombiner,
    MultipleCombiner,
}

/// Array sizes and RF chain counts a training plan is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingShape {
    pub n_t: usize,
    pub n_r: usize,
    pub l_t: usize,
    pub l_r: usize,
}

impl TrainingShape {
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 || self.l_t == 0 || self.l_r == 0 {
            return Err(Error::InvalidParameter("training shape entries must be positive".into()));
        }
        if self.l_t > self.n_t || self.l_r > self.n_r {
            return Err(Error::InvalidParameter("more RF chains than antennas".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPlan {
    pub mode: TrainingMode,
    pub arch_tx: ArchitectureKind,
    pub arch_rx: ArchitectureKind,
    pub shape: TrainingShape,
    /// Hardware-feasible precoders, `N_t x M_t`. They are scaled by
    /// [`TrainingPlan::precoder_scale`] on transmission.
    #[serde(with = "serde_cmatrix")]
    pub p: CMatrix,
    /// SC: a single `N_r x M_r` matrix. MC: `M_t` matrices of size `N_r x L_r`.
    #[serde(with = "serde_cmatrix_vec")]
    pub q_blocks: Vec<CMatrix>,
    /// Training power budget `𝒫 = ‖P‖_F^2` after scaling.
    pub total_power: f64,
    pub seed: Option<u64>,
}

/// One training step: precoder index and the combiners applied during it.
#[derive(Clone, Debug)]
pub struct TrainingStep {
    pub precoder: usize,
    pub combiners: CMatrix,
    pub first_measurement: usize,
}

impl TrainingPlan {
    pub fn n_t(&self) -> usize {
        self.shape.n_t
    }

    pub fn n_r(&self) -> usize {
        self.shape.n_r
    }

    pub fn m_t(&self) -> usize {
        self.p.ncols()
    }

    /// Combiners per precoder: `M_r` in SC mode, `L_r` in MC mode.
    pub fn m_r(&self) -> usize {
        match self.mode {
            TrainingMode::SingleCombiner => self.q_blocks[0].ncols(),
            TrainingMode::MultipleCombiner => self.shape.l_r,
        }
    }

    pub fn num_measurements(&self) -> usize {
        self.m_t() * self.m_r()
    }

    /// Number of channel uses: every step yields `L_r` measurements.
    pub fn training_steps(&self) -> usize {
        self.num_measurements().div_ceil(self.shape.l_r)
    }

    /// Scalar applied to `P` so that `‖P‖_F^2 = 𝒫`.
    pub fn precoder_scale(&self) -> f64 {
        (self.total_power / frobenius_sq(&self.p)).sqrt()
    }

    /// Transmitted precoders, `‖·‖_F^2 = 𝒫`.
    pub fn effective_p(&self) -> CMatrix {
        &self.p * C64::new(self.precoder_scale(), 0.0)
    }

    /// Average `q^* q` over all combiner columns (γ).
    pub fn combiner_gain(&self) -> f64 {
        let cols: usize = self.q_blocks.iter().map(|q| q.ncols()).sum();
        self.q_blocks.iter().map(frobenius_sq).sum::<f64>() / cols as f64
    }

    /// Combiner column used for measurement `m`.
    pub fn combiner_index(&self, m: usize) -> (usize, usize, usize) {
        let m_r = self.m_r();
        let (i, c) = (m / m_r, m % m_r);
        match self.mode {
            TrainingMode::SingleCombiner => (i, 0, c),
            TrainingMode::MultipleCombiner => (i, i, c),
        }
    }

    pub fn steps(&self) -> Vec<TrainingStep> {
        let l_r = self.shape.l_r;
        let mut out = Vec::with_capacity(self.training_steps());
        let mut first = 0;
        for i in 0..self.m_t() {
            let q = match self.mode {
                TrainingMode::SingleCombiner => &self.q_blocks[0],
                TrainingMode::MultipleCombiner => &self.q_blocks[i],
            };
            let mut start = 0;
            while start < q.ncols() {
                let width = l_r.min(q.ncols() - start);
                out.push(TrainingStep {
                    precoder: i,
                    combiners: q.columns(start, width).into_owned(),
                    first_measurement: first,
                });
                first += width;
                start += width;
            }
        }
        out
    }

    /// Checks dimensions and hardware feasibility of every precoder and combiner block.
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        let (n_t, n_r) = (self.n_t(), self.n_r());
        if self.p.nrows() != n_t || self.p.ncols() == 0 {
            return Err(Error::Dimension(format!("P must be {n_t} x M_t, got {:?}", self.p.shape())));
        }
        match self.mode {
            TrainingMode::SingleCombiner => {
                if self.q_blocks.len() != 1 {
                    return Err(Error::Dimension("SC plans carry exactly one combiner matrix".into()));
                }
            }
            TrainingMode::MultipleCombiner => {
                if self.q_blocks.len() != self.m_t() || self.q_blocks.iter().any(|q| q.ncols() != self.shape.l_r) {
                    return Err(Error::Dimension("MC plans need M_t combiner blocks of L_r columns".into()));
                }
            }
        }
        if self.q_blocks.iter().any(|q| q.nrows() != n_r) {
            return Err(Error::Dimension(format!("combiners must have {n_r} rows")));
        }
        if !(self.total_power > 0.0) || frobenius_sq(&self.p) == 0.0 {
            return Err(Error::InvalidParameter("training power must be positive".into()));
        }
        let tx_blocks = subsets(n_t, self.shape.l_t);
        for n in 0..self.m_t() {
            let col: Vec<C64> = self.p.column(n).iter().copied().collect();
            let subset = self.arch_tx.uses_subsets().then(|| &tx_blocks[n % self.shape.l_t]);
            if !column_feasible(&col, self.arch_tx, subset, UNIT_MODULUS_TOL) {
                return Err(Error::Infeasible(format!("precoder {n} is not feasible for {}", self.arch_tx)));
            }
        }
        for (k, step) in self.steps().iter().enumerate() {
            if !is_feasible(&step.combiners, self.arch_rx, n_r, UNIT_MODULUS_TOL)? {
                return Err(Error::Infeasible(format!("combiners of step {k} are not feasible for {}", self.arch_rx)));
            }
        }
        Ok(())
    }
}

/// `Φ` (`M x N_t N_r`), `A = ΦΨ` (`M x G_t G_r`) and the noise covariance.
#[derive(Clone, Debug)]
pub struct SensingSystem {
    pub phi: CMatrix,
    pub a: CMatrix,
    pub noise_cov: CMatrix,
}

/// Row `m` of `Φ`: `p_i^T ⊗ q_c^*`.
fn phi_row(p: &CMatrix, q: &CMatrix, i: usize, c: usize) -> Vec<C64> {
    let pr: Vec<C64> = p.column(i).iter().copied().collect();
    let qr: Vec<C64> = q.column(c).iter().map(|z| z.conj()).collect();
    kron_row(&pr, &qr)
}

/// Sensing matrix `Φ` alone.
pub fn phi_matrix(plan: &TrainingPlan) -> CMatrix {
    let p = plan.effective_p();
    let m = plan.num_measurements();
    let mut phi = CMatrix::zeros(m, plan.n_t() * plan.n_r());
    for row in 0..m {
        let (i, b, c) = plan.combiner_index(row);
        for (j, v) in phi_row(&p, &plan.q_blocks[b], i, c).into_iter().enumerate() {
            phi[(row, j)] = v;
        }
    }
    phi
}

/// `A = ΦΨ` built row by row as `(p_i^T conj(A_BSD)) ⊗ (q_c^* A_MSD)` without forming `Φ`.
pub fn measurement_dictionary(plan: &TrainingPlan, a_bsd: &CMatrix, a_msd: &CMatrix) -> Result<CMatrix> {
    if a_bsd.nrows() != plan.n_t() || a_msd.nrows() != plan.n_r() {
        return Err(Error::Dimension("dictionaries do not match the plan's arrays".into()));
    }
    let t = plan.effective_p().transpose() * a_bsd.map(|z| z.conj());
    let r: Vec<CMatrix> = plan.q_blocks.iter().map(|q| q.ad_mul(a_msd)).collect();
    let m = plan.num_measurements();
    let (g_t, g_r) = (a_bsd.ncols(), a_msd.ncols());
    let mut a = CMatrix::zeros(m, g_t * g_r);
    for row in 0..m {
        let (i, b, c) = plan.combiner_index(row);
        for gt in 0..g_t {
            let tv = t[(i, gt)];
            for gr in 0..g_r {
                a[(row, gt * g_r + gr)] = tv * r[b][(c, gr)];
            }
        }
    }
    Ok(a)
}

/// Block-diagonal noise covariance `σ^2 Q_k^* Q_k` over training steps.
pub fn noise_covariance(plan: &TrainingPlan, sigma_n2: f64) -> CMatrix {
    let m = plan.num_measurements();
    let mut cov = CMatrix::zeros(m, m);
    for step in plan.steps() {
        let block = step.combiners.ad_mul(&step.combiners) * C64::new(sigma_n2, 0.0);
        cov.view_mut((step.first_measurement, step.first_measurement), block.shape())
            .copy_from(&block);
    }
    cov
}

/// `trace` of the noise covariance: `σ^2 Σ ‖q‖^2`.
pub fn noise_power(plan: &TrainingPlan, sigma_n2: f64) -> f64 {
    let per_precoder: f64 = match plan.mode {
        TrainingMode::SingleCombiner => frobenius_sq(&plan.q_blocks[0]) * plan.m_t() as f64,
        TrainingMode::MultipleCombiner => plan.q_blocks.iter().map(frobenius_sq).sum(),
    };
    sigma_n2 * per_precoder
}

pub fn sensing_matrix(plan: &TrainingPlan, a_bsd: &CMatrix, a_msd: &CMatrix, sigma_n2: f64) -> Result<SensingSystem> {
    Ok(SensingSystem {
        phi: phi_matrix(plan),
        a: measurement_dictionary(plan, a_bsd, a_msd)?,
        noise_cov: noise_covariance(plan, sigma_n2),
    })
}

#[derive(Clone, Debug)]
pub struct Measurements {
    pub y: CVector,
    /// `E[e^* e]`, the trace of the noise covariance.
    pub noise_power: f64,
}

/// `y_m = sqrt(ρ) q^* H p + q^* n` with `n ~ CN(0, σ^2 I)` drawn per step at the antennas.
pub fn simulate_measurements(h: &CMatrix, plan: &TrainingPlan, rho: f64, sigma_n2: f64, seed: u64) -> Result<Measurements> {
    if h.shape() != (plan.n_r(), plan.n_t()) {
        return Err(Error::Dimension(format!(
            "channel is {:?}, plan expects {}x{}",
            h.shape(),
            plan.n_r(),
            plan.n_t()
        )));
    }
    if !(rho >= 0.0) || !(sigma_n2 >= 0.0) {
        return Err(Error::InvalidParameter("ρ and σ^2 must be nonnegative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let hp = h * plan.effective_p() * C64::new(rho.sqrt(), 0.0);
    let mut y = CVector::zeros(plan.num_measurements());
    for step in plan.steps() {
        let mut z = hp.column(step.precoder).into_owned();
        if sigma_n2 > 0.0 {
            z += complex_gaussian_vector(&mut rng, plan.n_r(), sigma_n2);
        }
        let block = step.combiners.ad_mul(&z);
        y.rows_mut(step.first_measurement, block.len()).copy_from(&block);
    }
    Ok(Measurements { y, noise_power: noise_power(plan, sigma_n2) })
}
