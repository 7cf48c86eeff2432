//! Hybrid combiner design and spectral-efficiency evaluation.
//!
//! The transmitter is unconstrained: `F = V_{N_s} Γ` with waterfilling power
//! allocation, and the receiver sees the effective channel `H̃ = H F`. Phase
//! shifter and switch-and-sum architectures (A1-A4) are designed by
//! simultaneous OMP over a dictionary of feasible analog combiners; antenna
//! selection architectures (A5/A6) by greedy hybrid antenna selection.

pub mod dictionary;
pub mod selection;
pub mod somp;

use serde::{Deserialize, Serialize};

use crate::architectures::ArchitectureKind;
use crate::linalg::{log2_det_identity_plus, orthonormal_basis, serde_cmatrix, sorted_svd, IncrementalQr};
use crate::{CMatrix, Error, Result, C64};

pub use dictionary::{build_dictionary, Dictionary, A3_MAX_ANTENNAS};
pub use selection::{exhaustive_combiner, hybrid_antenna_selection, DEFAULT_EXHAUSTIVE_CAP};
pub use somp::{somp_combiner, SompOutput};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinerDesign {
    #[serde(with = "serde_cmatrix")]
    pub w_rf: CMatrix,
    #[serde(with = "serde_cmatrix")]
    pub w_bb: CMatrix,
    /// Bits/s/Hz achieved with `W = W_RF W_BB`.
    pub mutual_info: f64,
}

impl CombinerDesign {
    pub fn combiner(&self) -> CMatrix {
        &self.w_rf * &self.w_bb
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecoderDesign {
    #[serde(with = "serde_cmatrix")]
    pub f: CMatrix,
    /// Power per stream (diagonal of `Γ^2`); sums to the budget.
    pub power_alloc: Vec<f64>,
}

fn projected_gram(h_tilde: &CMatrix, basis: &CMatrix) -> CMatrix {
    let proj = basis.ad_mul(h_tilde);
    proj.ad_mul(&proj)
}

/// `log2 det(I + (snr / N_t) H̃^* W (W^*W)^{-1} W^* H̃)`.
///
/// `snr` is linear. The projector is formed from an orthonormal basis of the
/// column space of `W`, so the value depends only on `span(W)`.
pub fn mutual_information(h_tilde: &CMatrix, w: &CMatrix, snr: f64, n_t: usize) -> Result<f64> {
    if w.nrows() != h_tilde.nrows() {
        return Err(Error::Dimension(format!(
            "combiner has {} rows, channel has {}",
            w.nrows(),
            h_tilde.nrows()
        )));
    }
    if w.ncols() == 0 {
        return Err(Error::RankDeficient("combiner has no columns".into()));
    }
    let basis = orthonormal_basis(w)?;
    let gram = projected_gram(h_tilde, &basis) * C64::new(snr / n_t as f64, 0.0);
    Ok(log2_det_identity_plus(&gram)?.max(0.0))
}

/// Like [`mutual_information`] but projects onto the numerically independent
/// part of `span(W)` instead of failing on rank deficiency.
pub fn mutual_information_span(h_tilde: &CMatrix, w: &CMatrix, snr: f64, n_t: usize) -> Result<f64> {
    let mut qr = IncrementalQr::new();
    for j in 0..w.ncols() {
        qr.push(&w.column(j).into_owned(), 1e-10);
    }
    if qr.rank() == 0 {
        return Ok(0.0);
    }
    let basis = CMatrix::from_columns(qr.basis());
    let gram = projected_gram(h_tilde, &basis) * C64::new(snr / n_t as f64, 0.0);
    Ok(log2_det_identity_plus(&gram)?.max(0.0))
}

/// Waterfilling over the `n_s` largest singular values: maximizes
/// `Σ log(1 + snr σ_i^2 p_i)` subject to `Σ p_i = budget`, `p_i >= 0`.
/// Returns powers in the order of the sorted (descending) singular values.
pub fn waterfilling(sigmas: &[f64], snr: f64, n_s: usize, budget: f64) -> Result<Vec<f64>> {
    if n_s == 0 || n_s > sigmas.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot allocate {n_s} streams over {} singular values",
            sigmas.len()
        )));
    }
    if !(snr >= 0.0) || !(budget >= 0.0) {
        return Err(Error::InvalidParameter("snr and budget must be nonnegative".into()));
    }
    let mut s: Vec<f64> = sigmas.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let gains: Vec<f64> = s[..n_s].iter().map(|x| snr * x * x).collect();
    let mut alloc = vec![0.0; n_s];
    if budget == 0.0 || gains[0] <= 0.0 {
        alloc[0] = budget;
        return Ok(alloc);
    }
    // Largest k such that the common water level exceeds 1/g for all k channels.
    let mut active = 0;
    let mut level = 0.0;
    let mut inv_sum = 0.0;
    for k in 1..=n_s {
        if gains[k - 1] <= 0.0 {
            break;
        }
        inv_sum += 1.0 / gains[k - 1];
        let mu = (budget + inv_sum) / k as f64;
        if mu > 1.0 / gains[k - 1] {
            active = k;
            level = mu;
        } else {
            break;
        }
    }
    for i in 0..active {
        alloc[i] = level - 1.0 / gains[i];
    }
    Ok(alloc)
}

/// Unconstrained optimum: `F = V_{N_s} Γ` with waterfilling at `snr / N_t`
/// and budget `N_s`, and `W_opt = U_{N_s}`.
pub fn optimal_unconstrained(h: &CMatrix, n_s: usize, snr: f64) -> Result<(PrecoderDesign, CMatrix)> {
    let n_t = h.ncols();
    if n_s == 0 || n_s > h.nrows().min(n_t) {
        return Err(Error::InvalidParameter(format!(
            "N_s = {n_s} exceeds min(N_r, N_t) = {}",
            h.nrows().min(n_t)
        )));
    }
    let svd = sorted_svd(h)?;
    let alloc = waterfilling(&svd.singular_values, snr / n_t as f64, n_s, n_s as f64)?;
    let mut f = svd.v.columns(0, n_s).into_owned();
    for (j, p) in alloc.iter().enumerate() {
        f.column_mut(j).scale_mut(p.sqrt());
    }
    let w_opt = svd.u.columns(0, n_s).into_owned();
    Ok((PrecoderDesign { f, power_alloc: alloc }, w_opt))
}

/// Receiver-side design options shared by the experiment harness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    /// Steering dictionary size for A1; `None` means `2 N_r`.
    pub a1_resolution: Option<usize>,
    /// Per-subset steering dictionary size for A2; `None` means `2 N_r / L_r`.
    pub a2_resolution: Option<usize>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { a1_resolution: None, a2_resolution: None }
    }
}

/// Designs a combiner for `arch` against `H̃` and returns its mutual information.
pub fn design_combiner(
    arch: ArchitectureKind,
    h_tilde: &CMatrix,
    w_opt: &CMatrix,
    l_r: usize,
    snr: f64,
    n_t: usize,
    options: &DesignOptions,
) -> Result<CombinerDesign> {
    let n_r = h_tilde.nrows();
    let n_s = h_tilde.ncols();
    match arch {
        ArchitectureKind::A5 | ArchitectureKind::A6 => hybrid_antenna_selection(h_tilde, l_r, n_s, arch, snr, n_t),
        _ => {
            let resolution = match arch {
                ArchitectureKind::A1 => options.a1_resolution.unwrap_or(2 * n_r),
                ArchitectureKind::A2 => options.a2_resolution.unwrap_or((2 * n_r / l_r).max(1)),
                _ => 0,
            };
            let dict = build_dictionary(arch, n_r, l_r, resolution)?;
            let out = somp_combiner(w_opt, &dict, l_r)?;
            let w = &out.w_rf * &out.w_bb;
            let mutual_info = mutual_information_span(h_tilde, &w, snr, n_t)?;
            Ok(CombinerDesign { w_rf: out.w_rf, w_bb: out.w_bb, mutual_info })
        }
    }
}
