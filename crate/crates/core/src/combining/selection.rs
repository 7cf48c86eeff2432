//! Antenna-selection combiners for A5 and A6.

use std::ops::Range;

use rayon::prelude::*;

use crate::architectures::{selection_matrix, subsets, ArchitectureKind};
use crate::linalg::sorted_svd;
use crate::{CMatrix, Error, Result};

use super::{mutual_information, CombinerDesign};

/// Largest number of candidate supports [`exhaustive_combiner`] enumerates by default.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 2_000_000;

fn check_inputs(h_tilde: &CMatrix, l_r: usize, n_s: usize, arch: ArchitectureKind) -> Result<Vec<Range<usize>>> {
    let n_r = h_tilde.nrows();
    if !arch.is_selection() {
        return Err(Error::InvalidParameter(format!("{arch} is not an antenna-selection architecture")));
    }
    if n_s == 0 || n_s > l_r || l_r > n_r {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= N_s <= L_r <= N_r, got N_s = {n_s}, L_r = {l_r}, N_r = {n_r}"
        )));
    }
    let blocks = subsets(n_r, l_r);
    if arch == ArchitectureKind::A6 && l_r > blocks.len() {
        return Err(Error::Infeasible(format!("A6 has {} subsets, fewer than L_r = {l_r}", blocks.len())));
    }
    Ok(blocks)
}

/// Selection of rows `support` with `W_BB` set to the leading left singular
/// vectors of the selected rows of `H̃`.
fn support_design(h_tilde: &CMatrix, support: &[usize], n_s: usize, snr: f64, n_t: usize) -> Result<CombinerDesign> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    let w_rf = selection_matrix(h_tilde.nrows(), &sorted);
    let h_s = w_rf.tr_mul(h_tilde);
    let svd = sorted_svd(&h_s)?;
    let w_bb = svd.u.columns(0, n_s.min(sorted.len())).into_owned();
    let mutual_info = mutual_information(h_tilde, &(&w_rf * &w_bb), snr, n_t)?;
    Ok(CombinerDesign { w_rf, w_bb, mutual_info })
}

/// Greedy hybrid antenna selection: activates `N_s` antennas one at a time by
/// largest capacity gain, then keeps adding the antenna that maximizes the
/// mutual information of the SVD-combined selection until `L_r` are active.
/// For A6 at most one antenna is taken from each subset.
pub fn hybrid_antenna_selection(
    h_tilde: &CMatrix,
    l_r: usize,
    n_s: usize,
    arch: ArchitectureKind,
    snr: f64,
    n_t: usize,
) -> Result<CombinerDesign> {
    let blocks = check_inputs(h_tilde, l_r, n_s, arch)?;
    let n_r = h_tilde.nrows();
    let block_of = |i: usize| blocks.iter().position(|b| b.contains(&i)).unwrap();
    let mut support: Vec<usize> = Vec::with_capacity(l_r);
    let mut block_used = vec![false; blocks.len()];
    let mut best: Option<CombinerDesign> = None;
    while support.len() < l_r {
        let mut step: Option<(usize, CombinerDesign)> = None;
        for j in 0..n_r {
            if support.contains(&j) || (arch == ArchitectureKind::A6 && block_used[block_of(j)]) {
                continue;
            }
            let mut trial = support.clone();
            trial.push(j);
            let design = support_design(h_tilde, &trial, n_s, snr, n_t)?;
            if step.as_ref().is_none_or(|(_, d)| design.mutual_info > d.mutual_info) {
                step = Some((j, design));
            }
        }
        let (j, design) = step.ok_or_else(|| Error::Infeasible("no admissible antenna left".into()))?;
        support.push(j);
        block_used[block_of(j)] = true;
        best = Some(design);
    }
    Ok(best.unwrap())
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { break };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
    out
}

fn one_per_block(blocks: &[Range<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for b in blocks {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                b.clone().map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Global optimum over every feasible support (A5: all `C(N_r, L_r)` subsets;
/// A6: one antenna per subset). Ties go to the lexicographically first support.
pub fn exhaustive_combiner(
    h_tilde: &CMatrix,
    l_r: usize,
    n_s: usize,
    arch: ArchitectureKind,
    snr: f64,
    n_t: usize,
    cap: u64,
) -> Result<CombinerDesign> {
    let blocks = check_inputs(h_tilde, l_r, n_s, arch)?;
    let n_r = h_tilde.nrows();
    let count = match arch {
        ArchitectureKind::A5 => binomial(n_r as u64, l_r as u64),
        _ => blocks.iter().map(|b| b.len() as u128).product(),
    };
    if count > cap as u128 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search over {count} supports exceeds the cap of {cap}"
        )));
    }
    let candidates = match arch {
        ArchitectureKind::A5 => combinations(n_r, l_r),
        _ => one_per_block(&blocks),
    };
    let scored: Vec<(usize, f64)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, s)| support_design(h_tilde, s, n_s, snr, n_t).map(|d| (i, d.mutual_info)))
        .collect::<Result<_>>()?;
    let (best, _) = scored
        .into_iter()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    support_design(h_tilde, &candidates[best], n_s, snr, n_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architectures::{is_feasible, UNIT_MODULUS_TOL};
    use crate::linalg::log2_det_identity_plus;
    use crate::random::{complex_gaussian_matrix, rng_from_seed};
    use crate::C64;

    #[test]
    fn enumerations() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(binomial(16, 8), 12870);
        let blocks = subsets(5, 2);
        assert_eq!(one_per_block(&blocks).len(), 6);
    }

    #[test]
    fn full_selection_equals_unconstrained() {
        let mut rng = rng_from_seed(21);
        let h = complex_gaussian_matrix(&mut rng, 6, 2, 1.0);
        let d = hybrid_antenna_selection(&h, 6, 2, ArchitectureKind::A5, 1.0, 8).unwrap();
        let gram = h.ad_mul(&h) * C64::new(1.0 / 8.0, 0.0);
        assert!((d.mutual_info - log2_det_identity_plus(&gram).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn single_row_exhaustive_matches_enumeration() {
        let mut rng = rng_from_seed(22);
        let h = complex_gaussian_matrix(&mut rng, 4, 1, 1.0);
        let d = exhaustive_combiner(&h, 1, 1, ArchitectureKind::A5, 2.0, 4, DEFAULT_EXHAUSTIVE_CAP).unwrap();
        let best = (0..4)
            .map(|i| (1.0 + 2.0 / 4.0 * h[(i, 0)].norm_sqr()).log2())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((d.mutual_info - best).abs() < 1e-12);
    }

    #[test]
    fn a6_picks_one_per_subset() {
        let mut rng = rng_from_seed(23);
        let h = complex_gaussian_matrix(&mut rng, 9, 2, 1.0);
        for design in [
            hybrid_antenna_selection(&h, 3, 2, ArchitectureKind::A6, 1.0, 8).unwrap(),
            exhaustive_combiner(&h, 3, 2, ArchitectureKind::A6, 1.0, 8, 1000).unwrap(),
        ] {
            assert!(is_feasible(&design.w_rf, ArchitectureKind::A6, 9, UNIT_MODULUS_TOL).unwrap());
        }
    }

    #[test]
    fn exhaustive_dominates_greedy() {
        let mut rng = rng_from_seed(24);
        for _ in 0..20 {
            let h = complex_gaussian_matrix(&mut rng, 6, 2, 1.0);
            let g = hybrid_antenna_selection(&h, 3, 2, ArchitectureKind::A5, 1.0, 8).unwrap();
            let e = exhaustive_combiner(&h, 3, 2, ArchitectureKind::A5, 1.0, 8, 100).unwrap();
            assert!(e.mutual_info >= g.mutual_info - 1e-12);
        }
        let h = complex_gaussian_matrix(&mut rng, 16, 2, 1.0);
        assert!(exhaustive_combiner(&h, 8, 2, ArchitectureKind::A5, 1.0, 8, 100).is_err());
    }
}
