//! Simultaneous OMP over a dictionary of feasible analog combiners.

use crate::linalg::IncrementalQr;
use crate::{CMatrix, Error, Result, C64};

use super::dictionary::Dictionary;

const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SompOutput {
    pub w_rf: CMatrix,
    /// Scaled so that `‖W_RF W_BB‖_F^2 = N_s`.
    pub w_bb: CMatrix,
    /// Dictionary indices in `W_RF` column order.
    pub selected: Vec<usize>,
    /// `‖W_opt - W_RF W_BB‖_F` of the least-squares fit, starting with `‖W_opt‖_F`.
    pub residual_history: Vec<f64>,
}

/// Approximates `W_opt` by `W_RF W_BB` with `W_RF` drawn column by column
/// from `dict`. Each step picks the column with the largest normalized
/// correlation energy against the current residual, skips columns that are
/// linearly dependent on the ones already chosen, and refits `W_BB` by least
/// squares. Subset dictionaries admit one column per block; the output is
/// ordered so column `l` comes from block `l`.
pub fn somp_combiner(w_opt: &CMatrix, dict: &Dictionary, l_r: usize) -> Result<SompOutput> {
    let (n_r, n_s) = w_opt.shape();
    if n_r != dict.n_r() {
        return Err(Error::Dimension(format!("W_opt has {n_r} rows, dictionary has {}", dict.n_r())));
    }
    if l_r == 0 || n_s == 0 {
        return Err(Error::InvalidParameter("need L_r >= 1 and N_s >= 1".into()));
    }
    if dict.one_per_block() && dict.num_blocks() < l_r {
        return Err(Error::Infeasible(format!(
            "{} allows one combiner per block but has {} blocks for L_r = {l_r}",
            dict.arch,
            dict.num_blocks()
        )));
    }
    let targets: Vec<_> = (0..n_s).map(|s| w_opt.column(s).into_owned()).collect();
    let mut qr = IncrementalQr::new();
    let mut residual = w_opt.clone();
    let mut history = vec![residual.norm()];
    let mut selected: Vec<usize> = Vec::with_capacity(l_r);
    let mut block_used = vec![false; dict.num_blocks()];
    let mut excluded = vec![false; dict.ncols()];
    let mut coeffs = CMatrix::zeros(0, n_s);

    while selected.len() < l_r {
        let scores = dict.scores(&residual);
        loop {
            let mut best: Option<(usize, f64)> = None;
            for (j, &s) in scores.iter().enumerate() {
                if excluded[j] || (dict.one_per_block() && block_used[dict.block_of(j)]) {
                    continue;
                }
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
            let Some((j, _)) = best else {
                return Err(Error::Infeasible(format!(
                    "{} dictionary has only {} independent admissible columns, L_r = {l_r}",
                    dict.arch,
                    selected.len()
                )));
            };
            excluded[j] = true;
            if qr.push(&dict.column(j), DEPENDENCE_TOL) {
                selected.push(j);
                if dict.one_per_block() {
                    block_used[dict.block_of(j)] = true;
                }
                break;
            }
        }
        coeffs = CMatrix::zeros(selected.len(), n_s);
        for (s, t) in targets.iter().enumerate() {
            let (c, r) = qr.solve(t);
            for (i, z) in c.into_iter().enumerate() {
                coeffs[(i, s)] = z;
            }
            residual.set_column(s, &r);
        }
        history.push(residual.norm());
    }

    let mut order: Vec<usize> = (0..l_r).collect();
    if dict.one_per_block() {
        order.sort_by_key(|&i| dict.block_of(selected[i]));
    }
    let selected: Vec<usize> = order.iter().map(|&i| selected[i]).collect();
    let cols: Vec<_> = selected.iter().map(|&j| dict.column(j)).collect();
    let w_rf = CMatrix::from_columns(&cols);
    let mut w_bb = CMatrix::from_fn(l_r, n_s, |i, s| coeffs[(order[i], s)]);
    let norm = (&w_rf * &w_bb).norm();
    if norm > 0.0 {
        w_bb *= C64::new((n_s as f64).sqrt() / norm, 0.0);
    }
    Ok(SompOutput { w_rf, w_bb, selected, residual_history: history })
}
