//! Pseudorandom, LS-orthogonal and beam-scan training designs.

use rand::seq::index::sample;
use rand::Rng;

use super::{TrainingMode, TrainingPlan, TrainingShape};
use crate::architectures::{random_binary_column, subsets, ArchitectureKind};
use crate::linalg::{cis, one};
use crate::random::{quadriphase, rng_from_seed};
use crate::{CMatrix, Error, Result, C64};

/// One random feasible column restricted to `range` (no row-distinctness).
fn random_column<R: Rng + ?Sized>(kind: ArchitectureKind, n: usize, range: std::ops::Range<usize>, rng: &mut R) -> Vec<C64> {
    let mut col = vec![C64::new(0.0, 0.0); n];
    match kind {
        ArchitectureKind::A1 | ArchitectureKind::A2 => {
            for i in range {
                col[i] = quadriphase(rng);
            }
        }
        ArchitectureKind::A3 | ArchitectureKind::A4 => {
            col = random_binary_column(n, range, rng).iter().copied().collect();
        }
        ArchitectureKind::A5 | ArchitectureKind::A6 => {
            col[rng.random_range(range)] = one();
        }
    }
    col
}

/// Random combiners for one training step of `width` RF chains.
fn random_step_block<R: Rng + ?Sized>(kind: ArchitectureKind, n_r: usize, width: usize, rng: &mut R) -> CMatrix {
    let mut q = CMatrix::zeros(n_r, width);
    if kind == ArchitectureKind::A5 {
        for (l, row) in sample(rng, n_r, width).into_iter().enumerate() {
            q[(row, l)] = one();
        }
        return q;
    }
    let blocks = subsets(n_r, width);
    for l in 0..width {
        let range = if kind.uses_subsets() { blocks[l].clone() } else { 0..n_r };
        let col = random_column(kind, n_r, range, rng);
        for (i, v) in col.into_iter().enumerate() {
            q[(i, l)] = v;
        }
    }
    q
}

fn check_counts(kind: ArchitectureKind, count: usize, chains: usize, what: &str) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParameter(format!("{what} must be positive")));
    }
    if kind.uses_subsets() && count % chains != 0 {
        return Err(Error::InvalidParameter(format!(
            "{what} = {count} must be a multiple of the {chains} RF chains for subset architecture {kind}"
        )));
    }
    Ok(())
}

/// Pseudorandom training: `{±1, ±j}` entries for phase shifters, Bernoulli(1/2)
/// switches for A3/A4 and a single random `1` per column for A5/A6, each
/// restricted to the column's designated subset where applicable.
///
/// `m_r` is the number of combiners per precoder; MC plans require `m_r = L_r`.
pub fn random_training(
    arch_tx: ArchitectureKind,
    arch_rx: ArchitectureKind,
    mode: TrainingMode,
    shape: &TrainingShape,
    m_t: usize,
    m_r: usize,
    seed: u64,
) -> Result<TrainingPlan> {
    shape.validate()?;
    if m_t == 0 {
        return Err(Error::InvalidParameter("M_t must be positive".into()));
    }
    if mode == TrainingMode::MultipleCombiner && m_r != shape.l_r {
        return Err(Error::InvalidParameter(format!(
            "multiple-combiner training uses L_r = {} combiners per precoder, got {m_r}",
            shape.l_r
        )));
    }
    check_counts(arch_rx, m_r, shape.l_r, "M_r")?;
    let mut rng = rng_from_seed(seed);
    let tx_blocks = subsets(shape.n_t, shape.l_t);
    let mut p = CMatrix::zeros(shape.n_t, m_t);
    for n in 0..m_t {
        let range = if arch_tx.uses_subsets() { tx_blocks[n % shape.l_t].clone() } else { 0..shape.n_t };
        for (i, v) in random_column(arch_tx, shape.n_t, range, &mut rng).into_iter().enumerate() {
            p[(i, n)] = v;
        }
    }
    let q_blocks = match mode {
        TrainingMode::MultipleCombiner => (0..m_t).map(|_| random_step_block(arch_rx, shape.n_r, shape.l_r, &mut rng)).collect(),
        TrainingMode::SingleCombiner => {
            let mut q = CMatrix::zeros(shape.n_r, m_r);
            let mut start = 0;
            while start < m_r {
                let width = shape.l_r.min(m_r - start);
                let block = random_step_block(arch_rx, shape.n_r, width, &mut rng);
                q.columns_mut(start, width).copy_from(&block);
                start += width;
            }
            vec![q]
        }
    };
    let plan = TrainingPlan {
        mode,
        arch_tx,
        arch_rx,
        shape: *shape,
        p,
        q_blocks,
        total_power: m_t as f64,
        seed: Some(seed),
    };
    plan.validate()?;
    Ok(plan)
}

/// `n x m` matrix with orthogonal rows (`X X^* ∝ I`) whose column `c` is
/// feasible for `kind` on subset `c mod chains`.
fn orthogonal_rows(kind: ArchitectureKind, n: usize, m: usize, chains: usize) -> Result<CMatrix> {
    if m < n {
        return Err(Error::InvalidParameter(format!("orthogonal training needs at least {n} columns, got {m}")));
    }
    let mut x = CMatrix::zeros(n, m);
    match kind {
        ArchitectureKind::A1 => {
            x = crate::linalg::dft_rows(n, m);
        }
        ArchitectureKind::A3 | ArchitectureKind::A5 => {
            if m % n != 0 {
                return Err(Error::InvalidParameter(format!(
                    "identity concatenation needs a multiple of {n} columns, got {m}"
                )));
            }
            for c in 0..m {
                x[(c % n, c)] = one();
            }
        }
        ArchitectureKind::A2 | ArchitectureKind::A4 | ArchitectureKind::A6 => {
            if m % chains != 0 {
                return Err(Error::InvalidParameter(format!("{m} columns do not split over {chains} subsets")));
            }
            let per_block = m / chains;
            let blocks = subsets(n, chains);
            for (b, rows) in blocks.iter().enumerate() {
                let n_b = rows.len();
                if per_block < n_b {
                    return Err(Error::InvalidParameter(format!(
                        "subset {b} has {n_b} antennas but only {per_block} training columns"
                    )));
                }
                if kind != ArchitectureKind::A2 && (per_block % n_b != 0 || n % chains != 0) {
                    return Err(Error::InvalidParameter(format!(
                        "switch-based orthogonal training needs equal subsets and a multiple of {n_b} columns per subset"
                    )));
                }
                for j in 0..per_block {
                    let c = j * chains + b;
                    if kind == ArchitectureKind::A2 {
                        for i in 0..n_b {
                            let phase = -2.0 * std::f64::consts::PI * ((i * j) % per_block) as f64 / per_block as f64;
                            x[(rows.start + i, c)] = cis(phase);
                        }
                    } else {
                        x[(rows.start + j % n_b, c)] = one();
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Single-combiner training with `PP^* ∝ I` and `QQ^* ∝ I`, so that `Φ^*Φ ∝ I`
/// (the LS-optimal condition). Phase shifters use DFT rows, switches use
/// concatenated identities; subset architectures apply the construction
/// per subset.
pub fn ls_orthogonal_training(
    arch_tx: ArchitectureKind,
    arch_rx: ArchitectureKind,
    shape: &TrainingShape,
    m_t: usize,
    m_r: usize,
) -> Result<TrainingPlan> {
    shape.validate()?;
    if m_t < shape.n_t || m_r < shape.n_r {
        return Err(Error::InvalidParameter(format!(
            "LS training needs M_t >= N_t and M_r >= N_r (got M_t={m_t}, M_r={m_r}, N_t={}, N_r={})",
            shape.n_t, shape.n_r
        )));
    }
    check_counts(arch_rx, m_r, shape.l_r, "M_r")?;
    let p = orthogonal_rows(arch_tx, shape.n_t, m_t, shape.l_t)?;
    let q = orthogonal_rows(arch_rx, shape.n_r, m_r, shape.l_r)?;
    let plan = TrainingPlan {
        mode: TrainingMode::SingleCombiner,
        arch_tx,
        arch_rx,
        shape: *shape,
        p,
        q_blocks: vec![q],
        total_power: m_t as f64,
        seed: None,
    };
    plan.validate()?;
    Ok(plan)
}

/// Beam scan over every pair of dictionary beams: precoders are the columns
/// of `A_BSD` and combiners `sqrt(N_r)` times the columns of `A_MSD`, so
/// measurement `g_t G_r + g_r` probes atom `(g_t, g_r)`.
pub fn exhaustive_search_plan(a_bsd: &CMatrix, a_msd: &CMatrix, shape: &TrainingShape) -> Result<TrainingPlan> {
    shape.validate()?;
    if a_bsd.nrows() != shape.n_t || a_msd.nrows() != shape.n_r {
        return Err(Error::Dimension("dictionaries do not match the array sizes".into()));
    }
    let p = a_bsd * C64::new((shape.n_t as f64).sqrt(), 0.0);
    let q = a_msd * C64::new((shape.n_r as f64).sqrt(), 0.0);
    let plan = TrainingPlan {
        mode: TrainingMode::SingleCombiner,
        arch_tx: ArchitectureKind::A1,
        arch_rx: ArchitectureKind::A1,
        shape: *shape,
        total_power: p.ncols() as f64,
        p,
        q_blocks: vec![q],
        seed: None,
    };
    plan.validate()?;
    Ok(plan)
}
