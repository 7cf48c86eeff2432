//! Deterministic greedy training design for antenna-selection transceivers
//! (A5 at both ends).
//!
//! With selection training, row `m` of `A` picks transmit antenna `s_m` and
//! receive antenna `r_m`, so `A[m, (g_t, g_r)] ∝ exp(-jπ s_m u_{g_t}) exp(jπ r_m u_{g_r})`.
//! Because the grids are uniform in spatial frequency, the inner product of
//! two columns depends only on the index difference `(Δt, Δr)`:
//!
//! `c(Δt, Δr) = Σ_m exp(j2π (s_m Δt / G_t - r_m Δr / G_r))`,
//!
//! and the coherence is `max_{(Δt,Δr) ≠ 0} |c| / M`. Swapping one antenna
//! index therefore updates `c` in `O(G_t G_r)` instead of recomputing a Gram
//! matrix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{TrainingMode, TrainingPlan, TrainingShape};
use crate::architectures::{selection_matrix, ArchitectureKind};
use crate::linalg::{cis, zero};
use crate::{CMatrix, Error, Result, C64};

/// Upper bound on improvement sweeps.
const MAX_SWEEPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyReport {
    /// Coherence after initialization, then after every sweep.
    pub coherence_history: Vec<f64>,
    pub sweeps: usize,
}

/// `(max_{Δ≠0} |c|, Σ_{Δ≠0} |c|^4)`; entry 0 is the zero difference.
fn score(c: &[C64]) -> (f64, f64) {
    c.iter().skip(1).fold((0.0f64, 0.0f64), |(mx, s4), z| {
        let a = z.norm_sqr();
        (mx.max(a.sqrt()), s4 + a * a)
    })
}

/// Strict lexicographic improvement with a small relative tolerance.
fn better(new: (f64, f64), cur: (f64, f64), scale: f64) -> bool {
    let tol = 1e-10 * scale;
    if new.0 < cur.0 - tol {
        return true;
    }
    new.0 <= cur.0 + tol && new.1 < cur.1 * (1.0 - 1e-10) - tol
}

/// `table[x][d] = exp(j 2π sign x d / g)`.
fn phase_table(n: usize, g: usize, sign: f64) -> Vec<Vec<C64>> {
    (0..n)
        .map(|x| (0..g).map(|d| cis(sign * 2.0 * PI * ((x * d) % g) as f64 / g as f64)).collect())
        .collect()
}

/// One-dimensional design: pick `count` indices in `0..n` minimizing the
/// coherence of the `Σ exp(j2π x Δ / g)` sums; indices inside each block of
/// `block` consecutive entries must be distinct.
struct Line {
    table: Vec<Vec<C64>>,
    x: Vec<usize>,
    c: Vec<C64>,
    block: usize,
}

impl Line {
    fn new(n: usize, g: usize, sign: f64, count: usize, block: usize) -> Self {
        let table = phase_table(n, g, sign);
        let mut line = Self { table, x: Vec::with_capacity(count), c: vec![zero(); g], block };
        for i in 0..count {
            let mut best: Option<(usize, (f64, f64))> = None;
            for cand in 0..n {
                if !line.allowed(i, cand) {
                    continue;
                }
                let trial: Vec<C64> = line.c.iter().zip(&line.table[cand]).map(|(a, b)| a + b).collect();
                let s = score(&trial);
                if best.is_none_or(|(_, b)| better(s, b, (i + 1) as f64)) {
                    best = Some((cand, s));
                }
            }
            let (cand, _) = best.expect("block size never exceeds the number of antennas");
            line.x.push(cand);
            for (a, b) in line.c.iter_mut().zip(&line.table[cand]) {
                *a += b;
            }
        }
        line
    }

    /// Whether position `i` may take value `cand` given the other filled entries of its block.
    fn allowed(&self, i: usize, cand: usize) -> bool {
        if self.block <= 1 {
            return true;
        }
        let start = i / self.block * self.block;
        let end = (start + self.block).min(self.x.len());
        (start..end).all(|k| k == i || self.x[k] != cand)
    }

    fn coherence(&self) -> f64 {
        score(&self.c).0 / self.x.len() as f64
    }

    /// One sweep over all positions; returns whether any move was accepted.
    fn sweep(&mut self) -> bool {
        let mut moved = false;
        let count = self.x.len() as f64;
        for i in 0..self.x.len() {
            let old = self.x[i];
            let cur = score(&self.c);
            let mut best: Option<(usize, (f64, f64))> = None;
            for cand in 0..self.table.len() {
                if cand == old || !self.allowed(i, cand) {
                    continue;
                }
                let trial: Vec<C64> = self
                    .c
                    .iter()
                    .enumerate()
                    .map(|(d, a)| a - self.table[old][d] + self.table[cand][d])
                    .collect();
                let s = score(&trial);
                if better(s, best.map_or(cur, |b| b.1), count) {
                    best = Some((cand, s));
                }
            }
            if let Some((cand, _)) = best {
                for d in 0..self.c.len() {
                    self.c[d] += self.table[cand][d] - self.table[old][d];
                }
                self.x[i] = cand;
                moved = true;
            }
        }
        self.recompute();
        moved
    }

    fn recompute(&mut self) {
        let mut c = vec![zero(); self.c.len()];
        for &x in &self.x {
            for (a, b) in c.iter_mut().zip(&self.table[x]) {
                *a += b;
            }
        }
        self.c = c;
    }
}

/// Two-dimensional design for MC training: group `j` transmits on antenna
/// `s_j` and selects receive antennas `r_{j,0..L_r}`.
struct Grid {
    et: Vec<Vec<C64>>,
    er: Vec<Vec<C64>>,
    g_r: usize,
    s: Vec<usize>,
    r: Vec<Vec<usize>>,
    c: Vec<C64>,
}

impl Grid {
    fn rows(&self) -> usize {
        self.r.iter().map(Vec::len).sum()
    }

    fn coherence(&self) -> f64 {
        score(&self.c).0 / self.rows() as f64
    }

    /// `c + sign * et[s] ⊗ v` for an arbitrary receive-side vector `v`.
    fn with_outer(&self, s: usize, v: &[C64], sign: f64) -> Vec<C64> {
        self.add_outer(&self.c, s, v, sign)
    }

    fn add_outer(&self, base: &[C64], s: usize, v: &[C64], sign: f64) -> Vec<C64> {
        let mut out = base.to_vec();
        for (dt, &t) in self.et[s].iter().enumerate() {
            let tt = t * sign;
            let row = &mut out[dt * self.g_r..(dt + 1) * self.g_r];
            for (o, &rv) in row.iter_mut().zip(v) {
                *o += tt * rv;
            }
        }
        out
    }

    fn rx_sum(&self, rows: &[usize]) -> Vec<C64> {
        let mut v = vec![zero(); self.g_r];
        for &r in rows {
            for (a, b) in v.iter_mut().zip(&self.er[r]) {
                *a += b;
            }
        }
        v
    }

    fn recompute(&mut self) {
        self.c = vec![zero(); self.c.len()];
        for j in 0..self.s.len() {
            let v = self.rx_sum(&self.r[j]);
            self.c = self.with_outer(self.s[j], &v, 1.0);
        }
    }

    fn init(n_t: usize, n_r: usize, g_t: usize, g_r: usize, m_t: usize, l_r: usize) -> Self {
        let mut grid = Self {
            et: phase_table(n_t, g_t, 1.0),
            er: phase_table(n_r, g_r, -1.0),
            g_r,
            s: Vec::with_capacity(m_t),
            r: Vec::with_capacity(m_t),
            c: vec![zero(); g_t * g_r],
        };
        for _ in 0..m_t {
            let rows_before = grid.rows() as f64 + 1.0;
            let mut best: Option<(usize, usize, (f64, f64))> = None;
            for s in 0..n_t {
                for r in 0..n_r {
                    let trial = grid.with_outer(s, &grid.er[r], 1.0);
                    let sc = score(&trial);
                    if best.is_none_or(|b| better(sc, b.2, rows_before)) {
                        best = Some((s, r, sc));
                    }
                }
            }
            let (s, r0, _) = best.expect("at least one antenna on each side");
            grid.c = grid.with_outer(s, &grid.er[r0], 1.0);
            let mut rows = vec![r0];
            for _ in 1..l_r {
                let mut best_r: Option<(usize, (f64, f64))> = None;
                for r in 0..n_r {
                    if rows.contains(&r) {
                        continue;
                    }
                    let trial = grid.with_outer(s, &grid.er[r], 1.0);
                    let sc = score(&trial);
                    if best_r.is_none_or(|b| better(sc, b.1, rows_before)) {
                        best_r = Some((r, sc));
                    }
                }
                let (r, _) = best_r.expect("L_r <= N_r");
                grid.c = grid.with_outer(s, &grid.er[r], 1.0);
                rows.push(r);
            }
            grid.s.push(s);
            grid.r.push(rows);
        }
        grid
    }

    fn sweep(&mut self) -> bool {
        let mut moved = false;
        let scale = self.rows() as f64;
        // Transmit indices first.
        for j in 0..self.s.len() {
            let v = self.rx_sum(&self.r[j]);
            let base = self.with_outer(self.s[j], &v, -1.0);
            let cur = score(&self.c);
            let mut best: Option<(usize, (f64, f64))> = None;
            for s in 0..self.et.len() {
                if s == self.s[j] {
                    continue;
                }
                let sc = score(&self.add_outer(&base, s, &v, 1.0));
                if better(sc, best.map_or(cur, |b| b.1), scale) {
                    best = Some((s, sc));
                }
            }
            if let Some((s, _)) = best {
                self.c = self.add_outer(&base, s, &v, 1.0);
                self.s[j] = s;
                moved = true;
            }
        }
        // Then receive rows, group by group.
        for j in 0..self.s.len() {
            for l in 0..self.r[j].len() {
                let old = self.r[j][l];
                let cur = score(&self.c);
                let mut best: Option<(usize, (f64, f64))> = None;
                for r in 0..self.er.len() {
                    if self.r[j].contains(&r) {
                        continue;
                    }
                    let diff: Vec<C64> = self.er[r].iter().zip(&self.er[old]).map(|(a, b)| a - b).collect();
                    let trial = self.with_outer(self.s[j], &diff, 1.0);
                    let sc = score(&trial);
                    if better(sc, best.map_or(cur, |b| b.1), scale) {
                        best = Some((r, sc));
                    }
                }
                if let Some((r, _)) = best {
                    let diff: Vec<C64> = self.er[r].iter().zip(&self.er[old]).map(|(a, b)| a - b).collect();
                    self.c = self.with_outer(self.s[j], &diff, 1.0);
                    self.r[j][l] = r;
                    moved = true;
                }
            }
        }
        self.recompute();
        moved
    }
}

fn improved(prev: f64, next: f64) -> bool {
    next < prev - 1e-12
}

/// Greedy selection training for A5 at both ends. Returns the plan and the
/// per-sweep coherence of `A = ΦΨ` for the `G_t x G_r` dictionaries.
///
/// SC mode: `M_t` transmit antennas and `M_r` receive antennas shared by all
/// precoders; the two sides decouple and are optimized separately.
/// MC mode: every precoder gets its own `L_r` receive antennas (`m_r = L_r`).
pub fn greedy_training(
    mode: TrainingMode,
    shape: &TrainingShape,
    m_t: usize,
    m_r: usize,
    g_t: usize,
    g_r: usize,
) -> Result<(TrainingPlan, GreedyReport)> {
    shape.validate()?;
    if m_t == 0 || m_r == 0 || g_t == 0 || g_r == 0 {
        return Err(Error::InvalidParameter("M_t, M_r, G_t and G_r must be positive".into()));
    }
    if g_t * g_r < 2 {
        return Err(Error::InvalidParameter("coherence needs at least two dictionary columns".into()));
    }
    let (n_t, n_r, l_r) = (shape.n_t, shape.n_r, shape.l_r);
    let mut history = Vec::new();
    let mut sweeps = 0;
    let (p, q_blocks) = match mode {
        TrainingMode::SingleCombiner => {
            let mut tx = Line::new(n_t, g_t, 1.0, m_t, 1);
            let mut rx = Line::new(n_r, g_r, -1.0, m_r, l_r);
            let overall = |tx: &Line, rx: &Line| {
                let mt = if g_t > 1 { tx.coherence() } else { 0.0 };
                let mr = if g_r > 1 { rx.coherence() } else { 0.0 };
                mt.max(mr)
            };
            history.push(overall(&tx, &rx));
            let (mut ct, mut cr) = (tx.coherence(), rx.coherence());
            while sweeps < MAX_SWEEPS {
                tx.sweep();
                rx.sweep();
                sweeps += 1;
                history.push(overall(&tx, &rx));
                let (nt, nr) = (tx.coherence(), rx.coherence());
                let progress = improved(ct, nt) || improved(cr, nr);
                (ct, cr) = (nt, nr);
                if !progress {
                    break;
                }
            }
            (selection_matrix(n_t, &tx.x), vec![selection_matrix(n_r, &rx.x)])
        }
        TrainingMode::MultipleCombiner => {
            if m_r != l_r {
                return Err(Error::InvalidParameter(format!(
                    "multiple-combiner training uses L_r = {l_r} combiners per precoder, got {m_r}"
                )));
            }
            let mut grid = Grid::init(n_t, n_r, g_t, g_r, m_t, l_r);
            history.push(grid.coherence());
            while sweeps < MAX_SWEEPS {
                let before = grid.coherence();
                grid.sweep();
                sweeps += 1;
                let after = grid.coherence();
                history.push(after);
                if !improved(before, after) {
                    break;
                }
            }
            let blocks: Vec<CMatrix> = grid.r.iter().map(|rows| selection_matrix(n_r, rows)).collect();
            (selection_matrix(n_t, &grid.s), blocks)
        }
    };
    let plan = TrainingPlan {
        mode,
        arch_tx: ArchitectureKind::A5,
        arch_rx: ArchitectureKind::A5,
        shape: *shape,
        p,
        q_blocks,
        total_power: m_t as f64,
        seed: None,
    };
    plan.validate()?;
    Ok((plan, GreedyReport { coherence_history: history, sweeps }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_dictionary, ArrayGeometry};
    use crate::training::{measurement_dictionary, mutual_coherence};

    fn dicts(n_t: usize, n_r: usize, g_t: usize, g_r: usize) -> (CMatrix, CMatrix) {
        (
            make_dictionary(&ArrayGeometry::ula(n_t), g_t).unwrap(),
            make_dictionary(&ArrayGeometry::ula(n_r), g_r).unwrap(),
        )
    }

    #[test]
    fn reported_coherence_matches_gram_computation() {
        let shape = TrainingShape { n_t: 8, n_r: 4, l_t: 1, l_r: 2 };
        let (a_bsd, a_msd) = dicts(8, 4, 12, 6);
        for mode in [TrainingMode::MultipleCombiner, TrainingMode::SingleCombiner] {
            let m_r = if mode == TrainingMode::MultipleCombiner { 2 } else { 4 };
            let (plan, report) = greedy_training(mode, &shape, 6, m_r, 12, 6).unwrap();
            let a = measurement_dictionary(&plan, &a_bsd, &a_msd).unwrap();
            let mu = mutual_coherence(&a).unwrap();
            assert!((mu - report.coherence_history.last().unwrap()).abs() < 1e-10, "{mode:?}");
            assert!(report.coherence_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn full_sampling_reaches_zero_coherence() {
        let shape = TrainingShape { n_t: 4, n_r: 2, l_t: 1, l_r: 2 };
        let (plan, report) = greedy_training(TrainingMode::MultipleCombiner, &shape, 4, 2, 4, 2).unwrap();
        assert!(report.coherence_history[0] < 1e-12);
        assert_eq!(report.sweeps, 1);
        let (a_bsd, a_msd) = dicts(4, 2, 4, 2);
        let a = measurement_dictionary(&plan, &a_bsd, &a_msd).unwrap();
        assert!(mutual_coherence(&a).unwrap() < 1e-12);
    }

    #[test]
    fn greedy_is_deterministic() {
        let shape = TrainingShape { n_t: 16, n_r: 8, l_t: 1, l_r: 2 };
        let a = greedy_training(TrainingMode::MultipleCombiner, &shape, 10, 2, 16, 8).unwrap();
        let b = greedy_training(TrainingMode::MultipleCombiner, &shape, 10, 2, 16, 8).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
