//! The six analog receiver architectures and the component power model.
//!
//! * A1: fully connected phase shifters.
//! * A2: phase shifters, one contiguous antenna subset per RF chain.
//! * A3: fully connected switches (any binary combiner).
//! * A4: switches, one contiguous subset per RF chain.
//! * A5: antenna selection, one antenna per RF chain.
//! * A6: antenna selection, one antenna out of each subset.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, one, zero};
use crate::{CMatrix, CVector, Error, Result};

/// Tolerance on `|w| = 1` for phase-shifter entries.
pub const UNIT_MODULUS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchitectureKind {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 6] = [Self::A1, Self::A2, Self::A3, Self::A4, Self::A5, Self::A6];

    /// Each RF chain is tied to a designated contiguous antenna subset.
    pub fn uses_subsets(self) -> bool {
        matches!(self, Self::A2 | Self::A4 | Self::A6)
    }

    pub fn is_phase_shifter(self) -> bool {
        matches!(self, Self::A1 | Self::A2)
    }

    pub fn is_selection(self) -> bool {
        matches!(self, Self::A5 | Self::A6)
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
            Self::A4 => "A4",
            Self::A5 => "A5",
            Self::A6 => "A6",
        };
        f.write_str(s)
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Ok(Self::A1),
            "A2" => Ok(Self::A2),
            "A3" => Ok(Self::A3),
            "A4" => Ok(Self::A4),
            "A5" => Ok(Self::A5),
            "A6" => Ok(Self::A6),
            other => Err(Error::InvalidParameter(format!("unknown architecture '{other}'"))),
        }
    }
}

/// Architecture choice plus the number of active switches per RF chain used
/// by the A3/A4 power formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: ArchitectureKind,
    #[serde(default)]
    pub n_active_a3: Option<usize>,
    #[serde(default)]
    pub n_active_a4: Option<usize>,
}

impl From<ArchitectureKind> for Architecture {
    fn from(kind: ArchitectureKind) -> Self {
        Self { kind, n_active_a3: None, n_active_a4: None }
    }
}

impl Architecture {
    /// Switch counts set to half of the switches reachable per RF chain:
    /// `N_A3 = round(N_r / 2)` and `N_A4 = max(1, round(M_sub / 2))`.
    pub fn half_active(kind: ArchitectureKind, n_r: usize, l_r: usize) -> Self {
        let mut arch = Self::from(kind);
        match kind {
            ArchitectureKind::A3 => arch.n_active_a3 = Some(((n_r as f64) / 2.0).round().max(1.0) as usize),
            ArchitectureKind::A4 => {
                let m_sub = n_r as f64 / l_r.max(1) as f64;
                arch.n_active_a4 = Some((m_sub / 2.0).round().max(1.0) as usize);
            }
            _ => {}
        }
        arch
    }

    pub fn validate(&self, n_r: usize, l_r: usize) -> Result<()> {
        if n_r == 0 || l_r == 0 {
            return Err(Error::InvalidParameter("N_r and L_r must be positive".into()));
        }
        if l_r > n_r {
            return Err(Error::InvalidParameter(format!("L_r = {l_r} exceeds N_r = {n_r}")));
        }
        let min_block = n_r / l_r;
        match self.kind {
            ArchitectureKind::A3 => {
                let n = self.n_active_a3.unwrap_or(1);
                if n == 0 || n > n_r {
                    return Err(Error::InvalidParameter(format!("N_A3 = {n} must be in 1..={n_r}")));
                }
            }
            ArchitectureKind::A4 => {
                let n = self.n_active_a4.unwrap_or(1);
                if n == 0 || n > min_block {
                    return Err(Error::InvalidParameter(format!(
                        "N_A4 = {n} must be in 1..={min_block}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Contiguous antenna subsets, one per RF chain. Block sizes differ by at
/// most one; the first `N_r mod L_r` blocks take the extra antenna.
pub fn subsets(n_r: usize, l_r: usize) -> Vec<Range<usize>> {
    assert!(l_r >= 1 && l_r <= n_r, "need 1 <= L_r <= N_r");
    let base = n_r / l_r;
    let extra = n_r % l_r;
    let mut start = 0;
    (0..l_r)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn is_unit(z: crate::C64, tol: f64) -> bool {
    (z.norm() - 1.0).abs() <= tol
}

fn is_binary(z: crate::C64) -> bool {
    z.im == 0.0 && (z.re == 0.0 || z.re == 1.0)
}

/// Membership of a single column in the architecture's feasible set,
/// restricted to `subset` for A2/A4/A6.
pub fn column_feasible(col: &[crate::C64], kind: ArchitectureKind, subset: Option<&Range<usize>>, tol: f64) -> bool {
    let inside = |i: usize| subset.is_none_or(|s| s.contains(&i));
    match kind {
        ArchitectureKind::A1 => col.iter().all(|&z| is_unit(z, tol)),
        ArchitectureKind::A2 => col
            .iter()
            .enumerate()
            .all(|(i, &z)| if inside(i) { is_unit(z, tol) } else { z == zero() }),
        ArchitectureKind::A3 | ArchitectureKind::A4 => {
            col.iter().enumerate().all(|(i, &z)| is_binary(z) && (inside(i) || z == zero()))
                && col.iter().any(|&z| z == one())
        }
        ArchitectureKind::A5 | ArchitectureKind::A6 => {
            col.iter().all(|&z| is_binary(z))
                && col.iter().filter(|&&z| z == one()).count() == 1
                && col.iter().enumerate().all(|(i, &z)| inside(i) || z == zero())
        }
    }
}

/// Whether an `N_r x L_r` analog combiner is realizable by the architecture.
/// Column `l` of a subset architecture must live in subset `l`.
pub fn is_feasible(w_rf: &CMatrix, kind: ArchitectureKind, n_r: usize, tol: f64) -> Result<bool> {
    let l_r = w_rf.ncols();
    if w_rf.nrows() != n_r || l_r == 0 || l_r > n_r {
        return Err(Error::Dimension(format!(
            "combiner is {}x{}, expected {n_r}xL_r with 1 <= L_r <= {n_r}",
            w_rf.nrows(),
            l_r
        )));
    }
    let blocks = kind.uses_subsets().then(|| subsets(n_r, l_r));
    for l in 0..l_r {
        let col: Vec<crate::C64> = w_rf.column(l).iter().copied().collect();
        if !column_feasible(&col, kind, blocks.as_ref().map(|b| &b[l]), tol) {
            return Ok(false);
        }
    }
    if kind == ArchitectureKind::A5 {
        for i in 0..n_r {
            if w_rf.row(i).iter().filter(|&&z| z != zero()).count() > 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Selection matrix with columns `e_{support[l]}`.
pub fn selection_matrix(n_r: usize, support: &[usize]) -> CMatrix {
    let mut w = CMatrix::zeros(n_r, support.len());
    for (l, &i) in support.iter().enumerate() {
        w[(i, l)] = one();
    }
    w
}

/// Draws a random feasible `N_r x L_r` analog combiner.
pub fn random_combiner<R: Rng + ?Sized>(kind: ArchitectureKind, n_r: usize, l_r: usize, rng: &mut R) -> Result<CMatrix> {
    Architecture::from(kind).validate(n_r, l_r)?;
    let blocks = subsets(n_r, l_r);
    let mut w = CMatrix::zeros(n_r, l_r);
    for l in 0..l_r {
        let range = if kind.uses_subsets() { blocks[l].clone() } else { 0..n_r };
        match kind {
            ArchitectureKind::A1 | ArchitectureKind::A2 => {
                for i in range {
                    w[(i, l)] = cis(rng.random_range(0.0..std::f64::consts::TAU));
                }
            }
            ArchitectureKind::A3 | ArchitectureKind::A4 => {
                let col = random_binary_column(n_r, range, rng);
                w.set_column(l, &col);
            }
            ArchitectureKind::A6 => {
                w[(rng.random_range(range), l)] = one();
            }
            ArchitectureKind::A5 => {}
        }
    }
    if kind == ArchitectureKind::A5 {
        let rows = sample(rng, n_r, l_r).into_vec();
        w = selection_matrix(n_r, &rows);
    }
    Ok(w)
}

/// Bernoulli(1/2) entries on `range`, resampled until nonzero.
pub fn random_binary_column<R: Rng + ?Sized>(n_r: usize, range: Range<usize>, rng: &mut R) -> CVector {
    loop {
        let col = CVector::from_fn(n_r, |i, _| {
            if range.contains(&i) && rng.random_bool(0.5) {
                one()
            } else {
                zero()
            }
        });
        if col.iter().any(|&z| z != zero()) {
            return col;
        }
    }
}

/// Component power figures in milliwatts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub p_lna: f64,
    pub p_adc: f64,
    pub p_rfc: f64,
    pub p_bb: f64,
    pub p_ps: f64,
    pub p_sw: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self { p_lna: 20.0, p_adc: 200.0, p_rfc: 40.0, p_bb: 200.0, p_ps: 30.0, p_sw: 5.0 }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.p_lna, self.p_adc, self.p_rfc, self.p_bb, self.p_ps, self.p_sw];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("power model values must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Receiver power in mW. Switch counts fall back to the half-active rule when unset.
pub fn receiver_power(arch: &Architecture, n_r: usize, l_r: usize, model: &PowerModel) -> f64 {
    let (nr, lr) = (n_r as f64, l_r as f64);
    let chains = lr * (model.p_rfc + model.p_adc) + model.p_bb;
    let defaults = Architecture::half_active(arch.kind, n_r, l_r.max(1));
    match arch.kind {
        ArchitectureKind::A1 => nr * (lr + 1.0) * model.p_lna + nr * lr * model.p_ps + chains,
        ArchitectureKind::A2 => nr * model.p_lna + nr * model.p_ps + chains,
        ArchitectureKind::A3 => {
            let n = arch.n_active_a3.or(defaults.n_active_a3).unwrap_or(1) as f64;
            (nr + lr * n) * model.p_lna + lr * n * model.p_sw + chains
        }
        ArchitectureKind::A4 => {
            let n = arch.n_active_a4.or(defaults.n_active_a4).unwrap_or(1) as f64;
            lr * n * (model.p_lna + model.p_sw) + chains
        }
        ArchitectureKind::A5 | ArchitectureKind::A6 => lr * (model.p_lna + model.p_sw) + chains,
    }
}

/// One RF chain per antenna, no analog combining network.
pub fn full_digital_power(n_r: usize, model: &PowerModel) -> f64 {
    n_r as f64 * (model.p_lna + model.p_rfc + model.p_adc) + model.p_bb
}

/// `η = P_arch / P_D`.
pub fn power_reduction(arch: &Architecture, n_r: usize, l_r: usize, model: &PowerModel) -> f64 {
    receiver_power(arch, n_r, l_r, model) / full_digital_power(n_r, model)
}

/// Bits per second from spectral efficiency and bandwidth.
pub fn bit_rate(spectral_efficiency: f64, bandwidth_hz: f64) -> f64 {
    spectral_efficiency * bandwidth_hz
}
