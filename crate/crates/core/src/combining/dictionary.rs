//! Dictionaries of feasible analog combiner columns.
//!
//! Binary (switch) dictionaries are kept implicit: column `mask` of a block
//! is the indicator of the set bits of `mask`, and the correlations with a
//! residual are computed with a subset-sum recurrence instead of a product
//! with a `N_r x 2^{N_r}` matrix.

use std::ops::Range;

use crate::architectures::{subsets, ArchitectureKind};
use crate::channel::{make_dictionary, ArrayGeometry};
use crate::linalg::one;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Largest array for which the full A3 binary dictionary is enumerated.
pub const A3_MAX_ANTENNAS: usize = 16;

#[derive(Clone, Debug)]
enum Columns {
    Dense { matrix: CMatrix, blocks: Vec<usize> },
    Binary { ranges: Vec<Range<usize>>, offsets: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Dictionary {
    pub arch: ArchitectureKind,
    n_r: usize,
    num_blocks: usize,
    columns: Columns,
}

impl Dictionary {
    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn ncols(&self) -> usize {
        match &self.columns {
            Columns::Dense { matrix, .. } => matrix.ncols(),
            Columns::Binary { offsets, .. } => *offsets.last().unwrap(),
        }
    }

    /// Number of blocks; A2/A4 admit one selected column per block.
    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn one_per_block(&self) -> bool {
        self.arch.uses_subsets()
    }

    fn locate(&self, j: usize, offsets: &[usize]) -> (usize, usize) {
        let b = offsets.partition_point(|&o| o <= j) - 1;
        (b, j - offsets[b] + 1)
    }

    pub fn block_of(&self, j: usize) -> usize {
        match &self.columns {
            Columns::Dense { blocks, .. } => blocks[j],
            Columns::Binary { offsets, .. } => self.locate(j, offsets).0,
        }
    }

    pub fn column(&self, j: usize) -> CVector {
        match &self.columns {
            Columns::Dense { matrix, .. } => matrix.column(j).into_owned(),
            Columns::Binary { ranges, offsets } => {
                let (b, mask) = self.locate(j, offsets);
                let mut col = CVector::zeros(self.n_r);
                for (bit, i) in ranges[b].clone().enumerate() {
                    if mask >> bit & 1 == 1 {
                        col[i] = one();
                    }
                }
                col
            }
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let cols: Vec<CVector> = (0..self.ncols()).map(|j| self.column(j)).collect();
        CMatrix::from_columns(&cols)
    }

    /// `‖d_j^* R‖^2 / ‖d_j‖^2` for every column `d_j`.
    pub fn scores(&self, r: &CMatrix) -> Vec<f64> {
        match &self.columns {
            Columns::Dense { matrix, .. } => {
                let corr = matrix.ad_mul(r);
                (0..matrix.ncols())
                    .map(|j| corr.row(j).norm_squared() / matrix.column(j).norm_squared())
                    .collect()
            }
            Columns::Binary { ranges, .. } => {
                let n_s = r.ncols();
                let mut out = Vec::with_capacity(self.ncols());
                for range in ranges {
                    let len = range.len();
                    let mut sums = vec![C64::new(0.0, 0.0); (1usize << len) * n_s];
                    for mask in 1usize..(1 << len) {
                        let low = mask.trailing_zeros() as usize;
                        let rest = mask & (mask - 1);
                        let row = range.start + low;
                        let mut energy = 0.0;
                        for s in 0..n_s {
                            let v = sums[rest * n_s + s] + r[(row, s)];
                            sums[mask * n_s + s] = v;
                            energy += v.norm_sqr();
                        }
                        out.push(energy / mask.count_ones() as f64);
                    }
                }
                out
            }
        }
    }
}

fn steering_block(n: usize, resolution: usize) -> Result<CMatrix> {
    let d = make_dictionary(&ArrayGeometry::ula(n), resolution)?;
    Ok(d * C64::new((n as f64).sqrt(), 0.0))
}

/// Dictionary of feasible analog combining vectors for `arch`.
///
/// `resolution` is the number of steering directions (A1) or the number per
/// subarray (A2); it is ignored by the switch architectures.
pub fn build_dictionary(arch: ArchitectureKind, n_r: usize, l_r: usize, resolution: usize) -> Result<Dictionary> {
    if n_r == 0 || l_r == 0 || l_r > n_r {
        return Err(Error::InvalidParameter(format!("need 1 <= L_r <= N_r, got L_r = {l_r}, N_r = {n_r}")));
    }
    let columns = match arch {
        ArchitectureKind::A1 => {
            if resolution == 0 {
                return Err(Error::InvalidParameter("A1 dictionary resolution must be positive".into()));
            }
            Columns::Dense { matrix: steering_block(n_r, resolution)?, blocks: vec![0; resolution] }
        }
        ArchitectureKind::A2 => {
            if resolution == 0 {
                return Err(Error::InvalidParameter("A2 subarray dictionary resolution must be positive".into()));
            }
            let ranges = subsets(n_r, l_r);
            let mut matrix = CMatrix::zeros(n_r, resolution * l_r);
            let mut blocks = Vec::with_capacity(resolution * l_r);
            for (b, range) in ranges.iter().enumerate() {
                let block = steering_block(range.len(), resolution)?;
                matrix
                    .view_mut((range.start, b * resolution), (range.len(), resolution))
                    .copy_from(&block);
                blocks.extend(std::iter::repeat_n(b, resolution));
            }
            Columns::Dense { matrix, blocks }
        }
        ArchitectureKind::A3 | ArchitectureKind::A4 => {
            let ranges = if arch == ArchitectureKind::A3 {
                if n_r > A3_MAX_ANTENNAS {
                    return Err(Error::InvalidParameter(format!(
                        "A3 dictionary for N_r = {n_r} has 2^{n_r} - 1 columns (limit N_r <= {A3_MAX_ANTENNAS}); \
                         use the subset architecture A4 instead"
                    )));
                }
                vec![0..n_r]
            } else {
                let r = subsets(n_r, l_r);
                if let Some(big) = r.iter().find(|s| s.len() > A3_MAX_ANTENNAS) {
                    return Err(Error::InvalidParameter(format!(
                        "A4 subset of {} antennas exceeds the binary dictionary limit",
                        big.len()
                    )));
                }
                r
            };
            let mut offsets = vec![0];
            for r in &ranges {
                offsets.push(offsets.last().unwrap() + (1usize << r.len()) - 1);
            }
            Columns::Binary { ranges, offsets }
        }
        ArchitectureKind::A5 | ArchitectureKind::A6 => {
            return Err(Error::InvalidParameter(format!(
                "{arch} combiners are designed by antenna selection, not from a dictionary"
            )))
        }
    };
    let num_blocks = if arch.uses_subsets() { l_r } else { 1 };
    Ok(Dictionary { arch, n_r, num_blocks, columns })
}
