//! Clustered narrowband mmWave channels and their beamspace representation.
//!
//! Arrays are uniform linear arrays. Angular dictionaries sample the spatial
//! frequency `sin(theta)` uniformly over `[-1, 1)`, so that with `G = N`
//! elements and half-wavelength spacing the dictionary is a unitary DFT
//! matrix (up to a diagonal sign pattern).

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::linalg::{cis, frobenius_sq};
use crate::random::{complex_gaussian, rng_from_seed};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    pub spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidParameter("array needs at least one element".into()));
        }
        if !(spacing_wavelengths > 0.0) {
            return Err(Error::InvalidParameter("element spacing must be positive".into()));
        }
        Ok(Self { num_elements, spacing_wavelengths })
    }

    /// Half-wavelength ULA.
    pub fn ula(num_elements: usize) -> Self {
        assert!(num_elements >= 1, "array needs at least one element");
        Self { num_elements, spacing_wavelengths: 0.5 }
    }
}

/// Unit-norm steering vector for a given spatial frequency `u = sin(angle)`.
pub fn array_response_spatial(geometry: &ArrayGeometry, u: f64) -> CVector {
    let n = geometry.num_elements;
    let norm = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * geometry.spacing_wavelengths * u;
    CVector::from_fn(n, |k, _| cis(step * k as f64) * norm)
}

/// Unit-norm steering vector, entry `k = exp(j 2π d k sin(angle)) / sqrt(N)`.
pub fn array_response(geometry: &ArrayGeometry, angle: f64) -> CVector {
    array_response_spatial(geometry, angle.sin())
}

/// Grid point `g` of a `grid_size`-point grid on `sin(theta) ∈ [-1, 1)`.
pub fn grid_spatial_frequency(g: usize, grid_size: usize) -> f64 {
    -1.0 + 2.0 * g as f64 / grid_size as f64
}

/// Physical angles of the grid points, in `[-π/2, π/2)`.
pub fn grid_angles(grid_size: usize) -> Vec<f64> {
    (0..grid_size).map(|g| grid_spatial_frequency(g, grid_size).asin()).collect()
}

/// `N x G` dictionary of steering vectors on the spatial-frequency grid.
pub fn make_dictionary(geometry: &ArrayGeometry, grid_size: usize) -> Result<CMatrix> {
    if grid_size == 0 {
        return Err(Error::InvalidParameter("dictionary grid must have at least one point".into()));
    }
    let n = geometry.num_elements;
    let mut d = CMatrix::zeros(n, grid_size);
    for g in 0..grid_size {
        d.set_column(g, &array_response_spatial(geometry, grid_spatial_frequency(g, grid_size)));
    }
    Ok(d)
}

/// `Ψ = conj(A_BSD) ⊗ A_MSD`, so that `vec(H) = Ψ x` with column-major `vec`
/// and `x[g_t * G_r + g_r]` the gain of grid pair `(g_r, g_t)`.
pub fn channel_dictionary(a_bsd: &CMatrix, a_msd: &CMatrix) -> CMatrix {
    a_bsd.map(|z| z.conj()).kronecker(a_msd)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_rays: usize,
    pub quantized: bool,
    pub grid_tx: usize,
    pub grid_rx: usize,
}

impl ChannelParams {
    /// Simple on-grid channel: 4 single-ray clusters.
    pub fn on_grid(grid_tx: usize, grid_rx: usize) -> Self {
        Self { n_clusters: 4, n_rays: 1, quantized: true, grid_tx, grid_rx }
    }

    /// Off-grid cluster channel: 4 clusters of 6 rays.
    pub fn clustered(grid_tx: usize, grid_rx: usize) -> Self {
        Self { n_clusters: 4, n_rays: 6, quantized: false, grid_tx, grid_rx }
    }

    pub fn num_paths(&self) -> usize {
        self.n_clusters * self.n_rays
    }

    pub fn validate(&self, n_t: usize, n_r: usize) -> Result<()> {
        if self.n_clusters == 0 || self.n_rays == 0 || self.grid_tx == 0 || self.grid_rx == 0 {
            return Err(Error::InvalidParameter(
                "n_clusters, n_rays, grid_tx and grid_rx must be positive".into(),
            ));
        }
        let k = self.num_paths();
        let cap = (self.grid_tx * self.grid_rx).min(n_t * n_r);
        if k > cap {
            return Err(Error::InvalidParameter(format!(
                "{k} paths exceed min(G_t*G_r, N_t*N_r) = {cap}"
            )));
        }
        Ok(())
    }
}

/// One propagation path: complex gain, angle of arrival and angle of departure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// `[re, im]` of the path gain (before the `sqrt(N_t N_r / K)` prefactor).
    #[serde(with = "crate::linalg::serde_c64")]
    pub gain: C64,
    pub aoa: f64,
    pub aod: f64,
    /// Grid indices `(g_t, g_r)` for on-grid paths.
    pub grid_index: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub seed: Option<u64>,
    pub params: ChannelParams,
    pub paths: Vec<Path>,
    /// `N_r x N_t` channel matrix.
    pub h: CMatrix,
    /// Beamspace coefficients (length `G_t G_r`); present for on-grid channels.
    pub x: Option<CVector>,
}

/// Serializable replay record of a channel draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub seed: Option<u64>,
    pub params: ChannelParams,
    pub n_t: usize,
    pub n_r: usize,
    pub paths: Vec<Path>,
}

impl ChannelRealization {
    /// Builds `H = sqrt(N_t N_r / K) Σ β a_MS(φ) a_BS(α)^*` from explicit paths.
    pub fn from_paths(params: ChannelParams, n_t: usize, n_r: usize, paths: Vec<Path>, seed: Option<u64>) -> Result<Self> {
        params.validate(n_t, n_r)?;
        if paths.len() != params.num_paths() {
            return Err(Error::Dimension(format!(
                "expected {} paths, got {}",
                params.num_paths(),
                paths.len()
            )));
        }
        let tx = ArrayGeometry::ula(n_t);
        let rx = ArrayGeometry::ula(n_r);
        let scale = ((n_t * n_r) as f64 / paths.len() as f64).sqrt();
        let mut h = CMatrix::zeros(n_r, n_t);
        let mut x = params.quantized.then(|| CVector::zeros(params.grid_tx * params.grid_rx));
        for p in &paths {
            let (a_ms, a_bs) = match p.grid_index {
                Some((gt, gr)) if params.quantized => (
                    array_response_spatial(&rx, grid_spatial_frequency(gr, params.grid_rx)),
                    array_response_spatial(&tx, grid_spatial_frequency(gt, params.grid_tx)),
                ),
                _ => (array_response(&rx, p.aoa), array_response(&tx, p.aod)),
            };
            h += (a_ms * a_bs.adjoint()) * (p.gain * scale);
            if let (Some(x), Some((gt, gr))) = (x.as_mut(), p.grid_index) {
                x[gt * params.grid_rx + gr] += p.gain * scale;
            }
        }
        Ok(Self { seed, params, paths, h, x })
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            seed: self.seed,
            params: self.params.clone(),
            n_t: self.n_t(),
            n_r: self.n_r(),
            paths: self.paths.clone(),
        }
    }

    pub fn from_record(record: &ChannelRecord) -> Result<Self> {
        Self::from_paths(record.params.clone(), record.n_t, record.n_r, record.paths.clone(), record.seed)
    }
}

/// Draws a channel realization; deterministic in `seed`.
pub fn sample_channel(params: &ChannelParams, config: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    let (n_t, n_r) = (config.n_t, config.n_r);
    params.validate(n_t, n_r)?;
    let mut rng = rng_from_seed(seed);
    let k = params.num_paths();
    let paths = if params.quantized {
        // Distinct grid pairs so that x has exactly K nonzeros.
        let picks = sample(&mut rng, params.grid_tx * params.grid_rx, k).into_vec();
        picks
            .into_iter()
            .map(|idx| {
                let (gt, gr) = (idx / params.grid_rx, idx % params.grid_rx);
                Path {
                    gain: complex_gaussian(&mut rng, 1.0),
                    aoa: grid_spatial_frequency(gr, params.grid_rx).asin(),
                    aod: grid_spatial_frequency(gt, params.grid_tx).asin(),
                    grid_index: Some((gt, gr)),
                }
            })
            .collect()
    } else {
        (0..k)
            .map(|_| {
                let gain = complex_gaussian(&mut rng, 1.0);
                let aoa = rng.random_range(0.0..2.0 * PI);
                let aod = rng.random_range(0.0..2.0 * PI);
                Path { gain, aoa, aod, grid_index: None }
            })
            .collect()
    };
    ChannelRealization::from_paths(params.clone(), n_t, n_r, paths, Some(seed))
}

/// `‖H_true - H_est‖_F^2 / ‖H_true‖_F^2`.
pub fn nmse(h_true: &CMatrix, h_est: &CMatrix) -> Result<f64> {
    if h_true.shape() != h_est.shape() {
        return Err(Error::Dimension(format!(
            "nmse shapes differ: {:?} vs {:?}",
            h_true.shape(),
            h_est.shape()
        )));
    }
    let denom = frobenius_sq(h_true);
    if denom == 0.0 {
        return Err(Error::InvalidParameter("reference channel is all zero".into()));
    }
    Ok(frobenius_sq(&(h_true - h_est)) / denom)
}
