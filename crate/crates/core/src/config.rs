use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Global scenario record shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub l_t: usize,
    pub l_r: usize,
    pub n_s: usize,
    pub g_t: usize,
    pub g_r: usize,
    pub snr_db: f64,
    pub sigma_n2: f64,
    pub bandwidth_hz: f64,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_t: 64,
            n_r: 16,
            l_t: 8,
            l_r: 4,
            n_s: 4,
            g_t: 64,
            g_r: 16,
            snr_db: 0.0,
            sigma_n2: 1.0,
            bandwidth_hz: 500e6,
            trials: 100,
            base_seed: 1,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("l_t", self.l_t),
            ("l_r", self.l_r),
            ("n_s", self.n_s),
            ("g_t", self.g_t),
            ("g_r", self.g_r),
            ("trials", self.trials),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.n_s <= self.l_r && self.l_r <= self.n_r) {
            return Err(Error::Config(format!(
                "need n_s <= l_r <= n_r, got n_s={}, l_r={}, n_r={}",
                self.n_s, self.l_r, self.n_r
            )));
        }
        if !(self.n_s <= self.l_t && self.l_t <= self.n_t) {
            return Err(Error::Config(format!(
                "need n_s <= l_t <= n_t, got n_s={}, l_t={}, n_t={}",
                self.n_s, self.l_t, self.n_t
            )));
        }
        if !(self.sigma_n2 >= 0.0) || !self.snr_db.is_finite() || !(self.bandwidth_hz >= 0.0) {
            return Err(Error::Config("sigma_n2, snr_db and bandwidth_hz must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Linear SNR, `rho / sigma_n2`.
    pub fn snr_linear(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    /// Average received power `rho = sigma_n2 * 10^(snr_db/10)`.
    pub fn rho(&self) -> f64 {
        self.sigma_n2 * self.snr_linear()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
