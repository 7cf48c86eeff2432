//! Experiment descriptions and run configuration files.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::architectures::{ArchitectureKind, PowerModel};
use crate::channel::ChannelParams;
use crate::combining::DesignOptions;
use crate::config::SystemConfig;
use crate::training::TrainingMode;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    NmseVsSnr,
    NmseVsTrainingSteps,
    SeVsRfChains,
    RateVsPower,
    CoherenceVsM,
    PowerTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingDesign {
    Random,
    Greedy,
}

/// Channel estimation pipeline: training design plus estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    /// OMP on `A = ΦΨ` with the residual threshold set to the noise power.
    Omp { tx: ArchitectureKind, rx: ArchitectureKind, mode: TrainingMode, design: TrainingDesign },
    /// Least squares with orthogonal single-combiner training (`M_r = N_r`).
    Ls { tx: ArchitectureKind, rx: ArchitectureKind },
    /// Scan of all `G_t G_r` beam pairs keeping the `paths` strongest.
    BeamScan { paths: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Omp { tx, rx, mode, design } => {
                let m = match mode {
                    TrainingMode::SingleCombiner => "SC",
                    TrainingMode::MultipleCombiner => "MC",
                };
                let d = match design {
                    TrainingDesign::Random => "random",
                    TrainingDesign::Greedy => "greedy",
                };
                write!(f, "OMP {m} {tx}/{rx} {d}")
            }
            Method::Ls { tx, rx } => write!(f, "LS {tx}/{rx}"),
            Method::BeamScan { paths } => write!(f, "beam scan K={paths}"),
        }
    }
}

/// Channel model without the grid sizes, which come from the system config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub n_clusters: usize,
    pub n_rays: usize,
    pub quantized: bool,
}

impl ChannelSpec {
    pub const ON_GRID: Self = Self { n_clusters: 4, n_rays: 1, quantized: true };
    pub const CLUSTERED: Self = Self { n_clusters: 4, n_rays: 6, quantized: false };

    pub fn params(&self, config: &SystemConfig) -> ChannelParams {
        ChannelParams {
            n_clusters: self.n_clusters,
            n_rays: self.n_rays,
            quantized: self.quantized,
            grid_tx: config.g_t,
            grid_rx: config.g_r,
        }
    }
}

/// One experiment. Omitted optional fields take per-kind defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// SNR in dB, training steps, `L_r` or `M` depending on `kind`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub architectures: Option<Vec<ArchitectureKind>>,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    /// Training steps used by `NmseVsSnr`.
    #[serde(default)]
    pub training_steps: Option<usize>,
    /// Cap on the OMP support size; the residual threshold applies as well.
    #[serde(default)]
    pub omp_max_sparsity: Option<usize>,
    #[serde(default)]
    pub design: DesignOptions,
    /// Use `N_s = L_r` in combining sweeps; otherwise `N_s` comes from the config.
    #[serde(default = "default_true")]
    pub streams_follow_rf_chains: bool,
}

fn default_true() -> bool {
    true
}

fn range(lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|v| v as f64).collect()
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            sweep: None,
            architectures: None,
            methods: None,
            channel: None,
            training_steps: None,
            omp_max_sparsity: None,
            design: DesignOptions::default(),
            streams_follow_rf_chains: true,
        }
    }

    pub fn with_sweep(mut self, sweep: Vec<f64>) -> Self {
        self.sweep = Some(sweep);
        self
    }

    pub fn sweep(&self) -> Vec<f64> {
        if let Some(s) = &self.sweep {
            return s.clone();
        }
        match self.kind {
            ExperimentKind::NmseVsSnr => vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            ExperimentKind::NmseVsTrainingSteps => vec![25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 256.0, 300.0],
            ExperimentKind::SeVsRfChains => range(1, 8),
            ExperimentKind::RateVsPower | ExperimentKind::PowerTable => range(1, 16),
            ExperimentKind::CoherenceVsM => vec![64.0, 128.0, 256.0, 512.0, 1024.0],
        }
    }

    pub fn architectures(&self) -> Vec<ArchitectureKind> {
        self.architectures.clone().unwrap_or_else(|| ArchitectureKind::ALL.to_vec())
    }

    pub fn methods(&self) -> Vec<Method> {
        use ArchitectureKind::*;
        if let Some(m) = &self.methods {
            return m.clone();
        }
        match self.kind {
            ExperimentKind::NmseVsSnr => vec![
                Method::Omp { tx: A1, rx: A1, mode: TrainingMode::SingleCombiner, design: TrainingDesign::Random },
                Method::Omp { tx: A5, rx: A5, mode: TrainingMode::MultipleCombiner, design: TrainingDesign::Random },
                Method::Ls { tx: A1, rx: A1 },
                Method::BeamScan { paths: 4 },
            ],
            _ => vec![
                Method::Omp { tx: A1, rx: A5, mode: TrainingMode::MultipleCombiner, design: TrainingDesign::Random },
                Method::Omp { tx: A5, rx: A5, mode: TrainingMode::MultipleCombiner, design: TrainingDesign::Random },
                Method::Ls { tx: A1, rx: A1 },
            ],
        }
    }

    pub fn channel(&self) -> ChannelSpec {
        self.channel.unwrap_or(match self.kind {
            ExperimentKind::SeVsRfChains | ExperimentKind::RateVsPower => ChannelSpec::CLUSTERED,
            _ => ChannelSpec::ON_GRID,
        })
    }

    pub fn training_steps(&self) -> usize {
        self.training_steps.unwrap_or(256)
    }

    /// Integer sweep values; errors on fractional or nonpositive entries.
    pub fn integer_sweep(&self, what: &str) -> Result<Vec<usize>> {
        self.sweep()
            .into_iter()
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!("{what} sweep value {v} is not a positive integer")))
                }
            })
            .collect()
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        config.validate()?;
        let sweep = self.sweep();
        if sweep.is_empty() {
            return Err(Error::Config("sweep must not be empty".into()));
        }
        if sweep.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if self.architectures.as_ref().is_some_and(|a| a.is_empty()) {
            return Err(Error::Config("architecture list must not be empty".into()));
        }
        if self.methods.as_ref().is_some_and(|m| m.is_empty()) {
            return Err(Error::Config("method list must not be empty".into()));
        }
        let channel = self.channel();
        match self.kind {
            ExperimentKind::NmseVsSnr | ExperimentKind::NmseVsTrainingSteps => {
                if self.kind == ExperimentKind::NmseVsTrainingSteps {
                    self.integer_sweep("training steps")?;
                }
                if self.training_steps() == 0 {
                    return Err(Error::Config("training_steps must be positive".into()));
                }
                channel
                    .params(config)
                    .validate(config.n_t, config.n_r)
                    .map_err(|e| Error::Config(format!("channel: {e}")))?;
                for m in self.methods() {
                    if let Method::BeamScan { paths } = m {
                        if paths == 0 || paths > config.g_t * config.g_r {
                            return Err(Error::Config(format!("beam scan needs 1 <= K <= G_t G_r, got {paths}")));
                        }
                    }
                    if let Method::Omp { tx, rx, mode: TrainingMode::MultipleCombiner, .. } = m {
                        if tx.uses_subsets() && config.l_t > config.n_t || rx.uses_subsets() && config.l_r > config.n_r {
                            return Err(Error::Config(format!("{m}: more RF chains than antennas")));
                        }
                    }
                    if let Method::Omp { tx, rx, design: TrainingDesign::Greedy, .. } = m {
                        if tx != ArchitectureKind::A5 || rx != ArchitectureKind::A5 {
                            return Err(Error::Config(format!("{m}: greedy training is defined for A5/A5 only")));
                        }
                    }
                }
            }
            ExperimentKind::SeVsRfChains | ExperimentKind::RateVsPower | ExperimentKind::PowerTable => {
                for l_r in self.integer_sweep("L_r")? {
                    if l_r > config.n_r {
                        return Err(Error::Config(format!("L_r = {l_r} exceeds N_r = {}", config.n_r)));
                    }
                    let n_s = if self.streams_follow_rf_chains { l_r } else { config.n_s };
                    if self.kind != ExperimentKind::PowerTable && (n_s > l_r || n_s > config.n_t) {
                        return Err(Error::Config(format!(
                            "N_s = {n_s} must satisfy N_s <= L_r = {l_r} and N_s <= N_t = {}",
                            config.n_t
                        )));
                    }
                }
                if self.kind != ExperimentKind::PowerTable {
                    channel
                        .params(config)
                        .validate(config.n_t, config.n_r)
                        .map_err(|e| Error::Config(format!("channel: {e}")))?;
                    if self.architectures().contains(&ArchitectureKind::A3)
                        && config.n_r > crate::combining::A3_MAX_ANTENNAS
                    {
                        return Err(Error::Config(format!(
                            "A3 combining needs N_r <= {}, got {}",
                            crate::combining::A3_MAX_ANTENNAS,
                            config.n_r
                        )));
                    }
                }
            }
            ExperimentKind::CoherenceVsM => {
                self.integer_sweep("M")?;
            }
        }
        Ok(())
    }
}

/// A complete experiment run: system, power model and experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub power_model: PowerModel,
    pub experiment: ExperimentSpec,
}

impl RunConfig {
    pub fn new(system: SystemConfig, experiment: ExperimentSpec) -> Self {
        Self { system, power_model: PowerModel::default(), experiment }
    }

    /// Parses TOML, falling back to JSON; the experiment section is required.
    pub fn parse(text: &str) -> Result<Self> {
        ConfigFile::parse(text)?.into_run()
    }

    pub fn load(path: &Path) -> Result<Self> {
        ConfigFile::load(path)?.into_run()
    }

    pub fn validate(&self) -> Result<()> {
        self.power_model.validate()?;
        self.experiment.validate(&self.system)
    }
}

/// Contents of a configuration file. The experiment section is optional so
/// that a file can also just provide system parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub power_model: PowerModel,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
}

impl ConfigFile {
    /// Parses TOML, falling back to JSON.
    pub fn parse(text: &str) -> Result<Self> {
        match toml::from_str::<ConfigFile>(text) {
            Ok(c) => Ok(c),
            Err(toml_err) => serde_json::from_str(text)
                .map_err(|_| Error::Config(format!("not a valid TOML or JSON configuration: {toml_err}"))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn into_run(self) -> Result<RunConfig> {
        let experiment = self
            .experiment
            .ok_or_else(|| Error::Config("configuration has no [experiment] section".into()))?;
        Ok(RunConfig { system: self.system, power_model: self.power_model, experiment })
    }
}
