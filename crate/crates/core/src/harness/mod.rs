//! Seeded Monte Carlo experiments.
//!
//! Each trial draws its channel, training sequences and noise from seeds
//! derived from `base_seed`, the trial index and the method, so any single
//! trial can be replayed with [`nmse_trial`] and reruns are bit-identical.
//! Trials run in parallel (capped by `HYBRIDBEAM_THREADS`) and are reduced in
//! trial order.

pub mod spec;
pub mod table;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::architectures::{full_digital_power, power_reduction, receiver_power, Architecture, ArchitectureKind};
use crate::channel::{make_dictionary, nmse, sample_channel, ArrayGeometry};
use crate::combining::{design_combiner, mutual_information_span, optimal_unconstrained};
use crate::config::{db_to_linear, linear_to_db, SystemConfig};
use crate::estimation::{exhaustive_search_estimate, ls_estimate_separable, omp_estimate, StopRule};
use crate::random::{derive_seed, Stream};
use crate::training::{
    exhaustive_search_plan, greedy_training, ls_orthogonal_training, measurement_dictionary, mutual_coherence,
    optimal_split, random_training, simulate_measurements, TrainingMode, TrainingPlan, TrainingShape,
};
use crate::{CMatrix, Error, Result};

pub use spec::{ChannelSpec, ConfigFile, ExperimentKind, ExperimentSpec, Method, RunConfig, TrainingDesign};
pub use table::{config_hash, git_describe, Cell, Table};

pub const THREADS_ENV: &str = "HYBRIDBEAM_THREADS";

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: f64::NAN, stderr: f64::NAN, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, stderr, n }
}

/// Mean NMSE in dB with the standard error mapped through the log (delta method).
fn nmse_db(s: &Summary) -> (f64, f64) {
    (linear_to_db(s.mean), 10.0 / std::f64::consts::LN_10 * s.stderr / s.mean)
}

fn run_in_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

/// Runs the experiment and appends `seed` and `config_hash` columns.
pub fn run_experiment(run: &RunConfig) -> Result<Table> {
    run.validate()?;
    let mut table = run_in_pool(|| match run.experiment.kind {
        ExperimentKind::NmseVsSnr | ExperimentKind::NmseVsTrainingSteps => run_nmse(run),
        ExperimentKind::SeVsRfChains | ExperimentKind::RateVsPower => run_combining(run),
        ExperimentKind::CoherenceVsM => run_coherence(run),
        ExperimentKind::PowerTable => Ok(run_power_table(run)),
    })?;
    table.add_constant_column("seed", Cell::Text(run.system.base_seed.to_string()));
    table.add_constant_column("config_hash", Cell::Text(config_hash(run)?));
    Ok(table)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn method_seed(base: u64, trial: u64, method: &Method, steps: usize, extra: u64, stream: Stream) -> u64 {
    derive_seed(base ^ fnv1a(&method.to_string()) ^ (steps as u64).rotate_left(32) ^ extra, trial, stream)
}

fn shape_of(config: &SystemConfig) -> TrainingShape {
    TrainingShape { n_t: config.n_t, n_r: config.n_r, l_t: config.l_t, l_r: config.l_r }
}

struct Dictionaries {
    a_bsd: CMatrix,
    a_msd: CMatrix,
}

impl Dictionaries {
    fn new(config: &SystemConfig) -> Result<Self> {
        Ok(Self {
            a_bsd: make_dictionary(&ArrayGeometry::ula(config.n_t), config.g_t)?,
            a_msd: make_dictionary(&ArrayGeometry::ula(config.n_r), config.g_r)?,
        })
    }
}

/// `(M_t, M_r)` for a method at a number of training steps, or `None` when
/// the method is not defined there (LS below `N_t N_r` measurements).
fn training_counts(method: &Method, config: &SystemConfig, steps: usize) -> Result<Option<(TrainingMode, usize, usize)>> {
    Ok(match method {
        Method::Omp { mode: TrainingMode::MultipleCombiner, .. } => {
            Some((TrainingMode::MultipleCombiner, steps, config.l_r))
        }
        Method::Omp { mode: TrainingMode::SingleCombiner, .. } => {
            let split = optimal_split(steps * config.l_r, config.g_t, config.g_r)?;
            if split.degenerate {
                return Err(Error::Config(format!(
                    "{method}: {} measurements have no split with M_t <= G_t and M_r <= G_r",
                    steps * config.l_r
                )));
            }
            Some((TrainingMode::SingleCombiner, split.m_t, split.m_r))
        }
        Method::Ls { .. } => {
            let m_t = steps * config.l_r / config.n_r;
            (m_t >= config.n_t).then_some((TrainingMode::SingleCombiner, m_t, config.n_r))
        }
        Method::BeamScan { .. } => Some((TrainingMode::SingleCombiner, config.g_t, config.g_r)),
    })
}

enum Prepared {
    Omp { plan: TrainingPlan, a: CMatrix },
    Ls { plan: TrainingPlan },
    BeamScan { plan: TrainingPlan, paths: usize },
}

impl Prepared {
    fn plan(&self) -> &TrainingPlan {
        match self {
            Prepared::Omp { plan, .. } | Prepared::Ls { plan } | Prepared::BeamScan { plan, .. } => plan,
        }
    }
}

type GreedyCache = HashMap<(String, usize), TrainingPlan>;

fn greedy_plans(methods: &[Method], config: &SystemConfig, steps: &[usize]) -> Result<GreedyCache> {
    let mut cache = GreedyCache::new();
    for m in methods {
        if let Method::Omp { design: TrainingDesign::Greedy, .. } = m {
            for &s in steps {
                if let Some((mode, m_t, m_r)) = training_counts(m, config, s)? {
                    let (plan, _) = greedy_training(mode, &shape_of(config), m_t, m_r, config.g_t, config.g_r)?;
                    cache.insert((m.to_string(), s), plan);
                }
            }
        }
    }
    Ok(cache)
}

fn prepare(
    method: &Method,
    config: &SystemConfig,
    dicts: &Dictionaries,
    steps: usize,
    trial: u64,
    greedy: &GreedyCache,
) -> Result<Option<Prepared>> {
    let Some((mode, m_t, m_r)) = training_counts(method, config, steps)? else {
        return Ok(None);
    };
    let shape = shape_of(config);
    let seed = method_seed(config.base_seed, trial, method, steps, 0, Stream::Training);
    Ok(Some(match *method {
        Method::Omp { tx, rx, design, .. } => {
            let plan = match design {
                TrainingDesign::Random => random_training(tx, rx, mode, &shape, m_t, m_r, seed)?,
                TrainingDesign::Greedy => match greedy.get(&(method.to_string(), steps)) {
                    Some(p) => p.clone(),
                    None => greedy_training(mode, &shape, m_t, m_r, config.g_t, config.g_r)?.0,
                },
            };
            let a = measurement_dictionary(&plan, &dicts.a_bsd, &dicts.a_msd)?;
            Prepared::Omp { plan, a }
        }
        Method::Ls { tx, rx } => Prepared::Ls { plan: ls_orthogonal_training(tx, rx, &shape, m_t, m_r)? },
        Method::BeamScan { paths } => {
            Prepared::BeamScan { plan: exhaustive_search_plan(&dicts.a_bsd, &dicts.a_msd, &shape)?, paths }
        }
    }))
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    prepared: &Prepared,
    method: &Method,
    h: &CMatrix,
    config: &SystemConfig,
    dicts: &Dictionaries,
    omp_max_sparsity: Option<usize>,
    steps: usize,
    snr_db: f64,
    trial: u64,
) -> Result<f64> {
    let rho = config.sigma_n2 * db_to_linear(snr_db);
    let noise_seed = method_seed(config.base_seed, trial, method, steps, snr_db.to_bits(), Stream::Noise);
    let meas = simulate_measurements(h, prepared.plan(), rho, config.sigma_n2, noise_seed)?;
    let h_hat = match prepared {
        Prepared::Omp { a, .. } => {
            let stop = StopRule { max_sparsity: omp_max_sparsity, epsilon: Some(meas.noise_power) };
            omp_estimate(a, &meas.y, rho, stop, &dicts.a_bsd, &dicts.a_msd)?.h_hat
        }
        Prepared::Ls { plan } => ls_estimate_separable(plan, &meas.y, rho)?,
        Prepared::BeamScan { plan, paths } => {
            exhaustive_search_estimate(plan, &meas.y, *paths, rho, &dicts.a_bsd, &dicts.a_msd)?.h_hat
        }
    };
    nmse(h, &h_hat)
}

fn channel_seed(config: &SystemConfig, trial: u64) -> u64 {
    derive_seed(config.base_seed, trial, Stream::Channel)
}

/// Replays one trial of an NMSE experiment. Returns `None` when the method
/// is undefined at `steps`.
pub fn nmse_trial(run: &RunConfig, method: &Method, snr_db: f64, steps: usize, trial: u64) -> Result<Option<f64>> {
    let config = &run.system;
    let dicts = Dictionaries::new(config)?;
    let params = run.experiment.channel().params(config);
    let h = sample_channel(&params, config, channel_seed(config, trial))?.h;
    let Some(prepared) = prepare(method, config, &dicts, steps, trial, &GreedyCache::new())? else {
        return Ok(None);
    };
    evaluate(&prepared, method, &h, config, &dicts, run.experiment.omp_max_sparsity, steps, snr_db, trial).map(Some)
}

fn run_nmse(run: &RunConfig) -> Result<Table> {
    let config = &run.system;
    let spec = &run.experiment;
    let methods = spec.methods();
    let by_snr = spec.kind == ExperimentKind::NmseVsSnr;
    // (snr_db, steps) per sweep point.
    let points: Vec<(f64, usize)> = if by_snr {
        spec.sweep().into_iter().map(|s| (s, spec.training_steps())).collect()
    } else {
        spec.integer_sweep("training steps")?.into_iter().map(|s| (config.snr_db, s)).collect()
    };
    let mut distinct_steps: Vec<usize> = points.iter().map(|p| p.1).collect();
    distinct_steps.dedup();
    let greedy = greedy_plans(&methods, config, &distinct_steps)?;
    let dicts = Dictionaries::new(config)?;
    let params = spec.channel().params(config);

    // Validate the method/step combinations once before spending trials.
    for &(_, steps) in &points {
        for m in &methods {
            prepare(m, config, &dicts, steps, 0, &greedy).map_err(|e| match e {
                Error::InvalidParameter(msg) | Error::Infeasible(msg) | Error::Dimension(msg) => {
                    Error::Config(format!("{m} at {steps} training steps: {msg}"))
                }
                other => other,
            })?;
        }
    }

    // results[trial][point][method]
    let results: Vec<Vec<Vec<Option<f64>>>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let h = sample_channel(&params, config, channel_seed(config, trial))?.h;
            let mut per_point = vec![vec![None; methods.len()]; points.len()];
            for (mi, m) in methods.iter().enumerate() {
                let mut cached: Option<(usize, Option<Prepared>)> = None;
                for (pi, &(snr_db, steps)) in points.iter().enumerate() {
                    if cached.as_ref().is_none_or(|(s, _)| *s != steps) {
                        cached = Some((steps, prepare(m, config, &dicts, steps, trial, &greedy)?));
                    }
                    if let Some((_, Some(prep))) = &cached {
                        per_point[pi][mi] = Some(evaluate(
                            prep,
                            m,
                            &h,
                            config,
                            &dicts,
                            spec.omp_max_sparsity,
                            steps,
                            snr_db,
                            trial,
                        )?);
                    }
                }
            }
            Ok(per_point)
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        if by_snr { "snr_db" } else { "training_steps" },
        if by_snr { "training_steps" } else { "snr_db" },
        "method",
        "measurements",
        "nmse_db",
        "nmse_db_stderr",
        "trials",
    ]);
    for (pi, &(snr_db, steps)) in points.iter().enumerate() {
        for (mi, m) in methods.iter().enumerate() {
            let values: Vec<f64> = results.iter().filter_map(|r| r[pi][mi]).collect();
            if values.is_empty() {
                continue;
            }
            let (mt, mr) = match training_counts(m, config, steps)? {
                Some((TrainingMode::MultipleCombiner, m_t, _)) => (m_t, config.l_r),
                Some((_, m_t, m_r)) => (m_t, m_r),
                None => continue,
            };
            let (db, se) = nmse_db(&summarize(&values));
            let (first, second): (Cell, Cell) =
                if by_snr { (snr_db.into(), steps.into()) } else { (steps.into(), snr_db.into()) };
            table.push(vec![first, second, m.to_string().into(), (mt * mr).into(), db.into(), se.into(), values.len().into()]);
        }
    }
    Ok(table)
}

/// Spectral efficiency of every architecture and of the unconstrained
/// combiner for one channel realization.
pub struct CombiningTrial {
    pub per_arch: Vec<f64>,
    pub unconstrained: f64,
}

pub fn combining_trial(
    h: &CMatrix,
    archs: &[ArchitectureKind],
    l_r: usize,
    n_s: usize,
    snr: f64,
    options: &crate::combining::DesignOptions,
) -> Result<CombiningTrial> {
    let n_t = h.ncols();
    let (pre, w_opt) = optimal_unconstrained(h, n_s, snr)?;
    let h_tilde = h * &pre.f;
    let unconstrained = mutual_information_span(&h_tilde, &w_opt, snr, n_t)?;
    let per_arch = archs
        .iter()
        .map(|&a| design_combiner(a, &h_tilde, &w_opt, l_r, snr, n_t, options).map(|d| d.mutual_info))
        .collect::<Result<_>>()?;
    Ok(CombiningTrial { per_arch, unconstrained })
}

fn run_combining(run: &RunConfig) -> Result<Table> {
    let config = &run.system;
    let spec = &run.experiment;
    let archs = spec.architectures();
    let l_values = spec.integer_sweep("L_r")?;
    let params = spec.channel().params(config);
    let snr = config.snr_linear();
    let n_s_of = |l_r: usize| if spec.streams_follow_rf_chains { l_r } else { config.n_s };

    // results[trial][point]
    let results: Vec<Vec<CombiningTrial>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let h = sample_channel(&params, config, channel_seed(config, trial))?.h;
            l_values
                .iter()
                .map(|&l_r| combining_trial(&h, &archs, l_r, n_s_of(l_r), snr, &spec.design))
                .collect()
        })
        .collect::<Result<_>>()?;

    let rate = spec.kind == ExperimentKind::RateVsPower;
    let mut table = if rate {
        Table::new(&[
            "arch",
            "L_r",
            "N_s",
            "power_mw",
            "spectral_efficiency",
            "spectral_efficiency_stderr",
            "bit_rate_bps",
            "bit_rate_bps_stderr",
            "trials",
        ])
    } else {
        Table::new(&["arch", "L_r", "N_s", "snr_db", "spectral_efficiency", "spectral_efficiency_stderr", "trials"])
    };
    for (pi, &l_r) in l_values.iter().enumerate() {
        let n_s = n_s_of(l_r);
        let mut series: Vec<(String, Vec<f64>, f64)> = archs
            .iter()
            .enumerate()
            .map(|(ai, &a)| {
                let vals = results.iter().map(|r| r[pi].per_arch[ai]).collect();
                let power = receiver_power(&Architecture::from(a), config.n_r, l_r, &run.power_model);
                (a.to_string(), vals, power)
            })
            .collect();
        series.push((
            "unconstrained".into(),
            results.iter().map(|r| r[pi].unconstrained).collect(),
            full_digital_power(config.n_r, &run.power_model),
        ));
        for (name, vals, power) in series {
            let s = summarize(&vals);
            let row: Vec<Cell> = if rate {
                vec![
                    name.into(),
                    l_r.into(),
                    n_s.into(),
                    power.into(),
                    s.mean.into(),
                    s.stderr.into(),
                    (s.mean * config.bandwidth_hz).into(),
                    (s.stderr * config.bandwidth_hz).into(),
                    s.n.into(),
                ]
            } else {
                vec![name.into(), l_r.into(), n_s.into(), config.snr_db.into(), s.mean.into(), s.stderr.into(), s.n.into()]
            };
            table.push(row);
        }
    }
    Ok(table)
}

fn run_coherence(run: &RunConfig) -> Result<Table> {
    let config = &run.system;
    let dicts = Dictionaries::new(config)?;
    let shape = shape_of(config);
    let bsd_conj = dicts.a_bsd.map(|z| z.conj());
    let mut table = Table::new(&[
        "m",
        "m_t",
        "m_r",
        "real_m_t",
        "welch_bound",
        "degenerate",
        "random_a1_coherence",
        "random_a1_coherence_stderr",
        "trials",
    ]);
    for m in run.experiment.integer_sweep("M")? {
        let split = optimal_split(m, config.g_t, config.g_r)?;
        let values: Vec<f64> = (0..config.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(config.base_seed ^ (m as u64).rotate_left(32), trial, Stream::Training);
                let plan = random_training(
                    ArchitectureKind::A1,
                    ArchitectureKind::A1,
                    TrainingMode::SingleCombiner,
                    &shape,
                    split.m_t,
                    split.m_r,
                    seed,
                )?;
                // μ(A) of a Kronecker-structured A is the larger of the two factor coherences.
                let tx = mutual_coherence(&(plan.effective_p().transpose() * &bsd_conj))?;
                let rx = mutual_coherence(&plan.q_blocks[0].ad_mul(&dicts.a_msd))?;
                Ok(tx.max(rx))
            })
            .collect::<Result<_>>()?;
        let s = summarize(&values);
        table.push(vec![
            m.into(),
            split.m_t.into(),
            split.m_r.into(),
            split.real_m_t.into(),
            split.bound.into(),
            split.degenerate.into(),
            s.mean.into(),
            s.stderr.into(),
            s.n.into(),
        ]);
    }
    Ok(table)
}

fn run_power_table(run: &RunConfig) -> Table {
    let config = &run.system;
    let model = &run.power_model;
    let mut table = Table::new(&["arch", "n_r", "l_r", "power_mw", "eta"]);
    let l_values = run.experiment.integer_sweep("L_r").unwrap_or_default();
    for &l_r in &l_values {
        for a in run.experiment.architectures() {
            let arch = Architecture::from(a);
            table.push(vec![
                a.to_string().into(),
                config.n_r.into(),
                l_r.into(),
                receiver_power(&arch, config.n_r, l_r, model).into(),
                power_reduction(&arch, config.n_r, l_r, model).into(),
            ]);
        }
    }
    table.push(vec![
        "FD".into(),
        config.n_r.into(),
        config.n_r.into(),
        full_digital_power(config.n_r, model).into(),
        1.0.into(),
    ]);
    table
}
