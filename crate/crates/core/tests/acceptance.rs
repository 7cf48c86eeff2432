//! Acceptance suite. Prints one PASS/FAIL line per criterion. Failures make
//! the process exit nonzero only with `ACCEPTANCE_STRICT=1`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hybridbeam::architectures::{full_digital_power, receiver_power, Architecture, ArchitectureKind, PowerModel};
use hybridbeam::channel::{make_dictionary, nmse, sample_channel, ArrayGeometry, ChannelParams};
use hybridbeam::combining::{
    build_dictionary, exhaustive_combiner, hybrid_antenna_selection, mutual_information, optimal_unconstrained,
    somp_combiner, DEFAULT_EXHAUSTIVE_CAP,
};
use hybridbeam::config::SystemConfig;
use hybridbeam::estimation::{ls_estimate_separable, ls_minimum_mse, omp, omp_estimate, StopRule};
use hybridbeam::harness::{run_experiment, ChannelSpec, ExperimentKind, ExperimentSpec, Method, RunConfig, Table, TrainingDesign};
use hybridbeam::random::{complex_gaussian_matrix, complex_gaussian_vector, rng_from_seed};
use hybridbeam::training::{
    closed_form_m_t, ls_orthogonal_training, measurement_dictionary, mutual_coherence, optimal_split, phi_matrix,
    random_training, simulate_measurements, TrainingMode, TrainingShape,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;

use ArchitectureKind::*;

type Outcome = (bool, String);

// ---------------------------------------------------------------- 1

fn power_model_exactness() -> Outcome {
    let m = PowerModel::default();
    let p = |k| receiver_power(&Architecture::from(k), 16, 4, &m);
    // Hand-computed at N_r = 16, L_r = 4 with N_A3 = 8 and N_A4 = 2 active switches.
    let expected = [(A1, 4680.0), (A2, 1960.0), (A3, 2280.0), (A4, 1360.0), (A5, 1260.0), (A6, 1260.0)];
    let pd = full_digital_power(16, &m);
    let mut ok = (pd - 4360.0).abs() < 0.5;
    let mut detail = format!("P_D = {pd} mW");
    for (k, e) in expected {
        let got = p(k);
        ok &= (got - e).abs() < 0.5;
        detail.push_str(&format!(", {k} = {got}"));
    }
    (ok, detail)
}

// ---------------------------------------------------------------- 2

fn kronecker_coherence_identity() -> Outcome {
    let (n_t, n_r, g_t, g_r) = (8, 6, 12, 10);
    let a_bsd = make_dictionary(&ArrayGeometry::ula(n_t), g_t).unwrap();
    let a_msd = make_dictionary(&ArrayGeometry::ula(n_r), g_r).unwrap();
    let shape = TrainingShape { n_t, n_r, l_t: 2, l_r: 2 };
    let mut rng = rng_from_seed(2002);
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let tx = ArchitectureKind::ALL[rng.random_range(0..6)];
        let rx = ArchitectureKind::ALL[rng.random_range(0..6)];
        let m_t = rng.random_range(3..=10);
        let m_r = 2 * rng.random_range(2..=5);
        let plan = random_training(tx, rx, TrainingMode::SingleCombiner, &shape, m_t, m_r, 7000 + i).unwrap();
        let a = measurement_dictionary(&plan, &a_bsd, &a_msd).unwrap();
        let mu = mutual_coherence(&a).unwrap();
        let mu_t = mutual_coherence(&(plan.effective_p().transpose() * a_bsd.map(|z| z.conj()))).unwrap();
        let mu_r = mutual_coherence(&plan.q_blocks[0].ad_mul(&a_msd)).unwrap();
        worst = worst.max((mu - mu_t.max(mu_r)).abs());
    }
    (worst < 1e-12, format!("max |μ(A) - max(μ_t, μ_r)| = {worst:.2e} over 50 plans"))
}

// ---------------------------------------------------------------- 3

fn welch(m: f64, n: f64) -> f64 {
    ((n - m) / (m * (n - 1.0))).max(0.0).sqrt()
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn welch_split() -> Outcome {
    let mut rng = rng_from_seed(3003);
    let mut worst_real = 0.0f64;
    for _ in 0..20 {
        let g_t = rng.random_range(8..=128);
        let g_r = rng.random_range(8..=128);
        let m = rng.random_range(g_t.max(g_r)..g_t * g_r);
        let lo = (m as f64 / g_r as f64).max(1.0);
        let hi = (g_t as f64).min(m as f64);
        let f = |x: f64| welch(x, g_t as f64).max(welch(m as f64 / x, g_r as f64));
        let x_num = golden_min(f, lo, hi);
        worst_real = worst_real.max((closed_form_m_t(m, g_t, g_r) - x_num).abs());
    }
    let mut int_ok = true;
    for m in [64usize, 128, 256, 512, 1024] {
        let s = optimal_split(m, 64, 16).unwrap();
        let best = (1..=m)
            .filter(|d| m % d == 0 && *d <= 64 && m / d <= 16)
            .map(|d| (welch(d as f64, 64.0).max(welch((m / d) as f64, 16.0)), d))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        int_ok &= (s.bound - best.0).abs() < 1e-12 && s.m_t * s.m_r == m;
    }
    (worst_real < 1e-6 && int_ok, format!("real split error {worst_real:.2e}; integer splits match brute force: {int_ok}"))
}

// ---------------------------------------------------------------- 4

fn ls_optimality() -> Outcome {
    let shape = TrainingShape { n_t: 8, n_r: 8, l_t: 2, l_r: 2 };
    let (sigma2, rho) = (1.0, 1.0);
    let mut worst_offdiag = 0.0f64;
    let mut worst_mse = 0.0f64;
    let mut detail = String::new();
    for (ai, arch) in ArchitectureKind::ALL.into_iter().enumerate() {
        let plan = ls_orthogonal_training(arch, arch, &shape, 8, 8).unwrap();
        let phi = phi_matrix(&plan);
        let g = phi.ad_mul(&phi);
        let diag: f64 = (0..g.nrows()).map(|i| g[(i, i)].norm_sqr()).sum();
        let off: f64 = g.iter().map(|z| z.norm_sqr()).sum::<f64>() - diag;
        worst_offdiag = worst_offdiag.max((off / diag).sqrt());

        let mut rng = rng_from_seed(4004 + ai as u64);
        let h = complex_gaussian_matrix(&mut rng, 8, 8, 1.0);
        let trials = 1000;
        let mut total = 0.0;
        for t in 0..trials {
            let y = simulate_measurements(&h, &plan, rho, sigma2, 40_000 * (ai as u64 + 1) + t).unwrap().y;
            let est = ls_estimate_separable(&plan, &y, rho).unwrap();
            total += (&est - &h).norm_squared();
        }
        let mse = total / trials as f64;
        let target = ls_minimum_mse(8, 8, sigma2, plan.total_power, rho);
        let rel = (mse / target - 1.0).abs();
        worst_mse = worst_mse.max(rel);
        detail.push_str(&format!("{arch}:{:+.1}% ", 100.0 * (mse / target - 1.0)));
    }
    (
        worst_offdiag < 1e-10 && worst_mse < 0.05,
        format!("off-diagonal mass {worst_offdiag:.1e}; MSE vs minimum {}", detail.trim_end()),
    )
}

// ---------------------------------------------------------------- 5

fn noiseless_recovery() -> Outcome {
    let config = SystemConfig { n_t: 64, n_r: 16, l_t: 8, l_r: 4, g_t: 64, g_r: 16, ..Default::default() };
    let params = ChannelParams::on_grid(64, 16);
    let shape = TrainingShape { n_t: 64, n_r: 16, l_t: 8, l_r: 4 };
    let a_bsd = make_dictionary(&ArrayGeometry::ula(64), 64).unwrap();
    let a_msd = make_dictionary(&ArrayGeometry::ula(16), 16).unwrap();
    let trials = 200;
    let mut successes = 0;
    let mut worst_db = f64::NEG_INFINITY;
    for t in 0..trials {
        let ch = sample_channel(&params, &config, 50_000 + t).unwrap();
        let plan = random_training(A5, A5, TrainingMode::MultipleCombiner, &shape, 64, 4, 60_000 + t).unwrap();
        let a = measurement_dictionary(&plan, &a_bsd, &a_msd).unwrap();
        let y = simulate_measurements(&ch.h, &plan, 1.0, 0.0, 0).unwrap().y;
        let est = omp_estimate(&a, &y, 1.0, StopRule { max_sparsity: None, epsilon: Some(0.0) }, &a_bsd, &a_msd).unwrap();
        let mut got = est.support.clone();
        got.sort_unstable();
        let mut truth: Vec<usize> = ch.paths.iter().map(|p| p.grid_index.unwrap()).map(|(gt, gr)| gt * 16 + gr).collect();
        truth.sort_unstable();
        if got == truth {
            successes += 1;
            worst_db = worst_db.max(10.0 * nmse(&ch.h, &est.h_hat).unwrap().log10());
        }
    }
    let rate = successes as f64 / trials as f64;
    (
        rate >= 0.95 && worst_db < -180.0,
        format!("exact support in {successes}/{trials}; worst NMSE on successes {worst_db:.1} dB"),
    )
}

// ---------------------------------------------------------------- 6

fn nmse_by(table: &Table, method: &str, key: &str, value: f64) -> Option<f64> {
    (0..table.rows.len())
        .find(|&r| table.get_text(r, "method").as_deref() == Some(method) && table.get_f64(r, key) == Some(value))
        .and_then(|r| table.get_f64(r, "nmse_db"))
}

fn training_steps_reproduction() -> Outcome {
    let system = SystemConfig { n_t: 64, n_r: 16, l_t: 8, l_r: 4, g_t: 64, g_r: 16, snr_db: 0.0, trials: 200, base_seed: 6, ..Default::default() };
    let omp = |tx| Method::Omp { tx, rx: A5, mode: TrainingMode::MultipleCombiner, design: TrainingDesign::Random };
    let mut spec = ExperimentSpec::new(ExperimentKind::NmseVsTrainingSteps)
        .with_sweep(vec![75.0, 100.0, 150.0, 256.0, 300.0]);
    spec.methods = Some(vec![omp(A1), omp(A5), Method::Ls { tx: A1, rx: A1 }]);
    spec.channel = Some(ChannelSpec::ON_GRID);
    let table = run_experiment(&RunConfig::new(system, spec)).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for tx in [A1, A5] {
        let label = omp(tx).to_string();
        let at75 = nmse_by(&table, &label, "training_steps", 75.0).unwrap();
        ok &= at75 <= -15.0 + 3.0;
        detail.push_str(&format!("{label}: {at75:.1} dB at 75 steps; "));
        for steps in [256.0, 300.0] {
            let o = nmse_by(&table, &label, "training_steps", steps).unwrap();
            let l = nmse_by(&table, "LS A1/A1", "training_steps", steps).unwrap();
            ok &= o <= l - 10.0;
            detail.push_str(&format!("{steps}: {o:.1} vs LS {l:.1}; "));
        }
    }
    (ok, detail.trim_end_matches("; ").to_string())
}

// ---------------------------------------------------------------- 7

fn saturation_property() -> Outcome {
    let system = SystemConfig { n_t: 64, n_r: 16, l_t: 8, l_r: 4, g_t: 64, g_r: 64, trials: 200, base_seed: 7, ..Default::default() };
    let mut spec = ExperimentSpec::new(ExperimentKind::NmseVsSnr).with_sweep(vec![10.0, 20.0]);
    spec.methods = Some(vec![Method::BeamScan { paths: 4 }, Method::Ls { tx: A1, rx: A1 }]);
    spec.channel = Some(ChannelSpec::CLUSTERED);
    spec.training_steps = Some(256);
    let table = run_experiment(&RunConfig::new(system, spec)).unwrap();
    let es = |snr| nmse_by(&table, "beam scan K=4", "snr_db", snr).unwrap();
    let ls = |snr| nmse_by(&table, "LS A1/A1", "snr_db", snr).unwrap();
    let es_gain = es(10.0) - es(20.0);
    let ls_gain = ls(10.0) - ls(20.0);
    (
        es_gain <= 3.0 && (ls_gain - 10.0).abs() <= 2.0,
        format!(
            "beam scan {:.1} -> {:.1} dB (gain {es_gain:.2}); LS {:.1} -> {:.1} dB (gain {ls_gain:.2})",
            es(10.0),
            es(20.0),
            ls(10.0),
            ls(20.0)
        ),
    )
}

// ---------------------------------------------------------------- 8 and 11

fn rate_table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let system = SystemConfig {
            n_t: 64,
            n_r: 16,
            l_t: 8,
            l_r: 4,
            snr_db: 0.0,
            bandwidth_hz: 500e6,
            trials: 200,
            base_seed: 8,
            ..Default::default()
        };
        let spec = ExperimentSpec::new(ExperimentKind::RateVsPower).with_sweep((1..=16).map(|l| l as f64).collect());
        run_experiment(&RunConfig::new(system, spec)).unwrap()
    })
}

fn lookup(table: &Table, arch: &str, l_r: usize, column: &str) -> f64 {
    (0..table.rows.len())
        .find(|&r| table.get_text(r, "arch").as_deref() == Some(arch) && table.get_f64(r, "L_r") == Some(l_r as f64))
        .and_then(|r| table.get_f64(r, column))
        .unwrap()
}

fn combining_ordering() -> Outcome {
    let t = rate_table();
    let se = |a: &str, l| lookup(t, a, l, "spectral_efficiency");
    let mut ok = true;
    let mut detail = String::new();
    for l_r in [2, 4, 6, 8] {
        let a1 = se("A1", l_r);
        let bound = se("unconstrained", l_r);
        let others: Vec<f64> = ["A2", "A3", "A4", "A5", "A6"].iter().map(|a| se(a, l_r)).collect();
        ok &= others.iter().all(|&v| a1 >= v);
        ok &= ["A1", "A2", "A3", "A4", "A5", "A6"].iter().all(|a| se(a, l_r) < bound);
        let (a5, a6) = (se("A5", l_r), se("A6", l_r));
        let gap = (a5 - a6).abs() / a5.max(a6);
        ok &= gap < 0.05;
        detail.push_str(&format!(
            "L_r={l_r}: A1 {a1:.2} A2 {:.2} A3 {:.2} A4 {:.2} A5 {a5:.2} A6 {a6:.2} SVD {bound:.2}; ",
            others[0], others[1], others[2]
        ));
    }
    (ok, detail.trim_end_matches("; ").to_string())
}

fn rate_vs_power() -> Outcome {
    let t = rate_table();
    let model = PowerModel::default();
    let half_pd = full_digital_power(16, &model) / 2.0;
    let archs = ["A1", "A2", "A3", "A4", "A5", "A6"];
    let points = |a: &str| -> Vec<(f64, f64)> {
        (1..=16).map(|l| (lookup(t, a, l, "power_mw"), lookup(t, a, l, "bit_rate_bps"))).collect()
    };
    let frontier = |a: &str, budget: f64| -> Option<f64> {
        points(a).into_iter().filter(|p| p.0 <= budget).map(|p| p.1).reduce(f64::max)
    };
    let mut budgets: Vec<f64> = archs.iter().flat_map(|a| points(a)).map(|p| p.0).filter(|&p| p < half_pd).collect();
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();
    let mut ok = true;
    let mut worst = String::new();
    for &b in &budgets {
        let sel = frontier("A5", b).into_iter().chain(frontier("A6", b)).reduce(f64::max);
        for a in ["A1", "A2", "A3", "A4"] {
            if let Some(v) = frontier(a, b) {
                if sel.is_none_or(|s| v > s) {
                    ok = false;
                    worst = format!(" (at {b} mW {a} reaches {:.2} Gb/s)", v / 1e9);
                }
            }
        }
    }
    let slope = |a: ArchitectureKind| {
        receiver_power(&Architecture::from(a), 16, 9, &model) - receiver_power(&Architecture::from(a), 16, 8, &model)
    };
    let slopes: Vec<(ArchitectureKind, f64)> = ArchitectureKind::ALL.iter().map(|&a| (a, slope(a))).collect();
    let min_steep = slope(A1).min(slope(A3));
    let steep_ok = slopes.iter().filter(|(a, _)| !matches!(a, A1 | A3)).all(|(_, s)| *s < min_steep);
    ok &= steep_ok;
    let slope_txt: Vec<String> = slopes.iter().map(|(a, s)| format!("{a} {s}")).collect();
    (
        ok,
        format!(
            "{} budgets below {half_pd} mW checked{worst}; mW per extra RF chain: {}",
            budgets.len(),
            slope_txt.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 9

fn oracle_dominance() -> Outcome {
    let config = SystemConfig { n_t: 8, n_r: 6, l_t: 2, l_r: 2, n_s: 2, g_t: 8, g_r: 6, ..Default::default() };
    let params = ChannelParams::clustered(8, 6);
    let snr = 1.0;
    let cases = 500;
    let mut dominated = 0;
    let mut close = 0;
    for t in 0..cases {
        let h = sample_channel(&params, &config, 90_000 + t).unwrap().h;
        let (pre, _) = optimal_unconstrained(&h, 2, snr).unwrap();
        let h_tilde = &h * &pre.f;
        let g = hybrid_antenna_selection(&h_tilde, 2, 2, A5, snr, 8).unwrap().mutual_info;
        let e = exhaustive_combiner(&h_tilde, 2, 2, A5, snr, 8, DEFAULT_EXHAUSTIVE_CAP).unwrap().mutual_info;
        if e >= g - 1e-12 {
            dominated += 1;
        }
        if g >= 0.95 * e {
            close += 1;
        }
    }
    (
        dominated == cases && close as f64 >= 0.95 * cases as f64,
        format!("exhaustive >= greedy in {dominated}/{cases}; greedy within 5% in {close}/{cases}"),
    )
}

// ---------------------------------------------------------------- 10

fn run_property(name: &str, cases: u32, check: impl Fn(u64) -> bool) -> std::result::Result<(), String> {
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    runner
        .run(&any::<u64>(), |seed| {
            prop_assert!(check(seed), "{} failed for seed {}", name, seed);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn property_suites() -> Outcome {
    let projector = run_property("projector invariance", 1000, |seed| {
        let mut rng = rng_from_seed(seed);
        let n_r = rng.random_range(2..=8);
        let k = rng.random_range(1..=n_r);
        let n_s = rng.random_range(1..=4);
        let h = complex_gaussian_matrix(&mut rng, n_r, n_s, 1.0);
        let w = complex_gaussian_matrix(&mut rng, n_r, k, 1.0);
        let t = complex_gaussian_matrix(&mut rng, k, k, 1.0);
        let snr = rng.random_range(0.01..100.0);
        match (mutual_information(&h, &w, snr, 8), mutual_information(&h, &(&w * t), snr, 8)) {
            (Ok(a), Ok(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            _ => true,
        }
    });
    let omp_mono = run_property("OMP residual", 1000, |seed| {
        let mut rng = rng_from_seed(seed);
        let m = rng.random_range(4..=24);
        let n = rng.random_range(2..=40);
        let a = complex_gaussian_matrix(&mut rng, m, n, 1.0);
        let y = complex_gaussian_vector(&mut rng, m, 1.0);
        let out = omp(&a, &y, StopRule::sparsity(rng.random_range(1..=m))).unwrap();
        out.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    });
    let somp_mono = run_property("SOMP residual", 1000, |seed| {
        let mut rng = rng_from_seed(seed);
        let arch = [A1, A2, A3, A4][rng.random_range(0..4)];
        let n_r = rng.random_range(2..=8);
        let l_r = rng.random_range(1..=n_r);
        let n_s = rng.random_range(1..=l_r);
        let dict = build_dictionary(arch, n_r, l_r, 2 * n_r).unwrap();
        let w = complex_gaussian_matrix(&mut rng, n_r, n_s, 1.0);
        match somp_combiner(&w, &dict, l_r) {
            Ok(out) => out.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15),
            Err(_) => false,
        }
    });
    let results = [("projector", projector), ("OMP", omp_mono), ("SOMP", somp_mono)];
    let ok = results.iter().all(|(_, r)| r.is_ok());
    let detail: Vec<String> = results
        .iter()
        .map(|(n, r)| match r {
            Ok(()) => format!("{n} ok"),
            Err(e) => format!("{n} FAILED: {e}"),
        })
        .collect();
    (ok, format!("1000 cases each: {}", detail.join(", ")))
}

fn main() -> ExitCode {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 power model exactness", power_model_exactness),
        ("2 Kronecker coherence identity", kronecker_coherence_identity),
        ("3 Welch-bound split", welch_split),
        ("4 LS optimality", ls_optimality),
        ("5 noiseless exact recovery", noiseless_recovery),
        ("6 NMSE vs training steps", training_steps_reproduction),
        ("7 beam-scan saturation", saturation_property),
        ("8 combining ordering", combining_ordering),
        ("9 oracle dominance", oracle_dominance),
        ("10 property suites", property_suites),
        ("11 rate vs power", rate_vs_power),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if filter.as_ref().is_some_and(|p| !name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "acceptance {name}: {} ({:.1}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        return ExitCode::SUCCESS;
    }
    println!("acceptance: {failed} criteria failed");
    // Reporting mode by default so the rest of the workspace tests still run.
    if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
