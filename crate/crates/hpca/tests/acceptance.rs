//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p hpca --test acceptance -- 3 11`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hpca::output::write_trials;
use hpca::{run_experiment, Experiment, ExperimentConfig, Method, MissingModel, NoiseProfile, RunOutput};
use hpca_core::estimators::hetero_pca;
use hpca_core::linalg::{construct_incoherent_basis, spectral_norm};
use hpca_core::metrics::sin_theta;
use hpca_core::verify::{
    check_delta_norm, check_diag_projection, check_projection_after_svd, rank1_offdiag_oracle,
    robust_recovery_cases, sharp_delta_ratio,
};
use hpca_core::{HeteroPcaConfig, Matrix, RngStream};

const SEED: u64 = 20190502;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn mean_of(out: &RunOutput, method: Method, value: f64) -> (f64, f64) {
    let a = out.aggregate(method, value).expect("cell present");
    (a.sin_theta_u.mean, a.sin_theta_u.stderr(a.n_reps))
}

/// `mean_b − mean_a` in units of the combined standard error.
fn separation(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0) / (a.1 * a.1 + b.1 * b.1).sqrt()
}

fn config(experiment: Experiment, grid: &[f64], reps: usize, methods: &[Method]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(experiment);
    cfg.grid = grid.to_vec();
    cfg.reps = reps;
    cfg.seed = SEED;
    cfg.methods = methods.to_vec();
    cfg
}

fn noiseless_recovery() -> Outcome {
    let u = construct_incoherent_basis(60, 3).unwrap();
    let um = u.matrix();
    let lam = [3.0, 2.0, 1.0];
    let m = Matrix::from_fn(60, 60, |i, j| (0..3).map(|k| lam[k] * um[(i, k)] * um[(j, k)]).sum());
    let start = Instant::now();
    let res = hetero_pca(&m, &HeteroPcaConfig::new(3).with_max_iterations(100)).unwrap();
    let elapsed = start.elapsed();
    let err = sin_theta(&res.basis, &u).unwrap();
    let pass = err <= 1e-8 && res.iterations_used <= 100 && elapsed < Duration::from_secs(1);
    outcome(pass, format!("sinΘ={err:.3e} iterations={} time={}", res.iterations_used, secs(elapsed)))
}

fn diagonal_invariance() -> Outcome {
    let mut rng = RngStream::new(SEED, 2);
    let mut mismatches = 0;
    for _ in 0..100 {
        let p = 3 + (rng.next_u64() % 28) as usize;
        let r = 1 + (rng.next_u64() % 3) as usize;
        let mut s = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = rng.normal();
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let mut shifted = s.clone();
        for i in 0..p {
            shifted[(i, i)] += 10.0 * rng.normal();
        }
        let cfg = HeteroPcaConfig::new(r);
        let (a, b) = (hetero_pca(&s, &cfg).unwrap(), hetero_pca(&shifted, &cfg).unwrap());
        let same = a.basis == b.basis && a.final_iterate == b.final_iterate && a.iterations_used == b.iterations_used;
        mismatches += usize::from(!same);
    }
    outcome(mismatches == 0, format!("100 instances, {mismatches} not bit-identical"))
}

fn lemma_suite() -> Outcome {
    let start = Instant::now();
    let reports = [
        check_delta_norm(1000, &mut RngStream::new(SEED, 31)).unwrap(),
        check_diag_projection(1000, &mut RngStream::new(SEED, 32)).unwrap(),
        check_projection_after_svd(1000, &mut RngStream::new(SEED, 33)).unwrap(),
    ];
    let elapsed = start.elapsed();
    let sharp: Vec<(usize, f64)> = [2, 4, 8, 16].into_iter().map(|p| (p, sharp_delta_ratio(p))).collect();
    let sharp_ok = sharp
        .iter()
        .all(|&(p, r)| (r - (2.0 - 2.0 / p as f64)).abs() <= 1e-12);
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let pass = violations == 0 && reports.iter().all(|r| r.passed()) && sharp_ok && elapsed < Duration::from_secs(60);
    let worst: Vec<String> = reports
        .iter()
        .map(|r| format!("{}={:.4}", r.lemma_id, r.worst_ratio))
        .collect();
    let ratios: Vec<String> = sharp.iter().map(|(p, r)| format!("{p}:{r}")).collect();
    outcome(
        pass,
        format!(
            "violations={violations} worst ratios [{}] sharp [{}] time={}",
            worst.join(" "),
            ratios.join(" "),
            secs(elapsed)
        ),
    )
}

fn robust_envelope() -> Outcome {
    let reports = robust_recovery_cases(100, &mut RngStream::new(SEED, 4)).unwrap();
    let cases = &reports[..3];
    let pass = cases.iter().all(|r| r.passed());
    let detail: Vec<String> = reports
        .iter()
        .map(|r| format!("{}: violations={} worst={:.4}", r.lemma_id, r.violations, r.worst_ratio))
        .collect();
    outcome(pass, detail.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = RngStream::new(SEED, 5);
    let mut worst: f64 = 0.0;
    let mut worst_pair = (0.0, 0.0);
    for _ in 0..20 {
        let u: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        let lam = sign * (0.5 + 1.5 * rng.uniform());
        let mut s = Matrix::from_fn(3, 3, |i, j| lam * u[i] * u[j] / (norm * norm));
        for i in 0..3 {
            for j in i..3 {
                let e = 0.1 * rng.normal();
                s[(i, j)] += e;
                if i != j {
                    s[(j, i)] += e;
                }
            }
        }
        let s = s.scale(1.0 / spectral_norm(&s));
        let res = hetero_pca(&s, &HeteroPcaConfig::new(1).with_max_iterations(100_000).with_tolerance(1e-13)).unwrap();
        let ours = res.offdiag_residual(&s).unwrap();
        let oracle = rank1_offdiag_oracle(&s, 1e-2).unwrap().value;
        if (ours - oracle).abs() >= worst {
            worst = (ours - oracle).abs();
            worst_pair = (ours, oracle);
        }
    }
    outcome(
        worst <= 1e-6,
        format!(
            "20 instances, max |residual − oracle| = {worst:.3e} (heteropca {:.3e}, oracle {:.3e})",
            worst_pair.0, worst_pair.1
        ),
    )
}

fn figure1_ordering() -> Outcome {
    let mut cfg = config(Experiment::PcaVsN, &[400.0], 200, &[Method::HeteroPca, Method::Svd]);
    cfg.params.p = 200;
    cfg.params.r = 5;
    cfg.params.sigma_profile = NoiseProfile::Uniform;
    let start = Instant::now();
    let out = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let (h, s) = (mean_of(&out, Method::HeteroPca, 400.0), mean_of(&out, Method::Svd, 400.0));
    let sep = separation(h, s);
    let pass = h.0 < s.0 && sep > 2.0 && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!("heteropca {:.4} svd {:.4} separation {sep:.1} stderr time={}", h.0, s.0, secs(elapsed)),
    )
}

fn alpha_sweep() -> Outcome {
    let mut cfg = config(Experiment::AlphaSweep, &[0.0, 1.0, 2.0, 4.0], 200, &[Method::HeteroPca, Method::Svd]);
    cfg.params.p = 50;
    cfg.params.n = 30;
    cfg.params.r = 5;
    let out = run_experiment(&cfg).unwrap();
    let (h0, s0) = (mean_of(&out, Method::HeteroPca, 0.0), mean_of(&out, Method::Svd, 0.0));
    let (h4, s4) = (mean_of(&out, Method::HeteroPca, 4.0), mean_of(&out, Method::Svd, 4.0));
    let rel0 = (h0.0 - s0.0).abs() / s0.0;
    let sep4 = separation(h4, s4);
    let pass = rel0 <= 0.2 && h4.0 < s4.0 && sep4 > 2.0;
    outcome(
        pass,
        format!(
            "α=0: heteropca {:.4} svd {:.4} (rel diff {:.1}%); α=4: heteropca {:.4} svd {:.4} separation {sep4:.1} stderr",
            h0.0,
            s0.0,
            100.0 * rel0,
            h4.0,
            s4.0
        ),
    )
}

fn rate_check() -> Outcome {
    let ns = [200.0, 800.0, 3200.0];
    let mut cfg = config(Experiment::PcaVsN, &ns, 200, &[Method::HeteroPca]);
    cfg.params.p = 100;
    cfg.params.r = 3;
    cfg.params.sigma_profile = NoiseProfile::Uniform;
    let out = run_experiment(&cfg).unwrap();
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| (n.ln(), mean_of(&out, Method::HeteroPca, n).0.ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let means: Vec<String> = pts.iter().map(|p| format!("{:.4}", p.1.exp())).collect();
    outcome(
        (-0.65..=-0.35).contains(&slope),
        format!("means [{}] slope {slope:.3}", means.join(", ")),
    )
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn missing_consistency() -> Outcome {
    let thetas = [0.1, 0.3, 0.6];
    let mut cfg = config(Experiment::MissingSweep, &thetas, 100, &[Method::HeteroPca]);
    cfg.sweep_param = "theta".into();
    cfg.params.missing_model = MissingModel::Denoising;
    cfg.params.p1 = 50;
    cfg.params.p2 = 800;
    cfg.params.r = 3;
    let out = run_experiment(&cfg).unwrap();
    let means: Vec<f64> = thetas.iter().map(|&t| mean_of(&out, Method::HeteroPca, t).0).collect();
    outcome(strictly_decreasing(&means), format!("mean sinΘ at θ=0.1,0.3,0.6: {means:.4?}"))
}

fn poisson_consistency() -> Outcome {
    let lambdas = [1.0, 4.0, 16.0];
    let mut cfg = config(Experiment::PoissonSweep, &lambdas, 100, &[Method::HeteroPca, Method::Svd]);
    cfg.params.p1 = 50;
    cfg.params.p2 = 500;
    cfg.params.r = 3;
    let out = run_experiment(&cfg).unwrap();
    let means: Vec<f64> = lambdas.iter().map(|&l| mean_of(&out, Method::HeteroPca, l).0).collect();
    let svd1 = mean_of(&out, Method::Svd, 1.0).0;
    let pass = strictly_decreasing(&means) && means[0] <= svd1;
    outcome(pass, format!("heteropca at λ=1,4,16: {means:.4?}; svd at λ=1: {svd1:.4}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for e in Experiment::ALL {
        let mut cfg = ExperimentConfig::defaults(e);
        cfg.reps = 3;
        cfg.grid.truncate(2);
        cfg.seed = SEED;
        let mut bytes = Vec::new();
        for workers in [1, 4] {
            cfg.workers = workers;
            let path = dir.path().join(format!("{e}-{workers}.csv"));
            write_trials(&run_experiment(&cfg).unwrap().trials, &path).unwrap();
            bytes.push(std::fs::read(&path).unwrap());
        }
        if bytes[0] != bytes[1] {
            differing.push(e.name());
        }
    }
    outcome(
        differing.is_empty(),
        format!("6 experiments rerun with 1 and 4 workers; differing: {differing:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    ("noiseless exact recovery", noiseless_recovery),
    ("diagonal invariance", diagonal_invariance),
    ("lemma suite", lemma_suite),
    ("robust-perturbation envelope", robust_envelope),
    ("oracle equivalence", oracle_equivalence),
    ("heteropca beats svd (p=200, n=400)", figure1_ordering),
    ("alpha sweep", alpha_sweep),
    ("1/sqrt(n) rate", rate_check),
    ("missing-data consistency", missing_consistency),
    ("poisson consistency", poisson_consistency),
    ("determinism", determinism),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, check)) in CRITERIA.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id:>2} {name}: {} [{}]", o.detail, secs(start.elapsed()));
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
