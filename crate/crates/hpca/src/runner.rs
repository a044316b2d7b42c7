//! Monte-Carlo experiment runner.
//!
//! Every `(grid cell, rep)` pair is one trial with its own RNG stream
//! `cell · reps + rep`. All methods of a trial see the same data. Trials run
//! in parallel; rows are sorted before they are returned, so the output does
//! not depend on the worker count.

use std::cmp::Ordering;
use std::time::Instant;

use hpca_core::estimators::{
    diagonal_deletion_estimator, gram, hetero_pca, pairwise_complete_covariance, reconstruct_low_rank,
    regular_svd_estimator, sample_covariance,
};
use hpca_core::metrics::sin_theta;
use hpca_core::models::{
    apply_mask, gen_denoising, gen_loading_matrix, gen_missing, gen_poisson, gen_spiked, sample_approx_low_rank,
    DenoisingSpec, MissingSpec, PoissonSpec, SigmaProfile, SpikedCovSpec,
};
use hpca_core::{HeteroPcaConfig, Matrix, OrthonormalBasis, RngStream};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, Method, MissingModel, NoiseProfile, Params};
use crate::error::{Error, Result};

/// One method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub method: Method,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub rep_index: usize,
    pub stream_id: u64,
    /// `None` only on failed rows.
    pub sin_theta_u: Option<f64>,
    pub sin_theta_v: Option<f64>,
    /// `‖X̂ − X‖_F / ‖X‖_F`.
    pub frob_rel_err: Option<f64>,
    pub iterations: usize,
    /// Estimation time. Not part of the trials CSV, which must be reproducible.
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 when `n = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, sd })
    }

    /// Standard error of the mean for `n` samples.
    pub fn stderr(&self, n: usize) -> f64 {
        self.sd / (n as f64).sqrt()
    }
}

/// Per-(sweep value, method) summary over successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRecord {
    pub experiment: Experiment,
    pub method: Method,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub n_reps: usize,
    pub n_failed: usize,
    pub sin_theta_u: Summary,
    pub sin_theta_v: Option<Summary>,
    pub frob_rel_err: Option<Summary>,
    pub iterations: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

impl RunOutput {
    pub fn aggregate(&self, method: Method, sweep_value: f64) -> Option<&AggregateRecord> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.sweep_value == sweep_value)
    }
}

/// The symmetric matrix handed to every estimator, and what to compare with.
struct Problem {
    s: Matrix,
    u: OrthonormalBasis,
    right: Option<RightSide>,
}

/// Right-subspace and signal-recovery targets for the denoising study.
struct RightSide {
    s: Matrix,
    v: OrthonormalBasis,
    y: Matrix,
    x: Matrix,
}

fn profile(params: &Params) -> SigmaProfile {
    match params.sigma_profile {
        NoiseProfile::Uniform => SigmaProfile::Uniform01,
        NoiseProfile::Alpha => SigmaProfile::alpha(params.alpha, params.p),
    }
}

fn spiked_spec(params: &Params) -> SpikedCovSpec {
    SpikedCovSpec {
        loading_weight_power: params.weight_power,
        ..SpikedCovSpec::new(params.p, params.n, params.r, profile(params))
    }
}

fn denoising_spec(params: &Params) -> DenoisingSpec {
    DenoisingSpec::new(params.p1, params.p2, params.r, params.sigma0)
}

fn build_problem(experiment: Experiment, params: &Params, rng: &mut RngStream) -> hpca_core::Result<Problem> {
    match experiment {
        Experiment::PcaVsN | Experiment::AlphaSweep => {
            let sample = gen_spiked(&spiked_spec(params), rng)?;
            Ok(Problem { s: sample_covariance(&sample.y)?, u: sample.u, right: None })
        }
        Experiment::ApproxRank => {
            let spec = spiked_spec(params);
            spec.validate()?;
            let u = gen_loading_matrix(spec.p, spec.r, spec.loading_weight_power, rng)?;
            let sigma = spec.sigma_profile.draw(spec.p, rng)?;
            let y = sample_approx_low_rank(&u, &vec![1.0; spec.r], params.tail, &sigma, spec.n, rng)?;
            Ok(Problem { s: sample_covariance(&y)?, u, right: None })
        }
        Experiment::DenoisingSweep => {
            let d = gen_denoising(&denoising_spec(params), rng)?;
            let right = params.estimate_v.then(|| {
                let yt = d.y.transpose();
                RightSide { s: gram(&yt), v: d.v.clone(), y: d.y.clone(), x: d.x.clone() }
            });
            Ok(Problem { s: gram(&d.y), u: d.u, right })
        }
        Experiment::PoissonSweep => {
            let spec = PoissonSpec { p1: params.p1, p2: params.p2, r: params.r, lambda_strength: params.lambda };
            let sample = gen_poisson(&spec, rng)?;
            Ok(Problem { s: gram(&sample.y), u: sample.u, right: None })
        }
        Experiment::MissingSweep => match params.missing_model {
            MissingModel::Denoising => {
                let spec = MissingSpec { base: denoising_spec(params), theta: params.theta };
                let sample = gen_missing(&spec, rng)?;
                Ok(Problem { s: gram(&sample.masked.y_tilde), u: sample.full.u, right: None })
            }
            MissingModel::Spiked => {
                let sample = gen_spiked(&spiked_spec(params), rng)?;
                let masked = apply_mask(&sample.y, params.theta, rng)?;
                let cov = pairwise_complete_covariance(&sample.y, &masked.r_mask)?;
                Ok(Problem { s: cov.matrix, u: sample.u, right: None })
            }
        },
    }
}

fn estimate(method: Method, s: &Matrix, hcfg: &HeteroPcaConfig) -> hpca_core::Result<(OrthonormalBasis, usize)> {
    match method {
        Method::HeteroPca => {
            let res = hetero_pca(s, hcfg)?;
            Ok((res.basis, res.iterations_used))
        }
        Method::Svd => Ok((regular_svd_estimator(s, hcfg.rank)?, 0)),
        Method::Dd => Ok((diagonal_deletion_estimator(s, hcfg.rank)?, 0)),
    }
}

struct Metrics {
    sin_theta_u: f64,
    sin_theta_v: Option<f64>,
    frob_rel_err: Option<f64>,
    iterations: usize,
}

fn evaluate(method: Method, problem: &Problem, hcfg: &HeteroPcaConfig) -> hpca_core::Result<Metrics> {
    let (u_hat, iterations) = estimate(method, &problem.s, hcfg)?;
    let sin_theta_u = sin_theta(&u_hat, &problem.u)?;
    let (mut sin_theta_v, mut frob_rel_err) = (None, None);
    if let Some(right) = &problem.right {
        let (v_hat, _) = estimate(method, &right.s, hcfg)?;
        sin_theta_v = Some(sin_theta(&v_hat, &right.v)?);
        let x_hat = reconstruct_low_rank(&right.y, &u_hat, &v_hat)?;
        frob_rel_err = Some(x_hat.sub(&right.x)?.frobenius_norm() / right.x.frobenius_norm());
    }
    Ok(Metrics { sin_theta_u, sin_theta_v, frob_rel_err, iterations })
}

#[derive(Clone, Copy)]
struct Job {
    cell: usize,
    value: f64,
    rep: usize,
    stream_id: u64,
}

fn run_trial(cfg: &ExperimentConfig, cell_params: &[Params], job: Job) -> Vec<TrialRecord> {
    let params = &cell_params[job.cell];
    let hcfg = HeteroPcaConfig::new(params.r)
        .with_max_iterations(params.max_iterations)
        .with_tolerance(params.tolerance);
    let row = |method: Method| TrialRecord {
        experiment: cfg.experiment,
        method,
        sweep_param: cfg.sweep_param.clone(),
        sweep_value: job.value,
        rep_index: job.rep,
        stream_id: job.stream_id,
        sin_theta_u: None,
        sin_theta_v: None,
        frob_rel_err: None,
        iterations: 0,
        wall_ms: 0.0,
        error: None,
    };
    let mut rng = RngStream::new(cfg.seed, job.stream_id);
    let problem = match build_problem(cfg.experiment, params, &mut rng) {
        Ok(p) => p,
        Err(e) => {
            let reason = format!("data generation: {e}");
            return cfg
                .methods
                .iter()
                .map(|&m| TrialRecord { error: Some(reason.clone()), ..row(m) })
                .collect();
        }
    };
    cfg.methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let outcome = evaluate(m, &problem, &hcfg);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok(x) => TrialRecord {
                    sin_theta_u: Some(x.sin_theta_u),
                    sin_theta_v: x.sin_theta_v,
                    frob_rel_err: x.frob_rel_err,
                    iterations: x.iterations,
                    wall_ms,
                    ..row(m)
                },
                Err(e) => TrialRecord { error: Some(e.to_string()), wall_ms, ..row(m) },
            }
        })
        .collect()
}

/// Output row order: sweep value, then rep, then method.
pub fn row_order(a: &TrialRecord, b: &TrialRecord) -> Ordering {
    a.sweep_value
        .total_cmp(&b.sweep_value)
        .then(a.rep_index.cmp(&b.rep_index))
        .then(a.method.cmp(&b.method))
}

/// Runs every trial of `cfg`. Failed trials are kept as rows with an error;
/// if 1% or more of the trials fail the whole run is an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let cell_params = cfg
        .grid
        .iter()
        .map(|&v| cfg.cell_params(v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<Job> = cfg
        .grid
        .iter()
        .enumerate()
        .flat_map(|(cell, &value)| {
            (0..cfg.reps).map(move |rep| Job { cell, value, rep, stream_id: (cell * cfg.reps + rep) as u64 })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let mut trials: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .flat_map_iter(|&job| run_trial(cfg, &cell_params, job))
            .collect()
    });
    trials.sort_by(row_order);

    let mut failed: Vec<&TrialRecord> = trials.iter().filter(|t| t.failed()).collect();
    failed.dedup_by_key(|t| t.stream_id);
    if !failed.is_empty() && failed.len() * 100 >= jobs.len() {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total: jobs.len(),
            first: failed[0].error.clone().unwrap_or_default(),
        });
    }

    let aggregates = aggregate(&trials);
    Ok(RunOutput { trials, aggregates })
}

/// Summaries per (sweep value, method), in row order. Failed rows are
/// counted but excluded from the statistics.
pub fn aggregate(trials: &[TrialRecord]) -> Vec<AggregateRecord> {
    let mut sorted: Vec<&TrialRecord> = trials.iter().collect();
    sorted.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(a.method.cmp(&b.method))
            .then(a.rep_index.cmp(&b.rep_index))
    });
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| a.sweep_value == b.sweep_value && a.method == b.method) {
        let ok: Vec<&TrialRecord> = group.iter().copied().filter(|t| !t.failed()).collect();
        let collect = |f: fn(&TrialRecord) -> Option<f64>| -> Option<Vec<f64>> { ok.iter().map(|t| f(t)).collect() };
        let nan = Summary { mean: f64::NAN, sd: f64::NAN };
        let first = group[0];
        out.push(AggregateRecord {
            experiment: first.experiment,
            method: first.method,
            sweep_param: first.sweep_param.clone(),
            sweep_value: first.sweep_value,
            n_reps: ok.len(),
            n_failed: group.len() - ok.len(),
            sin_theta_u: collect(|t| t.sin_theta_u).and_then(|v| Summary::of(&v)).unwrap_or(nan),
            sin_theta_v: collect(|t| t.sin_theta_v).and_then(|v| Summary::of(&v)),
            frob_rel_err: collect(|t| t.frob_rel_err).and_then(|v| Summary::of(&v)),
            iterations: Summary::of(&ok.iter().map(|t| t.iterations as f64).collect::<Vec<_>>()).unwrap_or(nan),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(experiment);
        cfg.reps = 2;
        cfg.grid.truncate(2);
        cfg.params.p = 20;
        cfg.params.n = 40;
        cfg.params.r = 2;
        cfg.params.p1 = 15;
        if cfg.sweep_param == "p2" {
            cfg.grid = vec![40.0, 60.0];
        } else {
            cfg.params.p2 = 40;
        }
        cfg
    }

    #[test]
    fn summary_matches_hand_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).unwrap(), Summary { mean: 7.0, sd: 0.0 });
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn every_experiment_runs() {
        for e in Experiment::ALL {
            let cfg = small(e);
            let out = run_experiment(&cfg).unwrap();
            assert_eq!(out.trials.len(), 2 * 2 * 3, "{e}");
            assert_eq!(out.aggregates.len(), 2 * 3, "{e}");
            for t in &out.trials {
                let s = t.sin_theta_u.unwrap();
                assert!((0.0..=1.0).contains(&s), "{e}: {s}");
            }
            for a in &out.aggregates {
                assert_eq!(a.n_reps, cfg.reps);
                assert!(a.sin_theta_u.sd >= 0.0);
            }
            let v = out.trials.iter().any(|t| t.sin_theta_v.is_some());
            assert_eq!(v, e == Experiment::DenoisingSweep, "{e}");
        }
    }

    #[test]
    fn spiked_missing_variant_runs() {
        let mut cfg = small(Experiment::MissingSweep);
        cfg.params.missing_model = MissingModel::Spiked;
        cfg.sweep_param = "theta".into();
        cfg.grid = vec![0.5, 0.8];
        let out = run_experiment(&cfg).unwrap();
        assert!(out.trials.iter().all(|t| !t.failed()));
    }

    #[test]
    fn stream_ids_are_unique_per_trial_and_shared_across_methods() {
        let out = run_experiment(&small(Experiment::PcaVsN)).unwrap();
        let mut ids: Vec<u64> = out.trials.iter().map(|t| t.stream_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 4);
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn noiseless_denoising_is_exact() {
        // Smaller p1 makes the w⁴-weighted loadings too coherent for exact
        // recovery on many draws.
        let mut cfg = ExperimentConfig::defaults(Experiment::DenoisingSweep);
        cfg.reps = 1;
        cfg.grid = vec![0.0];
        cfg.methods = vec![Method::HeteroPca];
        let out = run_experiment(&cfg).unwrap();
        let t = &out.trials[0];
        assert!(t.sin_theta_u.unwrap() <= 1e-8);
        assert!(t.sin_theta_v.unwrap() <= 1e-8);
        assert!(t.frob_rel_err.unwrap() <= 1e-8);
    }

    #[test]
    fn worker_count_does_not_change_rows() {
        let mut cfg = small(Experiment::AlphaSweep);
        cfg.workers = 1;
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap();
        let strip = |o: &RunOutput| -> Vec<TrialRecord> {
            o.trials.iter().map(|t| TrialRecord { wall_ms: 0.0, ..t.clone() }).collect()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn failures_are_recorded_and_counted() {
        let rec = |rep, err: Option<&str>| TrialRecord {
            experiment: Experiment::PcaVsN,
            method: Method::Svd,
            sweep_param: "n".into(),
            sweep_value: 10.0,
            rep_index: rep,
            stream_id: rep as u64,
            sin_theta_u: err.is_none().then_some(0.5),
            sin_theta_v: None,
            frob_rel_err: None,
            iterations: 0,
            wall_ms: 0.0,
            error: err.map(String::from),
        };
        let agg = aggregate(&[rec(0, None), rec(1, Some("boom")), rec(2, None)]);
        assert_eq!(agg.len(), 1);
        assert_eq!((agg[0].n_reps, agg[0].n_failed), (2, 1));
        assert_eq!(agg[0].sin_theta_u, Summary { mean: 0.5, sd: 0.0 });
    }
}
