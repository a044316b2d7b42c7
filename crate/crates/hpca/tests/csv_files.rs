use std::path::Path;

use hpca::output::{
    aggregate_path, read_aggregates, read_trials, timing_path, write_aggregates, write_run, write_trials,
    AGGREGATE_HEADER, TRIAL_HEADER,
};
use hpca::runner::aggregate;
use hpca::{run_experiment, Experiment, ExperimentConfig, Method, TrialRecord};

fn small_run() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(Experiment::DenoisingSweep);
    cfg.reps = 4;
    cfg.grid = vec![0.5, 1.5];
    cfg.params.p2 = 60;
    cfg
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn empty_record_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let (t, a) = (dir.path().join("t.csv"), dir.path().join("a.csv"));
    write_trials(&[], &t).unwrap();
    write_aggregates(&[], &a).unwrap();
    assert_eq!(lines(&t), vec![TRIAL_HEADER.join(",")]);
    assert_eq!(lines(&a), vec![AGGREGATE_HEADER.join(",")]);
    assert!(read_trials(&t).unwrap().is_empty());
}

#[test]
fn single_record_writes_two_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let rec = TrialRecord {
        experiment: Experiment::PoissonSweep,
        method: Method::Dd,
        sweep_param: "lambda".into(),
        sweep_value: 4.0,
        rep_index: 0,
        stream_id: 7,
        sin_theta_u: Some(0.1),
        sin_theta_v: None,
        frob_rel_err: None,
        iterations: 0,
        wall_ms: 0.0,
        error: None,
    };
    write_trials(std::slice::from_ref(&rec), &path).unwrap();
    let l = lines(&path);
    assert_eq!(l.len(), 2);
    assert_eq!(l[1], "poisson_sweep,dd,lambda,4.0000000000000000e0,0,7,1.0000000000000001e-1,,,0,");
}

#[test]
fn emitted_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = run_experiment(&small_run()).unwrap();
    let written = write_run(&out, &path, true).unwrap();
    assert_eq!(written.len(), 4);

    let back = read_trials(&path).unwrap();
    let expect: Vec<TrialRecord> = out.trials.iter().map(|t| TrialRecord { wall_ms: 0.0, ..t.clone() }).collect();
    assert_eq!(back, expect);
    assert_eq!(read_aggregates(&aggregate_path(&path)).unwrap(), out.aggregates);
    assert_eq!(lines(&timing_path(&path)).len(), out.trials.len() + 1);
}

#[test]
fn error_messages_survive_quoting() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("err.csv");
    let mut out = run_experiment(&small_run()).unwrap();
    out.trials[0].sin_theta_u = None;
    out.trials[0].error = Some("bad \"input\", row 3\nsecond line".into());
    write_trials(&out.trials, &path).unwrap();
    let back = read_trials(&path).unwrap();
    assert_eq!(back[0].error, out.trials[0].error);
    assert_eq!(back[0].sin_theta_u, None);
}

#[test]
fn aggregates_match_recomputation_from_the_trials_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = run_experiment(&small_run()).unwrap();
    write_run(&out, &path, false).unwrap();
    let trials = read_trials(&path).unwrap();
    let stored = read_aggregates(&aggregate_path(&path)).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    for a in &stored {
        let vals: Vec<f64> = trials
            .iter()
            .filter(|t| t.method == a.method && t.sweep_value == a.sweep_value)
            .map(|t| t.sin_theta_u.unwrap())
            .collect();
        assert_eq!(vals.len(), a.n_reps);
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(close(mean, a.sin_theta_u.mean), "{mean} vs {}", a.sin_theta_u.mean);
        assert!(close(sd, a.sin_theta_u.sd), "{sd} vs {}", a.sin_theta_u.sd);
    }
    assert_eq!(aggregate(&trials), stored);
}

#[test]
fn rerun_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run();
    let mut files = Vec::new();
    for workers in [1, 2, 5] {
        cfg.workers = workers;
        let path = dir.path().join(format!("w{workers}.csv"));
        let out = run_experiment(&cfg).unwrap();
        write_run(&out, &path, true).unwrap();
        files.push((
            std::fs::read(&path).unwrap(),
            std::fs::read(aggregate_path(&path)).unwrap(),
            std::fs::read(hpca::output::plot_path(&path)).unwrap(),
        ));
    }
    assert!(files.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn missing_output_directory_is_reported_with_its_path() {
    let err = write_trials(&[], Path::new("/nonexistent-dir/x/trials.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x/trials.csv"), "{err}");
    assert_eq!(err.exit_code(), 3);
}
