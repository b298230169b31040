//! Experiment subcommands: data generation, training, probing, MI
//! estimation, hyperparameter sweeps and sweep aggregation.

use crate::config::{atomic_write, worker_count, write_report, DataSpec, ExperimentConfig};
use mvinfo::autodiff::{Activation, MlpParams, Tensor};
use mvinfo::error::{Error, Result};
use mvinfo::info::gaussian_mi;
use mvinfo::objectives::{estimate_mi, gaussian_pair_batch, MiEstimator};
use mvinfo::synth::{make_discrete_system, read_batch, sample_continuous, write_batch, MultiViewBatch};
use mvinfo::trainer::{encode_v1, linear_probe, ridge_probe, train, ProbeResult};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Materializes the configured dataset: from a batch file when given,
/// otherwise freshly sampled from the config's continuous spec.
fn load_data(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<MultiViewBatch> {
    match data {
        Some(path) => read_batch(path),
        None => sample_continuous(cfg.continuous_spec()?),
    }
}

/// `gen`: write the configured dataset (continuous batch file or discrete
/// joint-table fixture).
pub fn cmd_gen(config: &Path, mode: Option<&str>, out: &Path) -> Result<i32> {
    let cfg = ExperimentConfig::load(config)?;
    if let Some(mode) = mode {
        let actual = match &cfg.data {
            DataSpec::Continuous { .. } => "continuous",
            DataSpec::Discrete { .. } => "discrete",
        };
        if mode != actual {
            return Err(Error::Config(format!(
                "--mode {mode} does not match the config's {actual} data spec"
            )));
        }
    }
    match &cfg.data {
        DataSpec::Continuous { spec } => {
            let batch = sample_continuous(spec)?;
            write_batch(&batch, out)?;
            println!("wrote {} samples to {}", batch.n, out.display());
        }
        DataSpec::Discrete { spec } => {
            let table = make_discrete_system(spec)?;
            atomic_write(out, (table.to_json() + "\n").as_bytes())?;
            println!("wrote joint table {:?} to {}", table.sizes(), out.display());
        }
    }
    Ok(0)
}

/// `train`: one run with the config's first seed; writes encoder
/// checkpoints, a per-epoch loss history CSV and a run report.
pub fn cmd_train(config: &Path, data: Option<&Path>) -> Result<i32> {
    let cfg = ExperimentConfig::load(config)?;
    let hash = cfg.hash()?;
    let batch = load_data(&cfg, data)?;
    let seed = cfg.seeds[0];
    let run = train(&cfg.objective, &cfg.schedule, &cfg.encoder_sizes, &batch, seed, hash)?;

    let dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&dir)?;
    mvinfo::autodiff::save_mlp(&run.model.enc1, hash, &dir.join("enc1.json"))?;
    mvinfo::autodiff::save_mlp(&run.model.enc2, hash, &dir.join("enc2.json"))?;

    let mut history = String::from("epoch,loss\n");
    for (i, loss) in run.epoch_losses.iter().enumerate() {
        history.push_str(&format!("{i},{loss}\n"));
    }
    atomic_write(&dir.join("history.csv"), history.as_bytes())?;

    write_report(
        &dir.join("run.json"),
        json!({
            "config_hash": format!("{hash:016x}"),
            "seed": seed,
            "epochs": run.epoch_losses.len(),
            "final_loss": run.epoch_losses.last().copied(),
            "n_samples": batch.n,
            // wall time is volatile, so it lives with the timestamp
            "meta": { "wall_time_s": run.wall_time_s },
        }),
    )?;
    println!(
        "trained {} epochs (final loss {:.6}); outputs in {}",
        run.epoch_losses.len(),
        run.epoch_losses.last().copied().unwrap_or(f64::NAN),
        dir.display()
    );
    Ok(0)
}

fn view1_tensor(batch: &MultiViewBatch) -> Result<Tensor> {
    Tensor::new(
        vec![batch.n, batch.dim_view],
        batch.v1.iter().map(|&x| x as f64).collect(),
    )
}

fn probe_once(
    reps: &Tensor,
    batch: &MultiViewBatch,
    task: &str,
    l2: f64,
    seed: u64,
) -> Result<ProbeResult> {
    match task {
        "shared" => linear_probe(reps, &batch.t_shared, task, 0.8, seed),
        "nonshared" => linear_probe(reps, &batch.t_nonshared, task, 0.8, seed),
        "regression" => {
            let targets: Vec<f64> = batch.t_reg.iter().map(|&x| x as f64).collect();
            ridge_probe(reps, &targets, task, l2, 0.8, seed)
        }
        other => Err(Error::Config(format!(
            "unknown task '{other}' (expected shared, nonshared or regression)"
        ))),
    }
}

/// `probe`: freeze an encoder checkpoint, embed view 1 and fit a linear
/// probe per configured seed; reports per-seed values and their mean.
pub fn cmd_probe(
    config: &Path,
    checkpoint: &Path,
    data: Option<&Path>,
    task: &str,
    l2: f64,
    out: Option<&Path>,
) -> Result<i32> {
    let cfg = ExperimentConfig::load(config)?;
    let batch = load_data(&cfg, data)?;
    let (params, ckpt_hash) = mvinfo::autodiff::load_mlp(checkpoint)?;
    if params.input_dim() != batch.dim_view {
        return Err(Error::Shape(format!(
            "checkpoint expects {}-dim inputs, data has {}",
            params.input_dim(),
            batch.dim_view
        )));
    }
    let reps = params.forward(&view1_tensor(&batch)?)?;

    let results: Vec<ProbeResult> = cfg
        .seeds
        .iter()
        .map(|&s| probe_once(&reps, &batch, task, l2, s))
        .collect::<Result<_>>()?;
    let mean = results.iter().map(|r| r.value).sum::<f64>() / results.len() as f64;
    println!("{task} {:?} mean {mean:.4} over {} seeds", results[0].metric, results.len());

    if let Some(path) = out {
        write_report(
            path,
            json!({
                "task": task,
                "checkpoint_config_hash": format!("{ckpt_hash:016x}"),
                "mean": mean,
                "results": results,
            }),
        )?;
    }
    Ok(0)
}

/// `estimate-mi`: train a small critic on correlated Gaussians and print
/// the variational MI estimate next to the closed-form value.
#[allow(clippy::too_many_arguments)]
pub fn cmd_estimate_mi(
    estimator: &str,
    rho_corr: f64,
    dim: usize,
    n: usize,
    batch: usize,
    steps: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    let est: MiEstimator = estimator.parse()?;
    if batch > n {
        return Err(Error::Precondition(format!("batch {batch} exceeds n {n}")));
    }
    let truth = gaussian_mi(rho_corr, dim)?;
    let (x, y) = gaussian_pair_batch(n, dim, rho_corr, seed)?;
    // the critic trains on a fixed subsample so the pair grid stays small
    let xb = Tensor::new(vec![batch, dim], x.data[..batch * dim].to_vec())?;
    let yb = Tensor::new(vec![batch, dim], y.data[..batch * dim].to_vec())?;
    let mut critic = MlpParams::init(&[2 * dim, 16, 1], Activation::Tanh, seed ^ 0x6d69)?;
    let estimate = estimate_mi(est, &xb, &yb, &mut critic, steps, seed)?;
    println!("{estimator} estimate {estimate:.6} nats (closed form {truth:.6})");

    if let Some(path) = out {
        write_report(
            path,
            json!({
                "estimator": estimator,
                "rho_corr": rho_corr,
                "dim": dim,
                "batch": batch,
                "steps": steps,
                "seed": seed,
                "estimate": estimate,
                "closed_form": truth,
            }),
        )?;
    }
    Ok(0)
}

/// One sweep output row.
struct Row {
    value: f64,
    seed: u64,
    task: &'static str,
    metric: &'static str,
    result: f64,
}

fn sweep_cell(cfg: &ExperimentConfig, param: &str, value: f64, seed: u64) -> Result<Vec<Row>> {
    let mut cfg = cfg.clone();
    match param {
        "lambda" => {
            cfg.objective.lambda1 = value;
            cfg.objective.lambda2 = value;
        }
        "epochs" => cfg.schedule.epochs = value as usize,
        other => return Err(Error::Config(format!("unknown sweep param '{other}'"))),
    }
    let mut spec = cfg.continuous_spec()?.clone();
    spec.seed = seed;
    let batch = sample_continuous(&spec)?;
    let run = train(&cfg.objective, &cfg.schedule, &cfg.encoder_sizes, &batch, seed, 0)?;
    let reps = encode_v1(&run.model, &batch)?;
    let mut rows = Vec::new();
    for task in ["nonshared", "shared"] {
        let r = probe_once(&reps, &batch, task, 1e-3, seed)?;
        rows.push(Row { value, seed, task, metric: "accuracy", result: r.value });
    }
    Ok(rows)
}

/// `sweep`: full train+probe per (value, seed) cell, parallel across cells,
/// merged into a CSV whose row order never depends on scheduling.
pub fn cmd_sweep(param: &str, values: &[f64], config: &Path, out: &Path) -> Result<i32> {
    if values.len() < 2 {
        return Err(Error::Config("sweep needs at least 2 values".into()));
    }
    let cfg = ExperimentConfig::load(config)?;
    if cfg.seeds.len() < 3 {
        return Err(Error::Config("sweep needs at least 3 seeds".into()));
    }
    if param == "epochs" {
        for &v in values {
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::Config(format!("epochs value {v} is not a positive integer")));
            }
        }
    } else if param != "lambda" {
        return Err(Error::Config(format!(
            "unknown sweep param '{param}' (expected lambda or epochs)"
        )));
    }

    let mut cells: Vec<(f64, u64)> = Vec::new();
    for &v in values {
        for &s in &cfg.seeds {
            cells.push((v, s));
        }
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Vec<Row>>>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    let workers = worker_count().min(cells.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (v, s) = cells[i];
                let rows = sweep_cell(&cfg, param, v, s);
                slots.lock().expect("sweep worker poisoned the lock")[i] = Some(rows);
            });
        }
    });

    let mut rows: Vec<Row> = Vec::new();
    for slot in slots.into_inner().expect("sweep worker poisoned the lock") {
        rows.extend(slot.expect("every cell was dispatched")?);
    }
    rows.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .expect("sweep values are finite")
            .then(a.seed.cmp(&b.seed))
            .then(a.task.cmp(b.task))
    });

    let mut csv = String::from("param_value,seed,task,metric,value\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.value, r.seed, r.task, r.metric, r.result));
    }
    atomic_write(out, csv.as_bytes())?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(0)
}

/// `report`: aggregate a sweep CSV into per-(value, task) mean/std JSON.
pub fn cmd_report(input: &Path, out: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(input)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("param_value,seed,task,metric,value") => {}
        _ => return Err(Error::Format("missing sweep CSV header".into())),
    }
    // group key -> (metric, values); BTreeMap keeps the output order stable
    let mut groups: std::collections::BTreeMap<(String, String), (String, Vec<f64>)> =
        Default::default();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!("row {}: expected 5 fields", lineno + 2)));
        }
        let value: f64 = fields[4]
            .parse()
            .map_err(|_| Error::Format(format!("row {}: bad value '{}'", lineno + 2, fields[4])))?;
        groups
            .entry((fields[0].to_string(), fields[2].to_string()))
            .or_insert_with(|| (fields[3].to_string(), Vec::new()))
            .1
            .push(value);
    }

    let mut entries = Vec::new();
    for ((param_value, task), (metric, vals)) in &groups {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        entries.push(json!({
            "param_value": param_value.parse::<f64>().map_err(|_| {
                Error::Format(format!("bad param value '{param_value}'"))
            })?,
            "task": task,
            "metric": metric,
            "mean": mean,
            "std": std,
            "n_runs": vals.len(),
        }));
    }
    entries.sort_by(|a, b| {
        let (va, vb) = (a["param_value"].as_f64().unwrap(), b["param_value"].as_f64().unwrap());
        va.partial_cmp(&vb)
            .expect("param values are finite")
            .then(a["task"].as_str().cmp(&b["task"].as_str()))
    });
    write_report(out, json!({ "groups": entries }))?;
    println!("wrote {} groups to {}", groups.len(), out.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "base": "simclr", "reg": "none",
        "lambda1": 1.0, "lambda2": 1.0, "tau": 0.5, "sigma": 0.1,
        "rho": 0.05, "ema_decay": 0.99, "bt_off_diag": 0.005,
        "data": {"mode": "continuous", "dim_shared": 2, "dim_private": 2,
                 "dim_view": 8, "n_samples": 96, "noise_std": 0.1,
                 "classes_shared": 2, "classes_nonshared": 2, "seed": 3},
        "epochs": 1, "batch_size": 32, "lr": 0.002, "optimizer": "adam",
        "encoder_sizes": [8, 8, 4], "seeds": [1, 2, 3], "out_dir": "OUT"
    }"#;

    fn write_config(dir: &Path) -> PathBuf {
        let path = dir.join("config.json");
        let body = SMALL.replace("OUT", dir.join("out").to_str().unwrap());
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn gen_train_probe_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let data = dir.path().join("data.mvb");
        assert_eq!(cmd_gen(&config, Some("continuous"), &data).unwrap(), 0);
        assert_eq!(cmd_train(&config, Some(&data)).unwrap(), 0);
        let out = dir.path().join("out");
        for f in ["enc1.json", "enc2.json", "history.csv", "run.json"] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        let probe_out = dir.path().join("probe.json");
        let code = cmd_probe(&config, &out.join("enc1.json"), Some(&data), "shared", 1e-3, Some(&probe_out)).unwrap();
        assert_eq!(code, 0);
        let body: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&probe_out).unwrap()).unwrap();
        assert_eq!(body["results"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn probe_rejects_unknown_task() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let data = dir.path().join("data.mvb");
        cmd_gen(&config, Some("continuous"), &data).unwrap();
        cmd_train(&config, Some(&data)).unwrap();
        let ck = dir.path().join("out/enc1.json");
        let err = cmd_probe(&config, &ck, Some(&data), "bogus", 1e-3, None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn sweep_rows_and_report_groups() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let csv_path = dir.path().join("sweep.csv");
        cmd_sweep("lambda", &[0.001, 1.0], &config, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        // header + 2 values x 3 seeds x 2 tasks
        assert_eq!(text.lines().count(), 1 + 12);
        let report_path = dir.path().join("report.json");
        cmd_report(&csv_path, &report_path).unwrap();
        let body: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
        assert_eq!(body["groups"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn sweep_is_deterministic_across_worker_counts() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        std::env::set_var("MVINFO_THREADS", "1");
        cmd_sweep("lambda", &[0.01, 0.1], &config, &a).unwrap();
        std::env::set_var("MVINFO_THREADS", "4");
        cmd_sweep("lambda", &[0.01, 0.1], &config, &b).unwrap();
        std::env::remove_var("MVINFO_THREADS");
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn sweep_validates_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_config(dir.path());
        let out = dir.path().join("x.csv");
        assert!(matches!(
            cmd_sweep("lambda", &[1.0], &config, &out).unwrap_err(),
            Error::Config(_)
        ));
        assert!(matches!(
            cmd_sweep("epochs", &[1.5, 2.0], &config, &out).unwrap_err(),
            Error::Config(_)
        ));
        assert!(!out.exists());
    }
}
