//! Frozen-representation probes: multinomial logistic classification and
//! closed-form ridge regression, each on a seeded 80/20 split.

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const GRAD_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Accuracy,
    Mse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub task: String,
    pub metric: MetricKind,
    pub value: f64,
    pub n_eval: usize,
    pub seed: u64,
}

/// Seeded stratified split: within each class, a shuffled `train_frac`
/// prefix goes to training. Classes with one sample train only.
fn stratified_split(
    labels: &[i32],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&train_frac) || train_frac <= 0.0 {
        return Err(Error::Config(format!(
            "train_frac must lie in (0,1), got {train_frac}"
        )));
    }
    let mut by_class: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for idx in by_class.values_mut() {
        rng.shuffle(idx);
        let n_train = ((idx.len() as f64 * train_frac).round() as usize)
            .max(1)
            .min(idx.len());
        train.extend_from_slice(&idx[..n_train]);
        eval.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    eval.sort_unstable();
    let classes_in_train: std::collections::BTreeSet<i32> =
        train.iter().map(|&i| labels[i]).collect();
    if classes_in_train.len() < 2 {
        return Err(Error::Precondition(format!(
            "stratification failed: training split holds {} class(es), need >= 2",
            classes_in_train.len()
        )));
    }
    if eval.is_empty() {
        return Err(Error::Precondition("evaluation split is empty".into()));
    }
    Ok((train, eval))
}

/// Mean softmax cross-entropy and its gradient for a linear classifier
/// (w: d x k, b: k) on rows of x.
fn softmax_loss_grad(
    x: &Tensor,
    labels: &[usize],
    w: &[f64],
    b: &[f64],
    k: usize,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (n, d) = x.dims2().unwrap();
    let mut loss = 0.0;
    let mut gw = vec![0.0; d * k];
    let mut gb = vec![0.0; k];
    let mut logits = vec![0.0; k];
    for (i, &y) in labels.iter().enumerate() {
        let row = &x.data[i * d..(i + 1) * d];
        for (j, l) in logits.iter_mut().enumerate() {
            *l = b[j] + row.iter().zip(w[j * d..(j + 1) * d].iter()).map(|(p, q)| p * q).sum::<f64>();
        }
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|&l| (l - mx).exp()).sum();
        loss -= logits[y] - mx - denom.ln();
        for j in 0..k {
            let soft = (logits[j] - mx).exp() / denom;
            let delta = soft - if j == y { 1.0 } else { 0.0 };
            gb[j] += delta;
            for (g, &p) in gw[j * d..(j + 1) * d].iter_mut().zip(row) {
                *g += delta * p;
            }
        }
    }
    let inv = 1.0 / n as f64;
    loss *= inv;
    gw.iter_mut().for_each(|g| *g *= inv);
    gb.iter_mut().for_each(|g| *g *= inv);
    (loss, gw, gb)
}

/// Multinomial logistic regression by full-batch gradient descent with a
/// backtracking step size, run to gradient norm < 1e-6 or 5000 iterations.
/// Returns held-out accuracy.
pub fn linear_probe(
    reps: &Tensor,
    labels: &[i32],
    task: &str,
    train_frac: f64,
    seed: u64,
) -> Result<ProbeResult> {
    let (n, d) = reps.dims2()?;
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} rows", labels.len())));
    }
    let (train, eval) = stratified_split(labels, train_frac, seed)?;

    // relabel to contiguous 0..k over the classes present anywhere
    let classes: Vec<i32> = {
        let set: std::collections::BTreeSet<i32> = labels.iter().copied().collect();
        set.into_iter().collect()
    };
    let k = classes.len();
    let to_idx = |l: i32| classes.binary_search(&l).unwrap();

    let gather = |idx: &[usize]| {
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(&reps.data[i * d..(i + 1) * d]);
        }
        Tensor {
            shape: vec![idx.len(), d],
            data,
        }
    };
    let x_train = gather(&train);
    let y_train: Vec<usize> = train.iter().map(|&i| to_idx(labels[i])).collect();

    let mut w = vec![0.0f64; d * k];
    let mut b = vec![0.0f64; k];
    let mut lr = 1.0;
    let (mut loss, mut gw, mut gb) = softmax_loss_grad(&x_train, &y_train, &w, &b, k);
    for _ in 0..MAX_ITERS {
        let gnorm = (gw.iter().chain(&gb).map(|g| g * g).sum::<f64>()).sqrt();
        if gnorm < GRAD_TOL {
            break;
        }
        // backtracking: shrink the step until the loss does not increase
        loop {
            let wc: Vec<f64> = w.iter().zip(&gw).map(|(p, g)| p - lr * g).collect();
            let bc: Vec<f64> = b.iter().zip(&gb).map(|(p, g)| p - lr * g).collect();
            let (lc, gwc, gbc) = softmax_loss_grad(&x_train, &y_train, &wc, &bc, k);
            if lc <= loss + 1e-15 || lr < 1e-12 {
                w = wc;
                b = bc;
                loss = lc;
                gw = gwc;
                gb = gbc;
                lr = (lr * 1.1).min(1e3);
                break;
            }
            lr *= 0.5;
        }
    }

    let mut correct = 0usize;
    for &i in &eval {
        let row = &reps.data[i * d..(i + 1) * d];
        let mut best = (f64::NEG_INFINITY, 0usize);
        for j in 0..k {
            let logit = b[j]
                + row
                    .iter()
                    .zip(w[j * d..(j + 1) * d].iter())
                    .map(|(p, q)| p * q)
                    .sum::<f64>();
            if logit > best.0 {
                best = (logit, j);
            }
        }
        if best.1 == to_idx(labels[i]) {
            correct += 1;
        }
    }
    Ok(ProbeResult {
        task: task.to_string(),
        metric: MetricKind::Accuracy,
        value: correct as f64 / eval.len() as f64,
        n_eval: eval.len(),
        seed,
    })
}

/// Solve A x = rhs by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<f64>, mut rhs: Vec<f64>, m: usize) -> Result<Vec<f64>> {
    let scale = a
        .iter()
        .map(|x| x.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| {
            a[i * m + col]
                .abs()
                .partial_cmp(&a[j * m + col].abs())
                .unwrap()
        });
        let p = pivot.unwrap();
        if a[p * m + col].abs() < 1e-12 * scale {
            return Err(Error::Solver(
                "normal matrix is singular; set l2 > 0 to regularize".into(),
            ));
        }
        if p != col {
            for j in 0..m {
                a.swap(col * m + j, p * m + j);
            }
            rhs.swap(col, p);
        }
        let inv = 1.0 / a[col * m + col];
        for i in col + 1..m {
            let f = a[i * m + col] * inv;
            if f == 0.0 {
                continue;
            }
            for j in col..m {
                a[i * m + j] -= f * a[col * m + j];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for j in i + 1..m {
            acc -= a[i * m + j] * x[j];
        }
        x[i] = acc / a[i * m + i];
    }
    Ok(x)
}

/// Closed-form ridge regression (intercept unpenalized) on a seeded split;
/// reports held-out MSE.
pub fn ridge_probe(
    reps: &Tensor,
    targets: &[f64],
    task: &str,
    l2: f64,
    train_frac: f64,
    seed: u64,
) -> Result<ProbeResult> {
    let (n, d) = reps.dims2()?;
    if targets.len() != n {
        return Err(Error::Shape(format!(
            "{} targets for {n} rows",
            targets.len()
        )));
    }
    if l2 < 0.0 {
        return Err(Error::Config("l2 must be >= 0".into()));
    }
    if !(0.0..1.0).contains(&train_frac) || train_frac <= 0.0 {
        return Err(Error::Config(format!(
            "train_frac must lie in (0,1), got {train_frac}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let n_train = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let (train, eval) = order.split_at(n_train);

    // design matrix with trailing intercept column
    let m = d + 1;
    let mut a = vec![0.0f64; m * m];
    let mut rhs = vec![0.0f64; m];
    let feat = |i: usize, j: usize| {
        if j < d {
            reps.data[i * d + j]
        } else {
            1.0
        }
    };
    for &i in train {
        for p in 0..m {
            let fp = feat(i, p);
            rhs[p] += fp * targets[i];
            for q in 0..m {
                a[p * m + q] += fp * feat(i, q);
            }
        }
    }
    for p in 0..d {
        a[p * m + p] += l2; // intercept left unpenalized
    }
    let coef = solve(a, rhs, m)?;

    let mut sse = 0.0;
    for &i in eval {
        let pred: f64 = (0..m).map(|j| coef[j] * feat(i, j)).sum();
        sse += (pred - targets[i]).powi(2);
    }
    Ok(ProbeResult {
        task: task.to_string(),
        metric: MetricKind::Mse,
        value: sse / eval.len() as f64,
        n_eval: eval.len(),
        seed,
    })
}
