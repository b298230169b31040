//! Training losses, built from tape primitives so every gradient is exact
//! reverse-mode and finite-difference checkable.

use crate::autodiff::mlp::{MlpParams, MlpVars};
use crate::autodiff::tape::{Tape, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Large negative logit used to mask self-similarities out of softmaxes.
const MASK: f64 = -1e30;

fn dims_of(tape: &Tape, v: Var) -> Result<(usize, usize)> {
    tape.value(v).dims2()
}

fn check_same(tape: &Tape, a: Var, b: Var, what: &str) -> Result<(usize, usize)> {
    let (n, d) = dims_of(tape, a)?;
    let (n2, d2) = dims_of(tape, b)?;
    if (n, d) != (n2, d2) {
        return Err(Error::Shape(format!("{what}: {n}x{d} vs {n2}x{d2}")));
    }
    Ok((n, d))
}

/// NT-Xent over a batch of positive pairs (z1_i, z2_i). Embeddings are
/// L2-normalized internally; the mean is over all 2n anchors.
pub fn nt_xent(tape: &Tape, z1: Var, z2: Var, tau: f64) -> Result<Var> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("tau must be > 0, got {tau}")));
    }
    let (n, _) = check_same(tape, z1, z2, "nt_xent")?;
    if n < 2 {
        return Err(Error::Precondition(format!(
            "nt_xent needs n >= 2 pairs for negatives, got {n}"
        )));
    }
    let z = tape.concat_rows(z1, z2)?;
    let y = tape.l2_normalize_rows(z)?;
    let sims = tape.scale(tape.matmul_t(y, y)?, 1.0 / tau);

    let m = 2 * n;
    let mut mask = Tensor::zeros(&[m, m]);
    let mut sel = Tensor::zeros(&[m, m]);
    for i in 0..m {
        mask.data[i * m + i] = MASK;
        let partner = (i + n) % m;
        sel.data[i * m + partner] = 1.0;
    }
    let lse = tape.row_logsumexp(tape.add_const(sims, mask)?)?;
    let pos = tape.row_sum(tape.mul_const(sims, sel)?)?;
    Ok(tape.mean(tape.sub(lse, pos)?))
}

/// 2 - 2 cos(pred_i, target_i), averaged over rows. The target branch is a
/// constant tensor: no gradient reaches it.
pub fn byol_loss(tape: &Tape, pred: Var, target: &Tensor) -> Result<Var> {
    let (n, d) = dims_of(tape, pred)?;
    let (tn, td) = target.dims2()?;
    if (n, d) != (tn, td) {
        return Err(Error::Shape(format!("byol_loss: {n}x{d} vs {tn}x{td}")));
    }
    let mut tgt = target.clone();
    for i in 0..n {
        let row = &mut tgt.data[i * d..(i + 1) * d];
        let norm = row.iter().map(|p| p * p).sum::<f64>().sqrt().max(1e-12);
        row.iter_mut().for_each(|p| *p /= norm);
    }
    let yn = tape.l2_normalize_rows(pred)?;
    let cos = tape.row_sum(tape.mul_const(yn, tgt)?)?;
    Ok(tape.offset(tape.scale(tape.mean(cos), -2.0), 2.0))
}

/// theta_target <- decay * theta_target + (1 - decay) * theta_online.
pub fn ema_update(target: &mut MlpParams, online: &MlpParams, decay: f64) -> Result<()> {
    if target.sizes != online.sizes {
        return Err(Error::Shape(format!(
            "ema_update: target sizes {:?} vs online {:?}",
            target.sizes, online.sizes
        )));
    }
    let online_flat: Vec<&Tensor> = online
        .weights
        .iter()
        .zip(&online.biases)
        .flat_map(|(w, b)| [w, b])
        .collect();
    for (t, o) in target.tensors_mut().into_iter().zip(online_flat) {
        for (x, y) in t.data.iter_mut().zip(&o.data) {
            *x = decay * *x + (1.0 - decay) * y;
        }
    }
    Ok(())
}

/// Barlow Twins: columns standardized internally, cross-correlation
/// C = (1/n) z1_hat^T z2_hat, loss = sum_d (C_dd - 1)^2 + w * sum_{d!=e} C_de^2.
pub fn barlow_twins(tape: &Tape, z1: Var, z2: Var, off_diag_weight: f64) -> Result<Var> {
    if off_diag_weight < 0.0 {
        return Err(Error::Config("off_diag_weight must be >= 0".into()));
    }
    let (n, d) = check_same(tape, z1, z2, "barlow_twins")?;
    if n < 2 {
        return Err(Error::Precondition(format!(
            "barlow_twins needs n >= 2 rows to standardize, got {n}"
        )));
    }
    for (name, v) in [("z1", z1), ("z2", z2)] {
        let x = tape.value(v);
        for j in 0..d {
            let mean = (0..n).map(|i| x.data[i * d + j]).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (x.data[i * d + j] - mean).powi(2)).sum::<f64>() / n as f64;
            if var < 1e-12 {
                eprintln!("warning: barlow_twins {name} column {j} has (near-)zero variance");
            }
        }
    }
    let h1 = tape.per_column_standardize(z1)?;
    let h2 = tape.per_column_standardize(z2)?;
    let c = tape.scale(tape.matmul(tape.transpose(h1)?, h2)?, 1.0 / n as f64);

    let mut eye = Tensor::zeros(&[d, d]);
    let mut neg_eye = Tensor::zeros(&[d, d]);
    let mut off = Tensor::new(vec![d, d], vec![1.0; d * d])?;
    for j in 0..d {
        eye.data[j * d + j] = 1.0;
        neg_eye.data[j * d + j] = -1.0;
        off.data[j * d + j] = 0.0;
    }
    let diag_term = tape.sum(tape.square(tape.add_const(tape.mul_const(c, eye)?, neg_eye)?));
    let off_term = tape.sum(tape.square(tape.mul_const(c, off)?));
    tape.add(diag_term, tape.scale(off_term, off_diag_weight))
}

/// Reconstruction term: mean over samples of ||v - mu(z)||^2 where mu is
/// the decoder. Gradients flow into both z and the decoder parameters.
pub fn rc_loss(
    tape: &Tape,
    v: &Tensor,
    z: Var,
    decoder: &MlpParams,
    decoder_vars: &MlpVars,
) -> Result<Var> {
    let (n, dv) = v.dims2()?;
    let (zn, zd) = dims_of(tape, z)?;
    if zn != n {
        return Err(Error::Shape(format!("rc_loss: {n} inputs vs {zn} codes")));
    }
    if decoder.input_dim() != zd || decoder.output_dim() != dv {
        return Err(Error::Shape(format!(
            "rc_loss: decoder maps {} -> {}, need {zd} -> {dv}",
            decoder.input_dim(),
            decoder.output_dim()
        )));
    }
    let mu = decoder.forward_on(tape, decoder_vars, z)?;
    let neg_v = Tensor {
        shape: v.shape.clone(),
        data: v.data.iter().map(|&x| -x).collect(),
    };
    let diff = tape.add_const(mu, neg_v)?;
    Ok(tape.scale(tape.sum(tape.square(diff)), 1.0 / n as f64))
}

/// z = fv + sigma * eps with seeded standard-normal eps; the gradient of z
/// with respect to fv is the identity.
pub fn reparameterize(tape: &Tape, fv: Var, sigma: f64, seed: u64) -> Result<Var> {
    if sigma <= 0.0 {
        return Err(Error::Config(format!("sigma must be > 0, got {sigma}")));
    }
    let shape = tape.value(fv).shape;
    let mut rng = SplitMix64::new(seed);
    let noise = Tensor {
        data: (0..shape.iter().product::<usize>())
            .map(|_| sigma * rng.normal())
            .collect(),
        shape,
    };
    tape.add_const(fv, noise)
}

/// Empirical uniformity value -(1/n) sum_k ln sum_l exp(-rho ||z_l - fv_k||^2).
/// Larger is more spread; the caller maximizes it (trainer subtracts).
pub fn lbe_loss(tape: &Tape, z: Var, fv: Var, rho: f64) -> Result<Var> {
    if rho <= 0.0 {
        return Err(Error::Config(format!("rho must be > 0, got {rho}")));
    }
    check_same(tape, z, fv, "lbe_loss")?;
    // D_{k,l} = ||z_l||^2 + ||fv_k||^2 - 2 fv_k . z_l
    let gram = tape.scale(tape.matmul_t(fv, z)?, -2.0);
    let z_sq = tape.transpose(tape.row_sum(tape.square(z))?)?; // 1 x n
    let f_sq = tape.row_sum(tape.square(fv))?; // n x 1
    let dist = tape.add_col(tape.add_row(gram, z_sq)?, f_sq)?;
    let lse = tape.row_logsumexp(tape.scale(dist, -rho))?;
    Ok(tape.scale(tape.mean(lse), -1.0))
}

/// Elimination regularizer: mean over rows of ||f1(v1) - f2(v2)||^2.
pub fn mibip_loss(tape: &Tape, f1v1: Var, f2v2: Var) -> Result<Var> {
    let (n, _) = check_same(tape, f1v1, f2v2, "mibip_loss")?;
    let diff = tape.sub(f1v1, f2v2)?;
    Ok(tape.scale(tape.sum(tape.square(diff)), 1.0 / n as f64))
}
