//! Variational mutual-information estimators: InfoNCE, NWJ and MINE, each
//! trained by maximizing its own bound with a small critic network.

use crate::autodiff::mlp::MlpParams;
use crate::autodiff::optim::AdamState;
use crate::autodiff::tape::Tape;
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Critic scores are squashed to (-SCORE_CAP, SCORE_CAP) so exp() terms in
/// the bounds cannot blow up during training.
const SCORE_CAP: f64 = 8.0;
const CRITIC_LR: f64 = 3e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiEstimator {
    InfoNce,
    Nwj,
    Mine,
}

impl std::str::FromStr for MiEstimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infonce" => Ok(MiEstimator::InfoNce),
            "nwj" => Ok(MiEstimator::Nwj),
            "mine" => Ok(MiEstimator::Mine),
            other => Err(Error::Domain(format!("unknown estimator '{other}'"))),
        }
    }
}

/// n paired draws of correlated Gaussians: each coordinate pair has
/// correlation rho, so the true MI is -dim/2 * ln(1 - rho^2).
pub fn gaussian_pair_batch(n: usize, dim: usize, rho: f64, seed: u64) -> Result<(Tensor, Tensor)> {
    if !(-1.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation must be in (-1,1), got {rho}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut x = Tensor::zeros(&[n, dim]);
    let mut y = Tensor::zeros(&[n, dim]);
    let tail = (1.0 - rho * rho).sqrt();
    for i in 0..n * dim {
        let a = rng.normal();
        x.data[i] = a;
        y.data[i] = rho * a + tail * rng.normal();
    }
    Ok((x, y))
}

fn concat_pairs(x: &Tensor, y: &Tensor, pairs: &[(usize, usize)]) -> Tensor {
    let dx = x.shape[1];
    let dy = y.shape[1];
    let mut out = Tensor::zeros(&[pairs.len(), dx + dy]);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        out.data[r * (dx + dy)..r * (dx + dy) + dx].copy_from_slice(&x.data[i * dx..(i + 1) * dx]);
        out.data[r * (dx + dy) + dx..(r + 1) * (dx + dy)]
            .copy_from_slice(&y.data[j * dy..(j + 1) * dy]);
    }
    out
}

fn bounded_scores_frozen(critic: &MlpParams, input: &Tensor) -> Result<Vec<f64>> {
    let raw = critic.forward(input)?;
    Ok(raw
        .data
        .iter()
        .map(|&s| SCORE_CAP * (s / SCORE_CAP).tanh())
        .collect())
}

/// Train the critic to maximize the chosen bound on the given paired
/// sample, then return the final full-batch estimate in nats.
pub fn estimate_mi(
    estimator: MiEstimator,
    x: &Tensor,
    y: &Tensor,
    critic: &mut MlpParams,
    train_steps: usize,
    seed: u64,
) -> Result<f64> {
    let (n, dx) = x.dims2()?;
    let (ny, dy) = y.dims2()?;
    if ny != n {
        return Err(Error::Shape(format!("{n} x-rows vs {ny} y-rows")));
    }
    if n < 64 {
        return Err(Error::Precondition(format!(
            "estimate_mi needs >= 64 paired samples, got {n}"
        )));
    }
    if critic.input_dim() != dx + dy || critic.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "critic maps {} -> {}, need {} -> 1",
            critic.input_dim(),
            critic.output_dim(),
            dx + dy
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut adam = {
        let flat: Vec<&Tensor> = critic
            .weights
            .iter()
            .zip(&critic.biases)
            .flat_map(|(w, b)| [w, b])
            .collect();
        AdamState::new(&flat)
    };

    let joint: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let joint_input = concat_pairs(x, y, &joint);
    // InfoNCE scores the full n x n pair grid; it is built once
    let all_pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let grid_input = match estimator {
        MiEstimator::InfoNce => Some(concat_pairs(x, y, &all_pairs)),
        _ => None,
    };
    let mut eye = Tensor::zeros(&[n, n]);
    for i in 0..n {
        eye.data[i * n + i] = 1.0;
    }
    let ln_n = (n as f64).ln();

    for _ in 0..train_steps {
        let tape = Tape::new();
        let cvars = critic.leaves(&tape);
        let bounded = |v| -> Result<_> {
            Ok(tape.scale(tape.tanh(tape.scale(v, 1.0 / SCORE_CAP)), SCORE_CAP))
        };
        let neg_value = match estimator {
            MiEstimator::InfoNce => {
                let inp = tape.leaf(grid_input.clone().unwrap());
                let raw = critic.forward_on(&tape, &cvars, inp)?;
                let s = tape.reshape(bounded(raw)?, vec![n, n])?;
                let lse = tape.row_logsumexp(s)?;
                let diag = tape.row_sum(tape.mul_const(s, eye.clone())?)?;
                // value = ln n - mean(lse - diag); minimize the mean
                tape.mean(tape.sub(lse, diag)?)
            }
            MiEstimator::Nwj | MiEstimator::Mine => {
                let mut perm: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut perm);
                let marg: Vec<(usize, usize)> =
                    (0..n).map(|i| (i, perm[i])).collect();
                let jin = tape.leaf(joint_input.clone());
                let min = tape.leaf(concat_pairs(x, y, &marg));
                let sj = bounded(critic.forward_on(&tape, &cvars, jin)?)?;
                let sm = bounded(critic.forward_on(&tape, &cvars, min)?)?;
                let value = match estimator {
                    MiEstimator::Nwj => {
                        // E_p[T] - E_q[e^{T-1}]
                        tape.sub(tape.mean(sj), tape.mean(tape.exp(tape.offset(sm, -1.0))))?
                    }
                    _ => {
                        // MINE: E_p[T] - ln E_q[e^T]
                        let lse = tape.mean(tape.row_logsumexp(tape.transpose(sm)?)?);
                        tape.sub(tape.mean(sj), tape.offset(lse, -ln_n))?
                    }
                };
                tape.scale(value, -1.0)
            }
        };
        let grads = tape.backward(neg_value)?;
        let order = MlpParams::var_order(&cvars);
        let gts: Vec<Tensor> = order
            .iter()
            .map(|v| {
                grads
                    .wrt(*v)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(&tape.value(*v).shape))
            })
            .collect();
        let grefs: Vec<&Tensor> = gts.iter().collect();
        let mut prefs = critic.tensors_mut();
        adam.step(&mut prefs, &grefs, CRITIC_LR)?;
    }

    // final full-batch estimate with the trained critic
    match estimator {
        MiEstimator::InfoNce => {
            let s = bounded_scores_frozen(critic, grid_input.as_ref().unwrap())?;
            let mut acc = 0.0;
            for i in 0..n {
                let row = &s[i * n..(i + 1) * n];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + row.iter().map(|&p| (p - mx).exp()).sum::<f64>().ln();
                acc += row[i] - lse;
            }
            Ok(ln_n + acc / n as f64)
        }
        MiEstimator::Nwj | MiEstimator::Mine => {
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let marg: Vec<(usize, usize)> = (0..n).map(|i| (i, perm[i])).collect();
            let sj = bounded_scores_frozen(critic, &joint_input)?;
            let sm = bounded_scores_frozen(critic, &concat_pairs(x, y, &marg))?;
            let mean_j = sj.iter().sum::<f64>() / n as f64;
            Ok(match estimator {
                MiEstimator::Nwj => {
                    mean_j - sm.iter().map(|&s| (s - 1.0).exp()).sum::<f64>() / n as f64
                }
                _ => {
                    let mx = sm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = mx + sm.iter().map(|&s| (s - mx).exp()).sum::<f64>().ln();
                    mean_j - (lse - ln_n)
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::mlp::Activation;
    use crate::info::gaussian_mi;

    fn critic(seed: u64) -> MlpParams {
        MlpParams::init(&[2, 16, 1], Activation::Tanh, seed).unwrap()
    }

    #[test]
    fn unknown_estimator_name() {
        assert!("dv".parse::<MiEstimator>().is_err());
        assert_eq!("mine".parse::<MiEstimator>().unwrap(), MiEstimator::Mine);
    }

    #[test]
    fn rejects_small_sample() {
        let (x, y) = gaussian_pair_batch(32, 1, 0.5, 1).unwrap();
        let mut c = critic(1);
        assert!(estimate_mi(MiEstimator::InfoNce, &x, &y, &mut c, 1, 1).is_err());
    }

    #[test]
    fn infonce_correlated_gaussians_in_band() {
        // true MI at rho = 0.8 is 0.510826 nats
        let true_mi = gaussian_mi(0.8, 1).unwrap();
        assert!((true_mi - 0.510826).abs() < 1e-6);
        let (x, y) = gaussian_pair_batch(256, 1, 0.8, 11).unwrap();
        let mut c = critic(3);
        let est = estimate_mi(MiEstimator::InfoNce, &x, &y, &mut c, 250, 7).unwrap();
        assert!((0.35..=0.52).contains(&est), "estimate {est}");
    }

    #[test]
    fn independent_data_near_zero_all_estimators() {
        let mut rng = SplitMix64::new(19);
        let n = 256;
        let x = Tensor::matrix(n, 1, (0..n).map(|_| rng.normal()).collect()).unwrap();
        let y = Tensor::matrix(n, 1, (0..n).map(|_| rng.normal()).collect()).unwrap();
        for (i, est) in [MiEstimator::InfoNce, MiEstimator::Nwj, MiEstimator::Mine]
            .into_iter()
            .enumerate()
        {
            let mut c = critic(5 + i as u64);
            let v = estimate_mi(est, &x, &y, &mut c, 200, 23).unwrap();
            assert!((-0.05..=0.1).contains(&v), "{est:?} -> {v}");
        }
    }

    #[test]
    fn infonce_never_exceeds_ln_batch() {
        let (x, y) = gaussian_pair_batch(128, 1, 0.99, 2).unwrap();
        let mut c = critic(9);
        let est = estimate_mi(MiEstimator::InfoNce, &x, &y, &mut c, 150, 4).unwrap();
        assert!(est <= (128f64).ln() + 1e-9, "{est}");
    }
}
