//! Continuous multi-view generator: latents s (shared), n1, n2 (private),
//! nonlinear mixed views, and task labels with controllable non-shared
//! task-relevant information (t_nonshared depends only on n1).

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSpec {
    pub dim_shared: usize,
    pub dim_private: usize,
    pub dim_view: usize,
    pub n_samples: usize,
    pub noise_std: f64,
    pub classes_shared: usize,
    pub classes_nonshared: usize,
    pub seed: u64,
}

impl ContinuousSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim_view < self.dim_shared + self.dim_private {
            return Err(Error::Validation(format!(
                "dim_view {} < dim_shared {} + dim_private {}",
                self.dim_view, self.dim_shared, self.dim_private
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Validation("noise_std must be >= 0".into()));
        }
        if self.classes_shared < 2 || self.classes_nonshared < 2 {
            return Err(Error::Validation("label cardinalities must be >= 2".into()));
        }
        Ok(())
    }
}

/// Retained latents for diagnostics; never written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Latents {
    pub s: Vec<f32>,
    pub n1: Vec<f32>,
    pub n2: Vec<f32>,
}

/// Paired continuous views with shared-task and non-shared-task labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewBatch {
    pub n: usize,
    pub dim_view: usize,
    pub v1: Vec<f32>,
    pub v2: Vec<f32>,
    pub t_shared: Vec<i32>,
    pub t_nonshared: Vec<i32>,
    pub t_reg: Vec<f32>,
    pub latents: Option<Latents>,
    pub spec: ContinuousSpec,
}

impl MultiViewBatch {
    pub fn row_v1(&self, i: usize) -> &[f32] {
        &self.v1[i * self.dim_view..(i + 1) * self.dim_view]
    }
    pub fn row_v2(&self, i: usize) -> &[f32] {
        &self.v2[i * self.dim_view..(i + 1) * self.dim_view]
    }
}

/// Equal-mass quantile binning by rank (ties broken by index), so classes
/// are balanced by construction.
pub fn quantile_bins(values: &[f64], classes: usize) -> Vec<i32> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut labels = vec![0i32; n];
    for (rank, &idx) in order.iter().enumerate() {
        labels[idx] = ((rank * classes) / n) as i32;
    }
    labels
}

fn mixing_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Vec<f64> {
    // entries scaled so pre-activations are ~unit variance and tanh stays
    // mostly in its linear regime
    let scale = 1.0 / (cols.max(1) as f64).sqrt();
    (0..rows * cols).map(|_| rng.normal() * scale).collect()
}

pub fn sample_continuous(spec: &ContinuousSpec) -> Result<MultiViewBatch> {
    spec.validate()?;
    let ds = spec.dim_shared;
    let dp = spec.dim_private;
    let dl = ds + dp;
    let dv = spec.dim_view;
    let n = spec.n_samples;

    let mut rng = SplitMix64::new(spec.seed);
    // fixed structural draws first so they don't depend on n_samples
    let a1 = mixing_matrix(&mut rng, dv, dl);
    let a2 = mixing_matrix(&mut rng, dv, dl);
    let w_shared: Vec<f64> = (0..ds).map(|_| rng.normal()).collect();
    let w_nonshared: Vec<f64> = (0..dp).map(|_| rng.normal()).collect();
    let w_reg: Vec<f64> = (0..dl).map(|_| rng.normal()).collect();

    let mut s = vec![0.0f64; n * ds];
    let mut n1 = vec![0.0f64; n * dp];
    let mut n2 = vec![0.0f64; n * dp];
    for x in s.iter_mut() {
        *x = rng.normal();
    }
    for x in n1.iter_mut() {
        *x = rng.normal();
    }
    for x in n2.iter_mut() {
        *x = rng.normal();
    }

    let mut v1 = vec![0.0f32; n * dv];
    let mut v2 = vec![0.0f32; n * dv];
    let mut proj_shared = vec![0.0f64; n];
    let mut proj_nonshared = vec![0.0f64; n];
    let mut t_reg = vec![0.0f32; n];

    let mut latent = vec![0.0f64; dl];
    for i in 0..n {
        // view 1 from [s; n1]
        latent[..ds].copy_from_slice(&s[i * ds..(i + 1) * ds]);
        latent[ds..].copy_from_slice(&n1[i * dp..(i + 1) * dp]);
        for r in 0..dv {
            let mut acc = 0.0;
            for c in 0..dl {
                acc += a1[r * dl + c] * latent[c];
            }
            v1[i * dv + r] = (acc.tanh() + spec.noise_std * rng.normal()) as f32;
        }
        let mut reg = 0.0;
        for c in 0..dl {
            reg += w_reg[c] * latent[c];
        }
        t_reg[i] = reg as f32;
        for c in 0..ds {
            proj_shared[i] += w_shared[c] * latent[c];
        }
        for c in 0..dp {
            proj_nonshared[i] += w_nonshared[c] * latent[ds + c];
        }
        // view 2 from [s; n2]
        latent[ds..].copy_from_slice(&n2[i * dp..(i + 1) * dp]);
        for r in 0..dv {
            let mut acc = 0.0;
            for c in 0..dl {
                acc += a2[r * dl + c] * latent[c];
            }
            v2[i * dv + r] = (acc.tanh() + spec.noise_std * rng.normal()) as f32;
        }
    }

    let t_shared = quantile_bins(&proj_shared, spec.classes_shared);
    let t_nonshared = quantile_bins(&proj_nonshared, spec.classes_nonshared);

    Ok(MultiViewBatch {
        n,
        dim_view: dv,
        v1,
        v2,
        t_shared,
        t_nonshared,
        t_reg,
        latents: Some(Latents {
            s: s.iter().map(|&x| x as f32).collect(),
            n1: n1.iter().map(|&x| x as f32).collect(),
            n2: n2.iter().map(|&x| x as f32).collect(),
        }),
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ContinuousSpec {
        ContinuousSpec {
            dim_shared: 4,
            dim_private: 4,
            dim_view: 16,
            n_samples: 256,
            noise_std: 0.1,
            classes_shared: 2,
            classes_nonshared: 2,
            seed: 5,
        }
    }

    #[test]
    fn determinism() {
        let a = sample_continuous(&spec()).unwrap();
        let b = sample_continuous(&spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn balanced_labels() {
        let b = sample_continuous(&spec()).unwrap();
        let ones = b.t_shared.iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 128);
        let ones = b.t_nonshared.iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 128);
    }

    #[test]
    fn zero_private_zero_noise_views_depend_on_s_only() {
        let s = ContinuousSpec {
            dim_shared: 4,
            dim_private: 0,
            dim_view: 8,
            n_samples: 64,
            noise_std: 0.0,
            classes_shared: 2,
            classes_nonshared: 2,
            seed: 9,
        };
        let b = sample_continuous(&s).unwrap();
        // identical shared latents produce identical views; spot check by
        // re-generating and comparing (determinism already covers this) and
        // verifying the nonshared projection is constant -> labels are a
        // pure rank artifact
        assert_eq!(b.latents.as_ref().unwrap().n1.len(), 0);
        assert!(b.v1.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn quantile_bins_equal_mass() {
        let vals: Vec<f64> = (0..12).map(|i| (i as f64 * 7.3) % 5.0).collect();
        let bins = quantile_bins(&vals, 3);
        for c in 0..3 {
            assert_eq!(bins.iter().filter(|&&b| b == c).count(), 4);
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let mut s = spec();
        s.dim_view = 4;
        assert!(sample_continuous(&s).is_err());
    }
}
