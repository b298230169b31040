//! Shared-latent discrete systems: v1 = (s, n1), v2 = (s, n2) with the
//! shared latent s recoverable from either view, and a task variable whose
//! dependence on the view-1 private latent is controlled by `coupling`.

use crate::error::{Error, Result};
use crate::info::table::{JointTable, MAX_ALPHABET};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSystemSpec {
    pub n_shared: usize,
    pub n_private1: usize,
    pub n_private2: usize,
    pub t_card: usize,
    /// 0 = task depends only on the shared latent; 1 = rows depend fully
    /// on the view-1 private latent.
    pub coupling: f64,
    pub seed: u64,
}

impl DiscreteSystemSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("n_shared", self.n_shared),
            ("n_private1", self.n_private1),
            ("n_private2", self.n_private2),
            ("t_card", self.t_card),
        ] {
            if n < 1 || n > 4 {
                return Err(Error::Validation(format!("{name} = {n}, must be in 1..=4")));
            }
        }
        if self.n_shared * self.n_private1 > MAX_ALPHABET
            || self.n_shared * self.n_private2 > MAX_ALPHABET
        {
            return Err(Error::Capacity(format!(
                "per-view alphabet exceeds {MAX_ALPHABET}"
            )));
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return Err(Error::Validation(format!(
                "coupling = {}, must be in [0,1]",
                self.coupling
            )));
        }
        Ok(())
    }
}

/// Probability vector bounded away from zero (min entry >= 0.5/n).
fn positive_dist(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -rng.uniform_open().ln()).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x = 0.5 * (*x / s) + 0.5 / n as f64;
    }
    v
}

/// Builds the exact joint table.
///
/// The task rows are p(t|s,n1) = (1-c) A_s + c B_{s,n1} where A_s is the
/// p(n1)-weighted mean of the B rows, so the conditional I(v1,T|v2) is zero
/// at c = 0 and nondecreasing in c (each KL term from the fixed center A_s
/// is convex in c and zero at the origin).
pub fn make_discrete_system(spec: &DiscreteSystemSpec) -> Result<JointTable> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let ns = spec.n_shared;
    let np1 = spec.n_private1;
    let np2 = spec.n_private2;
    let nt = spec.t_card;
    let c = spec.coupling;

    let p_s = positive_dist(&mut rng, ns);
    let p_n1 = positive_dist(&mut rng, np1);
    let p_n2 = positive_dist(&mut rng, np2);

    // B rows: p(t | s, n1) at full coupling
    let b_rows: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|_| (0..np1).map(|_| positive_dist(&mut rng, nt)).collect())
        .collect();
    // A_s = weighted mean of B rows over n1
    let a_rows: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            (0..nt)
                .map(|t| (0..np1).map(|m| p_n1[m] * b_rows[s][m][t]).sum())
                .collect()
        })
        .collect();

    let n1_size = ns * np1;
    let n2_size = ns * np2;
    let mut probs = vec![0.0; n1_size * n2_size * nt];
    for s in 0..ns {
        for m in 0..np1 {
            let v1 = s * np1 + m;
            for q in 0..np2 {
                let v2 = s * np2 + q;
                let base = p_s[s] * p_n1[m] * p_n2[q];
                for t in 0..nt {
                    let row = (1.0 - c) * a_rows[s][t] + c * b_rows[s][m][t];
                    probs[(v1 * n2_size + v2) * nt + t] = base * row;
                }
            }
        }
    }
    // renormalize away accumulated rounding (stays within 1e-12 of 1)
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    JointTable::new([n1_size, n2_size, nt], probs)
}
