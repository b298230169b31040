//! Executable verifiers for the information decomposition, the Bayes error
//! bound and the minimum squared prediction error, plus the supporting
//! lemma identities.

use crate::error::{Error, Result};
use crate::info::measures::{info_report, scalar_entropy};
use crate::info::partition::{check_sufficiency, minimal_sufficient_partition, SUFFICIENCY_TOL};
use crate::info::table::{Encoding, JointTable};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

/// Residuals of the two interaction-information identities and the
/// conditional-information vanishing that the decomposition rests on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// |I(z_min, v2, T) - I(v1, v2, T)|
    pub min_interaction_residual: f64,
    /// |I(z_suf, v2, T) - I(v1, v2, T)|
    pub suf_interaction_residual: f64,
    /// |I(z_min, T | v2)|
    pub min_cond_info: f64,
    /// I(z_min, v1 | v2): zero on shared-latent systems, reported as the
    /// measured assumption slack otherwise.
    pub assumption_slack: f64,
}

/// Evaluates the lemma identities for the likelihood partition z_min and a
/// sufficient encoding z_suf (identity when not supplied).
pub fn verify_lemma1(table: &JointTable, z_suf: Option<&Encoding>) -> Result<Lemma1Report> {
    let z_min = minimal_sufficient_partition(table, 1)?;
    let suf = match z_suf {
        Some(e) => e.clone(),
        None => Encoding::identity(1, table.sizes()[0]),
    };
    let suf_slack = check_sufficiency(table, &suf)?;
    if suf_slack.abs() > SUFFICIENCY_TOL {
        return Err(Error::Precondition(format!(
            "supplied encoding is not sufficient (slack {suf_slack})"
        )));
    }
    let r_id = info_report(table, &Encoding::identity(1, table.sizes()[0]))?;
    let r_min = info_report(table, &z_min)?;
    let r_suf = info_report(table, &suf)?;

    use crate::info::measures::{Axis, ExtendedJoint};
    let ext_min = ExtendedJoint::build(table, &z_min)?;
    let assumption_slack = ext_min.cond_mi(Axis::Z, Axis::V1, Axis::V2);

    Ok(Lemma1Report {
        min_interaction_residual: (r_min.i_z_v2_t - r_id.i_v1_v2_t).abs(),
        suf_interaction_residual: (r_suf.i_z_v2_t - r_id.i_v1_v2_t).abs(),
        min_cond_info: r_min.i_z_t_given_v2.abs(),
        assumption_slack,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem1Report {
    /// |I(v1,T) - I(z_min,T) - I(v1,T|v2)|
    pub decomposition_residual: f64,
    /// |I(z_suf,T) - I(z_min,T) - I(z_suf,T|v2)|
    pub suf_decomposition_residual: f64,
    /// I(v1,T) - I(z_suf,T) >= 0
    pub ordering_slack_top: f64,
    /// I(z_suf,T) - I(z_min,T) >= 0
    pub ordering_slack_bottom: f64,
    pub i_v1_t: f64,
    pub i_zsuf_t: f64,
    pub i_zmin_t: f64,
}

/// Information decomposition: I(v1,T) = I(z_min,T) + I(v1,T|v2) and
/// I(z_suf,T) = I(z_min,T) + I(z_suf,T|v2), with the ordering
/// I(v1,T) >= I(z_suf,T) >= I(z_min,T). Exact on shared-latent systems.
pub fn verify_theorem1(table: &JointTable, enc_suf: &Encoding) -> Result<Theorem1Report> {
    let suf_slack = check_sufficiency(table, enc_suf)?;
    if suf_slack.abs() > SUFFICIENCY_TOL {
        return Err(Error::Precondition(format!(
            "encoding is not sufficient: sufficiency slack {suf_slack}"
        )));
    }
    let z_min = minimal_sufficient_partition(table, 1)?;
    let r_id = info_report(table, &Encoding::identity(1, table.sizes()[0]))?;
    let r_min = info_report(table, &z_min)?;
    let r_suf = info_report(table, enc_suf)?;

    Ok(Theorem1Report {
        decomposition_residual: (r_id.i_v1_t - r_min.i_z_t - r_id.i_v1_t_given_v2).abs(),
        suf_decomposition_residual: (r_suf.i_z_t - r_min.i_z_t - r_suf.i_z_t_given_v2).abs(),
        ordering_slack_top: r_id.i_v1_t - r_suf.i_z_t,
        ordering_slack_bottom: r_suf.i_z_t - r_min.i_z_t,
        i_v1_t: r_id.i_v1_t,
        i_zsuf_t: r_suf.i_z_t,
        i_zmin_t: r_min.i_z_t,
    })
}

/// Bayes error of a 2-axis joint p(z, t): 1 - sum_z max_t p(z, t).
pub fn bayes_error(joint_z_t: &[Vec<f64>]) -> Result<f64> {
    if joint_z_t.is_empty() || joint_z_t[0].is_empty() {
        return Err(Error::Validation("empty joint".into()));
    }
    let nt = joint_z_t[0].len();
    let mut sum = 0.0;
    let mut hit = 0.0;
    for row in joint_z_t {
        if row.len() != nt {
            return Err(Error::Validation("ragged joint".into()));
        }
        for &p in row {
            if !(p >= 0.0) {
                return Err(Error::Validation(format!("negative or NaN entry {p}")));
            }
            sum += p;
        }
        hit += row.iter().cloned().fold(0.0, f64::max);
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("joint sums to {sum}")));
    }
    Ok(1.0 - hit)
}

/// Clamp to the feasible Bayes-error range [0, 1 - 1/|T|].
pub fn gamma_threshold(x: f64, t_card: usize) -> Result<f64> {
    if t_card < 2 {
        return Err(Error::Domain(format!(
            "threshold needs |T| >= 2, got {t_card}"
        )));
    }
    Ok(x.max(0.0).min(1.0 - 1.0 / t_card as f64))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub p_e: f64,
    pub bound: f64,
    /// bound - p_e >= 0
    pub slack: f64,
}

/// Bayes error against the clamped exponential bound
/// Gamma(1 - exp[-(H(T) - I(z,T|v2) - I(z,v2,T))], |T|).
pub fn verify_theorem2(table: &JointTable, enc: &Encoding) -> Result<Theorem2Report> {
    let r = info_report(table, enc)?;
    let nt = table.sizes()[2];
    let joint = if enc.target_view == 2 {
        table.swap_views().encoded_task_joint(&Encoding {
            target_view: 1,
            assignment: enc.assignment.clone(),
            n_classes: enc.n_classes,
        })?
    } else {
        table.encoded_task_joint(enc)?
    };
    let p_e = bayes_error(&joint)?;
    let exponent = r.h_t - r.i_z_t_given_v2 - r.i_z_v2_t;
    let bound = gamma_threshold(1.0 - (-exponent).exp(), nt.max(2))?;
    Ok(Theorem2Report {
        p_e,
        bound,
        slack: bound - p_e,
    })
}

/// Conditional noise family for the regression error theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Uniform,
    Laplace,
    Gaussian,
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseFamily::Uniform),
            "laplace" => Ok(NoiseFamily::Laplace),
            "gaussian" => Ok(NoiseFamily::Gaussian),
            other => Err(Error::Domain(format!("unknown noise family '{other}'"))),
        }
    }
}

impl NoiseFamily {
    /// Family constant in R_e = alpha * exp(2 H(T|z)).
    pub fn alpha(self) -> f64 {
        use std::f64::consts::{E, PI};
        match self {
            NoiseFamily::Uniform => 1.0 / 12.0,
            NoiseFamily::Laplace => 1.0 / (2.0 * E * E),
            NoiseFamily::Gaussian => 1.0 / (2.0 * PI * E),
        }
    }

    /// Differential entropy of the zero-mean member with given variance.
    pub fn differential_entropy(self, variance: f64) -> f64 {
        use std::f64::consts::{E, PI};
        match self {
            NoiseFamily::Uniform => (12.0 * variance).sqrt().ln(),
            NoiseFamily::Laplace => 1.0 + (2.0 * (variance / 2.0).sqrt()).ln(),
            NoiseFamily::Gaussian => 0.5 * (2.0 * PI * E * variance).ln(),
        }
    }

    pub fn sample(self, rng: &mut SplitMix64, variance: f64) -> f64 {
        match self {
            NoiseFamily::Uniform => {
                let w = (12.0 * variance).sqrt();
                rng.uniform_range(-w / 2.0, w / 2.0)
            }
            NoiseFamily::Laplace => rng.laplace((variance / 2.0).sqrt()),
            NoiseFamily::Gaussian => rng.normal() * variance.sqrt(),
        }
    }
}

/// Scalar additive-noise construction T = z + eps.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaussianScenario {
    pub var_t: f64,
    pub var_eps: f64,
    pub noise_family: NoiseFamily,
}

impl GaussianScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.var_t > 0.0) || !(self.var_eps > 0.0) {
            return Err(Error::Domain("variances must be positive".into()));
        }
        if self.var_eps > self.var_t {
            return Err(Error::Domain("var_eps must not exceed var_t".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub alpha: f64,
    pub h_t_given_z: f64,
    /// alpha * exp(2 H(T|z)); equals var_eps exactly for all three families.
    pub r_e_analytic: f64,
    /// Monte-Carlo E[(T - E[T|z])^2].
    pub r_e_mc: f64,
}

/// T = z + eps with z Gaussian of variance var_t - var_eps and eps from the
/// stated family. E[T|z] = z, so the minimum error is var_eps; the report
/// checks the analytic identity and the Monte-Carlo estimate against it.
pub fn verify_theorem3(
    scn: &GaussianScenario,
    n_samples: usize,
    seed: u64,
) -> Result<Theorem3Report> {
    scn.validate()?;
    if n_samples < 10_000 {
        return Err(Error::Precondition(format!(
            "need >= 10^4 samples, got {n_samples}"
        )));
    }
    let alpha = scn.noise_family.alpha();
    let h = scn.noise_family.differential_entropy(scn.var_eps);
    let r_e_analytic = alpha * (2.0 * h).exp();

    let z_std = (scn.var_t - scn.var_eps).max(0.0).sqrt();
    let mut rng = SplitMix64::new(seed);
    let mut sq = 0.0;
    for _ in 0..n_samples {
        let z = rng.normal() * z_std;
        let eps = scn.noise_family.sample(&mut rng, scn.var_eps);
        let t = z + eps;
        let pred = z; // E[T|z]
        sq += (t - pred) * (t - pred);
    }
    Ok(Theorem3Report {
        alpha,
        h_t_given_z: h,
        r_e_analytic,
        r_e_mc: sq / n_samples as f64,
    })
}

/// Closed-form MI of jointly Gaussian pairs with per-dimension correlation:
/// -(d/2) ln(1 - rho^2). Oracle for the estimator suite.
pub fn gaussian_mi(correlation: f64, dims: usize) -> Result<f64> {
    if correlation.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "|correlation| must be < 1, got {correlation}"
        )));
    }
    if dims < 1 {
        return Err(Error::Domain("dims must be >= 1".into()));
    }
    Ok(-(dims as f64 / 2.0) * (1.0 - correlation * correlation).ln())
}

/// Max entropy a |T|-ary variable can carry, used in tests.
pub fn uniform_entropy(n: usize) -> f64 {
    scalar_entropy(&vec![1.0 / n as f64; n])
}
