//! Likelihood partitions: the constructive minimal sufficient encoding on
//! finite alphabets, plus exhaustive minimality verification.

use crate::error::{Error, Result};
use crate::info::measures::{info_report, Axis, ExtendedJoint};
use crate::info::table::{apply_encoding, Encoding, JointTable};
use serde::{Deserialize, Serialize};

/// Per-entry tolerance when comparing conditional rows p(other|symbol).
pub const ROW_TOL: f64 = 1e-10;

/// Slack below which an encoding is declared sufficient.
pub const SUFFICIENCY_TOL: f64 = 1e-10;

/// Largest source alphabet for exhaustive partition enumeration
/// (Bell(6) = 203).
pub const MAX_ENUM_ALPHABET: usize = 6;

/// Partition of the source view's symbols by their conditional rows
/// p(other-view | symbol): two symbols share a class iff their rows agree
/// within ROW_TOL per entry. Symbols with zero marginal mass carry no
/// information and go to a single dedicated class (appended last), keeping
/// the map total and deterministic.
pub fn minimal_sufficient_partition(table: &JointTable, view: u8) -> Result<Encoding> {
    table.validate()?;
    if view != 1 && view != 2 {
        return Err(Error::Encoding(format!("view must be 1 or 2, got {view}")));
    }
    let oriented = if view == 2 {
        table.swap_views()
    } else {
        table.clone()
    };
    let [n1, n2, nt] = oriented.sizes();
    let marg = oriented.view_marginal(1);

    // conditional rows p(v2 | v1 = i) for positive-mass symbols
    let mut rows: Vec<Option<Vec<f64>>> = Vec::with_capacity(n1);
    for i in 0..n1 {
        if marg[i] <= 0.0 {
            rows.push(None);
            continue;
        }
        let mut row = vec![0.0; n2];
        for j in 0..n2 {
            for k in 0..nt {
                row[j] += oriented.prob(i, j, k);
            }
        }
        for x in &mut row {
            *x /= marg[i];
        }
        rows.push(Some(row));
    }

    let mut class_of = vec![usize::MAX; n1];
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for i in 0..n1 {
        let Some(row) = &rows[i] else { continue };
        let found = reps.iter().position(|rep| {
            row.iter()
                .zip(rep.iter())
                .all(|(a, b)| (a - b).abs() <= ROW_TOL)
        });
        class_of[i] = match found {
            Some(c) => c,
            None => {
                reps.push(row);
                reps.len() - 1
            }
        };
    }
    let zero_class = reps.len();
    let mut has_zero = false;
    for c in class_of.iter_mut() {
        if *c == usize::MAX {
            *c = zero_class;
            has_zero = true;
        }
    }
    // all symbols zero-mass cannot happen (table sums to 1), but a table
    // may still have no zero-mass symbols at all
    let _ = has_zero;
    Encoding::from_labels(view, &class_of)
}

/// Sufficiency slack I(v1,v2) - I(z,v2) where v1 is the encoded view.
/// Always >= 0 up to rounding (DPI); sufficient iff <= SUFFICIENCY_TOL.
pub fn check_sufficiency(table: &JointTable, enc: &Encoding) -> Result<f64> {
    let r = info_report(table, enc)?;
    Ok(r.i_v1v2 - r.i_z_v2)
}

/// All set partitions of {0..n-1} as restricted growth strings. Each
/// returned vector is a valid contiguous class assignment.
pub fn enumerate_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(rgs: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if pos == rgs.len() {
            out.push(rgs.clone());
            return;
        }
        for c in 0..=max_used + 1 {
            rgs[pos] = c;
            rec(rgs, pos + 1, max_used.max(c), out);
        }
    }
    if n == 0 {
        return out;
    }
    rgs[0] = 0;
    rec(&mut rgs, 1, 0, &mut out);
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub n_partitions: usize,
    pub n_sufficient: usize,
    /// I(z,v1) of the likelihood partition.
    pub likelihood_i_z_v1: f64,
    /// Minimum I(z,v1) over all sufficient partitions.
    pub min_i_z_v1: f64,
    /// likelihood_i_z_v1 - min_i_z_v1; minimality holds iff <= tolerance.
    pub minimality_gap: f64,
    /// Assumption residual I(z_min, v1 | v2); the shared-latent
    /// construction guarantees this is 0, generic tables need not.
    pub assumption_residual: f64,
    pub minimal: bool,
}

/// Enumerates every partition of V1, filters the sufficient ones and checks
/// that the likelihood partition attains the minimum I(z,v1) among them.
pub fn verify_minimality(table: &JointTable) -> Result<MinimalityReport> {
    table.validate()?;
    let n1 = table.sizes()[0];
    if n1 > MAX_ENUM_ALPHABET {
        return Err(Error::Capacity(format!(
            "|V1| = {n1} exceeds enumeration bound {MAX_ENUM_ALPHABET}"
        )));
    }
    let likelihood = minimal_sufficient_partition(table, 1)?;
    let lik_slack = check_sufficiency(table, &likelihood)?;
    if lik_slack.abs() > SUFFICIENCY_TOL {
        return Err(Error::Precondition(format!(
            "likelihood partition has sufficiency slack {lik_slack}"
        )));
    }
    let lik_report = info_report(table, &likelihood)?;
    let likelihood_i_z_v1 = lik_report.i_z_v1;

    let mut n_sufficient = 0;
    let mut min_i_z_v1 = f64::INFINITY;
    let partitions = enumerate_partitions(n1);
    for labels in &partitions {
        let enc = Encoding::from_labels(1, labels)?;
        let slack = check_sufficiency(table, &enc)?;
        if slack <= SUFFICIENCY_TOL {
            n_sufficient += 1;
            let r = info_report(table, &enc)?;
            if r.i_z_v1 < min_i_z_v1 {
                min_i_z_v1 = r.i_z_v1;
            }
        }
    }

    let ext = ExtendedJoint::build(table, &likelihood)?;
    let assumption_residual = ext.cond_mi(Axis::Z, Axis::V1, Axis::V2);

    let minimality_gap = likelihood_i_z_v1 - min_i_z_v1;
    Ok(MinimalityReport {
        n_partitions: partitions.len(),
        n_sufficient,
        likelihood_i_z_v1,
        min_i_z_v1,
        minimality_gap,
        assumption_residual,
        minimal: minimality_gap <= SUFFICIENCY_TOL,
    })
}

/// I(a,b) of the first two axes of a 3-axis table, used by the DPI chain.
pub fn mi_views(table: &JointTable) -> f64 {
    let [n1, n2, nt] = table.sizes();
    let mut p12 = vec![0.0; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..nt {
                p12[i * n2 + j] += table.prob(i, j, k);
            }
        }
    }
    let h = crate::info::measures::scalar_entropy(&p12);
    let mut p1 = vec![0.0; n1];
    let mut p2 = vec![0.0; n2];
    for i in 0..n1 {
        for j in 0..n2 {
            p1[i] += p12[i * n2 + j];
            p2[j] += p12[i * n2 + j];
        }
    }
    crate::info::measures::scalar_entropy(&p1) + crate::info::measures::scalar_entropy(&p2) - h
}

/// DPI slacks for the chain v1 -> v2 -> z2 and z2 -> v1 -> z1:
/// (I(v1,v2) - I(v1,z2), I(v1,z2) - I(z1,z2)). Both >= 0 up to rounding.
pub fn verify_dpi(table: &JointTable, enc1: &Encoding, enc2: &Encoding) -> Result<(f64, f64)> {
    if enc1.target_view != 1 || enc2.target_view != 2 {
        return Err(Error::Encoding(
            "verify_dpi expects enc1 on view 1 and enc2 on view 2".into(),
        ));
    }
    let i_v1_v2 = mi_views(table);
    let t_z2 = apply_encoding(table, enc2)?;
    let i_v1_z2 = mi_views(&t_z2);
    let t_z1_z2 = apply_encoding(&t_z2, enc1)?;
    let i_z1_z2 = mi_views(&t_z1_z2);
    Ok((i_v1_v2 - i_v1_z2, i_v1_z2 - i_z1_z2))
}
