//! Exact entropies and (conditional, interaction) mutual informations by
//! summation over the extended joint p(z, v1, v2, t). All values in nats.

use crate::error::Result;
use crate::info::table::{Encoding, JointTable};
use serde::{Deserialize, Serialize};

/// Axes of the extended joint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Z = 0,
    V1 = 1,
    V2 = 2,
    T = 3,
}

/// p(z, v1, v2, t) for a table plus a deterministic encoding of one view.
/// z is a function of the encoded view, so the extension is exact.
pub struct ExtendedJoint {
    dims: [usize; 4],
    probs: Vec<f64>,
}

impl ExtendedJoint {
    pub fn build(table: &JointTable, enc: &Encoding) -> Result<Self> {
        table.validate()?;
        enc.check_against(table)?;
        let [n1, n2, nt] = table.sizes();
        let nz = enc.n_classes;
        let dims = [nz, n1, n2, nt];
        let mut probs = vec![0.0; nz * n1 * n2 * nt];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..nt {
                    let z = if enc.target_view == 1 {
                        enc.assignment[i]
                    } else {
                        enc.assignment[j]
                    };
                    probs[((z * n1 + i) * n2 + j) * nt + k] = table.prob(i, j, k);
                }
            }
        }
        Ok(ExtendedJoint { dims, probs })
    }

    fn unravel(&self, mut flat: usize) -> [usize; 4] {
        let mut idx = [0usize; 4];
        for a in (0..4).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    /// Marginal over the given axes, flattened in axis order.
    fn marginal(&self, axes: &[Axis]) -> Vec<f64> {
        let size: usize = axes.iter().map(|&a| self.dims[a as usize]).product();
        let mut m = vec![0.0; size];
        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx = self.unravel(flat);
            let mut pos = 0;
            for &a in axes {
                pos = pos * self.dims[a as usize] + idx[a as usize];
            }
            m[pos] += p;
        }
        m
    }

    /// Joint entropy H(axes) in nats, with 0 ln 0 = 0.
    pub fn entropy(&self, axes: &[Axis]) -> f64 {
        scalar_entropy(&self.marginal(axes))
    }

    pub fn mi(&self, a: Axis, b: Axis) -> f64 {
        self.entropy(&[a]) + self.entropy(&[b]) - self.entropy(&[a, b])
    }

    pub fn cond_mi(&self, a: Axis, b: Axis, c: Axis) -> f64 {
        self.entropy(&[a, c]) + self.entropy(&[b, c]) - self.entropy(&[a, b, c]) - self.entropy(&[c])
    }

    /// McGill interaction information I(a,b,c) = I(a,b) - I(a,b|c).
    pub fn interaction(&self, a: Axis, b: Axis, c: Axis) -> f64 {
        self.mi(a, b) - self.cond_mi(a, b, c)
    }

    pub fn cond_entropy(&self, a: Axis, given: Axis) -> f64 {
        self.entropy(&[a, given]) - self.entropy(&[given])
    }
}

/// -sum p ln p over an arbitrary probability vector.
pub fn scalar_entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.ln();
        }
    }
    h
}

/// All quantities of interest for a (table, encoding) pair, in nats.
///
/// Field names follow the convention that z encodes v1 and v2 is the other
/// view; when the encoding targets view 2 the table is transposed first, so
/// `H_v1` etc. refer to the encoded view and `v2` to its partner.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfoReport {
    pub h_v1: f64,
    pub h_v2: f64,
    pub h_t: f64,
    pub h_t_given_z: f64,
    pub i_v1v2: f64,
    pub i_z_v1: f64,
    pub i_z_v2: f64,
    pub i_z_t: f64,
    pub i_z_t_given_v2: f64,
    pub i_z_v2_t: f64,
    pub i_v1_t: f64,
    pub i_v1_t_given_v2: f64,
    pub i_v1_v2_t: f64,
}

impl InfoReport {
    /// Residual of the unconditional chain-rule identity
    /// H(T|z) = H(T) - I(z,T|v2) - I(z,v2,T).
    pub fn chain_rule_residual(&self) -> f64 {
        self.h_t_given_z - (self.h_t - self.i_z_t_given_v2 - self.i_z_v2_t)
    }
}

/// Exact summation of every reported quantity.
pub fn info_report(table: &JointTable, enc: &Encoding) -> Result<InfoReport> {
    // orient so the encoded view sits on axis v1
    let (table, enc) = if enc.target_view == 2 {
        (
            table.swap_views(),
            Encoding {
                target_view: 1,
                assignment: enc.assignment.clone(),
                n_classes: enc.n_classes,
            },
        )
    } else {
        (table.clone(), enc.clone())
    };
    let ext = ExtendedJoint::build(&table, &enc)?;
    use Axis::*;
    Ok(InfoReport {
        h_v1: ext.entropy(&[V1]),
        h_v2: ext.entropy(&[V2]),
        h_t: ext.entropy(&[T]),
        h_t_given_z: ext.cond_entropy(T, Z),
        i_v1v2: ext.mi(V1, V2),
        i_z_v1: ext.mi(Z, V1),
        i_z_v2: ext.mi(Z, V2),
        i_z_t: ext.mi(Z, T),
        i_z_t_given_v2: ext.cond_mi(Z, T, V2),
        i_z_v2_t: ext.interaction(Z, V2, T),
        i_v1_t: ext.mi(V1, T),
        i_v1_t_given_v2: ext.cond_mi(V1, T, V2),
        i_v1_v2_t: ext.interaction(V1, V2, T),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    const LN2: f64 = std::f64::consts::LN_2;

    /// Independent oracle: entropies computed by a fresh double loop over
    /// the raw 3-axis table, never touching ExtendedJoint.
    mod oracle {
        use crate::info::table::{Encoding, JointTable};

        fn h(p: &[f64]) -> f64 {
            p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
        }

        pub fn mi_zt_and_more(t: &JointTable, enc: &Encoding) -> (f64, f64, f64) {
            // returns (I(v1,v2), I(z,T), H(T|z)) for enc on view 1
            assert_eq!(enc.target_view, 1);
            let [n1, n2, nt] = t.sizes();
            let nz = enc.n_classes;
            let mut p12 = vec![0.0; n1 * n2];
            let mut p1 = vec![0.0; n1];
            let mut p2 = vec![0.0; n2];
            let mut pzt = vec![0.0; nz * nt];
            let mut pz = vec![0.0; nz];
            let mut pt = vec![0.0; nt];
            for i in 0..n1 {
                for j in 0..n2 {
                    for k in 0..nt {
                        let p = t.prob(i, j, k);
                        p12[i * n2 + j] += p;
                        p1[i] += p;
                        p2[j] += p;
                        pzt[enc.assignment[i] * nt + k] += p;
                        pz[enc.assignment[i]] += p;
                        pt[k] += p;
                    }
                }
            }
            let i_v1v2 = h(&p1) + h(&p2) - h(&p12);
            let i_z_t = h(&pz) + h(&pt) - h(&pzt);
            let h_t_given_z = h(&pzt) - h(&pz);
            (i_v1v2, i_z_t, h_t_given_z)
        }
    }

    fn fixture_3x3x2() -> JointTable {
        // fixed strictly positive 3x3x2 table
        let raw = [
            4.0, 1.0, 2.0, 3.0, 1.0, 5.0, //
            2.0, 2.0, 6.0, 1.0, 1.0, 1.0, //
            3.0, 4.0, 1.0, 2.0, 5.0, 2.0,
        ];
        let s: f64 = raw.iter().sum();
        JointTable::new([3, 3, 2], raw.iter().map(|x| x / s).collect()).unwrap()
    }

    #[test]
    fn independent_uniform_all_zero() {
        let t = JointTable::new([2, 2, 2], vec![0.125; 8]).unwrap();
        let r = info_report(&t, &Encoding::identity(1, 2)).unwrap();
        for v in [
            r.i_v1v2,
            r.i_z_v2,
            r.i_z_t,
            r.i_z_t_given_v2,
            r.i_z_v2_t,
            r.i_v1_t,
            r.i_v1_t_given_v2,
            r.i_v1_v2_t,
        ] {
            assert!(v.abs() < 1e-12, "expected 0, got {v}");
        }
        assert!((r.h_t - LN2).abs() < 1e-12);
    }

    #[test]
    fn copy_channel_ln2() {
        // v1 = v2 = T uniform binary
        let mut probs = vec![0.0; 8];
        probs[0] = 0.5; // (0,0,0)
        probs[7] = 0.5; // (1,1,1)
        let t = JointTable::new([2, 2, 2], probs).unwrap();
        let r = info_report(&t, &Encoding::identity(1, 2)).unwrap();
        assert!((r.i_v1v2 - LN2).abs() < 1e-12);
        assert!((r.i_z_t - LN2).abs() < 1e-12);
        assert!(r.h_t_given_z.abs() < 1e-12);
    }

    #[test]
    fn fixture_matches_independent_oracle() {
        let t = fixture_3x3x2();
        let enc = Encoding::new(1, vec![0, 1, 0]).unwrap();
        let r = info_report(&t, &enc).unwrap();
        let (i_v1v2, i_z_t, h_t_given_z) = oracle::mi_zt_and_more(&t, &enc);
        assert!((r.i_v1v2 - i_v1v2).abs() < 1e-12);
        assert!((r.i_z_t - i_z_t).abs() < 1e-12);
        assert!((r.h_t_given_z - h_t_given_z).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_identity_random() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..200 {
            let sizes = [
                1 + rng.usize_below(4),
                1 + rng.usize_below(4),
                1 + rng.usize_below(3),
            ];
            let t = JointTable::random(&mut rng, sizes);
            let view = 1 + rng.usize_below(2) as u8;
            let n = if view == 1 { sizes[0] } else { sizes[1] };
            let enc = Encoding::random(&mut rng, view, n);
            let r = info_report(&t, &enc).unwrap();
            assert!(
                r.chain_rule_residual().abs() < 1e-12,
                "trial {trial}: residual {}",
                r.chain_rule_residual()
            );
            // nonnegativity of entropies and pairwise MIs
            for v in [r.h_v1, r.h_v2, r.h_t, r.h_t_given_z] {
                assert!(v >= -1e-12);
            }
            for v in [
                r.i_v1v2,
                r.i_z_v1,
                r.i_z_v2,
                r.i_z_t,
                r.i_v1_t,
                r.i_z_t_given_v2,
                r.i_v1_t_given_v2,
            ] {
                assert!(v >= -1e-12, "MI {v} negative");
            }
        }
    }

    #[test]
    fn view2_encoding_swaps_roles() {
        let t = fixture_3x3x2();
        let enc2 = Encoding::new(2, vec![0, 1, 1]).unwrap();
        let r = info_report(&t, &enc2).unwrap();
        // equivalent to encoding view 1 of the transposed table
        let enc1 = Encoding::new(1, vec![0, 1, 1]).unwrap();
        let r_swapped = info_report(&t.swap_views(), &enc1).unwrap();
        assert!((r.i_z_t - r_swapped.i_z_t).abs() < 1e-14);
        assert!((r.i_z_v2 - r_swapped.i_z_v2).abs() < 1e-14);
    }
}
