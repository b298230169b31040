//! Exact finite joint distributions over (v1, v2, T) and deterministic
//! encodings of one view.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};

/// Brute-force tractability bound on any single alphabet.
pub const MAX_ALPHABET: usize = 8;

const NORM_TOL: f64 = 1e-12;

/// Exact joint distribution p(v1, v2, t), row-major with v1 slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    sizes: [usize; 3],
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(sizes: [usize; 3], probs: Vec<f64>) -> Result<Self> {
        let t = JointTable { sizes, probs };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &n) in self.sizes.iter().enumerate() {
            if n < 1 || n > MAX_ALPHABET {
                return Err(Error::Validation(format!(
                    "alphabet {i} has size {n}, must be in 1..={MAX_ALPHABET}"
                )));
            }
        }
        let expect = self.sizes.iter().product::<usize>();
        if self.probs.len() != expect {
            return Err(Error::Validation(format!(
                "expected {expect} entries, got {}",
                self.probs.len()
            )));
        }
        let mut sum = 0.0;
        for &p in &self.probs {
            if !(p >= 0.0) {
                return Err(Error::Validation(format!("negative or NaN entry {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!(
                "entries sum to {sum}, expected 1 within {NORM_TOL}"
            )));
        }
        Ok(())
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, v1: usize, v2: usize, t: usize) -> f64 {
        self.probs[(v1 * self.sizes[1] + v2) * self.sizes[2] + t]
    }

    /// Table with v1 and v2 axes exchanged.
    pub fn swap_views(&self) -> JointTable {
        let [n1, n2, nt] = self.sizes;
        let mut probs = vec![0.0; n1 * n2 * nt];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..nt {
                    probs[(j * n1 + i) * nt + k] = self.prob(i, j, k);
                }
            }
        }
        JointTable {
            sizes: [n2, n1, nt],
            probs,
        }
    }

    /// Marginal p(v_view) for view 1 or 2.
    pub fn view_marginal(&self, view: u8) -> Vec<f64> {
        let [n1, n2, nt] = self.sizes;
        let n = if view == 1 { n1 } else { n2 };
        let mut m = vec![0.0; n];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..nt {
                    let s = if view == 1 { i } else { j };
                    m[s] += self.prob(i, j, k);
                }
            }
        }
        m
    }

    /// Joint p(z, t) under a deterministic encoding of one view.
    pub fn encoded_task_joint(&self, enc: &Encoding) -> Result<Vec<Vec<f64>>> {
        enc.check_against(self)?;
        let [n1, n2, nt] = self.sizes;
        let mut joint = vec![vec![0.0; nt]; enc.n_classes];
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..nt {
                    let z = if enc.target_view == 1 {
                        enc.assignment[i]
                    } else {
                        enc.assignment[j]
                    };
                    joint[z][k] += self.prob(i, j, k);
                }
            }
        }
        Ok(joint)
    }

    /// Seeded random strictly positive table, for property suites.
    pub fn random(rng: &mut SplitMix64, sizes: [usize; 3]) -> JointTable {
        let n = sizes.iter().product::<usize>();
        let mut probs: Vec<f64> = (0..n).map(|_| -rng.uniform_open().ln()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        JointTable { sizes, probs }
    }
}

/// Exact pushforward of the table under `enc`: the encoded view's axis is
/// replaced by the class axis z. Total mass is preserved exactly (pure
/// additions, no renormalization).
pub fn apply_encoding(table: &JointTable, enc: &Encoding) -> Result<JointTable> {
    table.validate()?;
    enc.check_against(table)?;
    let [n1, n2, nt] = table.sizes;
    let (m1, m2) = if enc.target_view == 1 {
        (enc.n_classes, n2)
    } else {
        (n1, enc.n_classes)
    };
    let mut probs = vec![0.0; m1 * m2 * nt];
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..nt {
                let (a, b) = if enc.target_view == 1 {
                    (enc.assignment[i], j)
                } else {
                    (i, enc.assignment[j])
                };
                probs[(a * m2 + b) * nt + k] += table.prob(i, j, k);
            }
        }
    }
    Ok(JointTable {
        sizes: [m1, m2, nt],
        probs,
    })
}

/// Deterministic partition z = f(v_target) of one view's alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub target_view: u8,
    pub assignment: Vec<usize>,
    pub n_classes: usize,
}

impl Encoding {
    /// Build from a raw class map; class ids must be contiguous 0..K-1
    /// with every class non-empty.
    pub fn new(target_view: u8, assignment: Vec<usize>) -> Result<Self> {
        if target_view != 1 && target_view != 2 {
            return Err(Error::Encoding(format!(
                "target_view must be 1 or 2, got {target_view}"
            )));
        }
        if assignment.is_empty() {
            return Err(Error::Encoding("empty assignment".into()));
        }
        let k = assignment.iter().max().unwrap() + 1;
        let mut seen = vec![false; k];
        for &c in &assignment {
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Encoding(
                "class ids must be contiguous 0..K-1 with every class non-empty".into(),
            ));
        }
        Ok(Encoding {
            target_view,
            assignment,
            n_classes: k,
        })
    }

    /// Relabel arbitrary class ids to contiguous first-occurrence order.
    pub fn from_labels(target_view: u8, labels: &[usize]) -> Result<Self> {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut assignment = Vec::with_capacity(labels.len());
        for &l in labels {
            let id = match map.iter().find(|(raw, _)| *raw == l) {
                Some(&(_, id)) => id,
                None => {
                    let id = map.len();
                    map.push((l, id));
                    id
                }
            };
            assignment.push(id);
        }
        Encoding::new(target_view, assignment)
    }

    pub fn identity(target_view: u8, n: usize) -> Self {
        Encoding {
            target_view,
            assignment: (0..n).collect(),
            n_classes: n,
        }
    }

    pub fn all_to_one(target_view: u8, n: usize) -> Self {
        Encoding {
            target_view,
            assignment: vec![0; n],
            n_classes: 1,
        }
    }

    /// Seeded random partition.
    pub fn random(rng: &mut SplitMix64, target_view: u8, n: usize) -> Self {
        let k = 1 + rng.usize_below(n);
        let labels: Vec<usize> = (0..n).map(|_| rng.usize_below(k)).collect();
        Encoding::from_labels(target_view, &labels).expect("labels are total")
    }

    /// Seeded random refinement: splits classes of `self`, never merges.
    /// A refinement of a sufficient encoding stays sufficient.
    pub fn random_refinement(&self, rng: &mut SplitMix64) -> Self {
        let labels: Vec<usize> = self
            .assignment
            .iter()
            .map(|&c| c * 2 + rng.usize_below(2))
            .collect();
        Encoding::from_labels(self.target_view, &labels).expect("labels are total")
    }

    pub fn source_size(&self) -> usize {
        self.assignment.len()
    }

    pub fn check_against(&self, table: &JointTable) -> Result<()> {
        let n = if self.target_view == 1 {
            table.sizes()[0]
        } else {
            table.sizes()[1]
        };
        if self.assignment.len() != n {
            return Err(Error::Encoding(format!(
                "encoding covers {} symbols but view {} has {n}",
                self.assignment.len(),
                self.target_view
            )));
        }
        Ok(())
    }

    /// True if every class of `self` is contained in one class of `other`.
    pub fn refines(&self, other: &Encoding) -> bool {
        if self.assignment.len() != other.assignment.len() {
            return false;
        }
        let mut image: Vec<Option<usize>> = vec![None; self.n_classes];
        for (i, &c) in self.assignment.iter().enumerate() {
            match image[c] {
                None => image[c] = Some(other.assignment[i]),
                Some(o) if o == other.assignment[i] => {}
                Some(_) => return false,
            }
        }
        true
    }
}

/// Fixture file schema: `{"sizes": [n1, n2, nt], "probs": [...]}` with
/// probs flat row-major, v1 slowest.
#[derive(Serialize, Deserialize)]
struct TableFixture {
    sizes: [usize; 3],
    probs: Vec<f64>,
}

impl JointTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&TableFixture {
            sizes: self.sizes,
            probs: self.probs.clone(),
        })
        .expect("fixture serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: TableFixture = serde_json::from_str(s)?;
        JointTable::new(f.sizes, f.probs)
    }
}
