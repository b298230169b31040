//! Reverse-mode differentiation over a recorded tape of primitive ops.
//! A tape is single-owner during recording; one backward pass per forward
//! recording.

use crate::autodiff::tensor::{matmul, matmul_t, transpose, Tensor};
use crate::error::{Error, Result};
use std::cell::RefCell;

const EPS_GUARD: f64 = 1e-12;
/// Variance guard inside per-column standardization.
const EPS_STD: f64 = 1e-5;

/// Handle to a tape node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub usize);

enum Op {
    Leaf,
    Matmul(usize, usize),
    MatmulT(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    /// matrix (n x m) + row vector (1 x m)
    AddRow(usize, usize),
    /// matrix (n x m) + column vector (n x 1)
    AddCol(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    Hadamard(usize, usize),
    MulConst(usize, Tensor),
    AddConst(usize),
    Relu(usize),
    Tanh(usize),
    Exp(usize),
    Log(usize),
    Square(usize),
    Sum(usize),
    Mean(usize),
    RowSum(usize),
    RowLogsumexp(usize),
    L2NormalizeRows(usize),
    ColStandardize(usize),
    SoftmaxLogLoss(usize, Vec<usize>),
    ConcatRows(usize, usize),
    Reshape(usize),
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Op) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var(nodes.len() - 1)
    }

    pub fn leaf(&self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> Tensor {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes.borrow()[v.0].value.scalar_value()
    }

    fn with2<R>(&self, a: Var, b: Var, f: impl FnOnce(&Tensor, &Tensor) -> R) -> R {
        let nodes = self.nodes.borrow();
        f(&nodes[a.0].value, &nodes[b.0].value)
    }

    fn with1<R>(&self, a: Var, f: impl FnOnce(&Tensor) -> R) -> R {
        let nodes = self.nodes.borrow();
        f(&nodes[a.0].value)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| matmul(x, y))?;
        Ok(self.push(v, Op::Matmul(a.0, b.0)))
    }

    /// a @ b^T
    pub fn matmul_t(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| matmul_t(x, y))?;
        Ok(self.push(v, Op::MatmulT(a.0, b.0)))
    }

    pub fn transpose(&self, a: Var) -> Result<Var> {
        let v = self.with1(a, transpose)?;
        Ok(self.push(v, Op::Transpose(a.0)))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| -> Result<Tensor> {
            x.same_shape(y)?;
            let mut out = x.clone();
            out.add_assign(y);
            Ok(out)
        })?;
        Ok(self.push(v, Op::Add(a.0, b.0)))
    }

    pub fn sub(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| -> Result<Tensor> {
            x.same_shape(y)?;
            let data = x.data.iter().zip(&y.data).map(|(p, q)| p - q).collect();
            Tensor::new(x.shape.clone(), data)
        })?;
        Ok(self.push(v, Op::Sub(a.0, b.0)))
    }

    /// (n x m) + (1 x m) broadcast over rows; the bias-add of a dense layer.
    pub fn add_row(&self, a: Var, row: Var) -> Result<Var> {
        let v = self.with2(a, row, |x, r| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let (rn, rm) = r.dims2()?;
            if rn != 1 || rm != m {
                return Err(Error::Shape(format!(
                    "add_row {:?} + {:?}",
                    x.shape, r.shape
                )));
            }
            let mut out = x.clone();
            for i in 0..n {
                for j in 0..m {
                    out.data[i * m + j] += r.data[j];
                }
            }
            Ok(out)
        })?;
        Ok(self.push(v, Op::AddRow(a.0, row.0)))
    }

    /// (n x m) + (n x 1) broadcast over columns.
    pub fn add_col(&self, a: Var, col: Var) -> Result<Var> {
        let v = self.with2(a, col, |x, c| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let (cn, cm) = c.dims2()?;
            if cm != 1 || cn != n {
                return Err(Error::Shape(format!(
                    "add_col {:?} + {:?}",
                    x.shape, c.shape
                )));
            }
            let mut out = x.clone();
            for i in 0..n {
                for j in 0..m {
                    out.data[i * m + j] += c.data[i];
                }
            }
            Ok(out)
        })?;
        Ok(self.push(v, Op::AddCol(a.0, col.0)))
    }

    pub fn scale(&self, a: Var, c: f64) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| c * p).collect(),
        });
        self.push(v, Op::Scale(a.0, c))
    }

    pub fn offset(&self, a: Var, c: f64) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| c + p).collect(),
        });
        self.push(v, Op::Offset(a.0))
    }

    pub fn hadamard(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| -> Result<Tensor> {
            x.same_shape(y)?;
            let data = x.data.iter().zip(&y.data).map(|(p, q)| p * q).collect();
            Tensor::new(x.shape.clone(), data)
        })?;
        Ok(self.push(v, Op::Hadamard(a.0, b.0)))
    }

    /// Elementwise product with a constant tensor (no gradient into it).
    pub fn mul_const(&self, a: Var, c: Tensor) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            x.same_shape(&c)?;
            let data = x.data.iter().zip(&c.data).map(|(p, q)| p * q).collect();
            Tensor::new(x.shape.clone(), data)
        })?;
        Ok(self.push(v, Op::MulConst(a.0, c)))
    }

    /// Elementwise sum with a constant tensor (no gradient into it).
    pub fn add_const(&self, a: Var, c: Tensor) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            x.same_shape(&c)?;
            let data = x.data.iter().zip(&c.data).map(|(p, q)| p + q).collect();
            Tensor::new(x.shape.clone(), data)
        })?;
        Ok(self.push(v, Op::AddConst(a.0)))
    }

    pub fn relu(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| p.max(0.0)).collect(),
        });
        self.push(v, Op::Relu(a.0))
    }

    pub fn tanh(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| p.tanh()).collect(),
        });
        self.push(v, Op::Tanh(a.0))
    }

    pub fn exp(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| p.exp()).collect(),
        });
        self.push(v, Op::Exp(a.0))
    }

    /// Natural log, epsilon-guarded below at 1e-12.
    pub fn log(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| p.max(EPS_GUARD).ln()).collect(),
        });
        self.push(v, Op::Log(a.0))
    }

    pub fn square(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|&p| p * p).collect(),
        });
        self.push(v, Op::Square(a.0))
    }

    pub fn sum(&self, a: Var) -> Var {
        let v = self.with1(a, |x| Tensor::scalar(x.data.iter().sum()));
        self.push(v, Op::Sum(a.0))
    }

    pub fn mean(&self, a: Var) -> Var {
        let v = self.with1(a, |x| {
            Tensor::scalar(x.data.iter().sum::<f64>() / x.data.len() as f64)
        });
        self.push(v, Op::Mean(a.0))
    }

    /// (n x m) -> (n x 1) row sums.
    pub fn row_sum(&self, a: Var) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let data = (0..n)
                .map(|i| x.data[i * m..(i + 1) * m].iter().sum())
                .collect();
            Tensor::new(vec![n, 1], data)
        })?;
        Ok(self.push(v, Op::RowSum(a.0)))
    }

    /// (n x m) -> (n x 1) log-sum-exp per row, max-stabilized.
    pub fn row_logsumexp(&self, a: Var) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let data = (0..n)
                .map(|i| {
                    let row = &x.data[i * m..(i + 1) * m];
                    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    mx + row.iter().map(|&p| (p - mx).exp()).sum::<f64>().ln()
                })
                .collect();
            Tensor::new(vec![n, 1], data)
        })?;
        Ok(self.push(v, Op::RowLogsumexp(a.0)))
    }

    /// Rows rescaled to unit L2 norm (norm guarded below at 1e-12).
    pub fn l2_normalize_rows(&self, a: Var) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let mut out = x.clone();
            for i in 0..n {
                let row = &mut out.data[i * m..(i + 1) * m];
                let norm = row.iter().map(|p| p * p).sum::<f64>().sqrt().max(EPS_GUARD);
                row.iter_mut().for_each(|p| *p /= norm);
            }
            Ok(out)
        })?;
        Ok(self.push(v, Op::L2NormalizeRows(a.0)))
    }

    /// Columns centered and scaled by batch std (variance + 1e-5 guard).
    pub fn per_column_standardize(&self, a: Var) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let mut out = x.clone();
            for j in 0..m {
                let mean = (0..n).map(|i| x.data[i * m + j]).sum::<f64>() / n as f64;
                let var =
                    (0..n).map(|i| (x.data[i * m + j] - mean).powi(2)).sum::<f64>() / n as f64;
                let d = (var + EPS_STD).sqrt();
                for i in 0..n {
                    out.data[i * m + j] = (x.data[i * m + j] - mean) / d;
                }
            }
            Ok(out)
        })?;
        Ok(self.push(v, Op::ColStandardize(a.0)))
    }

    /// Mean softmax cross-entropy of logits (n x k) against integer labels.
    pub fn softmax_log_loss(&self, logits: Var, labels: &[usize]) -> Result<Var> {
        let v = self.with1(logits, |x| -> Result<Tensor> {
            let (n, k) = x.dims2()?;
            if labels.len() != n {
                return Err(Error::Shape(format!(
                    "{} labels for {n} logit rows",
                    labels.len()
                )));
            }
            let mut loss = 0.0;
            for (i, &y) in labels.iter().enumerate() {
                if y >= k {
                    return Err(Error::Domain(format!("label {y} out of range 0..{k}")));
                }
                let row = &x.data[i * k..(i + 1) * k];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + row.iter().map(|&p| (p - mx).exp()).sum::<f64>().ln();
                loss -= row[y] - lse;
            }
            Ok(Tensor::scalar(loss / n as f64))
        })?;
        Ok(self.push(v, Op::SoftmaxLogLoss(logits.0, labels.to_vec())))
    }

    /// Stack b's rows below a's rows.
    pub fn concat_rows(&self, a: Var, b: Var) -> Result<Var> {
        let v = self.with2(a, b, |x, y| -> Result<Tensor> {
            let (n, m) = x.dims2()?;
            let (n2, m2) = y.dims2()?;
            if m != m2 {
                return Err(Error::Shape(format!(
                    "concat_rows {:?} over {:?}",
                    x.shape, y.shape
                )));
            }
            let mut data = x.data.clone();
            data.extend_from_slice(&y.data);
            Tensor::new(vec![n + n2, m], data)
        })?;
        Ok(self.push(v, Op::ConcatRows(a.0, b.0)))
    }

    pub fn reshape(&self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let v = self.with1(a, |x| -> Result<Tensor> {
            Tensor::new(shape.clone(), x.data.clone())
        })?;
        Ok(self.push(v, Op::Reshape(a.0)))
    }

    /// Reverse accumulation from a scalar loss to every reachable node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        if nodes[loss.0].value.data.len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                nodes[loss.0].value.shape
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor {
            shape: nodes[loss.0].value.shape.clone(),
            data: vec![1.0],
        });

        let acc = |grads: &mut Vec<Option<Tensor>>, idx: usize, delta: Tensor| {
            match &mut grads[idx] {
                Some(g) => g.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].clone() else { continue };
            let node = &nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let da = matmul_t(&g, &nodes[*b].value)?;
                    let db = matmul(&transpose(&nodes[*a].value)?, &g)?;
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MatmulT(a, b) => {
                    // C = A B^T: dA = G B, dB = G^T A
                    let da = matmul(&g, &nodes[*b].value)?;
                    let db = matmul(&transpose(&g)?, &nodes[*a].value)?;
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Transpose(a) => acc(&mut grads, *a, transpose(&g)?),
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    let neg = Tensor {
                        shape: g.shape.clone(),
                        data: g.data.iter().map(|&p| -p).collect(),
                    };
                    acc(&mut grads, *b, neg);
                }
                Op::AddRow(a, r) => {
                    let (n, m) = g.dims2()?;
                    let mut dr = Tensor::zeros(&[1, m]);
                    for i in 0..n {
                        for j in 0..m {
                            dr.data[j] += g.data[i * m + j];
                        }
                    }
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *r, dr);
                }
                Op::AddCol(a, c) => {
                    let (n, m) = g.dims2()?;
                    let mut dc = Tensor::zeros(&[n, 1]);
                    for i in 0..n {
                        for j in 0..m {
                            dc.data[i] += g.data[i * m + j];
                        }
                    }
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *c, dc);
                }
                Op::Scale(a, c) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g.data.iter().map(|&p| c * p).collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Offset(a) => acc(&mut grads, *a, g),
                Op::Hadamard(a, b) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&nodes[*b].value.data)
                            .map(|(p, q)| p * q)
                            .collect(),
                    };
                    let db = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&nodes[*a].value.data)
                            .map(|(p, q)| p * q)
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MulConst(a, c) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g.data.iter().zip(&c.data).map(|(p, q)| p * q).collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::AddConst(a) => acc(&mut grads, *a, g),
                Op::Relu(a) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&nodes[*a].value.data)
                            .map(|(p, &x)| if x > 0.0 { *p } else { 0.0 })
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Tanh(a) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&node.value.data)
                            .map(|(p, y)| p * (1.0 - y * y))
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Exp(a) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&node.value.data)
                            .map(|(p, y)| p * y)
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Log(a) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&nodes[*a].value.data)
                            .map(|(p, &x)| p / x.max(EPS_GUARD))
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Square(a) => {
                    let da = Tensor {
                        shape: g.shape.clone(),
                        data: g
                            .data
                            .iter()
                            .zip(&nodes[*a].value.data)
                            .map(|(p, &x)| 2.0 * x * p)
                            .collect(),
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Sum(a) => {
                    let shape = nodes[*a].value.shape.clone();
                    let n: usize = nodes[*a].value.data.len();
                    let da = Tensor {
                        shape,
                        data: vec![g.data[0]; n],
                    };
                    acc(&mut grads, *a, da);
                }
                Op::Mean(a) => {
                    let shape = nodes[*a].value.shape.clone();
                    let n = nodes[*a].value.data.len();
                    let da = Tensor {
                        shape,
                        data: vec![g.data[0] / n as f64; n],
                    };
                    acc(&mut grads, *a, da);
                }
                Op::RowSum(a) => {
                    let (n, m) = nodes[*a].value.dims2()?;
                    let mut da = Tensor::zeros(&[n, m]);
                    for i in 0..n {
                        for j in 0..m {
                            da.data[i * m + j] = g.data[i];
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::RowLogsumexp(a) => {
                    let x = &nodes[*a].value;
                    let (n, m) = x.dims2()?;
                    let mut da = Tensor::zeros(&[n, m]);
                    for i in 0..n {
                        let lse = node.value.data[i];
                        for j in 0..m {
                            da.data[i * m + j] = g.data[i] * (x.data[i * m + j] - lse).exp();
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::L2NormalizeRows(a) => {
                    let x = &nodes[*a].value;
                    let y = &node.value;
                    let (n, m) = x.dims2()?;
                    let mut da = Tensor::zeros(&[n, m]);
                    for i in 0..n {
                        let xrow = &x.data[i * m..(i + 1) * m];
                        let yrow = &y.data[i * m..(i + 1) * m];
                        let grow = &g.data[i * m..(i + 1) * m];
                        let norm = xrow.iter().map(|p| p * p).sum::<f64>().sqrt().max(EPS_GUARD);
                        let dot: f64 = yrow.iter().zip(grow).map(|(p, q)| p * q).sum();
                        for j in 0..m {
                            da.data[i * m + j] = (grow[j] - yrow[j] * dot) / norm;
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::ColStandardize(a) => {
                    let x = &nodes[*a].value;
                    let y = &node.value;
                    let (n, m) = x.dims2()?;
                    let mut da = Tensor::zeros(&[n, m]);
                    for j in 0..m {
                        let mean = (0..n).map(|i| x.data[i * m + j]).sum::<f64>() / n as f64;
                        let var = (0..n)
                            .map(|i| (x.data[i * m + j] - mean).powi(2))
                            .sum::<f64>()
                            / n as f64;
                        let d = (var + EPS_STD).sqrt();
                        let gbar = (0..n).map(|i| g.data[i * m + j]).sum::<f64>() / n as f64;
                        let gy = (0..n)
                            .map(|i| g.data[i * m + j] * y.data[i * m + j])
                            .sum::<f64>()
                            / n as f64;
                        for i in 0..n {
                            da.data[i * m + j] =
                                (g.data[i * m + j] - gbar - y.data[i * m + j] * gy) / d;
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::SoftmaxLogLoss(a, labels) => {
                    let x = &nodes[*a].value;
                    let (n, k) = x.dims2()?;
                    let mut da = Tensor::zeros(&[n, k]);
                    let gs = g.data[0] / n as f64;
                    for (i, &y) in labels.iter().enumerate() {
                        let row = &x.data[i * k..(i + 1) * k];
                        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let denom: f64 = row.iter().map(|&p| (p - mx).exp()).sum();
                        for j in 0..k {
                            let soft = (row[j] - mx).exp() / denom;
                            da.data[i * k + j] = gs * (soft - if j == y { 1.0 } else { 0.0 });
                        }
                    }
                    acc(&mut grads, *a, da);
                }
                Op::ConcatRows(a, b) => {
                    let (na, m) = nodes[*a].value.dims2()?;
                    let (nb, _) = nodes[*b].value.dims2()?;
                    let da = Tensor::new(vec![na, m], g.data[..na * m].to_vec())?;
                    let db = Tensor::new(vec![nb, m], g.data[na * m..].to_vec())?;
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Reshape(a) => {
                    let shape = nodes[*a].value.shape.clone();
                    let da = Tensor::new(shape, g.data.clone())?;
                    acc(&mut grads, *a, da);
                }
            }
        }
        Ok(Gradients { grads })
    }
}
