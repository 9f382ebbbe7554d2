use super::{Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

impl Graph {
    /// Mean over the batch of `−log softmax(logits)[target]` for logits of
    /// shape `[batch, classes]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let shape = self.shape(logits).to_vec();
        if shape.len() != 2 || shape[0] != targets.len() {
            return Err(NnError::ShapeMismatch {
                op: "cross_entropy",
                got: shape,
                expected: vec![targets.len(), 0],
            });
        }
        let (b, classes) = (shape[0], shape[1]);
        if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
            return Err(NnError::IndexOutOfRange {
                op: "cross_entropy",
                index: bad,
                bound: classes,
            });
        }
        let src = self.value(logits).data();
        let mut probs = vec![0.0; src.len()];
        let mut total = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            let row = &src[i * classes..(i + 1) * classes];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let log_z = max + z.ln();
            total += log_z - row[t];
            for j in 0..classes {
                probs[i * classes + j] = (row[j] - log_z).exp();
            }
        }
        let out = Tensor::scalar(total / b.max(1) as f64);
        Ok(self.push(
            out,
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
            &[logits],
        ))
    }

    /// Mean squared error over every element; `target` is a constant.
    pub fn mse(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        if self.shape(pred) != target.shape() {
            return Err(NnError::ShapeMismatch {
                op: "mse",
                got: target.shape().to_vec(),
                expected: self.shape(pred).to_vec(),
            });
        }
        let p = self.value(pred).data();
        let n = p.len().max(1) as f64;
        let loss = p.iter().zip(target.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Mse {
                pred,
                target: target.data().to_vec(),
            },
            &[pred],
        ))
    }
}

pub(super) fn backward(g: &Graph, op: &Op, _out: Var, grad: &[f64]) -> Contributions {
    let d = grad[0];
    match op {
        Op::CrossEntropy { logits, targets, probs } => {
            let classes = g.shape(*logits)[1];
            let scale = d / targets.len().max(1) as f64;
            let mut gl: Vec<f64> = probs.iter().map(|p| p * scale).collect();
            for (i, &t) in targets.iter().enumerate() {
                gl[i * classes + t] -= scale;
            }
            vec![(*logits, gl)]
        }
        Op::Mse { pred, target } => {
            let p = g.value(*pred).data();
            let n = p.len().max(1) as f64;
            let gp = p.iter().zip(target).map(|(x, y)| 2.0 * (x - y) / n * d).collect();
            vec![(*pred, gp)]
        }
        _ => unreachable!("not a loss op"),
    }
}
