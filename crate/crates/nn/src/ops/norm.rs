use super::{Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Statistics of one training-mode batch-norm call, for updating running
/// averages.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

pub enum BatchNormMode<'a> {
    /// Normalize with the batch's own population statistics.
    Train,
    /// Normalize with fixed running statistics.
    Eval { mean: &'a [f64], var: &'a [f64] },
}

impl Graph {
    fn check_affine(&self, op: &'static str, width: usize, gamma: Var, beta: Var) -> Result<()> {
        for p in [gamma, beta] {
            if self.shape(p) != [width] {
                return Err(NnError::ShapeMismatch {
                    op,
                    got: self.shape(p).to_vec(),
                    expected: vec![width],
                });
            }
        }
        Ok(())
    }

    /// Normalizes every row over the last axis, then applies `gamma`/`beta`.
    pub fn layer_norm(&mut self, a: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let d = *shape.last().unwrap_or(&0);
        self.check_affine("layer_norm", d, gamma, beta)?;
        let src = self.value(a).data();
        let (gv, bv) = (self.value(gamma).data(), self.value(beta).data());
        let rows = src.len() / d.max(1);
        let mut xhat = vec![0.0; src.len()];
        let mut inv_std = vec![0.0; rows];
        let mut data = vec![0.0; src.len()];
        for r in 0..rows {
            let x = &src[r * d..(r + 1) * d];
            let mean = x.iter().sum::<f64>() / d as f64;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for j in 0..d {
                let h = (x[j] - mean) * is;
                xhat[r * d + j] = h;
                data[r * d + j] = h * gv[j] + bv[j];
            }
        }
        let out = Tensor::from_parts(shape, data);
        Ok(self.push(
            out,
            Op::LayerNorm {
                a,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[a, gamma, beta],
        ))
    }

    /// Batch normalization of `[n, features]` over the first axis. In
    /// training mode the batch statistics are returned so the caller can
    /// maintain running averages.
    pub fn batch_norm(
        &mut self,
        a: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        mode: BatchNormMode<'_>,
    ) -> Result<(Var, Option<BatchStats>)> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 2 {
            return Err(NnError::ShapeMismatch {
                op: "batch_norm",
                got: shape,
                expected: vec![0, 0],
            });
        }
        let (n, f) = (shape[0], shape[1]);
        self.check_affine("batch_norm", f, gamma, beta)?;
        let src = self.value(a).data();
        let (training, mean, var) = match mode {
            BatchNormMode::Train => {
                let mut mean = vec![0.0; f];
                let mut var = vec![0.0; f];
                for row in src.chunks(f) {
                    for (m, x) in mean.iter_mut().zip(row) {
                        *m += x / n as f64;
                    }
                }
                for row in src.chunks(f) {
                    for j in 0..f {
                        var[j] += (row[j] - mean[j]).powi(2) / n as f64;
                    }
                }
                (true, mean, var)
            }
            BatchNormMode::Eval { mean, var } => {
                if mean.len() != f || var.len() != f {
                    return Err(NnError::ShapeMismatch {
                        op: "batch_norm",
                        got: vec![mean.len(), var.len()],
                        expected: vec![f, f],
                    });
                }
                (false, mean.to_vec(), var.to_vec())
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (gv, bv) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; src.len()];
        let mut data = vec![0.0; src.len()];
        for i in 0..n {
            for j in 0..f {
                let h = (src[i * f + j] - mean[j]) * inv_std[j];
                xhat[i * f + j] = h;
                data[i * f + j] = h * gv[j] + bv[j];
            }
        }
        let out = Tensor::from_parts(shape, data);
        let v = self.push(
            out,
            Op::BatchNorm {
                a,
                gamma,
                beta,
                xhat,
                inv_std,
                training,
            },
            &[a, gamma, beta],
        );
        Ok((v, training.then_some(BatchStats { mean, var })))
    }
}

fn affine_grads(g: &Graph, c: &mut Contributions, gamma: Var, beta: Var, grad: &[f64], xhat: &[f64], width: usize) {
    if g.requires_grad(gamma) {
        let mut gg = vec![0.0; width];
        for (k, (d, h)) in grad.iter().zip(xhat).enumerate() {
            gg[k % width] += d * h;
        }
        c.push((gamma, gg));
    }
    if g.requires_grad(beta) {
        let mut gb = vec![0.0; width];
        for (k, d) in grad.iter().enumerate() {
            gb[k % width] += d;
        }
        c.push((beta, gb));
    }
}

pub(super) fn backward(g: &Graph, op: &Op, _out: Var, grad: &[f64]) -> Contributions {
    let mut c = Contributions::new();
    match op {
        Op::LayerNorm {
            a,
            gamma,
            beta,
            xhat,
            inv_std,
        } => {
            let d = g.shape(*gamma)[0];
            let gv = g.value(*gamma).data();
            if g.requires_grad(*a) {
                let mut ga = vec![0.0; grad.len()];
                for (r, is) in inv_std.iter().enumerate() {
                    let span = r * d..(r + 1) * d;
                    let dh: Vec<f64> = grad[span.clone()].iter().zip(gv).map(|(d, g)| d * g).collect();
                    let h = &xhat[span.clone()];
                    let mean_dh = dh.iter().sum::<f64>() / d as f64;
                    let mean_dh_h = dh.iter().zip(h).map(|(x, y)| x * y).sum::<f64>() / d as f64;
                    for j in 0..d {
                        ga[r * d + j] = is * (dh[j] - mean_dh - h[j] * mean_dh_h);
                    }
                }
                c.push((*a, ga));
            }
            affine_grads(g, &mut c, *gamma, *beta, grad, xhat, d);
        }
        Op::BatchNorm {
            a,
            gamma,
            beta,
            xhat,
            inv_std,
            training,
        } => {
            let f = g.shape(*gamma)[0];
            let n = grad.len() / f;
            let gv = g.value(*gamma).data();
            if g.requires_grad(*a) {
                let mut ga = vec![0.0; grad.len()];
                if *training {
                    for j in 0..f {
                        let mut mean_dh = 0.0;
                        let mut mean_dh_h = 0.0;
                        for i in 0..n {
                            let dh = grad[i * f + j] * gv[j];
                            mean_dh += dh / n as f64;
                            mean_dh_h += dh * xhat[i * f + j] / n as f64;
                        }
                        for i in 0..n {
                            let k = i * f + j;
                            ga[k] = inv_std[j] * (grad[k] * gv[j] - mean_dh - xhat[k] * mean_dh_h);
                        }
                    }
                } else {
                    for (k, d) in grad.iter().enumerate() {
                        ga[k] = d * gv[k % f] * inv_std[k % f];
                    }
                }
                c.push((*a, ga));
            }
            affine_grads(g, &mut c, *gamma, *beta, grad, xhat, f);
        }
        _ => unreachable!("not a normalization op"),
    }
    c
}
