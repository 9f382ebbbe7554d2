use super::{Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::rng::Rng;
use crate::tensor::Tensor;

impl Graph {
    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let va = self.value(a);
        let data = va
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::from_parts(va.shape().to_vec(), data)
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let va = self.value(a);
        Tensor::from_parts(va.shape().to_vec(), va.data().iter().map(|&x| f(x)).collect())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same_shape("add", a, b)?;
        let out = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same_shape("sub", a, b)?;
        let out = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same_shape("mul", a, b)?;
        let out = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.map(a, |x| x * c);
        self.push(out, Op::Scale(a, c), &[a])
    }

    /// Adds a vector of length `last_dim(a)` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let n = *self.shape(a).last().unwrap_or(&0);
        if self.shape(row) != [n] {
            return Err(NnError::ShapeMismatch {
                op: "add_row",
                got: self.shape(row).to_vec(),
                expected: vec![n],
            });
        }
        let r = self.value(row).data();
        let va = self.value(a);
        let data = va
            .data()
            .chunks(n)
            .flat_map(|chunk| chunk.iter().zip(r).map(|(x, y)| x + y))
            .collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        Ok(self.push(out, Op::AddRow(a, row), &[a, row]))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.map(a, f64::exp);
        self.push(out, Op::Exp(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.map(a, |x| x.max(0.0));
        self.push(out, Op::Relu(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.map(a, f64::tanh);
        self.push(out, Op::Tanh(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.map(a, sigmoid);
        self.push(out, Op::Sigmoid(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let m = v.data().iter().sum::<f64>() / v.len().max(1) as f64;
        self.push(Tensor::scalar(m), Op::Mean(a), &[a])
    }

    /// Inverted dropout. With `rng = None` (evaluation) or `p == 0` this is
    /// the identity and returns `a` itself.
    pub fn dropout(&mut self, a: Var, p: f64, rng: Option<&mut Rng>) -> Var {
        let Some(rng) = rng else { return a };
        if p <= 0.0 {
            return a;
        }
        let keep = 1.0 - p;
        let scale: Vec<f64> = (0..self.value(a).len())
            .map(|_| if rng.bernoulli(keep) { 1.0 / keep } else { 0.0 })
            .collect();
        let va = self.value(a);
        let data = va.data().iter().zip(&scale).map(|(x, s)| x * s).collect();
        let out = Tensor::from_parts(va.shape().to_vec(), data);
        self.push(out, Op::Dropout { a, scale }, &[a])
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(super) fn backward(g: &Graph, op: &Op, out: Var, grad: &[f64]) -> Contributions {
    let y = g.value(out).data();
    let mut c = Contributions::new();
    match op {
        Op::Add(a, b) => {
            c.push((*a, grad.to_vec()));
            c.push((*b, grad.to_vec()));
        }
        Op::Sub(a, b) => {
            c.push((*a, grad.to_vec()));
            c.push((*b, grad.iter().map(|x| -x).collect()));
        }
        Op::Mul(a, b) => {
            let (va, vb) = (g.value(*a).data(), g.value(*b).data());
            if g.requires_grad(*a) {
                c.push((*a, grad.iter().zip(vb).map(|(d, y)| d * y).collect()));
            }
            if g.requires_grad(*b) {
                c.push((*b, grad.iter().zip(va).map(|(d, x)| d * x).collect()));
            }
        }
        Op::Scale(a, k) => c.push((*a, grad.iter().map(|d| d * k).collect())),
        Op::AddRow(a, row) => {
            c.push((*a, grad.to_vec()));
            if g.requires_grad(*row) {
                let n = g.shape(*row)[0];
                let mut gr = vec![0.0; n];
                for chunk in grad.chunks(n) {
                    for (acc, d) in gr.iter_mut().zip(chunk) {
                        *acc += d;
                    }
                }
                c.push((*row, gr));
            }
        }
        Op::Exp(a) => c.push((*a, grad.iter().zip(y).map(|(d, y)| d * y).collect())),
        Op::Relu(a) => c.push((
            *a,
            grad.iter()
                .zip(g.value(*a).data())
                .map(|(d, x)| if *x > 0.0 { *d } else { 0.0 })
                .collect(),
        )),
        Op::Tanh(a) => c.push((*a, grad.iter().zip(y).map(|(d, y)| d * (1.0 - y * y)).collect())),
        Op::Sigmoid(a) => c.push((*a, grad.iter().zip(y).map(|(d, y)| d * y * (1.0 - y)).collect())),
        Op::Sum(a) => c.push((*a, vec![grad[0]; g.value(*a).len()])),
        Op::Mean(a) => {
            let n = g.value(*a).len();
            c.push((*a, vec![grad[0] / n as f64; n]));
        }
        Op::Dropout { a, scale } => {
            c.push((*a, grad.iter().zip(scale).map(|(d, s)| d * s).collect()));
        }
        _ => unreachable!("not an elementwise op"),
    }
    c
}
