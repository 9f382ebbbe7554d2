use super::{split_axis, Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Stable softmax of `n` values spaced `stride` apart, skipping masked
/// entries (they come out as exactly 0).
fn softmax_strided(src: &[f64], dst: &mut [f64], base: usize, n: usize, stride: usize, keep: impl Fn(usize) -> bool) {
    let mut max = f64::NEG_INFINITY;
    for j in (0..n).filter(|&j| keep(j)) {
        max = max.max(src[base + j * stride]);
    }
    if max == f64::NEG_INFINITY {
        for j in 0..n {
            dst[base + j * stride] = 0.0;
        }
        return;
    }
    let mut total = 0.0;
    for j in 0..n {
        let e = if keep(j) { (src[base + j * stride] - max).exp() } else { 0.0 };
        dst[base + j * stride] = e;
        total += e;
    }
    for j in 0..n {
        dst[base + j * stride] /= total;
    }
}

impl Graph {
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(NnError::ShapeMismatch {
                op: "softmax",
                got: vec![axis],
                expected: shape,
            });
        }
        let (outer, n, inner) = split_axis(&shape, axis);
        let src = self.value(a).data();
        let mut data = vec![0.0; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                softmax_strided(src, &mut data, o * n * inner + i, n, inner, |_| true);
            }
        }
        let out = Tensor::from_parts(shape, data);
        Ok(self.push(out, Op::Softmax { a, axis }, &[a]))
    }

    /// Softmax over the last axis of `[t, rows, keys]` where key `j` of slab
    /// `s` only participates if `key_mask[s*keys + j]` is `true`. Masked
    /// entries receive probability exactly 0.
    pub fn masked_softmax(&mut self, a: Var, key_mask: &[bool]) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 3 || key_mask.len() != shape[0] * shape[2] {
            return Err(NnError::ShapeMismatch {
                op: "masked_softmax",
                got: vec![key_mask.len()],
                expected: shape,
            });
        }
        let (t, rows, keys) = (shape[0], shape[1], shape[2]);
        let src = self.value(a).data();
        let mut data = vec![0.0; src.len()];
        for s in 0..t {
            let mask = &key_mask[s * keys..(s + 1) * keys];
            for r in 0..rows {
                softmax_strided(src, &mut data, (s * rows + r) * keys, keys, 1, |j| mask[j]);
            }
        }
        let out = Tensor::from_parts(shape, data);
        Ok(self.push(out, Op::MaskedSoftmax(a), &[a]))
    }
}

pub(super) fn backward(g: &Graph, op: &Op, out: Var, grad: &[f64]) -> Contributions {
    let y = g.value(out).data();
    let shape = g.shape(out);
    let (a, (outer, n, inner)) = match op {
        Op::Softmax { a, axis } => (*a, split_axis(shape, *axis)),
        Op::MaskedSoftmax(a) => (*a, (shape[0] * shape[1], shape[2], 1)),
        _ => unreachable!("not a softmax op"),
    };
    let mut ga = vec![0.0; y.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let dot: f64 = (0..n).map(|j| grad[base + j * inner] * y[base + j * inner]).sum();
            for j in 0..n {
                let k = base + j * inner;
                ga[k] = y[k] * (grad[k] - dot);
            }
        }
    }
    vec![(a, ga)]
}
