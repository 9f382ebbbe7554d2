use super::{split_axis, Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

impl Graph {
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(a).clone().reshaped(shape.to_vec())?;
        Ok(self.push(out, Op::Reshape(a), &[a]))
    }

    /// Reorders axes: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let mut seen = vec![false; shape.len()];
        if perm.len() != shape.len() || perm.iter().any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(NnError::ShapeMismatch {
                op: "permute",
                got: perm.to_vec(),
                expected: shape,
            });
        }
        let rank = shape.len();
        let mut in_strides = vec![1usize; rank];
        for i in (0..rank.saturating_sub(1)).rev() {
            in_strides[i] = in_strides[i + 1] * shape[i + 1];
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let total: usize = shape.iter().product();
        let mut index_map = Vec::with_capacity(total);
        let mut counter = vec![0usize; rank];
        for _ in 0..total {
            index_map.push(counter.iter().zip(perm).map(|(c, &p)| c * in_strides[p]).sum());
            for ax in (0..rank).rev() {
                counter[ax] += 1;
                if counter[ax] < out_shape[ax] {
                    break;
                }
                counter[ax] = 0;
            }
        }
        let src = self.value(a).data();
        let data = index_map.iter().map(|&i| src[i]).collect();
        let out = Tensor::from_parts(out_shape, data);
        Ok(self.push(out, Op::Permute { a, index_map }, &[a]))
    }

    /// Joins tensors that agree on every axis except `axis`.
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = self.shape(inputs[0]).to_vec();
        if axis >= first.len() {
            return Err(NnError::ShapeMismatch {
                op: "concat",
                got: vec![axis],
                expected: first,
            });
        }
        let mut total = 0;
        for &v in inputs {
            let s = self.shape(v);
            let agrees = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !agrees {
                return Err(NnError::ShapeMismatch {
                    op: "concat",
                    got: s.to_vec(),
                    expected: first,
                });
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&first, axis);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &v in inputs {
                let n = self.shape(v)[axis];
                let src = self.value(v).data();
                data.extend_from_slice(&src[o * n * inner..(o + 1) * n * inner]);
            }
        }
        let mut shape = first;
        shape[axis] = total;
        let out = Tensor::from_parts(shape, data);
        Ok(self.push(
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            inputs,
        ))
    }

    /// Slice `[start, start+len)` along `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() || start + len > shape[axis] {
            return Err(NnError::IndexOutOfRange {
                op: "narrow",
                index: start + len,
                bound: shape.get(axis).copied().unwrap_or(0),
            });
        }
        let (outer, n, inner) = split_axis(&shape, axis);
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * n * inner + start * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        let out = Tensor::from_parts(out_shape, data);
        Ok(self.push(out, Op::Narrow { a, axis, start }, &[a]))
    }

    /// Average over the sequence axis of `[batch, seq, dim]`. With a mask of
    /// length `batch*seq` only positions marked `true` are averaged; a row
    /// with no kept position pools to zeros.
    pub fn mean_pool(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if shape.len() != 3 {
            return Err(NnError::ShapeMismatch {
                op: "mean_pool",
                got: shape,
                expected: vec![0, 0, 0],
            });
        }
        let (b, l, d) = (shape[0], shape[1], shape[2]);
        if let Some(m) = mask {
            if m.len() != b * l {
                return Err(NnError::ShapeMismatch {
                    op: "mean_pool",
                    got: vec![m.len()],
                    expected: vec![b * l],
                });
            }
        }
        let src = self.value(a).data();
        let mut data = vec![0.0; b * d];
        for bi in 0..b {
            let kept: Vec<usize> = (0..l).filter(|&t| mask.is_none_or(|m| m[bi * l + t])).collect();
            if kept.is_empty() {
                continue;
            }
            let inv = 1.0 / kept.len() as f64;
            let row = &mut data[bi * d..(bi + 1) * d];
            for t in kept {
                let x = &src[(bi * l + t) * d..(bi * l + t + 1) * d];
                for (r, v) in row.iter_mut().zip(x) {
                    *r += v * inv;
                }
            }
        }
        let out = Tensor::from_parts(vec![b, d], data);
        Ok(self.push(
            out,
            Op::MeanPool {
                a,
                mask: mask.map(<[bool]>::to_vec),
            },
            &[a],
        ))
    }

    /// Rows of `table` (`[vocab, dim]`) gathered by `indices` → `[n, dim]`.
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let shape = self.shape(table).to_vec();
        if shape.len() != 2 {
            return Err(NnError::ShapeMismatch {
                op: "embedding",
                got: shape,
                expected: vec![0, 0],
            });
        }
        let (vocab, d) = (shape[0], shape[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= vocab) {
            return Err(NnError::IndexOutOfRange {
                op: "embedding",
                index: bad,
                bound: vocab,
            });
        }
        let src = self.value(table).data();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let out = Tensor::from_parts(vec![indices.len(), d], data);
        Ok(self.push(
            out,
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
            &[table],
        ))
    }
}

pub(super) fn backward(g: &Graph, op: &Op, out: Var, grad: &[f64]) -> Contributions {
    let mut c = Contributions::new();
    match op {
        Op::Reshape(a) => c.push((*a, grad.to_vec())),
        Op::Permute { a, index_map } => {
            let mut ga = vec![0.0; grad.len()];
            for (d, &i) in grad.iter().zip(index_map) {
                ga[i] = *d;
            }
            c.push((*a, ga));
        }
        Op::Concat { inputs, axis } => {
            let out_shape = g.shape(out);
            let (outer, total, inner) = split_axis(out_shape, *axis);
            let mut offset = 0;
            for &v in inputs {
                let n = g.shape(v)[*axis];
                if g.requires_grad(v) {
                    let mut gv = Vec::with_capacity(outer * n * inner);
                    for o in 0..outer {
                        let base = (o * total + offset) * inner;
                        gv.extend_from_slice(&grad[base..base + n * inner]);
                    }
                    c.push((v, gv));
                }
                offset += n;
            }
        }
        Op::Narrow { a, axis, start } => {
            let in_shape = g.shape(*a);
            let (outer, n, inner) = split_axis(in_shape, *axis);
            let len = g.shape(out)[*axis];
            let mut ga = vec![0.0; outer * n * inner];
            for o in 0..outer {
                let dst = o * n * inner + start * inner;
                ga[dst..dst + len * inner].copy_from_slice(&grad[o * len * inner..(o + 1) * len * inner]);
            }
            c.push((*a, ga));
        }
        Op::MeanPool { a, mask } => {
            let s = g.shape(*a);
            let (b, l, d) = (s[0], s[1], s[2]);
            let mut ga = vec![0.0; b * l * d];
            for bi in 0..b {
                let kept = |t: usize| mask.as_ref().is_none_or(|m| m[bi * l + t]);
                let count = (0..l).filter(|&t| kept(t)).count();
                if count == 0 {
                    continue;
                }
                let inv = 1.0 / count as f64;
                let gr = &grad[bi * d..(bi + 1) * d];
                for t in (0..l).filter(|&t| kept(t)) {
                    for (dst, gv) in ga[(bi * l + t) * d..(bi * l + t + 1) * d].iter_mut().zip(gr) {
                        *dst = gv * inv;
                    }
                }
            }
            c.push((*a, ga));
        }
        Op::Embedding { table, indices } => {
            let d = g.shape(*table)[1];
            let mut gt = vec![0.0; g.value(*table).len()];
            for (row, &i) in indices.iter().enumerate() {
                for (dst, gv) in gt[i * d..(i + 1) * d].iter_mut().zip(&grad[row * d..(row + 1) * d]) {
                    *dst += gv;
                }
            }
            c.push((*table, gt));
        }
        _ => unreachable!("not a shape op"),
    }
    c
}
