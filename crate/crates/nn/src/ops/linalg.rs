use super::{Contributions, Op};
use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// `out += op(a) · op(b)` where `op(a)` is `m×k` and `op(b)` is `k×n`.
/// With `ta` the buffer `a` holds a `k×m` matrix, with `tb` `b` holds `n×k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    a: &[f64],
    b: &[f64],
    m: usize,
    k: usize,
    n: usize,
    ta: bool,
    tb: bool,
    out: &mut [f64],
) {
    let a_at = |i: usize, p: usize| if ta { a[p * m + i] } else { a[i * k + p] };
    if tb {
        for i in 0..m {
            for j in 0..n {
                let brow = &b[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for (p, bv) in brow.iter().enumerate() {
                    acc += a_at(i, p) * bv;
                }
                out[i * n + j] += acc;
            }
        }
    } else {
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let av = a_at(i, p);
                if av == 0.0 {
                    continue;
                }
                let brow = &b[p * n..(p + 1) * n];
                for (o, bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }
}

impl Graph {
    /// `[m,k] · [k,n] → [m,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(NnError::ShapeMismatch {
                op: "matmul",
                got: sb.to_vec(),
                expected: vec![sa.get(1).copied().unwrap_or(0), sb.get(1).copied().unwrap_or(0)],
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![0.0; m * n];
        gemm(self.value(a).data(), self.value(b).data(), m, k, n, false, false, &mut data);
        let out = Tensor::from_parts(vec![m, n], data);
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    /// Batched product `[t,m,k] · [t,k,n] → [t,m,n]`; with `trans_b` the
    /// second operand is `[t,n,k]` and is used transposed.
    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let bad = || NnError::ShapeMismatch {
            op: "batch_matmul",
            got: sb.clone(),
            expected: sa.clone(),
        };
        if sa.len() != 3 || sb.len() != 3 || sa[0] != sb[0] {
            return Err(bad());
        }
        let (t, m, k) = (sa[0], sa[1], sa[2]);
        let (bk, n) = if trans_b { (sb[2], sb[1]) } else { (sb[1], sb[2]) };
        if bk != k {
            return Err(bad());
        }
        let mut data = vec![0.0; t * m * n];
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        for s in 0..t {
            gemm(
                &va[s * m * k..(s + 1) * m * k],
                &vb[s * k * n..(s + 1) * k * n],
                m,
                k,
                n,
                false,
                trans_b,
                &mut data[s * m * n..(s + 1) * m * n],
            );
        }
        let out = Tensor::from_parts(vec![t, m, n], data);
        Ok(self.push(out, Op::BatchMatMul { a, b, trans_b }, &[a, b]))
    }
}

pub(super) fn backward(g: &Graph, op: &Op, grad: &[f64]) -> Contributions {
    let mut c = Contributions::new();
    match op {
        Op::MatMul(a, b) => {
            let (sa, sb) = (g.shape(*a), g.shape(*b));
            let (m, k, n) = (sa[0], sa[1], sb[1]);
            let (va, vb) = (g.value(*a).data(), g.value(*b).data());
            if g.requires_grad(*a) {
                // dA = dC · Bᵀ
                let mut ga = vec![0.0; m * k];
                gemm(grad, vb, m, n, k, false, true, &mut ga);
                c.push((*a, ga));
            }
            if g.requires_grad(*b) {
                // dB = Aᵀ · dC
                let mut gb = vec![0.0; k * n];
                gemm(va, grad, k, m, n, true, false, &mut gb);
                c.push((*b, gb));
            }
        }
        Op::BatchMatMul { a, b, trans_b } => {
            let sa = g.shape(*a);
            let sb = g.shape(*b);
            let (t, m, k) = (sa[0], sa[1], sa[2]);
            let n = if *trans_b { sb[1] } else { sb[2] };
            let (va, vb) = (g.value(*a).data(), g.value(*b).data());
            if g.requires_grad(*a) {
                let mut ga = vec![0.0; t * m * k];
                for s in 0..t {
                    let gs = &grad[s * m * n..(s + 1) * m * n];
                    let bs = &vb[s * k * n..(s + 1) * k * n];
                    let out = &mut ga[s * m * k..(s + 1) * m * k];
                    // C = A·B → dA = dC·Bᵀ ; C = A·Bᵀ → dA = dC·B
                    gemm(gs, bs, m, n, k, false, !*trans_b, out);
                }
                c.push((*a, ga));
            }
            if g.requires_grad(*b) {
                let mut gb = vec![0.0; t * k * n];
                for s in 0..t {
                    let gs = &grad[s * m * n..(s + 1) * m * n];
                    let as_ = &va[s * m * k..(s + 1) * m * k];
                    let out = &mut gb[s * k * n..(s + 1) * k * n];
                    if *trans_b {
                        // dB[n,k] = dCᵀ · A
                        gemm(gs, as_, n, m, k, true, false, out);
                    } else {
                        // dB[k,n] = Aᵀ · dC
                        gemm(as_, gs, k, m, n, true, false, out);
                    }
                }
                c.push((*b, gb));
            }
        }
        _ => unreachable!("not a linear-algebra op"),
    }
    c
}
