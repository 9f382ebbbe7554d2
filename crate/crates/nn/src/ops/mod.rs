//! Differentiable operations. Each family adds forward methods to [`Graph`]
//! and a matching backward rule that is dispatched from [`backward`].

mod elementwise;
mod linalg;
mod loss;
mod norm;
mod shape;
mod softmax;

pub use norm::{BatchNormMode, BatchStats};

use crate::graph::{Graph, Var};

pub(crate) enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRow(Var, Var),
    Exp(Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Sum(Var),
    Mean(Var),
    MatMul(Var, Var),
    BatchMatMul {
        a: Var,
        b: Var,
        trans_b: bool,
    },
    Reshape(Var),
    Permute {
        a: Var,
        /// Output element i reads input element `index_map[i]`.
        index_map: Vec<usize>,
    },
    Concat {
        inputs: Vec<Var>,
        axis: usize,
    },
    Narrow {
        a: Var,
        axis: usize,
        start: usize,
    },
    Softmax {
        a: Var,
        axis: usize,
    },
    MaskedSoftmax(Var),
    MeanPool {
        a: Var,
        mask: Option<Vec<bool>>,
    },
    Dropout {
        a: Var,
        scale: Vec<f64>,
    },
    Embedding {
        table: Var,
        indices: Vec<usize>,
    },
    LayerNorm {
        a: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    BatchNorm {
        a: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        training: bool,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
    Mse {
        pred: Var,
        target: Vec<f64>,
    },
}

/// Gradient contributions of one node to its inputs.
pub(crate) type Contributions = Vec<(Var, Vec<f64>)>;

pub(crate) fn backward(g: &Graph, op: &Op, out: Var, grad: &[f64]) -> Contributions {
    match op {
        Op::Leaf => Vec::new(),
        Op::Add(..)
        | Op::Sub(..)
        | Op::Mul(..)
        | Op::Scale(..)
        | Op::AddRow(..)
        | Op::Exp(_)
        | Op::Relu(_)
        | Op::Tanh(_)
        | Op::Sigmoid(_)
        | Op::Sum(_)
        | Op::Mean(_)
        | Op::Dropout { .. } => elementwise::backward(g, op, out, grad),
        Op::MatMul(..) | Op::BatchMatMul { .. } => linalg::backward(g, op, grad),
        Op::Reshape(_)
        | Op::Permute { .. }
        | Op::Concat { .. }
        | Op::Narrow { .. }
        | Op::MeanPool { .. }
        | Op::Embedding { .. } => shape::backward(g, op, out, grad),
        Op::Softmax { .. } | Op::MaskedSoftmax(_) => softmax::backward(g, op, out, grad),
        Op::LayerNorm { .. } | Op::BatchNorm { .. } => norm::backward(g, op, out, grad),
        Op::CrossEntropy { .. } | Op::Mse { .. } => loss::backward(g, op, out, grad),
    }
}

/// Splits `shape` around `axis` into (outer, axis length, inner) extents.
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}
