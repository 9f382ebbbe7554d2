use crate::error::{NnError, Result};
use crate::ops::{self, Op};
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) grad: Option<Vec<f64>>,
    pub(crate) op: Op,
    pub(crate) requires_grad: bool,
}

/// Append-only tape of tensor operations.
///
/// A graph is built for one forward pass and dropped afterwards.
#[derive(Default)]
pub struct Graph {
    pub(crate) nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Leaf that receives a gradient on `backward`.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub(crate) fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        // Ops on constants collapse to constants: no need to keep saved state.
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated by the last `backward`, if the node was reached.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reverse sweep from a single-element `loss` with seed gradient 1.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.shape(loss).to_vec();
        if shape.iter().product::<usize>() != 1 {
            return Err(NnError::NonScalarLoss(shape));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad || matches!(self.nodes[idx].op, Op::Leaf) {
                continue;
            }
            let Some(grad) = self.nodes[idx].grad.take() else {
                continue;
            };
            let op = std::mem::replace(&mut self.nodes[idx].op, Op::Leaf);
            let contributions = ops::backward(self, &op, Var(idx), &grad);
            self.nodes[idx].op = op;
            self.nodes[idx].grad = Some(grad);
            for (input, g) in contributions {
                self.accumulate(input, g);
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, contribution: Vec<f64>) {
        let node = &mut self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(existing) => {
                for (e, c) in existing.iter_mut().zip(&contribution) {
                    *e += c;
                }
            }
            None => node.grad = Some(contribution),
        }
    }

    pub(crate) fn check_same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(NnError::ShapeMismatch {
                op,
                got: self.shape(b).to_vec(),
                expected: self.shape(a).to_vec(),
            });
        }
        Ok(())
    }
}
