//! Central finite-difference gradient checking.
//!
//! The function under test is evaluated through the forward pass only; the
//! numerical derivative never touches the backward rules it is compared to.

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Absolute floor of the relative-error denominator, so that gradients that
/// are zero analytically are compared on an absolute scale.
pub const DENOM_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// (input index, element index) of the worst element.
    pub worst: (usize, usize),
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

/// Compares autodiff gradients of `f` with respect to every element of
/// every input against central differences with step `h`. Non-scalar
/// outputs are reduced with fixed pseudo-random weights in `[-1, 1]`.
pub fn check<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor], backward: bool| -> Result<(f64, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.param(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        let n = g.value(out).len();
        let mut wrng = Rng::seed(0x5eed_9a4d);
        let weights = Tensor::from_parts(
            g.shape(out).to_vec(),
            (0..n).map(|_| wrng.uniform(-1.0, 1.0)).collect(),
        );
        let w = g.constant(weights);
        let prod = g.mul(out, w)?;
        let loss = g.sum(prod);
        let value = g.value(loss).item();
        let mut grads = Vec::new();
        if backward {
            g.backward(loss)?;
            grads = vars
                .iter()
                .map(|&v| g.grad(v).map_or_else(|| vec![0.0; g.value(v).len()], <[f64]>::to_vec))
                .collect();
        }
        Ok((value, grads))
    };

    let (_, analytic) = eval(inputs, true)?;
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.len() {
            let orig = input.data()[j];
            work[i].data_mut()[j] = orig + h;
            let (plus, _) = eval(&work, false)?;
            work[i].data_mut()[j] = orig - h;
            let (minus, _) = eval(&work, false)?;
            work[i].data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic[i][j], numeric);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (i, j);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
