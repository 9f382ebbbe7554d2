//! Weight initializers. All of them draw from the caller's [`Rng`] so a seed
//! fixes every initial value.

use crate::rng::Rng;
use crate::tensor::Tensor;

/// Glorot/Xavier uniform: `U(−a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform(rng: &mut Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(-limit, limit)).collect();
    Tensor::from_parts(shape.to_vec(), data)
}

pub fn normal(rng: &mut Rng, shape: &[usize], std: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.normal(std)).collect();
    Tensor::from_parts(shape.to_vec(), data)
}

pub fn zeros(shape: &[usize]) -> Tensor {
    Tensor::zeros(shape)
}

pub fn ones(shape: &[usize]) -> Tensor {
    Tensor::full(shape, 1.0)
}
