//! Finite-difference checks for every differentiable op, over several
//! random shapes each.

use ppm_nn::gradcheck::{self, GradCheck};
use ppm_nn::{BatchNormMode, Graph, NnError, Rng, Tensor, Var};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
}

/// Values bounded away from zero, for ops with a kink there.
fn random_away_from_zero(rng: &mut Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.uniform(0.05, 1.0);
            if rng.bernoulli(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn assert_ok(name: &str, report: GradCheck) {
    assert!(report.checked > 0, "{name}: nothing checked");
    assert!(
        report.max_rel_error < TOL,
        "{name}: max relative error {} at {:?}",
        report.max_rel_error,
        report.worst
    );
}

fn shapes_2d() -> Vec<[usize; 2]> {
    vec![[3, 4], [1, 1], [2, 5], [4, 3], [5, 2], [1, 6]]
}

fn shapes_3d() -> Vec<[usize; 3]> {
    vec![[2, 3, 4], [1, 1, 3], [3, 2, 2], [2, 4, 1], [1, 5, 3]]
}

fn check(inputs: &[Tensor], f: impl Fn(&mut Graph, &[Var]) -> Result<Var, NnError>) -> GradCheck {
    gradcheck::check(inputs, H, f).unwrap()
}

#[test]
fn elementwise_binary_ops() {
    let mut rng = Rng::seed(1);
    for s in shapes_2d() {
        let a = random(&mut rng, &s);
        let b = random(&mut rng, &s);
        assert_ok("add", check(&[a.clone(), b.clone()], |g, v| g.add(v[0], v[1])));
        assert_ok("sub", check(&[a.clone(), b.clone()], |g, v| g.sub(v[0], v[1])));
        assert_ok("mul", check(&[a.clone(), b.clone()], |g, v| g.mul(v[0], v[1])));
    }
}

#[test]
fn elementwise_unary_ops() {
    let mut rng = Rng::seed(2);
    for s in shapes_2d() {
        let a = random(&mut rng, &s);
        assert_ok("scale", check(&[a.clone()], |g, v| Ok(g.scale(v[0], -1.7))));
        assert_ok("exp", check(&[a.clone()], |g, v| Ok(g.exp(v[0]))));
        assert_ok("tanh", check(&[a.clone()], |g, v| Ok(g.tanh(v[0]))));
        assert_ok("sigmoid", check(&[a.clone()], |g, v| Ok(g.sigmoid(v[0]))));
        assert_ok("sum", check(&[a.clone()], |g, v| Ok(g.sum(v[0]))));
        assert_ok("mean", check(&[a.clone()], |g, v| Ok(g.mean(v[0]))));
        let away = random_away_from_zero(&mut rng, &s);
        assert_ok("relu", check(&[away], |g, v| Ok(g.relu(v[0]))));
    }
}

#[test]
fn add_row_op() {
    let mut rng = Rng::seed(3);
    for s in shapes_2d() {
        let a = random(&mut rng, &s);
        let r = random(&mut rng, &[s[1]]);
        assert_ok("add_row", check(&[a, r], |g, v| g.add_row(v[0], v[1])));
    }
}

#[test]
fn matmul_ops() {
    let mut rng = Rng::seed(4);
    for (m, k, n) in [(3, 4, 2), (1, 1, 1), (2, 5, 3), (4, 2, 4), (1, 3, 5)] {
        let a = random(&mut rng, &[m, k]);
        let b = random(&mut rng, &[k, n]);
        assert_ok("matmul", check(&[a, b], |g, v| g.matmul(v[0], v[1])));
    }
    for (t, m, k, n) in [(2, 3, 4, 2), (1, 1, 1, 1), (3, 2, 2, 3), (2, 4, 3, 1), (1, 2, 5, 2)] {
        let a = random(&mut rng, &[t, m, k]);
        let b = random(&mut rng, &[t, k, n]);
        assert_ok("batch_matmul", check(&[a.clone(), b], |g, v| g.batch_matmul(v[0], v[1], false)));
        let bt = random(&mut rng, &[t, n, k]);
        assert_ok("batch_matmul_t", check(&[a, bt], |g, v| g.batch_matmul(v[0], v[1], true)));
    }
}

#[test]
fn shape_ops() {
    let mut rng = Rng::seed(5);
    for s in shapes_3d() {
        let a = random(&mut rng, &s);
        assert_ok("reshape", check(&[a.clone()], |g, v| g.reshape(v[0], &[s[0] * s[1], s[2]])));
        assert_ok("permute", check(&[a.clone()], |g, v| g.permute(v[0], &[2, 0, 1])));
        for axis in 0..3 {
            let b = random(&mut rng, &s);
            assert_ok("concat", check(&[a.clone(), b], |g, v| g.concat(&[v[0], v[1]], axis)));
            let len = s[axis].div_ceil(2);
            let start = s[axis] - len;
            assert_ok("narrow", check(&[a.clone()], |g, v| g.narrow(v[0], axis, start, len)));
        }
    }
}

#[test]
fn pooling_and_embedding() {
    let mut rng = Rng::seed(6);
    for s in shapes_3d() {
        let a = random(&mut rng, &s);
        assert_ok("mean_pool", check(&[a.clone()], |g, v| g.mean_pool(v[0], None)));
        let mask: Vec<bool> = (0..s[0] * s[1]).map(|i| i % s[1] != 0 || s[1] == 1).collect();
        assert_ok("mean_pool_masked", check(&[a], |g, v| g.mean_pool(v[0], Some(&mask))));
    }
    for (vocab, dim) in [(5, 3), (1, 1), (4, 6), (7, 2), (3, 4)] {
        let table = random(&mut rng, &[vocab, dim]);
        let idx: Vec<usize> = (0..6).map(|_| rng.below(vocab)).collect();
        assert_ok("embedding", check(&[table], |g, v| g.embedding(v[0], &idx)));
    }
}

#[test]
fn softmax_ops() {
    let mut rng = Rng::seed(7);
    for s in shapes_3d() {
        let a = random(&mut rng, &s);
        for axis in 0..3 {
            assert_ok("softmax", check(&[a.clone()], |g, v| g.softmax(v[0], axis)));
        }
        let mask: Vec<bool> = (0..s[0] * s[2]).map(|i| i % s[2] != 0 || s[2] == 1).collect();
        assert_ok("masked_softmax", check(&[a], |g, v| g.masked_softmax(v[0], &mask)));
    }
}

#[test]
fn normalization_ops() {
    let mut rng = Rng::seed(8);
    for s in shapes_2d().into_iter().filter(|s| s[1] > 1) {
        let x = random(&mut rng, &s);
        let gamma = random(&mut rng, &[s[1]]);
        let beta = random(&mut rng, &[s[1]]);
        assert_ok(
            "layer_norm",
            check(&[x, gamma, beta], |g, v| g.layer_norm(v[0], v[1], v[2], 1e-5)),
        );
    }
    for s in shapes_2d().into_iter().filter(|s| s[0] > 1) {
        let x = random(&mut rng, &s);
        let gamma = random(&mut rng, &[s[1]]);
        let beta = random(&mut rng, &[s[1]]);
        assert_ok(
            "batch_norm_train",
            check(&[x.clone(), gamma.clone(), beta.clone()], |g, v| {
                Ok(g.batch_norm(v[0], v[1], v[2], 1e-5, BatchNormMode::Train)?.0)
            }),
        );
        let mean: Vec<f64> = (0..s[1]).map(|_| rng.uniform(-0.5, 0.5)).collect();
        let var: Vec<f64> = (0..s[1]).map(|_| rng.uniform(0.5, 2.0)).collect();
        assert_ok(
            "batch_norm_eval",
            check(&[x, gamma, beta], |g, v| {
                Ok(g.batch_norm(v[0], v[1], v[2], 1e-5, BatchNormMode::Eval { mean: &mean, var: &var })?.0)
            }),
        );
    }
}

#[test]
fn dropout_with_fixed_mask() {
    let mut rng = Rng::seed(9);
    for s in shapes_2d() {
        let a = random(&mut rng, &s);
        // Re-seeding inside the closure replays the same mask on every call.
        assert_ok(
            "dropout",
            check(&[a], |g, v| {
                let mut r = Rng::seed(77);
                Ok(g.dropout(v[0], 0.3, Some(&mut r)))
            }),
        );
    }
}

#[test]
fn loss_ops() {
    let mut rng = Rng::seed(10);
    for s in shapes_2d() {
        let logits = random(&mut rng, &s);
        let targets: Vec<usize> = (0..s[0]).map(|_| rng.below(s[1])).collect();
        assert_ok("cross_entropy", check(&[logits], |g, v| g.cross_entropy(v[0], &targets)));
        let pred = random(&mut rng, &s);
        let target = random(&mut rng, &s);
        assert_ok("mse", check(&[pred], |g, v| g.mse(v[0], &target)));
    }
}

#[test]
fn reused_tensor_accumulates_both_paths() {
    let mut rng = Rng::seed(11);
    for s in shapes_2d() {
        let a = random(&mut rng, &s);
        // f(a) = tanh(a) * a + exp(a): `a` feeds three paths.
        assert_ok(
            "reuse",
            check(&[a], |g, v| {
                let t = g.tanh(v[0]);
                let p = g.mul(t, v[0])?;
                let e = g.exp(v[0]);
                g.add(p, e)
            }),
        );
    }
}

#[test]
fn cross_entropy_gradient_is_softmax_minus_one_hot() {
    let mut rng = Rng::seed(12);
    for _ in 0..20 {
        let classes = 2 + rng.below(6);
        let logits: Vec<f64> = (0..classes).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let target = rng.below(classes);
        let mut g = Graph::new();
        let l = g.param(Tensor::new(vec![1, classes], logits.clone()).unwrap());
        let loss = g.cross_entropy(l, &[target]).unwrap();
        g.backward(loss).unwrap();
        let z: f64 = logits.iter().map(|x| x.exp()).sum();
        for (j, (gr, x)) in g.grad(l).unwrap().iter().zip(&logits).enumerate() {
            let expected = x.exp() / z - if j == target { 1.0 } else { 0.0 };
            assert!((gr - expected).abs() < 1e-12);
        }
    }
}
