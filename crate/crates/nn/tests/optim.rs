use indexmap::IndexMap;
use ppm_nn::optim::Adam;
use ppm_nn::{Graph, ParamStore, Rng, Tensor};

fn scalar_store(w: f64) -> ParamStore {
    let mut s = ParamStore::new();
    s.insert("w", Tensor::scalar(w)).unwrap();
    s
}

#[test]
fn first_step_moves_by_learning_rate() {
    let mut store = scalar_store(0.0);
    let mut adam = Adam::new(0.1);
    let grads: IndexMap<String, Vec<f64>> = [("w".to_string(), vec![1.0])].into_iter().collect();
    adam.step(&mut store, &grads).unwrap();
    let w = store.get("w").unwrap().item();
    assert!((w + 0.1).abs() < 1e-6, "w = {w}");
}

#[test]
fn zero_gradient_leaves_parameter_unchanged() {
    let mut store = scalar_store(2.5);
    let mut adam = Adam::new(0.1);
    let grads: IndexMap<String, Vec<f64>> = [("w".to_string(), vec![0.0])].into_iter().collect();
    adam.step(&mut store, &grads).unwrap();
    assert_eq!(store.get("w").unwrap().item(), 2.5);
}

fn minimize_shifted_quadratic(steps: usize) -> f64 {
    // f(w) = (w − 3)², gradient taken through the autodiff graph.
    let mut store = scalar_store(0.0);
    let mut adam = Adam::new(0.1);
    for _ in 0..steps {
        let mut g = Graph::new();
        let p = store.bind(&mut g);
        let w = p.get("w").unwrap();
        let three = g.constant(Tensor::scalar(3.0));
        let d = g.sub(w, three).unwrap();
        let sq = g.mul(d, d).unwrap();
        g.backward(sq).unwrap();
        adam.step(&mut store, &p.gradients(&g)).unwrap();
    }
    store.get("w").unwrap().item()
}

#[test]
fn shifted_quadratic_matches_reference_adam_trajectory() {
    // Reference value from an independent scalar Adam loop (and PyTorch's
    // Adam, lr=0.1, default betas): w_100 = 2.98065543752781.
    let w = minimize_shifted_quadratic(100);
    assert!((w - 2.980_655_437_527_81).abs() < 1e-10, "w = {w}");
}

#[test]
fn converges_on_shifted_quadratic() {
    let w = minimize_shifted_quadratic(200);
    assert!((w - 3.0).abs() < 0.01, "w = {w}");
}

#[test]
fn dropout_keeps_expected_fraction_and_is_identity_in_eval() {
    let mut g = Graph::new();
    let x = g.constant(Tensor::full(&[100_000], 1.0));
    let mut rng = Rng::seed(5);
    let y = g.dropout(x, 0.3, Some(&mut rng));
    let kept = g.value(y).data().iter().filter(|&&v| v != 0.0).count() as f64 / 1e5;
    assert!((kept - 0.7).abs() < 0.01, "kept {kept}");
    let z = g.dropout(x, 0.3, None);
    assert_eq!(z, x);
}

#[test]
fn same_seed_gives_bit_identical_training() {
    let run = || {
        let mut rng = Rng::seed(11);
        let mut store = ParamStore::new();
        ppm_nn::layers::declare_linear(&mut store, &mut rng, "fc", 4, 3).unwrap();
        let mut adam = Adam::new(0.01);
        for _ in 0..10 {
            let mut g = Graph::new();
            let p = store.bind(&mut g);
            let x = g.constant(Tensor::new(vec![2, 4], (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap());
            let h = ppm_nn::layers::linear(&mut g, &p, "fc", x).unwrap();
            let h = g.dropout(h, 0.2, Some(&mut rng));
            let loss = g.cross_entropy(h, &[0, 2]).unwrap();
            g.backward(loss).unwrap();
            adam.step(&mut store, &p.gradients(&g)).unwrap();
        }
        store
    };
    let (a, b) = (run(), run());
    for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
        let xb: Vec<u64> = x.data().iter().map(|v| v.to_bits()).collect();
        let yb: Vec<u64> = y.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(xb, yb);
    }
}
