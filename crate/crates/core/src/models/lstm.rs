//! LSTM (full) and LSTM_light: a shared LSTM + batch norm + dropout
//! backbone over n-gram windows.

use ppm_nn::layers;
use ppm_nn::{BatchNormMode, BoundParams, Graph, Rng};

use super::{declare_head, head, head_outputs, Batch, Forward, Model, ModelType, Result, RunningStats, BN_EPS};

const BN: &str = "backbone/bn";

pub(super) fn declare(model: &mut Model, rng: &mut Rng) -> Result<()> {
    let c = model.config.clone();
    let (e, h) = (c.embed_dim, c.hidden_size);
    let store = &mut model.params;
    layers::declare_embedding(store, rng, "embed/activity", model.activity_classes, e)?;
    layers::declare_embedding(store, rng, "embed/role", model.role_classes, e)?;
    layers::declare_lstm(store, rng, "backbone/lstm", 2 * e + 3, h)?;
    layers::declare_layer_norm(store, BN, h)?;
    model.running.insert(
        BN.to_string(),
        RunningStats {
            mean: vec![0.0; h],
            var: vec![1.0; h],
        },
    );
    for (name, out) in head_outputs(model) {
        let prefix = format!("head_{name}");
        if c.model_type == ModelType::Lstm {
            layers::declare_lstm(&mut model.params, rng, &format!("{prefix}/lstm"), h, h)?;
        }
        declare_head(&mut model.params, rng, &prefix, h, &c.head_mlp_dims, out)?;
    }
    Ok(())
}

pub(super) fn forward(model: &Model, g: &mut Graph, p: &BoundParams, batch: &Batch, rng: Option<&mut Rng>) -> Result<Forward> {
    let (b, l) = (batch.size, batch.width);
    let e = model.config.embed_dim;
    let h = model.config.hidden_size;
    let a = layers::embedding(g, p, "embed/activity", &batch.activities)?;
    let r = layers::embedding(g, p, "embed/role", &batch.roles)?;
    let times = g.constant(batch.times.clone());
    let t = g.reshape(times, &[b * l, 3])?;
    let x = g.concat(&[a, r, t], 1)?;
    let x = g.reshape(x, &[b, l, 2 * e + 3])?;
    let seq = layers::lstm_layer(g, p, "backbone/lstm", x)?.sequence;

    let flat = g.reshape(seq, &[b * l, h])?;
    let (gamma, beta) = (p.get(&format!("{BN}/gamma"))?, p.get(&format!("{BN}/beta"))?);
    let training = rng.is_some();
    let running = &model.running[BN];
    let mode = if training {
        BatchNormMode::Train
    } else {
        BatchNormMode::Eval {
            mean: &running.mean,
            var: &running.var,
        }
    };
    let (normed, stats) = g.batch_norm(flat, gamma, beta, BN_EPS, mode)?;
    let normed = g.dropout(normed, model.config.dropout, rng);
    let backbone = g.reshape(normed, &[b, l, h])?;

    let full = model.config.model_type == ModelType::Lstm;
    let last = g.narrow(backbone, 1, l - 1, 1)?;
    let last = g.reshape(last, &[b, h])?;
    let depth = model.config.head_mlp_dims.len();
    let [act, role, time] = head_outputs(model).map(|(name, _)| {
        let prefix = format!("head_{name}");
        let input = if full {
            layers::lstm_layer(g, p, &format!("{prefix}/lstm"), backbone)?.last
        } else {
            last
        };
        head(g, p, &prefix, input, depth, Graph::tanh)
    });
    Ok(Forward {
        activity_logits: act?,
        role_logits: role?,
        times: time?,
        bn_stats: stats.map(|s| vec![(BN.to_string(), s)]).unwrap_or_default(),
    })
}
