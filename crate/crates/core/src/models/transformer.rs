//! MTLFormer (full and light) and Transformer_simple.

use ppm_nn::layers;
use ppm_nn::{BoundParams, Graph, Rng, Var};

use super::{add_positions, declare_head, head, head_outputs, Batch, Forward, Model, ModelType, Result};

/// Streams of the MTLFormer backbone, in declaration order.
const STREAMS: [&str; 5] = ["act1", "act2", "role1", "role2", "time"];

pub(super) fn declare(model: &mut Model, rng: &mut Rng) -> Result<()> {
    let c = model.config.clone();
    let e = c.embed_dim;
    let store = &mut model.params;
    match c.model_type {
        ModelType::Mtlformer | ModelType::MtlformerLight => {
            for stream in STREAMS {
                match stream {
                    "time" => layers::declare_linear(store, rng, "time/proj", 3, e)?,
                    s if s.starts_with("act") => layers::declare_embedding(store, rng, &format!("{s}/embed"), model.activity_classes, e)?,
                    s => layers::declare_embedding(store, rng, &format!("{s}/embed"), model.role_classes, e)?,
                }
                for l in 0..c.encoder_layers {
                    layers::declare_encoder_layer(store, rng, &format!("{stream}/encoder{l}"), e, c.ff_dim)?;
                }
            }
            layers::declare_linear(store, rng, "fuse", 3 * e, e)?;
            for (name, out) in head_outputs(model) {
                declare_head(&mut model.params, rng, &format!("head_{name}"), 3 * e, &c.head_mlp_dims, out)?;
            }
        }
        ModelType::TransformerSimple => {
            let d = 2 * e;
            layers::declare_embedding(store, rng, "embed/activity", model.activity_classes, e)?;
            layers::declare_embedding(store, rng, "embed/role", model.role_classes, e)?;
            for l in 0..c.encoder_layers {
                layers::declare_encoder_layer(store, rng, &format!("encoder{l}"), d, c.ff_dim)?;
            }
            layers::declare_linear(store, rng, "time/proj", 3, d)?;
            layers::declare_linear(store, rng, "shared", 2 * d, d)?;
            for (name, out) in head_outputs(model) {
                declare_head(&mut model.params, rng, &format!("head_{name}"), d, &[], out)?;
            }
        }
        _ => unreachable!("not a Transformer model"),
    }
    Ok(())
}

/// Positions + encoder stack + mask-aware mean pooling: `[B, L, d] → [B, d]`.
fn encode(g: &mut Graph, p: &BoundParams, model: &Model, prefix: &str, x: Var, mask: &[bool], mut rng: Option<&mut Rng>) -> Result<Var> {
    let mut h = add_positions(g, x)?;
    for l in 0..model.config.encoder_layers {
        let name = format!("{prefix}encoder{l}");
        h = layers::encoder_layer(g, p, &name, h, model.config.heads, Some(mask), model.config.dropout, rng.as_deref_mut())?;
    }
    Ok(g.mean_pool(h, Some(mask))?)
}

fn embed(g: &mut Graph, p: &BoundParams, name: &str, indices: &[usize], b: usize, l: usize) -> Result<Var> {
    let flat = layers::embedding(g, p, name, indices)?;
    let d = g.shape(flat)[1];
    Ok(g.reshape(flat, &[b, l, d])?)
}

pub(super) fn forward(model: &Model, g: &mut Graph, p: &BoundParams, batch: &Batch, mut rng: Option<&mut Rng>) -> Result<Forward> {
    let (b, l) = (batch.size, batch.width);
    let times = g.constant(batch.times.clone());
    let rep = match model.config.model_type {
        ModelType::Mtlformer | ModelType::MtlformerLight => {
            let e = model.config.embed_dim;
            let mut pooled = Vec::with_capacity(STREAMS.len());
            for stream in STREAMS {
                let x = match stream {
                    "time" => {
                        let flat = g.reshape(times, &[b * l, 3])?;
                        let proj = layers::linear(g, p, "time/proj", flat)?;
                        g.reshape(proj, &[b, l, e])?
                    }
                    s if s.starts_with("act") => embed(g, p, &format!("{s}/embed"), &batch.activities, b, l)?,
                    s => embed(g, p, &format!("{s}/embed"), &batch.roles, b, l)?,
                };
                pooled.push(encode(g, p, model, &format!("{stream}/"), x, &batch.mask, rng.as_deref_mut())?);
            }
            let [act1, act2, role1, role2, time] = pooled[..] else {
                unreachable!("five streams")
            };
            let joined = g.concat(&[act1, role1, time], 1)?;
            let fused = layers::linear(g, p, "fuse", joined)?;
            g.concat(&[fused, act2, role2], 1)?
        }
        ModelType::TransformerSimple => {
            let a = embed(g, p, "embed/activity", &batch.activities, b, l)?;
            let r = embed(g, p, "embed/role", &batch.roles, b, l)?;
            let x = g.concat(&[a, r], 2)?;
            let pooled = encode(g, p, model, "", x, &batch.mask, rng)?;
            let last = g.narrow(times, 1, l - 1, 1)?;
            let last = g.reshape(last, &[b, 3])?;
            let t = layers::linear(g, p, "time/proj", last)?;
            let joined = g.concat(&[pooled, t], 1)?;
            let shared = layers::linear(g, p, "shared", joined)?;
            g.relu(shared)
        }
        _ => unreachable!("not a Transformer model"),
    };
    let depth = model.config.head_mlp_dims.len();
    let [a, r, t] = head_outputs(model).map(|(name, _)| head(g, p, &format!("head_{name}"), rep, depth, Graph::relu));
    Ok(Forward {
        activity_logits: a?,
        role_logits: r?,
        times: t?,
        bn_stats: Vec::new(),
    })
}
