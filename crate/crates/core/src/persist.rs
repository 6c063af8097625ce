//! Versioned text checkpoints: one JSON document per file, parameters named
//! and shaped explicitly, reals carrying 17 significant digits so a load
//! reproduces every bit. Checkpoints are self-describing; loading needs no
//! outside configuration.

use std::fs;
use std::path::Path;

use crate::bptt::BpttMode;
use crate::error::{Error, Result};
use crate::jsonio;
use crate::model::{Model, ModelFamily};
use crate::trainer::{OptState, TrainConfig};

pub const CHECKPOINT_VERSION: &str = "colstsm-ckpt-v1";

fn tensor_map_json(model: &Model, indent: &str) -> String {
    let mut out = String::from("{\n");
    let tensors = model.named_tensors();
    for (i, (name, view)) in tensors.iter().enumerate() {
        let shape = view
            .shape()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "{indent}\"{name}\":{{\"shape\":[{shape}],\"values\":{}}}{}\n",
            jsonio::fmt_f64_slice(view.data()),
            if i + 1 < tensors.len() { "," } else { "" }
        ));
    }
    out.push('}');
    out
}

fn config_json(cfg: &TrainConfig) -> String {
    let clip = match cfg.clip_norm {
        Some(c) => jsonio::fmt_f64(c),
        None => "null".into(),
    };
    format!(
        "{{\"family\":\"{}\",\"hidden\":{},\"lr\":{},\"momentum\":{},\"decay\":{},\"epochs\":{},\"batch_size\":{},\"bptt\":\"{}\",\"clip\":{},\"seed\":{}}}",
        cfg.family.tag(),
        cfg.hidden,
        jsonio::fmt_f64(cfg.learning_rate),
        jsonio::fmt_f64(cfg.momentum),
        jsonio::fmt_f64(cfg.decay),
        cfg.epochs,
        cfg.batch_size,
        cfg.bptt_mode.tag(),
        clip,
        cfg.seed
    )
}

/// Writes the model (and optionally its momentum buffers) with the training
/// configuration that produced it.
pub fn save_checkpoint(
    model: &Model,
    opt: Option<&OptState>,
    cfg: &TrainConfig,
    path: &Path,
) -> Result<()> {
    for (name, view) in model.named_tensors() {
        if view.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint {
                path: path.display().to_string(),
                message: format!("tensor {name} contains non-finite values"),
            });
        }
    }
    let mut out = String::from("{\n");
    out.push_str(&format!("\"version\":\"{CHECKPOINT_VERSION}\",\n"));
    out.push_str(&format!("\"family\":\"{}\",\n", model.family().tag()));
    out.push_str(&format!(
        "\"dims\":{{\"input\":{},\"hidden\":{},\"classes\":{}}},\n",
        model.input_dim(),
        model.hidden_dim(),
        model.classes()
    ));
    out.push_str(&format!("\"params\":{},\n", tensor_map_json(model, "  ")));
    match opt {
        Some(state) => out.push_str(&format!(
            "\"opt\":{{\"momentum\":{},\"velocity\":{}}},\n",
            jsonio::fmt_f64(state.momentum),
            tensor_map_json(&state.velocity, "  ")
        )),
        None => out.push_str("\"opt\":null,\n"),
    }
    out.push_str(&format!("\"config\":{}\n}}\n", config_json(cfg)));

    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, out.as_bytes())?;
    Ok(())
}

fn fill_model_from_map(
    model: &mut Model,
    map: &serde_json::Map<String, serde_json::Value>,
    ckpt_err: &impl Fn(String) -> Error,
) -> Result<()> {
    let mut consumed = 0usize;
    for (name, mut view) in model.named_tensors_mut() {
        let entry = map
            .get(name.as_str())
            .ok_or_else(|| ckpt_err(format!("missing tensor \"{name}\"")))?;
        let shape_vals = jsonio::get_array(entry, "shape").map_err(|m| ckpt_err(format!("tensor \"{name}\": {m}")))?;
        let shape: Vec<usize> = shape_vals
            .iter()
            .map(|v| v.as_u64().map(|x| x as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| ckpt_err(format!("tensor \"{name}\": bad shape")))?;
        let expected = match &view {
            crate::model::TensorViewMut::Mat(m) => vec![m.rows(), m.cols()],
            crate::model::TensorViewMut::Vec(v) => vec![v.len()],
        };
        if shape != expected {
            return Err(ckpt_err(format!(
                "tensor \"{name}\" has shape {shape:?}, expected {expected:?}"
            )));
        }
        let values = jsonio::get_array(entry, "values").map_err(|m| ckpt_err(format!("tensor \"{name}\": {m}")))?;
        let data = view.data_mut();
        if values.len() != data.len() {
            return Err(ckpt_err(format!(
                "tensor \"{name}\" carries {} values, expected {}",
                values.len(),
                data.len()
            )));
        }
        for (slot, v) in data.iter_mut().zip(values) {
            *slot = v
                .as_f64()
                .ok_or_else(|| ckpt_err(format!("tensor \"{name}\": non-numeric value")))?;
        }
        consumed += 1;
    }
    if consumed != map.len() {
        let known: Vec<String> = model.named_tensors().iter().map(|(n, _)| n.clone()).collect();
        let extra: Vec<&String> = map.keys().filter(|k| !known.contains(k)).collect();
        return Err(ckpt_err(format!("unexpected tensors {extra:?}")));
    }
    Ok(())
}

fn parse_config(doc: &serde_json::Value, ckpt_err: &impl Fn(String) -> Error) -> Result<TrainConfig> {
    let wrap = |m: String| ckpt_err(format!("config: {m}"));
    let family_tag = jsonio::get_str(doc, "family").map_err(wrap)?;
    let family = ModelFamily::parse(family_tag)
        .ok_or_else(|| ckpt_err(format!("config: unknown family \"{family_tag}\"")))?;
    let bptt_tag = jsonio::get_str(doc, "bptt").map_err(wrap)?;
    let bptt_mode = BpttMode::parse(bptt_tag)
        .ok_or_else(|| ckpt_err(format!("config: unknown bptt mode \"{bptt_tag}\"")))?;
    let clip_norm = match doc.get("clip") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(
            v.as_f64()
                .ok_or_else(|| ckpt_err("config: clip is not a number".into()))?,
        ),
    };
    Ok(TrainConfig {
        family,
        hidden: jsonio::get_usize(doc, "hidden").map_err(wrap)?,
        learning_rate: jsonio::get_f64(doc, "lr").map_err(wrap)?,
        momentum: jsonio::get_f64(doc, "momentum").map_err(wrap)?,
        decay: jsonio::get_f64(doc, "decay").map_err(wrap)?,
        epochs: jsonio::get_usize(doc, "epochs").map_err(wrap)?,
        batch_size: jsonio::get_usize(doc, "batch_size").map_err(wrap)?,
        bptt_mode,
        clip_norm,
        seed: jsonio::get_u64(doc, "seed").map_err(wrap)?,
    })
}

/// Reconstructs (model, optimizer state, training config) from a checkpoint
/// file, validating version, tensor presence, and shapes.
pub fn load_checkpoint(path: &Path) -> Result<(Model, Option<OptState>, TrainConfig)> {
    let display = path.display().to_string();
    let ckpt_err = move |message: String| Error::Checkpoint {
        path: display.clone(),
        message,
    };

    let text = fs::read_to_string(path).map_err(|e| ckpt_err(format!("cannot read: {e}")))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ckpt_err(format!("malformed document: {e}")))?;

    let version = jsonio::get_str(&doc, "version").map_err(&ckpt_err)?;
    if version != CHECKPOINT_VERSION {
        return Err(ckpt_err(format!(
            "unsupported version \"{version}\", expected \"{CHECKPOINT_VERSION}\""
        )));
    }
    let family_tag = jsonio::get_str(&doc, "family").map_err(&ckpt_err)?;
    let family = ModelFamily::parse(family_tag)
        .ok_or_else(|| ckpt_err(format!("unknown family \"{family_tag}\"")))?;
    let dims = jsonio::get(&doc, "dims").map_err(&ckpt_err)?;
    let input = jsonio::get_usize(dims, "input").map_err(&ckpt_err)?;
    let hidden = jsonio::get_usize(dims, "hidden").map_err(&ckpt_err)?;
    let classes = jsonio::get_usize(dims, "classes").map_err(&ckpt_err)?;
    if input == 0 || classes == 0 || (hidden == 0 && family != ModelFamily::Pooled) {
        return Err(ckpt_err(format!(
            "dims input={input} hidden={hidden} classes={classes} are not usable for {family}"
        )));
    }

    let mut model = Model::zeros(family, input, hidden, classes);
    let params = jsonio::get_object(&doc, "params").map_err(&ckpt_err)?;
    fill_model_from_map(&mut model, params, &ckpt_err)?;

    let opt = match doc.get("opt") {
        None | Some(serde_json::Value::Null) => None,
        Some(opt_doc) => {
            let momentum = jsonio::get_f64(opt_doc, "momentum").map_err(&ckpt_err)?;
            let mut velocity = model.zeros_like();
            let vel_map = jsonio::get_object(opt_doc, "velocity").map_err(&ckpt_err)?;
            fill_model_from_map(&mut velocity, vel_map, &ckpt_err)?;
            Some(OptState { momentum, velocity })
        }
    };

    let cfg = parse_config(jsonio::get(&doc, "config").map_err(&ckpt_err)?, &ckpt_err)?;
    Ok((model, opt, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Prng;

    fn sample_state() -> (Model, OptState, TrainConfig) {
        let mut prng = Prng::new(21);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 4, &mut prng);
        let mut opt = OptState::new(&model, 0.9);
        for (_, mut t) in opt.velocity.named_tensors_mut() {
            for v in t.data_mut() {
                *v = prng.gaussian() * 1e-3;
            }
        }
        let cfg = TrainConfig {
            epochs: 7,
            seed: 21,
            ..TrainConfig::default()
        };
        (model, opt, cfg)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, opt, cfg) = sample_state();
        save_checkpoint(&model, Some(&opt), &cfg, &path).unwrap();
        let (back, back_opt, back_cfg) = load_checkpoint(&path).unwrap();

        assert_eq!(back_cfg, cfg);
        let back_opt = back_opt.expect("velocity stored");
        assert_eq!(back_opt.momentum, opt.momentum);
        for ((_, a), (_, b)) in model.named_tensors().iter().zip(back.named_tensors().iter()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        for ((_, a), (_, b)) in opt
            .velocity
            .named_tensors()
            .iter()
            .zip(back_opt.velocity.named_tensors().iter())
        {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn forward_outputs_survive_the_round_trip() {
        use crate::cells::SequencePair;
        use crate::numkernel::DenseVector;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, _, cfg) = sample_state();
        save_checkpoint(&model, None, &cfg, &path).unwrap();
        let (back, opt, _) = load_checkpoint(&path).unwrap();
        assert!(opt.is_none());

        let mut prng = Prng::new(8);
        let mk = |prng: &mut Prng| {
            (0..5)
                .map(|_| DenseVector::from_vec((0..2).map(|_| prng.gaussian()).collect()))
                .collect::<Vec<_>>()
        };
        let pair = SequencePair::new(mk(&mut prng), mk(&mut prng), 1).unwrap();
        let before = model.forward_sequence(&pair).unwrap().last_step_probs();
        let after = back.forward_sequence(&pair).unwrap().last_step_probs();
        for (x, y) in before.iter().zip(after.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn tampered_version_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, _, cfg) = sample_state();
        save_checkpoint(&model, None, &cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace(CHECKPOINT_VERSION, "colstsm-ckpt-v9")).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("colstsm-ckpt-v9"), "{err}");
    }

    #[test]
    fn missing_tensor_is_reported_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, _, cfg) = sample_state();
        save_checkpoint(&model, None, &cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let patched = text.replacen("\"W_pi_h\":", "\"W_pi_hidden\":", 1);
        assert_ne!(patched, text);
        std::fs::write(&path, patched).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing tensor \"W_pi_h\""), "{msg}");
    }

    #[test]
    fn wrong_shape_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, _, cfg) = sample_state();
        save_checkpoint(&model, None, &cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // W_pi_h is 3x3; claim 2x3 instead
        let patched = text.replacen("\"W_pi_h\":{\"shape\":[3,3]", "\"W_pi_h\":{\"shape\":[2,3]", 1);
        assert_ne!(patched, text);
        std::fs::write(&path, patched).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("W_pi_h") && msg.contains("shape"), "{msg}");
    }

    #[test]
    fn unknown_extra_tensor_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let (model, _, cfg) = sample_state();
        save_checkpoint(&model, None, &cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let patched = text.replacen(
            "\"W_pi_h\":",
            "\"W_mystery\":{\"shape\":[1],\"values\":[0e0]},\n  \"W_pi_h\":",
            1,
        );
        std::fs::write(&path, patched).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("W_mystery"), "{err}");
    }
}
