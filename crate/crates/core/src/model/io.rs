//! Model files.
//!
//! ```text
//! {version, config, params: [{name, shape, data}]}
//! ```
//!
//! Values are row-major and written with round-trip float formatting, so a
//! reloaded model reproduces its outputs bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::error::{Error, Result};
use crate::graph_data::serde_field;
use crate::tensor::{ParamSet, Tensor};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    config: ModelConfig,
    params: Vec<ParamRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

pub fn model_to_json(model: &Model) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        config: model.config.clone(),
        params: model
            .params
            .iter()
            .map(|(name, t)| ParamRecord {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&file).expect("model serialises");
    s.push('\n');
    s
}

pub fn parse_model(text: &str) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::Load(format!("field `{}`: {e}", serde_field(&e))))?;
    if file.version != MODEL_VERSION {
        return Err(Error::Load(format!(
            "field `version`: unsupported version {}",
            file.version
        )));
    }
    file.config
        .validate()
        .map_err(|e| Error::Load(format!("config: {e}")))?;
    // a freshly built model fixes the expected names, order and shapes
    let template = Model::new(file.config.clone())?;
    if template.params.len() != file.params.len() {
        return Err(Error::Load(format!(
            "field `params`: expected {} tensors, found {}",
            template.params.len(),
            file.params.len()
        )));
    }
    let mut params = ParamSet::new();
    for (k, ((name, expected), record)) in template.params.iter().zip(file.params).enumerate() {
        if record.name != name {
            return Err(Error::Load(format!(
                "field `params[{k}].name`: expected `{name}`, found `{}`",
                record.name
            )));
        }
        if record.shape != expected.shape() {
            return Err(Error::Load(format!(
                "field `params[{k}].shape`: `{name}` should be {:?}, found {:?}",
                expected.shape(),
                record.shape
            )));
        }
        let tensor = Tensor::new(record.shape, record.data)
            .map_err(|e| Error::Load(format!("field `params[{k}].data`: {e}")))?;
        params.insert(name, tensor)?;
    }
    Ok(Model {
        config: file.config,
        params,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::generate_synthetic;
    use crate::model::{ModelKind, ModelConfig};

    fn model(kind: ModelKind) -> Model {
        let d = generate_synthetic(4, 5, 0).unwrap();
        Model::new(ModelConfig {
            seed: 11,
            ..ModelConfig::for_dataset(&d, kind)
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let d = generate_synthetic(4, 5, 0).unwrap();
        for kind in [ModelKind::FactorGcn, ModelKind::Mlp, ModelKind::Gcn] {
            let m = model(kind);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_model(&m, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back, m);
            let a = m.predict(&d.samples[0].graph).unwrap();
            let b = back.predict(&d.samples[0].graph).unwrap();
            assert_eq!(a, b);
        }
    }

    fn load_error(text: &str) -> String {
        match parse_model(text) {
            Err(Error::Load(msg)) => msg,
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_fields_are_described() {
        let json = model_to_json(&model(ModelKind::FactorGcn));
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["version"] = 7.into();
        assert!(load_error(&v.to_string()).contains("version"));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["params"][0]["shape"] = serde_json::json!([3, 3]);
        assert!(load_error(&v.to_string()).contains("params[0].shape"));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["params"][2]["data"].as_array_mut().unwrap().pop();
        assert!(load_error(&v.to_string()).contains("params[2].data"));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["config"].as_object_mut().unwrap().remove("hidden");
        assert!(load_error(&v.to_string()).contains("hidden"));

        assert!(load_error(&json[..json.len() / 2]).contains("field"));
    }
}
