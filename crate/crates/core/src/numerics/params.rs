use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// Magic string identifying the parameter file format.
pub const PARAMS_FORMAT: &str = "FREQHAR-PARAMS-v1";

/// Named trainable tensors, iterated in lexicographic name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StoredParams {
    format: String,
    params: BTreeMap<String, StoredTensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a tensor; names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let stored = StoredParams {
            format: PARAMS_FORMAT.to_string(),
            params: self
                .tensors
                .iter()
                .map(|(k, t)| {
                    (
                        k.clone(),
                        StoredTensor {
                            shape: t.shape().to_vec(),
                            values: t.values().to_vec(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_value(stored).expect("params serialize")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let stored: StoredParams = serde_json::from_value(value)?;
        if stored.format != PARAMS_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported parameter format {:?}, expected {PARAMS_FORMAT}",
                stored.format
            )));
        }
        let mut set = ParamSet::new();
        for (name, t) in stored.params {
            let tensor = Tensor::new(t.shape, t.values)
                .map_err(|e| Error::Checkpoint(format!("parameter {name}: {e}")))?;
            if !tensor.all_finite() {
                return Err(Error::Checkpoint(format!("parameter {name} is not finite")));
            }
            set.insert(name, tensor)?;
        }
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("params serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_value(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
