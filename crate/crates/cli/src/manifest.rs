//! Run manifests: the effective configuration of one invocation, hashed so
//! that every output can be traced back to it.

use std::collections::BTreeMap;

use gevlab_core::GeometryDescriptor;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "gevlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub geometry: String,
    pub a: f64,
    pub b: f64,
    pub cutoff: Option<f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, g: &GeometryDescriptor, cutoff: Option<f64>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            geometry: g.kind.name().to_string(),
            a: g.a,
            b: g.b,
            cutoff,
            tolerances: BTreeMap::new(),
            parameters: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    pub fn param(mut self, name: &str, value: impl Serialize) -> Self {
        self.parameters.insert(name.to_string(), json!(value));
        self
    }

    pub fn output(mut self, name: &str, path: Option<&std::path::Path>) -> Self {
        if let Some(p) = path {
            self.outputs.insert(name.to_string(), p.display().to_string());
        }
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest is plain data")
    }

    pub fn hash(&self) -> String {
        content_hash(&self.to_value())
    }

    /// First line of every CSV output.
    pub fn header(&self) -> String {
        format!("# {TOOL} {VERSION} manifest={}", self.hash())
    }
}

/// SHA-256 of the canonical JSON text. `serde_json` maps keep keys sorted, so
/// the text and the hash do not depend on insertion order.
pub fn content_hash(v: &Value) -> String {
    let canonical = serde_json::to_string(&canonicalize(v)).expect("json value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn canonicalize(v: &Value) -> Value {
    match v {
        Value::Object(map) => {
            let sorted: BTreeMap<&String, Value> = map.iter().map(|(k, x)| (k, canonicalize(x))).collect();
            json!(sorted)
        }
        Value::Array(items) => Value::Array(items.iter().map(canonicalize).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"x":1,"y":{"p":2.5,"q":[1,2]}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y":{"q":[1,2],"p":2.5},"x":1}"#).unwrap();
        assert_eq!(content_hash(&a), content_hash(&b));
    }

    #[test]
    fn hash_sees_values() {
        let g = GeometryDescriptor::torus2();
        let m1 = RunManifest::new("spectrum", &g, Some(10.0));
        let m2 = RunManifest::new("spectrum", &g, Some(11.0));
        assert_ne!(m1.hash(), m2.hash());
        assert_eq!(m1.hash(), m1.clone().hash());
        assert!(m1.header().starts_with("# gevlab "));
    }

    #[test]
    fn parameter_insertion_order_is_irrelevant() {
        let g = GeometryDescriptor::sphere();
        let m1 = RunManifest::new("verify", &g, Some(6.0)).param("alpha", 0.5).tolerance("tol", 1e-10);
        let m2 = RunManifest::new("verify", &g, Some(6.0)).tolerance("tol", 1e-10).param("alpha", 0.5);
        assert_eq!(m1.hash(), m2.hash());
    }
}
