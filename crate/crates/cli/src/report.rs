//! Report envelope and its text and JSON renderings.

use std::fmt::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub model: String,
    pub model_sha256: String,
    pub result: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: &'static str, model: &Path, sha256: &str, result: Value) -> Self {
        Self {
            tool: "respgames",
            version: env!("CARGO_PKG_VERSION"),
            command,
            model: model.display().to_string(),
            model_sha256: sha256.to_string(),
            result,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serialises");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut out = String::new();
                let _ = writeln!(out, "{} {} {}", self.tool, self.version, self.command);
                let _ = writeln!(out, "model: {} (sha256 {})", self.model, self.model_sha256);
                text(&mut out, &self.result, 0);
                out
            }
        }
    }
}

/// Indented key/value view; numbers are printed exactly as in the JSON.
fn text(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                if is_leaf(x) {
                    let _ = writeln!(out, "{pad}{k}: {}", leaf(x));
                } else {
                    let _ = writeln!(out, "{pad}{k}:");
                    text(out, x, depth + 1);
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                if is_leaf(x) {
                    let _ = writeln!(out, "{pad}- {}", leaf(x));
                } else {
                    let _ = writeln!(out, "{pad}-");
                    text(out, x, depth + 1);
                }
            }
        }
        x => {
            let _ = writeln!(out, "{pad}{}", leaf(x));
        }
    }
}

fn is_leaf(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !x.is_array() && !x.is_object()),
        Value::Object(_) => false,
        _ => true,
    }
}

fn leaf(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => format!("[{}]", items.iter().map(leaf).collect::<Vec<_>>().join(", ")),
        x => x.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_numbers_match_json() {
        let r = Report::new(
            "resp",
            Path::new("m.csg"),
            "00",
            json!({ "upsilon": 0.88, "degrees": { "A1": 0.64 } }),
        );
        let t = r.render(Format::Text);
        assert!(t.contains("upsilon: 0.88"));
        assert!(t.contains("  A1: 0.64"));
        assert!(r.render(Format::Json).contains("\"upsilon\": 0.88"));
    }

    #[test]
    fn digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
