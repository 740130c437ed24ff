use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evm::{functions_of, FunctionBody};
use crate::primitives::{hex_bytes, Selector};

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One compiled template contract, one JSON object per line:
/// `{name, compilerVersion, runtimeBytecodeHex, functionSelectors}` plus optional
/// `platform`, `source` and `optimizer`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateRecord {
    pub name: String,
    pub compiler_version: String,
    #[serde(with = "hex_bytes")]
    pub runtime_bytecode_hex: Vec<u8>,
    /// Canonical signature → selector.
    #[serde(default)]
    pub function_selectors: BTreeMap<String, Selector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default)]
    pub optimizer: bool,
}

impl TemplateRecord {
    /// Recovered body of one of this template's functions.
    pub fn function_body(&self, selector: Selector) -> Option<FunctionBody> {
        functions_of(&self.runtime_bytecode_hex).function(selector).cloned()
    }

    /// Selectors whose function name (the part before `(`) is one of `names`.
    pub fn selectors_named(&self, names: &[&str]) -> Vec<Selector> {
        self.function_selectors
            .iter()
            .filter(|(signature, _)| {
                let name = signature.split('(').next().unwrap_or_default();
                names.contains(&name)
            })
            .map(|(_, selector)| *selector)
            .collect()
    }
}

pub fn parse_templates(text: &str) -> Result<Vec<TemplateRecord>, TemplateError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty() && !line.trim_start().starts_with('#'))
        .map(|(index, line)| {
            serde_json::from_str(line).map_err(|e| TemplateError::Parse {
                line: index + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Loads a template file, or every `*.jsonl` file in a directory (sorted by name).
pub fn load_templates(path: &Path) -> Result<Vec<TemplateRecord>, TemplateError> {
    let io = |source| TemplateError::Io {
        path: path.display().to_string(),
        source,
    };
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(Result::ok)
            .map(|entry| entry.path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for file in files {
            out.extend(load_templates(&file)?);
        }
        Ok(out)
    } else {
        parse_templates(&std::fs::read_to_string(path).map_err(io)?)
    }
}
