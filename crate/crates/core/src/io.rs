//! The JSON model file format.
//!
//! ```json
//! { "universe": 3, "relations": { "<": [[0, 1], [1, 2], [0, 2]] },
//!   "labels": { "bottom": 0 }, "sets": { "B": [1] } }
//! ```
//!
//! `labels` and `sets` are optional. A relation's arity is the length of its
//! tuples; an empty relation is read as binary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Element, FiniteStructure};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub universe: usize,
    pub relations: BTreeMap<String, Vec<Vec<Element>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, Element>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sets: BTreeMap<String, Vec<Element>>,
}

impl ModelFile {
    pub fn from_structure(s: &FiniteStructure, sets: BTreeMap<String, Vec<Element>>) -> Self {
        ModelFile {
            universe: s.universe_size(),
            relations: s
                .relations()
                .map(|(name, r)| (name.to_string(), r.tuples().map(<[Element]>::to_vec).collect()))
                .collect(),
            labels: s.labels().clone(),
            sets,
        }
    }

    pub fn to_structure(&self) -> Result<FiniteStructure> {
        let mut s = FiniteStructure::new(self.universe);
        for (name, tuples) in &self.relations {
            let arity = tuples.first().map_or(2, Vec::len);
            s.add_relation(name, arity, tuples.iter().cloned())?;
        }
        s.set_labels(self.labels.clone())?;
        for (name, set) in &self.sets {
            if let Some(&e) = set.iter().find(|&&e| e >= self.universe) {
                return Err(Error::ElementOutOfRange {
                    element: e,
                    size: self.universe,
                });
            }
            if name.is_empty() {
                return Err(Error::InvalidStructure("empty set name".into()));
            }
        }
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Pretty JSON with a trailing newline; byte-identical for equal files.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("model files serialize");
        out.push('\n');
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
