//! JSONL reading and writing, plus the dataset registry.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schema::DatasetDescriptor;

/// Parses one JSON value per non-blank line.
pub fn from_jsonl_str<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| Error::Json { line: i + 1, source }))
        .collect()
}

pub fn to_jsonl_string<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        // Serializing plain data structs cannot fail.
        out.push_str(&serde_json::to_string(row).expect("serializable row"));
        out.push('\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_jsonl_str(&text)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_string(path, &to_jsonl_string(rows))
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Dataset registry keyed by descriptor id, iterated in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    rows: Vec<DatasetDescriptor>,
    index: BTreeMap<String, usize>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_descriptors(rows: impl IntoIterator<Item = DatasetDescriptor>) -> Result<Self> {
        let mut reg = Registry::new();
        for d in rows {
            reg.insert(d)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, desc: DatasetDescriptor) -> Result<()> {
        if self.index.contains_key(&desc.id) {
            return Err(Error::DuplicateDataset(desc.id));
        }
        self.index.insert(desc.id.clone(), self.rows.len());
        self.rows.push(desc);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&DatasetDescriptor> {
        self.index.get(id).map(|&i| &self.rows[i])
    }

    pub fn require(&self, id: &str) -> Result<&DatasetDescriptor> {
        self.get(id).ok_or_else(|| Error::UnknownDataset(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &DatasetDescriptor> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        Self::from_descriptors(from_jsonl_str::<DatasetDescriptor>(text)?)
    }

    pub fn to_jsonl_string(&self) -> String {
        to_jsonl_string(&self.rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_descriptors(read_jsonl::<DatasetDescriptor>(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_jsonl_string())
    }
}
