//! Append-only response cache keyed by (backend identity, exact prompt
//! bytes, label alphabet).

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;

use super::LlmError;

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    value: BTreeMap<String, f64>,
    timestamp: String,
}

/// Line-delimited JSON cache. Reads are lock-free after load; appends are
/// serialized through one writer.
pub struct Cache {
    path: PathBuf,
    entries: Mutex<HashMap<String, BTreeMap<String, f64>>>,
    writer: Mutex<std::io::BufWriter<std::fs::File>>,
}

impl Cache {
    /// Open (or create) a cache file and load any existing records.
    pub fn open<P: AsRef<Path>>(path: P) -> Result<Cache, LlmError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(&path)?;
            for line in std::io::BufReader::new(file).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                // Tolerate truncated trailing records from interrupted runs.
                if let Ok(record) = serde_json::from_str::<CacheRecord>(&line) {
                    entries.insert(record.key, record.value);
                }
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        Ok(Cache {
            path,
            entries: Mutex::new(entries),
            writer: Mutex::new(std::io::BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(model: &str, prompt: &str, labels: &[String]) -> String {
        let joined = labels.join("\u{1f}");
        sha256_hex(&[model.as_bytes(), prompt.as_bytes(), joined.as_bytes()])
    }

    pub fn get(
        &self,
        model: &str,
        prompt: &str,
        labels: &[String],
    ) -> Option<BTreeMap<String, f64>> {
        let key = Self::key(model, prompt, labels);
        self.entries.lock().unwrap().get(&key).cloned()
    }

    pub fn put(
        &self,
        model: &str,
        prompt: &str,
        labels: &[String],
        value: &BTreeMap<String, f64>,
    ) -> Result<(), LlmError> {
        let key = Self::key(model, prompt, labels);
        let record = CacheRecord {
            key: key.clone(),
            value: value.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        {
            let mut writer = self.writer.lock().unwrap();
            serde_json::to_writer(&mut *writer, &record)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::Other, e))?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        self.entries.lock().unwrap().insert(key, value.clone());
        Ok(())
    }
}
