//! Sharded datasets: record files plus a JSON manifest that is written last.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::record::{read_sample, SyntheticSample};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;
/// Upper bound on records per shard file.
pub const MAX_SHARD_RECORDS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRef {
    pub id: u64,
    pub file: String,
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub count: u64,
    pub master_seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Processing steps applied after generation, oldest first.
    pub provenance: Vec<serde_json::Value>,
    pub files: Vec<FileDigest>,
    pub records: Vec<RecordRef>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_hash(s: &str) -> Result<[u8; 16]> {
    if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::validation("config_hash", "expected 32 hex digits"));
    }
    let mut out = [0u8; 16];
    for (i, b) in out.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::validation("config_hash", "expected 32 hex digits"))?;
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn is_plain_file_name(name: &str) -> bool {
    !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\']) && name != MANIFEST_FILE
}

impl Manifest {
    /// Structural checks: counts, unique ids, known files, offsets strictly
    /// increasing within each file.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA {
            return Err(Error::Version {
                expected: MANIFEST_SCHEMA,
                found: self.schema_version,
            });
        }
        parse_hash(&self.config_hash)?;
        if self.count != self.records.len() as u64 {
            return Err(Error::validation(
                "count",
                format!("{} declared, {} records", self.count, self.records.len()),
            ));
        }
        let files: BTreeSet<&str> = self.files.iter().map(|f| f.file.as_str()).collect();
        if files.len() != self.files.len() || !files.iter().all(|f| is_plain_file_name(f)) {
            return Err(Error::validation("files", "duplicate or invalid file name"));
        }
        let mut ids = BTreeSet::new();
        let mut last: Option<(&str, u64)> = None;
        for r in &self.records {
            if !ids.insert(r.id) {
                return Err(Error::validation("records", format!("duplicate id {}", r.id)));
            }
            if !files.contains(r.file.as_str()) {
                return Err(Error::validation("records", format!("unknown file {}", r.file)));
            }
            if r.len == 0 || r.offset.checked_add(r.len).is_none() {
                return Err(Error::validation("records", format!("bad extent for id {}", r.id)));
            }
            if let Some((f, end)) = last {
                if f == r.file && r.offset < end {
                    return Err(Error::validation("records", format!("offsets not increasing at id {}", r.id)));
                }
            }
            last = Some((&r.file, r.offset + r.len));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn hash_bytes(&self) -> [u8; 16] {
        parse_hash(&self.config_hash).expect("validated manifest")
    }
}

/// Streams records into shard files; `finish` writes the manifest.
pub struct DatasetWriter {
    dir: PathBuf,
    shard_size: usize,
    config_hash: [u8; 16],
    current: Vec<u8>,
    current_count: usize,
    records: Vec<RecordRef>,
    files: Vec<FileDigest>,
}

pub fn shard_name(index: usize) -> String {
    format!("shard-{index:05}.lhs")
}

impl DatasetWriter {
    pub fn create(dir: impl AsRef<Path>, config_hash: [u8; 16], shard_size: usize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if !(1..=MAX_SHARD_RECORDS).contains(&shard_size) {
            return Err(Error::Input(format!("shard size must be in 1..={MAX_SHARD_RECORDS}")));
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
        }
        Ok(Self {
            dir,
            shard_size,
            config_hash,
            current: Vec::new(),
            current_count: 0,
            records: Vec::new(),
            files: Vec::new(),
        })
    }

    pub fn push(&mut self, id: u64, sample: &SyntheticSample) -> Result<()> {
        if sample.meta.config_hash != self.config_hash {
            return Err(Error::HashMismatch {
                expected: crate::error::HexHash(self.config_hash),
                found: crate::error::HexHash(sample.meta.config_hash),
            });
        }
        self.push_encoded(id, &sample.to_bytes()?)
    }

    /// Appends an already-encoded record verbatim.
    pub fn push_encoded(&mut self, id: u64, bytes: &[u8]) -> Result<()> {
        if self.records.last().is_some_and(|r| r.id >= id) {
            return Err(Error::Input(format!("record ids must increase; got {id}")));
        }
        self.records.push(RecordRef {
            id,
            file: shard_name(self.files.len()),
            offset: self.current.len() as u64,
            len: bytes.len() as u64,
        });
        self.current.extend_from_slice(bytes);
        self.current_count += 1;
        if self.current_count == self.shard_size {
            self.flush_shard()?;
        }
        Ok(())
    }

    fn flush_shard(&mut self) -> Result<()> {
        if self.current_count == 0 {
            return Ok(());
        }
        let name = shard_name(self.files.len());
        let path = self.dir.join(&name);
        fs::write(&path, &self.current).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileDigest {
            file: name,
            sha256: sha256_hex(&self.current),
        });
        self.current.clear();
        self.current_count = 0;
        Ok(())
    }

    pub fn finish(
        mut self,
        master_seed: u64,
        config: serde_json::Value,
        provenance: Vec<serde_json::Value>,
    ) -> Result<Manifest> {
        self.flush_shard()?;
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA,
            count: self.records.len() as u64,
            master_seed,
            config_hash: hex(&self.config_hash),
            config,
            provenance,
            files: self.files,
            records: self.records,
        };
        manifest.validate()?;
        let path = self.dir.join(MANIFEST_FILE);
        let tmp = self.dir.join(".manifest.json.tmp");
        fs::write(&tmp, manifest.to_json()?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Read access to a dataset directory. Shards are loaded lazily per call.
pub struct Dataset {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            dir,
            manifest: Manifest::from_json(&text)?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.manifest.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.records.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.manifest.records.iter().map(|r| r.id).collect()
    }

    /// Checks every shard against its recorded digest.
    pub fn verify_files(&self) -> Result<()> {
        for f in &self.manifest.files {
            let bytes = self.read_file(&f.file)?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(Error::validation("files", format!("digest mismatch for {}", f.file)));
            }
        }
        Ok(())
    }

    fn read_file(&self, name: &str) -> Result<Vec<u8>> {
        let path = self.dir.join(name);
        fs::read(&path).map_err(|e| Error::io(&path, e))
    }

    /// Raw encoded bytes of every record, in manifest order.
    pub fn raw_records(&self) -> Result<Vec<(u64, Vec<u8>)>> {
        let mut out = Vec::with_capacity(self.len());
        let mut cache: Option<(String, Vec<u8>)> = None;
        for r in &self.manifest.records {
            if cache.as_ref().is_none_or(|(name, _)| *name != r.file) {
                cache = Some((r.file.clone(), self.read_file(&r.file)?));
            }
            let bytes = &cache.as_ref().unwrap().1;
            let (start, end) = (r.offset as usize, (r.offset + r.len) as usize);
            if end > bytes.len() {
                return Err(Error::Truncated {
                    offset: start,
                    needed: r.len as usize,
                    available: bytes.len().saturating_sub(start),
                });
            }
            out.push((r.id, bytes[start..end].to_vec()));
        }
        Ok(out)
    }

    /// All samples, each checked against the manifest's config hash.
    pub fn samples(&self) -> Result<Vec<(u64, SyntheticSample)>> {
        let hash = self.manifest.hash_bytes();
        self.raw_records()?
            .into_iter()
            .map(|(id, bytes)| {
                let (s, used) = read_sample(&bytes, Some(&hash))?;
                if used != bytes.len() {
                    return Err(Error::format("record", format!("length mismatch for id {id}")));
                }
                Ok((id, s))
            })
            .collect()
    }
}
