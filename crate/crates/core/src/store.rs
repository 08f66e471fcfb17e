//! File-backed workspace for matches, models and analysis bundles.
//!
//! Every entity file is a container: one canonical JSON header line
//! `{"kind":..,"version":1,"sha256":..,"length":..}` followed by exactly
//! `length` payload bytes whose SHA-256 is `sha256`. Writes go to a temp file
//! in the same directory and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inconsistency::MatchAnalysis;
use crate::predictor::{read_checkpoint, write_checkpoint, PredictorModel};
use crate::profiles::TeamProfile;
use crate::telemetry::{parse_match_log, serialize_match_log, MatchLog};

pub const CONTAINER_VERSION: u32 = 1;
pub const BUNDLE_SCHEMA_VERSION: u32 = 1;
/// Model name the CLI trains into and the service treats as current.
pub const DEFAULT_MODEL: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Match,
    Model,
    Bundle,
}

impl EntityKind {
    pub fn dir(self) -> &'static str {
        match self {
            EntityKind::Match => "matches",
            EntityKind::Model => "models",
            EntityKind::Bundle => "bundles",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            EntityKind::Match => "log",
            EntityKind::Model => "ckpt",
            EntityKind::Bundle => "json",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Match => "match",
            EntityKind::Model => "model",
            EntityKind::Bundle => "bundle",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("{kind} {id} is corrupt: {reason}")]
    CorruptEntity {
        kind: &'static str,
        id: String,
        reason: String,
    },
    #[error("bundle {id} was built by model {bundle_model}, current model is {current_model}")]
    VersionSkew {
        id: String,
        bundle_model: String,
        current_model: String,
    },
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound { .. } => "not_found",
            StoreError::CorruptEntity { .. } => "corrupt_entity",
            StoreError::VersionSkew { .. } => "version_skew",
            StoreError::InvalidId(_) => "invalid_id",
            StoreError::Io(_) => "io_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ContainerHeader {
    kind: EntityKind,
    version: u32,
    sha256: String,
    length: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Wraps `payload` in a container.
pub fn encode_container(kind: EntityKind, payload: &[u8]) -> Vec<u8> {
    let header = ContainerHeader {
        kind,
        version: CONTAINER_VERSION,
        sha256: sha256_hex(payload),
        length: payload.len(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.extend_from_slice(payload);
    out
}

/// Unwraps and verifies a container, returning the payload.
pub fn decode_container(kind: EntityKind, bytes: &[u8]) -> Result<&[u8], String> {
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or("missing header line")?;
    let line = &bytes[..newline];
    let header: ContainerHeader =
        serde_json::from_slice(line).map_err(|e| format!("bad header: {e}"))?;
    // Any byte change in the header must be caught too, so it has to be the
    // exact canonical encoding.
    if serde_json::to_vec(&header).map_err(|e| e.to_string())? != line {
        return Err("header is not canonical".into());
    }
    if header.kind != kind {
        return Err(format!("expected a {} container", kind.name()));
    }
    if header.version != CONTAINER_VERSION {
        return Err(format!("unsupported container version {}", header.version));
    }
    let payload = &bytes[newline + 1..];
    if payload.len() != header.length {
        return Err(format!(
            "length {} does not match header {}",
            payload.len(),
            header.length
        ));
    }
    if sha256_hex(payload) != header.sha256 {
        return Err("hash mismatch".into());
    }
    Ok(payload)
}

fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub schema_version: u32,
    pub match_id: String,
    pub model_version: String,
    pub analysis: MatchAnalysis,
    /// Team view snapshots for both sides at analysis time.
    pub team_profiles: Vec<TeamProfile>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    /// SHA-256 over the bundle with `created_at` and `content_hash` blanked.
    pub content_hash: String,
}

impl AnalysisBundle {
    pub fn new(
        model_version: &str,
        analysis: MatchAnalysis,
        team_profiles: Vec<TeamProfile>,
    ) -> Self {
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut bundle = Self {
            schema_version: BUNDLE_SCHEMA_VERSION,
            match_id: analysis.match_id.clone(),
            model_version: model_version.to_string(),
            analysis,
            team_profiles,
            created_at,
            content_hash: String::new(),
        };
        bundle.content_hash = bundle.compute_hash();
        bundle
    }

    pub fn compute_hash(&self) -> String {
        let mut blank = self.clone();
        blank.created_at = 0;
        blank.content_hash = String::new();
        sha256_hex(&serde_json::to_vec(&blank).expect("bundle serializes"))
    }

    /// Hash and record-reference checks.
    pub fn verify(&self) -> Result<(), String> {
        if self.compute_hash() != self.content_hash {
            return Err("content hash mismatch".into());
        }
        for table in self.analysis.impacts.values() {
            for score in table {
                if !self
                    .analysis
                    .records
                    .iter()
                    .any(|r| r.id == score.record_id)
                {
                    return Err(format!(
                        "impact references unknown record {}",
                        score.record_id
                    ));
                }
            }
        }
        for id in self.analysis.attributions.keys() {
            if !self.analysis.records.iter().any(|r| &r.id == id) {
                return Err(format!("attribution references unknown record {id}"));
            }
        }
        Ok(())
    }
}

/// Version string of a model: a digest of its checkpoint bytes.
pub fn model_version(model: &PredictorModel) -> String {
    let mut bytes = Vec::new();
    write_checkpoint(model, &mut bytes).expect("in-memory write");
    format!("lstm-{}", &sha256_hex(&bytes)[..16])
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    /// Opens (creating if needed) a workspace rooted at `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for kind in [EntityKind::Match, EntityKind::Model, EntityKind::Bundle] {
            fs::create_dir_all(root.join(kind.dir()))?;
        }
        Ok(Self { root })
    }

    /// Opens an existing workspace without creating anything.
    pub fn open_existing(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for kind in [EntityKind::Match, EntityKind::Model, EntityKind::Bundle] {
            if !root.join(kind.dir()).is_dir() {
                return Err(StoreError::NotFound {
                    kind: "workspace directory",
                    id: root.join(kind.dir()).display().to_string(),
                });
            }
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, kind: EntityKind, id: &str) -> Result<PathBuf, StoreError> {
        check_id(id)?;
        Ok(self
            .root
            .join(kind.dir())
            .join(format!("{id}.{}", kind.extension())))
    }

    /// Stores a payload. Re-putting identical content leaves the file alone.
    pub fn put_raw(&self, kind: EntityKind, id: &str, payload: &[u8]) -> Result<bool, StoreError> {
        let path = self.path_of(kind, id)?;
        let bytes = encode_container(kind, payload);
        if fs::read(&path).map(|old| old == bytes).unwrap_or(false) {
            return Ok(false);
        }
        let dir = path.parent().expect("entity path has a parent");
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| StoreError::Io(e.error))?;
        Ok(true)
    }

    pub fn get_raw(&self, kind: EntityKind, id: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.path_of(kind, id)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound {
                    kind: kind.name(),
                    id: id.to_string(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        decode_container(kind, &bytes)
            .map(<[u8]>::to_vec)
            .map_err(|reason| self.corrupt(kind, id, reason))
    }

    /// Ids of stored entities, sorted.
    pub fn list(&self, kind: EntityKind) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        let suffix = format!(".{}", kind.extension());
        for entry in fs::read_dir(self.root.join(kind.dir()))? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(&suffix) {
                if check_id(id).is_ok() {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn corrupt(&self, kind: EntityKind, id: &str, reason: impl Into<String>) -> StoreError {
        StoreError::CorruptEntity {
            kind: kind.name(),
            id: id.to_string(),
            reason: reason.into(),
        }
    }

    pub fn put_match(&self, log: &MatchLog) -> Result<bool, StoreError> {
        self.put_raw(
            EntityKind::Match,
            log.match_id(),
            serialize_match_log(log).as_bytes(),
        )
    }

    pub fn get_match(&self, id: &str) -> Result<MatchLog, StoreError> {
        let payload = self.get_raw(EntityKind::Match, id)?;
        parse_match_log(&payload).map_err(|e| self.corrupt(EntityKind::Match, id, e.to_string()))
    }

    /// Every stored match, in id order.
    pub fn load_matches(&self) -> Result<Vec<MatchLog>, StoreError> {
        self.list(EntityKind::Match)?
            .iter()
            .map(|id| self.get_match(id))
            .collect()
    }

    pub fn put_model(&self, name: &str, model: &PredictorModel) -> Result<bool, StoreError> {
        let mut bytes = Vec::new();
        write_checkpoint(model, &mut bytes)
            .map_err(|e| self.corrupt(EntityKind::Model, name, e.to_string()))?;
        self.put_raw(EntityKind::Model, name, &bytes)
    }

    pub fn get_model(&self, name: &str) -> Result<PredictorModel, StoreError> {
        let payload = self.get_raw(EntityKind::Model, name)?;
        read_checkpoint(payload.as_slice())
            .map_err(|e| self.corrupt(EntityKind::Model, name, e.to_string()))
    }

    pub fn put_bundle(&self, bundle: &AnalysisBundle) -> Result<bool, StoreError> {
        let json = serde_json::to_vec_pretty(bundle).expect("bundle serializes");
        self.put_raw(EntityKind::Bundle, &bundle.match_id, &json)
    }

    pub fn get_bundle(&self, match_id: &str) -> Result<AnalysisBundle, StoreError> {
        let payload = self.get_raw(EntityKind::Bundle, match_id)?;
        let bundle: AnalysisBundle = serde_json::from_slice(&payload)
            .map_err(|e| self.corrupt(EntityKind::Bundle, match_id, e.to_string()))?;
        bundle
            .verify()
            .map_err(|reason| self.corrupt(EntityKind::Bundle, match_id, reason))?;
        Ok(bundle)
    }

    /// Like [`Workspace::get_bundle`], but a bundle built by another model
    /// version is reported as stale.
    pub fn get_bundle_for(
        &self,
        match_id: &str,
        current_model: &str,
    ) -> Result<AnalysisBundle, StoreError> {
        let bundle = self.get_bundle(match_id)?;
        if bundle.model_version != current_model {
            return Err(StoreError::VersionSkew {
                id: match_id.to_string(),
                bundle_model: bundle.model_version,
                current_model: current_model.to_string(),
            });
        }
        Ok(bundle)
    }

    /// Version of the default model, if one is stored.
    pub fn current_model_version(&self) -> Result<Option<String>, StoreError> {
        match self.get_model(DEFAULT_MODEL) {
            Ok(m) => Ok(Some(model_version(&m))),
            Err(StoreError::NotFound { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
