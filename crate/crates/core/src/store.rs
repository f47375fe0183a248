// SPDX-License-Identifier: Apache-2.0

//! Content-addressed, append-only attestation store on the local filesystem.
//!
//! ```text
//! <root>/
//!   LAYOUT                          "store/1"
//!   objects/xx/<64-hex>.taibom.json
//!   revocations/<64-hex>.taibom.json
//!   keys/<64-hex>.pub               public key, JSON
//!   keys/<64-hex>.trusted           trust marker
//!   vulns/<CVE-id>.json
//!   index/catalog.jsonl             derived, rebuilt when stale
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::crypto::PublicKey;
use crate::error::{Error, Result};
use crate::model::{attestation_id, is_cve_id, is_sha256_hex, AttestationId, Digest, Envelope, Kind};

pub const LAYOUT_VERSION: &str = "store/1";
pub const STORE_ENV: &str = "TAIBOM_STORE";
const OBJECT_SUFFIX: &str = ".taibom.json";
const SUBDIRS: [&str; 5] = ["objects", "revocations", "keys", "vulns", "index"];

/// What a writer does when another writer holds the lock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockPolicy {
    FailFast,
    Wait(Duration),
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
    lock_policy: LockPolicy,
}

/// Catalog row for one stored envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: AttestationId,
    pub kind: Kind,
    pub issuer: String,
    pub name: String,
    pub counter: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Filter {
    pub kind: Option<Kind>,
    /// Issuer fingerprint, hex.
    pub issuer: Option<String>,
    pub name: Option<String>,
}

impl Filter {
    pub fn kind(kind: Kind) -> Self {
        Filter {
            kind: Some(kind),
            ..Filter::default()
        }
    }
}

/// An envelope read without enforcing that its content hashes to its name.
#[derive(Debug, Clone)]
pub struct RawObject {
    pub envelope: Envelope,
    pub recomputed: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditFinding {
    pub path: PathBuf,
    pub problem: String,
}

struct WriteGuard {
    path: PathBuf,
}

impl Drop for WriteGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl Store {
    /// Opens the store at `root`, creating the layout if absent.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in SUBDIRS {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let layout = root.join("LAYOUT");
        match fs::read_to_string(&layout) {
            Ok(v) if v.trim() == LAYOUT_VERSION => {}
            Ok(v) => return Err(Error::Schema(v.trim().to_owned())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                write_atomic(&layout, format!("{LAYOUT_VERSION}\n").as_bytes())?;
            }
            Err(e) => return Err(Error::io(&layout, e)),
        }
        Ok(Store {
            root,
            lock_policy: LockPolicy::Wait(Duration::from_secs(10)),
        })
    }

    /// Opens an existing store; fails if `root` has no layout file.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let layout = root.join("LAYOUT");
        if !layout.exists() {
            return Err(Error::NotFound(format!("no store at {}", root.display())));
        }
        Self::init(root)
    }

    pub fn with_lock_policy(mut self, policy: LockPolicy) -> Self {
        self.lock_policy = policy;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lock(&self) -> Result<WriteGuard> {
        let path = self.root.join("lock");
        let deadline = match self.lock_policy {
            LockPolicy::FailFast => None,
            LockPolicy::Wait(d) => Some(Instant::now() + d),
        };
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(WriteGuard { path });
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => match deadline {
                    Some(t) if Instant::now() < t => std::thread::sleep(Duration::from_millis(5)),
                    _ => return Err(Error::Busy(path)),
                },
                Err(e) => return Err(Error::io(&path, e)),
            }
        }
    }

    fn object_path(&self, id: &AttestationId, kind: Kind) -> PathBuf {
        if kind == Kind::Revocation {
            self.root.join("revocations").join(format!("{id}{OBJECT_SUFFIX}"))
        } else {
            let s = id.as_str();
            self.root
                .join("objects")
                .join(&s[..2])
                .join(format!("{s}{OBJECT_SUFFIX}"))
        }
    }

    fn locate(&self, id: &AttestationId) -> Option<PathBuf> {
        [Kind::Data, Kind::Revocation]
            .into_iter()
            .map(|k| self.object_path(id, k))
            .find(|p| p.exists())
    }

    /// Stores `envelope` and returns its id. Re-putting an identical
    /// envelope is a no-op.
    pub fn put(&self, envelope: &Envelope) -> Result<AttestationId> {
        let id = attestation_id(envelope)?;
        if let Some(key) = self.public_key(&envelope.issuer)? {
            if !envelope.verify_signature(&key) {
                return Err(Error::Format(format!(
                    "signature on {id} does not verify against issuer key {}",
                    envelope.issuer.value
                )));
            }
        }
        let _guard = self.lock()?;
        let path = self.object_path(&id, envelope.kind());
        if path.exists() {
            let raw = self.read_raw_at(&path)?;
            if raw.recomputed == id {
                return Ok(id);
            }
            return Err(Error::Integrity(format!(
                "{} exists but hashes to {}",
                path.display(),
                raw.recomputed
            )));
        }
        let catalog = self.catalog()?;
        let issuer = envelope.issuer.value.as_str();
        if let Some(prev) = catalog
            .iter()
            .filter(|e| e.issuer == issuer && e.name == envelope.version.name)
            .map(|e| e.counter)
            .max()
        {
            if envelope.version.counter <= prev {
                return Err(Error::Version(format!(
                    "counter {} for series {:?} must exceed {prev}",
                    envelope.version.counter, envelope.version.name
                )));
            }
        }
        let dir = path.parent().expect("object paths have a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&path, envelope.to_json_pretty()?.as_bytes())?;
        self.append_index(&IndexEntry {
            id: id.clone(),
            kind: envelope.kind(),
            issuer: issuer.to_owned(),
            name: envelope.version.name.clone(),
            counter: envelope.version.counter,
        })?;
        Ok(id)
    }

    fn read_raw_at(&self, path: &Path) -> Result<RawObject> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let envelope = Envelope::from_json(&bytes).map_err(|e| {
            Error::Integrity(format!("{} is unreadable: {e}", path.display()))
        })?;
        let recomputed = attestation_id(&envelope)?;
        Ok(RawObject {
            envelope,
            recomputed,
        })
    }

    /// Reads an object without checking its name against its content.
    pub fn get_raw(&self, id: &AttestationId) -> Result<Option<RawObject>> {
        if !id.is_well_formed() {
            return Ok(None);
        }
        match self.locate(id) {
            Some(path) => self.read_raw_at(&path).map(Some),
            None => Ok(None),
        }
    }

    /// The envelope stored under `id`, if any.
    ///
    /// Fails with [`Error::DigestMismatch`] if the stored file no longer
    /// hashes to `id`.
    pub fn get(&self, id: &AttestationId) -> Result<Option<Envelope>> {
        match self.get_raw(id)? {
            None => Ok(None),
            Some(raw) if raw.recomputed == *id => Ok(Some(raw.envelope)),
            Some(raw) => Err(Error::DigestMismatch {
                id: id.clone(),
                actual: raw.recomputed,
            }),
        }
    }

    /// Like [`Store::get`], but a missing object is [`Error::NotFound`].
    pub fn require(&self, id: &AttestationId) -> Result<Envelope> {
        self.get(id)?
            .ok_or_else(|| Error::NotFound(format!("attestation {id}")))
    }

    /// Matching ids ordered by `(name, counter, id)`.
    pub fn find(&self, filter: &Filter) -> Result<Vec<AttestationId>> {
        let mut rows: Vec<IndexEntry> = self
            .catalog()?
            .into_iter()
            .filter(|e| filter.kind.is_none_or(|k| e.kind == k))
            .filter(|e| filter.issuer.as_deref().is_none_or(|i| e.issuer == i))
            .filter(|e| filter.name.as_deref().is_none_or(|n| e.name == n))
            .collect();
        rows.sort_by(|a, b| (&a.name, a.counter, &a.id).cmp(&(&b.name, b.counter, &b.id)));
        Ok(rows.into_iter().map(|e| e.id).collect())
    }

    /// All catalog rows, rebuilding the index if it is missing, unreadable,
    /// or out of step with the object files.
    pub fn catalog(&self) -> Result<Vec<IndexEntry>> {
        let path = self.index_path();
        let on_disk = self.object_files()?;
        if let Ok(text) = fs::read_to_string(&path) {
            let parsed: std::result::Result<Vec<IndexEntry>, _> = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect();
            if let Ok(mut rows) = parsed {
                rows.sort_by(|a, b| a.id.cmp(&b.id));
                rows.dedup_by(|a, b| a.id == b.id);
                let mut ids: Vec<&AttestationId> = on_disk.iter().map(|(id, _)| id).collect();
                ids.sort();
                if rows.iter().map(|r| &r.id).eq(ids) {
                    return Ok(rows);
                }
            }
        }
        self.rebuild_index_from(&on_disk)
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index").join("catalog.jsonl")
    }

    fn append_index(&self, entry: &IndexEntry) -> Result<()> {
        let path = self.index_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(entry)?;
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
    }

    /// Regenerates `index/` from the object files.
    pub fn rebuild_index(&self) -> Result<Vec<IndexEntry>> {
        let files = self.object_files()?;
        self.rebuild_index_from(&files)
    }

    fn rebuild_index_from(&self, files: &[(AttestationId, PathBuf)]) -> Result<Vec<IndexEntry>> {
        let mut rows = Vec::new();
        for (id, path) in files {
            // Unreadable objects are left out of the index; audit reports them.
            let Ok(raw) = self.read_raw_at(path) else { continue };
            rows.push(IndexEntry {
                id: id.clone(),
                kind: raw.envelope.kind(),
                issuer: raw.envelope.issuer.value.clone(),
                name: raw.envelope.version.name.clone(),
                counter: raw.envelope.version.counter,
            });
        }
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let mut text = String::new();
        for r in &rows {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        // Best effort: readers may race here, and a stale index is rebuilt again.
        let _ = write_atomic(&self.index_path(), text.as_bytes());
        Ok(rows)
    }

    /// `(id from filename, path)` for every object and revocation file.
    fn object_files(&self) -> Result<Vec<(AttestationId, PathBuf)>> {
        let mut out = Vec::new();
        for sub in ["objects", "revocations"] {
            let dir = self.root.join(sub);
            for entry in walkdir::WalkDir::new(&dir).min_depth(1) {
                let entry = entry.map_err(|e| Error::io(&dir, e.into()))?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let Some(name) = entry.file_name().to_str() else { continue };
                let Some(stem) = name.strip_suffix(OBJECT_SUFFIX) else { continue };
                if let Some(id) = AttestationId::parse(stem) {
                    out.push((id, entry.path().to_path_buf()));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Every verifiable envelope in the store, in id order. Objects whose
    /// content no longer matches their name are skipped.
    pub fn load_all(&self) -> Result<Vec<(AttestationId, Envelope)>> {
        let mut out = Vec::new();
        for (id, path) in self.object_files()? {
            let Ok(raw) = self.read_raw_at(&path) else { continue };
            if raw.recomputed == id {
                out.push((id, raw.envelope));
            }
        }
        Ok(out)
    }

    pub fn revocations(&self) -> Result<Vec<(AttestationId, Envelope)>> {
        Ok(self
            .load_all()?
            .into_iter()
            .filter(|(_, e)| e.kind() == Kind::Revocation)
            .collect())
    }

    fn key_path(&self, fingerprint: &str, ext: &str) -> PathBuf {
        self.root.join("keys").join(format!("{fingerprint}.{ext}"))
    }

    /// Records a public key so signatures by it can be checked, without
    /// trusting it.
    pub fn register_key(&self, key: &PublicKey) -> Result<Digest> {
        crate::crypto::verify_scheme(&key.scheme)?;
        let fp = key.fingerprint();
        let path = self.key_path(&fp.value, "pub");
        if !path.exists() {
            let _guard = self.lock()?;
            write_atomic(&path, key.to_json().as_bytes())?;
        }
        Ok(fp)
    }

    pub fn add_trusted_key(&self, key: &PublicKey) -> Result<Digest> {
        let fp = self.register_key(key)?;
        let marker = self.key_path(&fp.value, "trusted");
        if !marker.exists() {
            let _guard = self.lock()?;
            write_atomic(&marker, b"")?;
        }
        Ok(fp)
    }

    pub fn public_key(&self, fingerprint: &Digest) -> Result<Option<PublicKey>> {
        if !fingerprint.is_well_formed() {
            return Ok(None);
        }
        let path = self.key_path(&fingerprint.value, "pub");
        match fs::read_to_string(&path) {
            Ok(text) => {
                let key = PublicKey::from_json(&text)?;
                if key.fingerprint() != *fingerprint {
                    return Err(Error::Integrity(format!(
                        "{} holds a key with a different fingerprint",
                        path.display()
                    )));
                }
                Ok(Some(key))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn is_trusted(&self, fingerprint: &Digest) -> bool {
        fingerprint.is_well_formed()
            && self.key_path(&fingerprint.value, "trusted").exists()
            && self.key_path(&fingerprint.value, "pub").exists()
    }

    /// Trusted fingerprints in sorted order.
    pub fn trusted_keys(&self) -> Result<Vec<Digest>> {
        let dir = self.root.join("keys");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            let Some(fp) = name.to_str().and_then(|n| n.strip_suffix(".trusted")) else {
                continue;
            };
            if let Some(d) = Digest::from_sha256_hex(fp) {
                if self.is_trusted(&d) {
                    out.push(d);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn vuln_path(&self, cve_id: &str) -> Result<PathBuf> {
        if !is_cve_id(cve_id) {
            return Err(Error::Format(format!("{cve_id:?} is not a CVE id")));
        }
        Ok(self.root.join("vulns").join(format!("{cve_id}.json")))
    }

    /// Writes a vulnerability record, replacing any previous one. Returns
    /// false when the stored bytes were already identical.
    pub fn write_vuln(&self, cve_id: &str, bytes: &[u8]) -> Result<bool> {
        let path = self.vuln_path(cve_id)?;
        let _guard = self.lock()?;
        if fs::read(&path).is_ok_and(|old| old == bytes) {
            return Ok(false);
        }
        write_atomic(&path, bytes)?;
        Ok(true)
    }

    pub fn read_vuln(&self, cve_id: &str) -> Result<Option<Vec<u8>>> {
        let path = self.vuln_path(cve_id)?;
        match fs::read(&path) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn vuln_ids(&self) -> Result<Vec<String>> {
        let dir = self.root.join("vulns");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if let Some(id) = entry.file_name().to_str().and_then(|n| n.strip_suffix(".json")) {
                if is_cve_id(id) {
                    out.push(id.to_owned());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Full consistency check of object, key and vulnerability files.
    pub fn audit(&self) -> Result<Vec<AuditFinding>> {
        let mut findings = Vec::new();
        let mut note = |path: &Path, problem: String| {
            findings.push(AuditFinding {
                path: path.to_path_buf(),
                problem,
            })
        };
        for sub in ["objects", "revocations"] {
            let dir = self.root.join(sub);
            for entry in walkdir::WalkDir::new(&dir).min_depth(1) {
                let entry = entry.map_err(|e| Error::io(&dir, e.into()))?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let path = entry.path();
                let id = entry
                    .file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix(OBJECT_SUFFIX))
                    .and_then(AttestationId::parse);
                let Some(id) = id else {
                    note(path, "unexpected file name".into());
                    continue;
                };
                match self.read_raw_at(path) {
                    Err(e) => note(path, e.to_string()),
                    Ok(raw) => {
                        if raw.recomputed != id {
                            note(path, format!("content hashes to {}", raw.recomputed));
                        } else if self.object_path(&id, raw.envelope.kind()) != path {
                            note(path, "object is not at its canonical location".into());
                        }
                        if let Some(key) = self.public_key(&raw.envelope.issuer)? {
                            if !raw.envelope.verify_signature(&key) {
                                note(path, "signature does not verify".into());
                            }
                        }
                    }
                }
            }
        }
        let keys = self.root.join("keys");
        for entry in fs::read_dir(&keys).map_err(|e| Error::io(&keys, e))? {
            let entry = entry.map_err(|e| Error::io(&keys, e))?;
            let path = entry.path();
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(fp) = name.strip_suffix(".pub") {
                match fs::read_to_string(&path)
                    .map_err(|e| Error::io(&path, e))
                    .and_then(|t| PublicKey::from_json(&t))
                {
                    Ok(k) if k.fingerprint().value == fp => {}
                    Ok(k) => note(&path, format!("key fingerprint is {}", k.fingerprint().value)),
                    Err(e) => note(&path, e.to_string()),
                }
            } else if let Some(fp) = name.strip_suffix(".trusted") {
                if !is_sha256_hex(fp) || !self.key_path(fp, "pub").exists() {
                    note(&path, "trust marker without a public key".into());
                }
            } else {
                note(&path, "unexpected file in keys/".into());
            }
        }
        let vulns = self.root.join("vulns");
        for entry in fs::read_dir(&vulns).map_err(|e| Error::io(&vulns, e))? {
            let entry = entry.map_err(|e| Error::io(&vulns, e))?;
            let path = entry.path();
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(stem) = name.strip_suffix(".json") else {
                note(&path, "unexpected file in vulns/".into());
                continue;
            };
            let claimed = fs::read(&path)
                .ok()
                .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
                .and_then(|v| v.get("cve_id").and_then(|c| c.as_str()).map(str::to_owned));
            if claimed.as_deref() != Some(stem) {
                note(&path, "record cve_id does not match file name".into());
            }
        }
        Ok(findings)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("store paths have a parent");
    let tmp = dir.join(format!(
        ".tmp-{}-{:?}-{}",
        std::process::id(),
        std::thread::current().id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("x")
    ));
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
