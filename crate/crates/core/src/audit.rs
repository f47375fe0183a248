// SPDX-License-Identifier: Apache-2.0

//! Dataset tampering and reuse audits by hash comparison.
//!
//! Detection here is integrity deviation (content no longer matching its
//! signed root) and lineage comparison (what changed between two packs),
//! not statistical analysis of the data itself.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::verify::rehash_check;
use crate::model::{AttestationId, Digest, Kind, Payload, VersionInfo};
use crate::store::{Filter, Store};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberDigest {
    pub member_name: String,
    pub digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModifiedMember {
    pub member_name: String,
    pub old_digest: Digest,
    pub new_digest: Digest,
}

/// Member-name keyed comparison of two data packs. A renamed member shows
/// up as one removal plus one addition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PackDiff {
    pub added: Vec<MemberDigest>,
    pub removed: Vec<MemberDigest>,
    pub modified: Vec<ModifiedMember>,
    pub unchanged_count: usize,
}

impl PackDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }
}

fn pack_members(id: &AttestationId, store: &Store) -> Result<BTreeMap<String, Digest>> {
    let env = store.require(id)?;
    let Payload::DataPack(pack) = &env.payload else {
        return Err(Error::Kind {
            id: id.clone(),
            expected: Kind::DataPack.to_string(),
            found: env.kind(),
        });
    };
    let mut out = BTreeMap::new();
    for m in &pack.members {
        let member = store.require(&m.attestation_id)?;
        let Payload::TrainingData(t) = &member.payload else {
            return Err(Error::Kind {
                id: m.attestation_id.clone(),
                expected: Kind::TrainingData.to_string(),
                found: member.kind(),
            });
        };
        out.insert(m.member_name.clone(), t.data.content.root.clone());
    }
    Ok(out)
}

pub fn diff_packs(pack_a: &AttestationId, pack_b: &AttestationId, store: &Store) -> Result<PackDiff> {
    let a = pack_members(pack_a, store)?;
    let b = pack_members(pack_b, store)?;
    let mut diff = PackDiff {
        added: Vec::new(),
        removed: Vec::new(),
        modified: Vec::new(),
        unchanged_count: 0,
    };
    for (name, old) in &a {
        match b.get(name) {
            None => diff.removed.push(MemberDigest {
                member_name: name.clone(),
                digest: old.clone(),
            }),
            Some(new) if new != old => diff.modified.push(ModifiedMember {
                member_name: name.clone(),
                old_digest: old.clone(),
                new_digest: new.clone(),
            }),
            Some(_) => diff.unchanged_count += 1,
        }
    }
    for (name, new) in &b {
        if !a.contains_key(name) {
            diff.added.push(MemberDigest {
                member_name: name.clone(),
                digest: new.clone(),
            });
        }
    }
    Ok(diff)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReuseEntry {
    pub id: AttestationId,
    pub kind: Kind,
    pub name: String,
    pub version: VersionInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReuseReport {
    pub digest: Digest,
    pub referencing_attestations: Vec<ReuseEntry>,
}

/// Every data, training-data or weights attestation whose content root is
/// `digest`, in id order.
pub fn audit_reuse(digest: &Digest, store: &Store) -> Result<ReuseReport> {
    let referencing_attestations = store
        .load_all()?
        .into_iter()
        .filter_map(|(id, env)| {
            let data = env.payload.data()?;
            (data.content.root == *digest).then(|| ReuseEntry {
                kind: env.kind(),
                name: data.name.clone(),
                version: env.version.clone(),
                id,
            })
        })
        .collect();
    Ok(ReuseReport {
        digest: digest.clone(),
        referencing_attestations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SeriesStatus {
    Pass,
    FailSignature,
    FailDigest,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesEntry {
    pub id: AttestationId,
    pub counter: u64,
    pub status: SeriesStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub content: Option<Digest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Re-checks every version of an `(issuer, name)` series against the
/// artifact bytes currently on disk, in counter order.
///
/// `issuer` is the fingerprint as hex. Versions whose artifact cannot be
/// located or has no content root are reported as unverifiable.
pub fn audit_series(issuer: &str, name: &str, store: &Store, rehash_root: &Path) -> Result<Vec<SeriesEntry>> {
    let ids = store.find(&Filter {
        issuer: Some(issuer.to_owned()),
        name: Some(name.to_owned()),
        ..Filter::default()
    })?;
    if ids.is_empty() {
        return Err(Error::NotFound(format!("no series {name:?} by {issuer}")));
    }
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let Some(raw) = store.get_raw(&id)? else { continue };
        let env = raw.envelope;
        let content = env.payload.content().map(|c| c.root.clone());
        let (status, detail) = match store.public_key(&env.issuer)? {
            Some(key) if !env.verify_signature(&key) => (SeriesStatus::FailSignature, None),
            _ if raw.recomputed != id => (
                SeriesStatus::FailDigest,
                Some(format!("stored object hashes to {}", raw.recomputed)),
            ),
            _ => match rehash_check(&env, rehash_root) {
                None => (SeriesStatus::Unverifiable, Some("no locatable artifact".into())),
                Some(Ok(())) => (SeriesStatus::Pass, None),
                Some(Err(msg)) if msg.ends_with("is missing") => {
                    (SeriesStatus::Unverifiable, Some(msg))
                }
                Some(Err(msg)) => (SeriesStatus::FailDigest, Some(msg)),
            },
        };
        out.push(SeriesEntry {
            id,
            counter: env.version.counter,
            status,
            content,
            detail,
        });
    }
    Ok(out)
}
