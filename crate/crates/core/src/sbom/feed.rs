// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{canonical_json, is_cve_id, is_cwe_id, parse_semver, Timestamp};
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
    #[default]
    Unknown,
}

/// Affected-version expression: `*`, `=X`, or `>=A.B.C <D.E.F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VersionRange {
    Any,
    Exact(String),
    HalfOpen {
        min: (u64, u64, u64),
        max: (u64, u64, u64),
    },
}

impl VersionRange {
    /// Whether a component version falls in the range. Empty versions never
    /// match; versions that are not `MAJOR.MINOR.PATCH` match only `*` and
    /// exact string equality.
    pub fn matches(&self, version: &str) -> bool {
        if version.is_empty() {
            return false;
        }
        match self {
            VersionRange::Any => true,
            VersionRange::Exact(v) => v == version,
            VersionRange::HalfOpen { min, max } => {
                parse_semver(version).is_some_and(|v| *min <= v && v < *max)
            }
        }
    }
}

impl FromStr for VersionRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("invalid version range {s:?}"));
        let t = s.trim();
        if t == "*" {
            return Ok(VersionRange::Any);
        }
        if let Some(rest) = t.strip_prefix(">=") {
            let mut parts = rest.split_whitespace();
            let (Some(lo), Some(hi), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            let hi = hi.strip_prefix('<').ok_or_else(bad)?;
            let min = parse_semver(lo).ok_or_else(bad)?;
            let max = parse_semver(hi).ok_or_else(bad)?;
            return Ok(VersionRange::HalfOpen { min, max });
        }
        if let Some(rest) = t.strip_prefix('=') {
            let v = rest.trim();
            if v.is_empty() || v.contains(char::is_whitespace) {
                return Err(bad());
            }
            return Ok(VersionRange::Exact(v.to_owned()));
        }
        Err(bad())
    }
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VersionRange::Any => f.write_str("*"),
            VersionRange::Exact(v) => write!(f, "={v}"),
            VersionRange::HalfOpen { min, max } => write!(
                f,
                ">={}.{}.{} <{}.{}.{}",
                min.0, min.1, min.2, max.0, max.1, max.2
            ),
        }
    }
}

impl Serialize for VersionRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VersionRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectedPackage {
    pub package_name: String,
    pub version_range: VersionRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnRecord {
    pub cve_id: String,
    #[serde(default)]
    pub severity: Severity,
    #[serde(default)]
    pub cwe_ids: Vec<String>,
    pub affected: Vec<AffectedPackage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<Timestamp>,
}

impl VulnRecord {
    /// Parses one feed entry, normalizing severity case.
    pub fn from_value(mut v: Value) -> Result<Self> {
        if let Some(Value::String(s)) = v.get_mut("severity") {
            *s = s.to_ascii_lowercase();
        }
        let rec: VulnRecord = serde_json::from_value(v)?;
        if !is_cve_id(&rec.cve_id) {
            return Err(Error::Format(format!("{:?} is not a CVE id", rec.cve_id)));
        }
        if let Some(bad) = rec.cwe_ids.iter().find(|c| !is_cwe_id(c)) {
            return Err(Error::Format(format!("{bad:?} is not a CWE id")));
        }
        Ok(rec)
    }

    /// Stable on-disk bytes.
    pub fn to_canonical_bytes(&self) -> Result<Vec<u8>> {
        canonical_json(&serde_json::to_value(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeedRejection {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeedOutcome {
    /// Valid records written or confirmed present.
    pub upserted: usize,
    pub rejected: Vec<FeedRejection>,
}

/// Upserts every valid record of a JSON-array feed into `vulns/`.
/// Invalid entries are reported by index; the rest are still ingested.
pub fn ingest_cve_feed(feed: &[u8], store: &Store) -> Result<FeedOutcome> {
    let doc: Value = serde_json::from_slice(feed)
        .map_err(|e| Error::Format(format!("feed is not JSON: {e}")))?;
    let Value::Array(items) = doc else {
        return Err(Error::Format("feed must be a JSON array".into()));
    };
    let mut outcome = FeedOutcome {
        upserted: 0,
        rejected: Vec::new(),
    };
    for (index, item) in items.into_iter().enumerate() {
        match VulnRecord::from_value(item) {
            Ok(rec) => {
                store.write_vuln(&rec.cve_id, &rec.to_canonical_bytes()?)?;
                outcome.upserted += 1;
            }
            Err(e) => outcome.rejected.push(FeedRejection {
                index,
                reason: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}

/// The stored record for `cve_id`; [`Error::NotFound`] if never ingested.
pub fn load_vuln(cve_id: &str, store: &Store) -> Result<VulnRecord> {
    if !is_cve_id(cve_id) {
        return Err(Error::NotFound(format!("{cve_id:?} is not a CVE id")));
    }
    let bytes = store
        .read_vuln(cve_id)?
        .ok_or_else(|| Error::NotFound(format!("{cve_id} has not been ingested")))?;
    let v: Value = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Integrity(format!("vulns/{cve_id}.json: {e}")))?;
    VulnRecord::from_value(v)
}
