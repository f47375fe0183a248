// SPDX-License-Identifier: Apache-2.0

//! SBOM ingestion (minimal SPDX and CycloneDX JSON), vulnerability feeds,
//! component matching, and impact propagation to trained and deployed
//! systems.

mod cyclonedx;
mod feed;
mod impact;
mod spdx;

pub use cyclonedx::parse_cyclonedx;
pub use feed::{
    ingest_cve_feed, load_vuln, AffectedPackage, FeedOutcome, FeedRejection, Severity,
    VersionRange, VulnRecord,
};
pub use impact::{impact, match_components, AffectedSystem, ComponentMatch, ImpactReport, PropagationPath};
pub use spdx::parse_spdx;

use std::collections::BTreeMap;

use serde_json::Value;

use crate::attestor::Attestor;
use crate::error::{Error, Result};
use crate::model::{is_cve_id, AttestationId, LicenseInfo, Payload, SbomFormat, SbomPayload, VersionInfo};
use crate::store::Store;

/// Parses an SPDX JSON document and stores it as a signed SBOM attestation.
pub fn ingest_spdx(
    document: &[u8],
    store: &Store,
    attestor: &Attestor,
    version: VersionInfo,
) -> Result<AttestationId> {
    let payload = parse_spdx(document)?;
    attestor.publish(store, Payload::Sbom(payload), version, BTreeMap::new())
}

/// Parses a CycloneDX JSON document and stores it as a signed SBOM attestation.
pub fn ingest_cyclonedx(
    document: &[u8],
    store: &Store,
    attestor: &Attestor,
    version: VersionInfo,
) -> Result<AttestationId> {
    let payload = parse_cyclonedx(document)?;
    attestor.publish(store, Payload::Sbom(payload), version, BTreeMap::new())
}

/// Parses either supported format.
pub fn parse_sbom(document: &[u8], format: SbomFormat) -> Result<SbomPayload> {
    match format {
        SbomFormat::SpdxJson => parse_spdx(document),
        SbomFormat::CyclonedxJson => parse_cyclonedx(document),
        SbomFormat::Native => {
            let payload: SbomPayload = serde_json::from_slice(document)?;
            Ok(payload)
        }
    }
}

fn parse_document(document: &[u8]) -> Result<Value> {
    serde_json::from_slice(document).map_err(|e| Error::Format(format!("not JSON: {e}")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

fn license(id: &str) -> Option<LicenseInfo> {
    let id = id.trim();
    match id {
        "" | "NOASSERTION" | "NONE" => None,
        _ => Some(LicenseInfo::new(id)),
    }
}

/// A CVE id at the end of a reference locator, e.g. a bare id or an
/// advisory URL ending in one.
fn cve_in_locator(locator: &str) -> Option<&str> {
    let tail = locator
        .trim_end_matches('/')
        .rsplit(['/', '=', ':'])
        .next()
        .unwrap_or(locator);
    if is_cve_id(locator) {
        Some(locator)
    } else if is_cve_id(tail) {
        Some(tail)
    } else {
        None
    }
}

fn sort_dedup(v: &mut Vec<String>) {
    v.sort();
    v.dedup();
}
