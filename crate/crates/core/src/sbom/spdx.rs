// SPDX-License-Identifier: Apache-2.0

use serde_json::Value;

use super::{cve_in_locator, license, parse_document, sort_dedup, str_field};
use crate::crypto::hash_bytes;
use crate::error::{Error, Result};
use crate::model::{SbomComponent, SbomFormat, SbomPayload};

/// Extracts one component per entry of the top-level `packages` array.
///
/// Reads `name`, `versionInfo`, `licenseConcluded`, and `externalRefs` of
/// type purl / cpe22Type / cpe23Type; SECURITY refs whose locator names a
/// CVE become declared CVEs. Everything else is ignored.
pub fn parse_spdx(document: &[u8]) -> Result<SbomPayload> {
    let doc = parse_document(document)?;
    let packages = doc
        .get("packages")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("SPDX document has no packages array".into()))?;
    let mut components = Vec::with_capacity(packages.len());
    for (i, pkg) in packages.iter().enumerate() {
        let name = str_field(pkg, "name")
            .ok_or_else(|| Error::Format(format!("SPDX package {i} has no name")))?;
        let mut c = SbomComponent::new(name, str_field(pkg, "versionInfo").unwrap_or(""));
        c.license = str_field(pkg, "licenseConcluded").and_then(license);
        for r in pkg
            .get("externalRefs")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let locator = str_field(r, "referenceLocator").unwrap_or("");
            let category = str_field(r, "referenceCategory").unwrap_or("");
            match str_field(r, "referenceType").unwrap_or("") {
                "purl" if c.purl.is_none() => c.purl = Some(locator.to_owned()),
                "cpe22Type" | "cpe23Type" if c.cpe.is_none() => c.cpe = Some(locator.to_owned()),
                _ if category.eq_ignore_ascii_case("SECURITY") => {
                    if let Some(cve) = cve_in_locator(locator) {
                        c.declared_cves.push(cve.to_owned());
                    }
                }
                _ => {}
            }
        }
        sort_dedup(&mut c.declared_cves);
        components.push(c);
    }
    Ok(SbomPayload {
        source_format: SbomFormat::SpdxJson,
        document_digest: hash_bytes(document),
        components,
    })
}
