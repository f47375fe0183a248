// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use serde_json::Value;

use super::{license, parse_document, sort_dedup, str_field};
use crate::crypto::hash_bytes;
use crate::error::{Error, Result};
use crate::model::{is_cve_id, LicenseInfo, SbomComponent, SbomFormat, SbomPayload};

/// Extracts components (nested ones flattened, depth first) from a
/// CycloneDX JSON document.
///
/// Vulnerability ids are collected from a component's own
/// `vulnerabilities` array and from top-level `vulnerabilities` entries
/// whose `affects[].ref` names the component's `bom-ref`. Only ids in CVE
/// syntax are kept; numeric `cwes` become `CWE-n`.
pub fn parse_cyclonedx(document: &[u8]) -> Result<SbomPayload> {
    let doc = parse_document(document)?;
    let top = doc
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("CycloneDX document has no components array".into()))?;

    let mut flat: Vec<(String, &Value)> = Vec::new();
    flatten(top, "", &mut flat);

    let mut components = Vec::with_capacity(flat.len());
    let mut by_ref: HashMap<&str, usize> = HashMap::new();
    for (i, (path, comp)) in flat.iter().enumerate() {
        let name = str_field(comp, "name")
            .ok_or_else(|| Error::Format(format!("CycloneDX component {path} has no name")))?;
        let mut c = SbomComponent::new(name, str_field(comp, "version").unwrap_or(""));
        c.purl = str_field(comp, "purl").map(str::to_owned);
        c.cpe = str_field(comp, "cpe").map(str::to_owned);
        c.license = first_license(comp);
        for v in comp
            .get("vulnerabilities")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            absorb_vulnerability(&mut c, v);
        }
        if let Some(r) = str_field(comp, "bom-ref") {
            by_ref.insert(r, i);
        }
        components.push(c);
    }

    for v in doc
        .get("vulnerabilities")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
    {
        for a in v.get("affects").and_then(Value::as_array).into_iter().flatten() {
            if let Some(&i) = str_field(a, "ref").and_then(|r| by_ref.get(r)) {
                absorb_vulnerability(&mut components[i], v);
            }
        }
    }
    for c in &mut components {
        sort_dedup(&mut c.declared_cves);
        sort_dedup(&mut c.declared_cwes);
    }

    Ok(SbomPayload {
        source_format: SbomFormat::CyclonedxJson,
        document_digest: hash_bytes(document),
        components,
    })
}

fn flatten<'a>(items: &'a [Value], prefix: &str, out: &mut Vec<(String, &'a Value)>) {
    for (i, item) in items.iter().enumerate() {
        let path = format!("{prefix}{i}");
        out.push((path.clone(), item));
        if let Some(children) = item.get("components").and_then(Value::as_array) {
            flatten(children, &format!("{path}."), out);
        }
    }
}

fn first_license(comp: &Value) -> Option<LicenseInfo> {
    for entry in comp.get("licenses").and_then(Value::as_array).into_iter().flatten() {
        if let Some(l) = entry.get("license") {
            if let Some(found) = str_field(l, "id").or_else(|| str_field(l, "name")).and_then(license) {
                return Some(found);
            }
        }
        if let Some(found) = str_field(entry, "expression").and_then(license) {
            return Some(found);
        }
    }
    None
}

fn absorb_vulnerability(c: &mut SbomComponent, v: &Value) {
    if let Some(id) = str_field(v, "id").filter(|id| is_cve_id(id)) {
        c.declared_cves.push(id.to_owned());
    }
    for cwe in v.get("cwes").and_then(Value::as_array).into_iter().flatten() {
        match cwe {
            Value::Number(n) => {
                if let Some(n) = n.as_u64() {
                    c.declared_cwes.push(format!("CWE-{n}"));
                }
            }
            Value::String(s) if crate::model::is_cwe_id(s) => c.declared_cwes.push(s.clone()),
            _ => {}
        }
    }
}
