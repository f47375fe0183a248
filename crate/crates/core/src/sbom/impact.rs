// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::{load_vuln, VulnRecord};
use crate::error::Result;
use crate::graph::{outgoing, EdgeRole, TrustEdge};
use crate::model::{AttestationId, Envelope, Kind, Payload};
use crate::store::Store;

/// Edge roles a code vulnerability travels along, from source to derived.
const PROPAGATING: [EdgeRole; 5] = [
    EdgeRole::BuildsWith,
    EdgeRole::Produces,
    EdgeRole::PackagedIn,
    EdgeRole::DeployedWith,
    EdgeRole::Runs,
];

const SYSTEM_KINDS: [Kind; 4] = [
    Kind::TrainedSystem,
    Kind::InferenceSystem,
    Kind::Weights,
    Kind::Config,
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ComponentMatch {
    pub sbom_id: AttestationId,
    pub component: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AffectedSystem {
    pub id: AttestationId,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PropagationPath {
    pub code: AttestationId,
    pub system: AttestationId,
    /// Reference edges walked backwards from the code to the system.
    pub edges: Vec<TrustEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpactReport {
    pub cve_id: String,
    pub matched_components: Vec<ComponentMatch>,
    pub affected_code: Vec<AttestationId>,
    pub affected_systems: Vec<AffectedSystem>,
    pub propagation_paths: Vec<PropagationPath>,
}

fn sboms(store: &Store) -> Result<Vec<(AttestationId, Envelope)>> {
    Ok(store
        .load_all()?
        .into_iter()
        .filter(|(_, e)| e.kind() == Kind::Sbom)
        .collect())
}

fn match_in(vuln: &VulnRecord, sboms: &[(AttestationId, Envelope)]) -> Vec<ComponentMatch> {
    let mut out = Vec::new();
    for (id, env) in sboms {
        let Payload::Sbom(sbom) = &env.payload else { continue };
        for c in &sbom.components {
            let declared = c.declared_cves.contains(&vuln.cve_id);
            let by_range = vuln
                .affected
                .iter()
                .any(|a| a.package_name == c.name && a.version_range.matches(&c.version));
            if declared || by_range {
                out.push(ComponentMatch {
                    sbom_id: id.clone(),
                    component: c.name.clone(),
                    version: c.version.clone(),
                });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// SBOM components affected by `vuln`: those declaring its CVE id, and
/// those whose exact name is listed with a version range their version
/// satisfies.
pub fn match_components(vuln: &VulnRecord, store: &Store) -> Result<Vec<ComponentMatch>> {
    Ok(match_in(vuln, &sboms(store)?))
}

/// Traces an ingested CVE from matching SBOM components through the code
/// that declares those SBOMs to every trained system, weights, config and
/// inference system built from that code.
pub fn impact(cve_id: &str, store: &Store) -> Result<ImpactReport> {
    let vuln = load_vuln(cve_id, store)?;
    let all = store.load_all()?;
    let sbom_list: Vec<_> = all
        .iter()
        .filter(|(_, e)| e.kind() == Kind::Sbom)
        .cloned()
        .collect();
    let matched = match_in(&vuln, &sbom_list);
    let hit_sboms: BTreeSet<&AttestationId> = matched.iter().map(|m| &m.sbom_id).collect();

    let kinds: BTreeMap<&AttestationId, Kind> = all.iter().map(|(id, e)| (id, e.kind())).collect();
    let affected_code: Vec<AttestationId> = all
        .iter()
        .filter_map(|(id, e)| match &e.payload {
            Payload::Code(c) if c.sbom_ref.as_ref().is_some_and(|r| hit_sboms.contains(r)) => {
                Some(id.clone())
            }
            _ => None,
        })
        .collect();

    // source -> [(derived, edge)]
    let mut derived: BTreeMap<&AttestationId, Vec<(&AttestationId, TrustEdge)>> = BTreeMap::new();
    for (id, env) in &all {
        for (role, to) in outgoing(&env.payload) {
            if PROPAGATING.contains(&role) {
                derived.entry(to).or_default().push((
                    id,
                    TrustEdge {
                        from_id: id.clone(),
                        to_id: to.clone(),
                        role,
                    },
                ));
            }
        }
    }

    let mut systems: BTreeSet<AffectedSystem> = BTreeSet::new();
    let mut paths = Vec::new();
    for code in &affected_code {
        let mut via: BTreeMap<&AttestationId, (&AttestationId, &TrustEdge)> = BTreeMap::new();
        let mut queue = VecDeque::from([code]);
        let mut seen = BTreeSet::from([code]);
        while let Some(n) = queue.pop_front() {
            for (d, edge) in derived.get(n).into_iter().flatten() {
                if seen.insert(*d) {
                    via.insert(*d, (n, edge));
                    queue.push_back(*d);
                }
            }
        }
        for reached in seen.iter().filter(|r| **r != code) {
            let kind = kinds[*reached];
            if !SYSTEM_KINDS.contains(&kind) {
                continue;
            }
            systems.insert(AffectedSystem {
                id: (*reached).clone(),
                kind,
            });
            let mut edges = Vec::new();
            let mut cur = *reached;
            while let Some((prev, edge)) = via.get(cur) {
                edges.push((*edge).clone());
                cur = prev;
            }
            edges.reverse();
            paths.push(PropagationPath {
                code: code.clone(),
                system: (*reached).clone(),
                edges,
            });
        }
    }
    paths.sort();

    Ok(ImpactReport {
        cve_id: vuln.cve_id,
        matched_components: matched,
        affected_code,
        affected_systems: systems.into_iter().collect(),
        propagation_paths: paths,
    })
}
