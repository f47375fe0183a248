// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use serde::Serialize;

use super::{build_graph, outgoing, EdgeRole, TrustEdge};
use crate::error::Result;
use crate::model::{AttestationId, Digest, Kind, Payload, SbomComponent, Timestamp, VersionInfo};
use crate::store::Store;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineageRef {
    pub role: EdgeRole,
    pub id: AttestationId,
}

/// One attestation in a flattened provenance graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineageEntry {
    pub id: AttestationId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    /// True for referenced ids the store does not hold.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub missing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<VersionInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issuer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub issued_at: Option<Timestamp>,
    /// Content root for artifact-bearing kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<Digest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    /// SBOM components: the document's own for an SBOM, the referenced
    /// SBOM's for code.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<SbomComponent>>,
    pub references: Vec<LineageRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lineage {
    pub target: AttestationId,
    pub entries: Vec<LineageEntry>,
    pub edges: Vec<TrustEdge>,
}

impl Lineage {
    /// Data and training-data entries.
    pub fn datasets(&self) -> impl Iterator<Item = &LineageEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.kind, Some(Kind::Data | Kind::TrainingData)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lineage serializes")
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lineage {\n  rankdir=LR;\n  node [shape=box];\n");
        for e in &self.entries {
            let kind = e.kind.map_or("missing", |k| k.as_str());
            let name = e.name.as_deref().unwrap_or("");
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}\\n{}\\n{}\"{}];",
                e.id,
                kind,
                dot_escape(name),
                e.id.short(),
                if e.missing { ", style=dashed" } else { "" }
            );
        }
        for edge in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                edge.from_id, edge.to_id, edge.role
            );
        }
        out.push_str("}\n");
        out
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Flattens the provenance graph under `target` in topological order.
pub fn trace_lineage(target: &AttestationId, store: &Store) -> Result<Lineage> {
    let graph = build_graph(target, store)?;
    let entries = graph
        .topological_order()
        .into_iter()
        .map(|id| {
            let Some(env) = graph.envelope(&id) else {
                return LineageEntry {
                    id,
                    kind: None,
                    missing: true,
                    name: None,
                    version: None,
                    issuer: None,
                    issued_at: None,
                    digest: None,
                    license: None,
                    location: None,
                    components: None,
                    references: Vec::new(),
                };
            };
            let components = match &env.payload {
                Payload::Sbom(s) => Some(s.components.clone()),
                Payload::Code(c) => c.sbom_ref.as_ref().and_then(|r| match graph.envelope(r) {
                    Some(e) => match &e.payload {
                        Payload::Sbom(s) => Some(s.components.clone()),
                        _ => None,
                    },
                    None => None,
                }),
                _ => None,
            };
            LineageEntry {
                kind: Some(env.kind()),
                missing: false,
                name: env
                    .payload
                    .display_name()
                    .map(str::to_owned)
                    .or_else(|| Some(env.version.name.clone())),
                version: Some(env.version.clone()),
                issuer: Some(env.issuer.value.clone()),
                issued_at: Some(env.issued_at),
                digest: env.payload.content().map(|c| c.root.clone()),
                license: env.payload.license().map(|l| l.identifier.clone()),
                location: env.payload.location().map(str::to_owned),
                components,
                references: outgoing(&env.payload)
                    .into_iter()
                    .map(|(role, id)| LineageRef {
                        role,
                        id: id.clone(),
                    })
                    .collect(),
                id,
            }
        })
        .collect();
    Ok(Lineage {
        target: target.clone(),
        entries,
        edges: graph.edges,
    })
}
