// SPDX-License-Identifier: Apache-2.0

//! The provenance DAG reconstructed from attestation references.
//!
//! References always point from a derived artifact to its source, so
//! walking outgoing edges from a deployed system traces back to the data
//! and code it was built from.

mod lineage;
mod revoke;
pub(crate) mod verify;

pub use lineage::{trace_lineage, Lineage, LineageEntry, LineageRef};
pub use revoke::{revoke, revoked_set};
pub use verify::{verify_chain, FailurePath, NodeReport, Status, Verdict, VerificationReport};

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttestationId, Envelope, Kind, Payload};
use crate::store::{Filter, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRole {
    MemberOfPack,
    TrainsOn,
    BuildsWith,
    Produces,
    PackagedIn,
    DeployedWith,
    Runs,
    DescribesSbom,
    Validates,
}

impl EdgeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeRole::MemberOfPack => "member-of-pack",
            EdgeRole::TrainsOn => "trains-on",
            EdgeRole::BuildsWith => "builds-with",
            EdgeRole::Produces => "produces",
            EdgeRole::PackagedIn => "packaged-in",
            EdgeRole::DeployedWith => "deployed-with",
            EdgeRole::Runs => "runs",
            EdgeRole::DescribesSbom => "describes-sbom",
            EdgeRole::Validates => "validates",
        }
    }
}

impl fmt::Display for EdgeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrustEdge {
    pub from_id: AttestationId,
    pub to_id: AttestationId,
    pub role: EdgeRole,
}

/// Outgoing references of a payload with their edge roles.
pub fn outgoing(payload: &Payload) -> Vec<(EdgeRole, &AttestationId)> {
    match payload {
        Payload::DataPack(p) => p
            .members
            .iter()
            .map(|m| (EdgeRole::MemberOfPack, &m.attestation_id))
            .collect(),
        Payload::TrainedSystem(t) => vec![
            (EdgeRole::TrainsOn, &t.datapack_ref),
            (EdgeRole::BuildsWith, &t.training_code_ref),
        ],
        Payload::Weights(w) => vec![(EdgeRole::Produces, &w.produced_by)],
        Payload::Config(c) => vec![(EdgeRole::PackagedIn, &c.weights_ref)],
        Payload::InferenceSystem(i) => vec![
            (EdgeRole::DeployedWith, &i.config_ref),
            (EdgeRole::Runs, &i.inferencing_code_ref),
        ],
        Payload::Code(c) => c
            .sbom_ref
            .iter()
            .map(|r| (EdgeRole::DescribesSbom, r))
            .collect(),
        Payload::ValidationReport(v) => vec![(EdgeRole::Validates, &v.system_ref)],
        Payload::Data(_) | Payload::TrainingData(_) | Payload::Sbom(_) | Payload::Revocation(_) => {
            Vec::new()
        }
    }
}

/// A node of a [`TrustGraph`].
#[derive(Debug, Clone)]
pub enum GraphNode {
    /// Read from the store; `recomputed` is the id its current content hashes to.
    Present {
        envelope: Box<Envelope>,
        recomputed: AttestationId,
    },
    /// Referenced but not in the store.
    Missing,
    /// Present on disk but not parseable.
    Unreadable(String),
}

impl GraphNode {
    pub fn envelope(&self) -> Option<&Envelope> {
        match self {
            GraphNode::Present { envelope, .. } => Some(envelope),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrustGraph {
    pub target: AttestationId,
    pub nodes: BTreeMap<AttestationId, GraphNode>,
    /// Sorted and deduplicated.
    pub edges: Vec<TrustEdge>,
}

impl TrustGraph {
    pub fn envelope(&self, id: &AttestationId) -> Option<&Envelope> {
        self.nodes.get(id).and_then(GraphNode::envelope)
    }

    /// Node ids with derived artifacts before their sources (Kahn's
    /// algorithm, ties broken by id).
    pub fn topological_order(&self) -> Vec<AttestationId> {
        let mut indegree: BTreeMap<&AttestationId, usize> =
            self.nodes.keys().map(|k| (k, 0)).collect();
        let mut succ: HashMap<&AttestationId, Vec<&AttestationId>> = HashMap::new();
        for e in &self.edges {
            *indegree.get_mut(&e.to_id).expect("edge endpoints are nodes") += 1;
            succ.entry(&e.from_id).or_default().push(&e.to_id);
        }
        let mut ready: BTreeSet<&AttestationId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            out.push(n.clone());
            for s in succ.get(n).into_iter().flatten() {
                let d = indegree.get_mut(s).expect("edge endpoints are nodes");
                *d -= 1;
                if *d == 0 {
                    ready.insert(s);
                }
            }
        }
        out
    }

    /// The target and everything it transitively references. Validation
    /// reports attached to systems are not dependencies.
    pub fn dependencies(&self) -> BTreeSet<AttestationId> {
        let mut adj: BTreeMap<&AttestationId, Vec<&AttestationId>> = BTreeMap::new();
        for e in &self.edges {
            adj.entry(&e.from_id).or_default().push(&e.to_id);
        }
        let mut seen = BTreeSet::from([self.target.clone()]);
        let mut stack = vec![&self.target];
        while let Some(n) = stack.pop() {
            for m in adj.get(n).into_iter().flatten() {
                if seen.insert((*m).clone()) {
                    stack.push(m);
                }
            }
        }
        seen
    }

    /// Shortest reference path from the target to each reachable node.
    /// Validation reports hang off the system they validate.
    pub fn paths_from_target(&self) -> BTreeMap<AttestationId, Vec<AttestationId>> {
        let mut adj: BTreeMap<&AttestationId, BTreeSet<&AttestationId>> = BTreeMap::new();
        for e in &self.edges {
            if e.role == EdgeRole::Validates {
                adj.entry(&e.to_id).or_default().insert(&e.from_id);
            } else {
                adj.entry(&e.from_id).or_default().insert(&e.to_id);
            }
        }
        let mut paths = BTreeMap::new();
        paths.insert(self.target.clone(), vec![self.target.clone()]);
        let mut queue = VecDeque::from([&self.target]);
        while let Some(n) = queue.pop_front() {
            let base = paths[n].clone();
            for m in adj.get(n).into_iter().flatten() {
                if !paths.contains_key(*m) {
                    let mut p = base.clone();
                    p.push((*m).clone());
                    paths.insert((*m).clone(), p);
                    queue.push_back(m);
                }
            }
        }
        paths
    }
}

/// Transitive closure of references from `target`, plus the validation
/// reports attached to any system in that closure.
///
/// Dangling references become [`GraphNode::Missing`] nodes. A reference
/// cycle (only possible in a corrupted or adversarial store) is an error.
pub fn build_graph(target: &AttestationId, store: &Store) -> Result<TrustGraph> {
    let mut nodes: BTreeMap<AttestationId, GraphNode> = BTreeMap::new();
    let mut edges: BTreeSet<TrustEdge> = BTreeSet::new();

    let load = |id: &AttestationId| -> Result<GraphNode> {
        match store.get_raw(id) {
            Ok(Some(raw)) => Ok(GraphNode::Present {
                envelope: Box::new(raw.envelope),
                recomputed: raw.recomputed,
            }),
            Ok(None) => Ok(GraphNode::Missing),
            Err(Error::Integrity(msg)) => Ok(GraphNode::Unreadable(msg)),
            Err(e) => Err(e),
        }
    };

    let root = load(target)?;
    if matches!(root, GraphNode::Missing) {
        return Err(Error::NotFound(format!("attestation {target}")));
    }
    nodes.insert(target.clone(), root);

    // Iterative DFS; `open` holds the ids on the current path.
    let mut open: BTreeSet<AttestationId> = BTreeSet::new();
    let mut stack: Vec<(AttestationId, bool)> = vec![(target.clone(), false)];
    let mut done: BTreeSet<AttestationId> = BTreeSet::new();
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            open.remove(&id);
            done.insert(id);
            continue;
        }
        if done.contains(&id) {
            continue;
        }
        open.insert(id.clone());
        stack.push((id.clone(), true));
        let refs: Vec<(EdgeRole, AttestationId)> = nodes[&id]
            .envelope()
            .map(|e| outgoing(&e.payload).into_iter().map(|(r, t)| (r, t.clone())).collect())
            .unwrap_or_default();
        for (role, to) in refs {
            edges.insert(TrustEdge {
                from_id: id.clone(),
                to_id: to.clone(),
                role,
            });
            if open.contains(&to) {
                return Err(Error::Cycle(to));
            }
            if !nodes.contains_key(&to) {
                nodes.insert(to.clone(), load(&to)?);
            }
            if !done.contains(&to) {
                stack.push((to, false));
            }
        }
    }

    let systems: BTreeSet<AttestationId> = nodes
        .iter()
        .filter(|(_, n)| {
            n.envelope()
                .is_some_and(|e| matches!(e.kind(), Kind::TrainedSystem | Kind::InferenceSystem))
        })
        .map(|(id, _)| id.clone())
        .collect();
    if !systems.is_empty() {
        for rid in store.find(&Filter::kind(Kind::ValidationReport))? {
            let node = load(&rid)?;
            let Some(Payload::ValidationReport(v)) = node.envelope().map(|e| &e.payload) else {
                continue;
            };
            if systems.contains(&v.system_ref) {
                edges.insert(TrustEdge {
                    from_id: rid.clone(),
                    to_id: v.system_ref.clone(),
                    role: EdgeRole::Validates,
                });
                nodes.entry(rid).or_insert(node);
            }
        }
    }

    Ok(TrustGraph {
        target: target.clone(),
        nodes,
        edges: edges.into_iter().collect(),
    })
}
