// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{build_graph, revoked_set, GraphNode, TrustEdge, TrustGraph};
use crate::crypto::merkle_path;
use crate::error::Result;
use crate::model::{validate_payload, AttestationId, Envelope, Kind, Problem, ANNOTATION_PATH_HINT};
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    FailSignature,
    FailDigest,
    Revoked,
    RevokedDependency,
    MissingRef,
    UntrustedKey,
    Structural,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::FailSignature => "FAIL_SIGNATURE",
            Status::FailDigest => "FAIL_DIGEST",
            Status::Revoked => "REVOKED",
            Status::RevokedDependency => "REVOKED_DEPENDENCY",
            Status::MissingRef => "MISSING_REF",
            Status::UntrustedKey => "UNTRUSTED_KEY",
            Status::Structural => "STRUCTURAL",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeReport {
    pub id: AttestationId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// A validation report hanging off a system in the chain. Its status is
    /// shown but does not decide the verdict, since nothing depends on it.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub attached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailurePath {
    pub node: AttestationId,
    pub status: Status,
    /// Ids from the target down to `node`, inclusive.
    pub path: Vec<AttestationId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub target_id: AttestationId,
    pub verdict: Verdict,
    pub nodes: Vec<NodeReport>,
    pub edges: Vec<TrustEdge>,
    pub failure_paths: Vec<FailurePath>,
}

impl VerificationReport {
    pub fn status_of(&self, id: &AttestationId) -> Option<Status> {
        self.nodes.iter().find(|n| &n.id == id).map(|n| n.status)
    }

    /// Chain nodes whose status is not PASS.
    pub fn failures(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| n.status != Status::Pass && !n.attached)
    }
}

/// Resolves where the artifact behind `env` lives on disk, if anywhere:
/// the unsigned path hint (relative hints are joined to `root`), else a
/// `file:` location.
pub(crate) fn artifact_path(env: &Envelope, root: &Path) -> Option<PathBuf> {
    if let Some(hint) = env.annotations.get(ANNOTATION_PATH_HINT) {
        let p = Path::new(hint);
        return Some(if p.is_absolute() { p.to_path_buf() } else { root.join(p) });
    }
    let location = env.payload.location()?;
    let url = url::Url::parse(location).ok()?;
    if url.scheme() != "file" {
        return None;
    }
    url.to_file_path().ok()
}

/// Recomputes the content root of `env`'s artifact under `root`.
/// `None` when the payload has no content or no locatable artifact.
pub(crate) fn rehash_check(env: &Envelope, root: &Path) -> Option<std::result::Result<(), String>> {
    let content = env.payload.content()?;
    let path = artifact_path(env, root)?;
    if !path.exists() {
        return Some(Err(format!("artifact {} is missing", path.display())));
    }
    let now = match merkle_path(&path, content.chunk_size) {
        Ok(m) => m,
        Err(e) => return Some(Err(e.to_string())),
    };
    if now.root != content.root || now.leaf_count != content.leaf_count {
        return Some(Err(format!(
            "{} hashes to {}, attested {}",
            path.display(),
            now.root.value,
            content.root.value
        )));
    }
    if let Some(d) = env.payload.data() {
        let actual = byte_count(&path);
        if actual != Some(d.byte_count) {
            return Some(Err(format!(
                "{} holds {} bytes, attested {}",
                path.display(),
                actual.map_or("?".into(), |n| n.to_string()),
                d.byte_count
            )));
        }
    }
    Some(Ok(()))
}

pub(crate) fn byte_count(path: &Path) -> Option<u64> {
    let meta = std::fs::metadata(path).ok()?;
    if !meta.is_dir() {
        return Some(meta.len());
    }
    let mut total = 0;
    for entry in walkdir::WalkDir::new(path).follow_links(false) {
        let entry = entry.ok()?;
        if entry.file_type().is_file() {
            total += entry.metadata().ok()?.len();
        }
    }
    Some(total)
}

/// Verifies every node of the provenance graph under `target`.
///
/// Per node, the first failing check wins: signature, issuer trust,
/// revocation of the node, revocation of anything it depends on,
/// structural validity, and (when `rehash` is given) artifact content.
pub fn verify_chain(
    target: &AttestationId,
    store: &Store,
    rehash: Option<&Path>,
) -> Result<VerificationReport> {
    let graph = build_graph(target, store)?;
    let revoked = revoked_set(store)?;
    let tainted = depends_on_any(&graph, &revoked);

    let resolve = |id: &AttestationId| graph.envelope(id).cloned();
    let mut statuses: BTreeMap<AttestationId, (Status, Option<String>)> = BTreeMap::new();
    for (id, node) in &graph.nodes {
        let verdict = match node {
            GraphNode::Missing => (Status::MissingRef, None),
            GraphNode::Unreadable(msg) => (Status::FailDigest, Some(msg.clone())),
            GraphNode::Present {
                envelope,
                recomputed,
            } => check_node(id, envelope, recomputed, store, &revoked, &tainted, &resolve, rehash)?,
        };
        statuses.insert(id.clone(), verdict);
    }

    let paths = graph.paths_from_target();
    let chain = graph.dependencies();
    let mut nodes = Vec::with_capacity(graph.nodes.len());
    let mut failure_paths = Vec::new();
    for id in graph.topological_order() {
        let env = graph.envelope(&id);
        let (status, detail) = statuses.remove(&id).expect("every node has a status");
        let attached = !chain.contains(&id);
        if status != Status::Pass && !attached {
            failure_paths.push(FailurePath {
                node: id.clone(),
                status,
                path: paths.get(&id).cloned().unwrap_or_else(|| vec![id.clone()]),
            });
        }
        nodes.push(NodeReport {
            kind: env.map(|e| e.kind()),
            name: env.and_then(|e| e.payload.display_name().map(str::to_owned)),
            id,
            status,
            detail,
            attached,
        });
    }
    let verdict = if failure_paths.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(VerificationReport {
        target_id: target.clone(),
        verdict,
        nodes,
        edges: graph.edges,
        failure_paths,
    })
}

#[allow(clippy::too_many_arguments)]
fn check_node<R>(
    id: &AttestationId,
    env: &Envelope,
    recomputed: &AttestationId,
    store: &Store,
    revoked: &BTreeSet<AttestationId>,
    tainted: &BTreeSet<AttestationId>,
    resolve: &R,
    rehash: Option<&Path>,
) -> Result<(Status, Option<String>)>
where
    R: Fn(&AttestationId) -> Option<Envelope>,
{
    let Some(key) = store.public_key(&env.issuer)? else {
        return Ok((
            Status::UntrustedKey,
            Some(format!("issuer key {} is unknown", env.issuer.value)),
        ));
    };
    if !env.verify_signature(&key) {
        return Ok((Status::FailSignature, None));
    }
    if recomputed != id {
        return Ok((
            Status::FailDigest,
            Some(format!("stored object hashes to {recomputed}")),
        ));
    }
    if !store.is_trusted(&env.issuer) {
        return Ok((
            Status::UntrustedKey,
            Some(format!("issuer {} is not trusted", env.issuer.value)),
        ));
    }
    if revoked.contains(id) {
        return Ok((Status::Revoked, None));
    }
    if tainted.contains(id) {
        return Ok((Status::RevokedDependency, None));
    }
    let violations: Vec<String> = validate_payload(env, resolve)
        .into_iter()
        .filter(|v| v.problem != Problem::Unresolved)
        .map(|v| v.to_string())
        .collect();
    if !violations.is_empty() {
        return Ok((Status::Structural, Some(violations.join("; "))));
    }
    if let Some(root) = rehash {
        if let Some(Err(msg)) = rehash_check(env, root) {
            return Ok((Status::FailDigest, Some(msg)));
        }
    }
    Ok((Status::Pass, None))
}

/// Nodes that transitively reference (but are not) a member of `revoked`.
fn depends_on_any(graph: &TrustGraph, revoked: &BTreeSet<AttestationId>) -> BTreeSet<AttestationId> {
    let mut referrers: HashMap<&AttestationId, Vec<&AttestationId>> = HashMap::new();
    for e in &graph.edges {
        referrers.entry(&e.to_id).or_default().push(&e.from_id);
    }
    let mut seen: BTreeSet<AttestationId> = BTreeSet::new();
    let mut queue: VecDeque<&AttestationId> =
        graph.nodes.keys().filter(|id| revoked.contains(*id)).collect();
    while let Some(n) = queue.pop_front() {
        for r in referrers.get(n).into_iter().flatten() {
            if seen.insert((*r).clone()) {
                queue.push_back(r);
            }
        }
    }
    seen.retain(|id| !revoked.contains(id));
    seen
}
