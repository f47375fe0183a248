// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{AttestationId, CodeRole, DataPayload, Digest, Envelope, Kind, LicenseInfo, Payload};
use crate::crypto::{MerkleRoot, MERKLE_SCHEME, MIN_CHUNK_SIZE};

/// One failed structural or referential invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub problem: Problem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Problem {
    MalformedDigest,
    MalformedId,
    Unresolved,
    WrongKind { expected: Vec<Kind>, found: Kind },
    WrongCodeRole { expected: CodeRole, found: CodeRole },
    DuplicateMember { name: String },
    BadSemver { value: String },
    InvalidUri { value: String },
    EmptyLicense,
    BadCveId { value: String },
    BadCweId { value: String },
    BadMerkle { reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.field)?;
        match &self.problem {
            Problem::MalformedDigest => f.write_str("malformed digest"),
            Problem::MalformedId => f.write_str("malformed attestation id"),
            Problem::Unresolved => f.write_str("reference does not resolve"),
            Problem::WrongKind { expected, found } => {
                let expected: Vec<_> = expected.iter().map(|k| k.as_str()).collect();
                write!(f, "expected kind {}, found {found}", expected.join(" or "))
            }
            Problem::WrongCodeRole { expected, found } => {
                write!(f, "expected {expected} code, found {found} code")
            }
            Problem::DuplicateMember { name } => write!(f, "duplicate member name {name:?}"),
            Problem::BadSemver { value } => write!(f, "{value:?} is not MAJOR.MINOR.PATCH"),
            Problem::InvalidUri { value } => write!(f, "{value:?} is not a URI"),
            Problem::EmptyLicense => f.write_str("empty license identifier"),
            Problem::BadCveId { value } => write!(f, "{value:?} is not a CVE id"),
            Problem::BadCweId { value } => write!(f, "{value:?} is not a CWE id"),
            Problem::BadMerkle { reason } => f.write_str(reason),
        }
    }
}

/// `MAJOR.MINOR.PATCH` with non-negative decimal components.
pub fn parse_semver(s: &str) -> Option<(u64, u64, u64)> {
    let mut parts = s.split('.');
    let mut next = || -> Option<u64> {
        let p = parts.next()?;
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        p.parse().ok()
    };
    let v = (next()?, next()?, next()?);
    parts.next().is_none().then_some(v)
}

/// `CVE-YYYY-NNNN` with four or more trailing digits.
pub fn is_cve_id(s: &str) -> bool {
    let Some(rest) = s.strip_prefix("CVE-") else {
        return false;
    };
    let Some((year, num)) = rest.split_once('-') else {
        return false;
    };
    year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && num.len() >= 4
        && num.bytes().all(|b| b.is_ascii_digit())
}

pub fn is_cwe_id(s: &str) -> bool {
    s.strip_prefix("CWE-")
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

struct Checker<'a, R> {
    resolve: &'a R,
    out: Vec<Violation>,
}

impl<R> Checker<'_, R>
where
    R: Fn(&AttestationId) -> Option<Envelope>,
{
    fn push(&mut self, field: impl Into<String>, problem: Problem) {
        self.out.push(Violation {
            field: field.into(),
            problem,
        });
    }

    fn digest(&mut self, field: &str, d: &Digest) {
        if !d.is_well_formed() {
            self.push(field, Problem::MalformedDigest);
        }
    }

    fn uri(&mut self, field: &str, s: &str) {
        if url::Url::parse(s).is_err() {
            self.push(field, Problem::InvalidUri { value: s.to_owned() });
        }
    }

    fn license(&mut self, field: &str, l: &Option<LicenseInfo>) {
        if let Some(l) = l {
            if l.identifier.trim().is_empty() {
                self.push(format!("{field}.identifier"), Problem::EmptyLicense);
            }
            if let Some(d) = &l.text_digest {
                self.digest(&format!("{field}.text_digest"), d);
            }
        }
    }

    fn merkle(&mut self, field: &str, m: &MerkleRoot) {
        self.digest(&format!("{field}.root"), &m.root);
        if m.scheme != MERKLE_SCHEME {
            self.push(
                format!("{field}.scheme"),
                Problem::BadMerkle {
                    reason: format!("unknown scheme {:?}", m.scheme),
                },
            );
        }
        if m.chunk_size < MIN_CHUNK_SIZE || !m.chunk_size.is_power_of_two() {
            self.push(
                format!("{field}.chunk_size"),
                Problem::BadMerkle {
                    reason: format!("chunk size {} is not a power of two >= 4096", m.chunk_size),
                },
            );
        }
    }

    fn data(&mut self, prefix: &str, d: &DataPayload) {
        self.uri(&format!("{prefix}location"), &d.location);
        self.merkle(&format!("{prefix}content"), &d.content);
        self.license(&format!("{prefix}license"), &d.license);
    }

    /// Checks that `id` is well formed and resolves to one of `expected`;
    /// returns the resolved envelope when it does.
    fn reference(&mut self, field: &str, id: &AttestationId, expected: &[Kind]) -> Option<Envelope> {
        if !id.is_well_formed() {
            self.push(field, Problem::MalformedId);
            return None;
        }
        let Some(target) = (self.resolve)(id) else {
            self.push(field, Problem::Unresolved);
            return None;
        };
        if !expected.contains(&target.kind()) {
            self.push(
                field,
                Problem::WrongKind {
                    expected: expected.to_vec(),
                    found: target.kind(),
                },
            );
            return None;
        }
        Some(target)
    }

    fn code_ref(&mut self, field: &str, id: &AttestationId, role: CodeRole) {
        if let Some(env) = self.reference(field, id, &[Kind::Code]) {
            if let Payload::Code(code) = &env.payload {
                if code.code_role != role {
                    self.push(
                        field,
                        Problem::WrongCodeRole {
                            expected: role,
                            found: code.code_role,
                        },
                    );
                }
            }
        }
    }
}

/// Every structural and referential invariant violation of `envelope`.
/// An empty result means the envelope is structurally valid.
///
/// `resolve` maps a referenced id to its envelope; references it cannot
/// resolve are reported as [`Problem::Unresolved`].
pub fn validate_payload<R>(envelope: &Envelope, resolve: &R) -> Vec<Violation>
where
    R: Fn(&AttestationId) -> Option<Envelope>,
{
    let mut c = Checker {
        resolve,
        out: Vec::new(),
    };
    if parse_semver(&envelope.version.semver).is_none() {
        c.push(
            "version.semver",
            Problem::BadSemver {
                value: envelope.version.semver.clone(),
            },
        );
    }
    c.digest("issuer", &envelope.issuer);

    match &envelope.payload {
        Payload::Data(d) => c.data("payload.", d),
        Payload::TrainingData(t) => c.data("payload.", &t.data),
        Payload::DataPack(p) => {
            let mut seen = HashSet::new();
            for (i, m) in p.members.iter().enumerate() {
                if !seen.insert(m.member_name.as_str()) {
                    c.push(
                        format!("payload.members[{i}].member_name"),
                        Problem::DuplicateMember {
                            name: m.member_name.clone(),
                        },
                    );
                }
                c.reference(
                    &format!("payload.members[{i}].attestation_id"),
                    &m.attestation_id,
                    &[Kind::TrainingData],
                );
            }
        }
        Payload::Code(code) => {
            c.uri("payload.location", &code.location);
            c.merkle("payload.content", &code.content);
            c.license("payload.license", &code.license);
            if let Some(sbom) = &code.sbom_ref {
                c.reference("payload.sbom_ref", sbom, &[Kind::Sbom]);
            }
        }
        Payload::Sbom(s) => {
            c.digest("payload.document_digest", &s.document_digest);
            for (i, comp) in s.components.iter().enumerate() {
                c.license(&format!("payload.components[{i}].license"), &comp.license);
                for (j, cve) in comp.declared_cves.iter().enumerate() {
                    if !is_cve_id(cve) {
                        c.push(
                            format!("payload.components[{i}].declared_cves[{j}]"),
                            Problem::BadCveId { value: cve.clone() },
                        );
                    }
                }
                for (j, cwe) in comp.declared_cwes.iter().enumerate() {
                    if !is_cwe_id(cwe) {
                        c.push(
                            format!("payload.components[{i}].declared_cwes[{j}]"),
                            Problem::BadCweId { value: cwe.clone() },
                        );
                    }
                }
            }
        }
        Payload::Weights(w) => {
            c.data("payload.", &w.data);
            c.reference("payload.produced_by", &w.produced_by, &[Kind::TrainedSystem]);
        }
        Payload::Config(cfg) => {
            c.reference("payload.weights_ref", &cfg.weights_ref, &[Kind::Weights]);
        }
        Payload::TrainedSystem(t) => {
            c.reference("payload.datapack_ref", &t.datapack_ref, &[Kind::DataPack]);
            c.code_ref("payload.training_code_ref", &t.training_code_ref, CodeRole::Training);
        }
        Payload::InferenceSystem(i) => {
            c.reference("payload.config_ref", &i.config_ref, &[Kind::Config]);
            c.code_ref(
                "payload.inferencing_code_ref",
                &i.inferencing_code_ref,
                CodeRole::Inferencing,
            );
        }
        Payload::ValidationReport(v) => {
            c.reference(
                "payload.system_ref",
                &v.system_ref,
                &[Kind::TrainedSystem, Kind::InferenceSystem],
            );
            c.digest("payload.report_digest", &v.report_digest);
        }
        Payload::Revocation(r) => {
            if !r.target.is_well_formed() {
                c.push("payload.target", Problem::MalformedId);
            }
        }
    }
    c.out
}
