// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttestationId, Digest, Timestamp};
use crate::crypto::MerkleRoot;

/// Attestation kind. `validation-report` and `revocation` extend the core
/// artifact classes with the QA phase and trust recall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Data,
    TrainingData,
    DataPack,
    Code,
    Sbom,
    Weights,
    Config,
    TrainedSystem,
    InferenceSystem,
    ValidationReport,
    Revocation,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::Data,
        Kind::TrainingData,
        Kind::DataPack,
        Kind::Code,
        Kind::Sbom,
        Kind::Weights,
        Kind::Config,
        Kind::TrainedSystem,
        Kind::InferenceSystem,
        Kind::ValidationReport,
        Kind::Revocation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Data => "data",
            Kind::TrainingData => "training-data",
            Kind::DataPack => "data-pack",
            Kind::Code => "code",
            Kind::Sbom => "sbom",
            Kind::Weights => "weights",
            Kind::Config => "config",
            Kind::TrainedSystem => "trained-system",
            Kind::InferenceSystem => "inference-system",
            Kind::ValidationReport => "validation-report",
            Kind::Revocation => "revocation",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Kind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| crate::Error::Format(format!("unknown kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub name: String,
    pub semver: String,
    pub counter: u64,
}

impl VersionInfo {
    pub fn new(name: impl Into<String>, semver: impl Into<String>, counter: u64) -> Self {
        VersionInfo {
            name: name.into(),
            semver: semver.into(),
            counter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseInfo {
    pub identifier: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_digest: Option<Digest>,
}

impl LicenseInfo {
    pub fn new(identifier: impl Into<String>) -> Self {
        LicenseInfo {
            identifier: identifier.into(),
            text_digest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPayload {
    pub name: String,
    pub label: String,
    pub location: String,
    pub content: MerkleRoot,
    pub byte_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<LicenseInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataRole {
    Train,
    Validation,
    Test,
    Refinement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingDataPayload {
    #[serde(flatten)]
    pub data: DataPayload,
    pub collection_method: String,
    pub intended_role: DataRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackMember {
    pub member_name: String,
    pub attestation_id: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPackPayload {
    pub members: Vec<PackMember>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeRole {
    Training,
    Inferencing,
    Other,
}

impl fmt::Display for CodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeRole::Training => "training",
            CodeRole::Inferencing => "inferencing",
            CodeRole::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodePayload {
    pub name: String,
    pub location: String,
    pub content: MerkleRoot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbom_ref: Option<AttestationId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<LicenseInfo>,
    pub code_role: CodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SbomFormat {
    SpdxJson,
    CyclonedxJson,
    Native,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbomComponent {
    pub name: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<LicenseInfo>,
    #[serde(default)]
    pub declared_cves: Vec<String>,
    #[serde(default)]
    pub declared_cwes: Vec<String>,
}

impl SbomComponent {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> Self {
        SbomComponent {
            name: name.into(),
            version: version.into(),
            purl: None,
            cpe: None,
            license: None,
            declared_cves: Vec::new(),
            declared_cwes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbomPayload {
    pub source_format: SbomFormat,
    pub document_digest: Digest,
    pub components: Vec<SbomComponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightsPayload {
    #[serde(flatten)]
    pub data: DataPayload,
    pub produced_by: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigPayload {
    pub weights_ref: AttestationId,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, String>,
    #[serde(default)]
    pub system_metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainedSystemPayload {
    pub label: String,
    pub datapack_ref: AttestationId,
    pub training_code_ref: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceSystemPayload {
    pub label: String,
    pub config_ref: AttestationId,
    pub inferencing_code_ref: AttestationId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationVerdict {
    Pass,
    Fail,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReportPayload {
    pub system_ref: AttestationId,
    pub report_digest: Digest,
    pub verdict: ValidationVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationPayload {
    pub target: AttestationId,
    pub reason: String,
    pub revoked_at: Timestamp,
}

/// Kind-specific body of an envelope. The variant determines the kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Data(DataPayload),
    TrainingData(TrainingDataPayload),
    DataPack(DataPackPayload),
    Code(CodePayload),
    Sbom(SbomPayload),
    Weights(WeightsPayload),
    Config(ConfigPayload),
    TrainedSystem(TrainedSystemPayload),
    InferenceSystem(InferenceSystemPayload),
    ValidationReport(ValidationReportPayload),
    Revocation(RevocationPayload),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Data(_) => Kind::Data,
            Payload::TrainingData(_) => Kind::TrainingData,
            Payload::DataPack(_) => Kind::DataPack,
            Payload::Code(_) => Kind::Code,
            Payload::Sbom(_) => Kind::Sbom,
            Payload::Weights(_) => Kind::Weights,
            Payload::Config(_) => Kind::Config,
            Payload::TrainedSystem(_) => Kind::TrainedSystem,
            Payload::InferenceSystem(_) => Kind::InferenceSystem,
            Payload::ValidationReport(_) => Kind::ValidationReport,
            Payload::Revocation(_) => Kind::Revocation,
        }
    }

    pub(crate) fn to_value(&self) -> serde_json::Result<serde_json::Value> {
        match self {
            Payload::Data(p) => serde_json::to_value(p),
            Payload::TrainingData(p) => serde_json::to_value(p),
            Payload::DataPack(p) => serde_json::to_value(p),
            Payload::Code(p) => serde_json::to_value(p),
            Payload::Sbom(p) => serde_json::to_value(p),
            Payload::Weights(p) => serde_json::to_value(p),
            Payload::Config(p) => serde_json::to_value(p),
            Payload::TrainedSystem(p) => serde_json::to_value(p),
            Payload::InferenceSystem(p) => serde_json::to_value(p),
            Payload::ValidationReport(p) => serde_json::to_value(p),
            Payload::Revocation(p) => serde_json::to_value(p),
        }
    }

    pub(crate) fn from_value(kind: Kind, v: serde_json::Value) -> serde_json::Result<Self> {
        use serde_json::from_value as de;
        Ok(match kind {
            Kind::Data => Payload::Data(de(v)?),
            Kind::TrainingData => Payload::TrainingData(de(v)?),
            Kind::DataPack => Payload::DataPack(de(v)?),
            Kind::Code => Payload::Code(de(v)?),
            Kind::Sbom => Payload::Sbom(de(v)?),
            Kind::Weights => Payload::Weights(de(v)?),
            Kind::Config => Payload::Config(de(v)?),
            Kind::TrainedSystem => Payload::TrainedSystem(de(v)?),
            Kind::InferenceSystem => Payload::InferenceSystem(de(v)?),
            Kind::ValidationReport => Payload::ValidationReport(de(v)?),
            Kind::Revocation => Payload::Revocation(de(v)?),
        })
    }

    /// Attestation references carried by the payload, as `(field, id)` in
    /// field order. Pack members are named `members[i]`.
    pub fn references(&self) -> Vec<(String, &AttestationId)> {
        match self {
            Payload::DataPack(p) => p
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| (format!("members[{i}].attestation_id"), &m.attestation_id))
                .collect(),
            Payload::Code(p) => p
                .sbom_ref
                .iter()
                .map(|r| ("sbom_ref".to_owned(), r))
                .collect(),
            Payload::Weights(p) => vec![("produced_by".into(), &p.produced_by)],
            Payload::Config(p) => vec![("weights_ref".into(), &p.weights_ref)],
            Payload::TrainedSystem(p) => vec![
                ("datapack_ref".into(), &p.datapack_ref),
                ("training_code_ref".into(), &p.training_code_ref),
            ],
            Payload::InferenceSystem(p) => vec![
                ("config_ref".into(), &p.config_ref),
                ("inferencing_code_ref".into(), &p.inferencing_code_ref),
            ],
            Payload::ValidationReport(p) => vec![("system_ref".into(), &p.system_ref)],
            Payload::Data(_)
            | Payload::TrainingData(_)
            | Payload::Sbom(_)
            | Payload::Revocation(_) => Vec::new(),
        }
    }

    /// Shared data fields of data, training-data and weights payloads.
    pub fn data(&self) -> Option<&DataPayload> {
        match self {
            Payload::Data(d) => Some(d),
            Payload::TrainingData(t) => Some(&t.data),
            Payload::Weights(w) => Some(&w.data),
            _ => None,
        }
    }

    /// Content root of payloads that describe artifact bytes.
    pub fn content(&self) -> Option<&MerkleRoot> {
        match self {
            Payload::Code(c) => Some(&c.content),
            other => other.data().map(|d| &d.content),
        }
    }

    /// Artifact location URI, for payloads with content.
    pub fn location(&self) -> Option<&str> {
        match self {
            Payload::Code(c) => Some(&c.location),
            other => other.data().map(|d| d.location.as_str()),
        }
    }

    /// Human name of the described artifact, when the payload has one.
    pub fn display_name(&self) -> Option<&str> {
        match self {
            Payload::Code(c) => Some(&c.name),
            Payload::TrainedSystem(t) => Some(&t.label),
            Payload::InferenceSystem(i) => Some(&i.label),
            other => other.data().map(|d| d.name.as_str()),
        }
    }

    pub fn license(&self) -> Option<&LicenseInfo> {
        match self {
            Payload::Code(c) => c.license.as_ref(),
            other => other.data().and_then(|d| d.license.as_ref()),
        }
    }
}
