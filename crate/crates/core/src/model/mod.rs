// SPDX-License-Identifier: Apache-2.0

//! Attestation payloads, the signed envelope that carries them, and the
//! canonical byte form that ids and signatures are computed over.

mod canonical;
mod digest;
mod envelope;
mod payload;
mod time;
mod validate;

pub use canonical::{canonical_json, canonicalize};
pub use digest::{AttestationId, Digest, SHA256};
pub use envelope::{attestation_id, Envelope, ANNOTATION_LAST_ACCESS, ANNOTATION_PATH_HINT, SCHEMA_VERSION};
pub use payload::{
    CodePayload, CodeRole, ConfigPayload, DataPackPayload, DataPayload, DataRole,
    InferenceSystemPayload, Kind, LicenseInfo, PackMember, Payload, RevocationPayload,
    SbomComponent, SbomFormat, SbomPayload, TrainedSystemPayload, TrainingDataPayload,
    ValidationReportPayload, ValidationVerdict, VersionInfo, WeightsPayload,
};
pub use time::Timestamp;
pub use validate::{is_cve_id, is_cwe_id, parse_semver, validate_payload, Problem, Violation};

pub(crate) use digest::is_sha256_hex;
