// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{canonicalize, AttestationId, Digest, Kind, Payload, Timestamp, VersionInfo};
use crate::crypto::{self, KeyPair, PublicKey};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "taibom/1";

/// Unsigned annotation: where the artifact lives locally, relative to a
/// verification root or absolute.
pub const ANNOTATION_PATH_HINT: &str = "local_path_hint";
/// Unsigned annotation: when the artifact was last read.
pub const ANNOTATION_LAST_ACCESS: &str = "last_access_time";

/// A signed, versioned statement about one artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub payload: Payload,
    pub version: VersionInfo,
    /// Fingerprint of the signing public key.
    pub issuer: Digest,
    pub issued_at: Timestamp,
    /// Base64 detached signature over [`canonicalize`]d bytes.
    pub signature: Option<String>,
    /// Mutable metadata outside the signature.
    pub annotations: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    schema_version: String,
    kind: Kind,
    payload: Value,
    version: VersionInfo,
    issuer: Digest,
    issued_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signature: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, String>,
}

impl Envelope {
    pub fn new(payload: Payload, version: VersionInfo, issuer: Digest, issued_at: Timestamp) -> Self {
        Envelope {
            payload,
            version,
            issuer,
            issued_at,
            signature: None,
            annotations: BTreeMap::new(),
        }
    }

    /// Builds and signs an envelope with `keypair` as issuer.
    pub fn seal(
        payload: Payload,
        version: VersionInfo,
        keypair: &KeyPair,
        issued_at: Timestamp,
    ) -> Result<Self> {
        let mut env = Envelope::new(payload, version, keypair.fingerprint.clone(), issued_at);
        env.sign_with(keypair)?;
        Ok(env)
    }

    pub fn sign_with(&mut self, keypair: &KeyPair) -> Result<()> {
        if keypair.fingerprint != self.issuer {
            return Err(Error::Authorization(format!(
                "key {} is not the envelope issuer {}",
                keypair.fingerprint.value, self.issuer.value
            )));
        }
        let bytes = canonicalize(self)?;
        self.signature = Some(B64.encode(crypto::sign(&bytes, keypair)?));
        Ok(())
    }

    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }

    pub fn id(&self) -> Result<AttestationId> {
        attestation_id(self)
    }

    /// True iff the signature decodes and verifies against `key`, and `key`
    /// is the issuer.
    pub fn verify_signature(&self, key: &PublicKey) -> bool {
        if key.fingerprint() != self.issuer {
            return false;
        }
        let Some(sig) = self.signature.as_deref() else {
            return false;
        };
        let Ok(sig) = B64.decode(sig) else {
            return false;
        };
        let Ok(bytes) = canonicalize(self) else {
            return false;
        };
        crypto::verify_sig(&bytes, &sig, &key.public_bytes, &key.scheme)
    }

    pub fn annotate(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.annotations.insert(key.into(), value.into());
    }

    fn to_wire(&self) -> Result<Wire> {
        Ok(Wire {
            schema_version: SCHEMA_VERSION.to_owned(),
            kind: self.kind(),
            payload: self.payload.to_value()?,
            version: self.version.clone(),
            issuer: self.issuer.clone(),
            issued_at: self.issued_at,
            signature: self.signature.clone(),
            annotations: self.annotations.clone(),
        })
    }

    /// JSON of the signed fields only.
    pub(crate) fn signed_value(&self) -> Result<Value> {
        let mut wire = self.to_wire()?;
        wire.signature = None;
        wire.annotations.clear();
        Ok(serde_json::to_value(wire)?)
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self.to_wire()?)?)
    }

    /// Pretty-printed on-disk form.
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_wire()?)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let wire: Wire = serde_json::from_value(value)?;
        Self::from_wire(wire)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let wire: Wire = serde_json::from_slice(bytes)?;
        Self::from_wire(wire)
    }

    fn from_wire(wire: Wire) -> Result<Self> {
        if wire.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(wire.schema_version));
        }
        let payload = Payload::from_value(wire.kind, wire.payload)
            .map_err(|e| Error::Format(format!("{} payload: {e}", wire.kind)))?;
        Ok(Envelope {
            payload,
            version: wire.version,
            issuer: wire.issuer,
            issued_at: wire.issued_at,
            signature: wire.signature,
            annotations: wire.annotations,
        })
    }
}

/// Content-addressed id: sha-256 of the canonical signed bytes.
pub fn attestation_id(envelope: &Envelope) -> Result<AttestationId> {
    let bytes = canonicalize(envelope)?;
    Ok(AttestationId::from(&crypto::hash_bytes(&bytes)))
}
