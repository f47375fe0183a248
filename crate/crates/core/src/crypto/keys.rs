// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use serde::{Deserialize, Serialize};

use crate::crypto::hash_bytes;
use crate::error::{Error, Result};
use crate::model::Digest;

pub const ED25519: &str = "ed25519";

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub scheme: String,
    pub public_bytes: Vec<u8>,
    pub secret_bytes: Vec<u8>,
    pub fingerprint: Digest,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("scheme", &self.scheme)
            .field("fingerprint", &self.fingerprint.value)
            .finish_non_exhaustive()
    }
}

/// Generates a fresh key pair from the OS random source.
pub fn keygen(scheme: &str) -> Result<KeyPair> {
    match scheme {
        ED25519 => {
            let sk = SigningKey::generate(&mut rand_core::OsRng);
            Ok(KeyPair::from_signing_key(&sk))
        }
        other => Err(Error::UnsupportedScheme(other.to_owned())),
    }
}

impl KeyPair {
    fn from_signing_key(sk: &SigningKey) -> Self {
        let public_bytes = sk.verifying_key().to_bytes().to_vec();
        KeyPair {
            scheme: ED25519.to_owned(),
            fingerprint: hash_bytes(&public_bytes),
            public_bytes,
            secret_bytes: sk.to_bytes().to_vec(),
        }
    }

    /// Rebuilds a key pair from its secret half.
    pub fn from_secret(scheme: &str, secret: &[u8]) -> Result<Self> {
        if scheme != ED25519 {
            return Err(Error::UnsupportedScheme(scheme.to_owned()));
        }
        let seed: [u8; 32] = secret
            .try_into()
            .map_err(|_| Error::Format("ed25519 secret key must be 32 bytes".into()))?;
        Ok(Self::from_signing_key(&SigningKey::from_bytes(&seed)))
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            scheme: self.scheme.clone(),
            public_bytes: self.public_bytes.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = KeyFile {
            scheme: self.scheme.clone(),
            public_key: B64.encode(&self.public_bytes),
            secret_key: Some(B64.encode(&self.secret_bytes)),
        };
        serde_json::to_string_pretty(&file).expect("key file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: KeyFile = serde_json::from_str(text)?;
        let secret = file
            .secret_key
            .ok_or_else(|| Error::Format("key file has no secret_key".into()))?;
        let secret = B64
            .decode(secret)
            .map_err(|e| Error::Format(format!("secret_key: {e}")))?;
        let kp = Self::from_secret(&file.scheme, &secret)?;
        if B64.encode(&kp.public_bytes) != file.public_key {
            return Err(Error::Format(
                "public_key does not match secret_key".into(),
            ));
        }
        Ok(kp)
    }
}

/// The public half of a key pair, as persisted in a store's `keys/` directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub scheme: String,
    pub public_bytes: Vec<u8>,
}

impl PublicKey {
    pub fn fingerprint(&self) -> Digest {
        hash_bytes(&self.public_bytes)
    }

    pub fn to_json(&self) -> String {
        let file = KeyFile {
            scheme: self.scheme.clone(),
            public_key: B64.encode(&self.public_bytes),
            secret_key: None,
        };
        serde_json::to_string_pretty(&file).expect("key file serializes")
    }

    /// Reads either a public key file or a full key pair file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: KeyFile = serde_json::from_str(text)?;
        let public_bytes = B64
            .decode(&file.public_key)
            .map_err(|e| Error::Format(format!("public_key: {e}")))?;
        Ok(PublicKey {
            scheme: file.scheme,
            public_bytes,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    scheme: String,
    public_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    secret_key: Option<String>,
}

/// Detached signature over `bytes`.
pub fn sign(bytes: &[u8], keypair: &KeyPair) -> Result<Vec<u8>> {
    match keypair.scheme.as_str() {
        ED25519 => {
            let seed: [u8; 32] = keypair
                .secret_bytes
                .as_slice()
                .try_into()
                .map_err(|_| Error::Format("ed25519 secret key must be 32 bytes".into()))?;
            let sk = SigningKey::from_bytes(&seed);
            Ok(sk.sign(bytes).to_bytes().to_vec())
        }
        other => Err(Error::UnsupportedScheme(other.to_owned())),
    }
}

/// Checks a detached signature. Malformed keys or signatures verify as false.
pub fn verify_sig(bytes: &[u8], signature: &[u8], public_bytes: &[u8], scheme: &str) -> bool {
    if scheme != ED25519 {
        return false;
    }
    let Ok(pk_bytes) = <[u8; 32]>::try_from(public_bytes) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&pk_bytes) else {
        return false;
    };
    let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
        return false;
    };
    vk.verify(bytes, &sig).is_ok()
}
