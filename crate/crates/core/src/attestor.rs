// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use crate::crypto::KeyPair;
use crate::error::Result;
use crate::model::{AttestationId, Envelope, Payload, Timestamp, VersionInfo};
use crate::store::Store;

/// A signing key plus the clock used for `issued_at`.
#[derive(Debug, Clone)]
pub struct Attestor {
    keypair: KeyPair,
    fixed_time: Option<Timestamp>,
}

impl Attestor {
    pub fn new(keypair: KeyPair) -> Self {
        Attestor {
            keypair,
            fixed_time: None,
        }
    }

    /// Stamps every envelope with `at` instead of the wall clock.
    pub fn with_fixed_time(mut self, at: Timestamp) -> Self {
        self.fixed_time = Some(at);
        self
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn now(&self) -> Timestamp {
        self.fixed_time.unwrap_or_else(Timestamp::now)
    }

    pub fn seal(&self, payload: Payload, version: VersionInfo) -> Result<Envelope> {
        Envelope::seal(payload, version, &self.keypair, self.now())
    }

    /// Seals, annotates and stores an envelope. The signer's public key is
    /// registered with the store (but not trusted).
    pub fn publish(
        &self,
        store: &Store,
        payload: Payload,
        version: VersionInfo,
        annotations: BTreeMap<String, String>,
    ) -> Result<AttestationId> {
        let mut env = self.seal(payload, version)?;
        env.annotations = annotations;
        self.publish_sealed(store, &env)
    }

    pub fn publish_sealed(&self, store: &Store, env: &Envelope) -> Result<AttestationId> {
        store.register_key(&self.keypair.public())?;
        store.put(env)
    }
}
