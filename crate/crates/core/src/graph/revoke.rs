// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::crypto::KeyPair;
use crate::error::{Error, Result};
use crate::model::{AttestationId, Envelope, Payload, RevocationPayload, Timestamp, VersionInfo};
use crate::store::{Filter, Store};

/// Records a signed revocation of `target`.
///
/// The signer must be the target's issuer or hold a trusted key.
pub fn revoke(
    target: &AttestationId,
    reason: &str,
    keypair: &KeyPair,
    store: &Store,
    at: Timestamp,
) -> Result<AttestationId> {
    let raw = store
        .get_raw(target)?
        .ok_or_else(|| Error::NotFound(format!("attestation {target}")))?;
    let signer = &keypair.fingerprint;
    if *signer != raw.envelope.issuer && !store.is_trusted(signer) {
        return Err(Error::Authorization(format!(
            "key {} is neither the issuer of {target} nor trusted",
            signer.value
        )));
    }
    store.register_key(&keypair.public())?;

    let series = format!("revocation:{target}");
    let counter = store
        .find(&Filter {
            issuer: Some(signer.value.clone()),
            name: Some(series.clone()),
            ..Filter::default()
        })?
        .len() as u64
        + 1;
    let payload = Payload::Revocation(RevocationPayload {
        target: target.clone(),
        reason: reason.to_owned(),
        revoked_at: at,
    });
    let env = Envelope::seal(payload, VersionInfo::new(series, "1.0.0", counter), keypair, at)?;
    store.put(&env)
}

/// Ids revoked by a revocation whose signature verifies and whose signer
/// was entitled to revoke: the target's issuer or a trusted key.
pub fn revoked_set(store: &Store) -> Result<BTreeSet<AttestationId>> {
    let mut out = BTreeSet::new();
    for (_, env) in store.revocations()? {
        let Payload::Revocation(r) = &env.payload else { continue };
        let Some(key) = store.public_key(&env.issuer)? else { continue };
        if !env.verify_signature(&key) {
            continue;
        }
        let authorized = store.is_trusted(&env.issuer)
            || store
                .get_raw(&r.target)?
                .is_some_and(|t| t.envelope.issuer == env.issuer);
        if authorized {
            out.insert(r.target.clone());
        }
    }
    Ok(out)
}
