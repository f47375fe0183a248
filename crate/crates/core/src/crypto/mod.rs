// SPDX-License-Identifier: Apache-2.0

//! Hashing, Merkle construction over blobs and directory trees, sampled
//! integrity proofs, and detached ed25519 signatures.

mod keys;
mod merkle;
mod sampling;

pub use keys::{keygen, sign, verify_sig, KeyPair, PublicKey, ED25519};
pub use merkle::{
    merkle_blob, merkle_file, merkle_path, merkle_tree, MerkleRoot, DEFAULT_CHUNK_SIZE,
    MERKLE_SCHEME, MIN_CHUNK_SIZE,
};
pub use sampling::{
    sample_count, sample_indices, sampled_proof, sampled_verify, Fraction, SampledProof,
};

use sha2::{Digest as _, Sha256};

use crate::model::Digest;

/// Fails with [`Error::UnsupportedScheme`](crate::Error::UnsupportedScheme)
/// for anything but ed25519.
pub fn verify_scheme(scheme: &str) -> crate::Result<()> {
    if scheme == ED25519 {
        Ok(())
    } else {
        Err(crate::Error::UnsupportedScheme(scheme.to_owned()))
    }
}

/// SHA-256 of `content`.
pub fn hash_bytes(content: &[u8]) -> Digest {
    Digest::sha256(sha256(content))
}

pub(crate) fn sha256(content: &[u8]) -> [u8; 32] {
    Sha256::digest(content).into()
}
