// SPDX-License-Identifier: Apache-2.0

//! Envelope builders shared by unit tests.

use crate::crypto::{KeyPair, MerkleRoot, ED25519, MERKLE_SCHEME};
use crate::model::*;

pub fn key(seed: u8) -> KeyPair {
    KeyPair::from_secret(ED25519, &[seed; 32]).unwrap()
}

pub fn ts(secs: i64) -> Timestamp {
    Timestamp::from_unix(1_750_000_000 + secs).unwrap()
}

pub fn root_of(tag: &str) -> MerkleRoot {
    MerkleRoot {
        root: crate::crypto::hash_bytes(tag.as_bytes()),
        chunk_size: 4096,
        leaf_count: 1,
        scheme: MERKLE_SCHEME.into(),
    }
}

pub fn data_payload(name: &str) -> DataPayload {
    DataPayload {
        name: name.into(),
        label: "tabular".into(),
        location: format!("file:///data/{name}"),
        content: root_of(name),
        byte_count: 10,
        license: Some(LicenseInfo::new("CC-BY-4.0")),
    }
}

pub fn training_data(name: &str) -> Payload {
    Payload::TrainingData(TrainingDataPayload {
        data: data_payload(name),
        collection_method: "crawl".into(),
        intended_role: DataRole::Train,
    })
}

pub fn seal(payload: Payload, name: &str, counter: u64, kp: &KeyPair) -> Envelope {
    Envelope::seal(payload, VersionInfo::new(name, "1.0.0", counter), kp, ts(counter as i64)).unwrap()
}
