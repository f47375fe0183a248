// SPDX-License-Identifier: Apache-2.0

//! Seed-deterministic sampled integrity proofs.
//!
//! A [`SampledProof`] records the leaf digests of a pseudo-random subset of a
//! Merkle tree's leaves. The subset is a pure function of
//! `(seed, leaf_count, fraction)`, so anyone holding the proof can re-derive
//! which leaves to recheck and confirm the prover did not pick them.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Seek, SeekFrom};
use std::path::Path;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::merkle::{
    self, blob_leaves, check_chunk_size, directory_entries, entry_hash, file_root_raw, leaf_hash,
    read_chunk, MerkleRoot,
};
use crate::error::{Error, Result};
use crate::model::Digest;

const SAMPLER_DOMAIN: &[u8] = b"taibom-sample/1";

/// A rational sampling fraction in `(0, 1]`, kept exact so sample counts do
/// not depend on floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if numerator == 0 || denominator == 0 || numerator > denominator {
            return Err(Error::Format(format!(
                "fraction {numerator}/{denominator} is not in (0, 1]"
            )));
        }
        let g = gcd(numerator, denominator);
        Ok(Fraction {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub const ONE: Fraction = Fraction {
        numerator: 1,
        denominator: 1,
    };

    /// One leaf in twenty; a toolkit default, tune per deployment.
    pub const DEFAULT: Fraction = Fraction {
        numerator: 1,
        denominator: 20,
    };

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `n/d`, or a decimal such as `0.05` or `1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("invalid fraction {s:?}"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Fraction::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 18
        {
            return Err(bad());
        }
        let denominator = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let numerator = int
            .checked_mul(denominator)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(bad)?;
        Fraction::new(numerator, denominator)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `max(1, floor(fraction * leaf_count))`.
pub fn sample_count(leaf_count: u64, fraction: Fraction) -> u64 {
    let n = (leaf_count as u128 * fraction.numerator as u128) / fraction.denominator as u128;
    (n as u64).max(1)
}

fn sampler_rng(seed: u64, leaf_count: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(SAMPLER_DOMAIN);
    h.update(seed.to_le_bytes());
    h.update(leaf_count.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Uniform integer in `[0, bound)` by rejection, so the output stream is
/// fixed by the generator alone.
fn below(rng: &mut ChaCha20Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let v = rng.next_u64();
        if v >= threshold {
            return v % bound;
        }
    }
}

/// Distinct leaf indices chosen by a partial Fisher-Yates shuffle of
/// `0..leaf_count`, returned in increasing order.
///
/// ```
/// use taibom::crypto::{sample_indices, Fraction};
///
/// let all = sample_indices(7, 8, Fraction::ONE);
/// assert_eq!(all, (0..8).collect::<Vec<_>>());
/// ```
pub fn sample_indices(seed: u64, leaf_count: u64, fraction: Fraction) -> Vec<u64> {
    if leaf_count == 0 {
        return Vec::new();
    }
    let count = sample_count(leaf_count, fraction);
    let mut rng = sampler_rng(seed, leaf_count);
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let j = i + below(&mut rng, leaf_count - i);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        out.push(at_j);
        swapped.insert(j, at_i);
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledProof {
    pub parent: MerkleRoot,
    pub sample_indices: Vec<u64>,
    pub sample_digests: Vec<Digest>,
    pub seed: u64,
    pub fraction: Fraction,
}

enum Leaves {
    Blob { path: std::path::PathBuf, len: u64 },
    Tree(Vec<(String, std::path::PathBuf)>),
}

impl Leaves {
    fn open(path: &Path) -> Result<Self> {
        let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
        if meta.is_dir() {
            Ok(Leaves::Tree(directory_entries(path)?))
        } else {
            Ok(Leaves::Blob {
                path: path.to_path_buf(),
                len: meta.len(),
            })
        }
    }

    fn count(&self, chunk_size: u64) -> u64 {
        match self {
            Leaves::Blob { len, .. } => len.div_ceil(chunk_size),
            Leaves::Tree(entries) => entries.len() as u64,
        }
    }

    fn leaf(&self, index: u64, chunk_size: u64) -> Result<[u8; 32]> {
        match self {
            Leaves::Blob { path, .. } => {
                let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
                f.seek(SeekFrom::Start(index * chunk_size))
                    .map_err(|e| Error::io(path, e))?;
                let mut buf = vec![0u8; chunk_size as usize];
                let n = read_chunk(&mut f, &mut buf).map_err(|e| Error::io(path, e))?;
                Ok(leaf_hash(&buf[..n]))
            }
            Leaves::Tree(entries) => {
                let (rel, file) = &entries[index as usize];
                Ok(entry_hash(rel, &file_root_raw(file, chunk_size)?))
            }
        }
    }
}

/// Hashes the whole artifact at `path` and records the leaves selected by
/// the sampler.
pub fn sampled_proof(
    path: &Path,
    chunk_size: u64,
    seed: u64,
    fraction: Fraction,
) -> Result<SampledProof> {
    check_chunk_size(chunk_size)?;
    let parent = merkle::merkle_path(path, chunk_size)?;
    if parent.leaf_count == 0 {
        return Err(Error::Format(format!(
            "{} has no content to sample",
            path.display()
        )));
    }
    let indices = sample_indices(seed, parent.leaf_count, fraction);
    let all: Vec<[u8; 32]> = match Leaves::open(path)? {
        Leaves::Blob { path, .. } => {
            let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
            blob_leaves(f, chunk_size).map_err(|e| Error::io(&path, e))?
        }
        Leaves::Tree(entries) => entries
            .iter()
            .map(|(rel, file)| Ok(entry_hash(rel, &file_root_raw(file, chunk_size)?)))
            .collect::<Result<_>>()?,
    };
    let sample_digests = indices
        .iter()
        .map(|&i| Digest::sha256(all[i as usize]))
        .collect();
    Ok(SampledProof {
        parent,
        sample_indices: indices,
        sample_digests,
        seed,
        fraction,
    })
}

/// Rechecks only the sampled leaves of the artifact at `path`.
///
/// Returns false when the proof's indices are not the ones the sampler
/// derives, when the artifact's leaf count changed, or when any sampled
/// leaf differs.
pub fn sampled_verify(path: &Path, proof: &SampledProof) -> Result<bool> {
    let chunk_size = proof.parent.chunk_size;
    check_chunk_size(chunk_size)?;
    let expected = sample_indices(proof.seed, proof.parent.leaf_count, proof.fraction);
    if expected != proof.sample_indices || proof.sample_digests.len() != expected.len() {
        return Ok(false);
    }
    let leaves = Leaves::open(path)?;
    if leaves.count(chunk_size) != proof.parent.leaf_count {
        return Ok(false);
    }
    for (&i, want) in proof.sample_indices.iter().zip(&proof.sample_digests) {
        if Digest::sha256(leaves.leaf(i, chunk_size)?) != *want {
            return Ok(false);
        }
    }
    Ok(true)
}
