// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::error::{Error, Result};
use crate::model::Digest;

pub const MERKLE_SCHEME: &str = "taibom-merkle/1";
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 20;
pub const MIN_CHUNK_SIZE: u64 = 4096;

const LEAF_TAG: u8 = 0x00;
const NODE_TAG: u8 = 0x01;
const ENTRY_TAG: u8 = 0x02;

/// Root of a hash tree over fixed-size chunks of a blob, or over the
/// `(relative path, file root)` entries of a directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleRoot {
    pub root: Digest,
    pub chunk_size: u64,
    pub leaf_count: u64,
    pub scheme: String,
}

impl MerkleRoot {
    fn from_leaves(leaves: Vec<[u8; 32]>, chunk_size: u64) -> Self {
        let leaf_count = leaves.len() as u64;
        MerkleRoot {
            root: Digest::sha256(fold(leaves)),
            chunk_size,
            leaf_count,
            scheme: MERKLE_SCHEME.to_owned(),
        }
    }
}

pub(crate) fn check_chunk_size(chunk_size: u64) -> Result<()> {
    if chunk_size < MIN_CHUNK_SIZE || !chunk_size.is_power_of_two() {
        return Err(Error::Format(format!(
            "chunk size {chunk_size} must be a power of two of at least {MIN_CHUNK_SIZE}"
        )));
    }
    Ok(())
}

pub(crate) fn leaf_hash(chunk: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update([LEAF_TAG]);
    h.update(chunk);
    h.finalize().into()
}

fn node_hash(left: &[u8; 32], right: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update([NODE_TAG]);
    h.update(left);
    h.update(right);
    h.finalize().into()
}

pub(crate) fn entry_hash(relative_path: &str, file_root: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update([ENTRY_TAG]);
    h.update(relative_path.as_bytes());
    h.update([0x00]);
    h.update(file_root);
    h.finalize().into()
}

/// Reduces a leaf level to its root. An odd node at the end of a level is
/// promoted unchanged; zero leaves hash to `H(0x00)`.
fn fold(mut level: Vec<[u8; 32]>) -> [u8; 32] {
    if level.is_empty() {
        return leaf_hash(&[]);
    }
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [l, r] => node_hash(l, r),
                [only] => *only,
                _ => unreachable!(),
            })
            .collect();
    }
    level[0]
}

/// Fills `buf` from `reader`, returning the number of bytes read (short only at EOF).
pub(crate) fn read_chunk<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub(crate) fn blob_leaves<R: Read>(mut reader: R, chunk_size: u64) -> io::Result<Vec<[u8; 32]>> {
    let mut buf = vec![0u8; chunk_size as usize];
    let mut leaves = Vec::new();
    loop {
        let n = read_chunk(&mut reader, &mut buf)?;
        if n == 0 {
            break;
        }
        leaves.push(leaf_hash(&buf[..n]));
        if n < buf.len() {
            break;
        }
    }
    Ok(leaves)
}

/// Merkle root of a byte stream split into `chunk_size` chunks.
pub fn merkle_blob<R: Read>(reader: R, chunk_size: u64) -> Result<MerkleRoot> {
    check_chunk_size(chunk_size)?;
    let leaves = blob_leaves(reader, chunk_size).map_err(|e| Error::io("<stream>", e))?;
    Ok(MerkleRoot::from_leaves(leaves, chunk_size))
}

pub fn merkle_file(path: &Path, chunk_size: u64) -> Result<MerkleRoot> {
    check_chunk_size(chunk_size)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let leaves = blob_leaves(file, chunk_size).map_err(|e| Error::io(path, e))?;
    Ok(MerkleRoot::from_leaves(leaves, chunk_size))
}

/// Regular files under `root`, keyed by `/`-separated relative path and
/// sorted byte-wise. Symlinks are skipped, not followed.
pub(crate) fn directory_entries(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut entries = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under its root");
        let mut parts = Vec::new();
        for comp in rel.components() {
            let s = comp.as_os_str().to_str().ok_or_else(|| {
                Error::Canonicalization(format!("non-UTF-8 path {}", entry.path().display()))
            })?;
            parts.push(s);
        }
        entries.push((parts.join("/"), entry.path().to_path_buf()));
    }
    entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
    Ok(entries)
}

/// Merkle root of a directory tree.
pub fn merkle_tree(root: &Path, chunk_size: u64) -> Result<MerkleRoot> {
    check_chunk_size(chunk_size)?;
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            io::Error::new(io::ErrorKind::InvalidInput, "not a directory"),
        ));
    }
    let leaves = directory_entries(root)?
        .into_iter()
        .map(|(rel, path)| {
            let file_root = file_root_raw(&path, chunk_size)?;
            Ok(entry_hash(&rel, &file_root))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MerkleRoot::from_leaves(leaves, chunk_size))
}

pub(crate) fn file_root_raw(path: &Path, chunk_size: u64) -> Result<[u8; 32]> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let leaves = blob_leaves(file, chunk_size).map_err(|e| Error::io(path, e))?;
    Ok(fold(leaves))
}

/// [`merkle_tree`] for directories, [`merkle_file`] for anything else.
pub fn merkle_path(path: &Path, chunk_size: u64) -> Result<MerkleRoot> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_dir() {
        merkle_tree(path, chunk_size)
    } else {
        merkle_file(path, chunk_size)
    }
}
