// SPDX-License-Identifier: Apache-2.0

mod attestor;
pub mod audit;
pub mod crypto;
mod error;
pub mod graph;
pub mod model;
pub mod sbom;
pub mod store;
pub mod workflow;

#[cfg(test)]
mod testing;

pub use attestor::Attestor;
pub use error::{Error, Result};

// The guide's snippets run as doctests of this crate.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/attestations.md")]
mod book_attestations {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/merkle.md")]
mod book_merkle {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/store.md")]
mod book_store {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/verification.md")]
mod book_verification {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/revocation.md")]
mod book_revocation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/audit.md")]
mod book_audit {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/impact.md")]
mod book_impact {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/pipeline.md")]
mod book_pipeline {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
