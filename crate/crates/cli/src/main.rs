// SPDX-License-Identifier: Apache-2.0

//! `taibom`: attest, verify and audit AI pipeline artifacts.
//!
//! Exit codes: 0 success, 1 a valid run with a negative verification or
//! audit outcome, 2 usage or input error, 3 store or filesystem error.

mod commands;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "taibom", version, about = "Signed attestations and trust-chain checks for AI pipelines")]
pub struct Cli {
    /// Attestation store directory.
    #[arg(long, global = true, env = "TAIBOM_STORE")]
    pub store: Option<PathBuf>,
    /// Signing key file (from `taibom keygen`).
    #[arg(long, global = true, env = "TAIBOM_KEY")]
    pub key: Option<PathBuf>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an ed25519 signing key.
    Keygen {
        /// Where to write the key file. Refuses to overwrite.
        #[arg(long)]
        out: PathBuf,
        /// Also trust the new key in the store.
        #[arg(long)]
        trust: bool,
    },
    /// Manage trusted issuer keys.
    #[command(subcommand)]
    Trust(TrustCommand),
    /// Merkle root of a file or directory, or a sampled proof over it.
    Hash(HashArgs),
    /// Attest one artifact or system.
    #[command(subcommand)]
    Attest(AttestCommand),
    /// Group training-data attestations into a data pack.
    Pack {
        #[arg(required = true)]
        ids: Vec<String>,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// Run a declarative pipeline manifest.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Verify the trust chain under an attestation.
    Verify {
        id: String,
        /// Recompute artifact digests, resolving relative paths under ROOT.
        #[arg(long, value_name = "ROOT")]
        rehash: Option<PathBuf>,
    },
    /// Show the provenance graph under an attestation.
    Trace {
        id: String,
        #[arg(long, value_enum, default_value_t = TraceFormat::Json)]
        format: TraceFormat,
    },
    /// Compare the members of two data packs.
    Diff { pack_a: String, pack_b: String },
    /// List attestations whose content root equals DIGEST.
    Reuse { digest: String },
    /// Re-check every version of an (issuer, name) series against disk.
    Series {
        /// Issuer key fingerprint (hex).
        issuer: String,
        name: String,
        /// Root for relative artifact paths.
        #[arg(long, default_value = ".")]
        rehash: PathBuf,
    },
    /// Import SBOM documents.
    #[command(subcommand)]
    Sbom(SbomCommand),
    /// Vulnerability feeds and impact analysis.
    #[command(subcommand)]
    Cve(CveCommand),
    /// Revoke an attestation and everything derived from it.
    Revoke {
        id: String,
        #[arg(long)]
        reason: String,
    },
    /// Check every stored object against its name and schema.
    AuditStore,
}

#[derive(Subcommand, Debug)]
pub enum TrustCommand {
    /// Trust a public key (or the public half of a key file).
    Add { key_file: PathBuf },
    /// List trusted key fingerprints.
    List,
}

#[derive(Args, Debug)]
pub struct HashArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = taibom::crypto::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: u64,
    /// Emit a sampled proof over this fraction of leaves (e.g. 1/20 or 0.05).
    #[arg(long, value_name = "FRACTION", num_args = 0..=1, default_missing_value = "1/20")]
    pub sample: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check PATH against a sampled proof file instead of hashing.
    #[arg(long, value_name = "PROOF", conflicts_with = "sample")]
    pub check: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct VersionArgs {
    /// Series name; defaults per command.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "1.0.0")]
    pub semver: String,
    /// Defaults to one past the highest counter in the series.
    #[arg(long)]
    pub counter: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum AttestCommand {
    /// A training dataset (file or directory).
    Data {
        path: PathBuf,
        #[arg(long)]
        license: Option<String>,
        #[arg(long, value_enum, default_value_t = RoleArg::Train)]
        role: RoleArg,
        #[arg(long, default_value = "dataset")]
        label: String,
        #[arg(long, default_value = "unspecified")]
        collection_method: String,
        #[arg(long, default_value_t = taibom::crypto::DEFAULT_CHUNK_SIZE)]
        chunk_size: u64,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// A code tree, optionally with its SBOM.
    Code {
        path: PathBuf,
        #[arg(long, value_enum)]
        role: CodeRoleArg,
        #[arg(long)]
        sbom: Option<PathBuf>,
        #[arg(long, value_enum)]
        sbom_format: Option<SbomFormatArg>,
        #[arg(long)]
        license: Option<String>,
        #[arg(long, default_value_t = taibom::crypto::DEFAULT_CHUNK_SIZE)]
        chunk_size: u64,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// A weights file produced by a trained system.
    Weights {
        path: PathBuf,
        #[arg(long)]
        produced_by: String,
        #[arg(long, default_value_t = taibom::crypto::DEFAULT_CHUNK_SIZE)]
        chunk_size: u64,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// A configuration binding weights to hyperparameters.
    Config {
        #[arg(long)]
        weights: String,
        /// Hyperparameter as KEY=VALUE; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// A QA report on a trained or inference system.
    Validation {
        system: String,
        report: PathBuf,
        #[arg(long, value_enum)]
        verdict: VerdictArg,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// A trained system from a data pack and training code.
    TrainingSystem {
        #[arg(long)]
        pack: String,
        #[arg(long)]
        code: String,
        #[arg(long, default_value = "trained-system")]
        label: String,
        #[command(flatten)]
        version: VersionArgs,
    },
    /// An inference system from a config and inferencing code.
    InferenceSystem {
        #[arg(long)]
        config: String,
        #[arg(long)]
        code: String,
        #[arg(long, default_value = "inference-system")]
        label: String,
        #[command(flatten)]
        version: VersionArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum PipelineCommand {
    /// Attest every phase described by MANIFEST.
    Run { manifest: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum SbomCommand {
    /// Store an SBOM document as a signed attestation.
    Import {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: SbomFormatArg,
        #[command(flatten)]
        version: VersionArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum CveCommand {
    /// Upsert records from a JSON feed.
    Ingest { feed: PathBuf },
    /// Systems affected by an ingested CVE.
    Impact { cve_id: String },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Json,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RoleArg {
    Train,
    Validation,
    Test,
    Refinement,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CodeRoleArg {
    Training,
    Inferencing,
    Other,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SbomFormatArg {
    Spdx,
    Cyclonedx,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VerdictArg {
    Pass,
    Fail,
    Conditional,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let json = cli.json;
    match commands::run(cli) {
        Ok(out) => {
            let text = if json { out.json_text() } else { out.human };
            if !text.is_empty() {
                // A closed pipe (e.g. `| head`) is not an error worth a panic.
                let _ = writeln!(std::io::stdout(), "{}", text.trim_end());
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("taibom: {}", e.error);
            ExitCode::from(e.code)
        }
    }
}
