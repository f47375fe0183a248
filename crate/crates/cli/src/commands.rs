// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use taibom::audit::{audit_reuse, audit_series, diff_packs, SeriesStatus};
use taibom::crypto::{keygen, merkle_path, sampled_proof, sampled_verify, Fraction, KeyPair, PublicKey, SampledProof, ED25519};
use taibom::graph::{revoke, trace_lineage, verify_chain, Verdict};
use taibom::model::*;
use taibom::sbom::{impact, ingest_cve_feed, parse_sbom};
use taibom::store::Store;
use taibom::workflow::{next_counter, run_pipeline, CodeSpec, DatasetSpec, PipelineManifest, SbomFileFormat, Workflow};
use taibom::{Attestor, Error};

use crate::render;
use crate::*;

pub struct Output {
    pub json: Value,
    pub human: String,
    pub code: u8,
}

impl Output {
    fn new(value: impl Serialize, human: String) -> Result<Self, Failure> {
        Ok(Output {
            json: serde_json::to_value(value).map_err(|e| Failure::usage(e.to_string()))?,
            human,
            code: 0,
        })
    }

    fn negative_if(mut self, negative: bool) -> Self {
        if negative {
            self.code = 1;
        }
        self
    }

    pub fn json_text(&self) -> String {
        serde_json::to_string_pretty(&self.json).expect("values serialize")
    }
}

/// An error together with the exit code it maps to.
pub struct Failure {
    pub error: Box<dyn fmt::Display>,
    pub code: u8,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            error: Box::new(msg.into()),
            code: 2,
        }
    }

    fn store(msg: impl Into<String>) -> Self {
        Failure {
            error: Box::new(msg.into()),
            code: 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_usage() { 2 } else { 3 };
        Failure {
            error: Box::new(e),
            code,
        }
    }
}

type Res<T> = Result<T, Failure>;

struct Ctx {
    store: Option<PathBuf>,
    key: Option<PathBuf>,
}

impl Ctx {
    fn store_path(&self) -> Res<&Path> {
        self.store
            .as_deref()
            .ok_or_else(|| Failure::usage("no store given; pass --store or set TAIBOM_STORE"))
    }

    /// An existing store, for commands that only read.
    fn open(&self) -> Res<Store> {
        let path = self.store_path()?;
        Store::open(path).map_err(|e| match e {
            Error::NotFound(msg) => Failure::store(msg),
            other => other.into(),
        })
    }

    /// The store, created if absent, for commands that write.
    fn init(&self) -> Res<Store> {
        Ok(Store::init(self.store_path()?)?)
    }

    fn keypair(&self) -> Res<KeyPair> {
        let path = self
            .key
            .as_deref()
            .ok_or_else(|| Failure::usage("no signing key given; pass --key or set TAIBOM_KEY"))?;
        load_key(path)
    }
}

fn load_key(path: &Path) -> Res<KeyPair> {
    let text = fs::read_to_string(path).map_err(|e| Failure::store(format!("{}: {e}", path.display())))?;
    Ok(KeyPair::from_json(&text)?)
}

fn read(path: &Path) -> Res<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::store(format!("{}: {e}", path.display())))
}

fn id(s: &str) -> Res<AttestationId> {
    AttestationId::parse(s).ok_or_else(|| Failure::usage(format!("{s:?} is not an attestation id (64 lowercase hex)")))
}

fn ids(list: &[String]) -> Res<Vec<AttestationId>> {
    list.iter().map(|s| id(s)).collect()
}

fn digest(s: &str) -> Res<Digest> {
    let hex = s.strip_prefix("sha256:").unwrap_or(s);
    Digest::from_sha256_hex(hex).ok_or_else(|| Failure::usage(format!("{s:?} is not a sha256 digest")))
}

fn version(args: &VersionArgs, default_name: &str, store: &Store, issuer: &Digest) -> Res<VersionInfo> {
    let name = args.name.clone().unwrap_or_else(|| default_name.to_owned());
    let counter = match args.counter {
        Some(c) => c,
        None => next_counter(store, issuer, &name)?,
    };
    Ok(VersionInfo::new(name, args.semver.clone(), counter))
}

fn file_name(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| path.display().to_string())
}

fn sbom_format(f: SbomFormatArg) -> SbomFileFormat {
    match f {
        SbomFormatArg::Spdx => SbomFileFormat::Spdx,
        SbomFormatArg::Cyclonedx => SbomFileFormat::CycloneDx,
    }
}

fn attested(id: &AttestationId, kind: Kind, v: &VersionInfo) -> Res<Output> {
    Output::new(
        json!({"id": id, "kind": kind, "version": v}),
        format!("{id}\n{kind} {} #{} ({})", v.name, v.counter, v.semver),
    )
}

pub fn run(cli: Cli) -> Res<Output> {
    let ctx = Ctx {
        store: cli.store,
        key: cli.key,
    };
    match cli.command {
        Command::Keygen { out, trust } => keygen_cmd(&ctx, &out, trust),
        Command::Trust(TrustCommand::Add { key_file }) => {
            let store = ctx.init()?;
            let text = String::from_utf8_lossy(&read(&key_file)?).into_owned();
            let public = match PublicKey::from_json(&text) {
                Ok(p) => p,
                Err(_) => KeyPair::from_json(&text)?.public(),
            };
            let fp = store.add_trusted_key(&public)?;
            Output::new(json!({"trusted": fp.value}), format!("trusted {}", fp.value))
        }
        Command::Trust(TrustCommand::List) => {
            let store = ctx.open()?;
            let keys: Vec<String> = store.trusted_keys()?.into_iter().map(|d| d.value).collect();
            let human = keys.join("\n");
            Output::new(json!({"trusted": keys}), human)
        }
        Command::Hash(args) => hash_cmd(args),
        Command::Attest(cmd) => attest_cmd(&ctx, cmd),
        Command::Pack { ids: members, version: v } => {
            let store = ctx.init()?;
            let attestor = Attestor::new(ctx.keypair()?);
            let v = version(&v, "data-pack", &store, &attestor.keypair().fingerprint)?;
            let id = Workflow::new(&store, &attestor).attest_pack(&ids(&members)?, v.clone())?;
            attested(&id, Kind::DataPack, &v)
        }
        Command::Pipeline(PipelineCommand::Run { manifest }) => {
            let store = ctx.init()?;
            let manifest = PipelineManifest::load(&manifest)?;
            let out = run_pipeline(&manifest, &store)?;
            let human = render::pipeline(&out);
            Output::new(out, human)
        }
        Command::Verify { id: target, rehash } => {
            let store = ctx.open()?;
            let report = verify_chain(&id(&target)?, &store, rehash.as_deref())?;
            let human = render::verification(&report);
            Ok(Output::new(&report, human)?.negative_if(report.verdict == Verdict::Fail))
        }
        Command::Trace { id: target, format } => {
            let store = ctx.open()?;
            let lineage = trace_lineage(&id(&target)?, &store)?;
            match format {
                TraceFormat::Dot => Ok(Output {
                    json: Value::String(lineage.to_dot()),
                    human: lineage.to_dot(),
                    code: 0,
                }),
                TraceFormat::Json => {
                    let human = render::lineage(&lineage);
                    Output::new(&lineage, human)
                }
            }
        }
        Command::Diff { pack_a, pack_b } => {
            let store = ctx.open()?;
            let diff = diff_packs(&id(&pack_a)?, &id(&pack_b)?, &store)?;
            let human = render::diff(&diff);
            Output::new(diff, human)
        }
        Command::Reuse { digest: d } => {
            let store = ctx.open()?;
            let report = audit_reuse(&digest(&d)?, &store)?;
            let human = render::reuse(&report);
            Output::new(report, human)
        }
        Command::Series { issuer, name, rehash } => {
            let store = ctx.open()?;
            let issuer = issuer.strip_prefix("sha256:").unwrap_or(&issuer);
            let entries = audit_series(issuer, &name, &store, &rehash)?;
            let negative = entries
                .iter()
                .any(|e| matches!(e.status, SeriesStatus::FailDigest | SeriesStatus::FailSignature));
            let human = render::series(&entries);
            Ok(Output::new(entries, human)?.negative_if(negative))
        }
        Command::Sbom(SbomCommand::Import { file, format, version: v }) => {
            let store = ctx.init()?;
            let attestor = Attestor::new(ctx.keypair()?);
            let payload = parse_sbom(&read(&file)?, sbom_format(format).payload_format())?;
            let v = version(&v, &file_name(&file), &store, &attestor.keypair().fingerprint)?;
            let components = payload.components.len();
            let id = attestor.publish(&store, Payload::Sbom(payload), v.clone(), BTreeMap::new())?;
            let mut out = attested(&id, Kind::Sbom, &v)?;
            out.json["components"] = components.into();
            Ok(out)
        }
        Command::Cve(CveCommand::Ingest { feed }) => {
            let store = ctx.init()?;
            let outcome = ingest_cve_feed(&read(&feed)?, &store)?;
            let mut human = format!("{} record(s) ingested", outcome.upserted);
            for r in &outcome.rejected {
                human.push_str(&format!("\nrejected record {}: {}", r.index, r.reason));
            }
            let mut out = Output::new(&outcome, human)?;
            if !outcome.rejected.is_empty() {
                out.code = 2;
            }
            Ok(out)
        }
        Command::Cve(CveCommand::Impact { cve_id }) => {
            let store = ctx.open()?;
            let report = impact(&cve_id, &store)?;
            let human = render::impact(&report);
            Output::new(report, human)
        }
        Command::Revoke { id: target, reason } => {
            let store = ctx.open()?;
            let kp = ctx.keypair()?;
            let rid = revoke(&id(&target)?, &reason, &kp, &store, Timestamp::now())?;
            Output::new(json!({"revocation": rid, "target": target}), format!("{rid}\nrevoked {target}"))
        }
        Command::AuditStore => {
            let store = ctx.open()?;
            let findings = store.audit()?;
            let human = if findings.is_empty() {
                "store is consistent".to_owned()
            } else {
                findings
                    .iter()
                    .map(|f| format!("{}: {}", f.path.display(), f.problem))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let negative = !findings.is_empty();
            Ok(Output::new(findings, human)?.negative_if(negative))
        }
    }
}

fn keygen_cmd(ctx: &Ctx, out: &Path, trust: bool) -> Res<Output> {
    let kp = keygen(ED25519)?;
    let mut file = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(out)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => Failure::usage(format!("{} already exists", out.display())),
            _ => Failure::store(format!("{}: {e}", out.display())),
        })?;
    std::io::Write::write_all(&mut file, kp.to_json().as_bytes())
        .map_err(|e| Failure::store(format!("{}: {e}", out.display())))?;
    if trust {
        ctx.init()?.add_trusted_key(&kp.public())?;
    }
    let fp = kp.fingerprint.value.clone();
    Output::new(
        json!({"fingerprint": fp, "key_file": out, "trusted": trust}),
        format!("{fp}\nwrote {}", out.display()),
    )
}

fn hash_cmd(args: HashArgs) -> Res<Output> {
    if let Some(proof_path) = &args.check {
        let proof: SampledProof =
            serde_json::from_slice(&read(proof_path)?).map_err(|e| Failure::usage(format!("proof: {e}")))?;
        let ok = sampled_verify(&args.path, &proof)?;
        let human = format!(
            "{}: {} of {} leaves {}",
            args.path.display(),
            proof.sample_indices.len(),
            proof.parent.leaf_count,
            if ok { "match" } else { "DO NOT match" }
        );
        return Ok(Output::new(json!({"match": ok}), human)?.negative_if(!ok));
    }
    if let Some(f) = &args.sample {
        let fraction: Fraction = f.parse()?;
        let proof = sampled_proof(&args.path, args.chunk_size, args.seed, fraction)?;
        let human = format!(
            "{} sampled {} of {} leaves (seed {}, fraction {})",
            proof.parent.root,
            proof.sample_indices.len(),
            proof.parent.leaf_count,
            proof.seed,
            proof.fraction
        );
        return Output::new(proof, human);
    }
    let root = merkle_path(&args.path, args.chunk_size)?;
    let human = format!("{}  {}", root.root, args.path.display());
    Output::new(root, human)
}

fn params(list: &[String]) -> Res<Map<String, Value>> {
    list.iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_owned(), Value::String(v.to_owned())))
                .ok_or_else(|| Failure::usage(format!("--param {p:?} is not KEY=VALUE")))
        })
        .collect()
}

fn attest_cmd(ctx: &Ctx, cmd: AttestCommand) -> Res<Output> {
    let store = ctx.init()?;
    let attestor = Attestor::new(ctx.keypair()?);
    let issuer = attestor.keypair().fingerprint.clone();
    let wf = Workflow::new(&store, &attestor);
    let cwd = std::env::current_dir().map_err(|e| Failure::store(e.to_string()))?;
    match cmd {
        AttestCommand::Data {
            path,
            license,
            role,
            label,
            collection_method,
            chunk_size,
            version: v,
        } => {
            let name = v.name.clone().unwrap_or_else(|| file_name(&path));
            let v = version(&v, &name, &store, &issuer)?;
            let spec = DatasetSpec {
                path,
                name,
                license,
                role: match role {
                    RoleArg::Train => DataRole::Train,
                    RoleArg::Validation => DataRole::Validation,
                    RoleArg::Test => DataRole::Test,
                    RoleArg::Refinement => DataRole::Refinement,
                },
                label,
                collection_method,
            };
            let id = wf.with_chunk_size(chunk_size).with_base_dir(cwd).attest_dataset(&spec, v.clone())?;
            attested(&id, Kind::TrainingData, &v)
        }
        AttestCommand::Code {
            path,
            role,
            sbom,
            sbom_format: fmt,
            license,
            chunk_size,
            version: v,
        } => {
            let v = version(&v, &file_name(&path), &store, &issuer)?;
            let sbom_v = version(&VersionArgs { name: Some(format!("{}/sbom", v.name)), counter: None, semver: v.semver.clone() }, "", &store, &issuer)?;
            let spec = CodeSpec {
                path,
                sbom,
                sbom_format: fmt.map(sbom_format),
                license,
            };
            let role = match role {
                CodeRoleArg::Training => CodeRole::Training,
                CodeRoleArg::Inferencing => CodeRole::Inferencing,
                CodeRoleArg::Other => CodeRole::Other,
            };
            let out = wf
                .with_chunk_size(chunk_size)
                .with_base_dir(cwd)
                .attest_code(&spec, role, v.clone(), sbom_v)?;
            let mut o = attested(&out.code, Kind::Code, &v)?;
            if let Some(s) = &out.sbom {
                o.json["sbom"] = json!(s);
                o.human.push_str(&format!("\nsbom {s}"));
            }
            Ok(o)
        }
        AttestCommand::Weights {
            path,
            produced_by,
            chunk_size,
            version: v,
        } => {
            let v = version(&v, &file_name(&path), &store, &issuer)?;
            let id = wf
                .with_chunk_size(chunk_size)
                .with_base_dir(cwd)
                .attest_weights(&path, &id(&produced_by)?, v.clone())?;
            attested(&id, Kind::Weights, &v)
        }
        AttestCommand::Config { weights, params: p, version: v } => {
            let v = version(&v, "config", &store, &issuer)?;
            let id = wf.attest_config(&id(&weights)?, &params(&p)?, v.clone())?;
            attested(&id, Kind::Config, &v)
        }
        AttestCommand::Validation {
            system,
            report,
            verdict,
            version: v,
        } => {
            let v = version(&v, "validation", &store, &issuer)?;
            let verdict = match verdict {
                VerdictArg::Pass => ValidationVerdict::Pass,
                VerdictArg::Fail => ValidationVerdict::Fail,
                VerdictArg::Conditional => ValidationVerdict::Conditional,
            };
            let id = wf.with_base_dir(cwd).attest_validation(&id(&system)?, &report, verdict, v.clone())?;
            attested(&id, Kind::ValidationReport, &v)
        }
        AttestCommand::TrainingSystem {
            pack,
            code,
            label,
            version: v,
        } => {
            let v = version(&v, &label, &store, &issuer)?;
            let id = wf.attest_trained_system(&label, &id(&pack)?, &id(&code)?, v.clone())?;
            attested(&id, Kind::TrainedSystem, &v)
        }
        AttestCommand::InferenceSystem {
            config,
            code,
            label,
            version: v,
        } => {
            let v = version(&v, &label, &store, &issuer)?;
            let id = wf.attest_inference_system(&label, &id(&config)?, &id(&code)?, v.clone())?;
            attested(&id, Kind::InferenceSystem, &v)
        }
    }
}
