// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the integration tests: an on-disk pipeline tree and
//! randomly shaped provenance graphs.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use tempfile::TempDir;

use taibom::crypto::{hash_bytes, KeyPair, MerkleRoot, ED25519, MERKLE_SCHEME};
use taibom::model::*;
use taibom::store::Store;
use taibom::workflow::{run_pipeline, PipelineManifest, PipelineOutcome};
use taibom::Attestor;

pub fn key(seed: u8) -> KeyPair {
    KeyPair::from_secret(ED25519, &[seed; 32]).unwrap()
}

pub fn ts(secs: i64) -> Timestamp {
    Timestamp::from_unix(1_750_000_000 + secs).unwrap()
}

pub fn attestor(seed: u8) -> Attestor {
    Attestor::new(key(seed)).with_fixed_time(ts(0))
}

pub fn write(path: &Path, bytes: &[u8]) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, bytes).unwrap();
}

/// Flips the low bit of byte `at` in `path`.
pub fn flip_byte(path: &Path, at: usize) {
    let mut bytes = fs::read(path).unwrap();
    bytes[at] ^= 1;
    fs::write(path, bytes).unwrap();
}

/// A fresh store whose only trusted key is `trusted`.
pub fn store_trusting(dir: &Path, trusted: &[&KeyPair]) -> Store {
    let store = Store::init(dir).unwrap();
    for k in trusted {
        store.add_trusted_key(&k.public()).unwrap();
    }
    store
}

pub const TRAIN_SPDX: &str = r#"{
  "spdxVersion": "SPDX-2.3",
  "name": "trainer",
  "packages": [
    {"name": "numpy", "versionInfo": "1.26.0", "licenseConcluded": "BSD-3-Clause",
     "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
                       "referenceLocator": "pkg:pypi/numpy@1.26.0"}]},
    {"name": "torch", "versionInfo": "2.1.0", "licenseConcluded": "BSD-3-Clause"}
  ]
}"#;

pub const SERVE_CYCLONEDX: &str = r#"{
  "bomFormat": "CycloneDX",
  "specVersion": "1.5",
  "components": [
    {"type": "library", "name": "flask", "version": "2.0.1",
     "licenses": [{"license": {"id": "BSD-3-Clause"}}]},
    {"type": "library", "name": "numpy", "version": "1.26.0"}
  ]
}"#;

/// A small but complete pipeline on disk: datasets, training and serving
/// code with SBOMs, a weights file, a signing key and a manifest.
pub struct PipelineFixture {
    pub dir: TempDir,
    pub key: KeyPair,
    pub manifest_path: PathBuf,
    pub store: Store,
}

impl PipelineFixture {
    /// `datasets` directories of `files` CSV files each.
    pub fn new(datasets: usize, files: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("project");
        let key = key(7);
        let mut entries = Vec::new();
        for d in 0..datasets {
            for f in 0..files {
                let body = format!("id,value\n{f},{}\n", d * 1000 + f);
                write(&root.join(format!("data/set{d}/part{f:03}.csv")), body.as_bytes());
            }
            entries.push(serde_json::json!({
                "path": format!("data/set{d}"),
                "name": format!("set{d}"),
                "license": "CC-BY-4.0",
                "role": "train"
            }));
        }
        write(&root.join("src/train/train.py"), b"import numpy\nprint('train')\n");
        write(&root.join("src/serve/serve.py"), b"import flask\nprint('serve')\n");
        write(&root.join("sbom/train.spdx.json"), TRAIN_SPDX.as_bytes());
        write(&root.join("sbom/serve.cdx.json"), SERVE_CYCLONEDX.as_bytes());
        write(&root.join("model/weights.bin"), &(0..10_000u32).map(|i| (i * 31 % 251) as u8).collect::<Vec<_>>());
        write(&root.join("keys/signer.json"), key.to_json().as_bytes());
        let manifest = serde_json::json!({
            "schema_version": "manifest/1",
            "name": "demo",
            "version": {"semver": "1.0.0", "counter": 1},
            "chunk_size": 4096,
            "datasets": entries,
            "training_code": {"path": "src/train", "sbom": "sbom/train.spdx.json", "sbom_format": "spdx", "license": "Apache-2.0"},
            "inferencing_code": {"path": "src/serve", "sbom": "sbom/serve.cdx.json", "sbom_format": "cyclonedx"},
            "config": {"hyperparameters": {"lr": "0.001", "epochs": "3"}},
            "weights": {"path": "model/weights.bin"},
            "signing_key": "keys/signer.json"
        });
        let manifest_path = root.join("manifest.json");
        write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap().as_bytes());
        let store = store_trusting(&dir.path().join("store"), &[&key]);
        PipelineFixture {
            dir,
            key,
            manifest_path,
            store,
        }
    }

    pub fn root(&self) -> PathBuf {
        self.dir.path().join("project").canonicalize().unwrap()
    }

    pub fn manifest(&self) -> PipelineManifest {
        PipelineManifest::load(&self.manifest_path).unwrap()
    }

    /// Rewrites the manifest's version counter.
    pub fn set_counter(&self, counter: u64) {
        let mut m: serde_json::Value = serde_json::from_slice(&fs::read(&self.manifest_path).unwrap()).unwrap();
        m["version"]["counter"] = counter.into();
        fs::write(&self.manifest_path, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    }

    pub fn run(&self) -> PipelineOutcome {
        run_pipeline(&self.manifest(), &self.store).unwrap()
    }
}

pub fn root_of(tag: &str) -> MerkleRoot {
    MerkleRoot {
        root: hash_bytes(tag.as_bytes()),
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

pub fn code_payload(name: &str, role: CodeRole, sbom: Option<AttestationId>) -> CodePayload {
    CodePayload {
        name: name.into(),
        location: format!("file:///src/{name}"),
        content: root_of(name),
        sbom_ref: sbom,
        license: None,
        code_role: role,
    }
}

/// Minimal RNG helper over a seeded ChaCha stream.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.0.next_u64() % den < num
    }
}

/// A randomly shaped, fully typed provenance DAG written to a store,
/// with its reference structure recorded independently of the library.
pub struct RandomDag {
    pub nodes: Vec<(AttestationId, Kind)>,
    /// Outgoing references of each node, as recorded at construction.
    pub deps: BTreeMap<AttestationId, Vec<AttestationId>>,
    next: usize,
}

impl RandomDag {
    pub fn new() -> Self {
        RandomDag {
            nodes: Vec::new(),
            deps: BTreeMap::new(),
            next: 0,
        }
    }

    fn add(&mut self, payload: Payload, deps: Vec<AttestationId>, store: &Store, attestor: &Attestor) -> AttestationId {
        self.next += 1;
        let kind = payload.kind();
        let version = VersionInfo::new(format!("node-{}-{}", self.nodes.len(), self.next), "1.0.0", 1);
        let id = attestor.publish(store, payload, version, BTreeMap::new()).unwrap();
        self.nodes.push((id.clone(), kind));
        self.deps.insert(id.clone(), deps);
        id
    }

    fn of(&self, kind: Kind) -> Vec<AttestationId> {
        self.nodes.iter().filter(|(_, k)| *k == kind).map(|(i, _)| i.clone()).collect()
    }

    fn codes(&self, role: CodeRole, store: &Store) -> Vec<AttestationId> {
        self.of(Kind::Code)
            .into_iter()
            .filter(|id| matches!(&store.require(id).unwrap().payload, Payload::Code(c) if c.code_role == role))
            .collect()
    }

    /// Grows the DAG by roughly `budget` nodes of every artifact kind.
    /// Later rounds reference nodes from earlier rounds as well.
    pub fn grow(&mut self, rng: &mut Rng, budget: usize, store: &Store, attestor: &Attestor) {
        let round = self.next;
        let per = (budget / 9).max(1);
        for i in 0..rng.range(1, per + 1) {
            let p = Payload::TrainingData(TrainingDataPayload {
                data: data_payload(&format!("ds{round}-{i}")),
                collection_method: "crawl".into(),
                intended_role: DataRole::Train,
            });
            self.add(p, vec![], store, attestor);
        }
        for i in 0..rng.range(0, per) {
            let p = Payload::Sbom(SbomPayload {
                source_format: SbomFormat::Native,
                document_digest: hash_bytes(format!("sbom{round}-{i}").as_bytes()),
                components: (0..rng.range(1, 3))
                    .map(|_| SbomComponent::new(*rng.pick(&["zlib", "numpy", "flask"]), format!("1.{}.0", rng.below(3))))
                    .collect(),
            });
            self.add(p, vec![], store, attestor);
        }
        for (i, role) in [CodeRole::Training, CodeRole::Inferencing].into_iter().enumerate() {
            for j in 0..rng.range(1, per) {
                let sboms = self.of(Kind::Sbom);
                let sbom = (!sboms.is_empty() && rng.chance(1, 2)).then(|| rng.pick(&sboms).clone());
                let p = Payload::Code(code_payload(&format!("code{round}-{i}-{j}"), role, sbom.clone()));
                self.add(p, sbom.into_iter().collect(), store, attestor);
            }
        }
        for _ in 0..rng.range(1, per) {
            let data = self.of(Kind::TrainingData);
            let mut members: Vec<AttestationId> = Vec::new();
            for _ in 0..rng.range(1, data.len().min(4)) {
                let m = rng.pick(&data).clone();
                if !members.contains(&m) {
                    members.push(m);
                }
            }
            let p = Payload::DataPack(DataPackPayload {
                members: members
                    .iter()
                    .map(|id| PackMember {
                        member_name: store.require(id).unwrap().payload.display_name().unwrap().to_owned(),
                        attestation_id: id.clone(),
                    })
                    .collect(),
            });
            self.add(p, members, store, attestor);
        }
        for i in 0..rng.range(1, per) {
            let pack = rng.pick(&self.of(Kind::DataPack)).clone();
            let code = rng.pick(&self.codes(CodeRole::Training, store)).clone();
            let p = Payload::TrainedSystem(TrainedSystemPayload {
                label: format!("ts{round}-{i}"),
                datapack_ref: pack.clone(),
                training_code_ref: code.clone(),
            });
            self.add(p, vec![pack, code], store, attestor);
        }
        for i in 0..rng.range(1, per) {
            let ts = rng.pick(&self.of(Kind::TrainedSystem)).clone();
            let p = Payload::Weights(WeightsPayload {
                data: data_payload(&format!("w{round}-{i}")),
                produced_by: ts.clone(),
            });
            self.add(p, vec![ts], store, attestor);
        }
        for i in 0..rng.range(1, per) {
            let w = rng.pick(&self.of(Kind::Weights)).clone();
            let p = Payload::Config(ConfigPayload {
                weights_ref: w.clone(),
                hyperparameters: BTreeMap::from([("seed".into(), i.to_string())]),
                system_metadata: BTreeMap::new(),
            });
            self.add(p, vec![w], store, attestor);
        }
        for i in 0..rng.range(1, per) {
            let cfg = rng.pick(&self.of(Kind::Config)).clone();
            let code = rng.pick(&self.codes(CodeRole::Inferencing, store)).clone();
            let p = Payload::InferenceSystem(InferenceSystemPayload {
                label: format!("is{round}-{i}"),
                config_ref: cfg.clone(),
                inferencing_code_ref: code.clone(),
            });
            self.add(p, vec![cfg, code], store, attestor);
        }
        for i in 0..rng.range(0, 2) {
            let mut systems = self.of(Kind::TrainedSystem);
            systems.extend(self.of(Kind::InferenceSystem));
            let s = rng.pick(&systems).clone();
            let p = Payload::ValidationReport(ValidationReportPayload {
                system_ref: s.clone(),
                report_digest: hash_bytes(format!("report{round}-{i}").as_bytes()),
                verdict: ValidationVerdict::Pass,
            });
            self.add(p, vec![s], store, attestor);
        }
    }

    /// Nodes that reach any of `targets` by following recorded references,
    /// including the targets themselves. Plain fixpoint iteration.
    pub fn reaching(&self, targets: &[AttestationId]) -> std::collections::BTreeSet<AttestationId> {
        let mut out: std::collections::BTreeSet<AttestationId> = targets.iter().cloned().collect();
        loop {
            let before = out.len();
            for (id, deps) in &self.deps {
                if deps.iter().any(|d| out.contains(d)) {
                    out.insert(id.clone());
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }
}

const ALPHABET: [&str; 14] = ["a", "Z", "0", " ", "-", "/", "é", "ß", "\"", "\\", "\n", "\u{0}", "\u{1F600}", "~"];

impl Rng {
    pub fn string(&mut self, max: usize) -> String {
        (0..self.below(max + 1)).map(|_| *self.pick(&ALPHABET)).collect()
    }

    pub fn hex64(&mut self) -> String {
        (0..4).map(|_| format!("{:016x}", self.0.next_u64())).collect()
    }

    pub fn id(&mut self) -> AttestationId {
        AttestationId::parse(&self.hex64()).unwrap()
    }

    pub fn digest(&mut self) -> Digest {
        Digest::from_sha256_hex(&self.hex64()).unwrap()
    }

    pub fn u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn merkle(&mut self) -> MerkleRoot {
        MerkleRoot {
            root: self.digest(),
            chunk_size: 4096 << self.below(10),
            leaf_count: self.u64() >> 20,
            scheme: MERKLE_SCHEME.into(),
        }
    }

    fn license(&mut self) -> Option<LicenseInfo> {
        self.chance(1, 2).then(|| LicenseInfo {
            identifier: self.string(8),
            text_digest: self.chance(1, 2).then(|| self.digest()),
        })
    }

    fn data(&mut self) -> DataPayload {
        DataPayload {
            name: self.string(10),
            label: self.string(6),
            location: format!("file:///{}", self.hex64()),
            content: self.merkle(),
            byte_count: self.u64() >> 1,
            license: self.license(),
        }
    }

    fn map(&mut self) -> BTreeMap<String, String> {
        (0..self.below(4)).map(|_| (self.string(5), self.string(8))).collect()
    }

    pub fn payload(&mut self, kind: Kind) -> Payload {
        match kind {
            Kind::Data => Payload::Data(self.data()),
            Kind::TrainingData => Payload::TrainingData(TrainingDataPayload {
                data: self.data(),
                collection_method: self.string(8),
                intended_role: *self.pick(&[DataRole::Train, DataRole::Validation, DataRole::Test, DataRole::Refinement]),
            }),
            Kind::DataPack => Payload::DataPack(DataPackPayload {
                members: (0..self.below(4))
                    .map(|i| PackMember {
                        member_name: format!("{i}{}", self.string(4)),
                        attestation_id: self.id(),
                    })
                    .collect(),
            }),
            Kind::Code => Payload::Code(CodePayload {
                name: self.string(8),
                location: format!("https://example.org/{}", self.hex64()),
                content: self.merkle(),
                sbom_ref: self.chance(1, 2).then(|| self.id()),
                license: self.license(),
                code_role: *self.pick(&[CodeRole::Training, CodeRole::Inferencing, CodeRole::Other]),
            }),
            Kind::Sbom => Payload::Sbom(SbomPayload {
                source_format: *self.pick(&[SbomFormat::SpdxJson, SbomFormat::CyclonedxJson, SbomFormat::Native]),
                document_digest: self.digest(),
                components: (0..self.below(3))
                    .map(|_| SbomComponent {
                        name: self.string(6),
                        version: self.string(5),
                        purl: self.chance(1, 2).then(|| self.string(10)),
                        cpe: self.chance(1, 3).then(|| self.string(10)),
                        license: self.license(),
                        declared_cves: (0..self.below(3)).map(|i| format!("CVE-2024-{:05}", i + 1000)).collect(),
                        declared_cwes: (0..self.below(2)).map(|i| format!("CWE-{}", i + 20)).collect(),
                    })
                    .collect(),
            }),
            Kind::Weights => Payload::Weights(WeightsPayload {
                data: self.data(),
                produced_by: self.id(),
            }),
            Kind::Config => Payload::Config(ConfigPayload {
                weights_ref: self.id(),
                hyperparameters: self.map(),
                system_metadata: self.map(),
            }),
            Kind::TrainedSystem => Payload::TrainedSystem(TrainedSystemPayload {
                label: self.string(8),
                datapack_ref: self.id(),
                training_code_ref: self.id(),
            }),
            Kind::InferenceSystem => Payload::InferenceSystem(InferenceSystemPayload {
                label: self.string(8),
                config_ref: self.id(),
                inferencing_code_ref: self.id(),
            }),
            Kind::ValidationReport => Payload::ValidationReport(ValidationReportPayload {
                system_ref: self.id(),
                report_digest: self.digest(),
                verdict: *self.pick(&[ValidationVerdict::Pass, ValidationVerdict::Fail, ValidationVerdict::Conditional]),
            }),
            Kind::Revocation => Payload::Revocation(RevocationPayload {
                target: self.id(),
                reason: self.string(12),
                revoked_at: ts((self.u64() % 1_000_000) as i64),
            }),
        }
    }

    /// A signed envelope of a random kind, optionally annotated.
    pub fn envelope(&mut self) -> Envelope {
        let kind = *self.pick(&Kind::ALL);
        let payload = self.payload(kind);
        let version = VersionInfo::new(
            self.string(10),
            format!("{}.{}.{}", self.below(5), self.below(20), self.below(100)),
            self.u64() >> 1,
        );
        let signer = key(1 + self.below(3) as u8);
        let at = ts((self.u64() % 100_000_000) as i64);
        let mut env = Envelope::seal(payload, version, &signer, at).unwrap();
        for _ in 0..self.below(3) {
            let k = self.string(6);
            let v = self.string(6);
            env.annotate(k, v);
        }
        env
    }
}

/// Three code packages, two trained systems and two inference systems,
/// each with its own SBOM, plus a four-record vulnerability feed.
pub struct ImpactFixture {
    pub dir: TempDir,
    pub store: Store,
    pub code: [AttestationId; 3],
    pub trained: [AttestationId; 2],
    pub inference: [AttestationId; 2],
}

pub const IMPACT_FEED: &str = r#"[
  {"cve_id": "CVE-2024-10001", "severity": "HIGH", "cwe_ids": ["CWE-787"],
   "affected": [{"package_name": "numpy", "version_range": ">=1.20.0 <1.22.0"}]},
  {"cve_id": "CVE-2024-10002", "severity": "medium",
   "affected": [{"package_name": "requests", "version_range": "=2.25.0"}]},
  {"cve_id": "CVE-2023-30861", "severity": "high",
   "affected": [{"package_name": "flask", "version_range": ">=2.0.0 <2.2.5"}]},
  {"cve_id": "CVE-2024-10004", "severity": "low",
   "affected": [{"package_name": "torch", "version_range": ">=3.0.0 <4.0.0"}]}
]"#;

impl ImpactFixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let a = attestor(1);
        let store = store_trusting(dir.path(), &[a.keypair()]);
        let v = |n: &str| VersionInfo::new(n, "1.0.0", 1);
        let publish = |p: Payload, n: &str| a.publish(&store, p, v(n), BTreeMap::new()).unwrap();
        let sbom = |comps: &[(&str, &str)], n: &str| {
            publish(
                Payload::Sbom(SbomPayload {
                    source_format: SbomFormat::Native,
                    document_digest: hash_bytes(n.as_bytes()),
                    components: comps.iter().map(|(c, v)| SbomComponent::new(*c, *v)).collect(),
                }),
                n,
            )
        };
        let s0 = sbom(&[("numpy", "1.21.0"), ("pandas", "1.3.0")], "sbom-a");
        let s1 = sbom(&[("numpy", "1.26.0"), ("requests", "2.25.0")], "sbom-b");
        let s2 = sbom(&[("flask", "2.0.1"), ("numpy", "1.19.5")], "sbom-c");
        let code = [
            publish(Payload::Code(code_payload("trainer-a", CodeRole::Training, Some(s0))), "code-a"),
            publish(Payload::Code(code_payload("trainer-b", CodeRole::Training, Some(s1))), "code-b"),
            publish(Payload::Code(code_payload("server", CodeRole::Inferencing, Some(s2))), "code-c"),
        ];
        let data = publish(
            Payload::TrainingData(TrainingDataPayload {
                data: data_payload("corpus"),
                collection_method: "crawl".into(),
                intended_role: DataRole::Train,
            }),
            "corpus",
        );
        let pack = publish(
            Payload::DataPack(DataPackPayload {
                members: vec![PackMember { member_name: "corpus".into(), attestation_id: data }],
            }),
            "pack",
        );
        let mut trained = Vec::new();
        let mut inference = Vec::new();
        for i in 0..2 {
            let ts = publish(
                Payload::TrainedSystem(TrainedSystemPayload {
                    label: format!("model-{i}"),
                    datapack_ref: pack.clone(),
                    training_code_ref: code[i].clone(),
                }),
                &format!("trained-{i}"),
            );
            let w = publish(
                Payload::Weights(WeightsPayload {
                    data: data_payload(&format!("weights-{i}")),
                    produced_by: ts.clone(),
                }),
                &format!("weights-{i}"),
            );
            let cfg = publish(
                Payload::Config(ConfigPayload {
                    weights_ref: w,
                    hyperparameters: BTreeMap::new(),
                    system_metadata: BTreeMap::new(),
                }),
                &format!("config-{i}"),
            );
            let is = publish(
                Payload::InferenceSystem(InferenceSystemPayload {
                    label: format!("service-{i}"),
                    config_ref: cfg,
                    inferencing_code_ref: code[2].clone(),
                }),
                &format!("inference-{i}"),
            );
            trained.push(ts);
            inference.push(is);
        }
        let outcome = taibom::sbom::ingest_cve_feed(IMPACT_FEED.as_bytes(), &store).unwrap();
        assert_eq!(outcome.upserted, 4);
        ImpactFixture {
            dir,
            store,
            code,
            trained: trained.try_into().unwrap(),
            inference: inference.try_into().unwrap(),
        }
    }
}

/// What an impact report should contain, computed by brute force: match
/// every SBOM component against the feed record with a separate version
/// comparator, then ask of every stored node whether any chain of id
/// strings inside its payload leads to an affected code attestation.
#[derive(Debug, PartialEq, Eq)]
pub struct ImpactOracle {
    pub components: BTreeSet<(AttestationId, String, String)>,
    pub code: BTreeSet<AttestationId>,
    pub systems: BTreeSet<AttestationId>,
}

fn version_tuple(v: &str) -> Option<Vec<u64>> {
    let parts: Vec<u64> = v.split('.').map(|p| p.parse().ok()).collect::<Option<_>>()?;
    (parts.len() == 3).then_some(parts)
}

fn range_hit(range: &str, version: &str) -> bool {
    if version.is_empty() {
        return false;
    }
    if range == "*" {
        return true;
    }
    if let Some(exact) = range.strip_prefix('=') {
        return exact == version;
    }
    let rest = range.strip_prefix(">=").unwrap();
    let (lo, hi) = rest.split_once(" <").unwrap();
    match (version_tuple(lo), version_tuple(hi), version_tuple(version)) {
        (Some(lo), Some(hi), Some(v)) => lo <= v && v < hi,
        _ => false,
    }
}

fn id_strings(v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::String(s) => out.push(s.clone()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| id_strings(x, out)),
        serde_json::Value::Object(m) => m.values().for_each(|x| id_strings(x, out)),
        _ => {}
    }
}

pub fn impact_oracle(store: &Store, record: &serde_json::Value) -> ImpactOracle {
    let cve = record["cve_id"].as_str().unwrap();
    let all = store.load_all().unwrap();
    let mut components = BTreeSet::new();
    for (id, env) in &all {
        let Payload::Sbom(s) = &env.payload else { continue };
        for c in &s.components {
            let by_range = record["affected"].as_array().unwrap().iter().any(|a| {
                a["package_name"] == c.name.as_str() && range_hit(a["version_range"].as_str().unwrap(), &c.version)
            });
            if by_range || c.declared_cves.iter().any(|d| d == cve) {
                components.insert((id.clone(), c.name.clone(), c.version.clone()));
            }
        }
    }
    let hit: BTreeSet<&AttestationId> = components.iter().map(|(s, _, _)| s).collect();
    let code: BTreeSet<AttestationId> = all
        .iter()
        .filter(|(_, e)| matches!(&e.payload, Payload::Code(c) if c.sbom_ref.as_ref().is_some_and(|r| hit.contains(r))))
        .map(|(id, _)| id.clone())
        .collect();
    let refs: BTreeMap<AttestationId, Vec<AttestationId>> = all
        .iter()
        .map(|(id, e)| {
            let mut strings = Vec::new();
            id_strings(&e.to_value().unwrap()["payload"], &mut strings);
            let targets = all.iter().filter(|(o, _)| strings.iter().any(|s| s == o.as_str())).map(|(o, _)| o.clone());
            (id.clone(), targets.collect())
        })
        .collect();
    let reaches_code = |start: &AttestationId| {
        let mut stack = vec![start.clone()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n != *start && code.contains(&n) {
                return true;
            }
            if seen.insert(n.clone()) {
                stack.extend(refs[&n].iter().cloned());
            }
        }
        false
    };
    let systems = all
        .iter()
        .filter(|(_, e)| matches!(e.kind(), Kind::TrainedSystem | Kind::InferenceSystem | Kind::Weights | Kind::Config))
        .filter(|(id, _)| reaches_code(id))
        .map(|(id, _)| id.clone())
        .collect();
    ImpactOracle { components, code, systems }
}

pub fn impact_as_oracle(report: &taibom::sbom::ImpactReport) -> ImpactOracle {
    ImpactOracle {
        components: report
            .matched_components
            .iter()
            .map(|m| (m.sbom_id.clone(), m.component.clone(), m.version.clone()))
            .collect(),
        code: report.affected_code.iter().cloned().collect(),
        systems: report.affected_systems.iter().map(|s| s.id.clone()).collect(),
    }
}
