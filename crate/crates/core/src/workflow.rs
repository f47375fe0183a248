// SPDX-License-Identifier: Apache-2.0

//! One-call attestation of each lifecycle phase: training, weights and
//! config, deployment and validation.
//!
//! Nothing here trains or runs a model. Each operation hashes artifact
//! bytes that already exist, seals the matching envelopes and wires their
//! references. Inputs are hashed before anything is written, and a phase
//! refuses to start if any counter it would use has already been spent, so
//! a rejected run leaves the store untouched. A failure midway (disk full,
//! say) can leave earlier attestations of the phase behind; they are valid
//! on their own and are simply reused or superseded by the next run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::attestor::Attestor;
use crate::crypto::{hash_bytes, merkle_path, KeyPair, MerkleRoot, DEFAULT_CHUNK_SIZE};
use crate::error::{Error, Result};
use crate::graph::verify::byte_count;
use crate::model::*;
use crate::sbom::parse_sbom;
use crate::store::Store;

pub const MANIFEST_VERSION: &str = "manifest/1";

/// SBOM file formats accepted in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SbomFileFormat {
    #[serde(rename = "spdx", alias = "spdx-json")]
    Spdx,
    #[serde(rename = "cyclonedx", alias = "cyclonedx-json")]
    CycloneDx,
}

impl SbomFileFormat {
    pub fn payload_format(self) -> SbomFormat {
        match self {
            SbomFileFormat::Spdx => SbomFormat::SpdxJson,
            SbomFileFormat::CycloneDx => SbomFormat::CyclonedxJson,
        }
    }
}

impl std::str::FromStr for SbomFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_owned()))
            .map_err(|_| Error::Format(format!("unknown SBOM format {s:?}; expected spdx or cyclonedx")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub name: String,
    #[serde(default)]
    pub license: Option<String>,
    #[serde(default = "default_role")]
    pub role: DataRole,
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default = "default_collection")]
    pub collection_method: String,
}

fn default_role() -> DataRole {
    DataRole::Train
}

fn default_label() -> String {
    "dataset".into()
}

fn default_collection() -> String {
    "unspecified".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub sbom: Option<PathBuf>,
    #[serde(default)]
    pub sbom_format: Option<SbomFileFormat>,
    #[serde(default)]
    pub license: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    /// Kept as raw JSON so that a non-string value surfaces as a
    /// canonicalization error rather than a parse error.
    #[serde(default)]
    pub hyperparameters: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Release {
    /// Prefix for every series name the pipeline writes.
    pub name: String,
    pub semver: String,
    pub counter: u64,
}

impl Release {
    pub fn version(&self, suffix: &str) -> VersionInfo {
        self.named(&format!("{}/{suffix}", self.name))
    }

    pub fn named(&self, name: &str) -> VersionInfo {
        VersionInfo {
            name: name.to_owned(),
            semver: self.semver.clone(),
            counter: self.counter,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionSpec {
    #[serde(default = "default_semver")]
    semver: String,
    #[serde(default = "default_counter")]
    counter: u64,
}

impl Default for VersionSpec {
    fn default() -> Self {
        VersionSpec {
            semver: default_semver(),
            counter: default_counter(),
        }
    }
}

fn default_semver() -> String {
    "1.0.0".into()
}

fn default_counter() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    schema_version: Option<String>,
    #[serde(default = "default_name")]
    name: String,
    #[serde(default)]
    version: VersionSpec,
    datasets: Vec<DatasetSpec>,
    training_code: CodeSpec,
    inferencing_code: CodeSpec,
    #[serde(default)]
    config: ConfigSpec,
    signing_key: PathBuf,
    #[serde(default)]
    weights: Option<WeightsSpec>,
    #[serde(default)]
    chunk_size: Option<u64>,
}

fn default_name() -> String {
    "pipeline".into()
}

/// A declarative pipeline description with every path made absolute
/// against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineManifest {
    pub base_dir: PathBuf,
    pub release: Release,
    pub datasets: Vec<DatasetSpec>,
    pub training_code: CodeSpec,
    pub inferencing_code: CodeSpec,
    pub config: ConfigSpec,
    pub signing_key: PathBuf,
    pub weights: Option<WeightsSpec>,
    pub chunk_size: u64,
}

impl PipelineManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
        let base = base.canonicalize().map_err(|e| Error::io(base, e))?;
        Self::from_json(&bytes, &base)
    }

    pub fn from_json(bytes: &[u8], base_dir: &Path) -> Result<Self> {
        let file: ManifestFile = serde_json::from_slice(bytes)
            .map_err(|e| Error::Format(format!("manifest: {e}")))?;
        if let Some(v) = &file.schema_version {
            if v != MANIFEST_VERSION {
                return Err(Error::Schema(format!(
                    "manifest schema {v:?} is not {MANIFEST_VERSION:?}"
                )));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for d in &file.datasets {
            if !names.insert(d.name.as_str()) {
                return Err(Error::Format(format!("manifest: dataset name {:?} repeated", d.name)));
            }
        }
        if parse_semver(&file.version.semver).is_none() {
            return Err(Error::Format(format!(
                "manifest: version.semver {:?} is not MAJOR.MINOR.PATCH",
                file.version.semver
            )));
        }
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let code = |c: CodeSpec| CodeSpec {
            path: abs(&c.path),
            sbom: c.sbom.as_deref().map(abs),
            ..c
        };
        Ok(PipelineManifest {
            base_dir: base_dir.to_path_buf(),
            release: Release {
                name: file.name,
                semver: file.version.semver,
                counter: file.version.counter,
            },
            datasets: file
                .datasets
                .into_iter()
                .map(|d| DatasetSpec { path: abs(&d.path), ..d })
                .collect(),
            training_code: code(file.training_code),
            inferencing_code: code(file.inferencing_code),
            config: file.config,
            signing_key: abs(&file.signing_key),
            weights: file.weights.map(|w| WeightsSpec { path: abs(&w.path) }),
            chunk_size: file.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE),
        })
    }

    pub fn load_key(&self) -> Result<KeyPair> {
        let text = fs::read_to_string(&self.signing_key).map_err(|e| Error::io(&self.signing_key, e))?;
        KeyPair::from_json(&text)
    }
}

/// Everything written by [`Workflow::attest_training_phase`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrainingOutcome {
    pub training_data: Vec<AttestationId>,
    pub data_pack: AttestationId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training_sbom: Option<AttestationId>,
    pub training_code: AttestationId,
    pub trained_system: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightsOutcome {
    pub weights: AttestationId,
    pub config: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbom: Option<AttestationId>,
    pub code: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeploymentOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferencing_sbom: Option<AttestationId>,
    pub inferencing_code: AttestationId,
    pub inference_system: AttestationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineOutcome {
    pub training: TrainingOutcome,
    pub weights: WeightsOutcome,
    pub deployment: DeploymentOutcome,
}

/// A hashed artifact, ready to be described by a payload.
struct Hashed {
    path: PathBuf,
    location: String,
    content: MerkleRoot,
    byte_count: u64,
}

/// Store, signer and hashing parameters shared by every phase.
#[derive(Debug, Clone)]
pub struct Workflow<'a> {
    store: &'a Store,
    attestor: &'a Attestor,
    chunk_size: u64,
    base_dir: Option<PathBuf>,
}

impl<'a> Workflow<'a> {
    pub fn new(store: &'a Store, attestor: &'a Attestor) -> Self {
        Workflow {
            store,
            attestor,
            chunk_size: DEFAULT_CHUNK_SIZE,
            base_dir: None,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    /// Artifacts under `dir` get path hints relative to it, so the tree can
    /// be moved and checked with `verify --rehash <new location>`.
    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = Some(dir.into());
        self
    }

    fn hash(&self, path: &Path) -> Result<Hashed> {
        let path = path.canonicalize().map_err(|e| Error::io(path, e))?;
        let content = merkle_path(&path, self.chunk_size)?;
        let byte_count = byte_count(&path)
            .ok_or_else(|| Error::Integrity(format!("cannot size {}", path.display())))?;
        let location = url::Url::from_file_path(&path)
            .map_err(|_| Error::UnsupportedScheme(format!("no file URI for {}", path.display())))?
            .to_string();
        Ok(Hashed {
            path,
            location,
            content,
            byte_count,
        })
    }

    fn annotations(&self, path: &Path) -> BTreeMap<String, String> {
        let hint = self
            .base_dir
            .as_ref()
            .and_then(|b| b.canonicalize().ok())
            .and_then(|b| path.strip_prefix(b).ok().map(Path::to_path_buf))
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| path.to_path_buf());
        BTreeMap::from([
            (ANNOTATION_PATH_HINT.to_owned(), hint.to_string_lossy().into_owned()),
            (ANNOTATION_LAST_ACCESS.to_owned(), self.attestor.now().to_string()),
        ])
    }

    fn publish(&self, payload: Payload, version: VersionInfo, annotations: BTreeMap<String, String>) -> Result<AttestationId> {
        self.attestor.publish(self.store, payload, version, annotations)
    }

    /// Loads `id` and checks that it is one of `kinds`.
    pub fn expect_kind(&self, id: &AttestationId, kinds: &[Kind]) -> Result<Envelope> {
        let env = self.store.require(id)?;
        if !kinds.contains(&env.kind()) {
            let expected = kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(" or ");
            return Err(Error::Kind {
                id: id.clone(),
                expected,
                found: env.kind(),
            });
        }
        Ok(env)
    }

    /// Fails with a version error if any of `series` already holds a
    /// counter at or above the requested one under this signer.
    pub fn check_counters(&self, series: &[VersionInfo]) -> Result<()> {
        let issuer = self.attestor.keypair().fingerprint.value.clone();
        let catalog = self.store.catalog()?;
        for v in series {
            let prev = catalog
                .iter()
                .filter(|e| e.issuer == issuer && e.name == v.name)
                .map(|e| e.counter)
                .max();
            if let Some(prev) = prev.filter(|&p| v.counter <= p) {
                return Err(Error::Version(format!(
                    "counter {} for series {:?} must exceed {prev}",
                    v.counter, v.name
                )));
            }
        }
        Ok(())
    }

    pub fn attest_dataset(&self, spec: &DatasetSpec, version: VersionInfo) -> Result<AttestationId> {
        let h = self.hash(&spec.path)?;
        let payload = Payload::TrainingData(TrainingDataPayload {
            data: DataPayload {
                name: spec.name.clone(),
                label: spec.label.clone(),
                location: h.location,
                content: h.content,
                byte_count: h.byte_count,
                license: spec.license.as_deref().map(LicenseInfo::new),
            },
            collection_method: spec.collection_method.clone(),
            intended_role: spec.role,
        });
        self.publish(payload, version, self.annotations(&h.path))
    }

    /// Attests a code tree and, when given, its SBOM first so the code can
    /// point at it.
    pub fn attest_code(
        &self,
        spec: &CodeSpec,
        role: CodeRole,
        version: VersionInfo,
        sbom_version: VersionInfo,
    ) -> Result<CodeOutcome> {
        let h = self.hash(&spec.path)?;
        let sbom = self.read_sbom(spec)?;
        let sbom = match sbom {
            Some(payload) => Some(self.publish(Payload::Sbom(payload), sbom_version, BTreeMap::new())?),
            None => None,
        };
        let name = h
            .path
            .file_name()
            .map_or_else(|| version.name.clone(), |n| n.to_string_lossy().into_owned());
        let payload = Payload::Code(CodePayload {
            name,
            location: h.location,
            content: h.content,
            sbom_ref: sbom.clone(),
            license: spec.license.as_deref().map(LicenseInfo::new),
            code_role: role,
        });
        let code = self.publish(payload, version, self.annotations(&h.path))?;
        Ok(CodeOutcome { sbom, code })
    }

    fn read_sbom(&self, spec: &CodeSpec) -> Result<Option<SbomPayload>> {
        let Some(path) = &spec.sbom else { return Ok(None) };
        let format = spec
            .sbom_format
            .ok_or_else(|| Error::Format(format!("sbom_format missing for {}", path.display())))?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_sbom(&bytes, format.payload_format()).map(Some)
    }

    /// Groups training-data attestations under their dataset names.
    pub fn attest_pack(&self, members: &[AttestationId], version: VersionInfo) -> Result<AttestationId> {
        let mut out = Vec::with_capacity(members.len());
        for id in members {
            let env = self.expect_kind(id, &[Kind::TrainingData])?;
            let name = env.payload.display_name().unwrap_or_default().to_owned();
            if out.iter().any(|m: &PackMember| m.member_name == name) {
                return Err(Error::Format(format!("pack member name {name:?} repeated")));
            }
            out.push(PackMember {
                member_name: name,
                attestation_id: id.clone(),
            });
        }
        self.publish(Payload::DataPack(DataPackPayload { members: out }), version, BTreeMap::new())
    }

    pub fn attest_trained_system(
        &self,
        label: &str,
        pack: &AttestationId,
        training_code: &AttestationId,
        version: VersionInfo,
    ) -> Result<AttestationId> {
        self.expect_kind(pack, &[Kind::DataPack])?;
        self.expect_code(training_code, CodeRole::Training)?;
        let payload = Payload::TrainedSystem(TrainedSystemPayload {
            label: label.to_owned(),
            datapack_ref: pack.clone(),
            training_code_ref: training_code.clone(),
        });
        self.publish(payload, version, BTreeMap::new())
    }

    fn expect_code(&self, id: &AttestationId, role: CodeRole) -> Result<()> {
        let env = self.expect_kind(id, &[Kind::Code])?;
        match &env.payload {
            Payload::Code(c) if c.code_role == role => Ok(()),
            Payload::Code(c) => Err(Error::Format(format!(
                "{id} is {} code, expected {role}",
                c.code_role
            ))),
            _ => unreachable!("kind checked above"),
        }
    }

    pub fn attest_weights(&self, path: &Path, produced_by: &AttestationId, version: VersionInfo) -> Result<AttestationId> {
        self.expect_kind(produced_by, &[Kind::TrainedSystem])?;
        let h = self.hash(path)?;
        let payload = Payload::Weights(WeightsPayload {
            data: self.weights_data(&h),
            produced_by: produced_by.clone(),
        });
        self.publish(payload, version, self.annotations(&h.path))
    }

    fn weights_data(&self, h: &Hashed) -> DataPayload {
        DataPayload {
            name: h.path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            label: "weights".into(),
            location: h.location.clone(),
            content: h.content.clone(),
            byte_count: h.byte_count,
            license: None,
        }
    }

    pub fn attest_config(
        &self,
        weights: &AttestationId,
        hyperparameters: &Map<String, Value>,
        version: VersionInfo,
    ) -> Result<AttestationId> {
        self.expect_kind(weights, &[Kind::Weights])?;
        let payload = Payload::Config(ConfigPayload {
            weights_ref: weights.clone(),
            hyperparameters: string_map(hyperparameters)?,
            system_metadata: BTreeMap::new(),
        });
        self.publish(payload, version, BTreeMap::new())
    }

    pub fn attest_inference_system(
        &self,
        label: &str,
        config: &AttestationId,
        inferencing_code: &AttestationId,
        version: VersionInfo,
    ) -> Result<AttestationId> {
        self.expect_kind(config, &[Kind::Config])?;
        self.expect_code(inferencing_code, CodeRole::Inferencing)?;
        let payload = Payload::InferenceSystem(InferenceSystemPayload {
            label: label.to_owned(),
            config_ref: config.clone(),
            inferencing_code_ref: inferencing_code.clone(),
        });
        self.publish(payload, version, BTreeMap::new())
    }

    /// Attests a QA report against a trained or inference system.
    pub fn attest_validation(
        &self,
        system: &AttestationId,
        report: &Path,
        verdict: ValidationVerdict,
        version: VersionInfo,
    ) -> Result<AttestationId> {
        self.expect_kind(system, &[Kind::TrainedSystem, Kind::InferenceSystem])?;
        let bytes = fs::read(report).map_err(|e| Error::io(report, e))?;
        let payload = Payload::ValidationReport(ValidationReportPayload {
            system_ref: system.clone(),
            report_digest: hash_bytes(&bytes),
            verdict,
        });
        let mut notes = BTreeMap::new();
        if let Ok(path) = report.canonicalize() {
            notes = self.annotations(&path);
        }
        self.publish(payload, version, notes)
    }

    /// Datasets, pack, training code (with SBOM) and the trained system.
    pub fn attest_training_phase(&self, manifest: &PipelineManifest) -> Result<TrainingOutcome> {
        let r = &manifest.release;
        let mut series: Vec<_> = manifest.datasets.iter().map(|d| r.named(&d.name)).collect();
        series.extend(
            ["data-pack", "training-code", "training-code/sbom", "trained-system"].map(|s| r.version(s)),
        );
        self.check_counters(&series)?;
        self.read_sbom(&manifest.training_code)?;

        let training_data = manifest
            .datasets
            .iter()
            .map(|d| self.attest_dataset(d, r.named(&d.name)))
            .collect::<Result<Vec<_>>>()?;
        let data_pack = self.attest_pack(&training_data, r.version("data-pack"))?;
        let code = self.attest_code(
            &manifest.training_code,
            CodeRole::Training,
            r.version("training-code"),
            r.version("training-code/sbom"),
        )?;
        let trained_system =
            self.attest_trained_system(&r.name, &data_pack, &code.code, r.version("trained-system"))?;
        Ok(TrainingOutcome {
            training_data,
            data_pack,
            training_sbom: code.sbom,
            training_code: code.code,
            trained_system,
        })
    }

    /// Weights produced by `trained_system`, then the config that binds
    /// them to `hyperparameters`.
    pub fn attest_weights_and_config(
        &self,
        weights_path: &Path,
        trained_system: &AttestationId,
        hyperparameters: &Map<String, Value>,
        release: &Release,
    ) -> Result<WeightsOutcome> {
        self.expect_kind(trained_system, &[Kind::TrainedSystem])?;
        let hyper = string_map(hyperparameters)?;
        self.check_counters(&[release.version("weights"), release.version("config")])?;
        let h = self.hash(weights_path)?;
        let payload = Payload::Weights(WeightsPayload {
            data: self.weights_data(&h),
            produced_by: trained_system.clone(),
        });
        let weights = self.publish(payload, release.version("weights"), self.annotations(&h.path))?;
        let payload = Payload::Config(ConfigPayload {
            weights_ref: weights.clone(),
            hyperparameters: hyper,
            system_metadata: BTreeMap::new(),
        });
        let config = self.publish(payload, release.version("config"), BTreeMap::new())?;
        Ok(WeightsOutcome { weights, config })
    }

    /// Inferencing code (with SBOM) and the inference system on `config`.
    pub fn attest_deployment(
        &self,
        config: &AttestationId,
        inferencing_code: &CodeSpec,
        release: &Release,
    ) -> Result<DeploymentOutcome> {
        self.expect_kind(config, &[Kind::Config])?;
        self.check_counters(&[
            release.version("inferencing-code"),
            release.version("inferencing-code/sbom"),
            release.version("inference-system"),
        ])?;
        self.read_sbom(inferencing_code)?;
        let code = self.attest_code(
            inferencing_code,
            CodeRole::Inferencing,
            release.version("inferencing-code"),
            release.version("inferencing-code/sbom"),
        )?;
        let inference_system =
            self.attest_inference_system(&release.name, config, &code.code, release.version("inference-system"))?;
        Ok(DeploymentOutcome {
            inferencing_sbom: code.sbom,
            inferencing_code: code.code,
            inference_system,
        })
    }

    /// Runs every phase of `manifest`. The manifest must name a weights file.
    pub fn run_pipeline(&self, manifest: &PipelineManifest) -> Result<PipelineOutcome> {
        let weights = manifest
            .weights
            .as_ref()
            .ok_or_else(|| Error::Format("manifest has no weights entry".into()))?;
        // Refuse up front rather than after the training phase has written.
        string_map(&manifest.config.hyperparameters)?;
        let r = &manifest.release;
        self.check_counters(&[
            r.version("weights"),
            r.version("config"),
            r.version("inferencing-code"),
            r.version("inferencing-code/sbom"),
            r.version("inference-system"),
        ])?;
        let training = self.attest_training_phase(manifest)?;
        let weights = self.attest_weights_and_config(
            &weights.path,
            &training.trained_system,
            &manifest.config.hyperparameters,
            r,
        )?;
        let deployment = self.attest_deployment(&weights.config, &manifest.inferencing_code, r)?;
        Ok(PipelineOutcome {
            training,
            weights,
            deployment,
        })
    }
}

/// Loads the manifest's key and runs the whole pipeline against `store`.
pub fn run_pipeline(manifest: &PipelineManifest, store: &Store) -> Result<PipelineOutcome> {
    let attestor = Attestor::new(manifest.load_key()?);
    Workflow::new(store, &attestor)
        .with_chunk_size(manifest.chunk_size)
        .with_base_dir(&manifest.base_dir)
        .run_pipeline(manifest)
}

fn string_map(map: &Map<String, Value>) -> Result<BTreeMap<String, String>> {
    map.iter()
        .map(|(k, v)| match v {
            Value::String(s) => Ok((k.clone(), s.clone())),
            other => Err(Error::Canonicalization(format!(
                "hyperparameters.{k} is {other}, only strings are allowed"
            ))),
        })
        .collect()
}

/// The next free counter for `(issuer, name)`: one past the highest seen.
pub fn next_counter(store: &Store, issuer: &Digest, name: &str) -> Result<u64> {
    let max = store
        .catalog()?
        .iter()
        .filter(|e| e.issuer == issuer.value && e.name == name)
        .map(|e| e.counter)
        .max();
    Ok(max.map_or(1, |m| m + 1))
}
