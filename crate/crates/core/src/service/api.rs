//! Repository operations behind the HTTP routes. Everything here is
//! synchronous; the HTTP layer runs it on the blocking pool.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bundle::{read_bundle, write_bundle, BundleError};
use super::config::ServiceConfig;
use super::search::{SearchHit, SearchIndex};
use super::store::{Store, StoreError};
use crate::dockerfile::{check_deposit_gate, lint_source, GateDecision, LintReport};
use crate::fair::{assign_badges, fair_report, Badge, FairReport, MetricCounters, MetricEvent};
use crate::package::{
    create_package_with_id, new_version, normalize_path, NewFile, PackageError, PackageMetadata, PackageState,
    PersistentIdentifier, ProvenanceRecord, ReplicationPackage, Timestamp, VersionChanges, VersionRef,
};
use crate::runseq::{build_launch_plan, Phase, RunSequence, SequenceSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    Conflict,
    PayloadTooLarge,
    Unprocessable,
    Internal,
}

impl ErrorKind {
    pub fn status(self) -> u16 {
        match self {
            ErrorKind::BadRequest => 400,
            ErrorKind::NotFound => 404,
            ErrorKind::Conflict => 409,
            ErrorKind::PayloadTooLarge => 413,
            ErrorKind::Unprocessable => 422,
            ErrorKind::Internal => 500,
        }
    }
}

/// An operation failure, rendered as `{"error","detail"}`. A lint-gate
/// denial also carries the report's `findings` and `blocking` fields.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{code}: {detail}")]
pub struct ApiError {
    pub kind: ErrorKind,
    pub code: &'static str,
    pub detail: String,
    pub lint_report: Option<LintReport>,
}

impl ApiError {
    pub fn new(kind: ErrorKind, code: &'static str, detail: impl Into<String>) -> Self {
        Self { kind, code, detail: detail.into(), lint_report: None }
    }

    pub fn bad_request(code: &'static str, detail: impl Into<String>) -> Self {
        Self::new(ErrorKind::BadRequest, code, detail)
    }

    pub fn not_found(detail: impl Into<String>) -> Self {
        Self::new(ErrorKind::NotFound, "NotFound", detail)
    }

    pub fn conflict(code: &'static str, detail: impl Into<String>) -> Self {
        Self::new(ErrorKind::Conflict, code, detail)
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, "Internal", detail)
    }

    pub fn lint_blocked(report: LintReport) -> Self {
        Self {
            lint_report: Some(report),
            ..Self::conflict(
                "LintBlocked",
                "Dockerfile has reproducibility errors; confirm with X-Repro-Acknowledge: 1",
            )
        }
    }

    pub fn status(&self) -> u16 {
        self.kind.status()
    }

    pub fn body(&self) -> serde_json::Value {
        let mut body = match &self.lint_report {
            Some(report) => serde_json::to_value(report).expect("reports serialize"),
            None => json!({}),
        };
        body["error"] = json!(self.code);
        body["detail"] = json!(self.detail);
        body
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "store failure");
        ApiError::internal(e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl From<PackageError> for ApiError {
    fn from(e: PackageError) -> Self {
        let code = match &e {
            PackageError::Path(_) => "InvalidPath",
            PackageError::DuplicatePath(_) => "DuplicatePath",
            PackageError::UnknownPath(_) => "UnknownPath",
            PackageError::InvalidMetadata(_) => "InvalidMetadata",
            PackageError::RunScript(_) => "InvalidRunScript",
            PackageError::Invariant(_) => "InvalidPackage",
            PackageError::NotPublished => "NotPublished",
            PackageError::AlreadyPublished => "AlreadyPublished",
            PackageError::PublishedImmutable => "PublishedImmutable",
        };
        let kind = match &e {
            PackageError::NotPublished | PackageError::AlreadyPublished | PackageError::PublishedImmutable => {
                ErrorKind::Conflict
            }
            _ => ErrorKind::BadRequest,
        };
        ApiError::new(kind, code, e.to_string())
    }
}

impl From<BundleError> for ApiError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::TooLarge(_) => ApiError::new(ErrorKind::PayloadTooLarge, "TooLarge", e.to_string()),
            other => ApiError::bad_request("BadBundle", other.to_string()),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone)]
pub struct DepositRequest {
    pub metadata: PackageMetadata,
    pub files: Vec<NewFile>,
    /// Overrides any sequence derived from a run script.
    pub run_sequence: Option<RunSequence>,
    pub acknowledged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DepositReceipt {
    pub id: PersistentIdentifier,
    pub version: u32,
    pub lint_report: LintReport,
    pub draft_token: String,
}

/// File uploads are added, or replace the file at the same path.
#[derive(Debug, Clone, Default)]
pub struct VersionRequest {
    pub files: Vec<NewFile>,
    pub removals: Vec<String>,
    pub metadata: Option<PackageMetadata>,
    pub run_sequence: Option<RunSequence>,
    pub acknowledged: bool,
}

#[derive(Debug, Clone)]
pub struct ImportRequest {
    pub bundle: Vec<u8>,
    pub origin_platform: String,
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImportReceipt {
    pub id: PersistentIdentifier,
    pub version: u32,
    pub badges: Vec<Badge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublishReceipt {
    pub id: PersistentIdentifier,
    pub version: u32,
    pub state: PackageState,
    pub badges: Vec<Badge>,
}

/// An explore or download bundle ready to send.
#[derive(Debug, Clone)]
pub struct BundleFile {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

pub struct Service {
    store: Store,
    index: SearchIndex,
    config: ServiceConfig,
}

fn placeholder_id() -> PersistentIdentifier {
    PersistentIdentifier::from_suffix("000000").expect("valid suffix")
}

fn new_token() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl Service {
    /// Opens the store and rebuilds the search index from disk.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, StoreError> {
        let store = Store::open(&config.store_root)?;
        let service = Self { store, index: SearchIndex::default(), config };
        service.rebuild_index()?;
        Ok(Arc::new(service))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn rebuild_index(&self) -> Result<(), StoreError> {
        for id in self.store.ids()? {
            for v in self.store.versions(&id) {
                if let Some(pkg) = self.store.load(&id, v)? {
                    self.index.insert(&pkg);
                }
            }
        }
        tracing::info!(entries = self.index.len(), "search index rebuilt");
        Ok(())
    }

    fn check_size<'a>(&self, files: impl IntoIterator<Item = &'a NewFile>) -> ApiResult<()> {
        let total: u64 = files.into_iter().map(|f| f.bytes.len() as u64).sum();
        if total > self.config.size_cap {
            return Err(ApiError::new(
                ErrorKind::PayloadTooLarge,
                "TooLarge",
                format!("{total} bytes exceeds the {} byte cap", self.config.size_cap),
            ));
        }
        Ok(())
    }

    fn dockerfile_source(&self, pkg: &ReplicationPackage, uploads: &[NewFile]) -> ApiResult<Option<String>> {
        let Some(entry) = pkg.dockerfile() else { return Ok(None) };
        let uploaded =
            uploads.iter().find(|f| normalize_path(&f.path).is_ok_and(|p| p == entry.path)).map(|f| f.bytes.clone());
        let bytes = match uploaded {
            Some(b) => b,
            None => self.store.get_blob(&entry.checksum)?,
        };
        String::from_utf8(bytes)
            .map(Some)
            .map_err(|_| ApiError::bad_request("InvalidDockerfile", "Dockerfile is not UTF-8"))
    }

    fn lint_package(&self, pkg: &ReplicationPackage, uploads: &[NewFile]) -> ApiResult<LintReport> {
        match self.dockerfile_source(pkg, uploads)? {
            None => Ok(LintReport::clean()),
            Some(src) => {
                lint_source(&src).map_err(|e| ApiError::bad_request("InvalidDockerfile", format!("Dockerfile: {e}")))
            }
        }
    }

    fn store_files(&self, files: &[NewFile]) -> ApiResult<()> {
        for f in files {
            self.store.put_blob(&f.bytes)?;
        }
        Ok(())
    }

    fn latest(&self, id: &PersistentIdentifier) -> ApiResult<(Vec<u32>, ReplicationPackage)> {
        let versions = self.store.versions(id);
        let last = *versions.last().ok_or_else(|| ApiError::not_found(format!("unknown package {id}")))?;
        let pkg = self.store.load(id, last)?.ok_or_else(|| ApiError::not_found(format!("unknown package {id}")))?;
        Ok((versions, pkg))
    }

    fn latest_published(&self, id: &PersistentIdentifier) -> ApiResult<Option<ReplicationPackage>> {
        for v in self.store.versions(id).into_iter().rev() {
            if let Some(pkg) = self.store.load(id, v)? {
                if pkg.is_published() {
                    return Ok(Some(pkg));
                }
            }
        }
        Ok(None)
    }

    fn token_matches(&self, pkg: &ReplicationPackage, token: Option<&str>) -> bool {
        match (token, self.store.draft_token(&pkg.id, pkg.version)) {
            (Some(given), Some(stored)) => given == stored,
            _ => false,
        }
    }

    /// Published versions are readable by anyone; drafts only with their token.
    fn readable(
        &self,
        id: &PersistentIdentifier,
        version: Option<u32>,
        token: Option<&str>,
    ) -> ApiResult<ReplicationPackage> {
        let not_found = || ApiError::not_found(format!("unknown package or version {id}"));
        let pkg = match version {
            Some(v) => self.store.load(id, v)?.ok_or_else(not_found)?,
            None => match self.latest_published(id)? {
                Some(p) => p,
                None => self.latest(id).map_err(|_| not_found())?.1,
            },
        };
        if pkg.is_published() || self.token_matches(&pkg, token) {
            Ok(pkg)
        } else {
            Err(not_found())
        }
    }

    /// A published version for explore/fair; drafts are a conflict.
    fn published(&self, id: &PersistentIdentifier, version: Option<u32>) -> ApiResult<ReplicationPackage> {
        let not_found = || ApiError::not_found(format!("unknown package or version {id}"));
        let pkg = match version {
            Some(v) => self.store.load(id, v)?.ok_or_else(not_found)?,
            None => match self.latest_published(id)? {
                Some(p) => p,
                None => {
                    self.latest(id)?;
                    return Err(ApiError::conflict("NotPublished", "package has no published version"));
                }
            },
        };
        if !pkg.is_published() {
            return Err(ApiError::conflict("NotPublished", format!("version {} is a draft", pkg.version)));
        }
        Ok(pkg)
    }

    fn record(&self, pkg: &ReplicationPackage, event: MetricEvent) -> ApiResult<()> {
        self.store.with_lock(&pkg.id, || {
            let mut counters = self.store.counters(&pkg.id)?.unwrap_or_default();
            counters.register_paths(pkg.files.iter().map(|f| f.path.as_str()));
            counters.apply(&event).map_err(|e| ApiError::not_found(e.to_string()))?;
            self.store.write_counters(&pkg.id, &counters)?;
            Ok(())
        })
    }

    /// Deposit a new package as draft version 1, subject to the lint gate.
    /// A denied deposit writes nothing.
    pub fn deposit(&self, req: DepositRequest) -> ApiResult<DepositReceipt> {
        self.check_size(&req.files)?;
        let mut pkg = create_package_with_id(placeholder_id(), req.metadata, &req.files)?;
        if let Some(seq) = req.run_sequence {
            pkg.run_sequence = Some(seq);
        }
        let report = self.lint_package(&pkg, &req.files)?;
        if let GateDecision::Deny(report) = check_deposit_gate(&report, req.acknowledged) {
            return Err(ApiError::lint_blocked(report));
        }
        pkg.lint_acknowledged = req.acknowledged && pkg.dockerfile().is_some();

        pkg.id = self.store.allocate_id()?;
        let token = new_token();
        self.store.with_lock(&pkg.id, || -> ApiResult<()> {
            self.store_files(&req.files)?;
            self.store.write_manifest(&pkg)?;
            self.store.write_draft_token(&pkg.id, pkg.version, &token)?;
            Ok(())
        })?;
        tracing::info!(id = %pkg.id, files = pkg.files.len(), "deposited draft");
        Ok(DepositReceipt { id: pkg.id, version: pkg.version, lint_report: report, draft_token: token })
    }

    fn finish_publish(&self, pkg: ReplicationPackage) -> ApiResult<ReplicationPackage> {
        let mut pkg = pkg.publish()?;
        pkg.badges = assign_badges(&pkg, &self.config.known_platforms, Timestamp::now())
            .map_err(|e| ApiError::internal(e.to_string()))?;
        self.store.write_manifest(&pkg)?;
        self.store.remove_draft_token(&pkg.id, pkg.version)?;
        self.index.insert(&pkg);
        Ok(pkg)
    }

    /// Publishes a draft (the latest version when `version` is `None`).
    pub fn publish(&self, id: &PersistentIdentifier, version: Option<u32>) -> ApiResult<PublishReceipt> {
        self.store.with_lock(id, || {
            let (versions, latest) = self.latest(id)?;
            let pkg = match version {
                Some(v) if v == latest.version => latest,
                Some(v) if versions.contains(&v) => {
                    self.store.load(id, v)?.ok_or_else(|| ApiError::not_found(format!("unknown version {v}")))?
                }
                Some(v) => return Err(ApiError::not_found(format!("unknown version {v} of {id}"))),
                None => latest,
            };
            if pkg.is_published() {
                return Err(ApiError::conflict(
                    "AlreadyPublished",
                    format!("version {} is already published", pkg.version),
                ));
            }
            let pkg = self.finish_publish(pkg)?;
            tracing::info!(id = %pkg.id, version = pkg.version, "published");
            Ok(PublishReceipt { id: pkg.id, version: pkg.version, state: pkg.state, badges: pkg.badges })
        })
    }

    /// Canonical manifest bytes, exactly as stored.
    pub fn manifest(&self, id: &PersistentIdentifier, version: Option<u32>, token: Option<&str>) -> ApiResult<Vec<u8>> {
        let pkg = self.readable(id, version, token)?;
        self.store.manifest_bytes(&pkg.id, pkg.version)?.ok_or_else(|| ApiError::not_found("manifest missing"))
    }

    pub fn package(
        &self,
        id: &PersistentIdentifier,
        version: Option<u32>,
        token: Option<&str>,
    ) -> ApiResult<ReplicationPackage> {
        self.readable(id, version, token)
    }

    /// File bytes and media type; downloads of published files are counted.
    pub fn file(
        &self,
        id: &PersistentIdentifier,
        path: &str,
        version: Option<u32>,
        token: Option<&str>,
    ) -> ApiResult<(Vec<u8>, String)> {
        let pkg = self.readable(id, version, token)?;
        let path = normalize_path(path).map_err(|_| ApiError::not_found(format!("no file {path}")))?;
        let entry = pkg.file(path.as_str()).ok_or_else(|| ApiError::not_found(format!("no file {path}")))?;
        let bytes = self.store.get_blob(&entry.checksum)?;
        if pkg.is_published() {
            self.record(&pkg, MetricEvent::FileDownload(path.to_string()))?;
        }
        Ok((bytes, entry.media_type.clone()))
    }

    fn bundle(&self, pkg: &ReplicationPackage) -> ApiResult<BundleFile> {
        let manifest =
            self.store.manifest_bytes(&pkg.id, pkg.version)?.ok_or_else(|| ApiError::not_found("manifest missing"))?;
        let plan = build_launch_plan(pkg).ok();
        let bytes = write_bundle::<_, ApiError>(&manifest, plan.as_ref(), &pkg.files, |entry| {
            Ok(self.store.get_blob(&entry.checksum)?)
        })?;
        Ok(BundleFile { file_name: format!("{}-v{}.zip", pkg.id.suffix(), pkg.version), bytes })
    }

    /// Explore bundle for a published version; counted as an explore.
    pub fn explore(&self, id: &PersistentIdentifier, version: Option<u32>) -> ApiResult<BundleFile> {
        let pkg = self.published(id, version)?;
        let bundle = self.bundle(&pkg)?;
        self.record(&pkg, MetricEvent::Explore)?;
        Ok(bundle)
    }

    /// Same archive as explore, counted as a package download.
    pub fn download(&self, id: &PersistentIdentifier, version: Option<u32>) -> ApiResult<BundleFile> {
        let pkg = self.published(id, version)?;
        let bundle = self.bundle(&pkg)?;
        self.record(&pkg, MetricEvent::PackageDownload)?;
        Ok(bundle)
    }

    pub fn access_request(&self, id: &PersistentIdentifier) -> ApiResult<MetricCounters> {
        let (_, pkg) = self.latest(id)?;
        self.record(&pkg, MetricEvent::AccessRequest)?;
        self.metrics(id)
    }

    /// Imports a bundle exported by a reproducibility platform as a new,
    /// already-published package.
    pub fn import(&self, req: ImportRequest) -> ApiResult<ImportReceipt> {
        let origin = req.origin_platform.trim();
        if origin.is_empty() {
            return Err(ApiError::new(ErrorKind::Unprocessable, "MissingOrigin", "originPlatform is required"));
        }
        if req.bundle.len() as u64 > self.config.size_cap {
            return Err(ApiError::new(ErrorKind::PayloadTooLarge, "TooLarge", "bundle exceeds the size cap"));
        }
        let parsed = read_bundle(&req.bundle, self.config.size_cap)?;
        let source = parsed.package;

        let mut metadata = source.metadata.clone();
        if let Some(title) = req.title.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
            metadata.title = title.to_string();
        }
        let files: Vec<NewFile> = parsed
            .files
            .iter()
            .map(|(entry, bytes)| NewFile::new(entry.path.as_str(), bytes.clone()).with_role(entry.role))
            .collect();
        let mut pkg = create_package_with_id(placeholder_id(), metadata, &files)
            .map_err(|e| ApiError::bad_request("BadBundle", e.to_string()))?;

        let plan_sequence = parsed.launch_plan.as_ref().and_then(|plan| {
            RunSequence::from_steps(
                plan.inside.iter().map(|c| (Phase::Inside, c.as_str())),
                "sh",
                SequenceSource::PlatformImport,
            )
            .ok()
        });
        pkg.run_sequence = source
            .run_sequence
            .clone()
            .or(plan_sequence)
            .or(pkg.run_sequence.take())
            .map(|s| s.with_source(SequenceSource::PlatformImport));

        // Platform-generated Dockerfiles are linted but never gated.
        if let Ok(Some(src)) = self.dockerfile_source(&pkg, &files) {
            if let Ok(report) = lint_source(&src) {
                tracing::info!(findings = report.findings.len(), "imported Dockerfile linted");
            }
        }
        pkg.lint_acknowledged = pkg.dockerfile().is_some();

        let origin_ref = source.version_ref();
        let known_origin =
            matches!(self.store.load(&origin_ref.id, origin_ref.version), Ok(Some(p)) if p.is_published());
        pkg.provenance = ProvenanceRecord {
            derived_from: known_origin.then_some(VersionRef { ..origin_ref }),
            origin_platform: Some(origin.to_string()),
            imported_at: Some(Timestamp::now()),
        };

        pkg.id = self.store.allocate_id()?;
        let pkg = self.store.with_lock(&pkg.id.clone(), || -> ApiResult<ReplicationPackage> {
            self.store_files(&files)?;
            self.finish_publish(pkg)
        })?;
        tracing::info!(id = %pkg.id, origin, "imported");
        Ok(ImportReceipt { id: pkg.id, version: pkg.version, badges: pkg.badges })
    }

    /// Creates draft `N+1` from the highest published version `N`. Only
    /// one draft may be open per package; a second request gets a 409 and
    /// should retry after the draft is published.
    pub fn new_version(&self, id: &PersistentIdentifier, req: VersionRequest) -> ApiResult<DepositReceipt> {
        self.check_size(&req.files)?;
        self.store.with_lock(id, || {
            let (versions, latest) = self.latest(id)?;
            if !latest.is_published() {
                if versions.len() == 1 {
                    return Err(ApiError::not_found(format!("{id} has no published version")));
                }
                return Err(ApiError::conflict(
                    "Conflict",
                    format!("draft version {} is open; publish it and retry", latest.version),
                ));
            }
            let base = latest;

            let mut changes =
                VersionChanges { removals: req.removals.clone(), metadata: req.metadata.clone(), ..Default::default() };
            for f in &req.files {
                let path = normalize_path(&f.path).map_err(PackageError::from)?;
                if base.file(path.as_str()).is_some() {
                    changes.replacements.push(f.clone());
                } else {
                    changes.additions.push(f.clone());
                }
            }
            let mut pkg = new_version(&base, changes)?;
            if let Some(seq) = req.run_sequence.clone() {
                pkg.run_sequence = Some(seq);
            }

            let report = self.lint_package(&pkg, &req.files)?;
            if let GateDecision::Deny(report) = check_deposit_gate(&report, req.acknowledged || pkg.lint_acknowledged) {
                return Err(ApiError::lint_blocked(report));
            }
            pkg.lint_acknowledged = pkg.dockerfile().is_some() && (pkg.lint_acknowledged || req.acknowledged);

            let token = new_token();
            self.store_files(&req.files)?;
            self.store.write_manifest(&pkg)?;
            self.store.write_draft_token(&pkg.id, pkg.version, &token)?;
            tracing::info!(id = %pkg.id, version = pkg.version, "new draft version");
            Ok(DepositReceipt { id: pkg.id, version: pkg.version, lint_report: report, draft_token: token })
        })
    }

    pub fn search(&self, query: &str) -> ApiResult<Vec<SearchHit>> {
        let query = query.trim();
        if query.is_empty() {
            return Err(ApiError::bad_request("EmptyQuery", "q must not be empty"));
        }
        Ok(self.index.search(query))
    }

    /// Current counters, with zero entries for every file of the latest version.
    pub fn metrics(&self, id: &PersistentIdentifier) -> ApiResult<MetricCounters> {
        let (_, latest) = self.latest(id)?;
        let mut counters = self.store.counters(id)?.unwrap_or_default();
        counters.register_paths(latest.files.iter().map(|f| f.path.as_str()));
        Ok(counters)
    }

    pub fn fair(&self, id: &PersistentIdentifier, version: Option<u32>) -> ApiResult<FairReport> {
        let pkg = self.published(id, version)?;
        let lint = match self.dockerfile_source(&pkg, &[])? {
            Some(src) => lint_source(&src).ok(),
            None => None,
        };
        fair_report(&pkg, lint.as_ref()).map_err(|e| ApiError::internal(e.to_string()))
    }
}
