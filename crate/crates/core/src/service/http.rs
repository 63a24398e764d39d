//! axum routes over [`Service`].

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Body;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use super::api::{ApiError, ApiResult, BundleFile, DepositRequest, ErrorKind, ImportRequest, Service, VersionRequest};
use super::config::ServiceConfig;
use super::store::StoreError;
use crate::canonical;
use crate::package::{FileRole, NewFile, PackageMetadata, PersistentIdentifier};
use crate::runseq::RunSequence;

pub const ACK_HEADER: &str = "x-repro-acknowledge";
pub const DRAFT_TOKEN_HEADER: &str = "x-draft-token";

type Shared = Arc<Service>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json_response(status, &self.body())
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    bytes_response(status, "application/json", canonical::to_vec(value))
}

fn bytes_response(status: StatusCode, content_type: &'static str, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static(content_type))], Body::from(bytes)).into_response()
}

fn zip_response(bundle: BundleFile) -> Response {
    let disposition = format!("attachment; filename=\"{}\"", bundle.file_name);
    let mut resp = bytes_response(StatusCode::OK, "application/zip", bundle.bytes);
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        resp.headers_mut().insert(header::CONTENT_DISPOSITION, v);
    }
    resp
}

/// Runs a store operation on the blocking pool.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn parse_id(raw: &str) -> ApiResult<PersistentIdentifier> {
    PersistentIdentifier::from_route(raw).map_err(|_| ApiError::not_found(format!("unknown package {raw}")))
}

fn acknowledged(headers: &HeaderMap) -> ApiResult<bool> {
    match headers.get(ACK_HEADER).map(|v| v.to_str().unwrap_or("").trim()) {
        None | Some("0") | Some("false") => Ok(false),
        Some("1") | Some("true") => Ok(true),
        Some(other) => {
            Err(ApiError::bad_request("BadHeader", format!("X-Repro-Acknowledge must be 0 or 1, got {other:?}")))
        }
    }
}

fn draft_token(headers: &HeaderMap) -> Option<String> {
    headers.get(DRAFT_TOKEN_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string)
}

#[derive(Debug, Default, Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
}

/// Parts collected from a deposit, version, or import form.
#[derive(Debug, Default)]
struct Form {
    metadata: Option<PackageMetadata>,
    files: Vec<NewFile>,
    roles: BTreeMap<String, FileRole>,
    run_sequence: Option<RunSequence>,
    removals: Vec<String>,
    bundle: Option<Vec<u8>>,
    origin_platform: Option<String>,
    title: Option<String>,
}

fn bad_form(detail: impl Into<String>) -> ApiError {
    ApiError::bad_request("BadRequest", detail)
}

fn json_part<T: serde::de::DeserializeOwned>(name: &str, code: &'static str, bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(code, format!("{name}: {e}")))
}

fn text_part(name: &str, bytes: Vec<u8>) -> ApiResult<String> {
    String::from_utf8(bytes).map_err(|_| bad_form(format!("{name} must be UTF-8")))
}

async fn read_form(mut multipart: Multipart, cap: u64) -> ApiResult<Form> {
    let mut form = Form::default();
    let mut total: u64 = 0;
    while let Some(mut field) = multipart.next_field().await.map_err(|e| bad_form(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let mut bytes = Vec::new();
        while let Some(chunk) = field.chunk().await.map_err(|e| bad_form(e.body_text()))? {
            if matches!(name.as_str(), "file" | "bundle") {
                total += chunk.len() as u64;
                if total > cap {
                    return Err(ApiError::new(
                        ErrorKind::PayloadTooLarge,
                        "TooLarge",
                        format!("upload exceeds the {cap} byte cap"),
                    ));
                }
            }
            bytes.extend_from_slice(&chunk);
        }
        match name.as_str() {
            "metadata" => form.metadata = Some(json_part(&name, "InvalidMetadata", &bytes)?),
            "file" => {
                let path = file_name.ok_or_else(|| bad_form("file part needs a filename"))?;
                form.files.push(NewFile::new(path, bytes));
            }
            "roles" => form.roles = json_part(&name, "BadRequest", &bytes)?,
            "runSequence" => form.run_sequence = Some(json_part(&name, "InvalidRunSequence", &bytes)?),
            "remove" => form.removals.push(text_part(&name, bytes)?),
            "bundle" => form.bundle = Some(bytes),
            "originPlatform" => form.origin_platform = Some(text_part(&name, bytes)?),
            "title" => form.title = Some(text_part(&name, bytes)?),
            other => return Err(bad_form(format!("unexpected form part {other:?}"))),
        }
    }
    for (path, role) in std::mem::take(&mut form.roles) {
        let file = form
            .files
            .iter_mut()
            .find(|f| f.path == path)
            .ok_or_else(|| bad_form(format!("role given for unknown file {path}")))?;
        file.role = Some(role);
    }
    Ok(form)
}

async fn deposit(State(svc): State<Shared>, headers: HeaderMap, multipart: Multipart) -> ApiResult<Response> {
    let acknowledged = acknowledged(&headers)?;
    let form = read_form(multipart, svc.config().size_cap).await?;
    let metadata =
        form.metadata.ok_or_else(|| ApiError::bad_request("InvalidMetadata", "metadata part is required"))?;
    let req = DepositRequest { metadata, files: form.files, run_sequence: form.run_sequence, acknowledged };
    let receipt = blocking(move || svc.deposit(req)).await?;
    Ok(json_response(StatusCode::CREATED, &receipt))
}

async fn publish(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let receipt = blocking(move || svc.publish(&id, q.version)).await?;
    Ok(json_response(StatusCode::OK, &receipt))
}

async fn manifest(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let token = draft_token(&headers);
    let bytes = blocking(move || svc.manifest(&id, q.version, token.as_deref())).await?;
    Ok(bytes_response(StatusCode::OK, "application/json", bytes))
}

async fn file(
    State(svc): State<Shared>,
    Path((id, path)): Path<(String, String)>,
    Query(q): Query<VersionQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let token = draft_token(&headers);
    let (bytes, media_type) = blocking(move || svc.file(&id, &path, q.version, token.as_deref())).await?;
    let mut resp = Body::from(bytes).into_response();
    if let Ok(v) = HeaderValue::from_str(&media_type) {
        resp.headers_mut().insert(header::CONTENT_TYPE, v);
    }
    Ok(resp)
}

async fn explore(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    Ok(zip_response(blocking(move || svc.explore(&id, q.version)).await?))
}

async fn download(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    Ok(zip_response(blocking(move || svc.download(&id, q.version)).await?))
}

async fn access_request(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let counters = blocking(move || svc.access_request(&id)).await?;
    Ok(json_response(StatusCode::OK, &counters))
}

async fn import(State(svc): State<Shared>, multipart: Multipart) -> ApiResult<Response> {
    let form = read_form(multipart, svc.config().size_cap).await?;
    let bundle = form.bundle.ok_or_else(|| ApiError::bad_request("BadBundle", "bundle part is required"))?;
    let req = ImportRequest { bundle, origin_platform: form.origin_platform.unwrap_or_default(), title: form.title };
    let receipt = blocking(move || svc.import(req)).await?;
    Ok(json_response(StatusCode::CREATED, &receipt))
}

async fn new_version(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    multipart: Multipart,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let acknowledged = acknowledged(&headers)?;
    let form = read_form(multipart, svc.config().size_cap).await?;
    let req = VersionRequest {
        files: form.files,
        removals: form.removals,
        metadata: form.metadata,
        run_sequence: form.run_sequence,
        acknowledged,
    };
    let receipt = blocking(move || svc.new_version(&id, req)).await?;
    Ok(json_response(StatusCode::CREATED, &receipt))
}

async fn search(State(svc): State<Shared>, Query(q): Query<SearchQuery>) -> ApiResult<Response> {
    let hits = svc.search(&q.q)?;
    Ok(json_response(StatusCode::OK, &hits))
}

async fn metrics(State(svc): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let counters = blocking(move || svc.metrics(&id)).await?;
    Ok(json_response(StatusCode::OK, &counters))
}

async fn fair(State(svc): State<Shared>, Path(id): Path<String>, Query(q): Query<VersionQuery>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let report = blocking(move || svc.fair(&id, q.version)).await?;
    Ok(json_response(StatusCode::OK, &report))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

/// The service's HTTP routes.
pub fn router(service: Shared) -> Router {
    // Multipart framing adds a little on top of the file bytes.
    let limit = usize::try_from(service.config().size_cap.saturating_add(1 << 20)).unwrap_or(usize::MAX);
    Router::new()
        .route("/api/packages", post(deposit))
        .route("/api/packages/{id}", get(manifest))
        .route("/api/packages/{id}/publish", post(publish))
        .route("/api/packages/{id}/files/{*path}", get(file))
        .route("/api/packages/{id}/explore", get(explore))
        .route("/api/packages/{id}/download", get(download))
        .route("/api/packages/{id}/access-requests", post(access_request))
        .route("/api/packages/{id}/versions", post(new_version))
        .route("/api/packages/{id}/metrics", get(metrics))
        .route("/api/packages/{id}/fair", get(fair))
        .route("/api/import", post(import))
        .route("/api/search", get(search))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(service)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let addr = config.listen;
    let service = tokio::task::spawn_blocking(move || Service::open(config)).await.map_err(std::io::Error::other)??;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// A server on its own thread and runtime, stopped when dropped. Bind to
/// port 0 to get a free port.
pub struct BackgroundServer {
    addr: SocketAddr,
    service: Shared,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(config: ServiceConfig) -> Result<Self, ServeError> {
        let addr = config.listen;
        let listener = std::net::TcpListener::bind(addr).map_err(|source| ServeError::Bind { addr, source })?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let service = Service::open(config)?;
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(service.clone());
        let thread = std::thread::Builder::new().name("repro-bridge-server".into()).spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        tracing::error!(error = %e, "listener setup failed");
                        return;
                    }
                };
                let shutdown = async {
                    let _ = rx.await;
                };
                if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
                    tracing::error!(error = %e, "server stopped");
                }
            });
        })?;
        Ok(Self { addr, service, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL, e.g. `http://127.0.0.1:41234`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn service(&self) -> &Service {
        &self.service
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}
