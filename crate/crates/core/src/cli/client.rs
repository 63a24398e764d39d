//! Blocking HTTP client for a running bridge service.

use reqwest::blocking::multipart::{Form, Part};
use reqwest::blocking::{Client as Http, RequestBuilder};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::dockerfile::LintReport;
use crate::package::{NewFile, PersistentIdentifier};
use crate::service::{ACK_HEADER, DRAFT_TOKEN_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The deposit gate refused the Dockerfile.
    #[error("deposit blocked by lint findings")]
    Blocked(LintReport),
    /// The server rejected the request (4xx).
    #[error("{status} {code}: {detail}")]
    Rejected { status: u16, code: String, detail: String },
    /// Transport failure or 5xx.
    #[error("{0}")]
    Server(String),
}

pub struct Client {
    base: String,
    http: Http,
}

/// Form parts for a deposit or new version.
#[derive(Debug, Default)]
pub struct Upload {
    pub metadata: Option<Vec<u8>>,
    pub files: Vec<NewFile>,
    pub run_sequence: Option<Vec<u8>>,
    pub removals: Vec<String>,
    pub acknowledged: bool,
}

impl Client {
    pub fn new(base: &str) -> Result<Self, ClientError> {
        let http = Http::builder().timeout(None).build().map_err(|e| ClientError::Server(e.to_string()))?;
        Ok(Self { base: base.trim_end_matches('/').to_string(), http })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Routes take the bare identifier suffix.
    fn package_url(&self, id: &str, tail: &str) -> String {
        let id =
            PersistentIdentifier::from_route(id).map(|i| i.suffix().to_string()).unwrap_or_else(|_| id.to_string());
        self.url(&format!("/api/packages/{id}{tail}"))
    }

    fn send(&self, req: RequestBuilder) -> Result<Vec<u8>, ClientError> {
        let resp = req.send().map_err(|e| ClientError::Server(format!("request failed: {e}")))?;
        let status = resp.status();
        let body = resp.bytes().map_err(|e| ClientError::Server(format!("reading response: {e}")))?.to_vec();
        if status.is_success() {
            return Ok(body);
        }
        let value: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let code = value["error"].as_str().unwrap_or("").to_string();
        let detail =
            value["detail"].as_str().map(str::to_string).unwrap_or_else(|| String::from_utf8_lossy(&body).into_owned());
        if status.is_server_error() {
            return Err(ClientError::Server(format!("{status} {code}: {detail}")));
        }
        if code == "LintBlocked" {
            let report: LintReport = serde_json::from_value(serde_json::json!({
                "findings": value["findings"],
                "blocking": value["blocking"],
            }))
            .map_err(|e| ClientError::Server(format!("malformed lint report: {e}")))?;
            return Err(ClientError::Blocked(report));
        }
        Err(ClientError::Rejected { status: status.as_u16(), code, detail })
    }

    fn json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ClientError> {
        serde_json::from_slice(bytes).map_err(|e| ClientError::Server(format!("unexpected response: {e}")))
    }

    fn version_query(req: RequestBuilder, version: Option<u32>) -> RequestBuilder {
        match version {
            Some(v) => req.query(&[("version", v)]),
            None => req,
        }
    }

    fn form(upload: Upload) -> Form {
        let mut form = Form::new();
        if let Some(meta) = upload.metadata {
            form = form.part("metadata", Part::bytes(meta));
        }
        let roles: serde_json::Map<String, Value> = upload
            .files
            .iter()
            .filter_map(|f| f.role.map(|r| (f.path.clone(), serde_json::to_value(r).expect("roles serialize"))))
            .collect();
        for f in upload.files {
            form = form.part("file", Part::bytes(f.bytes).file_name(f.path));
        }
        if !roles.is_empty() {
            form = form.part("roles", Part::bytes(serde_json::to_vec(&roles).expect("roles serialize")));
        }
        if let Some(seq) = upload.run_sequence {
            form = form.part("runSequence", Part::bytes(seq));
        }
        for path in upload.removals {
            form = form.text("remove", path);
        }
        form
    }

    /// Raw JSON body of the deposit receipt.
    pub fn deposit(&self, upload: Upload) -> Result<Vec<u8>, ClientError> {
        let ack = if upload.acknowledged { "1" } else { "0" };
        let req = self.http.post(self.url("/api/packages")).header(ACK_HEADER, ack).multipart(Self::form(upload));
        self.send(req)
    }

    pub fn new_version(&self, id: &str, upload: Upload) -> Result<Vec<u8>, ClientError> {
        let ack = if upload.acknowledged { "1" } else { "0" };
        let req =
            self.http.post(self.package_url(id, "/versions")).header(ACK_HEADER, ack).multipart(Self::form(upload));
        self.send(req)
    }

    pub fn publish(&self, id: &str, version: Option<u32>) -> Result<Vec<u8>, ClientError> {
        self.send(Self::version_query(self.http.post(self.package_url(id, "/publish")), version))
    }

    pub fn manifest(&self, id: &str, version: Option<u32>, token: Option<&str>) -> Result<Vec<u8>, ClientError> {
        let mut req = Self::version_query(self.http.get(self.package_url(id, "")), version);
        if let Some(t) = token {
            req = req.header(DRAFT_TOKEN_HEADER, t);
        }
        self.send(req)
    }

    pub fn file(&self, id: &str, path: &str, version: Option<u32>) -> Result<Vec<u8>, ClientError> {
        let mut url = reqwest::Url::parse(&self.package_url(id, "/files"))
            .map_err(|e| ClientError::Server(format!("bad server URL: {e}")))?;
        url.path_segments_mut().map_err(|_| ClientError::Server("bad server URL".into()))?.extend(path.split('/'));
        self.send(Self::version_query(self.http.get(url), version))
    }

    pub fn explore(&self, id: &str, version: Option<u32>) -> Result<Vec<u8>, ClientError> {
        self.send(Self::version_query(self.http.get(self.package_url(id, "/explore")), version))
    }

    pub fn import(&self, bundle: Vec<u8>, origin: &str, title: Option<&str>) -> Result<Vec<u8>, ClientError> {
        let mut form = Form::new()
            .part("bundle", Part::bytes(bundle).file_name("bundle.zip"))
            .text("originPlatform", origin.to_string());
        if let Some(t) = title {
            form = form.text("title", t.to_string());
        }
        self.send(self.http.post(self.url("/api/import")).multipart(form))
    }

    pub fn search(&self, query: &str) -> Result<Vec<u8>, ClientError> {
        self.send(self.http.get(self.url("/api/search")).query(&[("q", query)]))
    }

    pub fn fair(&self, id: &str, version: Option<u32>) -> Result<Vec<u8>, ClientError> {
        self.send(Self::version_query(self.http.get(self.package_url(id, "/fair")), version))
    }

    pub fn metrics(&self, id: &str) -> Result<Vec<u8>, ClientError> {
        self.send(self.http.get(self.package_url(id, "/metrics")))
    }

    /// Parses a JSON response body.
    pub fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ClientError> {
        Self::json(bytes)
    }
}
