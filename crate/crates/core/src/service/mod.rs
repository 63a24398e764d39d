//! The deposit/explore HTTP service: a content-addressed package store,
//! the operations over it, and the axum router that exposes them.

mod api;
mod bundle;
mod config;
mod http;
mod search;
mod store;

pub use api::{
    ApiError, ApiResult, BundleFile, DepositReceipt, DepositRequest, ErrorKind, ImportReceipt, ImportRequest,
    PublishReceipt, Service, VersionRequest,
};
pub use bundle::{
    read_bundle, write_bundle, BundleError, ParsedBundle, FILES_PREFIX, LAUNCH_PLAN_MEMBER, MANIFEST_MEMBER,
};
pub use config::{ServiceConfig, DEFAULT_LISTEN, DEFAULT_SIZE_CAP};
pub use http::{router, serve, BackgroundServer, ServeError, ACK_HEADER, DRAFT_TOKEN_HEADER};
pub use search::{SearchHit, SearchIndex};
pub use store::{Store, StoreError};
