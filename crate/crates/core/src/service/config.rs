use std::net::SocketAddr;
use std::path::PathBuf;

use crate::fair::KnownPlatforms;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8350";
pub const DEFAULT_SIZE_CAP: u64 = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store_root: PathBuf,
    /// Maximum total file bytes accepted by one deposit, version, or import.
    pub size_cap: u64,
    pub known_platforms: KnownPlatforms,
}

impl ServiceConfig {
    pub fn new(store_root: impl Into<PathBuf>) -> Self {
        Self {
            listen: DEFAULT_LISTEN.parse().expect("valid default address"),
            store_root: store_root.into(),
            size_cap: DEFAULT_SIZE_CAP,
            known_platforms: KnownPlatforms::default(),
        }
    }

    pub fn with_listen(mut self, listen: SocketAddr) -> Self {
        self.listen = listen;
        self
    }

    pub fn with_size_cap(mut self, size_cap: u64) -> Self {
        self.size_cap = size_cap;
        self
    }
}
