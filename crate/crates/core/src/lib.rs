//! Replication-package toolkit and repository bridge service.
//!
//! * [`package`]: the package data model, versioning with provenance, and
//!   the canonical manifest.
//! * [`dockerfile`]: Dockerfile parsing, reproducibility lint rules, and the
//!   deposit gate.
//! * [`runseq`]: execution-command capture and launch plans.
//! * [`fair`]: FAIR reports, badges, usage counters, and index entries.
//! * [`service`]: the file-backed store, explore bundles, and the HTTP API.
//! * [`cli`]: the command-line frontend behind the `repro-bridge` binary.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example <name>`.

pub mod canonical;
pub mod cli;
pub mod dockerfile;
pub mod fair;
pub mod package;
pub mod runseq;
pub mod service;
