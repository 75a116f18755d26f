//! Benchmark construction for the two evaluation settings.
//!
//! A [`CuratedExample`] carries pre-selected patient events. [`to_agentic`]
//! drops them and keeps only the time of the latest one as the cutoff, so
//! both settings ask the same question about the same moment.
//! [`verify_pairing`] checks that the curated events are exactly what the
//! evidence-seeking agent can reach.

mod build;
mod curated;
mod error;
pub mod synth;
mod verify;

pub use build::{benchmark_digest, build_benchmark, build_benchmark_file, BenchManifest, BuildConfig};
pub use curated::{
    read_benchmark, read_curated, to_agentic, write_benchmark, write_curated, ContextEvent, CuratedExample,
    PairedExample, MAX_CONTEXT_EVENTS,
};
pub use error::BenchError;
pub use verify::{verify_pairing, CheckResult, PairingReport};
