//! Temporal analysis of package dependency networks.
//!
//! A [`ingest::Dataset`] of packages, releases and declared dependencies is
//! turned into point-in-time [`snapshot::SnapshotGraph`]s, which are queried
//! for direct and transitive structure ([`graphops`]), summarised by
//! h-index style ecosystem indices ([`indices`]) and followed month by month
//! ([`evolution`]). [`stats`] holds the estimators (Lorenz/Gini,
//! Kaplan-Meier, log-rank, growth fits) and [`emit`] the output tables.

pub mod emit;
pub mod evolution;
pub mod fixtures;
pub mod graphops;
pub mod indices;
pub mod ingest;
pub mod snapshot;
pub mod stats;
pub mod time;
pub mod version;

/// Runs `f` on a dedicated rayon pool with `jobs` worker threads.
/// Results never depend on `jobs`.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}
