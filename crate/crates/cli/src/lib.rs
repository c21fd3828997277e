//! IO, file formats, and the command-line front end for the ring-lattice
//! continuation library.
//!
//! The library crate does all numerics; this crate owns model
//! configuration files, diagram export (JSON/CSV), SVG rendering, the
//! asymptotic-law verification harness with its JSON report, and the
//! `ring-snake` binary.

pub mod config;
pub mod export;
pub mod outio;
pub mod svg;
pub mod verify;

/// Worker cap honored by parallel sweeps: the `RING_SNAKE_THREADS`
/// environment variable, defaulting to the available parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("RING_SNAKE_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
