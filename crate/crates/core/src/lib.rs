//! Sliding extended coprime nested arrays (SECNA) and non-circular DOA estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: physical sensor layouts (SECNA, nested, ULA) and closed-form
//!   DOF expressions for the SECNA, ESNA and RSNA families.
//! - [`coarray`]: exact integer sum/difference co-array algebra, contiguous
//!   segment (DOF) and aperture (VAA) analysis, and the lag selection map.
//! - [`signal`]: synthetic non-circular far-field snapshots.
//! - [`estimation`]: extended covariance, lag averaging, spatial smoothing and
//!   MUSIC on the virtual uniform array.
//! - [`harness`]: RMSE, Monte Carlo sweeps and the DOF comparison table.
//!
//! Positions are exact. Every sensor sits on `k * d` or `(k + 1/2) * d` with
//! `d = λ/2`, all sensors of an array on the same lattice, so every co-array
//! lag is an integer multiple of `d`.

pub mod coarray;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod signal;

pub use coarray::{LagSet, Segment, VirtualUla};
pub use error::{Error, Result};
pub use estimation::{DoaEstimator, ExtendedCovariance, Music, SmoothedCovariance, SpectrumResult, VirtualSnapshot};
pub use geometry::{ArraySpec, CoprimePair, Design, SecnaDesign, SensorArray};
pub use harness::{DofTable, ExperimentConfig, RmseReport, Sweep};
pub use signal::{Scenario, SnapshotMatrix};

/// Complex sample type used throughout.
pub type C64 = nalgebra::Complex<f64>;
