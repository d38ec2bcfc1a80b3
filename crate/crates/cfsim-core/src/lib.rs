//! Core algorithms for simulating the downlink of a non-coherent
//! user-centric cell-free MIMO network.
//!
//! The crate covers the full per-slot pipeline:
//!
//! * [`netgen`] — wrap-around hexagonal layouts, path loss, shadowing and
//!   user-centric serving clusters,
//! * [`pilots`] — location-based pilot assignment via agglomerative
//!   clustering,
//! * [`channel`] — Rayleigh channel draws, the uplink pilot phase, LMMSE
//!   estimation and the error covariances used for robust beamforming,
//! * [`solver`] — the iterative weighted-sum-rate solver that jointly
//!   produces beamformers and a per-RRH user schedule,
//! * [`baselines`] — round-robin scheduling with zero-forcing or conjugate
//!   beamforming reference schemes,
//! * [`simloop`] — the multi-slot proportional-fairness simulation.
//!
//! Everything here is pure computation: no IO, no clocks, no global state.
//! All randomness flows through explicitly seeded generators, so a given
//! configuration reproduces bit-identical results. The crate is `no_std`
//! compatible (with `alloc`); file formats and the CLI live in the
//! companion `cfsim-cli` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baselines;
pub mod channel;
pub mod links;
pub mod math;
pub mod netgen;
pub mod pilots;
pub mod simloop;
pub mod solver;

pub use links::LinkSet;
pub use netgen::{LayoutConfig, NetworkRealization};
pub use pilots::PilotAssignment;
pub use channel::ChannelSet;
pub use solver::{Schedule, SolverConfig, SolverState};
