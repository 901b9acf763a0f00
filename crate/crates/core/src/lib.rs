// SPDX-License-Identifier: Apache-2.0

//! Join size estimation over locally private data with fast-AGMS sketches.
//!
//! Clients release one perturbed sign of a Hadamard-transformed sketch row
//! ([`client`]); the server accumulates reports into a [`server::PrivateSketch`]
//! and estimates join sizes as the median of row inner products. A two-phase
//! variant separates frequent values to cut collision error, and [`multiway`]
//! extends the sketch to chain joins.

pub mod audit;
pub mod baselines;
pub mod client;
pub mod error;
pub mod fagms;
pub mod harness;
pub mod hashing;
pub mod multiway;
pub mod params;
pub mod seeding;
pub mod server;
pub mod wire;

#[cfg(test)]
mod invariants;

pub use client::{client_perturb, fap_perturb, FapMode, LdpClient, PerturbedReport, SortedIdSet};
pub use error::{Error, Result};
pub use fagms::{fagms_join, true_join_size, FagmsSketch};
pub use hashing::{derive_family, HashFamily, HashPair};
pub use params::SketchParams;
pub use server::{estimate_frequency, merge, prisk_build, JoinEstimate, PrivateSketch};
