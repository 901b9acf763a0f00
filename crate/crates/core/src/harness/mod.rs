// SPDX-License-Identifier: Apache-2.0

//! Data generation, experiment execution and CSV metrics.

pub mod datagen;
pub mod dataset;
pub mod experiment;
pub mod metrics;

pub use datagen::{gen_gaussian, gen_zipf, zipf_pmf, ZipfSampler};
pub use dataset::{load_dataset, load_pairs, write_dataset, write_pairs};
pub use experiment::{
    bits_per_client, build_workload, ldpjs_sketches, repetition_seed, run_experiment, run_on_workload, DatasetSpec,
    ExperimentConfig, Method, MetricsRecord, MetricsWriter, Workload,
};
pub use metrics::{absolute_error, mean_squared_error, relative_error};
