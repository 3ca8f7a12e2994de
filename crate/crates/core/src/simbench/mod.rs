//! Simulation tools: the Donoho–Johnstone test functions, RSNR-calibrated
//! one-way data, pointwise F-test comparators, AMSE and ROC summaries.

mod bench;
mod ftest;
mod functions;
mod metrics;
mod scenario;

pub use bench::{run_benchmark, score, BenchConfig, BenchOutput, BenchRow, Method};
pub use ftest::{f_survival, one_way_f, pointwise_f_test, FDomain, FTest};
pub use functions::{grid, noise_sigma_for_rsnr, sample_sd, test_function, unit_test_function, TestFunction};
pub use metrics::{amse, roc, Roc};
pub use scenario::{generate, Dataset, Effect, Scenario};
