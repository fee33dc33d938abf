//! Dense symmetric linear algebra, Kronecker algebra, spectral functions,
//! Wishart sampling and the Fisher information metric.

pub mod eigen;
pub mod kron;
pub mod matrix;
pub mod spd;
pub mod sym;
pub mod tensor;
pub mod wishart;

pub use eigen::{matrix_exp, sym_eigen, SymEigen};
pub use kron::{kron_matrix, kron_sym, KroneckerCov, ModeDims, DEFAULT_MATERIALIZE_CAP};
pub use matrix::Matrix;
pub use spd::{affine_invariant_distance, fim_inner, matrix_log, spd_power, FimMetric, SpdMatrix};
pub use sym::SymMatrix;
pub use wishart::{cov_metric_check, sample_wishart, sample_wishart_kron, CovMetricCheck, SampleCov};
