//! Hypothesis tests and correlation coefficients.

mod correlation;
mod ttest;

pub use correlation::{pearson, ranks, spearman};
pub use ttest::{mean, sample_variance, two_sample_test, two_sample_test_with, TTestFlavor, TTestResult, P_FLOOR};
