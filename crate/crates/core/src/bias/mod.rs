//! Per-attribute bias statistics from response logs.

mod correlation;
mod distribution;
mod summary;

pub use correlation::{
    labor_correlation, load_labor_table, model_gap_correlation, parse_labor_table, GapCorrelation, LaborCorrelation,
    LaborRow, LABOR_CONVENTION,
};
pub use distribution::{
    build_all_distributions, build_distributions, discretized_gap, EvalIndex, GenderSplitDistribution, ImageMeta,
    Pooling,
};
pub use summary::{
    bias_statistic, dataset_breakdown, rank_models, series_mean_gaps, summarize_model, summarize_model_over,
    BiasConfig, BiasStatistic, Direction, ModelBiasSummary,
};
