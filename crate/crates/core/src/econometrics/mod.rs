//! Regression, correlation and rank-contingency analyses.

mod contingency;
mod correlation;
mod ols;
mod report;
mod table;

pub use contingency::{eci_tiers, rank_bins, rank_contingency, tier_label, ContingencyMatrix};
pub use correlation::{average_ranks, pearson, point_biserial, spearman};
pub use ols::{
    columns, dummy_name, ols_fit, spec_consumer, spec_market_boundary, ConsumerVariant, DesignSpec,
    MarketVariant, RegressionResult, INTERCEPT,
};
pub use report::{render_regression_table, ModelColumn};
pub use table::{Column, Table};
