//! Panel construction and fixed-effects regressions with clustered errors.

mod cluster;
mod demean;
mod model;
mod ols;
mod panel;
mod returns;
mod stats;
mod table;
mod winsor;

pub use cluster::{
    cluster_cov_one_way, cluster_covariance, cluster_meat, intersect_ids, ClusteredCovariance, EigenFloor,
};
pub use demean::{demean, demean_column, DemeanReport, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use model::{
    fit_fe_model, fit_interaction_model, fit_leads, lead_name, median, CmpOp, Coefficient, Diagnostics, Filter,
    InteractionSpec, MedianSide, RegressionResult, RegressionSpec,
};
pub use ols::{ols, OlsFit, RANK_TOL};
pub use panel::{Panel, ID_COLUMNS};
pub use returns::{
    compute_returns, ReturnConfig, VolWindow, CLOSE_OPEN, LAG_OPEN_CLOSE, LOG_MCAP, OPEN_CLOSE, RET_M20_M1, VOLATILITY,
};
pub use stats::{correlation_matrix, correlation_p_value, pearson, summary_stats, CorrelationMatrix, SummaryRow};
pub use table::{
    correlation_stars, correlation_table, regression_stars, regression_table, summary_table, write_correlation_csv,
    write_regression_csv, write_summary_csv,
};
pub use winsor::{quantile_type1, winsorize, winsorize_in_place};
