//! Independent curvature checks on explicit coordinate charts.
//!
//! Nothing here uses the closed-form Ricci formula: metrics are written out
//! in coordinates and differentiated numerically.

mod chart;
mod compare;
mod fd;
mod theta;

pub use chart::{build_chart_metric, ChartMetric, HopfGauge, Mat4};
pub use compare::{
    compare_ansatz, compare_einstein, compare_flat, conformal_rescale_ricci, fd_laplacian, pipeline_ricci_in_chart,
    sample_ansatz_points, sample_hopf_points, scalar_jet, OracleReport,
};
pub use fd::{christoffel, fd_curvature, metric_jet, relative_error, selfduality_residual, FdCurvature, FdOptions, MetricJet, Riemann};
pub use theta::{QuadratureOptions, ThetaPotential};
