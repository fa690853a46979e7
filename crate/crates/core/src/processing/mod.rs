//! CIR extraction, gating and channel metrics.

pub mod cir;
pub mod eigen;
pub mod gating;
pub mod metrics;
pub mod report;

pub use cir::{cir_from_grid, cir_from_tf, RawCir, Window};
pub use eigen::{
    correlation_and_eigen, correlation_matrix, eigen_span_db, gammas, hermitian_eigenvalues, EigenMetrics, Gamma,
};
pub use gating::{threshold_and_gate, GateConfig, GatedCir};
pub use metrics::{
    argmax_column, column_power_profile, los_bin_power, rms_delay_spread, rms_delay_spread_pdp, rx_power,
    strongest_port, to_dbs, DelaySpread,
};
pub use report::{
    analyze_snapshot, route_report, summarize, write_metrics_csv, AnalysisOptions, RouteReport, RouteRow,
    ScenarioSummary, SnapshotMetrics, Stat,
};
