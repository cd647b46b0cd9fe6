//! Cross-domain evaluation, domain-shift measurement, attention export and
//! cost accounting.

mod attention;
mod cost;
mod emd;
mod metrics;

pub use attention::{export_attention, AttentionExport};
pub use cost::{
    acceleration_ratio, bench_latency, cost_report, count_flops, count_params, CostReport, FlopConvention,
    LatencyStats,
};
pub use emd::{emd_1d, shift_report, ChannelShift, Shift, ShiftReport, DEFAULT_BINS};
pub use metrics::{
    evaluate, metrics_from_labels, prediction_log_csv, read_prediction_log, EvalResult, PredictionRecord,
};
