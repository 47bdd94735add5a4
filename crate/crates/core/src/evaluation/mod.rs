//! Metrics for both tasks, attention heatmaps and run comparison.

mod compare;
mod heatmap;
mod metrics;
mod predict;

pub use compare::{compare_runs, moving_average, Comparison, ModeGroup};
pub use heatmap::{render_heatmaps, render_html, HeatmapDoc, HeatmapRow, HeatmapTask};
pub use metrics::{acd_metrics, alsc_metrics, AcdReport, ClassScores, MetricsReport};
pub use predict::{argmax, evaluate, predict, predict_one, score_predictions, Evaluation, Prediction};

use crate::network::NetworkError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("{predictions} predictions for {golds} gold labels")]
    Length { predictions: usize, golds: usize },
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    Threshold(f64),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
