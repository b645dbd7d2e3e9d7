//! Feature normalization, per-pixel inference, and evaluation.

mod features;
mod metrics;
mod sweep;

pub use features::{
    classify_digital, classify_pixels, full_scan_then_project, normalize_features, weighted_normalized_spectrum,
    Classifier, FeatureImageSet, PredictedLabelMap, ScoreMap, DEFAULT_FLOOR_FRACTION, UNKNOWN,
};
pub use metrics::{confusion_and_accuracy, roc_curve, roc_from_maps, EvalReport, Roc};
pub use sweep::{knee_point, sweep_filter_count, SweepResult, SweepRow, DEFAULT_KNEE_MARGIN};
