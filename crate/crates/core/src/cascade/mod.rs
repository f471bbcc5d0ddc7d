//! Boosted Haar cascades: model parsing and multi-scale detection.

mod detect;
mod model;

pub use detect::{
    detect_in_region, detect_multiscale, evaluate_window, group_detections, Detection, DEFAULT_MIN_NEIGHBORS,
    DEFAULT_SCALE_FACTOR, GROUP_OVERLAP,
};
pub use model::{parse_cascade, CascadeModel, CascadeStage, FeatureRect, HaarFeature, WeakClassifier};
