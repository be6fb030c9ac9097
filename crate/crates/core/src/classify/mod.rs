//! Random-forest classification and detection metrics.

mod forest;
mod metrics;
mod split;

pub use forest::{ForestModel, ForestParams, Tree, MODEL_FORMAT_VERSION};
pub use metrics::{auroc, evaluate, f1_accuracy, tpr_at_fpr, EvalReport, DEFAULT_FPR_CAP};
pub use split::split_train_test;
