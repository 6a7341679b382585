//! RBF support vector machine: feature standardization, SMO training of
//! binary problems, one-vs-one aggregation, grid search and model files.

mod grid;
mod kernel;
mod multiclass;
mod persist;
mod scaler;
mod smo;

pub use grid::{grid_search, stratified_folds, CvCell, CvReport, DEFAULT_C_GRID, DEFAULT_GAMMA_GRID};
pub use kernel::{gram_matrix, rbf_kernel};
pub use multiclass::{predict_multiclass, train_model, ModelMetadata, Prediction, SvmModel};
pub use persist::{load_model, model_from_bytes, model_to_bytes, model_to_json, save_model, FORMAT_VERSION, MAGIC};
pub use scaler::{apply_scaler, fit_scaler, FeatureScaler};
pub use smo::{dual_objective, train_binary, train_binary_detailed, BinarySvm, BinaryTraining, SvmHyperParams};
