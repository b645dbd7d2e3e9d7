//! Discriminant spectral filter banks learned from labeled spectra.

mod dataset;
mod filters;
mod mlp;
mod model;
mod pca;
mod svm;

pub use dataset::{split_dataset, LabeledSpectra, Split};
pub use filters::{matched_filter, FilterSource, SpectralFilterBank};
pub use mlp::{init_mlp, train_mlp, Dense, MlpConfig, MlpModel, MlpTraining, Optimizer};
pub use model::{decode_model, encode_model, extract_filters, load_model, save_model, Model};
pub use pca::{pca_init, Pca};
pub use svm::{
    argmax, default_reg_grid, log_grid, svm_hyperparameter_search, svm_objective, train_svm, SearchResult, SvmConfig,
    SvmModel,
};
