//! Binary lab, chart, medication and microbiology features with one
//! class-weighted decision tree per code.

mod model;
mod schema;
mod tree;

pub use model::{TabularConfig, TreeEnsembleModel, TABULAR_MODEL_FILE};
pub use schema::{
    default_chart_ranges, fit_schema, vectorize, BinaryFeatureVector, ChartRange, FeatureId, FeatureSchema, Table,
};
pub use tree::{balanced_weights, fit_tree, fit_trees, DecisionTree, TrainingColumns, TreeNode, TreeParams};
