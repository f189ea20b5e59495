mod features;
mod forest;
mod kmeans;

pub use features::{featurize, featurize_all, featurize_index};
pub use forest::{
    forest_fit, forest_predict, kfold_cv, ForestConfig, ForestModel, Node, RegressionTree,
    TrainingSet, DEFAULT_CV_FOLDS, DEFAULT_MAX_DEPTH, DEFAULT_TREES,
};
pub use kmeans::{kmeans, kmeans_points, ClusterModel, DEFAULT_CLUSTERS, DEFAULT_MAX_ITER};
