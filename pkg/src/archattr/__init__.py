"""archattr: structural characterization of convolutional network
architectures and pre-training performance prediction."""

__version__ = "0.1.0"

from .attributes import (
    ATTRIBUTE_NAMES,
    AttributeTable,
    AttributeVector,
    average_depth,
    extract_attributes,
)
from .dataset import Dataset, balance_classes, train_test_split
from .forest import Ensemble, ModelSpec, feature_importances, fit_ensemble, kfold_cv, prune_loop
from .graph import (
    LayerSpec,
    NetworkGraph,
    enumerate_io_paths,
    parse_network,
    serialize_network,
    topological_order,
)
from .popgen import GenConfig, PlantSpec, generate_population, planted_accuracy, sample_architecture
from .regression import boxcox_lambda, boxcox_transform, interaction_expand, ols_fit, standardize
from .shapes import GridShape, ShapeTable, conv_output_dim, infer_shapes, pool_output_dim

__all__ = [
    "ATTRIBUTE_NAMES",
    "AttributeTable",
    "AttributeVector",
    "Dataset",
    "Ensemble",
    "GenConfig",
    "GridShape",
    "LayerSpec",
    "ModelSpec",
    "NetworkGraph",
    "PlantSpec",
    "ShapeTable",
    "average_depth",
    "balance_classes",
    "boxcox_lambda",
    "boxcox_transform",
    "conv_output_dim",
    "enumerate_io_paths",
    "extract_attributes",
    "feature_importances",
    "fit_ensemble",
    "generate_population",
    "infer_shapes",
    "interaction_expand",
    "kfold_cv",
    "ols_fit",
    "parse_network",
    "planted_accuracy",
    "pool_output_dim",
    "prune_loop",
    "sample_architecture",
    "serialize_network",
    "standardize",
    "topological_order",
    "train_test_split",
    "__version__",
]
