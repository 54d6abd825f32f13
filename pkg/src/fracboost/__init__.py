"""Gradient-boosted regression trees for forecasting post-fracturing oil rate."""
from .boosting import BoostConfig, BoostedModel, fit_gbm, predict
from .data import (Dataset, EncodedMatrix, FeatureSchema, encode, fit_encoding,
                   load_dataset, parse_schema)
from .evaluation import cv_tune, mae, pearson, repeated_split_eval
from .model_io import load_model, save_model
from .tree import RegressionTree, best_split, fit_tree

__version__ = "0.1.0"

__all__ = [
    "BoostConfig", "BoostedModel", "Dataset", "EncodedMatrix", "FeatureSchema",
    "RegressionTree", "best_split", "cv_tune", "encode", "fit_encoding", "fit_gbm",
    "fit_tree", "load_dataset", "load_model", "mae", "parse_schema", "pearson",
    "predict", "repeated_split_eval", "save_model",
]
