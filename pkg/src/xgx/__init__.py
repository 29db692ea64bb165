"""Glocal explanations of expected-goal (xG) models.

Shapley attributions for single shots, their aggregation over groups of
shots (players, teams, seasons), ceteris-paribus / aggregated / partial
dependence profiles, and the xG metric family.
"""
from .errors import EmptyGroup, MixedBaselines, UnknownFeature, XGXError
from .events import (EncodedDataset, FeatureEncoding, GroupSelector, ShotEvent, build_encoding,
                     encode, match_split, parse_csv, select, write_csv)
from .glocal import (AggregatedAttribution, Grid, Profile, aggregate_profiles, aggregate_shap,
                     cp_profile, make_grid, pdp)
from .metrics import MetricReport, compute_metrics, performance_delta
from .models import (FunctionPredictor, GBTConfig, GBTModel, LogisticModel, Predictor, evaluate,
                     load_model, predict_batch, save_model, train_gbt, train_logistic)
from .shapley import (Attribution, BackgroundSet, FeatureGrouping, exact_shap, explain, explain_rows,
                      sampled_shap, value_function)

__version__ = "0.1.0"

__all__ = [
    "EmptyGroup",
    "MixedBaselines",
    "UnknownFeature",
    "XGXError",
    "EncodedDataset",
    "FeatureEncoding",
    "GroupSelector",
    "ShotEvent",
    "build_encoding",
    "encode",
    "match_split",
    "parse_csv",
    "select",
    "write_csv",
    "AggregatedAttribution",
    "Grid",
    "Profile",
    "aggregate_profiles",
    "aggregate_shap",
    "cp_profile",
    "make_grid",
    "pdp",
    "MetricReport",
    "compute_metrics",
    "performance_delta",
    "FunctionPredictor",
    "GBTConfig",
    "GBTModel",
    "LogisticModel",
    "Predictor",
    "evaluate",
    "load_model",
    "predict_batch",
    "save_model",
    "train_gbt",
    "train_logistic",
    "Attribution",
    "BackgroundSet",
    "FeatureGrouping",
    "exact_shap",
    "explain",
    "explain_rows",
    "sampled_shap",
    "value_function",
]
