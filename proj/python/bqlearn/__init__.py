"""Biquality learning: trusted plus untrusted data, one classifier."""

import numpy as np

from ._core import (
    BqlearnError,
    Predictor,
    algorithm_names,
    estimate_transition_glc,
    evaluate,
    fit,
    kfold_splits,
    make_biquality_cv,
    make_feature_dependent_label_noise,
    make_imbalance,
    make_instance_dependent_label_noise,
    make_label_noise,
    make_sampling_biais,
    make_sampling_bias,
    make_weak_labels,
    solve_kmm,
    tradaboost_source_beta,
    uncertainty_noise_probability,
)

__all__ = [
    "BiqualityClassifier",
    "BqlearnError",
    "Predictor",
    "algorithm_names",
    "estimate_transition_glc",
    "evaluate",
    "fit",
    "kfold_splits",
    "make_biquality_cv",
    "make_feature_dependent_label_noise",
    "make_imbalance",
    "make_instance_dependent_label_noise",
    "make_label_noise",
    "make_sampling_biais",
    "make_sampling_bias",
    "make_weak_labels",
    "solve_kmm",
    "tradaboost_source_beta",
    "uncertainty_noise_probability",
]


class BiqualityClassifier:
    """fit(X, y, sample_quality) / predict_proba(X) wrapper around `fit`.

    Labels may be any hashable values; they are encoded to 0..K-1 in sorted
    order and decoded again by `predict`.
    """

    def __init__(self, algorithm="irbl", **options):
        if algorithm not in algorithm_names():
            raise ValueError(f"unknown algorithm: {algorithm}")
        self.algorithm = algorithm
        self.options = options

    def fit(self, X, y, sample_quality):
        self.classes_, codes = np.unique(np.asarray(y), return_inverse=True)
        self.model_ = fit(
            self.algorithm,
            np.asarray(X, dtype=np.float64),
            codes.astype(np.int32),
            np.asarray(sample_quality, dtype=np.int32),
            n_classes=len(self.classes_),
            **self.options,
        )
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(np.asarray(X, dtype=np.float64))

    def predict(self, X):
        return self.classes_[self.model_.predict(np.asarray(X, dtype=np.float64))]
