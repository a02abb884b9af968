"""Benchmark toolkit for unsupervised near-duplicate image detection.

Thin re-export of the compiled core: descriptor extraction (gist, spoc,
rmac), PCA whitening, exact L2 search, hard-negative mining, ROC/AUC
evaluation, and collection-scale false-positive projection.
"""

from ._core import (
    FlatIndex,
    InputError,
    InvariantError,
    PcaModel,
    __version__,
    auc_ci,
    expected_tp,
    fp_projection,
    gist,
    load_image,
    mine_hard_negatives,
    pair_distance,
    pca_train,
    project_fp_rate,
    resize,
    rmac,
    roc,
    spoc,
    specificity_floor,
    triplet_loss,
)

__all__ = [
    "FlatIndex",
    "InputError",
    "InvariantError",
    "PcaModel",
    "__version__",
    "auc_ci",
    "expected_tp",
    "fp_projection",
    "gist",
    "load_image",
    "mine_hard_negatives",
    "pair_distance",
    "pca_train",
    "project_fp_rate",
    "resize",
    "rmac",
    "roc",
    "spoc",
    "specificity_floor",
    "triplet_loss",
]
