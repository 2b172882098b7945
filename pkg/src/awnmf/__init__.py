"""Adaptive weighted robust nonnegative matrix factorization."""

from .clustering import KMeansResult, accuracy, kmeans, nmi
from .data import LabeledDataset, add_noise, load_csv, save_csv, synth_planted
from .nmf import (
    Factorization,
    Method,
    SolverOptions,
    column_residuals,
    euc_update_h,
    euc_update_w,
    ewrnmf_update_w,
    ewrnmf_weights,
    fit,
    fwrnmf_update_w,
    fwrnmf_weights,
    init_factors,
    objective,
    shared_update_h,
)

__version__ = "0.1.0"
