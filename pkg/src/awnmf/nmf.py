"""Euclidean NMF and the two adaptive-weighted robust variants.

All three solvers share one loop: (column weights) -> W update -> H update.
Data points are the columns of ``X`` (shape M x N); ``W`` is M x L and ``H``
is L x N.  Weighted methods keep a length-N weight vector ``Q`` on the
probability simplex; a small weight flags a suspected outlier column.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    HyperparameterError,
    NonnegativityError,
    ShapeMismatchError,
    UnknownMethodError,
)

EPSILON_GUARD = 1e-12


class Method(str, enum.Enum):
    EUC = "EucNMF"
    FW = "FWRNMF"
    EW = "EWRNMF"

    @classmethod
    def parse(cls, value):
        if isinstance(value, Method):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if m.value.lower() == key or m.name.lower() == key:
                return m
        raise UnknownMethodError(f"unknown method {value!r}; expected one of "
                                 f"{[m.value for m in cls]}")

    def __str__(self):
        return self.value


@dataclass
class SolverOptions:
    max_iterations: int = 500
    rel_tolerance: float = 1e-6
    epsilon_guard: float = EPSILON_GUARD
    rng_seed: int = 0
    hyper_p: float | None = None
    hyper_gamma: float | None = None

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be > 0")
        if not self.epsilon_guard > 0:
            raise ValueError("epsilon_guard must be > 0")


@dataclass
class Factorization:
    """Result of a factorization run.

    ``Q`` is the final column-weight vector (uniform ``1/N`` for EucNMF) and
    ``objective_trace[t]`` is the method's objective after outer iteration
    ``t + 1``.
    """

    W: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def rank(self):
        return self.W.shape[1]


def as_data_matrix(X):
    """Validate and return ``X`` as a float64 2-D nonnegative array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"data matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionError(f"data matrix must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonnegativityError("data matrix contains non-finite entries")
    if np.any(X < 0):
        raise NonnegativityError("data matrix has negative entries")
    return X


def _check_rank(M, L, N):
    if min(M, L, N) < 1:
        raise DimensionError(f"dimensions must be >= 1, got M={M}, L={L}, N={N}")
    if L > min(M, N):
        raise DimensionError(f"rank L={L} exceeds min(M, N)={min(M, N)}")


def _check_shapes(X, W, H):
    X, W, H = np.asarray(X, float), np.asarray(W, float), np.asarray(H, float)
    if X.ndim != 2 or W.ndim != 2 or H.ndim != 2:
        raise ShapeMismatchError("X, W and H must all be 2-D")
    if W.shape[0] != X.shape[0] or H.shape[1] != X.shape[1] or W.shape[1] != H.shape[0]:
        raise ShapeMismatchError(
            f"shapes do not conform: X {X.shape}, W {W.shape}, H {H.shape}")
    return X, W, H


def _check_weights(Q, N):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.shape != (N,):
        raise ShapeMismatchError(f"weight vector must have shape ({N},), got {Q.shape}")
    return Q


def _check_p(p):
    if p is None or not np.isfinite(p) or p <= 1:
        raise HyperparameterError(f"FWRNMF requires p > 1, got {p!r}")
    return float(p)


def _check_gamma(gamma):
    if gamma is None or not np.isfinite(gamma) or gamma <= 0:
        raise HyperparameterError(f"EWRNMF requires gamma > 0, got {gamma!r}")
    return float(gamma)


def init_factors(M, L, N, seed, epsilon_guard=EPSILON_GUARD):
    """Draw positive W (M x L) and H (L x N) uniformly from (epsilon_guard, 1]."""
    _check_rank(M, L, N)
    rng = np.random.default_rng(seed)
    # 1 - U[0, 1) lies in (0, 1]
    W = np.maximum(1.0 - rng.random((M, L)), epsilon_guard)
    H = np.maximum(1.0 - rng.random((L, N)), epsilon_guard)
    Q = np.full(N, 1.0 / N)
    return Factorization(W=W, H=H, Q=Q)


def column_residuals(X, W, H):
    """Squared reconstruction error of every column, ``Z_j = sum_i (X - WH)_ij^2``."""
    X, W, H = _check_shapes(X, W, H)
    R = X - W @ H
    return np.einsum("ij,ij->j", R, R)


def _weighted_update_w(X, W, H, d, eps):
    # d are diagonal column weights; only their ratios matter
    Hd = H * d
    num = (X * d) @ H.T
    den = W @ (Hd @ H.T)
    return W * num / np.maximum(den, eps)


def euc_update_w(X, W, H, epsilon_guard=EPSILON_GUARD):
    X, W, H = _check_shapes(X, W, H)
    num = X @ H.T
    den = W @ (H @ H.T)
    return W * num / np.maximum(den, epsilon_guard)


def euc_update_h(X, W, H, epsilon_guard=EPSILON_GUARD):
    X, W, H = _check_shapes(X, W, H)
    num = W.T @ X
    den = (W.T @ W) @ H
    return H * num / np.maximum(den, epsilon_guard)


# Column weights cancel in every column's H-subproblem, so both weighted
# methods reuse the plain Euclidean H rule.
shared_update_h = euc_update_h


def fwrnmf_update_w(X, W, H, Q, p, epsilon_guard=EPSILON_GUARD):
    """W update for the fuzzifier-weighted objective ``sum_j Q_j^p Z_j``.

    The diagonal weights are rescaled so the largest is 1.  This leaves the
    update unchanged in exact arithmetic but keeps ``Q^p`` away from the
    denominator floor for large ``p``.
    """
    X, W, H = _check_shapes(X, W, H)
    Q = _check_weights(Q, X.shape[1])
    p = _check_p(p)
    qmax = Q.max()
    if qmax <= 0:
        raise HyperparameterError("weight vector is identically zero")
    d = (Q / qmax) ** p
    return _weighted_update_w(X, W, H, d, epsilon_guard)


def ewrnmf_update_w(X, W, H, Q, epsilon_guard=EPSILON_GUARD):
    """W update for the entropy-weighted objective (diagonal weighting by Q)."""
    X, W, H = _check_shapes(X, W, H)
    Q = _check_weights(Q, X.shape[1])
    qmax = Q.max()
    if qmax <= 0:
        raise HyperparameterError("weight vector is identically zero")
    return _weighted_update_w(X, W, H, Q / qmax, epsilon_guard)


def fwrnmf_weights(Z, p, zero_tol=0.0):
    """Closed-form minimizer of ``sum_j Q_j^p Z_j`` over the simplex.

    ``Q_j`` is proportional to ``Z_j ** (-1 / (p - 1))``, evaluated in log
    space so it stays finite for any positive residual.  Columns with
    ``Z_j <= zero_tol`` (exact zeros by default) share all the weight
    equally; this is the limit of the formula as their residuals vanish.
    A positive ``zero_tol`` turns tiny residuals into ties at weight 0.
    """
    p = _check_p(p)
    Z = np.asarray(Z, dtype=np.float64)
    zero = Z <= zero_tol
    if zero.any():
        return zero / zero.sum()
    # normalized in log space: the raw powers overflow when p is close to 1
    logits = -np.log(Z) / (p - 1.0)
    logits -= logits.max()
    Q = np.exp(logits)
    return Q / Q.sum()


def ewrnmf_weights(Z, gamma):
    """Softmax weights ``Q_j ∝ exp(-Z_j / gamma)``, shifted by ``min(Z)``."""
    gamma = _check_gamma(gamma)
    Z = np.asarray(Z, dtype=np.float64)
    Q = np.exp(-(Z - Z.min()) / gamma)
    return Q / Q.sum()


def _neg_entropy(Q):
    Q = np.asarray(Q, dtype=np.float64)
    pos = Q > 0
    return float(np.sum(Q[pos] * np.log(Q[pos])))


def _fit_weights(Q, N, method, hyper):
    """Per-column factors of the data-fit term: 1, Q_j^p or Q_j."""
    if method is Method.EUC:
        return np.ones(N)
    Q = _check_weights(Q, N)
    if method is Method.FW:
        return Q ** _check_p(hyper)
    return Q


def _objective_terms(Z, Q, method, hyper):
    """(data-fit term, regularizer) of the method's objective for residuals Z."""
    fit_term = float(np.dot(_fit_weights(Q, Z.shape[0], method, hyper), Z))
    if method is Method.EW:
        return fit_term, _check_gamma(hyper) * _neg_entropy(Q)
    return fit_term, 0.0


def objective(X, W, H, Q, method, hyper=None):
    """Evaluate the objective of ``method``.

    EucNMF: ``||X - WH||_F^2``; FWRNMF: ``sum_j Q_j^p Z_j`` with ``hyper = p``;
    EWRNMF: ``sum_j Q_j Z_j + gamma * sum_j Q_j ln Q_j`` with ``hyper = gamma``
    (``0 ln 0`` is taken as 0).
    """
    method = Method.parse(method)
    fit_term, reg = _objective_terms(column_residuals(X, W, H), Q, method, hyper)
    return fit_term + reg


def _hyper_for(method, opts):
    if method is Method.FW:
        return _check_p(opts.hyper_p)
    if method is Method.EW:
        return _check_gamma(opts.hyper_gamma)
    return None


def normalize_factors(W, H):
    """Scale W's columns to unit L2 norm and H's rows inversely; WH is unchanged."""
    norms = np.linalg.norm(W, axis=0)
    norms[norms == 0] = 1.0
    return W / norms, H * norms[:, None]


def fit(X, L, method, opts=None, init=None, normalize=True):
    """Factorize ``X ≈ W H`` with ``method`` and rank ``L``.

    Each outer iteration updates Q (weighted methods only), then W, then H,
    and appends the objective to the trace.  The run has converged when, in
    the same iteration,

    * ``|F_t - F_{t-1}|`` is below ``rel_tolerance`` times the previous
      data-fit term (the objective without its entropy part), and
    * the plain error ``||X - WH||_F^2`` changed by less than
      ``rel_tolerance`` relative to its previous value,

    with both scales floored at ``epsilon_guard`` times the matching
    (weighted) sum of squared column norms of X.  The second test matters
    once the weights have concentrated: the weighted objective is then flat
    while H keeps moving for the down-weighted columns.  An exact
    reconstruction also stops the loop, as does ``max_iterations``.

    ``init`` may supply a starting Factorization instead of the seeded
    random draw.  With ``normalize`` the returned factors go through
    :func:`normalize_factors`, which fixes the scale of H before it is
    clustered.
    """
    opts = opts or SolverOptions()
    method = Method.parse(method)
    X = as_data_matrix(X)
    M, N = X.shape
    L = int(L)
    _check_rank(M, L, N)
    hyper = _hyper_for(method, opts)
    eps = opts.epsilon_guard

    if init is None:
        init = init_factors(M, L, N, opts.rng_seed, eps)
    W, H = init.W.copy(), init.H.copy()
    _check_shapes(X, W, H)
    if W.shape[1] != L:
        raise DimensionError(f"initial factors have rank {W.shape[1]}, expected {L}")
    Q = np.full(N, 1.0 / N)

    trace = []
    col_sq = np.einsum("ij,ij->j", X, X)
    floor_plain = eps * float(col_sq.sum())
    prev_fit = prev_plain = None
    converged = False
    it = 0
    for it in range(1, int(opts.max_iterations) + 1):
        if method is Method.EUC:
            W = euc_update_w(X, W, H, eps)
        else:
            Z = column_residuals(X, W, H)
            if method is Method.FW:
                Q = fwrnmf_weights(Z, hyper)
                W = fwrnmf_update_w(X, W, H, Q, hyper, eps)
            else:
                Q = ewrnmf_weights(Z, hyper)
                W = ewrnmf_update_w(X, W, H, Q, eps)
        H = shared_update_h(X, W, H, eps)

        Z = column_residuals(X, W, H)
        fit_term, reg = _objective_terms(Z, Q, method, hyper)
        plain = float(Z.sum())
        trace.append(fit_term + reg)
        if plain <= floor_plain:
            converged = True
            break
        if prev_fit is not None:
            # scales floored at a machine-precision fit; F_FW carries ~N^-p
            floor_fit = eps * float(np.dot(_fit_weights(Q, N, method, hyper), col_sq))
            tol = opts.rel_tolerance
            if (abs(trace[-2] - trace[-1]) <= tol * max(prev_fit, floor_fit)
                    and abs(prev_plain - plain) <= tol * max(prev_plain, floor_plain)):
                converged = True
                break
        prev_fit, prev_plain = fit_term, plain

    if normalize:
        W, H = normalize_factors(W, H)
    return Factorization(W=W, H=H, Q=Q, objective_trace=trace,
                         iterations_run=it, converged=converged)
