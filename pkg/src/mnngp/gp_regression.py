"""Exact GP posterior inference for classification-as-regression.

Class labels become one-hot regression targets (0.9 for the true class,
-0.1 elsewhere); the posterior mean under the kernel prior is solved
through a Cholesky factorization of the jittered training kernel, and
predictions decode by row-argmax.  The jitter starts at a caller-chosen
noise variance and escalates by factors of 10 until the factorization
succeeds, up to a hard cap, after which the run fails loudly rather
than silently flooding the model with noise.

All solves go through the factorization; no explicit inverses anywhere.
Everything here is deterministic: same inputs, same outputs, including
the escalation count.
"""

from dataclasses import dataclass
from typing import Optional

import math

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from mnngp.errors import ConditioningError, UsageError

TARGET_ON = 0.9
TARGET_OFF = -0.1
# sigma_eps^2 may grow by at most this many factors of 10 past noise0
# (1e-10 -> 1.0 on the default); beyond that the kernel is declared
# irrecoverable.
MAX_ESCALATIONS = 10


def encode_targets(labels, n_classes):
    """n x C matrix with 0.9 at the true class and -0.1 elsewhere."""
    if not isinstance(n_classes, (int, np.integer)) or n_classes < 1:
        raise UsageError(f"n_classes must be a positive integer, got {n_classes!r}")
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size < 1:
        raise UsageError(f"labels must be a nonempty vector, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise UsageError("labels must be integers")
        arr = arr.astype(np.int64)
    if arr.min() < 0 or arr.max() >= n_classes:
        raise UsageError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{arr.min()}, {arr.max()}]"
        )
    out = np.full((arr.size, int(n_classes)), TARGET_OFF)
    out[np.arange(arr.size), arr] = TARGET_ON
    return out


@dataclass
class PosteriorResult:
    """Posterior mean (and optional covariance) with solver provenance."""

    mean: np.ndarray
    cov: Optional[np.ndarray]
    noise_used: float
    escalations: int


def _as_square(K, label):
    arr = np.asarray(K, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise UsageError(f"{label} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{label} contains non-finite entries")
    scale = np.abs(arr).max()
    if np.abs(arr - arr.T).max() > 1e-8 * max(scale, 1.0):
        raise UsageError(f"{label} is not symmetric")
    return arr


def solve_with_jitter(K_train, noise0):
    """Cholesky of K + sigma_eps^2 I with escalating jitter.

    Returns (handle, noise_used, escalations); the handle feeds
    cho_solve and is immutable, so one factorization can serve any
    number of right-hand sides.  noise_used is exactly
    noise0 * 10**escalations.
    """
    K = _as_square(K_train, "K_train")
    noise0 = float(noise0)
    if not (math.isfinite(noise0) and noise0 > 0.0):
        raise UsageError(f"noise0 must be positive and finite, got {noise0!r}")
    n = K.shape[0]
    eye = np.eye(n)
    for escalations in range(MAX_ESCALATIONS + 1):
        noise = noise0 * 10.0**escalations
        try:
            handle = cho_factor(K + noise * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
        return handle, noise, escalations
    raise ConditioningError(
        f"kernel is not positive definite even with sigma_eps^2 = "
        f"{noise0 * 10.0**MAX_ESCALATIONS:g} after {MAX_ESCALATIONS} "
        "escalations; the kernel matrix is irrecoverably ill-conditioned",
        noise_final=noise0 * 10.0**MAX_ESCALATIONS,
        escalations=MAX_ESCALATIONS,
    )


def _as_cross(K_cross, n_train):
    arr = np.asarray(K_cross, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != n_train:
        raise UsageError(
            f"K_cross must be m x {n_train}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise UsageError("K_cross contains non-finite entries")
    return arr


def posterior_mean(K_train, K_cross, targets, noise0):
    """mu = K_cross (K_train + sigma_eps^2 I)^{-1} targets."""
    handle, noise, escalations = solve_with_jitter(K_train, noise0)
    n = np.asarray(K_train).shape[0]
    cross = _as_cross(K_cross, n)
    T = np.asarray(targets, dtype=np.float64)
    if T.ndim != 2 or T.shape[0] != n:
        raise UsageError(f"targets must be {n} x C, got shape {T.shape}")
    alpha = cho_solve(handle, T, check_finite=False)
    return PosteriorResult(
        mean=cross @ alpha, cov=None, noise_used=noise, escalations=escalations
    )


def posterior_cov(K_train, K_cross, K_test, noise0):
    """Sigma = K_test - K_cross (K_train + sigma_eps^2 I)^{-1} K_cross^T."""
    handle, _, _ = solve_with_jitter(K_train, noise0)
    n = np.asarray(K_train).shape[0]
    cross = _as_cross(K_cross, n)
    test = _as_square(K_test, "K_test")
    if test.shape[0] != cross.shape[0]:
        raise UsageError(
            f"K_test is {test.shape} but K_cross has {cross.shape[0]} rows"
        )
    solved = cho_solve(handle, cross.T, check_finite=False)
    cov = test - cross @ solved
    return (cov + cov.T) / 2.0


def predict_classes(mean):
    """Row argmax; ties resolve to the lowest class index."""
    arr = np.asarray(mean)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise UsageError(f"mean must be m x C, got shape {arr.shape}")
    return np.argmax(arr, axis=1)


def accuracy(pred, truth):
    """Fraction of exact matches."""
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.ndim != 1 or p.shape != t.shape or p.size < 1:
        raise UsageError(
            f"prediction and truth must be equal-length vectors, got "
            f"{p.shape} and {t.shape}"
        )
    return float(np.mean(p == t))


def per_class_accuracy(pred, truth, n_classes):
    """Per-true-class accuracy; None for classes absent from truth."""
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.ndim != 1 or p.shape != t.shape or p.size < 1:
        raise UsageError("prediction and truth must be equal-length vectors")
    out = []
    for c in range(int(n_classes)):
        mask = t == c
        if not mask.any():
            out.append(None)
        else:
            out.append(float(np.mean(p[mask] == c)))
    return out
