"""Compositional maxout-network GP kernel.

The kernel of a deep maxout network is built layer by layer: an affine
map sends second moments through the weight and bias variances, and the
maxout nonlinearity turns correlations into F_q values looked up from a
precomputed table.  Entries of a kernel matrix need only the two
per-point diagonal trajectories plus the evolving cross term, so a
depth-L matrix costs O(n * m * L) table lookups.

A closed-form ReLU kernel built from the arc-cosine identity provides an
independent oracle: for q = 2 the maxout kernel on X equals the ReLU
kernel on X/sqrt(2) with doubled weight variance.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mnngp.errors import (
    DegenerateInputError,
    DomainError,
    FormatError,
    UsageError,
)
from mnngp.fq_table import interpolate

# Correlations may exceed [-1, 1] by at most this much before the run is
# treated as broken rather than rounded.
_CLAMP_BAND = 1e-9


def _check_variances(sigma_b2, sigma_w2, label_b, label_w):
    b = float(sigma_b2)
    w = float(sigma_w2)
    if not (math.isfinite(b) and b >= 0.0):
        raise UsageError(f"{label_b} must be finite and >= 0, got {sigma_b2!r}")
    if not (math.isfinite(w) and w >= 0.0):
        raise UsageError(f"{label_w} must be finite and >= 0, got {sigma_w2!r}")
    if b + w <= 0.0:
        raise UsageError(f"{label_b} + {label_w} must be positive")
    return b, w


def _check_positive_int(value, label):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise UsageError(f"{label} must be an integer, got {value!r}")
    if value < 1:
        raise UsageError(f"{label} must be >= 1, got {value}")
    return int(value)


@dataclass(frozen=True)
class KernelParams:
    """Architecture half of the kernel: rank, depth, and variances."""

    q: int
    depth: int
    sigma_b2: float
    sigma_w2: float

    def __post_init__(self):
        object.__setattr__(self, "q", _check_positive_int(self.q, "q"))
        object.__setattr__(self, "depth", _check_positive_int(self.depth, "depth"))
        b, w = _check_variances(
            self.sigma_b2, self.sigma_w2, "sigma_b2", "sigma_w2"
        )
        object.__setattr__(self, "sigma_b2", b)
        object.__setattr__(self, "sigma_w2", w)


@dataclass
class KernelMatrix:
    """Dense kernel block, flagged when both point sets coincide."""

    values: np.ndarray
    symmetric: bool = False

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is not None and dtype != self.values.dtype:
            return self.values.astype(dtype)
        return self.values


def _as_points(arr, label):
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise UsageError(f"{label} must be a 2-D array of points, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise UsageError(f"{label} contains non-finite entries")
    return out


def _check_table(params, table):
    if table.q != params.q:
        raise UsageError(
            f"table was built for q={table.q} but the kernel needs q={params.q}"
        )


def k0(x, x_prime):
    """Base-layer second moment: inner product scaled by the dimension."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_prime, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape or a.size < 1:
        raise UsageError(
            f"inputs must be equal-length vectors, got {a.shape} and {b.shape}"
        )
    return float(a @ b) / a.size


def _clamped_corr(cross, scale, layer, context):
    corr = cross / scale
    over = float(np.max(np.abs(corr))) - 1.0
    if over > _CLAMP_BAND:
        flat = int(np.argmax(np.abs(corr)))
        raise DomainError(
            f"layer-{layer} correlation exceeds [-1, 1] by {over:.3e} at "
            f"entry {np.unravel_index(flat, np.shape(corr))} ({context}); "
            "the second-moment recursion is corrupted"
        )
    return np.clip(corr, -1.0, 1.0)


def next_layer(k_xx, k_xy, k_yy, params, table):
    """One-hidden-layer kernel value from base second moments."""
    _check_table(params, table)
    k_xx, k_xy, k_yy = float(k_xx), float(k_xy), float(k_yy)
    if k_xx < 0.0 or k_yy < 0.0:
        raise UsageError("diagonal second moments must be nonnegative")
    sb, sw = params.sigma_b2, params.sigma_w2
    a = sb + sw * k_xx
    b = sb + sw * k_yy
    if a <= 0.0 or b <= 0.0:
        raise DegenerateInputError(
            "zero second moment entering the layer (zero-norm input with "
            "sigma_b2 = 0)"
        )
    scale = math.sqrt(a) * math.sqrt(b)
    corr = _clamped_corr(sb + sw * k_xy, scale, 1, "scalar update")
    return sb + sw * scale * float(interpolate(table, corr))


def _first_nonpositive(diag, label):
    idx = int(np.argmin(diag))
    raise DegenerateInputError(
        f"row {idx} of {label} has zero second moment with sigma_b2 = 0; "
        "the layer correlation is undefined for zero-norm inputs",
        rows=[idx],
    )


def kernel_matrix(X, Y, params, table):
    """Depth-L kernel block between two point sets (Y=None: symmetric)."""
    _check_table(params, table)
    X = _as_points(X, "X")
    symmetric = Y is None
    if symmetric:
        Y = X
    else:
        Y = _as_points(Y, "Y")
        if Y.shape[1] != X.shape[1]:
            raise UsageError(
                f"point sets disagree on dimension: {X.shape[1]} vs {Y.shape[1]}"
            )
    d = X.shape[1]
    base = (X @ Y.T) / d
    if symmetric:
        # One triangle, mirrored, so symmetry is exact by construction;
        # every later update is entrywise and preserves it.
        base = np.triu(base) + np.triu(base, 1).T
        dx = np.diagonal(base).copy()
        dy = dx
    else:
        dx = np.einsum("ij,ij->i", X, X) / d
        dy = np.einsum("ij,ij->i", Y, Y) / d
    sb, sw = params.sigma_b2, params.sigma_w2
    f_top = table.values[-1]
    P = sb + sw * base
    px = sb + sw * dx
    py = px if symmetric else sb + sw * dy
    idx = np.arange(X.shape[0]) if symmetric else None
    for layer in range(1, params.depth + 1):
        if px.min() <= 0.0:
            _first_nonpositive(px, "X")
        if py.min() <= 0.0:
            _first_nonpositive(py, "Y")
        scale = np.sqrt(np.outer(px, py))
        corr = _clamped_corr(P, scale, layer, "matrix assembly")
        if symmetric:
            corr[idx, idx] = 1.0
        P = sb + sw * scale * interpolate(table, corr)
        px = sb + sw * px * f_top
        py = px if symmetric else sb + sw * py * f_top
        if symmetric:
            P[idx, idx] = px
    return KernelMatrix(P, symmetric=symmetric)


def relu_nngp_kernel(X, Y, depth, sigma_b2_t, sigma_w2_t):
    """Depth-L ReLU network GP kernel from the arc-cosine closed form.

    The base second moment is sigma_b2_t + sigma_w2_t * <x, y>/d, the
    convention of the ReLU GP line of work this oracle reproduces.  Kept
    table-free so the maxout path is checked by genuinely independent
    code.
    """
    depth = _check_positive_int(depth, "depth")
    sb, sw = _check_variances(sigma_b2_t, sigma_w2_t, "sigma_b2_t", "sigma_w2_t")
    X = _as_points(X, "X")
    symmetric = Y is None
    if symmetric:
        Y = X
    else:
        Y = _as_points(Y, "Y")
        if Y.shape[1] != X.shape[1]:
            raise UsageError(
                f"point sets disagree on dimension: {X.shape[1]} vs {Y.shape[1]}"
            )
    d = X.shape[1]
    base = (X @ Y.T) / d
    if symmetric:
        base = np.triu(base) + np.triu(base, 1).T
        dx = np.diagonal(base).copy()
    else:
        dx = np.einsum("ij,ij->i", X, X) / d
    dy = dx if symmetric else np.einsum("ij,ij->i", Y, Y) / d
    P = sb + sw * base
    px = sb + sw * dx
    py = px if symmetric else sb + sw * dy
    idx = np.arange(X.shape[0]) if symmetric else None
    half_sw = sw / 2.0
    for layer in range(1, depth + 1):
        if px.min() <= 0.0:
            _first_nonpositive(px, "X")
        if py.min() <= 0.0:
            _first_nonpositive(py, "Y")
        scale = np.sqrt(np.outer(px, py))
        corr = _clamped_corr(P, scale, layer, "relu oracle")
        if symmetric:
            corr[idx, idx] = 1.0
        theta = np.arccos(corr)
        P = sb + (half_sw / np.pi) * scale * (
            np.sin(theta) + (np.pi - theta) * corr
        )
        px = sb + half_sw * px
        py = px if symmetric else sb + half_sw * py
        if symmetric:
            P[idx, idx] = px
    return KernelMatrix(P, symmetric=symmetric)


def prop1_residual(X, params, table):
    """Max entrywise gap between the q=2 kernel and its ReLU equivalent."""
    if params.q != 2:
        raise UsageError(f"the ReLU equivalence holds for q=2, got q={params.q}")
    X = _as_points(X, "X")
    maxout = kernel_matrix(X, None, params, table).values
    relu = relu_nngp_kernel(
        X / math.sqrt(2.0), None, params.depth,
        params.sigma_b2, 2.0 * params.sigma_w2,
    ).values
    return float(np.abs(maxout - relu).max())


def save_matrix(path, matrix):
    """Headerless CSV, row-major, 17 significant digits."""
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2:
        raise UsageError(f"expected a 2-D matrix, got shape {values.shape}")
    lines = [",".join(f"{v:.17g}" for v in row) for row in values]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path):
    """Parse a headerless CSV matrix, rejecting ragged or non-finite rows."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read matrix file {path}: {exc}") from exc
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise FormatError(
                f"{path}:{lineno}: expected {width} fields, got {len(parts)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: unparseable real") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    out = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{path}: non-finite matrix entries")
    return out
