"""Finite-width maxout networks at random initialization.

Empirical output second moments from randomly initialized networks serve
as a brute-force check that wide networks converge to the composed
kernel.  `sample_and_forward` materializes one network's weights and
evaluates it.  `empirical_kernel` averages z·zᵀ over many independently
seeded networks; it samples each layer's pre-activations directly from
their exact conditional Gaussian law given the previous activations
(each pre-activation column is N(0, σ_b²·11ᵀ + σ_w²/fan_in·H·Hᵀ)),
which has the same distribution as drawing the weights but stays cheap
when widths are large.  Networks are processed in index order with a
fixed-order reduction, so results are deterministic for a fixed seed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .kernel import kernel_matrix

_CHUNK = 256


@dataclass(frozen=True)
class NetworkArch:
    """Shape and initialization variances of a finite maxout network.

    widths lists the hidden-layer unit counts N_1..N_L; every hidden
    unit takes the max over q affine pieces.  Weights are drawn
    N(0, sigma_w2 / fan_in) — fan-in is d_in for the first layer — and
    biases N(0, sigma_b2).
    """

    d_in: int
    widths: tuple
    q: int
    d_out: int
    sigma_b2: float
    sigma_w2: float

    def __post_init__(self):
        for name in ("d_in", "q", "d_out"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise UsageError(f"{name} must be a positive integer")
        widths = tuple(int(w) for w in self.widths)
        if not widths or any(w < 1 for w in widths):
            raise UsageError("widths must be a nonempty list of positive integers")
        object.__setattr__(self, "widths", widths)
        for name in ("sigma_b2", "sigma_w2"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0.0:
                raise UsageError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, value)

    @property
    def depth(self):
        return len(self.widths)


def _check_inputs(arch, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise UsageError("X must be a nonempty 2-D matrix")
    if X.shape[1] != arch.d_in:
        raise UsageError(f"X has {X.shape[1]} columns, arch.d_in is {arch.d_in}")
    if not np.all(np.isfinite(X)):
        raise UsageError("X must be finite")
    return X


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise UsageError("seed must be a nonnegative integer")
    return int(seed)


def sample_and_forward(arch, X, seed):
    """Draw one network's weights and evaluate it on every row of X.

    Returns the n x d_out output matrix.  Deterministic for fixed seed.
    """
    X = _check_inputs(arch, X)
    rng = np.random.default_rng(_check_seed(seed))
    scale_b = np.sqrt(arch.sigma_b2)
    H = X
    fan_in = arch.d_in
    for width in arch.widths:
        W = rng.normal(0.0, np.sqrt(arch.sigma_w2 / fan_in), size=(fan_in, width * arch.q))
        b = rng.normal(0.0, scale_b, size=width * arch.q)
        Z = H @ W + b
        H = Z.reshape(-1, width, arch.q).max(axis=2)
        fan_in = width
    W = rng.normal(0.0, np.sqrt(arch.sigma_w2 / fan_in), size=(fan_in, arch.d_out))
    b = rng.normal(0.0, scale_b, size=arch.d_out)
    return H @ W + b


def _psd_sqrt(C):
    """Symmetric PSD square root of a stack of symmetric matrices."""
    w, V = np.linalg.eigh(C)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)[..., None, :]) @ np.swapaxes(V, -1, -2)


def empirical_kernel(arch, X, n_networks, seed):
    """Average z·zᵀ over n_networks independently seeded networks.

    The network for index s draws from a generator seeded with
    (seed, s), so disjoint base seeds give independent estimates.
    Requires d_out = 1 (one output channel suffices: output channels
    are exchangeable) and n_networks >= 100.
    """
    X = _check_inputs(arch, X)
    seed = _check_seed(seed)
    if arch.d_out != 1:
        raise UsageError("empirical_kernel requires arch.d_out == 1")
    if n_networks < 100:
        raise UsageError("n_networks must be at least 100")
    n = X.shape[0]
    C0 = arch.sigma_b2 + arch.sigma_w2 / arch.d_in * (X @ X.T)
    A0 = _psd_sqrt(C0)
    acc = np.zeros((n, n))
    for start in range(0, n_networks, _CHUNK):
        count = min(_CHUNK, n_networks - start)
        rngs = [np.random.default_rng([seed, s]) for s in range(start, start + count)]
        H = None
        for layer, width in enumerate(arch.widths):
            cols = width * arch.q
            E = np.empty((count, n, cols))
            for i, rng in enumerate(rngs):
                E[i] = rng.normal(size=(n, cols))
            if layer == 0:
                Z = np.matmul(A0, E)
            else:
                C = arch.sigma_b2 + arch.sigma_w2 / H.shape[2] * np.matmul(
                    H, np.swapaxes(H, 1, 2)
                )
                Z = np.matmul(_psd_sqrt(C), E)
            H = Z.reshape(count, n, width, arch.q).max(axis=3)
        E = np.empty((count, n, 1))
        for i, rng in enumerate(rngs):
            E[i] = rng.normal(size=(n, 1))
        C = arch.sigma_b2 + arch.sigma_w2 / H.shape[2] * np.matmul(
            H, np.swapaxes(H, 1, 2)
        )
        z = np.matmul(_psd_sqrt(C), E)
        acc += np.matmul(z, np.swapaxes(z, 1, 2)).sum(axis=0)
    return acc / n_networks


def theorem1_gap(arch, params, table, X, n_networks, seed):
    """Relative Frobenius distance between empirical and composed kernels.

    arch and params must describe the same limit: matching q, variances,
    and depth equal to the number of hidden layers.
    """
    if params.q != arch.q:
        raise UsageError(f"q mismatch: params {params.q}, arch {arch.q}")
    if params.depth != arch.depth:
        raise UsageError(
            f"depth mismatch: params {params.depth}, arch has {arch.depth} "
            "hidden layers"
        )
    if params.sigma_b2 != arch.sigma_b2 or params.sigma_w2 != arch.sigma_w2:
        raise UsageError("variance mismatch between params and arch")
    K_emp = empirical_kernel(arch, X, n_networks, seed)
    K_theory = np.asarray(kernel_matrix(X, None, params, table))
    return float(
        np.linalg.norm(K_emp - K_theory) / np.linalg.norm(K_theory)
    )
