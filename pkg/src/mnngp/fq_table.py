"""Lookup tables for the maxout moment function F_q.

F_q(rho) is the expected product of the maxima of two q-vectors of
standard normals whose like-indexed coordinates have correlation rho.
The interior of the rho range is evaluated by splitting the expectation
over which coordinate attains each maximum: q symmetric "same argmax"
terms plus q(q-1) "different argmax" terms, each a two-dimensional
integral discretized on a uniform tensor grid.  The rho = +1 and
rho = -1 endpoints have their own one- and two-dimensional reductions.

Tables are built over a uniform rho grid, persisted as tab-separated
text, and evaluated by linear interpolation.
"""

import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from mnngp.errors import DomainError, FormatError, UsageError
from mnngp.special_functions import (
    binormal_cdf,
    binormal_pdf,
    std_normal_cdf,
    std_normal_pdf,
)

FORMAT_VERSION = "v1"
SCHEMES = ("product", "ratio")

_EPS = np.finfo(np.float64).eps
# Interior nodes closer to +-1 than this are evaluated by the endpoint
# routines: sqrt(1 - rho^2) cancels catastrophically there.
_SNAP = 1.0 - 10.0 * _EPS
# Below this conditional standard deviation the tabulated-CDF window fill
# loses accuracy, so the exact (slower) path takes over.
_S_MIN = 0.03
# Oversampling factor of the 1-D CDF tabulation used by the window fill.
_OVERSAMPLE = 6
_MC_CHUNK = 1_000_000


def _symmetric_linspace(lo, hi, n):
    """Uniform nodes with exact antisymmetry: out[n-1-i] == -out[i]."""
    base = np.linspace(lo, hi, n)
    return (base - base[::-1]) / 2.0


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform tensor grid on [-r_max, r_max]^2, n_grid points per axis."""

    r_max: float
    n_grid: int

    def __post_init__(self):
        r = float(self.r_max)
        if not math.isfinite(r) or r <= 0.0:
            raise UsageError(f"r_max must be positive and finite, got {self.r_max}")
        n = int(self.n_grid)
        if n < 3:
            raise UsageError(f"n_grid must be >= 3, got {self.n_grid}")
        object.__setattr__(self, "r_max", r)
        object.__setattr__(self, "n_grid", n)

    @cached_property
    def nodes(self):
        return _symmetric_linspace(-self.r_max, self.r_max, self.n_grid)

    @property
    def spacing(self):
        return 2.0 * self.r_max / (self.n_grid - 1)


@dataclass(eq=False)
class FqTable:
    """F_q sampled on a uniform rho grid over [-1, 1]."""

    q: int
    rhos: np.ndarray
    values: np.ndarray
    r_max: float
    n_grid: int
    scheme: str = "product"
    version: str = FORMAT_VERSION

    def __post_init__(self):
        self.rhos = np.asarray(self.rhos, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.rhos.ndim != 1 or self.rhos.shape != self.values.shape:
            raise UsageError("rhos and values must be 1-D arrays of equal length")
        if self.rhos.size < 2:
            raise UsageError("a table needs at least the two endpoint nodes")
        if not (np.all(np.isfinite(self.rhos)) and np.all(np.isfinite(self.values))):
            raise UsageError("table nodes and values must be finite")
        if np.any(np.diff(self.rhos) <= 0.0):
            raise UsageError("rho nodes must be strictly increasing")
        if self.rhos[0] != -1.0 or self.rhos[-1] != 1.0:
            raise UsageError("rho nodes must cover [-1, 1] inclusive")
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown quadrature scheme {self.scheme!r}")

    @property
    def n_rho(self):
        return self.rhos.size

    @property
    def meta(self):
        return (self.r_max, self.n_grid, self.scheme, self.version)

    def interpolate(self, rho):
        return interpolate(self, rho)

    def save(self, path):
        path = Path(path)
        lines = [
            f"# mnngp-fq-table {self.version}",
            f"# q={self.q} n_rho={self.n_rho} r_max={self.r_max:.17g}"
            f" n_grid={self.n_grid} scheme={self.scheme}",
        ]
        lines.extend(
            f"{r:.17g}\t{v:.17g}" for r, v in zip(self.rhos, self.values)
        )
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        return load_table(path)


_HEADER_RE = re.compile(
    r"# q=(\d+) n_rho=(\d+) r_max=([^ \t]+) n_grid=(\d+) scheme=(product|ratio)"
)


def load_table(path):
    """Parse a table file, rejecting malformed headers or rows."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read table file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != f"# mnngp-fq-table {FORMAT_VERSION}":
        raise FormatError(f"{path}:1: missing or garbled table header")
    if len(lines) < 2 or not (m := _HEADER_RE.fullmatch(lines[1])):
        raise FormatError(f"{path}:2: garbled table metadata line")
    q, n_rho, ngrid = int(m.group(1)), int(m.group(2)), int(m.group(4))
    try:
        r_max = float(m.group(3))
    except ValueError as exc:
        raise FormatError(f"{path}:2: bad r_max field") from exc
    rows = lines[2:]
    if len(rows) != n_rho:
        raise FormatError(
            f"{path}: header promises {n_rho} rows, file has {len(rows)}"
        )
    rhos = np.empty(n_rho)
    values = np.empty(n_rho)
    for i, row in enumerate(rows):
        parts = row.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{i + 3}: expected '<rho>\\t<value>'")
        try:
            rhos[i], values[i] = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FormatError(f"{path}:{i + 3}: unparseable real") from exc
    if not (np.all(np.isfinite(rhos)) and np.all(np.isfinite(values))):
        raise FormatError(f"{path}: non-finite table entries")
    if np.any(np.diff(rhos) <= 0.0):
        raise FormatError(f"{path}: rho nodes not strictly increasing")
    if rhos[0] != -1.0 or rhos[-1] != 1.0:
        raise FormatError(f"{path}: rho nodes must span [-1, 1] inclusive")
    return FqTable(
        q=q, rhos=rhos, values=values, r_max=r_max, n_grid=ngrid,
        scheme=m.group(5),
    )


def interpolate(table, rho):
    """Piecewise-linear table evaluation, exact at the nodes.

    Accepts scalars or arrays; values within 1e-9 of the [-1, 1] range
    are clamped, anything farther out raises DomainError.
    """
    arr = np.asarray(rho, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("rho must be finite")
    over = np.abs(arr) - 1.0
    if np.any(over > 1e-9):
        worst = float(arr.flat[np.argmax(np.abs(arr))])
        raise DomainError(
            f"rho={worst!r} outside [-1, 1] beyond the clamp band; "
            "upstream correlation normalization is broken"
        )
    clamped = np.clip(arr, -1.0, 1.0)
    out = np.interp(clamped, table.rhos, table.values)
    return float(out) if arr.ndim == 0 else out


def closed_form_f2(rho):
    """Exact F_2 from the arc-cosine kernel identity."""
    arr = np.asarray(rho, dtype=np.float64)
    if np.any(np.abs(arr) > 1.0 + 1e-12) or not np.all(np.isfinite(arr)):
        raise DomainError(f"rho={rho!r} outside [-1, 1]")
    clamped = np.clip(arr, -1.0, 1.0)
    theta = np.arccos(clamped)
    out = (np.sin(theta) + (np.pi - theta) * clamped) / np.pi
    return float(out) if arr.ndim == 0 else out


class _GridWorkspace:
    """Dense scratch state for evaluating both interior terms at one rho.

    Holds the grid vectors plus the n x n buffers the node evaluation
    cycles through; one instance serves a whole table build.
    """

    def __init__(self, grid):
        g = grid.nodes
        n = g.size
        self.g = g
        self.h = grid.spacing
        self.pdf = std_normal_pdf(g)
        self.cdf = std_normal_cdf(g)
        self.gpdf = g * self.pdf
        self.xy = np.outer(g, g)
        self.q2 = (g * g)[:, None] + (g * g)[None, :]
        self.A = np.empty((n, n))       # Phi((y - rho x)/s), row index = x
        self.cdf2 = np.empty((n, n))    # bivariate CDF on the grid
        self.pdf2 = np.empty((n, n))    # bivariate density on the grid
        self.W = np.empty((n, n))
        self.S1 = np.empty((n, n))
        self.S2 = np.empty((n, n))
        self._row = [np.empty(n) for _ in range(3)]

    # -- stage 1: conditional-CDF factor -------------------------------

    def _fill_a_window(self, rho, s):
        """A[t, u] = Phi((g_u - rho g_t)/s) via a strided 1-D tabulation.

        Along a row the argument advances in exact steps of h/s, so each
        row is a constant-stride window into one oversampled Phi table,
        blended linearly between adjacent tabulation points.
        """
        g, h, A = self.g, self.h, self.A
        n = g.size
        m = _OVERSAMPLE
        delta = h / (s * m)
        a0 = g[0] / s
        b = (rho / s) * g
        lo = a0 - b.max() - 2.0 * delta
        c = (a0 - b - lo) / delta
        k = np.floor(c).astype(np.intp)
        f = c - k
        span = m * (n - 1) + 1
        n_tab = int(np.ceil(c.max())) + span + 2
        tab = ndtr(lo + delta * np.arange(n_tab))
        for t in range(n):
            start = k[t]
            v1 = tab[start : start + span : m]
            v2 = tab[start + 1 : start + 1 + span : m]
            row = A[t]
            np.subtract(v2, v1, out=row)
            row *= f[t]
            row += v1

    def _fill_a_exact(self, rho, s):
        arg = self.S1
        np.subtract(self.g[None, :], rho * self.g[:, None], out=arg)
        arg /= s
        ndtr(arg, out=self.A)

    def _fill_cdf2(self):
        """Cumulative trapezoid of pdf(x)*A over x, row by row."""
        A, out, pdf, h = self.A, self.cdf2, self.pdf, self.h
        n = self.g.size
        half_h = 0.5 * h
        prev, cur, sbuf = self._row
        np.multiply(A[0], pdf[0], out=prev)
        out[0] = 0.0
        for t in range(1, n):
            np.multiply(A[t], pdf[t], out=cur)
            np.add(prev, cur, out=sbuf)
            sbuf *= half_h
            np.add(out[t - 1], sbuf, out=out[t])
            prev, cur = cur, prev

    def _fill_pdf2(self, rho, s, s_sq):
        """Bivariate density; point symmetry halves the exp work."""
        out = self.pdf2
        n = self.g.size
        top = (n + 1) // 2
        t = out[:top]
        np.multiply(self.xy[:top], rho / s_sq, out=t)
        tmp = self.S1[:top]
        np.multiply(self.q2[:top], -0.5 / s_sq, out=tmp)
        t += tmp
        np.exp(t, out=t)
        t *= 1.0 / (2.0 * np.pi * s)
        for i in range(top, n):
            out[i] = out[n - 1 - i][::-1]

    def prepare(self, rho):
        s_sq = (1.0 - rho) * (1.0 + rho)
        s = math.sqrt(s_sq)
        if s < _S_MIN:
            self._fill_a_exact(rho, s)
        else:
            self._fill_a_window(rho, s)
        self._fill_cdf2()
        self._fill_pdf2(rho, s, s_sq)

    # -- stage 2: contractions -----------------------------------------

    def _pow(self, base, exponent, out):
        if exponent == 0:
            return None
        if exponent == 1:
            return base
        np.multiply(base, base, out=out)
        for _ in range(exponent - 2):
            out *= base
        return out

    def _quad(self, matrix, vec):
        return self.h * self.h * float(vec @ (matrix @ vec))

    def terms_direct(self, q, want_mass):
        """(num_same, num_diff, mass_same, mass_diff) at the prepared rho."""
        g, u, w = self.g, self.gpdf, self.pdf
        pw = self._pow(self.cdf2, q - 1, self.S1)
        np.multiply(self.pdf2, pw, out=self.S2)
        num_s = self._quad(self.S2, g)
        mass_s = self.h * self.h * float(self.S2.sum()) if want_mass else None
        np.multiply(self.A, self.A.T, out=self.W)
        pw2 = self._pow(self.cdf2, q - 2, self.S1)
        if pw2 is None:
            d = self.W
        else:
            d = self.S2
            np.multiply(self.W, pw2, out=d)
        num_d = self._quad(d, u)
        mass_d = self._quad(d, w) if want_mass else None
        return num_s, num_d, mass_s, mass_d

    def terms_mirror(self, q, want_mass):
        """Terms at -rho, reusing the buffers prepared at +rho.

        Negating one integration variable maps the -rho integrands onto
        the +rho buffers: the bivariate CDF becomes Phi(y) - cdf2, the
        density is unchanged, and the conditional-CDF product becomes
        A - A*A^T.  Consumes W; call after terms_direct.
        """
        g, u, w = self.g, self.gpdf, self.pdf
        gg = self.S1
        np.subtract(self.cdf[None, :], self.cdf2, out=gg)
        pw = self._pow(gg, q - 1, self.S2)
        if pw is gg:
            m = self.S2
            np.multiply(self.pdf2, gg, out=m)
        else:
            m = pw
            m *= self.pdf2
        num_s = -self._quad(m, g)
        mass_s = self.h * self.h * float(m.sum()) if want_mass else None
        np.subtract(self.A, self.W, out=self.W)
        for _ in range(q - 2):
            self.W *= gg
        num_d = -self._quad(self.W, u)
        mass_d = self._quad(self.W, w) if want_mass else None
        return num_s, num_d, mass_s, mass_d


def _combine(q, num_s, num_d, mass_s, mass_d, scheme):
    if scheme == "ratio":
        return q * (num_s / mass_s) + q * (q - 1) * (num_d / mass_d)
    return q * num_s + q * (q - 1) * num_d


def _check_q(q, minimum):
    if not isinstance(q, (int, np.integer)) or isinstance(q, bool) or q < minimum:
        raise UsageError(f"maxout rank must be an integer >= {minimum}, got {q!r}")


def _check_interior_rho(rho):
    rho = float(rho)
    if not (math.isfinite(rho) and -1.0 < rho < 1.0):
        raise DomainError(f"rho={rho!r} outside the open interval (-1, 1)")
    return rho


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise UsageError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def term_same_argmax(q, rho, grid):
    """Quadrature estimate of E[max * max' restricted to matching argmax]."""
    _check_q(q, 2)
    rho = _check_interior_rho(rho)
    ws = _GridWorkspace(grid)
    ws.prepare(rho)
    num_s, _, _, _ = ws.terms_direct(q, False)
    return num_s


def term_diff_argmax(q, rho, grid):
    """Quadrature estimate of E[max * max' restricted to distinct argmax]."""
    _check_q(q, 2)
    rho = _check_interior_rho(rho)
    ws = _GridWorkspace(grid)
    ws.prepare(rho)
    _, num_d, _, _ = ws.terms_direct(q, False)
    return num_d


def _term_masses(q, rho, grid):
    """Probability analogs of the two terms (integrands with x*y dropped)."""
    _check_q(q, 2)
    rho = _check_interior_rho(rho)
    ws = _GridWorkspace(grid)
    ws.prepare(rho)
    _, _, mass_s, mass_d = ws.terms_direct(q, True)
    return mass_s, mass_d


def fq_interior(q, rho, grid, scheme="product"):
    """F_q at a single rho strictly inside (-1, 1)."""
    _check_q(q, 1)
    _check_scheme(scheme)
    rho = _check_interior_rho(rho)
    if q == 1:
        return rho
    if rho >= _SNAP:
        return fq_at_plus_one(q, grid, scheme)
    if rho <= -_SNAP:
        return fq_at_minus_one(q, grid, scheme)
    ws = _GridWorkspace(grid)
    ws.prepare(rho)
    terms = ws.terms_direct(q, scheme == "ratio")
    return _combine(q, *terms, scheme)


def fq_at_plus_one(q, grid, scheme="product"):
    """F_q(1) = E[(max of q standard normals)^2], one-dimensional."""
    _check_q(q, 1)
    _check_scheme(scheme)
    if q == 1:
        return 1.0
    g = grid.nodes
    t = std_normal_pdf(g) * std_normal_cdf(g) ** (q - 1)
    num = float((g * g) @ t)
    if scheme == "ratio":
        return q * num / float(t.sum())
    return q * grid.spacing * num


def fq_at_minus_one(q, grid, scheme="product"):
    """F_q(-1) = -E[max * min of q standard normals].

    The two-dimensional reduction integrates over the half-plane x > y;
    cells on the diagonal carry half weight so the discretized domain
    splits the plane evenly (for q = 2 this makes the estimate vanish
    identically, matching the exact value).
    """
    _check_q(q, 1)
    _check_scheme(scheme)
    if q == 1:
        return -1.0
    g = grid.nodes
    n = g.size
    u = g * std_normal_pdf(g)
    w = std_normal_pdf(g)
    if q == 2:
        pw = np.tri(n, k=-1)
        np.fill_diagonal(pw, 0.5)
    else:
        d = std_normal_cdf(g)[:, None] - std_normal_cdf(g)[None, :]
        np.power(d, q - 2, out=d)
        pw = np.tril(d, -1)
    num = float(u @ (pw @ u))
    if scheme == "ratio":
        return -q * (q - 1) * num / float(w @ (pw @ w))
    return -q * (q - 1) * grid.spacing**2 * num


def build_table(q, n_rho, grid, scheme="product"):
    """Tabulate F_q on n_rho uniform nodes covering [-1, 1].

    Endpoints use their dedicated routines; interior nodes come from the
    two-term quadrature.  Interior +-rho pairs share one set of grid
    buffers, evaluating the mirrored node by integrand reflection.
    """
    _check_q(q, 1)
    _check_scheme(scheme)
    if not isinstance(n_rho, (int, np.integer)) or n_rho < 3:
        raise UsageError(f"n_rho must be an integer >= 3, got {n_rho!r}")
    rhos = _symmetric_linspace(-1.0, 1.0, int(n_rho))
    values = np.empty(rhos.size)
    values[0] = fq_at_minus_one(q, grid, scheme)
    values[-1] = fq_at_plus_one(q, grid, scheme)
    if q == 1:
        values[1:-1] = rhos[1:-1]
    else:
        want_mass = scheme == "ratio"
        ws = _GridWorkspace(grid)
        for k in range(1, rhos.size - 1):
            rho = rhos[k]
            if rho < 0.0:
                continue  # filled together with its mirror node
            if rho >= _SNAP:
                values[k] = values[-1]
                values[rhos.size - 1 - k] = values[0]
                continue
            ws.prepare(rho)
            terms = ws.terms_direct(q, want_mass)
            values[k] = _combine(q, *terms, scheme)
            if rho > 0.0:
                mirror = ws.terms_mirror(q, want_mass)
                values[rhos.size - 1 - k] = _combine(q, *mirror, scheme)
    return FqTable(
        q=int(q), rhos=rhos, values=values, r_max=grid.r_max,
        n_grid=grid.n_grid, scheme=scheme,
    )


def mc_oracle_fq(q, rho, n_samples, seed):
    """Brute-force Monte Carlo estimate of F_q(rho).

    Draws the correlated normal q-pairs directly and returns the sample
    mean with its standard error.  Work proceeds in fixed-size chunks
    whose generators derive from (seed, chunk index), so the estimate is
    identical however the chunks are scheduled.
    """
    _check_q(q, 1)
    rho = float(rho)
    if not (math.isfinite(rho) and abs(rho) <= 1.0):
        raise DomainError(f"rho={rho!r} outside [-1, 1]")
    if not isinstance(n_samples, (int, np.integer)) or n_samples < 10**4:
        raise UsageError(f"n_samples must be an integer >= 1e4, got {n_samples!r}")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise UsageError(f"seed must be a nonnegative integer, got {seed!r}")
    s = math.sqrt(max(0.0, (1.0 - rho) * (1.0 + rho)))
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 0
    n_samples = int(n_samples)
    while done < n_samples:
        m = min(_MC_CHUNK, n_samples - done)
        rng = np.random.default_rng([int(seed), chunk])
        z = rng.standard_normal((m, q))
        e = rng.standard_normal((m, q))
        a = z.max(axis=1)
        z *= rho
        e *= s
        z += e
        prod = a * z.max(axis=1)
        total += float(prod.sum())
        total_sq += float((prod * prod).sum())
        done += m
        chunk += 1
    mean = total / n_samples
    var = max(0.0, (total_sq - n_samples * mean * mean) / max(1, n_samples - 1))
    return mean, math.sqrt(var / n_samples)


def _node_reference(q, rho, grid, scheme="product"):
    """Slow dense evaluation of F_q at one interior rho.

    Independent route for cross-checking the workspace evaluator: every
    bivariate CDF value comes from the quadrature-free algorithm in
    special_functions instead of the tabulated cumulative sums.
    """
    _check_q(q, 2)
    rho = _check_interior_rho(rho)
    g = grid.nodes
    h = grid.spacing
    x = g[:, None]
    y = g[None, :]
    s = math.sqrt((1.0 - rho) * (1.0 + rho))
    cdf2 = binormal_cdf(x, y, rho)
    pdf2 = binormal_pdf(x, y, rho)
    cond = std_normal_cdf((x - rho * y) / s) * std_normal_cdf((y - rho * x) / s)
    pp = std_normal_pdf(x) * std_normal_pdf(y)
    same = x * y * pdf2 * cdf2 ** (q - 1)
    diff = x * y * pp * cond * cdf2 ** (q - 2)
    if scheme == "ratio":
        mass_s = float((pdf2 * cdf2 ** (q - 1)).sum())
        mass_d = float((pp * cond * cdf2 ** (q - 2)).sum())
        return q * float(same.sum()) / mass_s + q * (q - 1) * float(
            diff.sum()
        ) / mass_d
    return h * h * (q * float(same.sum()) + q * (q - 1) * float(diff.sum()))
