"""Standard-normal densities and distribution functions, univariate and bivariate.

Every quadrature routine in this package reduces to the four functions here.
The univariate CDF delegates to the complementary-error-function evaluation
in scipy.special (absolute error below 1e-14 over the real line).  The
bivariate CDF is a vectorized double-precision implementation of the
Drezner-Wesolowsky method with Alan Genz's modifications for correlations
near +-1 (Gauss-Legendre quadrature on an arcsine-transformed integrand;
absolute error documented below 1e-10, in practice near machine precision).

Correlations within 1e-12 of +-1 snap to the exact degenerate limits; values
beyond that band raise :class:`~mnngp.errors.DomainError`.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

__all__ = [
    "std_normal_pdf",
    "std_normal_cdf",
    "binormal_pdf",
    "binormal_cdf",
]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_TWO_PI = 2.0 * np.pi

# Correlation band treated as exactly +-1.
RHO_SNAP = 1e-12

# Gauss-Legendre abscissas/weights, n = 20 (10 symmetric pairs).  Using the
# largest rule unconditionally keeps the vectorized code branch-free inside
# each correlation regime; the cost difference is irrelevant here.
_GL_X = np.array(
    [
        0.9931285991850949,
        0.9639719272779138,
        0.9122344282513259,
        0.8391169718222188,
        0.7463319064601508,
        0.6360536807265150,
        0.5108670019508271,
        0.3737060887154196,
        0.2277858511416451,
        0.07652652113349733,
    ]
)
_GL_W = np.array(
    [
        0.01761400713915212,
        0.04060142980038694,
        0.06267204833410906,
        0.08327674157670475,
        0.1019301198172404,
        0.1181945319615184,
        0.1316886384491766,
        0.1420961093183821,
        0.1491729864726037,
        0.1527533871307259,
    ]
)


def std_normal_pdf(x):
    """Density of N(0, 1) at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(x):
    """Distribution function of N(0, 1) at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = ndtr(x)
    return float(out) if out.ndim == 0 else out


def binormal_pdf(x, y, rho):
    """Density of the standard bivariate normal with correlation ``rho``.

    Requires |rho| < 1; the degenerate density does not exist at +-1.
    """
    x, y, rho = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64),
        np.asarray(y, dtype=np.float64),
        np.asarray(rho, dtype=np.float64),
    )
    if np.any(np.abs(rho) >= 1.0):
        raise DomainError(
            "binormal_pdf requires |rho| < 1, got |rho| >= 1 "
            f"(max |rho| = {np.max(np.abs(rho))!r})"
        )
    omr2 = 1.0 - rho * rho
    z = x * x - 2.0 * rho * x * y + y * y
    out = np.exp(-0.5 * z / omr2) / (_TWO_PI * np.sqrt(omr2))
    return float(out) if out.ndim == 0 else out


def _bvn_upper(h, k, r):
    """P(X > h, Y > k) for correlation r with |r| strictly inside (-1, 1).

    Vectorized port of the Drezner-Wesolowsky/Genz routine.  ``h``, ``k``
    and ``r`` must be broadcast to a common shape already.
    """
    h = np.asarray(h, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    bvn = np.zeros(h.shape, dtype=np.float64)

    mid = np.abs(r) < 0.925
    high = ~mid

    with np.errstate(under="ignore"):
        if np.any(mid):
            hm, km, rm = h[mid], k[mid], r[mid]
            hk = hm * km
            hs = 0.5 * (hm * hm + km * km)
            asr = np.arcsin(rm)
            acc = np.zeros_like(hm)
            for xi, wi in zip(_GL_X, _GL_W):
                for sgn in (-1.0, 1.0):
                    sn = np.sin(asr * 0.5 * (1.0 + sgn * xi))
                    acc += wi * np.exp((sn * hk - hs) / (1.0 - sn * sn))
            bvn[mid] = acc * asr / (4.0 * np.pi) + ndtr(-hm) * ndtr(-km)

        if np.any(high):
            hh, kh, rh = h[high], k[high], r[high]
            neg = rh < 0.0
            kh = np.where(neg, -kh, kh)
            hk = hh * kh
            out = np.zeros_like(hh)

            aas = (1.0 - rh) * (1.0 + rh)
            a = np.sqrt(aas)
            bs = (hh - kh) ** 2
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 16.0
            asr0 = -0.5 * (bs / aas + hk)
            out += a * np.exp(asr0) * (
                1.0 - c * (bs - aas) * (1.0 - d * bs / 5.0) / 3.0
                + c * d * aas * aas / 5.0
            )
            # The tail-difference term is analytically negligible once
            # -hk >= 100 and its naive evaluation overflows, so mask it.
            small = -hk < 100.0
            hk_safe = np.where(small, hk, 0.0)
            b = np.sqrt(bs)
            sp = np.sqrt(_TWO_PI) * ndtr(-b / a)
            t2 = np.exp(-0.5 * hk_safe) * sp * b * (
                1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0
            )
            out -= np.where(small, t2, 0.0)

            a2 = 0.5 * a
            for xi, wi in zip(_GL_X, _GL_W):
                for sgn in (-1.0, 1.0):
                    xs = (a2 * (sgn * xi + 1.0)) ** 2
                    rs = np.sqrt(1.0 - xs)
                    asr1 = -0.5 * (bs / xs + hk)
                    ep = np.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                    spq = 1.0 + c * xs * (1.0 + d * xs)
                    out += a2 * wi * np.exp(asr1) * (ep - spq)

            out = -out / _TWO_PI
            pos = np.where(neg, -out, out) + np.where(
                neg,
                np.maximum(0.0, ndtr(-hh) - ndtr(-kh)),
                ndtr(-np.maximum(hh, kh)),
            )
            bvn[high] = pos

    return np.clip(bvn, 0.0, 1.0)


def binormal_cdf(x, y, rho):
    """P(X <= x, Y <= y) for the standard bivariate normal, correlation rho.

    Scalars or broadcastable arrays.  |rho| may not exceed 1 + 1e-12;
    correlations within 1e-12 of +-1 use the exact comonotone limits
    Phi(min(x, y)) and max(0, Phi(x) + Phi(y) - 1).
    """
    x, y, rho = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64),
        np.asarray(y, dtype=np.float64),
        np.asarray(rho, dtype=np.float64),
    )
    absr = np.abs(rho)
    if np.any(absr > 1.0 + RHO_SNAP):
        raise DomainError(
            f"correlation out of range: max |rho| = {np.max(absr)!r} "
            f"exceeds 1 + {RHO_SNAP:g}"
        )

    pos1 = rho >= 1.0 - RHO_SNAP
    neg1 = rho <= -1.0 + RHO_SNAP
    general = ~(pos1 | neg1)

    out = np.empty(x.shape, dtype=np.float64)
    if np.any(pos1):
        out[pos1] = ndtr(np.minimum(x[pos1], y[pos1]))
    if np.any(neg1):
        out[neg1] = np.maximum(0.0, ndtr(x[neg1]) + ndtr(y[neg1]) - 1.0)
    if np.any(general):
        out[general] = _bvn_upper(-x[general], -y[general], rho[general])
    return float(out) if out.ndim == 0 else out
