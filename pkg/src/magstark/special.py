"""Parabolic cylinder functions of order -1, -2, -3 and Gaussian tail integrals.

``D_{-1}`` comes from the complementary error function.  Orders -2 and -3
follow from the recurrence ``D_{-mu-1}(z) = (D_{-mu+1}(z) - z D_{-mu}(z)) / mu``
seeded with ``D_0(z) = exp(-z^2/4)``.  For ``z >= 12`` the recurrence cancels
badly, so the large-argument series is summed instead.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, erfcx, gamma as gamma_fn

from .errors import InvalidParameterError

ORDERS = (1, 2, 3)
SWITCH_Z = 12.0
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


def _check_mu(mu: int) -> int:
    if mu not in ORDERS:
        raise InvalidParameterError(f"order mu must be one of {ORDERS}, got {mu}")
    return int(mu)


def _recurrence(mu: int, d0, d1, z):
    dm2 = d0 - z * d1
    if mu == 1:
        return d1
    if mu == 2:
        return dm2
    return (d1 - z * dm2) / 2.0


def _large_series_scaled(mu: int, z):
    """``exp(z^2/4) D_{-mu}(z)`` for large positive ``z``.

    Asymptotic series ``z^{-mu} sum_k (-1)^k (mu)_{2k} / (k! (2 z^2)^k)``,
    truncated at the smallest term.
    """
    z = np.asarray(z, dtype=float)
    x = 1.0 / (2.0 * z * z)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(1, 40):
        # (mu)_{2k} / (mu)_{2k-2} = (mu + 2k - 2)(mu + 2k - 1)
        new = -term * (mu + 2 * k - 2) * (mu + 2 * k - 1) * x / k
        if np.all(np.abs(new) >= np.abs(term)):
            break
        term = np.where(np.abs(new) < np.abs(term), new, 0.0)
        total = total + term
        if np.all(np.abs(term) < 1e-17 * np.abs(total)):
            break
    return total * z ** (-float(mu))


def _scaled_nonneg(mu: int, z):
    """``exp(z^2/4) D_{-mu}(z)`` for ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < SWITCH_Z
    zs = z[small]
    out[small] = _recurrence(mu, np.ones_like(zs), _SQRT_HALF_PI * erfcx(zs / math.sqrt(2.0)), zs)
    out[~small] = _large_series_scaled(mu, z[~small])
    return out


def _direct_neg(mu: int, z):
    """``D_{-mu}(z)`` for ``z < 0``: every recurrence term is positive there."""
    z = np.asarray(z, dtype=float)
    d1 = _SQRT_HALF_PI * np.exp(z * z / 4.0) * erfc(z / math.sqrt(2.0))
    return _recurrence(mu, np.exp(-z * z / 4.0), d1, z)


def pcf_D(mu: int, z):
    """Parabolic cylinder function ``D_{-mu}(z)`` for real ``z``.

    Parameters
    ----------
    mu : {1, 2, 3}
    z : float or array_like

    Returns
    -------
    float or ndarray
        Strictly positive values.  Results overflow to ``inf`` only where the
        true value exceeds the double range (``z`` below about -53).
    """
    mu = _check_mu(mu)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    neg = z < 0
    out[neg] = _direct_neg(mu, z[neg])
    zp = z[~neg]
    out[~neg] = np.exp(-zp * zp / 4.0) * _scaled_nonneg(mu, zp)
    return out[()] if out.ndim == 0 else out


def pcf_asymptotic(mu: int, z, correction: bool = True):
    """Large-``|z|`` branches of ``D_{-mu}``.

    For ``z -> +inf``: ``e^{-z^2/4} z^{-mu} (1 - mu (mu+1) / (2 z^2))``.
    For ``z -> -inf``: ``sqrt(2 pi)/Gamma(mu) e^{z^2/4} |z|^{mu-1} (1 + (mu-1)(mu-2) / (2 z^2))``.
    With ``correction=False`` only the leading term is returned.
    """
    mu = _check_mu(mu)
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    pos = np.exp(-z * z / 4.0) * a ** (-float(mu))
    neg = math.sqrt(2 * math.pi) / math.gamma(mu) * np.exp(z * z / 4.0) * a ** (mu - 1.0)
    if correction:
        pos = pos * (1.0 - mu * (mu + 1) / (2.0 * z * z))
        neg = neg * (1.0 + (mu - 1) * (mu - 2) / (2.0 * z * z))
    out = np.where(z >= 0, pos, neg)
    return out[()] if out.ndim == 0 else out


def gaussian_tail(mu: int, bq: float, c):
    """Closed form of ``int_0^inf t^{mu-1} exp(-bq t^2 - c t) dt``.

    Evaluates ``(2 bq)^{-mu/2} Gamma(mu) exp(c^2 / (8 bq)) D_{-mu}(c / sqrt(2 bq))``.
    The exponential prefactor is folded into a scaled ``D`` so that large
    positive ``c`` does not produce ``0 * inf``.

    Raises
    ------
    InvalidParameterError
        If ``bq <= 0``.
    """
    mu = _check_mu(mu)
    if not bq > 0:
        raise InvalidParameterError(f"bq must be positive, got {bq}")
    c = np.asarray(c, dtype=float)
    z = c / math.sqrt(2.0 * bq)
    scaled = np.empty_like(z)
    neg = z < 0
    zn = z[neg]
    scaled[neg] = np.exp(zn * zn / 4.0) * _direct_neg(mu, zn)
    scaled[~neg] = _scaled_nonneg(mu, z[~neg])
    out = (2.0 * bq) ** (-mu / 2.0) * float(gamma_fn(mu)) * scaled
    return out[()] if out.ndim == 0 else out
