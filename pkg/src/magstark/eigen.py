"""Dense eigendecomposition with residual checks, plus a small-matrix oracle.

The production path calls LAPACK through :mod:`scipy.linalg` (``zgeev``, or
``zheevd`` when the input is Hermitian).  The oracle in
:func:`charpoly_eigenvalues` shares no code with it.  It samples
``det(zI - M)`` on a circle, recovers the characteristic polynomial by a
discrete Fourier transform, finds its roots by Aberth-Ehrlich iteration and
polishes them by Newton steps on the determinant itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretization import ComplexOperator
from .errors import ConvergenceError, InvalidParameterError

RESIDUAL_FACTOR = 1e-10


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue ``lam`` with unit right eigenvector ``v`` and ``||Mv - lam v||_2``."""

    lam: complex
    v: np.ndarray
    residual: float


def _as_array(M) -> np.ndarray:
    a = M.entries if isinstance(M, ComplexOperator) else np.asarray(M)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidParameterError(f"need a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameterError("matrix has non-finite entries")
    return a


def _order(lam: np.ndarray) -> np.ndarray:
    return np.lexsort((lam.imag, lam.real))


def _geev_failure(exc: Exception, n: int) -> ConvergenceError:
    m = re.search(r"(\d+)", str(exc))
    k = int(m.group(1)) if m else n
    return ConvergenceError(f"eigenvalue iteration did not converge: {exc}", range(min(k, n)))


def _is_hermitian(a: np.ndarray) -> bool:
    scale = np.max(np.abs(a))
    return bool(np.max(np.abs(a - a.conj().T)) <= 1e-14 * scale)


def eig_dense(M) -> list[EigenPair]:
    """All eigenpairs of ``M``, sorted by real part then imaginary part.

    Parameters
    ----------
    M : ComplexOperator or array_like

    Returns
    -------
    list of EigenPair
        ``dim`` pairs counted with multiplicity.

    Raises
    ------
    ConvergenceError
        When LAPACK reports non-convergence, or when a residual exceeds
        ``1e-10 * ||M||_max * dim``.  ``indices`` names the offending pairs.
    """
    a = _as_array(M)
    n = a.shape[0]
    try:
        if _is_hermitian(a):
            w, V = sla.eigh(a)
            lam = w.astype(complex)
        else:
            lam, V = sla.eig(a)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise _geev_failure(exc, n) from exc
    idx = _order(lam)
    lam, V = lam[idx], V[:, idx]
    V = V / np.linalg.norm(V, axis=0)
    res = np.linalg.norm(a @ V - V * lam, axis=0)
    limit = RESIDUAL_FACTOR * max(np.max(np.abs(a)), np.finfo(float).tiny) * n
    bad = np.nonzero(res > limit)[0]
    if bad.size:
        raise ConvergenceError(f"{bad.size} eigenpairs fail the residual check", bad)
    return [EigenPair(complex(l), V[:, i], float(r)) for i, (l, r) in enumerate(zip(lam, res))]


def eigvals_dense(M) -> np.ndarray:
    """Eigenvalues only, in the same order as :func:`eig_dense`."""
    a = _as_array(M)
    try:
        lam = sla.eigvalsh(a).astype(complex) if _is_hermitian(a) else sla.eigvals(a)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise _geev_failure(exc, a.shape[0]) from exc
    return lam[_order(lam)]


def eig_window(M, center: complex, radius: float) -> list[EigenPair]:
    """Eigenpairs with ``|lam - center| <= radius``."""
    if not radius > 0:
        raise InvalidParameterError(f"radius must be positive, got {radius}")
    return [p for p in eig_dense(M) if abs(p.lam - center) <= radius]


# ---------------------------------------------------------------------------
# oracle


def _aberth(coeffs: np.ndarray, iters: int = 500, tol: float = 1e-15) -> np.ndarray:
    """Roots of a monic polynomial (coefficients highest degree first)."""
    n = len(coeffs) - 1
    p = np.poly1d(coeffs)
    dp = p.deriv()
    # Starting points on a circle of Cauchy-bound radius, rotated off symmetry axes.
    radius = 1.0 + np.max(np.abs(coeffs[1:])) if n else 1.0
    z = 0.5 * radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(iters):
        ratio = p(z) / dp(z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        w = ratio / (1.0 - ratio * inv.sum(axis=1))
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.all(np.abs(w) <= tol * np.maximum(1.0, np.abs(z))):
            break
    return z


def charpoly_eigenvalues(M, newton_steps: int = 3) -> np.ndarray:
    """Eigenvalues from the characteristic polynomial, for small ``M``.

    Steps
    -----
    1. Sample ``det(c + r w_k - M)`` at the ``n + 1`` roots of unity ``w_k``,
       centred at ``c = trace(M)/n`` with ``r`` the Frobenius norm of
       ``M - cI``.
    2. A DFT of the samples gives the coefficients of the polynomial in ``w``.
    3. Aberth-Ehrlich iteration finds the roots.
    4. Each root gets a few Newton steps with ``f/f' = 1/trace((zI - M)^{-1})``.

    Only intended for ``dim <= 10`` or so; cost and conditioning grow quickly.
    """
    a = np.asarray(M.entries if isinstance(M, ComplexOperator) else M, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return a[0].copy()
    I = np.eye(n)
    c = np.trace(a) / n
    r = np.linalg.norm(a - c * I)
    if r == 0.0:  # scalar matrix
        return np.full(n, c)
    K = n + 1
    w = np.exp(2j * np.pi * np.arange(K) / K)
    samples = np.array([np.linalg.det((c + r * wk) * I - a) for wk in w])
    coef = np.fft.fft(samples) / K  # ascending powers of w
    asc = coef / coef[n]
    roots_w = _aberth(asc[::-1])
    z = c + r * roots_w
    for _ in range(newton_steps):
        for i in range(n):
            try:
                t = np.trace(np.linalg.inv(z[i] * I - a))
            except np.linalg.LinAlgError:
                continue
            if t != 0 and np.isfinite(t):
                step = 1.0 / t
                if abs(step) < 1e-2 * r:
                    z[i] -= step
    return z[_order(z)]
