"""Pointwise evaluation of the physical model.

Covers the impurity potential and its continuation ``x -> x + ib``, the
smoothed field plateau ``h_F``, the sharp strip indicator ``chi_A`` and the
translated local field of the reference Hamiltonian.

Every tanh combination is rewritten so that only non-positive real parts are
exponentiated.  This keeps evaluations finite when ``gamma_F * xbar`` is in
the hundreds, which happens at small field strengths.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError

QUARTER_PI = math.pi / 4.0

POTENTIAL_KINDS = ("gaussian-bump", "gaussian-gaussian")


@dataclass(frozen=True)
class FieldParams:
    """Magnetic field ``B``, electric field ``F`` and imaginary translation ``b``."""

    B: float
    F: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.B) and self.B > 0):
            raise InvalidParameterError(f"B must be positive, got {self.B}")
        if not (math.isfinite(self.F) and self.F >= 0):
            raise InvalidParameterError(f"F must be non-negative, got {self.F}")
        if not (math.isfinite(self.b) and self.b >= 0):
            raise InvalidParameterError(f"b must be non-negative, got {self.b}")

    def check_strip(self, model: "PotentialModel") -> None:
        """Raise :class:`DomainError` unless ``b`` lies inside the potential's strip."""
        if self.b >= model.beta:
            raise DomainError(f"b={self.b} is not below the analyticity strip beta={model.beta}")


@dataclass(frozen=True)
class PotentialModel:
    """Parametric impurity ``V(x, y) = -V0 * exp(-nu x^2) * g(y)``.

    Parameters
    ----------
    kind : {"gaussian-bump", "gaussian-gaussian"}
        Selects the y-profile ``g``.  The bump is
        ``exp(1 - a1^2 / (a1^2 - y^2))`` on ``|y| < a1`` and zero elsewhere;
        the Gaussian profile is ``exp(-y^2 / a1^2)``.
    V0 : float
        Depth of the well.  ``V0 = 0`` gives the free Landau problem.
    nu : float
        Gaussian rate in x.
    a0 : float
        Half-width of the region where only the bare ``V0 e^{nu b^2}`` envelope
        is claimed.
    a1 : float
        y-scale of the profile (support half-width for the bump).
    beta : float
        Half-width of the analyticity strip.  Both families are entire in x,
        so the default is infinity.
    """

    kind: str = "gaussian-gaussian"
    V0: float = 2.5
    nu: float = 1.0
    a0: float = 1.0
    a1: float = 1.0
    beta: float = math.inf

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InvalidParameterError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.kind not in POTENTIAL_KINDS:
            out.append(f"potential kind {self.kind!r} not in {POTENTIAL_KINDS}")
        if not (math.isfinite(self.V0) and self.V0 >= 0):
            out.append(f"V0 must be finite and >= 0, got {self.V0}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            out.append(f"nu must be positive, got {self.nu}")
        if not (self.a0 > 0 and math.isfinite(self.a0)):
            out.append(f"a0 must be positive, got {self.a0}")
        if not (self.a1 > 0 and math.isfinite(self.a1)):
            out.append(f"a1 must be positive, got {self.a1}")
        if not self.beta > 0:
            out.append(f"beta must be positive, got {self.beta}")
        return out

    def model_hash(self) -> str:
        """Short stable digest of the parameters, used as operator metadata."""
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def y_profile(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == "gaussian-gaussian":
            return np.exp(-(y / self.a1) ** 2)
        out = np.zeros_like(y)
        inside = np.abs(y) < self.a1
        yi = y[inside]
        out[inside] = np.exp(1.0 - self.a1**2 / (self.a1**2 - yi * yi))
        return out

    def x_profile(self, x, b: float = 0.0) -> np.ndarray:
        """``exp(-nu (x + ib)^2)``; real when ``b == 0``."""
        x = np.asarray(x, dtype=float)
        if b == 0.0:
            return np.exp(-self.nu * x * x)
        z = x + 1j * b
        return np.exp(-self.nu * z * z)


@dataclass(frozen=True)
class ScheduleParams:
    """Field-dependent cut geometry of the reference Hamiltonian.

    The defaults are smaller cut constants than the textbook choice
    ``Cbar = 2``: with ``F * xbar`` above the impurity-to-Landau gap the
    plateau of the local field captures drifting Landau states that become
    degenerate with the impurity level.
    """

    eps: float = 0.2
    gamma0: float = 1.0
    Cbar: float = 1.0
    C0: float = 0.5
    C1: float = 0.75
    C2: float = 0.25
    tau: float = 5.0
    alpha: float = 2.5
    b0: float = 1.0

    def problems(self) -> list[str]:
        out = []
        if not 0.0 <= self.eps < 1.0:
            out.append(f"eps={self.eps} outside [0, 1)")
        if not self.gamma0 > 0:
            out.append(f"gamma0={self.gamma0} must be positive")
        if not self.C2 > 0:
            out.append(f"C2={self.C2} must be positive")
        if self.C2 >= self.C0:
            out.append("C2 >= C0 violates x2 < x0 ordering")
        if self.C0 >= self.C1:
            out.append("C0 >= C1 violates x0 < x1 ordering")
        if self.C1 >= self.Cbar:
            out.append("C1 >= Cbar violates x1 < xbar ordering")
        if not self.alpha > 2:
            out.append(f"alpha={self.alpha} violates alpha > 2")
        if not self.tau > self.alpha + 2:
            out.append(f"tau={self.tau} violates tau > alpha + 2")
        if not self.b0 > 0:
            out.append(f"b0={self.b0} must be positive")
        return out

    def __post_init__(self):
        problems = self.problems()
        # eps = 0 is accepted so that control experiments can switch off the
        # F^eps scaling; it is not a valid production schedule.
        if problems:
            raise InvalidParameterError("; ".join(problems))

    def b_of(self, F: float) -> float:
        """Schedule translation ``b0 * F^alpha``."""
        return self.b0 * F**self.alpha

    def geometry(self, F: float, a1: float) -> "DerivedGeometry":
        return DerivedGeometry.from_schedule(self, F, a1)


@dataclass(frozen=True)
class DerivedGeometry:
    """Cut points for one field strength.  Fields may be ``inf`` (no cutoff)."""

    gammaF: float
    xbar: float
    x0: float
    x1: float
    x2: float
    y0: float
    y1: float
    y2: float
    ybar: float
    F: float = math.nan
    eps: float = math.nan

    @classmethod
    def from_schedule(cls, s: ScheduleParams, F: float, a1: float) -> "DerivedGeometry":
        if not F > 0:
            raise InvalidParameterError("geometry needs F > 0")
        scale = F ** (-(1.0 - s.eps))
        ft = F ** (-s.tau)
        y2 = a1 + 1.0
        y0 = y2 + ft + 1.0
        y1 = y0 + ft + 1.0
        return cls(
            gammaF=s.gamma0 * scale,
            xbar=s.Cbar * scale,
            x0=s.C0 * scale,
            x1=s.C1 * scale,
            x2=s.C2 * scale,
            y0=y0,
            y1=y1,
            y2=y2,
            ybar=y1 + ft,
            F=F,
            eps=s.eps,
        )

    def max_b(self) -> float:
        """Supremum of admissible translations, ``pi / (4 gamma_F)``."""
        return QUARTER_PI / self.gammaF

    def check_b(self, b: float) -> None:
        if self.gammaF * b >= QUARTER_PI:
            raise DomainError(
                f"gamma_F*b = {self.gammaF * b:.6g} >= pi/4: translation leaves the tanh strip"
            )


# ---------------------------------------------------------------------------
# stable tanh combinations


def logistic(w):
    """``1 / (1 + exp(-w))`` for real or complex ``w`` without overflow.

    Equals ``(1 + tanh(w/2)) / 2``.
    """
    w = np.asarray(w)
    out = np.empty(w.shape, dtype=np.result_type(w, float))
    pos = np.real(w) >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-w[pos]))
    e = np.exp(w[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def tanh_plateau(x, b: float, gamma: float, c: float):
    """``(tanh(gamma (z + c)) - tanh(gamma (z - c))) / 2`` at ``z = x + ib``.

    Uses the closed form ``sinh(2 gamma c) / (cosh(2 gamma z) + cosh(2 gamma c))``
    with numerator and denominator scaled by ``2 exp(-2 gamma max(|x|, c))``.
    """
    x = np.asarray(x, dtype=float)
    if math.isinf(c):
        return np.ones_like(x) if b == 0 else np.ones(x.shape, dtype=complex)
    z = x + 1j * b if b else x
    m = np.maximum(np.abs(x), c)
    g2 = 2.0 * gamma
    num = np.exp(g2 * (c - m)) - np.exp(-g2 * (c + m))
    den = np.exp(g2 * (z - m)) + np.exp(-g2 * (z + m)) + np.exp(g2 * (c - m)) + np.exp(-g2 * (c + m))
    return num / den


def tanh_plateau_complement(x, b: float, gamma: float, c: float):
    """``1 - tanh_plateau``, computed as two logistic tails (no cancellation)."""
    x = np.asarray(x, dtype=float)
    if math.isinf(c):
        return np.zeros(x.shape, dtype=complex if b else float)
    z = x + 1j * b if b else x
    return logistic(-2.0 * gamma * (z + c)) + logistic(2.0 * gamma * (z - c))


# ---------------------------------------------------------------------------
# public evaluators


def eval_hF(x, b: float, geom: DerivedGeometry):
    """Field plateau ``h_F(x + ib)``.

    Parameters
    ----------
    x : float or array_like
        Real coordinate(s).
    b : float
        Imaginary translation; must satisfy ``gamma_F * b < pi/4``.
    geom : DerivedGeometry

    Returns
    -------
    float, complex or ndarray
        Real values in (0, 1) when ``b == 0``.

    Raises
    ------
    DomainError
        If the translation leaves the strip where ``tanh`` is analytic.
    """
    geom.check_b(b)
    out = tanh_plateau(x, b, geom.gammaF, geom.xbar)
    return out[()] if np.ndim(out) == 0 else out


def chi_A(y, geom: DerivedGeometry):
    """Sharp indicator of ``|y| <= ybar``."""
    y = np.asarray(y, dtype=float)
    out = (np.abs(y) <= geom.ybar).astype(float)
    return out[()] if out.ndim == 0 else out


def eval_potential(x, y, b: float, model: PotentialModel):
    """Continued impurity potential ``V(x + ib, y)``.

    Raises
    ------
    DomainError
        If ``b >= model.beta``.
    """
    if b >= model.beta:
        raise DomainError(f"b={b} is not below beta={model.beta}")
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = -model.V0 * model.x_profile(x, b) * model.y_profile(y)
    return out[()] if out.ndim == 0 else out


def potential_envelope(x, b: float, model: PotentialModel):
    """Upper bound ``V0 e^{nu b^2} e^{-nu x^2}`` (bare ``V0 e^{nu b^2}`` on the plateau)."""
    x = np.asarray(x, dtype=float)
    base = model.V0 * math.exp(model.nu * b * b)
    return np.where(np.abs(x) > model.a0, base * np.exp(-model.nu * x * x), base)


def eval_local_field(x, y, b: float, F: float, geom: DerivedGeometry):
    """Translated local field ``-F (x + ib) h_F(x + ib) chi_A(y)``."""
    h = eval_hF(x, b, geom)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    z = x + 1j * b if b else x
    out = -F * z * h * chi_A(y, geom)
    return out[()] if np.ndim(out) == 0 else out


def hF_envelope(x, b: float, geom: DerivedGeometry):
    """Closed-form bound on ``|h_F(x + ib)|`` valid for ``gamma_F b < pi/4``.

    ``e^{2 g xb} / ((e^{2 g x} + e^{-2 g x}) cos(2 g b) + e^{2 g xb} + e^{-2 g xb})``,
    evaluated after dividing through by ``exp(2 g max(|x|, xbar))``.
    """
    x = np.asarray(x, dtype=float)
    g2 = 2.0 * geom.gammaF
    m = np.maximum(np.abs(x), geom.xbar)
    c = math.cos(g2 * b)
    num = np.exp(g2 * (geom.xbar - m))
    den = (np.exp(g2 * (x - m)) + np.exp(-g2 * (x + m))) * c + num + np.exp(-g2 * (geom.xbar + m))
    return num / den


@dataclass(frozen=True)
class LocalField:
    """The local field term of the reference Hamiltonian, as a potential source."""

    F: float
    geom: DerivedGeometry = field(repr=False)
