"""Impurity levels, resonance selection, widths and the reference-operator check.

A resonance is the eigenvalue of ``H(F, ib)`` that continues an impurity
level ``e_alpha`` of ``H(0)``.  Truncation produces a discretized continuum
sitting on the line ``Im = -bF``.  Candidates are therefore required to lie
in a band around the real axis, and stability under ``b -> 2b`` and under a
basis enlargement is measured before a width is accepted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .discretization import BasisSpec, assemble_H, assemble_H2, ladder_matrices, phase_y_block
from .eigen import EigenPair, eig_dense, eigvals_dense
from .errors import NotFoundError
from .model import FieldParams, PotentialModel, ScheduleParams

log = logging.getLogger(__name__)

NOISE_REL = 1e-12
STABILITY_REL = 0.1
STABILITY_ABS = 1e-10
CONTINUUM_FRACTION = 0.4
DEFAULT_WINDOW_C = 0.5

STATUSES = ("ok", "flagged", "unresolved", "not-found", "error")


@dataclass(frozen=True)
class ImpurityLevel:
    """Discrete eigenvalue of ``H(0)`` away from the Landau levels.

    ``localization`` is ``<x^2 + y^2>`` of the eigenvector; truncation
    artifacts live at the edge of the basis and have large values.
    """

    e_alpha: float
    multiplicity: int
    gap_to_landau: float
    landau_index: int = 0
    localization: float = math.nan


@dataclass(frozen=True)
class ResonanceEstimate:
    """Located resonance with stability diagnostics.

    ``status`` is one of ``ok``, ``flagged`` (a stability or continuum
    criterion failed), ``unresolved`` (width not above the noise floor).
    """

    E: complex
    e_alpha_seed: float
    F: float
    b: float
    Gamma: float = math.nan
    tau: float = math.nan
    delta_b: float = math.nan
    delta_N: float = math.nan
    continuum_gap: float = math.nan
    noise_floor: float = 0.0
    status: str = "ok"

    def __post_init__(self):
        if math.isnan(self.Gamma):
            object.__setattr__(self, "Gamma", -2.0 * self.E.imag)
        if math.isnan(self.continuum_gap):
            object.__setattr__(self, "continuum_gap", self.E.imag + self.b * self.F)
        if math.isnan(self.tau):
            object.__setattr__(self, "tau", width_and_lifetime(self)[1])


def landau_energy(n: int, B: float) -> float:
    return (2 * n + 1) * B


def _nearest_landau(e: float, B: float) -> tuple[int, float]:
    n = max(0, int(round((e / B - 1.0) / 2.0)))
    return n, abs(e - landau_energy(n, B))


def unperturbed_levels(
    B: float,
    model: PotentialModel,
    basis: BasisSpec,
    *,
    min_gap: float = 0.05,
    loc_fraction: float = 0.25,
    degeneracy_tol: float = 1e-6,
) -> list[ImpurityLevel]:
    """Impurity levels of ``H(0) = H_L + V``, lowest first.

    An eigenvalue qualifies when it is farther than ``min_gap`` from every
    Landau level ``(2n+1)B`` and its eigenvector is localized:
    ``<x^2 + y^2> < loc_fraction * (2 N + 1) l^2`` with ``N = min(Nx, Ny)``.
    Only the Landau bands ``n <= N // 4`` are searched; higher bands are
    poorly represented by the truncated basis.
    Eigenvalues closer than ``degeneracy_tol`` are merged into one level.
    """
    if model.V0 == 0:
        return []
    H = assemble_H(FieldParams(B), model, basis)
    rb = basis.for_field(B)
    pairs = eig_dense(H)
    lam = np.array([p.lam.real for p in pairs])
    V = np.column_stack([p.v for p in pairs])
    R2 = np.kron(ladder_matrices(rb.Nx, rb.lx)["X2"], np.eye(rb.Ny)) + np.kron(
        np.eye(rb.Nx), phase_y_block(ladder_matrices(rb.Ny, rb.ly)["X2"])
    )
    r2 = np.real(np.einsum("ij,ij->j", V.conj(), R2 @ V))
    l2 = max(rb.lx, rb.ly) ** 2
    limit = loc_fraction * (2 * min(rb.Nx, rb.Ny) + 1) * l2
    n_max = min(rb.Nx, rb.Ny) // 4
    levels: list[ImpurityLevel] = []
    for e, loc in zip(lam, r2):
        n, gap = _nearest_landau(e, B)
        if gap <= min_gap or loc >= limit or n > n_max:
            continue
        if levels and abs(e - levels[-1].e_alpha) <= degeneracy_tol:
            last = levels[-1]
            levels[-1] = replace(last, multiplicity=last.multiplicity + 1)
            continue
        levels.append(ImpurityLevel(float(e), 1, float(gap), n, float(loc)))
    log.debug("impurity levels at B=%g: %s", B, [lv.e_alpha for lv in levels])
    return levels


def window_half_width(F: float, window_c: float = DEFAULT_WINDOW_C, eps: float = 0.2) -> float:
    """``c F^{eps/2}``; the bare ``c`` when ``F == 0``."""
    return window_c * F ** (eps / 2.0) if F > 0 else window_c


def _eigenvalues(eigs) -> np.ndarray:
    if len(eigs) and isinstance(eigs[0], EigenPair):
        return np.array([p.lam for p in eigs])
    return np.asarray(eigs, dtype=complex)


def locate_resonances(eigs, seed: ImpurityLevel, fields: FieldParams, *,
                      window_c: float = DEFAULT_WINDOW_C, eps: float = 0.2) -> list[int]:
    """Indices of the ``seed.multiplicity`` candidates closest to ``e_alpha`` in real part.

    Candidates satisfy ``|Re lam - e_alpha| <= c F^{eps/2}`` and
    ``|Im lam| < bF/2``.  The band is symmetric so that a width lost in
    rounding (``Im`` slightly positive) is still found and later classified
    as unresolved.
    """
    lam = _eigenvalues(eigs)
    w = window_half_width(fields.F, window_c, eps)
    band = fields.b * fields.F / 2.0
    re_ok = np.abs(lam.real - seed.e_alpha) <= w
    if band > 0:
        im_ok = np.abs(lam.imag) < band
    else:
        # self-adjoint case: the spectrum is real up to rounding
        im_ok = np.abs(lam.imag) <= NOISE_REL * max(1.0, np.max(np.abs(lam)))
    cand = np.nonzero(re_ok & im_ok)[0]
    if cand.size == 0:
        raise NotFoundError(
            f"no eigenvalue with |Re - {seed.e_alpha:.6g}| <= {w:.3g} and |Im| < {band:.3g}"
        )
    order = cand[np.argsort(np.abs(lam[cand].real - seed.e_alpha), kind="stable")]
    return [int(i) for i in order[: seed.multiplicity]]


def locate_resonance(eigs, seed: ImpurityLevel, fields: FieldParams, *,
                     window_c: float = DEFAULT_WINDOW_C, eps: float = 0.2,
                     noise_floor: float = 0.0) -> ResonanceEstimate:
    """Resonance nearest to ``seed`` among the eigenvalues ``eigs``.

    Stability fields are left unset; :func:`estimate_resonance` fills them.

    Raises
    ------
    NotFoundError
        If the search window is empty.
    """
    lam = _eigenvalues(eigs)
    i = locate_resonances(lam, seed, fields, window_c=window_c, eps=eps)[0]
    return ResonanceEstimate(
        E=complex(lam[i]), e_alpha_seed=seed.e_alpha, F=fields.F, b=fields.b,
        noise_floor=noise_floor,
    )


def width_and_lifetime(est: ResonanceEstimate) -> tuple[float, float]:
    """``(Gamma, tau)`` with ``Gamma = -2 Im E``.

    ``tau`` is ``inf`` when ``Gamma`` does not exceed the estimate's noise floor.
    """
    gamma = -2.0 * est.E.imag
    tau = 1.0 / gamma if gamma > est.noise_floor and gamma > 0 else math.inf
    return gamma, tau


def classify(est: ResonanceEstimate) -> str:
    """Status from width, stability and continuum distance."""
    g = est.Gamma
    # a rerun that lost the resonance (inf) is instability, not noise
    shifts = [d for d in (est.delta_b, est.delta_N) if math.isfinite(d)]
    noise = max([est.noise_floor, *shifts])
    if not g > noise:
        return "unresolved"
    tol = max(STABILITY_REL * g, STABILITY_ABS)
    if not (_finite(est.delta_b, math.inf) <= tol and _finite(est.delta_N, math.inf) <= tol):
        return "flagged"
    if est.continuum_gap < CONTINUUM_FRACTION * est.b * est.F:
        return "flagged"
    return "ok"


def _finite(x: float, nan_value: float = 0.0) -> float:
    return nan_value if math.isnan(x) else x


def estimate_resonance(
    fields: FieldParams,
    model: PotentialModel,
    basis: BasisSpec,
    seed: ImpurityLevel,
    *,
    window_c: float = DEFAULT_WINDOW_C,
    eps: float = 0.2,
    bump: int = 4,
    stability: bool = True,
) -> ResonanceEstimate:
    """Assemble, diagonalize, locate and classify one resonance.

    With ``stability=True`` the solve is repeated at ``2b`` and with ``bump``
    extra basis functions per axis; the shifts of ``E`` populate
    ``delta_b`` and ``delta_N``.  A rerun that finds nothing gives ``inf``.
    """
    H = assemble_H(fields, model, basis)
    noise = NOISE_REL * H.norm_max()
    lam = eigvals_dense(H)
    est = locate_resonance(lam, seed, fields, window_c=window_c, eps=eps, noise_floor=noise)
    delta_b = delta_N = math.nan
    if stability:
        f2 = replace(fields, b=2.0 * fields.b)
        delta_b = _rerun_shift(est.E, f2, model, basis, seed, window_c, eps)
        delta_N = _rerun_shift(est.E, fields, model, basis.bumped(bump), seed, window_c, eps)
    est = replace(est, delta_b=delta_b, delta_N=delta_N)
    status = classify(est)
    if status == "unresolved":
        est = replace(est, tau=math.inf)
    return replace(est, status=status)


def _rerun_shift(E, fields, model, basis, seed, window_c, eps) -> float:
    try:
        fields.check_strip(model)
        lam = eigvals_dense(assemble_H(fields, model, basis))
        other = locate_resonance(lam, seed, fields, window_c=window_c, eps=eps)
    except NotFoundError:
        return math.inf
    return abs(other.E - E)


# ---------------------------------------------------------------------------
# reference Hamiltonian


@dataclass(frozen=True)
class H2Report:
    """Cross-check of the reference operator against ``H(0)`` and ``H(F, ib)``."""

    F: float
    b: float
    e_alpha: float
    norm_max: float
    window: tuple[float, float]
    n_window: int
    max_abs_imag: float
    max_mismatch: float
    lambda_alpha: complex
    shift: float
    shift_ratio: float
    overlap: float

    @property
    def reality_ok(self) -> bool:
        return self.max_abs_imag <= 1e-10 * self.norm_max

    @property
    def match_ok(self) -> bool:
        return self.max_mismatch <= 1e-8

    def to_dict(self) -> dict:
        return {
            "F": self.F, "b": self.b, "e_alpha": self.e_alpha, "norm_max": self.norm_max,
            "window": list(self.window), "n_window": self.n_window,
            "max_abs_imag": self.max_abs_imag, "max_mismatch": self.max_mismatch,
            "lambda_alpha": [self.lambda_alpha.real, self.lambda_alpha.imag],
            "shift": self.shift, "shift_over_F_eps": self.shift_ratio,
            "overlap": self.overlap, "reality_ok": self.reality_ok, "match_ok": self.match_ok,
        }


def h2_crosscheck(
    fields: FieldParams,
    model: PotentialModel,
    schedule: ScheduleParams,
    basis: BasisSpec,
    seed: ImpurityLevel,
    *,
    window_c: float = DEFAULT_WINDOW_C,
) -> H2Report:
    """Compare ``H2(F, ib)`` with ``H2(F, 0)`` and with ``H(F, ib)``.

    Reports the largest ``|Im|`` of ``H2(F, ib)`` eigenvalues within the seed
    window, their largest distance to the ``b = 0`` spectrum, the shift of
    the continued level from ``e_alpha`` and the eigenvector overlap with the
    located resonance of ``H(F, ib)``.
    """
    eps = schedule.eps
    H2 = assemble_H2(fields, model, schedule, basis)
    pairs2 = eig_dense(H2)
    lam2 = np.array([p.lam for p in pairs2])
    if fields.b == 0 or fields.F == 0:
        lam0 = lam2
    else:
        lam0 = eigvals_dense(assemble_H2(replace(fields, b=0.0), model, schedule, basis))
    w = window_half_width(fields.F, window_c, eps)
    inside = np.nonzero(np.abs(lam2.real - seed.e_alpha) <= w)[0]
    max_imag = float(np.max(np.abs(lam2[inside].imag))) if inside.size else math.nan
    mism = [float(np.min(np.abs(lam0 - lam2[i]))) for i in inside]
    max_mismatch = max(mism) if mism else math.nan
    ia = int(np.argmin(np.abs(lam2 - seed.e_alpha)))
    lam_a = complex(lam2[ia])
    shift = abs(lam_a.real - seed.e_alpha)
    ratio = shift / fields.F**eps if fields.F > 0 else 0.0

    overlap = math.nan
    if fields.F == 0:
        overlap = 1.0
    else:
        try:
            pairs = eig_dense(assemble_H(fields, model, basis))
            k = locate_resonances(pairs, seed, fields, window_c=window_c, eps=eps)[0]
            overlap = float(abs(np.vdot(pairs2[ia].v, pairs[k].v)))
        except NotFoundError:
            log.warning("no resonance of H(F, ib) for the overlap at F=%g", fields.F)
    return H2Report(
        F=fields.F, b=fields.b, e_alpha=seed.e_alpha, norm_max=H2.norm_max(),
        window=(seed.e_alpha - w, seed.e_alpha + w), n_window=int(inside.size),
        max_abs_imag=max_imag, max_mismatch=max_mismatch, lambda_alpha=lam_a,
        shift=shift, shift_ratio=ratio, overlap=overlap,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Shifts ``|lambda_alpha(F) - e_alpha|`` of the reference level over a field list."""

    F: tuple[float, ...]
    shifts: tuple[float, ...]
    c: float
    eps: float
    bounded: bool
    monotone: bool

    @property
    def passed(self) -> bool:
        return self.bounded and self.monotone

    def to_dict(self) -> dict:
        return {"F": list(self.F), "shifts": list(self.shifts), "c": self.c, "eps": self.eps,
                "bounded": self.bounded, "monotone": self.monotone, "pass": self.passed}


def reference_level_shifts(
    B: float,
    model: PotentialModel,
    schedule: ScheduleParams,
    basis: BasisSpec,
    seed: ImpurityLevel,
    F_list,
) -> ConvergenceReport:
    """Track the reference-operator level as ``F`` varies.

    ``c`` is fitted as the largest ``shift / F^eps`` over every field except
    the smallest one.  The smallest field is then a genuine test:
    ``bounded`` asks that every shift lies below ``c F^eps``.  ``monotone``
    asks that the shift decreases with ``F``.
    """
    Fs = sorted(float(f) for f in F_list)
    shifts = []
    for F in Fs:
        H2 = assemble_H2(FieldParams(B, F, 0.0), model, schedule, basis)
        lam = eigvals_dense(H2).real
        shifts.append(float(np.min(np.abs(lam - seed.e_alpha))))
    eps = schedule.eps
    ratios = [s / F**eps for s, F in zip(shifts, Fs)]
    c = max(ratios[1:]) if len(ratios) > 1 else ratios[0]
    # compare ratios, not c * F^eps: the maximizing field must not fail by one ulp
    bounded = all(r <= c for r in ratios)
    monotone = all(a < b for a, b in zip(shifts, shifts[1:]))
    return ConvergenceReport(tuple(Fs), tuple(shifts), c, eps, bounded, monotone)
