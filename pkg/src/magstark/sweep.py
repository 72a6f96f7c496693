"""Field sweeps and the width scaling fit ``ln Gamma = lnC - R / F^p``."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.optimize import brentq, least_squares

from .config import RunConfig
from .discretization import BasisSpec
from .errors import InsufficientDataError, InvalidParameterError, MagstarkError, NotFoundError
from .model import FieldParams, PotentialModel
from .resonance import ImpurityLevel, estimate_resonance, landau_energy, unperturbed_levels

log = logging.getLogger(__name__)

P_RANGE = (1.2, 2.8)


@dataclass(frozen=True)
class SweepRow:
    """One (F, B) point.  Field names match the CSV header."""

    F: float
    B: float
    b: float
    Nx: int
    Ny: int
    e_alpha: float
    re_E: float
    im_E: float
    Gamma: float
    tau: float
    delta_b: float
    delta_N: float
    continuum_gap: float
    status: str


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of ``ln Gamma = lnC - R F^{-p}``."""

    lnC: float
    R: float
    p: float
    residual_rms: float
    n_points: int
    p_fixed: bool = False
    B: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# sweep


def _b_for(cfg: RunConfig, F: float) -> float:
    if cfg.sweep.b_policy == "schedule":
        return cfg.schedule.b_of(F)
    return cfg.sweep.b_auto


def _seed_level(B: float, model: PotentialModel, cfg: RunConfig) -> ImpurityLevel | None:
    levels = unperturbed_levels(B, model, cfg.basis, min_gap=cfg.sweep.landau_gap_min)
    if len(levels) <= cfg.sweep.level_index:
        return None
    return levels[cfg.sweep.level_index]


def match_gap_potential(cfg: RunConfig, B: float) -> PotentialModel:
    """Depth-rescaled potential whose selected level keeps its Landau offset.

    The offset ``(2n+1)B - e_alpha`` of the selected level is measured at
    ``reference_B`` with the configured ``V0``; at ``B`` the depth is solved
    for (Brent's method) so that the offset is the same.
    """
    ref_model = cfg.potential
    ref = _seed_level(cfg.sweep.reference_B, ref_model, cfg)
    if ref is None:
        raise NotFoundError(f"no impurity level {cfg.sweep.level_index} at reference B")
    target = landau_energy(ref.landau_index, cfg.sweep.reference_B) - ref.e_alpha
    if math.isclose(B, cfg.sweep.reference_B):
        return ref_model

    def offset(V0: float) -> float:
        lv = _seed_level(B, replace(ref_model, V0=V0), cfg)
        if lv is None:
            return -target  # level not bound yet: treat as zero offset
        return landau_energy(ref.landau_index, B) - lv.e_alpha - target

    lo, hi = 0.5 * ref_model.V0 * min(1.0, B), 2.0 * ref_model.V0 * max(1.0, B)
    V0 = brentq(offset, lo, hi, xtol=1e-12, rtol=1e-12)
    log.info("gap matching at B=%g: V0=%.12g", B, V0)
    return replace(ref_model, V0=V0)


def _empty_row(F, B, b, basis: BasisSpec, e_alpha, status) -> SweepRow:
    nan = math.nan
    return SweepRow(F, B, b, basis.Nx, basis.Ny, e_alpha, nan, nan, nan, nan, nan, nan, nan, status)


def _solve_row(task) -> SweepRow:
    cfg, B, F, model, seed = task
    b = _b_for(cfg, F)
    basis = cfg.basis
    if seed is None:
        return _empty_row(F, B, b, basis, math.nan, "not-found")
    try:
        est = estimate_resonance(
            FieldParams(B, F, b), model, basis, seed,
            window_c=cfg.sweep.window_c, eps=cfg.schedule.eps, bump=cfg.sweep.basis_bump,
        )
    except NotFoundError:
        return _empty_row(F, B, b, basis, seed.e_alpha, "not-found")
    except (MagstarkError, np.linalg.LinAlgError) as exc:
        log.warning("row F=%g B=%g failed: %s", F, B, exc)
        return _empty_row(F, B, b, basis, seed.e_alpha, "error")
    return SweepRow(
        F=F, B=B, b=b, Nx=basis.Nx, Ny=basis.Ny, e_alpha=seed.e_alpha,
        re_E=est.E.real, im_E=est.E.imag, Gamma=est.Gamma, tau=est.tau,
        delta_b=est.delta_b, delta_N=est.delta_N, continuum_gap=est.continuum_gap,
        status=est.status,
    )


def apply_monotonicity_gate(rows: list[SweepRow]) -> list[SweepRow]:
    """Flag ``ok`` rows whose width is not below that of the next larger field."""
    out = list(rows)
    for B in sorted({r.B for r in rows}):
        idx = sorted((i for i, r in enumerate(out) if r.B == B and r.status == "ok"),
                     key=lambda i: out[i].F)
        for i, j in zip(idx, idx[1:]):
            if not out[i].Gamma < out[j].Gamma:
                out[i] = replace(out[i], status="flagged")
    return out


def run_sweep(cfg: RunConfig, jobs: int | None = None) -> list[SweepRow]:
    """One row per ``(F, B)`` in config order (``B`` outer, ``F`` inner).

    Parameters
    ----------
    cfg : RunConfig
    jobs : int, optional
        Worker processes; ``None`` or 1 runs in-process.  Results do not
        depend on the worker count.
    """
    tasks = []
    for B in cfg.sweep.B_list:
        model = match_gap_potential(cfg, B) if cfg.sweep.gap_matching and cfg.potential.V0 else cfg.potential
        seed = _seed_level(B, model, cfg) if model.V0 else None
        for F in cfg.sweep.F_list:
            tasks.append((cfg, B, F, model, seed))
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_solve_row, tasks))
    else:
        rows = [_solve_row(t) for t in tasks]
    return apply_monotonicity_gate(rows)


def default_jobs() -> int:
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# fitting


def _inner_fit(F: np.ndarray, y: np.ndarray, p: float) -> tuple[float, float, float]:
    A = np.column_stack([np.ones_like(F), -(F ** -p)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(coef[0]), float(coef[1]), float(math.sqrt(np.mean(r * r)))


def _golden_min(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Golden-section search for a minimum of ``f`` on ``[a, b]``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_width_law(rows, fix_p: float | None = None, p_range: tuple[float, float] = P_RANGE) -> FitResult:
    """Fit ``ln Gamma = lnC - R F^{-p}`` to the ``ok`` rows.

    With ``fix_p`` the fit is a single linear least-squares solve.  Otherwise
    ``p`` is first located by golden-section search on the RMS residual of
    the inner linear solve over ``p_range``.  All three parameters are then
    polished jointly by nonlinear least squares, keeping ``p`` inside
    ``p_range``.

    Raises
    ------
    InsufficientDataError
        Fewer than four usable rows or fewer than four distinct fields.
    """
    use = [r for r in rows if r.status == "ok" and r.Gamma > 0 and math.isfinite(r.Gamma)]
    if len(use) < 4 or len({r.F for r in use}) < 4:
        raise InsufficientDataError(f"need >= 4 ok rows with distinct F, have {len(use)}")
    F = np.array([r.F for r in use])
    y = np.log(np.array([r.Gamma for r in use]))
    Bs = {r.B for r in use}
    B = Bs.pop() if len(Bs) == 1 else None
    if fix_p is not None:
        lnC, R, rms = _inner_fit(F, y, fix_p)
        return FitResult(lnC, R, float(fix_p), rms, len(use), True, B)
    p0 = _golden_min(lambda p: _inner_fit(F, y, p)[2], *p_range)
    lnC0, R0, _ = _inner_fit(F, y, p0)
    lo, hi = p_range
    sol = least_squares(
        lambda t: t[0] - t[1] * F ** -t[2] - y,
        x0=[lnC0, R0, min(max(p0, lo + 1e-12), hi - 1e-12)],
        bounds=([-np.inf, -np.inf, lo], [np.inf, np.inf, hi]),
        xtol=1e-15, ftol=1e-15, gtol=1e-15,
    )
    p = float(sol.x[2])
    lnC, R, rms = _inner_fit(F, y, p)
    if rms > _inner_fit(F, y, p0)[2]:  # keep the better of the two stages
        p = p0
        lnC, R, rms = _inner_fit(F, y, p)
    return FitResult(lnC, R, p, rms, len(use), False, B)


@dataclass(frozen=True)
class LinearityReport:
    """Regression ``R(B) = m B + q`` across field strengths."""

    B: tuple[float, ...]
    R: tuple[float, ...]
    m: float
    q: float
    correlation: float
    p: float

    @property
    def offset_ratio(self) -> float:
        """``|q| / (m B_min)``; the gate asks for at most 0.3."""
        return abs(self.q) / (self.m * min(self.B)) if self.m > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.correlation >= 0.95 and self.m > 0 and self.offset_ratio <= 0.3

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(offset_ratio=self.offset_ratio, status="PASS" if self.passed else "FAIL")
        return d


def b_linearity(fits) -> LinearityReport:
    """Linear regression of the decay coefficient against ``B``.

    Parameters
    ----------
    fits : sequence of (B, FitResult)
        At least three distinct ``B`` values fitted at one fixed ``p``.
    """
    fits = sorted(((float(B), f) for B, f in fits), key=lambda t: t[0])
    if len({B for B, _ in fits}) < 3:
        raise InsufficientDataError("need fits at >= 3 distinct B values")
    ps = {f.p for _, f in fits}
    if not all(f.p_fixed for _, f in fits) or len(ps) != 1:
        raise InvalidParameterError("all fits must share one fixed exponent p")
    Bv = np.array([B for B, _ in fits])
    Rv = np.array([f.R for _, f in fits])
    m, q = np.polyfit(Bv, Rv, 1)
    corr = float(np.corrcoef(Bv, Rv)[0, 1])
    return LinearityReport(tuple(Bv.tolist()), tuple(Rv.tolist()), float(m), float(q), corr, ps.pop())


def fits_by_B(rows, fix_p: float | None = None) -> list[tuple[float, FitResult]]:
    """Fit each field strength ``B`` present in ``rows`` separately."""
    out = []
    for B in sorted({r.B for r in rows}):
        out.append((B, fit_width_law([r for r in rows if r.B == B], fix_p=fix_p)))
    return out
