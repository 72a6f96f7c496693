"""Decoupling functions and grid checks of the closed-form cutoff estimates.

The x-family (``J-``, ``J0``, ``J+`` and their tilde versions) is built from
tanh steps and continues analytically to ``x + ib``.  The y-family
(``J<``, ``Jc``, ``J>``) uses a C-infinity smooth step, and its tilde
versions are sharp indicators on half-open intervals, so they sum to one
exactly.

Every check returns a :class:`CheckReport` carrying its grid description, so
reruns are reproducible.  A FAIL is data, not an exception.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .model import (
    QUARTER_PI,
    DerivedGeometry,
    ScheduleParams,
    hF_envelope,
    logistic,
    tanh_plateau,
    tanh_plateau_complement,
)

GRID_POINTS = 4096
REFINE_POINTS = 48
# pointwise comparisons allow a few ulps of rounding in value and bound
POINTWISE_RTOL = 1e-12
DEFAULT_F_LIST = (0.2, 0.25, 0.3, 0.4, 0.5)

X_FAMILY = ("J-", "Jt-", "J0", "Jt0", "J+", "Jt+")
Y_FAMILY = ("J<", "Jc", "J>", "Jt<", "Jtc", "Jt>")


# ---------------------------------------------------------------------------
# decoupling functions


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, ``f(t)/(f(t)+f(1-t))`` between."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    # f(t)/(f(t)+f(1-t)) = 1/(1 + exp(1/t - 1/(1-t)))
    out[mid] = 1.0 / (1.0 + np.exp(1.0 / tm - 1.0 / (1.0 - tm)))
    return out


def _x_function(which: str, x, b: float, g: DerivedGeometry):
    z = x + 1j * b if b else np.asarray(x, dtype=float)
    two_g = 2.0 * g.gammaF
    if which == "J-":
        return logistic(two_g * (z - g.x2))
    if which == "Jt-":
        return logistic(two_g * (z - g.x0))
    if which == "J+":
        return logistic(-two_g * (z + g.x2))
    if which == "Jt+":
        return logistic(-two_g * (z + g.x0))
    if which == "J0":
        return tanh_plateau(x, b, g.gammaF, g.x1)
    return tanh_plateau(x, b, g.gammaF, g.x0)  # Jt0


def _y_function(which: str, y, g: DerivedGeometry):
    y = np.asarray(y, dtype=float)
    if which == "Jc":
        return smooth_step(g.y1 - np.abs(y))
    if which == "J<":
        return smooth_step(-g.y2 - y)
    if which == "J>":
        return smooth_step(y - g.y2)
    if which == "Jtc":
        return ((y >= -g.y0) & (y <= g.y0)).astype(float)
    if which == "Jt<":
        return (y < -g.y0).astype(float)
    return (y > g.y0).astype(float)  # Jt>


def eval_J(which: str, coord, b: float, geom: DerivedGeometry):
    """Evaluate one decoupling function.

    Parameters
    ----------
    which : str
        One of ``J-, Jt-, J0, Jt0, J+, Jt+`` (functions of x, continued to
        ``x + ib``) or ``J<, Jc, J>, Jt<, Jtc, Jt>`` (functions of y, where
        ``b`` is ignored).
    coord : float or array_like
    b : float
    geom : DerivedGeometry

    Raises
    ------
    DomainError
        For an x-function with ``gamma_F b >= pi/4``.
    """
    if which in X_FAMILY:
        geom.check_b(b)
        out = _x_function(which, coord, b, geom)
    elif which in Y_FAMILY:
        out = _y_function(which, coord, geom)
    else:
        raise InvalidParameterError(f"unknown decoupling function {which!r}")
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# grids and reports


@dataclass(frozen=True)
class Grid:
    """Uniform grid over ``span`` plus geometric refinement around cut points."""

    points: np.ndarray = field(repr=False)
    span: tuple[float, float]
    uniform: int
    cut_points: tuple[float, ...]

    def describe(self) -> dict:
        return {
            "span": list(self.span),
            "uniform_points": self.uniform,
            "refine_per_side": REFINE_POINTS,
            "cut_points": list(self.cut_points),
            "total_points": int(self.points.size),
        }


def make_grid(geom: DerivedGeometry, half_span: float, n: int = GRID_POINTS) -> Grid:
    """4096-point default grid on ``[-half_span, half_span]``, refined near
    ``+-x2, +-x0, +-x1, +-xbar`` on scales from ``1e-6/gamma`` to ``1/gamma``."""
    base = np.linspace(-half_span, half_span, n)
    offsets = np.logspace(-6, 0, REFINE_POINTS) / geom.gammaF
    cuts = (geom.x2, geom.x0, geom.x1, geom.xbar)
    extra = [base, [0.0]]
    for c in cuts:
        for s in (-c, c):
            extra += [s - offsets, s + offsets, [s]]
    pts = np.unique(np.concatenate(extra))
    pts = pts[(pts >= -half_span) & (pts <= half_span)]
    return Grid(pts, (-half_span, half_span), n, tuple(float(c) for c in cuts))


@dataclass
class CheckReport:
    """Outcome of one grid check.

    ``worst_ratio`` is ``max value / bound`` for pointwise checks; the check
    passes when it does not exceed ``1 + 1e-12``.  ``worst_slack`` is
    ``min(bound - value)``.
    """

    name: str
    passed: bool
    params: dict
    worst_ratio: float = math.nan
    worst_slack: float = math.nan
    value: float = math.nan
    argmax: float = math.nan
    grid: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = "PASS" if self.passed else "FAIL"
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _geom_params(geom: DerivedGeometry, b: float) -> dict:
    d = {k: getattr(geom, k) for k in ("F", "gammaF", "xbar", "x0", "x1", "x2", "eps")}
    d["b"] = b
    d["gamma_b_over_quarter_pi"] = geom.gammaF * b / QUARTER_PI
    return d


def _pointwise(name, values, bounds, x, params, grid) -> CheckReport:
    values = np.abs(values)
    ratio = values / bounds
    i = int(np.argmax(ratio))
    slack = bounds - values
    passed = bool(np.all(values <= bounds * (1.0 + POINTWISE_RTOL)))
    return CheckReport(
        name=name, passed=passed, params=params, worst_ratio=float(ratio[i]),
        worst_slack=float(np.min(slack)), value=float(values[i]), argmax=float(x[i]),
        grid=grid.describe(),
    )


# ---------------------------------------------------------------------------
# pointwise bounds


def j0_envelope(x, b: float, geom: DerivedGeometry):
    """``exp(-2 gamma (|x| - x1)) / cos(2 gamma b)``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-2.0 * geom.gammaF * (np.abs(x) - geom.x1)) / math.cos(2.0 * geom.gammaF * b)


def complement_envelope(x, geom: DerivedGeometry):
    """``(e^{-4g(x - xbar)} + 1)^{-1/2} + (e^{4g(x + xbar)} + 1)^{-1/2}``, overflow-free."""
    x = np.asarray(x, dtype=float)
    g4 = 4.0 * geom.gammaF
    h1 = np.exp(-0.5 * np.logaddexp(-g4 * (x - geom.xbar), 0.0))
    h2 = np.exp(-0.5 * np.logaddexp(g4 * (x + geom.xbar), 0.0))
    return h1 + h2


def check_j0_bound(geom: DerivedGeometry, b: float, grid: Grid | None = None) -> CheckReport:
    """``|J0(x + ib)|`` against its exponential envelope on ``[-4 x1, 4 x1]``."""
    geom.check_b(b)
    grid = grid or make_grid(geom, 4.0 * geom.x1)
    x = grid.points
    vals = tanh_plateau(x, b, geom.gammaF, geom.x1)
    return _pointwise("j0_bound", vals, j0_envelope(x, b, geom), x, _geom_params(geom, b), grid)


def check_hF_bounds(geom: DerivedGeometry, b: float, grid: Grid | None = None) -> CheckReport:
    """Both estimates for the field plateau on ``[-3 xbar, 3 xbar]``.

    The modulus ``|h_F(x + ib)|`` is compared with its rational envelope and
    ``|1 - h_F(x + ib)|`` with the two-term envelope ``h1 + h2``.  The
    report passes only when both hold; sub-results are in ``details``.
    """
    geom.check_b(b)
    grid = grid or make_grid(geom, 3.0 * geom.xbar)
    x = grid.points
    params = _geom_params(geom, b)
    mod = _pointwise("hF_modulus", tanh_plateau(x, b, geom.gammaF, geom.xbar),
                     hF_envelope(x, b, geom), x, params, grid)
    comp = _pointwise("hF_complement", tanh_plateau_complement(x, b, geom.gammaF, geom.xbar),
                      complement_envelope(x, geom), x, params, grid)
    worst = mod if mod.worst_ratio >= comp.worst_ratio else comp
    return CheckReport(
        name="hF_bounds", passed=mod.passed and comp.passed, params=params,
        worst_ratio=worst.worst_ratio, worst_slack=min(mod.worst_slack, comp.worst_slack),
        value=worst.value, argmax=worst.argmax, grid=grid.describe(),
        details={
            "modulus": {k: getattr(mod, k) for k in ("passed", "worst_ratio", "worst_slack", "argmax")},
            "complement": {k: getattr(comp, k) for k in ("passed", "worst_ratio", "worst_slack", "argmax")},
        },
    )


# ---------------------------------------------------------------------------
# smallness quantities


def partition_sum(x, b: float, geom: DerivedGeometry):
    """``sum over {-, 0, +} of J(x + ib) Jt(x + ib)``."""
    return sum(
        _x_function(a, x, b, geom) * _x_function(t, x, b, geom)
        for a, t in (("J-", "Jt-"), ("J0", "Jt0"), ("J+", "Jt+"))
    )


def partition_defect(geom: DerivedGeometry, b: float, grid: Grid | None = None) -> float:
    """``sup |sum_a J_a Jt_a - 1|`` over ``[-3 xbar, 3 xbar]``."""
    geom.check_b(b)
    grid = grid or make_grid(geom, 3.0 * geom.xbar)
    return float(np.max(np.abs(partition_sum(grid.points, b, geom) - 1.0)))


def a2_product(geom: DerivedGeometry, b: float, grid: Grid | None = None) -> tuple[float, float]:
    """``sup F |x| |1 - h_F(x + ib)| |J0(x + ib)|`` and its location."""
    geom.check_b(b)
    grid = grid or make_grid(geom, 3.0 * geom.xbar)
    x = grid.points
    vals = (geom.F * np.abs(x) * np.abs(tanh_plateau_complement(x, b, geom.gammaF, geom.xbar))
            * np.abs(tanh_plateau(x, b, geom.gammaF, geom.x1)))
    i = int(np.argmax(vals))
    return float(vals[i]), float(x[i])


def check_a2_product(geom: DerivedGeometry, b: float, F: float | None = None,
                     grid: Grid | None = None) -> CheckReport:
    """Single-field A2 product; ``passed`` means the sup sits in ``[x1, xbar]``.

    The smallness criterion needs several fields; see :func:`trend_report`.
    """
    if F is not None and not math.isclose(F, geom.F):
        raise InvalidParameterError(f"F={F} does not match geometry F={geom.F}")
    grid = grid or make_grid(geom, 3.0 * geom.xbar)
    val, at = a2_product(geom, b, grid)
    inside = geom.x1 <= abs(at) <= geom.xbar
    return CheckReport(name="a2_product", passed=bool(inside), params=_geom_params(geom, b),
                       value=val, argmax=at, grid=grid.describe())


def local_field_sup(geom: DerivedGeometry, F: float) -> float:
    """``sup_x |F x h_F(x)|`` at ``b = 0``."""
    grid = make_grid(geom, 3.0 * geom.xbar)
    x = grid.points
    return float(np.max(np.abs(F * x * tanh_plateau(x, 0.0, geom.gammaF, geom.xbar))))


def check_localfield_norm(schedule: ScheduleParams, F_list=DEFAULT_F_LIST, a1: float = 1.0) -> CheckReport:
    """Local-field sup-norm ``s(F) = sup_x |F x h_F(x)|`` against ``Cbar F^eps``.

    Since ``|x h_F(x)| <= xbar`` and ``F xbar = Cbar F^eps``, one constant
    bounds ``s(F) / F^eps`` and ``s(F) -> 0`` whenever ``eps > 0``.  The
    check passes when ``s(F) <= Cbar F^eps`` at every listed field and
    ``eps > 0``.  With ``eps = 0`` the envelope is constant and the check
    fails, as it should.

    ``details`` also carries the spread of ``s/F^eps`` and the log-log slope.
    At moderate fields ``gamma_F xbar`` is small, the plateau is soft and
    ``s(F)`` has not yet entered its asymptotic ``F^eps`` decay.
    """
    Fs = [float(f) for f in F_list]
    if any(not 0 < f <= 0.6 for f in Fs):
        raise InvalidParameterError("F_list must lie in (0, 0.6]")
    s = np.array([local_field_sup(schedule.geometry(F, a1), F) for F in Fs])
    ratios = s / np.array(Fs) ** schedule.eps
    spread = float(ratios.max() / ratios.min())
    slope = float(np.polyfit(np.log(Fs), np.log(s), 1)[0]) if len(Fs) > 1 else math.nan
    bounded = bool(np.all(ratios <= schedule.Cbar * (1.0 + POINTWISE_RTOL)))
    passed = bounded and schedule.eps > 0
    return CheckReport(
        name="localfield_norm", passed=passed,
        params={"eps": schedule.eps, "Cbar": schedule.Cbar, "F_list": Fs},
        worst_ratio=float(ratios.max() / schedule.Cbar), value=float(s.max()),
        details={"sup": s.tolist(), "ratio_to_F_eps": ratios.tolist(), "ratio_spread": spread,
                 "loglog_slope": slope, "bounded_by_Cbar": bounded},
    )


def _trend(name: str, Fs, values, eps: float, max_corr: float) -> CheckReport:
    t = np.array(Fs) ** (-2.0 * (1.0 - eps))
    y = np.log(np.array(values))
    slope, intercept = np.polyfit(t, y, 1)
    corr = float(np.corrcoef(t, y)[0, 1])
    passed = bool(slope < 0 and corr <= max_corr)
    return CheckReport(
        name=name, passed=passed, params={"F_list": list(Fs), "eps": eps, "max_corr": max_corr},
        value=float(slope),
        details={"values": list(values), "slope": float(slope), "intercept": float(intercept),
                 "correlation": corr},
    )


def trend_report(schedule: ScheduleParams, F_list=DEFAULT_F_LIST, a1: float = 1.0,
                 quantity: str = "partition", b_mode: str = "schedule") -> CheckReport:
    """Fit ``log sup`` of a smallness quantity against ``F^{-2(1-eps)}``.

    ``quantity`` is ``"partition"`` (defect) or ``"a2"`` (product).  Passes
    when the slope is negative and the correlation is at most -0.98.
    """
    Fs = sorted(float(f) for f in F_list)
    vals, where = [], []
    for F in Fs:
        g = schedule.geometry(F, a1)
        b = schedule.b_of(F) if b_mode == "schedule" else 0.0
        if quantity == "partition":
            vals.append(partition_defect(g, b))
        else:
            v, at = a2_product(g, b)
            vals.append(v)
            where.append(at / g.xbar)
    rep = _trend(f"{quantity}_trend", Fs, vals, schedule.eps, -0.98)
    if where:
        rep.details["argmax_over_xbar"] = where
    return rep


def schur_norm_bound(M) -> float:
    """``max(max row l1-sum, max column l1-sum)``; never below the spectral norm."""
    a = np.abs(np.asarray(getattr(M, "entries", M)))
    if a.size == 0:
        return 0.0
    return float(max(a.sum(axis=1).max(), a.sum(axis=0).max()))


# ---------------------------------------------------------------------------
# suite


CHECKS = ("j0", "hF", "partition", "localfield", "a2")


@dataclass
class VerificationReport:
    checks: list[CheckReport]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"status": "PASS" if self.passed else "FAIL",
                "checks": [c.to_dict() for c in self.checks]}


def run_verification(schedule: ScheduleParams, F_list=DEFAULT_F_LIST, a1: float = 1.0,
                     checks=CHECKS, grid_points: int = GRID_POINTS) -> VerificationReport:
    """Run the selected checks for every field in ``F_list``.

    Pointwise bounds are tested at ``b = 0``, at the schedule ``b`` and at
    ``0.7 pi / (4 gamma_F)`` (deep inside the admissible strip).
    """
    out: list[CheckReport] = []
    Fs = sorted(float(f) for f in F_list)
    for F in Fs:
        g = schedule.geometry(F, a1)
        bs = (0.0, schedule.b_of(F), 0.7 * g.max_b())
        for b in bs:
            if "j0" in checks:
                out.append(check_j0_bound(g, b, make_grid(g, 4.0 * g.x1, grid_points)))
            if "hF" in checks:
                out.append(check_hF_bounds(g, b, make_grid(g, 3.0 * g.xbar, grid_points)))
    if "partition" in checks:
        out.append(trend_report(schedule, Fs, a1, "partition"))
    if "a2" in checks:
        out.append(trend_report(schedule, Fs, a1, "a2"))
    if "localfield" in checks:
        out.append(check_localfield_norm(schedule, Fs, a1))
    return VerificationReport(out)
