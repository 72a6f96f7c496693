"""Truncated tensor Hermite basis and dense Hamiltonian assembly.

Basis functions are ``phi_m(x) * i^n * phi_n(y)`` where ``phi_k`` is the
k-th Hermite function with length scale ``lx`` or ``ly``.  The phase on the
y-factor makes the Landau cross term ``2B y p_x`` real, so every assembled
matrix is real symmetric at ``b = 0`` and complex symmetric for ``b > 0``.

Potential blocks are Kronecker products of 1D matrices, since both
potential families and the local field are separable.  The 1D integrals use
composite 16-point Gauss-Legendre panels.  Breakpoints sit on the cut points
of the integrand, where the derivatives jump or tanh transitions live.
"""

from __future__ import annotations

import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InvalidParameterError
from .model import (
    DerivedGeometry,
    FieldParams,
    LocalField,
    PotentialModel,
    ScheduleParams,
    tanh_plateau,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 2500
PANEL_ORDER = 16
QUAD_TOL = 1e-8
_WINDOW_PAD = 10.0  # oscillator lengths beyond the outermost turning point


class QuadratureWarning(UserWarning):
    """Doubling the panel count moved a block entry by more than ``QUAD_TOL``."""


@dataclass(frozen=True)
class BasisSpec:
    """Truncation of the tensor Hermite basis.

    ``Qx`` and ``Qy`` count Gauss-Legendre panels (16 nodes each) across the
    x and y windows; ``None`` selects ``4 N``.  ``lx``/``ly`` default to the
    magnetic length ``1/sqrt(B)`` once a field is known (see :meth:`for_field`).
    """

    Nx: int = 30
    Ny: int = 30
    lx: float | None = None
    ly: float | None = None
    Qx: int | None = None
    Qy: int | None = None
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise InvalidParameterError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in ("Nx", "Ny"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 2:
                out.append(f"{name} must be an integer >= 2, got {v!r}")
        for name in ("lx", "ly"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                out.append(f"{name} must be positive, got {v}")
        if not out:
            if self.Nx * self.Ny > self.max_dim:
                out.append(f"Nx*Ny = {self.Nx * self.Ny} exceeds the dense cap {self.max_dim}")
            if self.Qx is not None and self.Qx < 2 * self.Nx:
                out.append(f"Qx={self.Qx} violates Qx >= 2 Nx")
            if self.Qy is not None and self.Qy < 2 * self.Ny:
                out.append(f"Qy={self.Qy} violates Qy >= 2 Ny")
        return out

    @property
    def dim(self) -> int:
        return self.Nx * self.Ny

    def for_field(self, B: float) -> "BasisSpec":
        """Fill unset length scales with ``1/sqrt(B)`` and panel counts with ``4N``."""
        l = 1.0 / math.sqrt(B)
        return BasisSpec(
            Nx=self.Nx,
            Ny=self.Ny,
            lx=self.lx if self.lx is not None else l,
            ly=self.ly if self.ly is not None else l,
            Qx=self.Qx if self.Qx is not None else 4 * self.Nx,
            Qy=self.Qy if self.Qy is not None else 4 * self.Ny,
            max_dim=self.max_dim,
        )

    def bumped(self, k: int) -> "BasisSpec":
        """Same basis with ``k`` more functions per axis (panel counts rescaled)."""
        Qx = None if self.Qx is None else max(self.Qx, 4 * (self.Nx + k))
        Qy = None if self.Qy is None else max(self.Qy, 4 * (self.Ny + k))
        cap = max(self.max_dim, (self.Nx + k) * (self.Ny + k))
        return BasisSpec(self.Nx + k, self.Ny + k, self.lx, self.ly, Qx, Qy, cap)


@dataclass(frozen=True, eq=False)
class ComplexOperator:
    """Immutable dense matrix in the phased tensor basis plus provenance."""

    entries: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameterError(f"operator must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm_max(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.dim else 0.0

    def symmetry_defect(self) -> float:
        """``||M - M^T||_max / ||M||_max``."""
        n = self.norm_max()
        return float(np.max(np.abs(self.entries - self.entries.T))) / n if n else 0.0

    def hermiticity_defect(self) -> float:
        n = self.norm_max()
        return float(np.max(np.abs(self.entries - self.entries.conj().T))) / n if n else 0.0

    # -- binary dump -----------------------------------------------------
    # 16-byte header: uint64 dim, uint64 flags (bit 0: imaginary part is zero),
    # then dim*dim complex128 little-endian, row-major (re, im interleaved).

    def to_bytes(self) -> bytes:
        flags = int(not np.any(self.entries.imag))
        header = struct.pack("<QQ", self.dim, flags)
        return header + np.ascontiguousarray(self.entries, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ComplexOperator":
        dim, _flags = struct.unpack("<QQ", data[:16])
        body = np.frombuffer(data[16:], dtype="<c16")
        if body.size != dim * dim:
            raise ValueError(f"dump holds {body.size} values, header says {dim}x{dim}")
        return cls(body.reshape(dim, dim))

    def dump(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ComplexOperator":
        return cls.from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# 1D building blocks


def ladder_matrices(N: int, l: float) -> dict[str, np.ndarray]:
    """Position and momentum matrices in the first ``N`` Hermite functions.

    Returns
    -------
    dict
        ``X`` and ``X2`` are real; ``P`` is imaginary antisymmetric and ``P2``
        real.  ``X2`` and ``P2`` are the exact matrix elements of ``x^2`` and
        ``p^2``, which differ from ``X @ X`` and ``P @ P`` only in the last
        diagonal entry.
    """
    if N < 2:
        raise InvalidParameterError(f"need N >= 2, got {N}")
    if not l > 0:
        raise InvalidParameterError(f"need l > 0, got {l}")
    a = np.diag(np.sqrt(np.arange(1.0, N)), 1)
    X = l / math.sqrt(2.0) * (a + a.T)
    P = 1j / (math.sqrt(2.0) * l) * (a.T - a)
    n = np.arange(N, dtype=float)
    off = np.sqrt(n[2:] * (n[2:] - 1.0))
    diag = np.diag(2.0 * n + 1.0)
    two = np.diag(off, 2) + np.diag(off, -2)
    X2 = l * l / 2.0 * (diag + two)
    P2 = 1.0 / (2.0 * l * l) * (diag - two)
    return {"X": X, "P": P, "X2": X2, "P2": P2}


def hermite_functions(N: int, t) -> np.ndarray:
    """Orthonormal Hermite functions ``h_0..h_{N-1}`` at ``t`` (unit length).

    The three-term recurrence is carried in rescaled form with a running
    logarithm, so large ``|t|`` neither overflows nor loses the Gaussian.
    """
    t = np.asarray(t, dtype=float).ravel()
    out = np.empty((N, t.size))
    logs = -0.5 * t * t
    prev = np.zeros_like(t)
    cur = np.full_like(t, math.pi**-0.25)
    out[0] = cur * np.exp(logs)
    for n in range(1, N):
        nxt = math.sqrt(2.0 / n) * t * cur - math.sqrt((n - 1.0) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if big.any():
            cur[big] *= 1e-100
            prev[big] *= 1e-100
            logs[big] += 100.0 * math.log(10.0)
        out[n] = cur * np.exp(logs)
    return out


def window_half_width(N: int, l: float) -> float:
    """Half-width beyond which all of the first ``N`` functions are negligible."""
    return l * (math.sqrt(2.0 * N + 1.0) + _WINDOW_PAD)


def panel_rule(a: float, b: float, panels: int, breaks: Sequence[float] = ()):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]``.

    ``panels`` uniform panels are laid out, then every breakpoint strictly
    inside the interval is added as an extra panel edge.
    """
    if not b > a:
        return np.empty(0), np.empty(0)
    edges = np.linspace(a, b, panels + 1)
    extra = [p for p in breaks if a < p < b]
    edges = np.unique(np.concatenate([edges, extra]))
    s, w = leggauss(PANEL_ORDER)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * s
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


def _block_1d(N, l, f, interval, panels, breaks):
    x, w = panel_rule(interval[0], interval[1], panels, breaks)
    H = hermite_functions(N, x / l) / math.sqrt(l)
    fx = np.asarray(f(x))
    M = (H * (w * fx)) @ H.T
    return 0.5 * (M + M.T)


def quad_block_1d(
    N: int,
    l: float,
    f: Callable[[np.ndarray], np.ndarray],
    *,
    panels: int,
    breaks: Sequence[float] = (),
    interval: tuple[float, float] | None = None,
    check: bool = True,
) -> np.ndarray:
    """``<phi_m | f | phi_n>`` by composite Gauss-Legendre quadrature.

    Parameters
    ----------
    interval
        Integration range; clipped to the Hermite window.  Defaults to the
        whole window.
    check
        Repeat with twice the panels and emit :class:`QuadratureWarning` if
        any entry moves by more than ``QUAD_TOL``.
    """
    L = window_half_width(N, l)
    lo, hi = (-L, L) if interval is None else (max(interval[0], -L), min(interval[1], L))
    if not hi > lo:
        return np.zeros((N, N), dtype=complex)
    # keep the panel width of the full window when the range is clipped
    n_pan = max(1, int(math.ceil(panels * (hi - lo) / (2 * L))))
    M = _block_1d(N, l, f, (lo, hi), n_pan, breaks)
    if check:
        M2 = _block_1d(N, l, f, (lo, hi), 2 * n_pan, breaks)
        err = float(np.max(np.abs(M2 - M)))
        if err > QUAD_TOL:
            warnings.warn(
                f"quadrature not converged: doubling panels moved an entry by {err:.3g}",
                QuadratureWarning,
                stacklevel=2,
            )
    return M


def y_phase(Ny: int) -> np.ndarray:
    """Exact powers ``i^n`` (complex ``**`` leaves rounding residue)."""
    return np.array([1, 1j, -1, -1j])[np.arange(Ny) % 4]


def _even_part(M: np.ndarray) -> np.ndarray:
    """Zero the entries that vanish by parity for an even multiplier.

    Quadrature leaves them at rounding level, and the phase ``i^(n'-n)``
    would turn that residue into imaginary noise.
    """
    n = np.arange(M.shape[0])
    return np.where((n[:, None] + n[None, :]) % 2 == 0, M, 0.0)


def phase_y_block(M: np.ndarray) -> np.ndarray:
    """Express a natural-basis y-matrix in the ``i^n``-phased basis."""
    ph = y_phase(M.shape[0])
    out = ph.conj()[:, None] * M * ph[None, :]
    if np.allclose(out.imag, 0.0, atol=0.0):
        return out.real
    return out


# ---------------------------------------------------------------------------
# potential blocks


def _x_factor_model(model: PotentialModel, b: float, basis: BasisSpec, check: bool):
    nu = model.nu
    f = lambda x: model.x_profile(x, b)  # noqa: E731
    panels = max(basis.Qx, int(math.ceil(4 * window_half_width(basis.Nx, basis.lx) * math.sqrt(nu))))
    return quad_block_1d(basis.Nx, basis.lx, f, panels=panels, check=check)


def _y_factor_model(model: PotentialModel, basis: BasisSpec, check: bool):
    if model.kind == "gaussian-bump":
        # non-analytic at +-a1: integrate on the support only
        M = quad_block_1d(
            basis.Ny, basis.ly, model.y_profile, panels=basis.Qy,
            interval=(-model.a1, model.a1), check=check,
        )
    else:
        M = quad_block_1d(basis.Ny, basis.ly, model.y_profile, panels=basis.Qy, check=check)
    return phase_y_block(_even_part(M))  # both profiles are even in y


def _x_factor_field(src: LocalField, b: float, basis: BasisSpec, check: bool):
    g = src.geom
    g.check_b(b)
    L = window_half_width(basis.Nx, basis.lx)
    panels = basis.Qx
    if math.isfinite(g.gammaF):
        # panel width at most half a transition length
        panels = max(panels, int(math.ceil(2 * L * 2 * g.gammaF)))
    F = src.F

    def f(x):
        z = x + 1j * b if b else x
        return -F * z * tanh_plateau(x, b, g.gammaF, g.xbar)

    return quad_block_1d(basis.Nx, basis.lx, f, panels=panels, breaks=(-g.xbar, g.xbar), check=check)


def _y_factor_field(src: LocalField, basis: BasisSpec, check: bool):
    yb = src.geom.ybar
    if yb >= window_half_width(basis.Ny, basis.ly):
        # the cut lies where every basis function is below 1e-40
        return np.eye(basis.Ny)
    M = quad_block_1d(basis.Ny, basis.ly, np.ones_like, panels=basis.Qy, interval=(-yb, yb), check=check)
    return phase_y_block(_even_part(M))


def potential_block(source, b: float, basis: BasisSpec, *, check: bool = True) -> ComplexOperator:
    """Matrix of a separable multiplication operator in the phased basis.

    Parameters
    ----------
    source : PotentialModel or LocalField
        ``PotentialModel`` gives ``V(x + ib, y)``; ``LocalField`` gives
        ``-F (x + ib) h_F(x + ib) chi_A(y)``.
    b : float
        Imaginary translation.
    basis : BasisSpec
        Must have length scales and panel counts set (see ``for_field``).
    """
    basis = _resolved(basis)
    if isinstance(source, PotentialModel):
        if b >= source.beta:
            from .errors import DomainError

            raise DomainError(f"b={b} is not below beta={source.beta}")
        Mx = _x_factor_model(source, b, basis, check)
        My = _y_factor_model(source, basis, check)
        M = -source.V0 * np.kron(Mx, My)
        meta = {"source": "potential", "model_hash": source.model_hash(), "b": b}
    elif isinstance(source, LocalField):
        Mx = _x_factor_field(source, b, basis, check)
        My = _y_factor_field(source, basis, check)
        M = np.kron(Mx, My)
        meta = {"source": "local-field", "F": source.F, "b": b}
    else:
        raise TypeError(f"unsupported potential source {type(source).__name__}")
    return ComplexOperator(M, meta)


def separable_block(fx, fy, basis: BasisSpec, *, check: bool = True) -> np.ndarray:
    """Quadrature of ``fx(x) fy(y)`` in the phased basis (testing aid)."""
    basis = _resolved(basis)
    Mx = quad_block_1d(basis.Nx, basis.lx, fx, panels=basis.Qx, check=check)
    My = phase_y_block(quad_block_1d(basis.Ny, basis.ly, fy, panels=basis.Qy, check=check))
    return np.kron(Mx, My)


def _resolved(basis: BasisSpec) -> BasisSpec:
    if basis.lx is None or basis.ly is None or basis.Qx is None or basis.Qy is None:
        raise InvalidParameterError("basis length scales unset; call BasisSpec.for_field(B) first")
    return basis


# ---------------------------------------------------------------------------
# Hamiltonians


def _landau_dense(basis: BasisSpec, B: float) -> np.ndarray:
    lx = ladder_matrices(basis.Nx, basis.lx)
    ly = ladder_matrices(basis.Ny, basis.ly)
    Y = phase_y_block(ly["X"])
    Y2 = phase_y_block(ly["X2"])
    P2y = phase_y_block(ly["P2"])
    Ix, Iy = np.eye(basis.Nx), np.eye(basis.Ny)
    H = (
        np.kron(lx["P2"], Iy)
        + 2.0 * B * np.kron(lx["P"], Y)
        + B * B * np.kron(Ix, Y2)
        + np.kron(Ix, P2y)
    )
    H = np.real_if_close(H, tol=1)
    return 0.5 * (H + H.T)


def _meta(fields: FieldParams, model: PotentialModel | None, basis: BasisSpec, kind: str) -> dict:
    return {
        "kind": kind,
        "fields": fields,
        "model_hash": None if model is None else model.model_hash(),
        "basis": basis,
    }


def assemble_HL(basis: BasisSpec, B: float) -> ComplexOperator:
    """Landau Hamiltonian ``(p_x + B y)^2 + p_y^2``."""
    basis = basis.for_field(B)
    return ComplexOperator(_landau_dense(basis, B), _meta(FieldParams(B), None, basis, "H_L"))


def assemble_H(fields: FieldParams, model: PotentialModel, basis: BasisSpec, *, check: bool = True) -> ComplexOperator:
    """Translated Hamiltonian ``H_L - F x - iFb + V(x + ib, y)``."""
    fields.check_strip(model)
    basis = basis.for_field(fields.B)
    H = _landau_dense(basis, fields.B).astype(complex)
    if fields.F:
        X = ladder_matrices(basis.Nx, basis.lx)["X"]
        H -= fields.F * np.kron(X, np.eye(basis.Ny))
        H -= 1j * fields.F * fields.b * np.eye(basis.dim)
    if model.V0:
        H += potential_block(model, fields.b, basis, check=check).entries
    return ComplexOperator(H, _meta(fields, model, basis, "H"))


def assemble_H2(
    fields: FieldParams,
    model: PotentialModel,
    schedule: ScheduleParams | None,
    basis: BasisSpec,
    *,
    geometry: DerivedGeometry | None = None,
    check: bool = True,
) -> ComplexOperator:
    """Reference Hamiltonian ``H_L + V(x + ib, y) - F (x + ib) h_F(x + ib) chi_A(y)``.

    ``geometry`` overrides the schedule-derived cut points (for example to
    take the no-cutoff limit with infinite ``xbar`` and ``ybar``).
    """
    fields.check_strip(model)
    basis = basis.for_field(fields.B)
    H = _landau_dense(basis, fields.B).astype(complex)
    if model.V0:
        H += potential_block(model, fields.b, basis, check=check).entries
    if fields.F:
        geom = geometry if geometry is not None else schedule.geometry(fields.F, model.a1)
        geom.check_b(fields.b)
        H += potential_block(LocalField(fields.F, geom), fields.b, basis, check=check).entries
    return ComplexOperator(H, _meta(fields, model, basis, "H2"))
