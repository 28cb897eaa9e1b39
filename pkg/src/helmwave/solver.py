"""Explicit time marching of the characteristic system to steady state.

The scheme is upwind in the characteristic variables with neighbor values
reconstructed by exact steady-ODE transport (matrix exponential plus source
quadrature), which makes discrete steady states exact fixed points.  At the
boundary nodes only the outgoing components are updated by the scheme; the
incoming components are pinned to the boundary data after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from .errors import CflViolationError, InvalidParameterError
from .linalg import ExpmCache, QuadratureRule, expm, gauss_legendre
from .model import (
    DEFAULT_SPECTRAL,
    HelmholtzProblem,
    ModelMatrices,
    SpectralParams,
    build_model,
)

# Relative slack when checking CFL <= 1 and integer k*dx detection.
_CFL_SLACK = 1e-12
_INT_TOL = 1e-9

FastExpm = Literal["auto", "on", "off"]


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh on [0, 1] with nodes x_j = j/nx, j = 0..nx."""

    nx: int

    def __post_init__(self) -> None:
        if self.nx != int(self.nx) or self.nx < 2:
            raise InvalidParameterError(f"nx must be an integer >= 2, got {self.nx!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx + 1)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step time grid: nt steps of dt = t_final / nt."""

    t_final: float
    nt: int

    def __post_init__(self) -> None:
        if not (self.t_final > 0) or not math.isfinite(self.t_final):
            raise InvalidParameterError(f"t_final must be positive, got {self.t_final!r}")
        if self.nt != int(self.nt) or self.nt < 0:
            raise InvalidParameterError(f"nt must be a non-negative integer, got {self.nt!r}")

    @property
    def dt(self) -> float:
        if self.nt == 0:
            return 0.0
        return self.t_final / self.nt

    def cfl(self, mesh: Mesh, spectral: SpectralParams) -> float:
        return spectral.max_speed * self.dt / mesh.dx

    @classmethod
    def from_cfl(
        cls, t_final: float, mesh: Mesh, spectral: SpectralParams, cfl: float = 1.0
    ) -> "TimeGrid":
        """Largest step with the requested CFL number that lands exactly on
        t_final (nt rounded up, so the realized CFL never exceeds the request)."""
        if not (cfl > 0):
            raise InvalidParameterError(f"cfl must be positive, got {cfl!r}")
        dt_target = cfl * mesh.dx / spectral.max_speed
        nt = max(1, math.ceil(t_final / dt_target - 1e-9))
        return cls(t_final=t_final, nt=nt)


@dataclass
class RiemannField:
    """Nodal characteristic states at one time level; shape (nx+1, 4)."""

    values: np.ndarray
    time: float = 0.0

    def copy(self) -> "RiemannField":
        return RiemannField(self.values.copy(), self.time)


@dataclass
class RunDiagnostics:
    """Per-step convergence record of one run.

    ``residual_history[i]`` is the sup norm of (r^{i+1} - r^i)/dt, i.e. the
    discrete time derivative over step i; ``steady_step`` is the first step
    index whose residual fell below the steady tolerance, if any.
    """

    residual_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    steady_step: Optional[int] = None


def check_cfl(mesh: Mesh, dt: float, spectral: SpectralParams, allow_unstable: bool = False) -> float:
    """Validate the explicit stability bound; returns the CFL number."""
    cfl = spectral.max_speed * dt / mesh.dx
    if cfl > 1.0 + _CFL_SLACK and not allow_unstable:
        raise CflViolationError(
            f"CFL number {cfl:.6g} exceeds 1 (max speed {spectral.max_speed:g}, "
            f"dt {dt:g}, dx {mesh.dx:g}); reduce dt or pass allow_unstable=True"
        )
    return cfl


def initialize(
    mesh: Mesh,
    model: ModelMatrices,
    init: Optional[Callable[[float], np.ndarray]] = None,
) -> RiemannField:
    """Project an initial characteristic field onto the mesh and pin the
    incoming boundary components to the boundary data.

    ``init``, if given, maps x to a 4-vector in the r representation;
    omitted means identically zero.
    """
    n = mesh.nx + 1
    values = np.zeros((n, 4))
    if init is not None:
        for j, x in enumerate(mesh.nodes()):
            values[j] = np.asarray(init(x), dtype=float)
    values[0, 0] = model.G0[0]
    values[0, 1] = model.G0[1]
    values[-1, 2] = model.G1[2]
    values[-1, 3] = model.G1[3]
    return RiemannField(values=values, time=0.0)


@dataclass(frozen=True)
class _Propagators:
    """Per-run precomputed cell-transport operators and source integrals."""

    P_T: np.ndarray            # exp(M dx) transposed, applied as row @ P_T
    Pb_T: np.ndarray           # exp(-M dx) transposed
    src_fwd: Optional[np.ndarray]   # (nx, 4): source part of the rightward reconstruction
    src_bwd: Optional[np.ndarray]   # (nx, 4): source part of the leftward reconstruction
    fast_path: bool


def _build_propagators(
    model: ModelMatrices,
    mesh: Mesh,
    quad: Optional[QuadratureRule],
    fast_expm: FastExpm = "auto",
) -> _Propagators:
    dx = mesh.dx
    kdx = model.k * dx
    m = int(round(kdx))
    integer_step = m >= 1 and abs(kdx - m) <= _INT_TOL * max(1.0, kdx)
    if fast_expm not in ("auto", "on", "off"):
        raise InvalidParameterError(f"fast_expm must be 'auto', 'on' or 'off', got {fast_expm!r}")
    if fast_expm == "on" and not integer_step:
        raise InvalidParameterError(
            f"fast exponential path requires integer k*dx, got k*dx = {kdx!r}"
        )
    use_fast = integer_step and fast_expm != "off"
    if use_fast:
        unit = model.M_unit
        P = ExpmCache.from_generator(unit).power(m)
        Pb = ExpmCache.from_generator(-unit).power(m)
    else:
        P = expm(model.M * dx)
        Pb = expm(-model.M * dx)

    src_fwd = src_bwd = None
    if not model.source_free:
        quad = quad if quad is not None else gauss_legendre(4)
        xs = mesh.nodes()
        acc_f = np.zeros((mesh.nx, 4))
        acc_b = np.zeros((mesh.nx, 4))
        for u, w in zip(quad.nodes, quad.weights):
            Ef = expm(-model.M * (u * dx))
            Eb = expm(model.M * (u * dx))
            f_vals = np.array([model.steady_source(x + u * dx) for x in xs[:-1]])
            b_vals = np.array([model.steady_source(x - u * dx) for x in xs[1:]])
            acc_f += w * (f_vals @ Ef.T)
            acc_b += w * (b_vals @ Eb.T)
        src_fwd = (dx * acc_f) @ P.T
        src_bwd = -(dx * acc_b) @ Pb.T
    return _Propagators(
        P_T=np.ascontiguousarray(P.T),
        Pb_T=np.ascontiguousarray(Pb.T),
        src_fwd=src_fwd,
        src_bwd=src_bwd,
        fast_path=use_fast,
    )


def _advance(
    cur: np.ndarray,
    out: np.ndarray,
    props: _Propagators,
    c_plus: np.ndarray,
    c_minus: np.ndarray,
    g0: np.ndarray,
    g1: np.ndarray,
) -> None:
    """One scheme step: cur -> out.  c_plus = (dt/dx)(l1, l2, 0, 0) and
    c_minus = -(dt/dx)(0, 0, l3, l4) are both non-negative."""
    fwd = cur[:-1] @ props.P_T
    if props.src_fwd is not None:
        fwd += props.src_fwd
    bwd = cur[1:] @ props.Pb_T
    if props.src_bwd is not None:
        bwd += props.src_bwd
    np.copyto(out, cur)
    # Written as r + c*(reconstruction - r) so that a unit Courant number
    # hands the reconstructed value through exactly, without roundoff churn.
    out[1:] += c_plus * (fwd - cur[1:])
    out[:-1] += c_minus * (bwd - cur[:-1])
    out[0, 0] = g0[0]
    out[0, 1] = g0[1]
    out[-1, 2] = g1[2]
    out[-1, 3] = g1[3]


def _coefficients(model: ModelMatrices, mesh: Mesh, dt: float) -> tuple[np.ndarray, np.ndarray]:
    s = model.spectral
    ratio = dt / mesh.dx
    c_plus = ratio * np.array([s.lambda1, s.lambda2, 0.0, 0.0])
    c_minus = -ratio * np.array([0.0, 0.0, s.lambda3, s.lambda4])
    return c_plus, c_minus


def step(
    field: RiemannField,
    model: ModelMatrices,
    mesh: Mesh,
    dt: float,
    quad: Optional[QuadratureRule] = None,
    *,
    fast_expm: FastExpm = "auto",
    allow_unstable: bool = False,
) -> RiemannField:
    """Apply one explicit step and return the new field.

    Interior nodes get the full 4-component upwind update; at j = 0 only the
    outgoing components (3, 4) are advanced and at j = nx only (1, 2), the
    rest being pinned to the boundary data.
    """
    if field.values.shape != (mesh.nx + 1, 4):
        raise InvalidParameterError(
            f"field shape {field.values.shape} does not match mesh with nx={mesh.nx}"
        )
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    check_cfl(mesh, dt, model.spectral, allow_unstable)
    props = _build_propagators(model, mesh, quad, fast_expm)
    c_plus, c_minus = _coefficients(model, mesh, dt)
    out = np.empty_like(field.values)
    _advance(field.values, out, props, c_plus, c_minus, model.G0, model.G1)
    return RiemannField(values=out, time=field.time + dt)


def residual(prev: RiemannField, nxt: RiemannField, dt: float) -> float:
    """Sup norm of the discrete time derivative between two fields."""
    if prev.values.shape != nxt.values.shape:
        raise InvalidParameterError(
            f"mesh mismatch: {prev.values.shape} vs {nxt.values.shape}"
        )
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    return float(np.max(np.abs(nxt.values - prev.values)) / dt)


def run(
    problem: HelmholtzProblem,
    spectral: SpectralParams = DEFAULT_SPECTRAL,
    mesh: Mesh = Mesh(10),
    timegrid: TimeGrid = TimeGrid(2.0, 20),
    init: Optional[Callable[[float], np.ndarray]] = None,
    *,
    quadrature_order: int = 4,
    fast_expm: FastExpm = "auto",
    early_stop: bool = False,
    steady_tol: float = 1e-12,
    allow_unstable: bool = False,
) -> tuple[RiemannField, RunDiagnostics]:
    """March the characteristic system from ``init`` for ``timegrid.nt`` steps.

    Stops early once the residual drops below ``steady_tol`` if requested;
    by default the full step count is executed.  Returns the final field and
    the per-step residual diagnostics.
    """
    model = build_model(problem, spectral)
    field = initialize(mesh, model, init)
    if timegrid.nt == 0:
        return field, RunDiagnostics()
    dt = timegrid.dt
    check_cfl(mesh, dt, spectral, allow_unstable)
    quad = gauss_legendre(quadrature_order) if not model.source_free else None
    props = _build_propagators(model, mesh, quad, fast_expm)
    c_plus, c_minus = _coefficients(model, mesh, dt)

    cur = field.values
    out = np.empty_like(cur)
    history = np.empty(timegrid.nt)
    steady_step: Optional[int] = None
    steps_done = 0
    for n in range(timegrid.nt):
        _advance(cur, out, props, c_plus, c_minus, model.G0, model.G1)
        history[n] = np.max(np.abs(out - cur)) / dt
        cur, out = out, cur
        steps_done = n + 1
        if steady_step is None and history[n] < steady_tol:
            steady_step = n
            if early_stop:
                break
    final = RiemannField(values=cur, time=steps_done * dt)
    return final, RunDiagnostics(residual_history=history[:steps_done], steady_step=steady_step)
