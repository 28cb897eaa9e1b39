"""Manufactured solutions, error norms, and the accuracy sweep harnesses.

The built-in reference case is the plane wave u(x) = sin(kx) + i 2 cos(kx),
which has zero Helmholtz source, so the well-balanced scheme should hold its
projection fixed to rounding accuracy.  Two sweeps regenerate the standard
accuracy tables: fixed mesh with growing wavenumber, and mesh refinement at
fixed k*dx.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, TextIO

import numpy as np

from .errors import InvalidParameterError
from .linalg import ExpmCache, expm, gauss_legendre, propagate_backward, propagate_forward
from .model import (
    DEFAULT_SPECTRAL,
    HelmholtzProblem,
    ModelMatrices,
    SpectralParams,
    StateVec,
    build_boundary_matrices,
    build_model,
    from_riemann,
    to_riemann,
)
from .solver import Mesh, RiemannField, RunDiagnostics, TimeGrid, initialize, run

GROUP_LABELS = ("u", "v")  # (u_R, u_I) and (v_R, v_I) = (u_R', u_I')
_GROUP_COMPONENTS = {"u": (0, 1), "v": (2, 3)}


@dataclass(frozen=True)
class ManufacturedCase:
    """An exact solution together with the problem data it induces."""

    k: float
    problem: HelmholtzProblem
    q_exact: Callable[[np.ndarray], np.ndarray]


def plane_wave_case(k: float) -> ManufacturedCase:
    """Plane-wave reference case u = sin(kx) + i 2 cos(kx), f = 0.

    Boundary data is obtained by applying the boundary operators to the
    exact state, so the case is consistent by construction.
    """

    def q_exact(x):
        x = np.asarray(x, dtype=float)
        return np.stack(
            [
                np.sin(k * x),
                2.0 * np.cos(k * x),
                k * np.cos(k * x),
                -2.0 * k * np.sin(k * x),
            ],
            axis=-1,
        )

    B0, B1 = build_boundary_matrices(k)
    g0 = B0 @ q_exact(0.0)
    g1 = B1 @ q_exact(1.0)
    problem = HelmholtzProblem(k=k, g0R=g0[0], g0I=g0[1], g1R=g1[2], g1I=g1[3])
    return ManufacturedCase(k=float(k), problem=problem, q_exact=q_exact)


def exact_riemann_init(case: ManufacturedCase, model: ModelMatrices) -> Callable[[float], np.ndarray]:
    """Initial-condition callable projecting the exact solution into r variables."""
    return lambda x: model.L @ case.q_exact(x)


@dataclass(frozen=True)
class GroupNorms:
    """Error norms for one component pair; relative norms are None when the
    exact field vanishes identically in a component."""

    l2_rel: Optional[float]
    linf_rel: Optional[float]
    l2_abs: float
    linf_abs: float


@dataclass(frozen=True)
class ErrorReport:
    """Norms grouped as the solution pair (u) and the derivative pair (v)."""

    u: GroupNorms
    v: GroupNorms

    def group(self, label: str) -> GroupNorms:
        if label not in _GROUP_COMPONENTS:
            raise InvalidParameterError(f"unknown component group {label!r}")
        return self.u if label == "u" else self.v


def _group_norms(err: np.ndarray, exact: np.ndarray, comps: tuple[int, int]) -> GroupNorms:
    # Unnormalized discrete norms over nodes: l2 = sqrt(sum e^2), linf = max|e|.
    l2_abs = linf_abs = 0.0
    l2_rel: Optional[float] = 0.0
    linf_rel: Optional[float] = 0.0
    for c in comps:
        e = err[:, c]
        ex = exact[:, c]
        l2_c = math.sqrt(float(np.dot(e, e)))
        linf_c = float(np.max(np.abs(e)))
        l2_abs = max(l2_abs, l2_c)
        linf_abs = max(linf_abs, linf_c)
        l2_ex = math.sqrt(float(np.dot(ex, ex)))
        linf_ex = float(np.max(np.abs(ex)))
        if l2_ex == 0.0 or linf_ex == 0.0:
            l2_rel = linf_rel = None
        else:
            if l2_rel is not None:
                l2_rel = max(l2_rel, l2_c / l2_ex)
            if linf_rel is not None:
                linf_rel = max(linf_rel, linf_c / linf_ex)
    return GroupNorms(l2_rel=l2_rel, linf_rel=linf_rel, l2_abs=l2_abs, linf_abs=linf_abs)


def error_report(
    field: RiemannField,
    case: ManufacturedCase,
    model: ModelMatrices,
    mesh: Mesh,
) -> ErrorReport:
    """Compare a numerical field against the exact solution, per component
    group, in the four norm variants."""
    xs = mesh.nodes()
    q_num = model.r_to_q(field.values)
    q_ex = case.q_exact(xs)
    err = q_ex - q_num
    return ErrorReport(
        u=_group_norms(err, q_ex, _GROUP_COMPONENTS["u"]),
        v=_group_norms(err, q_ex, _GROUP_COMPONENTS["v"]),
    )


@dataclass(frozen=True)
class SweepEntry:
    """One sweep row: the varied parameter and the resulting error report."""

    parameter: float
    report: ErrorReport
    nx: int
    nt: int
    steady_step: Optional[int] = None


def solve_case(
    case: ManufacturedCase,
    mesh: Mesh,
    timegrid: TimeGrid,
    spectral: SpectralParams = DEFAULT_SPECTRAL,
    **options,
) -> tuple[ModelMatrices, RiemannField, RunDiagnostics, ErrorReport]:
    """Zero-initialized run of a manufactured case plus its error report."""
    model = build_model(case.problem, spectral)
    field, diag = run(case.problem, spectral, mesh, timegrid, init=None, **options)
    report = error_report(field, case, model, mesh)
    return model, field, diag, report


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("HELMWAVE_THREADS")
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError as exc:
            raise InvalidParameterError(f"HELMWAVE_THREADS must be an integer, got {cap!r}") from exc
        if cap_val < 1:
            raise InvalidParameterError(f"HELMWAVE_THREADS must be >= 1, got {cap_val}")
        return min(n_jobs, cap_val)
    return min(n_jobs, os.cpu_count() or 1)


def _map_ordered(fn, items: Sequence) -> list:
    workers = _worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep_wavenumber(
    ks: Sequence[float],
    nx: int = 10,
    nt: int = 20,
    t_final: float = 2.0,
    spectral: SpectralParams = DEFAULT_SPECTRAL,
    **options,
) -> list[SweepEntry]:
    """Fixed mesh, growing wavenumber: one solve and report per k."""
    if len(ks) == 0:
        raise InvalidParameterError("ks must be non-empty")
    mesh = Mesh(nx)
    timegrid = TimeGrid(t_final, nt)

    def one(k: float) -> SweepEntry:
        case = plane_wave_case(k)
        _, _, diag, report = solve_case(case, mesh, timegrid, spectral, **options)
        return SweepEntry(
            parameter=float(k), report=report, nx=nx, nt=nt, steady_step=diag.steady_step
        )

    return _map_ordered(one, list(ks))


def sweep_refinement(
    k_dx: float,
    dxs: Sequence[float],
    t_final: float = 2.0,
    spectral: SpectralParams = DEFAULT_SPECTRAL,
    **options,
) -> list[SweepEntry]:
    """Mesh refinement at fixed k*dx; the step count keeps dt = dx/max_speed
    (unit CFL) and lands exactly on t_final."""
    if not (k_dx > 0):
        raise InvalidParameterError(f"k_dx must be positive, got {k_dx!r}")
    if len(dxs) == 0:
        raise InvalidParameterError("dxs must be non-empty")

    def one(dx: float) -> SweepEntry:
        nx = round(1.0 / dx)
        if nx < 2 or abs(nx * dx - 1.0) > 1e-9:
            raise InvalidParameterError(f"dx must divide the unit interval, got {dx!r}")
        mesh = Mesh(nx)
        k = k_dx / dx
        case = plane_wave_case(k)
        timegrid = TimeGrid.from_cfl(t_final, mesh, spectral, cfl=1.0)
        _, _, diag, report = solve_case(case, mesh, timegrid, spectral, **options)
        return SweepEntry(
            parameter=float(dx),
            report=report,
            nx=nx,
            nt=timegrid.nt,
            steady_step=diag.steady_step,
        )

    return _map_ordered(one, list(dxs))


# --- table emission ---------------------------------------------------------

TABLE_FIELDS = ("parameter", "group", "l2_rel", "linf_rel", "l2_abs", "linf_abs")


def table_rows(entries: Iterable[SweepEntry]) -> list[dict]:
    """Flatten sweep entries to one dict per (parameter, group)."""
    rows = []
    for entry in entries:
        for label in GROUP_LABELS:
            g = entry.report.group(label)
            rows.append(
                {
                    "parameter": entry.parameter,
                    "group": label,
                    "l2_rel": g.l2_rel,
                    "linf_rel": g.linf_rel,
                    "l2_abs": g.l2_abs,
                    "linf_abs": g.linf_abs,
                }
            )
    return rows


def format_float(x: Optional[float]) -> str:
    """Full double-precision scientific notation; blank-less and locale-free."""
    if x is None:
        return "nan"
    return format(float(x), ".17e")


def write_table_csv(rows: Iterable[dict], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE_FIELDS)
    for row in rows:
        writer.writerow([format_float(row["parameter"]), row["group"]]
                        + [format_float(row[f]) for f in TABLE_FIELDS[2:]])


# --- self checks (the `verify` command) --------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _taylor_expm(X: np.ndarray, terms: int = 60) -> np.ndarray:
    out = np.eye(X.shape[0])
    term = np.eye(X.shape[0])
    for n in range(1, terms + 1):
        term = term @ X / n
        out = out + term
    return out


def _rel_err(got: np.ndarray, want: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(want))), 1e-300)
    return float(np.max(np.abs(got - want))) / scale


_CHECK_SPECTRAL_SETS = (SpectralParams(1, 1, -1, -1), SpectralParams(2, 1, -1, -3))


def _check_matrix_identities() -> CheckResult:
    worst = 0.0
    for spectral in _CHECK_SPECTRAL_SETS:
        for k in (1.0, 10.0, 1e3, 1e5):
            model = build_model(HelmholtzProblem(k=k), spectral)
            lam_prod = float(np.prod(spectral.as_array()))
            worst = max(
                worst,
                _rel_err(model.L @ model.Linv, np.eye(4)),
                _rel_err(model.A, model.Linv @ model.Lam @ model.L),
                _rel_err(model.B, model.Linv @ model.Br @ model.L),
                _rel_err(model.M, model.L @ model.Bq @ model.Linv),
                _rel_err(model.M, np.linalg.solve(model.Lam, model.Br)),
                abs(float(np.linalg.det(model.A)) - lam_prod) / abs(lam_prod),
            )
    return CheckResult("matrix-identities", worst <= 1e-12, f"worst relative defect {worst:.3e}")


def _check_source_identities() -> CheckResult:
    fR = lambda x: math.sin(3.0 * x) + 0.5
    fI = lambda x: math.cos(2.0 * x) - 1.7
    worst = 0.0
    for spectral in _CHECK_SPECTRAL_SETS:
        for k in (1.0, 10.0, 1e3):
            model = build_model(HelmholtzProblem(k=k, f_R=fR, f_I=fI), spectral)
            for x in np.linspace(0.0, 1.0, 11):
                worst = max(
                    worst,
                    _rel_err(model.F(x), model.Linv @ model.Fr(x)),
                    _rel_err(model.steady_source(x), model.L @ model.Fq(x)),
                )
    return CheckResult("source-identities", worst <= 1e-12, f"worst relative defect {worst:.3e}")


def _check_round_trip() -> CheckResult:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in (1.0, 10.0, 1e3):
        model = build_model(HelmholtzProblem(k=k), DEFAULT_SPECTRAL)
        for _ in range(200):
            q = StateVec.physical(rng.uniform(-1.0, 1.0, 4))
            back = from_riemann(to_riemann(q, model), model)
            worst = max(worst, float(np.max(np.abs(back.values - q.values))))
    return CheckResult("state-round-trip", worst <= 1e-13, f"worst round-trip error {worst:.3e}")


def _check_steady_equivalence() -> CheckResult:
    # A q' - B q - F must vanish on the exact solution; analytic derivative.
    worst = 0.0
    for k in (1.0, 10.0, 1e3):
        case = plane_wave_case(k)
        model = build_model(case.problem, DEFAULT_SPECTRAL)

        def q_prime(x):
            return np.array(
                [
                    k * math.cos(k * x),
                    -2.0 * k * math.sin(k * x),
                    -k * k * math.sin(k * x),
                    -2.0 * k * k * math.cos(k * x),
                ]
            )

        for x in np.linspace(0.0, 1.0, 50):
            resid = model.A @ q_prime(x) - model.B @ case.q_exact(x) - model.F(x)
            worst = max(worst, float(np.max(np.abs(resid))) / k)
    return CheckResult("steady-equivalence", worst <= 1e-9, f"worst residual/k {worst:.3e}")


def _check_expm_oracle() -> CheckResult:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        X = rng.standard_normal((4, 4))
        X *= rng.uniform(0.1, 5.0) / np.linalg.norm(X, 2)
        worst = max(worst, _rel_err(expm(X), _taylor_expm(X)))
    return CheckResult("expm-taylor-oracle", worst <= 1e-12, f"worst relative error {worst:.3e}")


def _check_expm_fast() -> CheckResult:
    model = build_model(HelmholtzProblem(k=10.0), DEFAULT_SPECTRAL)
    unit = model.M_unit
    cache = ExpmCache.from_generator(unit)
    worst = 0.0
    for m in (2, 10, 100):
        worst = max(worst, _rel_err(cache.power(m), expm(m * unit, max_scaled_norm=1 / 16)))
    return CheckResult("expm-fast-path", worst <= 1e-11, f"worst relative error {worst:.3e}")


def _check_quadrature() -> CheckResult:
    worst = 0.0
    for order in range(1, 17):
        rule = gauss_legendre(order)
        worst = max(worst, abs(float(np.sum(rule.weights)) - 1.0))
        # Highest exactly-integrated monomial: degree 2*order - 1.
        deg = 2 * order - 1
        approx = float(np.sum(rule.weights * rule.nodes**deg))
        worst = max(worst, abs(approx - 1.0 / (deg + 1)))
    return CheckResult("gauss-legendre", worst <= 1e-12, f"worst quadrature defect {worst:.3e}")


def _check_propagators() -> CheckResult:
    case = plane_wave_case(10.0)
    model = build_model(case.problem, DEFAULT_SPECTRAL)
    mesh = Mesh(10)
    xs = mesh.nodes()
    r = case.q_exact(xs) @ model.L.T
    worst = 0.0
    for j in range(mesh.nx):
        got = propagate_forward(r[j], xs[j], mesh.dx, model)
        worst = max(worst, float(np.max(np.abs(got - r[j + 1]))) / float(np.max(np.abs(r))))
        got = propagate_backward(r[j + 1], xs[j + 1], mesh.dx, model)
        worst = max(worst, float(np.max(np.abs(got - r[j]))) / float(np.max(np.abs(r))))
    return CheckResult("steady-propagators", worst <= 1e-11, f"worst relative defect {worst:.3e}")


def _check_well_balanced() -> CheckResult:
    worst = 0.0
    for k in (10.0, 100.0, 1000.0):
        case = plane_wave_case(k)
        model = build_model(case.problem, DEFAULT_SPECTRAL)
        mesh = Mesh(10)
        timegrid = TimeGrid(5.0, 50)  # 50 steps at unit CFL
        field, _ = run(case.problem, DEFAULT_SPECTRAL, mesh, timegrid,
                       init=exact_riemann_init(case, model))
        start = initialize(mesh, model, exact_riemann_init(case, model))
        drift = float(np.max(np.abs(field.values - start.values)))
        worst = max(worst, drift / float(np.max(np.abs(start.values))))
    return CheckResult("well-balanced-drift", worst <= 1e-11, f"worst relative drift {worst:.3e}")


def _check_finite_time() -> CheckResult:
    case = plane_wave_case(10.0)
    mesh = Mesh(50)
    timegrid = TimeGrid(2.2, 110)
    _, diag = run(case.problem, DEFAULT_SPECTRAL, mesh, timegrid)
    dt = timegrid.dt
    times = (np.arange(timegrid.nt) + 1) * dt
    late = diag.residual_history[times >= 2.0 + 2 * dt]
    mid = diag.residual_history[np.argmin(np.abs(times - 1.0))]
    ok = late.size > 0 and float(late.max()) < 1e-12 and float(mid) > 1e-6
    return CheckResult(
        "finite-time-steady-state",
        ok,
        f"max residual after settle {float(late.max()):.3e}, residual at t=1 {float(mid):.3e}",
    )


def run_self_checks() -> list[CheckResult]:
    """Invariant suites behind the `verify` command; all must pass."""
    return [
        _check_matrix_identities(),
        _check_source_identities(),
        _check_round_trip(),
        _check_steady_equivalence(),
        _check_expm_oracle(),
        _check_expm_fast(),
        _check_quadrature(),
        _check_propagators(),
        _check_well_balanced(),
        _check_finite_time(),
    ]
