"""Continuous-model assembly for the hyperbolic reformulation of the 1-D
Helmholtz impedance problem.

The second-order problem

    u'' + k^2 u = f           on (0, 1),
    u'(0) + i k u(0) = g0,    u'(1) - i k u(1) = g1,

is split into real and imaginary parts and recast as a 4-component linear
hyperbolic system whose steady state coincides with the Helmholtz solution.
The unknown ordering is q = (u_R, u_I, v_R, v_I) with v = du/dx.  In the
characteristic (Riemann) variables r = L q the advection matrix is diagonal
with speeds lambda_1..lambda_4.

Everything here is real-valued: complex numbers never appear, the split is
carried through all matrices and source vectors.  All matrices are dense
4x4 float64 arrays, frozen read-only after construction so model objects
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .errors import InvalidParameterError, RepresentationError

# Plain ndarray aliases; shapes are (4, 4) and (4,).
Mat4 = np.ndarray
Vec4 = np.ndarray

SourceFn = Callable[[float], float]


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


def _validate_wavenumber(k: float) -> float:
    k = float(k)
    if not np.isfinite(k) or k <= 0.0:
        raise InvalidParameterError(f"wavenumber k must be positive and finite, got {k!r}")
    return k


@dataclass(frozen=True)
class HelmholtzProblem:
    """Problem data: wavenumber, split source, split boundary values.

    ``f_R``/``f_I`` are real-valued callables on [0, 1]; ``None`` means the
    component is identically zero (lets the solver skip source quadrature).
    """

    k: float
    f_R: Optional[SourceFn] = None
    f_I: Optional[SourceFn] = None
    g0R: float = 0.0
    g0I: float = 0.0
    g1R: float = 0.0
    g1I: float = 0.0

    def __post_init__(self) -> None:
        _validate_wavenumber(self.k)
        for name in ("f_R", "f_I"):
            f = getattr(self, name)
            if f is not None and not callable(f):
                raise InvalidParameterError(f"{name} must be callable or None")

    @property
    def source_free(self) -> bool:
        return self.f_R is None and self.f_I is None


@dataclass(frozen=True)
class SpectralParams:
    """Characteristic speeds of the relaxation system.

    Signs are fixed: the first two speeds move information rightward, the
    last two leftward.  Steady state is reached in *finite* time
    (t > 1/|lambda3| + 1/lambda1) exactly when the speeds are pairwise
    equal, which ``finite_time_eligible`` reports.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = -1.0
    lambda4: float = -1.0

    def __post_init__(self) -> None:
        lams = (self.lambda1, self.lambda2, self.lambda3, self.lambda4)
        if not all(np.isfinite(lams)):
            raise InvalidParameterError(f"characteristic speeds must be finite, got {lams}")
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise InvalidParameterError(
                f"lambda1, lambda2 must be > 0, got {self.lambda1}, {self.lambda2}"
            )
        if self.lambda3 >= 0 or self.lambda4 >= 0:
            raise InvalidParameterError(
                f"lambda3, lambda4 must be < 0, got {self.lambda3}, {self.lambda4}"
            )

    @property
    def finite_time_eligible(self) -> bool:
        return self.lambda1 == self.lambda2 and self.lambda3 == self.lambda4

    @property
    def max_speed(self) -> float:
        return max(self.lambda1, self.lambda2, abs(self.lambda3), abs(self.lambda4))

    def as_array(self) -> Vec4:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4])


DEFAULT_SPECTRAL = SpectralParams(1.0, 1.0, -1.0, -1.0)


@dataclass(frozen=True)
class StateVec:
    """A 4-state at one point, tagged with its representation.

    ``rep == "q"`` means physical variables (u_R, u_I, v_R, v_I);
    ``rep == "r"`` means characteristic variables.  The tag is enforced by
    the conversion routines, never guessed.
    """

    rep: Literal["q", "r"]
    values: Vec4

    def __post_init__(self) -> None:
        if self.rep not in ("q", "r"):
            raise RepresentationError(f"unknown representation {self.rep!r}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (4,):
            raise InvalidParameterError(f"state must have 4 components, got shape {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def physical(cls, values) -> "StateVec":
        return cls("q", np.asarray(values, dtype=float))

    @classmethod
    def riemann(cls, values) -> "StateVec":
        return cls("r", np.asarray(values, dtype=float))


def build_boundary_matrices(k: float) -> tuple[Mat4, Mat4]:
    """Boundary operators B0 (left end) and B1 (right end).

    The impedance conditions read B0 q(0) = G0 and B1 q(1) = G1; only the
    first two rows of B0 and the last two rows of B1 are populated.
    """
    k = _validate_wavenumber(k)
    B0 = np.array(
        [
            [k, 0.0, 1.0, 0.0],
            [0.0, k, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )
    B1 = np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, k, 1.0, 0.0],
            [-k, 0.0, 0.0, 1.0],
        ]
    )
    return _frozen(B0), _frozen(B1)


def build_first_order_form(
    k: float,
    f_R: Optional[SourceFn] = None,
    f_I: Optional[SourceFn] = None,
) -> tuple[Mat4, Callable[[float], Vec4]]:
    """First-order form of the steady problem: dq/dx = Bq q + Fq(x)."""
    k = _validate_wavenumber(k)
    k2 = k * k
    Bq = np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-k2, 0.0, 0.0, 0.0],
            [0.0, -k2, 0.0, 0.0],
        ]
    )
    fR = f_R if f_R is not None else (lambda x: 0.0)
    fI = f_I if f_I is not None else (lambda x: 0.0)

    def Fq(x: float) -> Vec4:
        return np.array([0.0, 0.0, fR(x), fI(x)])

    return _frozen(Bq), Fq


def build_hyperbolic_matrices(spectral: SpectralParams, k: float) -> tuple[Mat4, Mat4]:
    """Advection matrix A and zeroth-order matrix B of the relaxation system.

    The system is dQ/dt + A dQ/dx = B Q + F.  Both matrices must satisfy
    A = L^-1 Lam L and B = A Bq, otherwise the steady state would not solve
    the Helmholtz problem; the entry B[2, 3] is (lambda3 - lambda2) k / 2,
    which is what those identities force.
    """
    if not isinstance(spectral, SpectralParams):
        spectral = SpectralParams(*spectral)
    k = _validate_wavenumber(k)
    l1, l2, l3, l4 = spectral.lambda1, spectral.lambda2, spectral.lambda3, spectral.lambda4
    A = 0.5 * np.array(
        [
            [l1 + l4, l2 - l3, (l1 - l3) / k, (l2 - l4) / k],
            [l4 - l1, l2 + l3, (l3 - l1) / k, (l2 - l4) / k],
            [(l1 - l4) * k, (l3 - l2) * k, l1 + l3, l4 - l2],
            [(l1 - l4) * k, (l2 - l3) * k, l1 - l3, l4 + l2],
        ]
    )
    k2 = k * k
    B = 0.5 * np.array(
        [
            [(l3 - l1) * k, (l4 - l2) * k, l1 + l4, l2 - l3],
            [(l1 - l3) * k, (l4 - l2) * k, l4 - l1, l2 + l3],
            [-(l1 + l3) * k2, (l2 - l4) * k2, (l1 - l4) * k, (l3 - l2) * k],
            [(l3 - l1) * k2, -(l2 + l4) * k2, (l1 - l4) * k, (l2 - l3) * k],
        ]
    )
    return _frozen(A), _frozen(B)


def build_riemann_system(
    spectral: SpectralParams,
    k: float,
    f_R: Optional[SourceFn] = None,
    f_I: Optional[SourceFn] = None,
) -> tuple[Mat4, Mat4, Callable[[float], Vec4], Mat4]:
    """Characteristic form: dr/dt + Lam dr/dx = Br r + Fr(x).

    Returns (Lam, Br, Fr, M) where M = Lam^-1 Br is the generator of the
    steady ODE dr/dx = M r + Lam^-1 Fr(x).  M also equals L Bq L^-1, so it
    is independent of the characteristic speeds.
    """
    if not isinstance(spectral, SpectralParams):
        spectral = SpectralParams(*spectral)
    k = _validate_wavenumber(k)
    l1, l2, l3, l4 = spectral.lambda1, spectral.lambda2, spectral.lambda3, spectral.lambda4
    lam = spectral.as_array()
    Lam = np.diag(lam)
    Br = k * np.array(
        [
            [0.0, -l1, l1, l1],
            [l2, 0.0, -l2, l2],
            [0.0, 0.0, 0.0, l3],
            [0.0, 0.0, -l4, 0.0],
        ]
    )
    M = Br / lam[:, None]
    fR = f_R if f_R is not None else (lambda x: 0.0)
    fI = f_I if f_I is not None else (lambda x: 0.0)

    def Fr(x: float) -> Vec4:
        fr, fi = fR(x), fI(x)
        return np.array([l1 * fr, l2 * fi, l3 * fr, l4 * fi])

    return _frozen(Lam), _frozen(Br), Fr, _frozen(M)


def _forcing_closure(
    spectral: SpectralParams, k: float, fR: SourceFn, fI: SourceFn
) -> Callable[[float], Vec4]:
    l1, l2, l3, l4 = spectral.lambda1, spectral.lambda2, spectral.lambda3, spectral.lambda4

    def F(x: float) -> Vec4:
        fr, fi = fR(x), fI(x)
        return 0.5 * np.array(
            [
                (fi * (l2 - l4) + fr * (l1 - l3)) / k,
                (fi * (l2 - l4) + fr * (l3 - l1)) / k,
                fi * (l4 - l2) + fr * (l1 + l3),
                fi * (l2 + l4) + fr * (l1 - l3),
            ]
        )

    return F


@dataclass(frozen=True)
class ModelMatrices:
    """Every matrix and source closure of the continuous models, prebuilt.

    Immutable after construction; safe to share across threads.
    """

    problem: HelmholtzProblem
    spectral: SpectralParams
    A: Mat4
    B: Mat4
    B0: Mat4
    B1: Mat4
    L: Mat4
    Linv: Mat4
    Lam: Mat4
    Bq: Mat4
    Br: Mat4
    M: Mat4
    G0: Vec4
    G1: Vec4
    F: Callable[[float], Vec4]
    Fq: Callable[[float], Vec4]
    Fr: Callable[[float], Vec4]

    @property
    def k(self) -> float:
        return self.problem.k

    @property
    def source_free(self) -> bool:
        return self.problem.source_free

    @property
    def M_unit(self) -> Mat4:
        """Generator scaled so that M dx = M_unit * (k dx); used by the
        integer-step fast exponential path."""
        return _frozen(self.M / self.k)

    def steady_source(self, x: float) -> Vec4:
        """Inhomogeneity Lam^-1 Fr(x) of the steady ODE in r variables."""
        return self.Fr(x) / self.spectral.as_array()

    def q_to_r(self, values: np.ndarray) -> np.ndarray:
        """Apply r = L q along the last axis of an (..., 4) array."""
        return np.asarray(values, dtype=float) @ self.L.T

    def r_to_q(self, values: np.ndarray) -> np.ndarray:
        """Apply q = L^-1 r along the last axis of an (..., 4) array."""
        return np.asarray(values, dtype=float) @ self.Linv.T


def build_model(problem: HelmholtzProblem, spectral: SpectralParams = DEFAULT_SPECTRAL) -> ModelMatrices:
    """Assemble all model matrices for one (problem, speeds) configuration."""
    if not isinstance(problem, HelmholtzProblem):
        raise InvalidParameterError("problem must be a HelmholtzProblem")
    if not isinstance(spectral, SpectralParams):
        spectral = SpectralParams(*spectral)
    k = problem.k
    B0, B1 = build_boundary_matrices(k)
    A, B = build_hyperbolic_matrices(spectral, k)
    Bq, Fq = build_first_order_form(k, problem.f_R, problem.f_I)
    Lam, Br, Fr, M = build_riemann_system(spectral, k, problem.f_R, problem.f_I)
    L = B0 + B1
    # 4x4 LU with partial pivoting; L is well conditioned for every k > 0.
    Linv = np.linalg.inv(L)
    fR = problem.f_R if problem.f_R is not None else (lambda x: 0.0)
    fI = problem.f_I if problem.f_I is not None else (lambda x: 0.0)
    return ModelMatrices(
        problem=problem,
        spectral=spectral,
        A=A,
        B=B,
        B0=B0,
        B1=B1,
        L=_frozen(L),
        Linv=_frozen(Linv),
        Lam=Lam,
        Bq=Bq,
        Br=Br,
        M=M,
        G0=_frozen([problem.g0R, problem.g0I, 0.0, 0.0]),
        G1=_frozen([0.0, 0.0, problem.g1R, problem.g1I]),
        F=_forcing_closure(spectral, k, fR, fI),
        Fq=Fq,
        Fr=Fr,
    )


def to_riemann(state: StateVec, model: ModelMatrices) -> StateVec:
    """Convert a physical state q into characteristic variables r = L q."""
    if state.rep != "q":
        raise RepresentationError("to_riemann expects a state in the q representation")
    return StateVec("r", model.L @ state.values)


def from_riemann(state: StateVec, model: ModelMatrices) -> StateVec:
    """Convert characteristic variables back: q = L^-1 r."""
    if state.rep != "r":
        raise RepresentationError("from_riemann expects a state in the r representation")
    return StateVec("q", model.Linv @ state.values)
