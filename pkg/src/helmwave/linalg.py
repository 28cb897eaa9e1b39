"""Dense 4x4 numerical kernels.

Matrix exponential via Pade-13 scaling-and-squaring, an integer-power cache
that turns exp(M dx) for k dx = m into m multiplications of one precomputed
unit-step exponential, Gauss-Legendre quadrature on [0, 1], and the exact
steady-ODE propagators used by the well-balanced reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

# Diagonal Pade-13 numerator/denominator coefficients.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def expm(x: np.ndarray, max_scaled_norm: float = 0.5) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Pade-13 approximant.

    The input is halved until its 1-norm is at most ``max_scaled_norm``
    (default 0.5, far inside the Pade-13 accuracy region, so the approximant
    error is negligible against roundoff), then squared back up.  Passing a
    smaller ``max_scaled_norm`` buys extra squarings; useful as an
    independent higher-effort reference.
    """
    X = np.asarray(x, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidParameterError(f"expm expects a square matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise InvalidParameterError("expm input has non-finite entries")
    if not (0.0 < max_scaled_norm <= 1.0):
        raise InvalidParameterError("max_scaled_norm must lie in (0, 1]")
    norm = np.linalg.norm(X, 1)
    squarings = 0
    if norm > max_scaled_norm:
        squarings = int(np.ceil(np.log2(norm / max_scaled_norm)))
    A = X / (2.0**squarings)

    n = A.shape[0]
    ident = np.eye(n)
    b = _PADE13
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6
        + b[5] * A4
        + b[3] * A2
        + b[1] * ident
    )
    V = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6
        + b[4] * A4
        + b[2] * A2
        + b[0] * ident
    )
    R = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        R = R @ R
    return R


class ExpmCache:
    """Integer powers of one precomputed unit-step exponential.

    ``base`` is exp(M_unit) for the unit step k dx = 1; ``power(m)`` returns
    base**m == exp(m * M_unit), filling the table consecutively so cached
    entries always satisfy powers[m] = powers[m-1] @ base.
    """

    def __init__(self, base: np.ndarray):
        base = np.asarray(base, dtype=float)
        if base.shape != (4, 4):
            raise InvalidParameterError(f"cache base must be 4x4, got shape {base.shape}")
        self.base = base
        self.powers: dict[int, np.ndarray] = {1: base}
        self._top = 1

    @classmethod
    def from_generator(cls, m_unit: np.ndarray) -> "ExpmCache":
        return cls(expm(m_unit))

    def power(self, m: int) -> np.ndarray:
        if m != int(m) or m < 1:
            raise InvalidParameterError(f"power index must be a positive integer, got {m!r}")
        m = int(m)
        if m <= self._top:
            return self.powers[m]
        cur = self.powers[self._top]
        for j in range(self._top + 1, m + 1):
            cur = cur @ self.base
            self.powers[j] = cur
        self._top = m
        return cur


def expm_fast(m_unit: np.ndarray, m: int, cache: ExpmCache | None = None) -> np.ndarray:
    """exp(m * m_unit) for positive integer m via cached multiplication.

    ``cache`` must have been built from the same unit generator; when
    omitted a fresh one is created (and thrown away, so pass a cache when
    calling repeatedly).
    """
    if cache is None:
        cache = ExpmCache.from_generator(m_unit)
    return cache.power(m)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on the reference interval [0, 1]."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` points, mapped to [0, 1].

    Exact for polynomials of degree <= 2*order - 1.
    """
    if order != int(order) or not (1 <= order <= 16):
        raise InvalidParameterError(f"quadrature order must be an integer in [1, 16], got {order!r}")
    x, w = np.polynomial.legendre.leggauss(int(order))
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order=int(order), nodes=nodes, weights=weights)


def _source_integral(model, x_start: float, dx: float, sign: float, quad: QuadratureRule) -> np.ndarray:
    """Quadrature of e^{-sign*M*u*dx} Lam^-1 Fr(x_start + sign*u*dx) over u in [0,1]."""
    acc = np.zeros(4)
    for u, w in zip(quad.nodes, quad.weights):
        E = expm(-sign * model.M * (u * dx))
        acc += w * (E @ model.steady_source(x_start + sign * u * dx))
    return dx * acc


def propagate_forward(r_left, x_left: float, dx: float, model, quad: QuadratureRule | None = None) -> np.ndarray:
    """Exact steady-ODE transport of a characteristic state one cell rightward.

    Returns the value at x_left + dx of the solution of
    dr/dx = M r + Lam^-1 Fr(x) with r(x_left) = r_left.  The source integral
    is evaluated with ``quad`` (default order 4) and skipped entirely for
    source-free problems, in which case the result is exactly
    exp(M dx) @ r_left.
    """
    if dx <= 0:
        raise InvalidParameterError(f"dx must be positive, got {dx}")
    r_left = np.asarray(r_left, dtype=float)
    P = expm(model.M * dx)
    out = P @ r_left
    if not model.source_free:
        quad = quad if quad is not None else gauss_legendre(4)
        out = out + P @ _source_integral(model, x_left, dx, 1.0, quad)
    return out


def propagate_backward(r_right, x_right: float, dx: float, model, quad: QuadratureRule | None = None) -> np.ndarray:
    """Mirror of :func:`propagate_forward`: transport one cell leftward.

    Returns the value at x_right - dx of the steady-ODE solution with
    r(x_right) = r_right.
    """
    if dx <= 0:
        raise InvalidParameterError(f"dx must be positive, got {dx}")
    r_right = np.asarray(r_right, dtype=float)
    Pb = expm(-model.M * dx)
    out = Pb @ r_right
    if not model.source_free:
        quad = quad if quad is not None else gauss_legendre(4)
        out = out - Pb @ _source_integral(model, x_right, dx, -1.0, quad)
    return out
