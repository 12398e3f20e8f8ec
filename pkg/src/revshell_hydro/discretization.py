"""Chebyshev grids and interpolative quadratures for the discrete-singularity scheme.

Collocation nodes are the zeros of the second-kind Chebyshev polynomial
``U_{n-1}``.  Densities are interpolated on these nodes; integrals against
logarithmic and smooth kernels are then exact for the interpolant (product
integration).  Corner behaviour enters through endpoint exponents, which
select an endpoint-clustering substitution ``t = t(tau)`` so that the
interpolated quantity is smooth in ``tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import beta as beta_fn
from scipy.special import betainc, roots_jacobi

TWO_PI = 2.0 * np.pi


class InternalEdgeError(ValueError):
    """A junction angle of 2*pi: hypersingular density, not supported."""


@dataclass(frozen=True)
class ChebGrid:
    n: int
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def count(self) -> int:
        return self.n - 1


def cheb_nodes(n: int) -> ChebGrid:
    """Zeros of U_{n-1}: cos(k pi / n), k = 1..n-1 (strictly decreasing)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    k = np.arange(1, n)
    nodes = np.cos(k * np.pi / n)
    nodes[np.abs(nodes) < 1e-15] = 0.0
    return ChebGrid(n, nodes)


def chebyshev_u(k: int, t) -> np.ndarray:
    """U_k(t) by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    u_prev, u = np.ones_like(t), 2.0 * t
    if k == 0:
        return u_prev
    for _ in range(k - 1):
        u_prev, u = u, 2.0 * t * u - u_prev
    return u


@lru_cache(maxsize=64)
def _fejer2(n: int) -> np.ndarray:
    th = np.arange(1, n) * np.pi / n
    j = np.arange(1, n // 2 + 1)
    s = np.sin(np.outer(th, 2 * j - 1)) / (2 * j - 1)
    return 4.0 * np.sin(th) / n * s.sum(axis=1)


def fejer_weights(grid: ChebGrid) -> np.ndarray:
    """Interpolatory weights for int_{-1}^{1} h(t) dt on the grid nodes."""
    return _fejer2(grid.n).copy()


@lru_cache(maxsize=64)
def _bary(n: int) -> np.ndarray:
    k = np.arange(1, n)
    return (-1.0) ** k * np.sin(k * np.pi / n) ** 2


def interp_matrix(grid: ChebGrid, x) -> np.ndarray:
    """Matrix mapping node values to the polynomial interpolant at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = _bary(grid.n)
    diff = x[:, None] - grid.nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    c = w[None, :] / diff
    mat = c / c.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if np.any(rows):
        mat[rows] = exact[rows].astype(float)
    return mat


# ---------------------------------------------------------------------------
# corner exponents and endpoint grading
# ---------------------------------------------------------------------------

def corner_exponent(alpha: float) -> float:
    """Endpoint exponent of the pressure-gradient singularity at an interior angle.

    Zero for 0 < alpha <= pi, ``pi/alpha - 1`` for pi < alpha < 2 pi.
    """
    if not 0.0 < alpha <= TWO_PI + 1e-12:
        raise ValueError(f"junction angle {alpha} outside (0, 2 pi]")
    if alpha >= TWO_PI - 1e-12:
        raise InternalEdgeError("internal edge (alpha = 2 pi) unsupported: hypersingular density")
    if alpha <= np.pi:
        return 0.0
    return np.pi / alpha - 1.0


def density_exponent(alpha: float) -> float:
    """Exponent of a single-layer density at a node of interior angle alpha.

    The density is the jump of the normal derivative between the liquid
    side and the complementary side, so the larger of the two opening
    angles controls the blow-up.
    """
    corner_exponent(alpha)
    return corner_exponent(max(alpha, TWO_PI - alpha))


def grading_order(end, max_order: int = 6) -> int:
    """Order p of the endpoint substitution ``1 + t ~ (1 + tau)^p``.

    Axis endpoints need none, smooth junctions get 3.  For a density exponent beta = -a/q (rational
    with small q) the order q makes every term of the corner expansion a
    polynomial in tau; otherwise ``max_order`` is used.
    """
    if end is None or end == "axis":
        return 1
    beta = density_exponent(float(end))
    if abs(beta) < 1e-14:
        # tangent-continuous junction: a curvature jump still leaves
        # rho log rho terms in the density
        return 3
    frac = Fraction(-beta).limit_denominator(12)
    if abs(float(frac) + beta) < 1e-10:
        q = frac.denominator
        return q * int(np.ceil(3 / q)) if q < 3 else q
    return max_order


@dataclass(frozen=True)
class EndpointExponents:
    """Endpoint exponents of a density on one piece, with grading orders."""

    beta_left: float
    beta_right: float
    p_left: int = 1
    p_right: int = 1

    @classmethod
    def from_ends(cls, ends, max_order: int = 6) -> "EndpointExponents":
        betas = [0.0 if e in (None, "axis") else density_exponent(float(e)) for e in ends]
        ps = [grading_order(e, max_order) for e in ends]
        return cls(betas[0], betas[1], ps[0], ps[1])

    @property
    def weight_exponents(self) -> tuple[float, float]:
        """Exponents of ``1/(dt/dtau)`` in (1 + t), (1 - t): 1/p - 1."""
        return (1.0 / self.p_left - 1.0, 1.0 / self.p_right - 1.0)


class Substitution:
    """Endpoint-clustering polynomial map t(tau) on [-1, 1], orders (pL, pR).

    ``dt/dtau`` is proportional to ``v^(pL-1) (1-v)^(pR-1)`` with
    v = (1 + tau)/2, so ``1 + t = 2 I_v(pL, pR)`` (regularized incomplete
    beta).  The map is a polynomial, which keeps the transformed density
    free of complex poles near the interval; identity for pL = pR = 1.
    ``1 + t`` and ``1 - t`` are returned separately so clustered points
    keep their precision.
    """

    def __init__(self, p_left: int = 1, p_right: int = 1):
        self.pl, self.pr = p_left, p_right
        self._scale = 1.0 / beta_fn(p_left, p_right)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        v = 0.5 * (1.0 + tau)
        w = 0.5 * (1.0 - tau)
        opt = 2.0 * betainc(self.pl, self.pr, v)
        omt = 2.0 * betainc(self.pr, self.pl, w)
        t = np.where(opt < omt, opt - 1.0, 1.0 - omt)
        dt = self._scale * v ** (self.pl - 1) * w ** (self.pr - 1)
        return t, opt, omt, dt

    def inverse(self, t: float) -> float:
        if self.pl == 1 and self.pr == 1:
            return float(t)
        return brentq(lambda x: self(x)[0] - t, -1.0, 1.0, xtol=1e-16, rtol=1e-15)


# ---------------------------------------------------------------------------
# log-kernel quadrature rows
# ---------------------------------------------------------------------------

def _chebyshev_t(k, t):
    return np.cos(k * np.arccos(np.clip(t, -1.0, 1.0)))


def _log_moments_sqrt(n: int, t0: float) -> np.ndarray:
    """I_k = int sqrt(1-t^2) U_k(t) ln(1/|t - t0|) dt, k = 0..n-2 (closed form)."""
    k = np.arange(n - 1)
    out = np.empty(n - 1)
    out[0] = 0.5 * np.pi * np.log(2.0) - 0.25 * np.pi * _chebyshev_t(2, t0)
    kk = k[1:]
    out[1:] = 0.5 * np.pi * (_chebyshev_t(kk, t0) / kk - _chebyshev_t(kk + 2, t0) / (kk + 2))
    return out


def log_quadrature_row(grid: ChebGrid, t0: float, weight=None) -> np.ndarray:
    """Weights W_k with sum W_k P(t_k) = int ln(1/|t - t0|) w(t) P(t) dt.

    Exact for polynomials P of degree <= n - 2.  ``weight=None`` means the
    canonical sqrt(1 - t^2) (closed form); a pair ``(beta_l, beta_r)``
    selects the Jacobi weight (1+t)^beta_l (1-t)^beta_r, whose product
    moments are integrated with graded Gauss panels.
    """
    if not np.any(np.abs(grid.nodes - t0) < 1e-14):
        raise ValueError("t0 must be a grid node")
    n = grid.n
    if weight is None:
        th = np.arange(1, n) * np.pi / n
        lam = np.pi / n * np.sin(th) ** 2
        k = np.arange(n - 1)
        U = np.sin(np.outer(k + 1, th)) / np.sin(th)[None, :]
        I = _log_moments_sqrt(n, t0)
        return (2.0 / np.pi) * lam * (I @ U)
    bl, br = weight
    pts, wts = graded_rule([(t0, 0.0), (-1.0, 1e-3), (1.0, 1e-3)], n_base=max(4, n // 4),
                           jacobi=(bl, br))
    keep = pts != t0
    pts, wts = pts[keep], wts[keep]
    f = np.log(1.0 / np.abs(pts - t0))
    return (wts * f) @ interp_matrix(grid, pts)


# ---------------------------------------------------------------------------
# composite Gauss panels graded toward singular or nearly singular points
# ---------------------------------------------------------------------------

_GL = {}


def _gauss(order):
    if order not in _GL:
        _GL[order] = np.polynomial.legendre.leggauss(order)
    return _GL[order]


def graded_breakpoints(centers, n_base: int = 4, ratio: float = 0.15) -> np.ndarray:
    """Panel breakpoints on [-1, 1] refined geometrically toward centers.

    ``centers`` holds (tau_c, h_min): refinement stops at panel size h_min
    (1e-15 for an exact singularity, when h_min is 0).
    """
    bps = [np.linspace(-1.0, 1.0, n_base + 1)]
    for c, hmin in centers:
        hmin = max(hmin, 1e-15)
        h = 2.0 / n_base
        levels = []
        while h > hmin:
            h *= ratio
            levels.append(h)
        levels = np.array(levels)
        if levels.size:
            bps.append(c + levels)
            bps.append(c - levels)
        bps.append([c])
    b = np.concatenate(bps)
    b = np.unique(np.clip(b, -1.0, 1.0))
    return b


def graded_rule(centers, n_base: int = 4, order: int = 16, ratio: float = 0.15,
                jacobi=None):
    """Nodes and weights of composite Gauss-Legendre on graded panels.

    With ``jacobi=(bl, br)`` the weights include (1+t)^bl (1-t)^br, the two
    end panels using Gauss-Jacobi so the endpoint powers are exact.
    """
    b = graded_breakpoints(centers, n_base, ratio)
    a0, a1 = b[:-1], b[1:]
    keep = a1 - a0 > 0
    a0, a1 = a0[keep], a1[keep]
    x, w = _gauss(order)
    half = 0.5 * (a1 - a0)
    mid = 0.5 * (a1 + a0)
    pts = mid[:, None] + half[:, None] * x[None, :]
    wts = half[:, None] * w[None, :]
    if jacobi is None:
        return pts.ravel(), wts.ravel()
    bl, br = jacobi
    wts = wts * (1.0 + pts) ** bl * (1.0 - pts) ** br
    # first panel: (1+t)^bl exact, (1-t)^br smooth there
    xj, wj = roots_jacobi(order, 0.0, bl)
    h = half[0]
    pts[0] = mid[0] + h * xj
    wts[0] = wj * h ** (1.0 + bl) * (1.0 - pts[0]) ** br
    xj, wj = roots_jacobi(order, br, 0.0)
    h = half[-1]
    pts[-1] = mid[-1] + h * xj
    wts[-1] = wj * h ** (1.0 + br) * (1.0 + pts[-1]) ** bl
    return pts.ravel(), wts.ravel()


@dataclass
class DensityField:
    """Single-layer density on the boundary pieces of D.

    ``values[i]`` holds f at the Chebyshev nodes of piece i (in tau); the
    density is ``g = f / (dt/dtau)``.
    """

    m: int
    grids: list
    exponents: list
    values: list

    def substitution(self, piece: int) -> Substitution:
        e = self.exponents[piece]
        return Substitution(e.p_left, e.p_right)


def interpolate_density(field: DensityField, piece: int, t):
    """Density g at segment parameters ``t`` (|t| < 1) on a boundary piece."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.abs(t) >= 1.0):
        e = field.exponents[piece]
        if e.p_left > 1 or e.p_right > 1:
            raise ValueError("density weight undefined at a graded endpoint")
        if np.any(np.abs(t) > 1.0):
            raise ValueError("parameter outside [-1, 1]")
    sub = field.substitution(piece)
    tau = np.array([sub.inverse(v) for v in t])
    _, _, _, dt = sub(tau)
    f = interp_matrix(field.grids[piece], tau) @ np.asarray(field.values[piece])
    return f / dt
