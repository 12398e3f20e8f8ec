"""Ring-source fundamental solutions of the axisymmetric Laplace operator.

For an azimuthal harmonic ``cos(m*phi)`` the free-space kernel ``1/|x - y|``
averaged over a ring of radius ``r0`` reduces to a toroidal (half-integer
degree) Legendre function of the second kind::

    (1/2pi) * int_0^{2pi} cos(m psi) / |x - y| dpsi = Q_{m-1/2}(chi) / (pi sqrt(r r0))

with ``chi = 1 + ((r - r0)^2 + (z - z0)^2) / (2 r r0)``.  Near coincidence
``Q_{m-1/2}(chi) = -P_{m-1/2}(chi) ln(chi - 1) / 2 + analytic``, which gives
the logarithmic split used by the boundary integral solver.

All functions here take ``chim1 = chi - 1`` rather than ``chi`` so that the
near-diagonal regime keeps full relative precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, ellipe, ellipk, ellipkm1

from .geometry import MeridianPoint, SurfaceFrame

M_MAX_DEFAULT = 8

# forward recurrence for Q is used below this value of chi - 1; above it the
# minimal solution is obtained from a backward continued fraction
_FORWARD_LIMIT = 0.1
_FD_SWITCH = 1e-3
_FD_STEP = 1e-5


def _as_array(x):
    return np.asarray(x, dtype=float)


def _q_seed(chim1):
    chi = 1.0 + chim1
    k2 = 2.0 / (chi + 1.0)
    k = np.sqrt(k2)
    kk = ellipkm1(chim1 / (chi + 1.0))
    q0 = k * kk
    q1 = chi * k * kk - np.sqrt(2.0 * (chi + 1.0)) * ellipe(k2)
    return q0, q1


def legendre_q_half(m_max: int, chim1) -> np.ndarray:
    """Q_{m-1/2}(1 + chim1) for m = 0..m_max, stacked along axis 0."""
    chim1 = _as_array(chim1)
    if np.any(chim1 <= 0):
        raise ValueError("Q_{m-1/2} is singular at chi = 1")
    if chim1.ndim == 0:
        return legendre_q_half(m_max, chim1[None])[:, 0]
    out = np.empty((m_max + 1,) + chim1.shape)
    q0, q1 = _q_seed(chim1)
    out[0] = q0
    if m_max == 0:
        return out
    chi = 1.0 + chim1
    near = chim1 < _FORWARD_LIMIT

    # forward recurrence; its error growth (P/Q ratio) stays below ~1e3 here
    fw = np.empty((m_max + 1,) + chim1.shape)
    fw[0], fw[1] = q0, q1
    for m in range(1, m_max):
        fw[m + 1] = (2.0 * m * chi * fw[m] - (m - 0.5) * fw[m - 1]) / (m + 0.5)

    # backward recurrence in ratio form: rho_n = Q_{n+1/2} / Q_{n-1/2}
    far = ~near
    if np.any(far):
        cf = chi[far]
        mu = np.min(cf + np.sqrt(cf * cf - 1.0))
        n_top = m_max + int(np.ceil(20.0 * np.log(10.0) / np.log(mu))) + 10
        rho = np.zeros_like(cf)
        ratios = np.empty((m_max,) + cf.shape)
        for n in range(n_top, 0, -1):
            rho = (n - 0.5) / (2.0 * n * cf - (n + 0.5) * rho)
            if n - 1 < m_max:
                ratios[n - 1] = rho
        val = q0[far]
        for m in range(1, m_max + 1):
            val = val * ratios[m - 1]
            fw[m][far] = val
    out[1:] = fw[1:]
    return out


def legendre_p_half(m_max: int, chim1) -> np.ndarray:
    """P_{m-1/2}(1 + chim1) for m = 0..m_max (forward recurrence is stable)."""
    chim1 = _as_array(chim1)
    chi = 1.0 + chim1
    out = np.empty((m_max + 1,) + chim1.shape)
    out[0] = 2.0 / np.pi * np.sqrt(2.0 / (chi + 1.0)) * ellipk(chim1 / (chi + 1.0))
    if m_max == 0:
        return out
    s = np.sqrt(chim1 * (chi + 1.0))
    out[1] = 2.0 / np.pi * np.sqrt(chi + s) * ellipe(2.0 * s / (chi + s))
    for m in range(1, m_max):
        out[m + 1] = (2.0 * m * chi * out[m] - (m - 0.5) * out[m - 1]) / (m + 0.5)
    return out


def _with_derivative(table, m, chim1):
    """Value and chi-derivative of the m-th entry of a P or Q table."""
    chi = 1.0 + chim1
    val = table[m]
    below = table[1] if m == 0 else table[m - 1]  # degree -3/2 equals degree 1/2
    der = (m - 0.5) * (chi * val - below) / (chim1 * (chim1 + 2.0))
    return val, der


def q_half_and_derivative(m: int, chim1):
    table = legendre_q_half(max(m, 1), chim1)
    return _with_derivative(table, m, _as_array(chim1))


def p_half_and_derivative(m: int, chim1):
    table = legendre_p_half(max(m, 1), chim1)
    return _with_derivative(table, m, _as_array(chim1))


def log_free_limit(m: int) -> float:
    """lim_{chi->1} [Q_{m-1/2}(chi) + P_{m-1/2}(chi) ln(chi - 1) / 2]."""
    return 0.5 * np.log(2.0) - np.euler_gamma - digamma(m + 0.5)


def q_log_free(m: int, chim1):
    """Analytic part Q_{m-1/2} + P_{m-1/2} ln(chi-1)/2, finite at chi = 1."""
    chim1 = _as_array(chim1)
    out = np.full(chim1.shape, log_free_limit(m))
    pos = chim1 > 0
    if np.any(pos):
        c = chim1[pos]
        out[pos] = legendre_q_half(m, c)[m] + 0.5 * legendre_p_half(m, c)[m] * np.log(c)
    return out


# ---------------------------------------------------------------------------
# single-layer kernel used by the solver: (1/4pi) int cos(m psi)/|X-Y| dpsi
# ---------------------------------------------------------------------------

def _chim1(r0, r, dr, dz):
    return (dr * dr + dz * dz) / (2.0 * r * r0)


def layer_kernel(m: int, r0, r, dr, dz) -> np.ndarray:
    """Ring single-layer kernel between an observation point and a source ring.

    ``r0`` is the observation radius, ``r`` the source radius and
    ``(dr, dz)`` the source minus observation offset.  Points on the axis are
    handled by their exact limits.
    """
    r0, r, dr, dz = np.broadcast_arrays(*map(_as_array, (r0, r, dr, dz)))
    out = np.zeros(r0.shape)
    rr = r * r0
    on_axis = rr == 0.0
    if np.any(on_axis) and m == 0:
        out[on_axis] = 0.5 / np.hypot(np.maximum(r[on_axis], r0[on_axis]), dz[on_axis])
    ok = ~on_axis
    if np.any(ok):
        c = _chim1(r0[ok], r[ok], dr[ok], dz[ok])
        q = legendre_q_half(m, c)[m]
        out[ok] = q / (2.0 * np.pi * np.sqrt(rr[ok]))
    return out


def layer_kernel_dn0(m: int, r0, r, dr, dz, n_r0, n_z0, dn=None) -> np.ndarray:
    """Normal derivative of :func:`layer_kernel` at the observation point.

    ``dn`` is ``n0 . (source - observation)``; pass it when it is known more
    accurately than the cancelling sum ``n_r0 dr + n_z0 dz``.
    """
    if dn is None:
        dn = _as_array(n_r0) * _as_array(dr) + _as_array(n_z0) * _as_array(dz)
    r0, r, dr, dz, n_r0, n_z0, dn = np.broadcast_arrays(
        *map(_as_array, (r0, r, dr, dz, n_r0, n_z0, dn)))
    out = np.zeros(r0.shape)
    rr = r * r0
    on_axis = r0 == 0.0
    if np.any(on_axis) and m == 0:
        # only the axial derivative survives on the axis
        rho = np.hypot(r[on_axis], dz[on_axis])
        out[on_axis] = 0.5 * n_z0[on_axis] * dz[on_axis] / rho**3
    ok = (~on_axis) & (r > 0.0)
    if np.any(ok):
        r0k, rk, drk, dzk, nrk = r0[ok], r[ok], dr[ok], dz[ok], n_r0[ok]
        c = _chim1(r0k, rk, drk, dzk)
        q, dq = q_half_and_derivative(m, c)
        sq = np.sqrt(rr[ok])
        dchi_dn0 = -(dn[ok] + nrk * rk * c) / rr[ok]
        out[ok] = (dq * dchi_dn0 - 0.5 * nrk * q / r0k) / (2.0 * np.pi * sq)
    return out


# ---------------------------------------------------------------------------
# point-pair API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSplit:
    """G_m = log_coefficient * ln(1/sqrt|M - M0|) + smooth_part."""

    total: float
    log_coefficient: float
    smooth_part: float


def _check_m(m, m_max):
    if m < 0 or m > m_max:
        raise ValueError(f"harmonic index {m} outside 0..{m_max}")


def ring_green(m: int, M: MeridianPoint, M0: MeridianPoint,
               m_max: int = M_MAX_DEFAULT) -> KernelSplit:
    """m-th azimuthal coefficient (1/2pi) int cos(m phi)/|x - y| dphi.

    Symmetric in ``M`` and ``M0``.  If either point is on the axis the
    coefficient is the exact limit (zero for m >= 1) and the split is
    reported with a zero log coefficient.
    """
    _check_m(m, m_max)
    dr, dz = M.r - M0.r, M.z - M0.z
    d = float(np.hypot(dr, dz))
    if M.r == 0.0 or M0.r == 0.0:
        if d == 0.0:
            raise ValueError("coincident points")
        total = 2.0 * float(layer_kernel(m, M0.r, M.r, dr, dz))
        return KernelSplit(total, 0.0, total)
    rr = M.r * M0.r
    sq = np.sqrt(rr)
    c = (dr * dr + dz * dz) / (2.0 * rr)
    p = float(legendre_p_half(m, c)[m])
    coeff = 2.0 * p / (np.pi * sq)
    smooth = float((q_log_free(m, c) + 0.5 * p * np.log(2.0 * rr)) / (np.pi * sq))
    if d == 0.0:
        return KernelSplit(np.inf, coeff, smooth)
    total = float(legendre_q_half(m, c)[m]) / (np.pi * sq)
    return KernelSplit(total, coeff, smooth)


@dataclass(frozen=True)
class KernelPairGeometry:
    """Collocation frame at M0 and an integration point M' on the generatrix."""

    source: SurfaceFrame
    field: MeridianPoint
    smooth_at_source: bool = True

    @property
    def chord(self) -> float:
        p0 = self.source.point
        return float(np.hypot(self.field.r - p0.r, self.field.z - p0.z))

    @property
    def theta0(self) -> float:
        """Angle between +z and the normal of the chord M0 -> M'."""
        p0 = self.source.point
        tr, tz = self.field.r - p0.r, self.field.z - p0.z
        if tr == 0.0 and tz == 0.0:
            raise ValueError("theta0 undefined for a zero chord")
        # chord normal obtained by the same rotation that maps tangent to normal
        nr, nz = tz, -tr
        t = self.source.tangent
        n = self.source.normal
        if t[0] * n[1] - t[1] * n[0] > 0:
            nr, nz = -nr, -nz
        return float(np.arctan2(nr, nz))


def chord_term(geom: KernelPairGeometry) -> float:
    """sin(theta - theta0)/|M' - M0| written as -(M' - M0).n0 / |M' - M0|^2.

    Zero for collinear points, 1/(2R) for any pair on a circle of radius R
    with outward normal.  The diagonal limit needs the local curvature, which
    a :class:`SurfaceFrame` carries.
    """
    p0 = geom.source.point
    tr, tz = geom.field.r - p0.r, geom.field.z - p0.z
    d2 = tr * tr + tz * tz
    if d2 == 0.0:
        if not geom.smooth_at_source:
            raise ValueError("kernel undefined at a junction node")
        return 0.5 * geom.source.curvature
    n = geom.source.normal
    return -(tr * n[0] + tz * n[1]) / d2


def fredholm_kernel(m: int, geom: KernelPairGeometry, r0: float | None = None,
                    m_max: int = M_MAX_DEFAULT) -> float:
    """Kernel of the second-kind equation for the single-layer density.

    The returned value multiplies ``g(s') ds'`` in
    ``g(s0)/2 + int K(s0, s') g(s') ds' = F(s0)``; it is ``r' dG/dn0`` for the
    ring kernel ``G = (1/4pi) int cos(m psi)/|X - Y| dpsi``.  ``r0`` defaults
    to the radius of the source frame.
    """
    _check_m(m, m_max)
    p0 = geom.source.point
    if geom.chord == 0.0:
        raise ValueError("fredholm kernel is log-singular on the diagonal; "
                         "use smooth_part_normal_derivative for the regular part")
    r0 = p0.r if r0 is None else r0
    n = geom.source.normal
    M = geom.field
    val = layer_kernel_dn0(m, r0, M.r, M.r - r0, M.z - p0.z, n[0], n[1])
    return float(M.r * val)


def smooth_part_normal_derivative(m: int, geom: KernelPairGeometry,
                                  m_max: int = M_MAX_DEFAULT) -> float:
    """Normal derivative at M0 of the smooth part H_m of :func:`ring_green`.

    ``H_m = [Qhat(chi) + P(chi) ln(2 r r0)/2] / (pi sqrt(r r0))`` with
    ``Qhat = Q + P ln(chi-1)/2`` analytic.  On the diagonal ``dchi/dn0``
    vanishes and only the explicit radius dependence remains.
    """
    _check_m(m, m_max)
    p0 = geom.source.point
    M = geom.field
    n = geom.source.normal
    r0, r = p0.r, M.r
    if r0 <= 0.0 or r <= 0.0:
        raise ValueError("smooth part requires both points off the axis")
    if geom.chord == 0.0 and not geom.smooth_at_source:
        raise ValueError("kernel undefined at a junction node")
    rr = r * r0
    sq = np.sqrt(rr)
    dr, dz = r - r0, M.z - p0.z
    c = (dr * dr + dz * dz) / (2.0 * rr)
    qhat = float(q_log_free(m, c))
    if c < _FD_SWITCH:
        p = float(legendre_p_half(m, c)[m])
        # P'_{nu}(1) = nu (nu + 1)/2; the analytic part is differenced
        dp = (m * m - 0.25) / 2.0 if c == 0.0 else float(p_half_and_derivative(m, c)[1])
        h = _FD_STEP
        if c > h:
            qhat_d = float(q_log_free(m, c + h) - q_log_free(m, c - h)) / (2.0 * h)
        else:
            f0, f1, f2 = (float(q_log_free(m, c + k * h)) for k in (0, 1, 2))
            qhat_d = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
    else:
        p, dp = (float(v) for v in p_half_and_derivative(m, c))
        dq = float(q_half_and_derivative(m, c)[1])
        qhat_d = dq + 0.5 * dp * np.log(c) + 0.5 * p / c
    dchi_dr0 = -(dr + r * c) / rr
    dchi_dz0 = -dz / rr
    bracket = qhat + 0.5 * p * np.log(2.0 * rr)
    dbr_dchi = qhat_d + 0.5 * dp * np.log(2.0 * rr)
    dh_dr0 = (dbr_dchi * dchi_dr0 + 0.5 * p / r0) / (np.pi * sq) - bracket / (2.0 * np.pi * sq * r0)
    dh_dz0 = dbr_dchi * dchi_dz0 / (np.pi * sq)
    return float(n[0] * dh_dr0 + n[1] * dh_dz0)
