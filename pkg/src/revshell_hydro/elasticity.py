"""Axisymmetric thin-shell model of a compound shell of revolution.

Kirchhoff-Love kinematics on each meridian segment, with meridional
displacement ``u`` (along the tangent) and normal displacement ``w``
(along the outward normal ``n = (t_z, -t_r)``)::

    eps_s = u' + kappa w          eps_t = (u t_r + w n_r) / r
    chi   = w' - kappa u          k_s = chi'     k_t = chi t_r / r

with ``' = d/ds`` and ``kappa`` the signed curvature (``n' = kappa t``).
The strain energy
``1/2 int [C (eps_s^2 + eps_t^2 + 2 nu eps_s eps_t) + D (k_s^2 + k_t^2 + 2 nu k_s k_t)] 2 pi r ds``
and kinetic energy ``1/2 int rho h (u'^2 + w'^2) 2 pi r ds`` are minimized
over Legendre polynomials per segment (Ritz).  Junction continuity of
(U_r, U_z, chi), axis regularity and fixed segments are linear constraints
removed through an orthonormal null-space basis.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.linalg import eigh, null_space

from .geometry import GeometryError, Meridian

log = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("a", "b", "free")


class ShellError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialSpec:
    """Isotropic shell material and wall thickness (SI units)."""

    E: float
    nu: float
    rho: float
    h: float
    yield_point: float | None = None

    def __post_init__(self):
        if not self.E > 0:
            raise ShellError(f"Young modulus must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ShellError(f"Poisson ratio {self.nu} outside [0, 0.5)")
        if not self.rho > 0:
            raise ShellError(f"density must be positive, got {self.rho}")
        if not self.h > 0:
            raise ShellError(f"thickness must be positive, got {self.h}")

    @property
    def membrane_stiffness(self) -> float:
        return self.E * self.h / (1.0 - self.nu**2)

    @property
    def bending_stiffness(self) -> float:
        return self.E * self.h**3 / (12.0 * (1.0 - self.nu**2))

    def check_thin(self, meridian: Meridian) -> None:
        radii = [abs(s.radius) for s in meridian.segments if s.kind == "arc"]
        if radii and self.h > min(radii) / 10.0:
            warnings.warn(f"h = {self.h} is not small against curvature radius {min(radii)}",
                          stacklevel=2)


@dataclass
class RitzBasis:
    """Legendre polynomials of degree ``degree`` for u and w on each segment.

    ``constraints`` is the constraint matrix G (rows: G x = 0) and ``Z`` an
    orthonormal basis of its null space; full coefficient vectors are
    ``x = Z y``.
    """

    degree: int
    n_segments: int
    bc: str
    constraints: np.ndarray
    Z: np.ndarray
    labels: list = field(default_factory=list)

    @property
    def per_segment(self) -> int:
        return 2 * (self.degree + 1)

    @property
    def full_size(self) -> int:
        return self.n_segments * self.per_segment

    @property
    def size(self) -> int:
        return self.Z.shape[1]

    def block(self, seg: int) -> slice:
        """Coefficient slice of 0-based segment ``seg``: u first, then w."""
        k = self.per_segment
        return slice(seg * k, (seg + 1) * k)


@lru_cache(maxsize=None)
def _legendre_derivative_maps(degree: int, derivs: int) -> tuple:
    """Coefficient maps of d-th derivatives in the Legendre basis."""
    eye = np.eye(degree + 1)
    maps = []
    for d in range(derivs + 1):
        D = np.zeros((degree + 1, degree + 1))
        for k in range(degree + 1):
            c = npleg.legder(eye[k], d) if d else eye[k]
            D[:c.size, k] = c
        maps.append(D)
    return tuple(maps)


def _legendre_table(degree: int, t, derivs: int = 3) -> np.ndarray:
    """Values and t-derivatives of P_0..P_degree; shape (derivs+1, degree+1, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    V = npleg.legvander(t, degree)
    return np.stack([(V @ D).T for D in _legendre_derivative_maps(degree, derivs)])


class _SegmentKinematics:
    """Strain operators of one segment evaluated at parameters t."""

    def __init__(self, seg, degree: int, t):
        self.seg = seg
        self.t = np.atleast_1d(np.asarray(t, dtype=float))
        L = seg.length
        self.ds = 0.5 * L  # ds/dt
        tab = _legendre_table(degree, self.t)
        self.P = tab[0]
        self.dP = tab[1] / self.ds
        self.d2P = tab[2] / self.ds**2
        self.d3P = tab[3] / self.ds**3
        pts = seg.point(self.t)
        self.r = pts[0]
        self.z = pts[1]
        tan = seg.tangent(self.t)
        self.tr, self.tz = tan[0], tan[1]
        self.nr, self.nz = self.tz, -self.tr
        self.kappa = seg.curvature
        self.nb = degree + 1

    def _zeros(self):
        return np.zeros((self.t.size, 2 * self.nb))

    def _uw(self, Pu, Pw):
        out = self._zeros()
        out[:, :self.nb] = Pu.T
        out[:, self.nb:] = Pw.T
        return out

    # rows map the segment coefficient block to the quantity at each t
    def u(self):
        return self._uw(self.P, 0 * self.P)

    def w(self):
        return self._uw(0 * self.P, self.P)

    def radial(self):
        return self._uw(self.P * self.tr, self.P * self.nr)

    def axial(self):
        return self._uw(self.P * self.tz, self.P * self.nz)

    def rotation(self):
        return self._uw(-self.kappa * self.P, self.dP)

    def eps_s(self):
        return self._uw(self.dP, self.kappa * self.P)

    def eps_t_times_r(self):
        return self.radial()

    def k_s(self):
        return self._uw(-self.kappa * self.dP, self.d2P)

    def k_s_prime(self):
        return self._uw(-self.kappa * self.d2P, self.d3P)

    def k_t_times_r(self):
        return self.rotation() * self.tr[:, None]


def _quadrature(degree: int):
    return np.polynomial.legendre.leggauss(2 * degree + 24)


def _constraint_rows(meridian: Meridian, degree: int, bc: str) -> np.ndarray:
    segs = meridian.segments
    nseg = len(segs)
    per = 2 * (degree + 1)
    rows = []

    def end_rows(i, t):
        kin = _SegmentKinematics(segs[i], degree, [t])
        scale_rot = segs[i].length  # rotations per unit length -> displacement scale
        return kin.radial()[0], kin.axial()[0], kin.rotation()[0] * scale_rot

    def place(i, vec):
        row = np.zeros(nseg * per)
        row[i * per:(i + 1) * per] = vec
        return row

    for i in range(nseg - 1):
        a = end_rows(i, 1.0)
        b = end_rows(i + 1, -1.0)
        lref = min(segs[i].length, segs[i + 1].length)
        for k in range(3):
            fa, fb = a[k], b[k]
            if k == 2:
                fa, fb = fa / segs[i].length * lref, fb / segs[i + 1].length * lref
            rows.append(place(i, fa) - place(i + 1, fb))
    # regularity where the meridian touches the axis
    if abs(segs[0].start[0]) < 1e-12:
        radial, _, rot = end_rows(0, -1.0)
        rows += [place(0, radial), place(0, rot)]
    if abs(segs[-1].end[0]) < 1e-12:
        radial, _, rot = end_rows(nseg - 1, 1.0)
        rows += [place(nseg - 1, radial), place(nseg - 1, rot)]
    fixed = {"a": {0, nseg - 1}, "b": {0}, "free": set()}[bc]
    if bc == "a" and nseg < 2:
        raise ShellError("condition (a) needs at least two segments")
    for i in fixed:
        for k in range(per):
            rows.append(place(i, np.eye(per)[k]))
    return np.array(rows) if rows else np.zeros((0, nseg * per))


def build_basis(meridian: Meridian, degree: int, bc: str = "b") -> RitzBasis:
    if bc not in BOUNDARY_CONDITIONS:
        raise ShellError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")
    if degree < 3:
        raise ShellError("Ritz degree must be at least 3")
    G = _constraint_rows(meridian, degree, bc)
    n = len(meridian.segments) * 2 * (degree + 1)
    Z = null_space(G, rcond=1e-11) if G.size else np.eye(n)
    if Z.shape[1] == 0:
        raise ShellError("empty Ritz basis: every displacement is constrained")
    return RitzBasis(degree, len(meridian.segments), bc, G, Z,
                     labels=[s.label for s in meridian.segments])


@dataclass
class ShellModel:
    """Constrained stiffness and mass of the shell (generalized coordinates y)."""

    meridian: Meridian
    material: MaterialSpec
    basis: RitzBasis
    K_full: np.ndarray
    M_full: np.ndarray

    @property
    def K(self) -> np.ndarray:
        Z = self.basis.Z
        return Z.T @ self.K_full @ Z

    @property
    def M(self) -> np.ndarray:
        Z = self.basis.Z
        return Z.T @ self.M_full @ Z

    def expand(self, y) -> np.ndarray:
        return self.basis.Z @ np.asarray(y, dtype=float)

    def strain_energy(self, x_full) -> float:
        x = np.asarray(x_full, dtype=float)
        return 0.5 * float(x @ self.K_full @ x)

    def evaluate(self, x_full, segment: int, t, what: str = "w") -> np.ndarray:
        """Field ``what`` (u, w, radial, axial, rotation) on 1-based segment."""
        seg = self.meridian.segment(segment)
        kin = _SegmentKinematics(seg, self.basis.degree, t)
        blk = np.asarray(x_full, dtype=float)[self.basis.block(segment - 1)]
        return getattr(kin, what)() @ blk


def assemble_shell(meridian: Meridian, material: MaterialSpec, degree: int = 12,
                   bc: str = "b") -> ShellModel:
    """Ritz stiffness and mass matrices of the compound shell."""
    material.check_thin(meridian)
    basis = build_basis(meridian, degree, bc)
    C, D, nu = material.membrane_stiffness, material.bending_stiffness, material.nu
    n = basis.full_size
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    x, wq = _quadrature(degree)
    for i, seg in enumerate(meridian.segments):
        kin = _SegmentKinematics(seg, degree, x)
        jac = 2.0 * np.pi * kin.ds * wq  # 2 pi ds without r
        r = kin.r
        es = kin.eps_s()
        et = kin.eps_t_times_r() / r[:, None]
        ks = kin.k_s()
        kt = kin.k_t_times_r() / r[:, None]
        wgt = (jac * r)[:, None]
        Kb = C * ((es * wgt).T @ es + (et * wgt).T @ et
                  + nu * ((es * wgt).T @ et + (et * wgt).T @ es))
        Kb += D * ((ks * wgt).T @ ks + (kt * wgt).T @ kt
                   + nu * ((ks * wgt).T @ kt + (kt * wgt).T @ ks))
        U, W = kin.u(), kin.w()
        Mb = material.rho * material.h * ((U * wgt).T @ U + (W * wgt).T @ W)
        blk = basis.block(i)
        K[blk, blk] += Kb
        M[blk, blk] += Mb
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    return ShellModel(meridian, material, basis, K, M)


@dataclass
class ModeShape:
    """A structural displacement field given by full Ritz coefficients."""

    model: ShellModel
    coefficients: np.ndarray
    omega2: float = float("nan")

    @property
    def omega(self) -> float:
        return float(np.sqrt(max(self.omega2, 0.0)))

    @property
    def frequency_hz(self) -> float:
        return self.omega / (2.0 * np.pi)

    def field(self, parent: int, s, what: str = "w"):
        seg = self.model.meridian.segment(parent)
        t = np.clip(2.0 * np.asarray(s, dtype=float) / seg.length - 1.0, -1.0, 1.0)
        return self.model.evaluate(self.coefficients, parent, np.atleast_1d(t), what)

    def normal_displacement(self, parent, s, r=None, z=None) -> float:
        """Outward normal displacement at arclength s of segment ``parent``."""
        return float(self.field(parent, s)[0])

    __call__ = normal_displacement

    def scaled(self, factor: float) -> "ModeShape":
        return ModeShape(self.model, factor * self.coefficients, self.omega2)


def dry_modes(model: ShellModel, K: int) -> list[ModeShape]:
    """Lowest K natural modes, mass-orthonormal and sorted by frequency."""
    Kr, Mr = model.K, model.M
    nd = Kr.shape[0]
    if not 1 <= K <= nd:
        raise ShellError(f"mode count {K} outside 1..{nd}")
    vals, vecs = eigh(Kr, Mr, subset_by_index=(0, K - 1))
    res = np.linalg.norm(Kr @ vecs - Mr @ vecs * vals, axis=0)
    scale = np.linalg.norm(Kr, 2) * np.linalg.norm(vecs, axis=0)
    if np.any(res > 1e-8 * scale):
        raise ShellError(f"eigen-solve residuals too large: {res.max():.3e}")
    modes = []
    for k in range(K):
        v = vecs[:, k]
        # sign convention: largest normal displacement positive
        x = model.expand(v)
        modes.append(ModeShape(model, x * _sign_of_peak(model, x), float(vals[k])))
    return modes


def _sign_of_peak(model: ShellModel, x) -> float:
    best, sign = 0.0, 1.0
    tt = np.linspace(-1.0, 1.0, 41)
    for i in range(len(model.meridian.segments)):
        w = model.evaluate(x, i + 1, tt)
        k = int(np.argmax(np.abs(w)))
        if abs(w[k]) > best + 1e-12 * max(best, 1e-300):
            best, sign = abs(w[k]), (1.0 if w[k] >= 0 else -1.0)
    return sign


# ---------------------------------------------------------------------------
# loads
# ---------------------------------------------------------------------------

@dataclass
class SurfaceLoad:
    """Normal surface pressure ``q(t) * shape(s)`` on selected segments.

    Positive values push along the outward normal.  ``segments`` holds
    1-based segment labels; ``None`` loads the whole shell.  ``below``
    restricts the footprint to z <= below (e.g. the wetted part).
    """

    history: callable
    segments: tuple | None = None
    shape: callable | None = None
    below: float | None = None

    def amplitude(self, t) -> np.ndarray:
        return np.asarray(self.history(np.asarray(t, dtype=float)), dtype=float)


def exponential_pulse(q0: float, tau: float):
    if tau <= 0:
        raise ShellError("pulse time constant must be positive")
    return lambda t: q0 * np.exp(-np.asarray(t, dtype=float) / tau)


def modal_force(model: ShellModel, mode: ModeShape | np.ndarray, load: SurfaceLoad,
                t: float = 0.0, order: int = 64) -> float:
    """Generalized force int_S q(s, t) w_k dS of a normal surface load."""
    x = mode.coefficients if isinstance(mode, ModeShape) else np.asarray(mode, float)
    return float(load.amplitude(t)) * _load_projection(model, x, load, order)


def axial_momentum(model: ShellModel, mode: ModeShape | np.ndarray) -> float:
    """rho h int_S U_z dS: inertia coupling of a field to a vertical base acceleration."""
    x = mode.coefficients if isinstance(mode, ModeShape) else np.asarray(mode, float)
    xq, wq = _quadrature(model.basis.degree)
    total = 0.0
    for i, seg in enumerate(model.meridian.segments):
        kin = _SegmentKinematics(seg, model.basis.degree, xq)
        uz = kin.axial() @ x[model.basis.block(i)]
        total += float(np.sum(2.0 * np.pi * kin.ds * wq * kin.r * uz))
    return model.material.rho * model.material.h * total


def _load_projection(model: ShellModel, x, load: SurfaceLoad, order: int = 64) -> float:
    segs = load.segments or tuple(range(1, len(model.meridian.segments) + 1))
    xq, wq = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for label in segs:
        seg = model.meridian.segment(label)
        lo, hi = -1.0, 1.0
        if load.below is not None:
            crossing = seg.crossings(load.below)
            z0, z1 = seg.start[1], seg.end[1]
            if z0 > load.below and z1 > load.below:
                continue
            if crossing:
                if z0 <= load.below:
                    hi = crossing[0]
                else:
                    lo = crossing[-1]
        t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xq
        jac = 0.5 * (hi - lo) * 0.5 * seg.length * wq
        w = model.evaluate(x, label, t)
        r = seg.point(t)[0]
        q = np.ones_like(t) if load.shape is None else load.shape(label, seg.arclength(t))
        total += float(np.sum(jac * 2.0 * np.pi * r * q * w))
    return total


def static_solution(model: ShellModel, load: SurfaceLoad, t: float = 0.0) -> np.ndarray:
    """Full coefficients of the static response K x = Q(t)."""
    Z = model.basis.Z
    nd = Z.shape[1]
    Q = np.array([_load_projection(model, Z[:, k], load) for k in range(nd)])
    y = np.linalg.solve(model.K, float(load.amplitude(t)) * Q)
    return model.expand(y)


# ---------------------------------------------------------------------------
# junction diagnostics
# ---------------------------------------------------------------------------

def stress_resultants(model: ShellModel, x_full, segment: int, t) -> dict:
    """Meridional force N_s, moment M_s and transverse shear Q_s."""
    mat = model.material
    C, D, nu = mat.membrane_stiffness, mat.bending_stiffness, mat.nu
    seg = model.meridian.segment(segment)
    kin = _SegmentKinematics(seg, model.basis.degree, t)
    blk = np.asarray(x_full, dtype=float)[model.basis.block(segment - 1)]
    r = kin.r
    es = kin.eps_s() @ blk
    et = kin.eps_t_times_r() @ blk / r
    chi = kin.rotation() @ blk
    ks = kin.k_s() @ blk
    kt = chi * kin.tr / r
    ks_p = kin.k_s_prime() @ blk
    kt_p = ((kin.k_s() @ blk) * kin.tr / r + chi * (-kin.kappa * kin.nr) / r
            - chi * kin.tr**2 / r**2)
    Ns = C * (es + nu * et)
    Ms = D * (ks + nu * kt)
    Mt = D * (kt + nu * ks)
    dMs = D * (ks_p + nu * kt_p)
    Qs = dMs + (Ms - Mt) * kin.tr / r
    return dict(N_s=Ns, M_s=Ms, Q_s=Qs, tr=kin.tr, tz=kin.tz, nr=kin.nr, nz=kin.nz)


def junction_force_balance(model: ShellModel, x_full) -> list[dict]:
    """Jump of the generalized force (F_r, F_z, M) across each junction.

    The Ritz solution satisfies this continuity only weakly; the jump is a
    refinement diagnostic.  Each entry reports the absolute jump vector and
    its size relative to the larger one-sided force.
    """
    out = []
    n = len(model.meridian.segments)
    for i in range(1, n):
        a = stress_resultants(model, x_full, i, [1.0])
        b = stress_resultants(model, x_full, i + 1, [-1.0])

        def vec(s):
            fr = s["N_s"][0] * s["tr"][0] + s["Q_s"][0] * s["nr"][0]
            fz = s["N_s"][0] * s["tz"][0] + s["Q_s"][0] * s["nz"][0]
            return np.array([fr, fz, s["M_s"][0]])

        va, vb = vec(a), vec(b)
        jump = va - vb
        ref = max(np.linalg.norm(va[:2]), np.linalg.norm(vb[:2]), 1e-300)
        out.append(dict(junction=i, jump=jump,
                        relative=float(np.linalg.norm(jump[:2]) / ref)))
    return out


def breathing_fraction(model: ShellModel, mode: ModeShape) -> float:
    """|int U_r dS| relative to int |U| dS: near one for a uniform ring mode."""
    xq, wq = np.polynomial.legendre.leggauss(64)
    num = den = 0.0
    for i, seg in enumerate(model.meridian.segments, start=1):
        r = seg.point(xq)[0]
        jac = 0.5 * seg.length * wq * 2.0 * np.pi * r
        ur = model.evaluate(mode.coefficients, i, xq, "radial")
        uz = model.evaluate(mode.coefficients, i, xq, "axial")
        num += float(np.sum(jac * ur))
        den += float(np.sum(jac * np.hypot(ur, uz)))
    return abs(num) / den if den > 0 else 0.0


def check_meridian(meridian: Meridian) -> None:
    if not meridian.segments:
        raise GeometryError("meridian has no segments")
