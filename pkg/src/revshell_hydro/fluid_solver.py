"""Per-harmonic boundary integral solver for the dynamic liquid pressure.

The pressure harmonic ``p_m`` is a single-layer potential over the boundary
of the meridional domain D (wetted walls plus the free-surface radius)::

    p_m(x) = int_l g(y) G_m(x, y) r(y) ds(y),
    G_m = (1/4pi) int_0^{2pi} cos(m psi) / |X - Y| dpsi,

and the Neumann condition becomes the second-kind equation
``g/2 + int g r dG_m/dn0 ds = F``.  Each piece is discretized on Chebyshev
nodes in a graded variable tau; the unknown stored at the nodes is
``f = g dt/dtau``, and every integral is evaluated as a product rule that
is exact for the polynomial interpolant of f.

Sign conventions: ``w`` is the outward normal displacement of the wall,
``f`` the upward free-surface elevation and ``dp/dn = -rho_l * (normal
acceleration)``.  For m = 0 the additive constant is fixed by requiring a
zero area-weighted mean of the (acceleration-proportional) pressure on the
free surface; the hydrostatic part ``-rho_l g f`` is added by the coupled
model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .discretization import (
    ChebGrid,
    DensityField,
    EndpointExponents,
    Substitution,
    cheb_nodes,
    fejer_weights,
    graded_rule,
    interp_matrix,
)
from .geometry import BoundaryPiece, GeometryError, Meridian, MeridianPoint

log = logging.getLogger(__name__)

MIN_NODES = 4
QUAD_ORDER = 24
_GAP_RULE = np.polynomial.legendre.leggauss(8)


class FluidError(RuntimeError):
    pass


class _PieceGrid:
    """Nodes and geometric data of one boundary piece."""

    def __init__(self, piece: BoundaryPiece, nodes_xy: list, n: int, max_order: int = 6):
        if n < MIN_NODES:
            raise FluidError(f"grid too coarse: n={n} < {MIN_NODES}")
        self.piece = piece
        self.seg = piece.segment
        self.L = self.seg.length
        self.grid: ChebGrid = cheb_nodes(n)
        self.exponents = EndpointExponents.from_ends(piece.ends, max_order)
        self.sub = Substitution(self.exponents.p_left, self.exponents.p_right)
        self.anchor_xy = [np.asarray(nodes_xy[a], float) for a in piece.anchors]
        self.tau = self.grid.nodes
        self.data = self.sample(self.tau)
        self.fejer = fejer_weights(self.grid)

    def sample(self, tau) -> dict:
        tau = np.asarray(tau, dtype=float)
        t, opt, omt, dt = self.sub(tau)
        near_start = opt <= omt
        off_a = self.seg.offset(opt)
        off_b = self.seg.offset(omt, from_end=True)
        off = np.where(near_start[None, :], off_a, off_b)
        anchor = np.where(near_start, 0, 1)
        base = np.where(near_start[None, :], self.anchor_xy[0][:, None],
                        self.anchor_xy[1][:, None])
        r = base[0] + off[0]
        r = np.where(r < 0.0, 0.0, r)
        n = self.seg.normal(t)
        return dict(tau=tau, t=t, dt=dt, anchor=anchor, off=off, base=base,
                    r=r, z=base[1] + off[1], nr=n[0], nz=n[1])

    def local_differences(self, tau0: float, t0: float, tau):
        """(dr, dz, n0 . d) from the point at tau0 to points tau of this piece.

        The parameter gap is integrated from dt/dtau (a polynomial, so the
        Gauss rule is exact) and the chord is formed in closed form; this
        keeps full relative precision for nearly coincident points.
        """
        tau = np.asarray(tau, dtype=float)
        gap = tau - tau0
        x, w = _GAP_RULE
        inner = tau0 + 0.5 * gap[:, None] * (1.0 + x[None, :])
        dt = 0.5 * gap * (self.sub(inner.ravel())[3].reshape(inner.shape) @ w)
        seg = self.seg
        if seg.kind == "line":
            d = 0.5 * np.multiply.outer(seg.end - seg.start, dt)
            return d[0], d[1], np.zeros_like(dt)
        R = abs(seg.radius)
        a0 = seg._a0 + 0.5 * (1.0 + t0) * seg.sweep
        da = 0.5 * dt * seg.sweep
        mid = a0 + 0.5 * da
        chord = 2.0 * R * np.sin(0.5 * da)
        sg = 1.0 if seg.ccw else -1.0
        return (-chord * np.sin(mid), chord * np.cos(mid),
                -sg * 2.0 * R * np.sin(0.5 * da) ** 2)

    @property
    def count(self) -> int:
        return self.grid.count


def _differences(src: dict, obs_anchor_xy, obs_off):
    """(dr, dz) = source minus observation point, computed anchor-relative."""
    d0 = src["base"][0] - obs_anchor_xy[0]
    d1 = src["base"][1] - obs_anchor_xy[1]
    return d0 + (src["off"][0] - obs_off[0]), d1 + (src["off"][1] - obs_off[1])


def _closest(pg: _PieceGrid, anchor_xy, off, samples: int = 129):
    """Approximate closest parameter tau* and distance on a piece."""
    tau = np.cos(np.linspace(0.0, np.pi, samples))[::-1]
    d = pg.sample(tau)
    dr, dz = _differences(d, anchor_xy, off)
    dist = np.hypot(dr, dz)
    k = int(np.argmin(dist))
    lo, hi = tau[max(k - 1, 0)], tau[min(k + 1, samples - 1)]
    for _ in range(40):
        a = lo + (hi - lo) * 0.382
        b = lo + (hi - lo) * 0.618
        da = pg.sample([a])
        db = pg.sample([b])
        fa = np.hypot(*_differences(da, anchor_xy, off))[0]
        fb = np.hypot(*_differences(db, anchor_xy, off))[0]
        if fa < fb:
            hi = b
        else:
            lo = a
    tc = 0.5 * (lo + hi)
    dc = np.hypot(*_differences(pg.sample([tc]), anchor_xy, off))[0]
    if dist[k] < dc:
        tc, dc = tau[k], dist[k]
    return float(tc), float(dc)


def _panel_size_for(pg: _PieceGrid, tc: float, dist: float, ratio=0.15) -> float:
    """Parameter panel size whose physical extent is below dist/4 near tc."""
    if dist <= 0.0:
        return 0.0
    p0 = pg.sample([tc])
    h = 2.0
    while h > 1e-15:
        h *= ratio
        worst = 0.0
        for tt in (tc - h, tc + h):
            if -1.0 <= tt <= 1.0:
                q = pg.sample([tt])
                worst = max(worst, np.hypot(q["r"][0] - p0["r"][0], q["z"][0] - p0["z"][0]))
        if worst < 0.25 * dist:
            return h
    return 1e-15


def _rule_for(pg: _PieceGrid, tc: float | None, dist: float):
    n = pg.grid.n
    centers = [(-1.0, 0.5 / n**2), (1.0, 0.5 / n**2)]
    if tc is not None:
        centers.append((tc, _panel_size_for(pg, tc, dist)))
    return graded_rule(centers, n_base=max(4, n // 4), order=QUAD_ORDER)


@dataclass
class BIESystem:
    """Scaled collocation system for one harmonic."""

    m: int
    matrix: np.ndarray
    single_layer: np.ndarray
    pieces: list
    offsets: np.ndarray
    nullspace: bool
    constraint: np.ndarray | None = None
    condition: float = float("nan")
    meridian: Meridian | None = None

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def index_map(self) -> list[tuple[int, int]]:
        return [(i, k) for i, pg in enumerate(self.pieces) for k in range(pg.count)]

    def node_scale(self) -> np.ndarray:
        return np.concatenate([pg.data["dt"] for pg in self.pieces])


def _row_integrals(m, pieces, obs: dict, k: int, obs_piece: int | None,
                   need_dn: bool = True):
    """Single-layer and normal-derivative rows for one observation point."""
    anchor_xy = obs["base"][:, k]
    off = obs["off"][:, k]
    r0 = obs["r"][k]
    rows_s, rows_d = [], []
    for j, pg in enumerate(pieces):
        if obs_piece == j:
            tc, dist = float(obs["tau"][k]), 0.0
        else:
            tc, dist = _closest(pg, anchor_xy, off)
            if dist > 0.5 * pg.L:
                tc = None
        pts, wts = _rule_for(pg, tc, dist)
        if obs_piece == j:
            keep = pts != obs["tau"][k]
            pts, wts = pts[keep], wts[keep]
        src = pg.sample(pts)
        if obs_piece == j:
            dr, dz, dn = pg.local_differences(obs["tau"][k], obs["t"][k], pts)
        else:
            dr, dz = _differences(src, anchor_xy, off)
            dn = obs["nr"][k] * dr + obs["nz"][k] * dz
        apart = (dr != 0.0) | (dz != 0.0)
        if not np.all(apart):
            # coincident points carry an O(h log h) share; drop them
            pts, wts, dr, dz, dn = pts[apart], wts[apart], dr[apart], dz[apart], dn[apart]
            src = {key: (v[..., apart] if isinstance(v, np.ndarray) else v)
                   for key, v in src.items()}
        base = 0.5 * pg.L * wts * src["r"]
        interp = interp_matrix(pg.grid, pts)
        ks = kernels.layer_kernel(m, r0, src["r"], dr, dz)
        rows_s.append((base * ks) @ interp)
        if need_dn:
            kd = kernels.layer_kernel_dn0(m, r0, src["r"], dr, dz, obs["nr"][k],
                                          obs["nz"][k], dn)
            rows_d.append((base * kd) @ interp)
    s = np.concatenate(rows_s)
    d = np.concatenate(rows_d) if need_dn else None
    return s, d


def discretize(meridian: Meridian, n=32, max_order: int = 6) -> list[_PieceGrid]:
    pieces = meridian.wetted
    if not pieces:
        raise GeometryError("no wetted surface")
    ns = [n] * len(pieces) if np.isscalar(n) else list(n)
    if len(ns) != len(pieces):
        raise FluidError("one node count per boundary piece is required")
    for p in pieces:
        for e in p.ends:
            if e not in (None, "axis") and float(e) >= 2.0 * np.pi - 1e-12:
                from .discretization import InternalEdgeError
                raise InternalEdgeError("internal edge (alpha = 2 pi) unsupported")
    return [_PieceGrid(p, meridian.nodes, k, max_order) for p, k in zip(pieces, ns)]


def assemble(meridian: Meridian, m: int, n=32, max_order: int = 6) -> BIESystem:
    """Collocation matrix of ``g/2 + K' g = F`` (rows scaled by dt/dtau)."""
    pieces = discretize(meridian, n, max_order)
    sizes = [pg.count for pg in pieces]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    N = int(offsets[-1])
    A = np.zeros((N, N))
    S = np.zeros((N, N))
    for i, pg in enumerate(pieces):
        obs = pg.data
        for k in range(pg.count):
            s_row, d_row = _row_integrals(m, pieces, obs, k, i)
            row = offsets[i] + k
            A[row] = obs["dt"][k] * d_row
            A[row, row] += 0.5
            S[row] = s_row
    sys = BIESystem(m, A, S, pieces, offsets, nullspace=(m == 0), meridian=meridian)
    if m == 0:
        sys.constraint = _free_surface_mean_row(sys)
    sys.condition = float(np.linalg.cond(_bordered(sys)))
    return sys


def _free_surface_weights(sys: BIESystem) -> np.ndarray:
    """Quadrature weights of int_sigma h dS at all nodes (zero off sigma)."""
    w = np.zeros(sys.size)
    for i, pg in enumerate(sys.pieces):
        if pg.piece.is_free_surface:
            d = pg.data
            w[sys.offsets[i]:sys.offsets[i + 1]] = (
                2.0 * np.pi * 0.5 * pg.L * pg.fejer * d["r"] * d["dt"])
    return w


def surface_weights(sys: BIESystem, wetted_only: bool = True) -> np.ndarray:
    """Quadrature weights of int h dS over the wetted walls (or all of dD)."""
    w = np.zeros(sys.size)
    for i, pg in enumerate(sys.pieces):
        if wetted_only and pg.piece.is_free_surface:
            continue
        d = pg.data
        w[sys.offsets[i]:sys.offsets[i + 1]] = 2.0 * np.pi * 0.5 * pg.L * pg.fejer * d["r"] * d["dt"]
    return w


def _free_surface_mean_row(sys: BIESystem) -> np.ndarray:
    w = _free_surface_weights(sys)
    if not np.any(w):
        raise FluidError("gauge cannot be fixed without a free surface")
    return (w / w.sum()) @ sys.single_layer


def _bordered(sys: BIESystem) -> np.ndarray:
    if not sys.nullspace:
        return sys.matrix
    N = sys.size
    B = np.zeros((N + 1, N + 1))
    B[:N, :N] = sys.matrix
    B[:N, N] = sys.node_scale()
    B[N, :N] = sys.constraint
    return B


# ---------------------------------------------------------------------------
# Neumann data
# ---------------------------------------------------------------------------

@dataclass
class RigidMotion:
    """Prescribed rigid acceleration of the container.

    ``axial`` is the vertical translational acceleration (m = 0);
    ``lateral`` the x-translation and ``rocking`` the angular acceleration
    about the y-axis, both entering the cos(phi) harmonic.
    """

    axial: float = 0.0
    lateral: float = 0.0
    rocking: float = 0.0


@dataclass
class NeumannData:
    m: int
    values: np.ndarray
    rho_l: float
    free_surface_accel: float = 0.0
    rigid: RigidMotion = field(default_factory=RigidMotion)

    def flux_residual(self, sys: BIESystem) -> float:
        """int F r ds over the whole boundary (must vanish for m = 0)."""
        w = surface_weights(sys, wetted_only=False)
        return float(w @ self.values)


def node_points(sys: BIESystem) -> dict:
    keys = ("r", "z", "nr", "nz")
    return {k: np.concatenate([pg.data[k] for pg in sys.pieces]) for k in keys}


def wall_arclength(sys: BIESystem) -> list:
    """(parent segment, arclength on parent) for every node."""
    out = []
    for pg in sys.pieces:
        s = pg.piece.s_offset + 0.5 * (pg.data["t"] + 1.0) * pg.L
        out.extend((pg.piece.parent, float(v)) for v in s)
    return out


def free_surface_mask(sys: BIESystem) -> np.ndarray:
    mask = np.zeros(sys.size, dtype=bool)
    for i, pg in enumerate(sys.pieces):
        if pg.piece.is_free_surface:
            mask[sys.offsets[i]:sys.offsets[i + 1]] = True
    return mask


def wall_displacement(sys: BIESystem, normal_displacement) -> np.ndarray:
    """Normal displacement sampled at the wall nodes (zero on sigma)."""
    w = np.zeros(sys.size)
    if normal_displacement is None:
        return w
    pts = node_points(sys)
    loc = wall_arclength(sys)
    wall = np.flatnonzero(~free_surface_mask(sys))
    vectorized = getattr(normal_displacement, "field", None)
    if vectorized is not None:
        parents = np.array([loc[k][0] for k in wall])
        svals = np.array([loc[k][1] for k in wall])
        for parent in np.unique(parents):
            sel = wall[parents == parent]
            w[sel] = vectorized(int(parent), svals[parents == parent])
        return w
    for k in wall:
        parent, s = loc[k]
        w[k] = normal_displacement(parent, s, pts["r"][k], pts["z"][k])
    return w


def build_neumann_data(sys: BIESystem, rho_l: float, normal_displacement=None,
                       rigid: RigidMotion | None = None) -> NeumannData:
    """Right-hand side of the pressure problem for a unit modal acceleration.

    ``normal_displacement(parent, s, r, z)`` returns the outward normal
    displacement of the wall; the planar free surface then moves by
    ``-(1/|sigma|) int w dS`` so the liquid volume is conserved.
    """
    rigid = rigid or RigidMotion()
    pts = node_points(sys)
    on_sigma = free_surface_mask(sys)
    w = wall_displacement(sys, normal_displacement)
    wall_w = surface_weights(sys, wetted_only=True)
    sig_w = _free_surface_weights(sys)
    area = sig_w.sum()
    if area <= 0.0:
        raise FluidError("no free surface")
    f_acc = 0.0
    if sys.m == 0 and normal_displacement is not None:
        f_acc = -float(wall_w @ w) / area
    F = np.where(on_sigma, f_acc, w)
    if sys.m == 0:
        F = F + rigid.axial * pts["nz"]
    elif sys.m == 1:
        F = F + rigid.lateral * pts["nr"]
        F = F + rigid.rocking * (pts["z"] * pts["nr"] - pts["r"] * pts["nz"])
    return NeumannData(sys.m, -rho_l * F, rho_l, f_acc, rigid)


# ---------------------------------------------------------------------------
# solution and evaluation
# ---------------------------------------------------------------------------

@dataclass
class PressureField:
    m: int
    density: DensityField
    system: BIESystem
    f: np.ndarray
    trace: np.ndarray
    shift: float = 0.0

    def at(self, probes) -> np.ndarray:
        return evaluate_pressure_at(self, probes)


def solve(sys: BIESystem, data: NeumannData | np.ndarray) -> PressureField:
    F = data.values if isinstance(data, NeumannData) else np.asarray(data, float)
    if F.shape != (sys.size,):
        raise FluidError("right-hand side does not match the system size")
    rhs = sys.node_scale() * F
    if sys.nullspace:
        B = _bordered(sys)
        sol = _dense_solve(B, np.append(rhs, 0.0), sys.condition)
        f = sol[:-1]
    else:
        f = _dense_solve(sys.matrix, rhs, sys.condition)
    trace = sys.single_layer @ f
    vals = [f[sys.offsets[i]:sys.offsets[i + 1]] for i in range(len(sys.pieces))]
    dens = DensityField(sys.m, [pg.grid for pg in sys.pieces],
                        [pg.exponents for pg in sys.pieces], vals)
    return PressureField(sys.m, dens, sys, f, trace)


def _dense_solve(A, b, cond):
    if not np.isfinite(cond) or cond > 1e14:
        raise FluidError(f"singular collocation matrix (condition estimate {cond:.3e})")
    return np.linalg.solve(A, b)


def density_at_nodes(field: PressureField) -> np.ndarray:
    return field.f / field.system.node_scale()


def pressure_rows(sys: BIESystem, probes) -> np.ndarray:
    """Rows R with p(probe) = R @ f for any density f of ``sys``.

    Points within 1e-8 of the boundary are evaluated as traces.  The
    quadrature is graded toward the nearest boundary point so nearly
    singular integrals stay accurate.
    """
    rows = []
    for p in probes:
        if isinstance(p, MeridianPoint):
            r0, z0 = p.r, p.z
        else:
            r0, z0 = float(p[0]), float(p[1])
        if not _inside(sys, r0, z0):
            raise FluidError(f"probe ({r0}, {z0}) outside the liquid domain")
        obs = dict(base=np.array([[r0], [z0]]), off=np.zeros((2, 1)), r=np.array([r0]),
                   tau=np.array([np.nan]), nr=np.zeros(1), nz=np.zeros(1))
        s_row, _ = _row_integrals(sys.m, sys.pieces, obs, 0, None, need_dn=False)
        rows.append(np.ravel(s_row))
    return np.array(rows).reshape(len(rows), sys.size)


def evaluate_pressure_at(field: PressureField, probes) -> np.ndarray:
    """Single-layer pressure at points of the closed domain D."""
    return pressure_rows(field.system, probes) @ field.f + field.shift


def _inside(sys: BIESystem, r0: float, z0: float, tol: float = 1e-8) -> bool:
    """Crossing-number test against the closed boundary of D (axis included)."""
    here = np.array([r0, z0])
    if min(_closest(pg, here, np.zeros(2))[1] for pg in sys.pieces) <= tol:
        return True
    tt = np.linspace(-1.0, 1.0, 400)
    P = np.concatenate([pg.seg.point(tt).T for pg in sys.pieces])
    if r0 < -tol:
        return False
    a, b = P, np.roll(P, -1, axis=0)
    straddle = (a[:, 1] > z0) != (b[:, 1] > z0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rx = a[:, 0] + (z0 - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    hits = np.count_nonzero(straddle & (rx > r0))
    if hits % 2 == 1:
        return True
    return r0 <= tol and P[:, 1].min() - 1e-12 <= z0 <= P[:, 1].max() + 1e-12


# ---------------------------------------------------------------------------
# added mass
# ---------------------------------------------------------------------------

@dataclass
class AddedMassMatrix:
    matrix: np.ndarray
    raw: np.ndarray
    fields: list
    free_surface: np.ndarray | None = None
    wetted_flux: np.ndarray | None = None

    @property
    def asymmetry(self) -> float:
        A = self.raw
        return float(np.max(np.abs(A - A.T)) / max(np.max(np.abs(A)), 1e-300))


def added_mass(sys: BIESystem, modes, rho_l: float) -> AddedMassMatrix:
    """A_jk = -int_{S0} p_k w_j dS for modes given as displacement callables.

    The raw quadrature matrix is kept for diagnostics; ``matrix`` is its
    symmetric part.
    """
    if sys.m != 0:
        raise FluidError("added mass is assembled for the axisymmetric harmonic")
    modes = list(modes)
    if not modes:
        raise FluidError("at least one mode is required")
    K = len(modes)
    wall = surface_weights(sys, wetted_only=True)
    W = np.zeros((sys.size, K))
    fields = []
    fk = np.zeros(K)
    for j, mode in enumerate(modes):
        W[:, j] = wall_displacement(sys, mode)
        data = build_neumann_data(sys, rho_l, mode)
        fk[j] = data.free_surface_accel
        fields.append(solve(sys, data))
    P = np.column_stack([fl.trace for fl in fields])
    raw = -(W * wall[:, None]).T @ P
    flux = wall @ W
    return AddedMassMatrix(0.5 * (raw + raw.T), raw, fields, fk, flux)
