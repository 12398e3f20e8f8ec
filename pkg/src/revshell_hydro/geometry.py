"""Meridians of compound shells of revolution.

A meridian is an ordered chain of line and circular-arc segments in the
(r, z) half-plane, starting on the axis at the bottom pole and running
upward.  Each segment is parameterized by ``t`` in [-1, 1], affine in
arclength.  The liquid fills the shell up to ``fill_level``; the wetted
part of the chain together with the free-surface radius bounds the
meridional fluid domain D, traversed counterclockwise (D on the left), so
the outward normal is the tangent rotated clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CONNECT_TOL = 1e-9
TWO_PI = 2.0 * np.pi


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class MeridianPoint:
    r: float
    z: float

    def __post_init__(self):
        if self.r < 0.0:
            raise GeometryError(f"negative radius r={self.r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.z])


@dataclass(frozen=True)
class SurfaceFrame:
    point: MeridianPoint
    tangent: tuple[float, float]
    normal: tuple[float, float]
    theta: float
    curvature: float = 0.0


def _rot_cw(v):
    return np.array([v[1], -v[0]])


class Segment:
    """One generating piece: ``kind`` is ``"line"`` or ``"arc"``.

    Arcs carry a center and an orientation; ``radius`` is signed, positive
    for a counterclockwise sweep (a wall bulging away from the liquid).
    """

    def __init__(self, kind: str, start, end, center=None, ccw: bool = True,
                 label: int = 0):
        self.kind = kind
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.label = label
        if kind == "line":
            d = self.end - self.start
            self._length = float(np.hypot(*d))
            if self._length == 0.0:
                raise GeometryError(f"segment {label}: zero length")
            self.center = None
            self.radius = np.inf
        elif kind == "arc":
            if center is None:
                raise GeometryError(f"segment {label}: arc needs a center")
            self.center = np.asarray(center, dtype=float)
            ra = np.hypot(*(self.start - self.center))
            rb = np.hypot(*(self.end - self.center))
            if ra <= 0.0 or abs(ra - rb) > CONNECT_TOL * max(1.0, ra):
                raise GeometryError(f"segment {label}: endpoints not equidistant from center")
            self._a0 = float(np.arctan2(*(self.start - self.center)[::-1]))
            a1 = float(np.arctan2(*(self.end - self.center)[::-1]))
            sweep = a1 - self._a0
            if ccw:
                sweep = sweep % TWO_PI
            else:
                sweep = -((-sweep) % TWO_PI)
            if sweep == 0.0:
                raise GeometryError(f"segment {label}: zero sweep")
            self._sweep = sweep
            self.radius = float(ra) if ccw else -float(ra)
            self._length = abs(sweep) * ra
        else:
            raise GeometryError(f"segment {label}: unknown kind {kind!r}")
        self.ccw = ccw

    def __repr__(self):
        return f"Segment({self.kind!r}, {self.start.tolist()} -> {self.end.tolist()})"

    @property
    def length(self) -> float:
        return self._length

    @property
    def curvature(self) -> float:
        return 0.0 if self.kind == "line" else 1.0 / self.radius

    @property
    def sweep(self) -> float:
        return self._sweep if self.kind == "arc" else 0.0

    # --- parameterization --------------------------------------------------
    def offset(self, u, from_end: bool = False) -> np.ndarray:
        """Position minus anchor endpoint, for ``u = 1 + t`` (or ``1 - t``).

        Returned shape (2, ...).  Computing offsets relative to an endpoint
        keeps full precision for points clustered at a junction.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == "line":
            d = self.end - self.start
            if from_end:
                return -0.5 * np.multiply.outer(d, u)
            return 0.5 * np.multiply.outer(d, u)
        sign = -1.0 if from_end else 1.0
        a_anchor = self._a0 + self._sweep if from_end else self._a0
        da = sign * 0.5 * u * self._sweep
        R = abs(self.radius)
        mid = a_anchor + 0.5 * da
        s = 2.0 * R * np.sin(0.5 * da)
        return np.array([-s * np.sin(mid), s * np.cos(mid)])

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        near_start = t <= 0.0
        a = self.start[:, None] + self.offset(np.ravel(1.0 + t))
        b = self.end[:, None] + self.offset(np.ravel(1.0 - t), from_end=True)
        out = np.where(np.ravel(near_start)[None, :], a, b)
        return out.reshape((2,) + t.shape)

    def tangent(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "line":
            d = (self.end - self.start) / self._length
            return np.multiply.outer(d, np.ones_like(t))
        ang = self._a0 + 0.5 * (1.0 + t) * self._sweep
        sg = 1.0 if self.ccw else -1.0
        return sg * np.array([-np.sin(ang), np.cos(ang)])

    def normal(self, t) -> np.ndarray:
        tt = self.tangent(t)
        return np.array([tt[1], -tt[0]])

    def arclength(self, t):
        return 0.5 * (np.asarray(t, dtype=float) + 1.0) * self._length

    def param_of_arclength(self, s):
        return 2.0 * np.asarray(s, dtype=float) / self._length - 1.0

    def sub(self, t_end: float, end_point=None) -> "Segment":
        """Initial part of the segment up to parameter ``t_end``."""
        end = self.point(t_end) if end_point is None else np.asarray(end_point, float)
        if self.kind == "line":
            return Segment("line", self.start, end, label=self.label)
        return Segment("arc", self.start, end, center=self.center, ccw=self.ccw,
                       label=self.label)

    def crossings(self, level: float) -> list[float]:
        """Parameters where z equals ``level`` (ascending)."""
        if self.kind == "line":
            z0, z1 = self.start[1], self.end[1]
            if z0 == z1:
                return []
            t = 2.0 * (level - z0) / (z1 - z0) - 1.0
            return [float(t)] if -1.0 <= t <= 1.0 else []
        R = abs(self.radius)
        s = (level - self.center[1]) / R
        if abs(s) > 1.0:
            return []
        base = [np.arcsin(s), np.pi - np.arcsin(s)]
        out = []
        for b in base:
            for k in range(-2, 3):
                ang = b + k * TWO_PI
                t = 2.0 * (ang - self._a0) / self._sweep - 1.0
                if -1.0 - 1e-12 <= t <= 1.0 + 1e-12:
                    out.append(float(np.clip(t, -1.0, 1.0)))
        return sorted(set(out))


def junction_angle(t_in, t_out) -> float:
    """Interior angle of D between an incoming and outgoing unit tangent.

    Left turns (toward the liquid) close the angle: alpha = pi - turn.
    A full reversal is reported as 2*pi (internal edge).
    """
    cross = t_in[0] * t_out[1] - t_in[1] * t_out[0]
    dot = t_in[0] * t_out[0] + t_in[1] * t_out[1]
    if abs(cross) < 1e-14 and dot < 0:
        return TWO_PI
    return float(np.pi - np.arctan2(cross, dot))


@dataclass
class BoundaryPiece:
    """A wetted piece of the meridian or the free-surface radius.

    ``parent`` is the 1-based meridian segment label, or 0 for the free
    surface; ``s_offset`` is the arclength of the piece start on its parent.
    ``ends`` records for each endpoint either ``"axis"`` or the interior
    angle of D at that node.
    """

    segment: Segment
    parent: int
    s_offset: float
    ends: tuple = ("axis", "axis")
    anchors: tuple = (0, 0)

    @property
    def is_free_surface(self) -> bool:
        return self.parent == 0

    @property
    def name(self) -> str:
        return "sigma" if self.parent == 0 else f"segment{self.parent}"


@dataclass
class Meridian:
    segments: list
    fill_level: float
    junction_angles: list = field(default_factory=list)
    wetted: list = field(default_factory=list)
    free_surface_radius: float = 0.0
    nodes: list = field(default_factory=list)

    @property
    def n_parts(self) -> int:
        return len(self.segments)

    def segment(self, index: int) -> Segment:
        if not 1 <= index <= len(self.segments):
            raise GeometryError(f"segment index {index} outside 1..{len(self.segments)}")
        return self.segments[index - 1]

    @property
    def internal_edges(self) -> list[int]:
        return [i + 1 for i, a in enumerate(self.junction_angles) if a == TWO_PI]

    def total_length(self) -> float:
        return float(sum(s.length for s in self.segments))


def _segment_from_spec(spec, start, label):
    kind = spec.get("kind", "line")
    end = np.asarray(spec["end"], dtype=float)
    if end[0] < 0:
        raise GeometryError(f"segment {label}: negative radius at end point")
    if kind == "line":
        return Segment("line", start, end, label=label)
    center = spec.get("center")
    ccw = bool(spec.get("ccw", True))
    return Segment("arc", start, end, center=center, ccw=ccw, label=label)


def build_meridian(segment_specs: Sequence[dict], fill_level: float,
                   start=(0.0, 0.0)) -> Meridian:
    """Chain segment specs into a meridian and locate the wetted part.

    Each spec is a mapping with ``kind`` (``"line"``/``"arc"``), ``end``
    (r, z) and, for arcs, ``center`` and optional ``ccw``.  A spec may also
    give ``start`` explicitly; it must then meet the previous end within
    ``CONNECT_TOL`` and is snapped onto it.
    """
    if not segment_specs:
        raise GeometryError("at least one segment is required")
    first = segment_specs[0].get("start", start)
    cur = np.asarray(first, dtype=float)
    if abs(cur[0]) > CONNECT_TOL:
        raise GeometryError("chain must start on the axis (r = 0)")
    cur[0] = 0.0
    segs = []
    for i, spec in enumerate(segment_specs, start=1):
        if "start" in spec:
            st = np.asarray(spec["start"], dtype=float)
            if np.hypot(*(st - cur)) > CONNECT_TOL:
                raise GeometryError(f"segment {i}: disconnected from segment {i - 1}")
        seg = _segment_from_spec(spec, cur, i)
        segs.append(seg)
        cur = seg.end

    angles = []
    for a, b in zip(segs[:-1], segs[1:]):
        angles.append(junction_angle(a.tangent(1.0), b.tangent(-1.0)))

    mer = Meridian(segments=segs, fill_level=float(fill_level), junction_angles=angles)
    _locate_wetted(mer)
    return mer


def _locate_wetted(mer: Meridian) -> None:
    H = mer.fill_level
    segs = mer.segments
    if H <= segs[0].start[1]:
        raise GeometryError(f"fill level {H} at or below the bottom z={segs[0].start[1]}")
    pieces = []
    s_end = None
    for k, seg in enumerate(segs):
        z_end = seg.end[1]
        cross = [t for t in seg.crossings(H) if t > -1.0]
        if z_end >= H and cross:
            t_c = cross[0]
            if t_c >= 1.0 - 1e-13:
                pieces.append((k, seg, 1.0))
            else:
                pieces.append((k, seg, t_c))
            s_end = k
            break
        pieces.append((k, seg, 1.0))
    if s_end is None:
        raise GeometryError(f"fill level {H} above the top of the shell")

    k, seg, t_c = pieces[-1]
    if t_c >= 1.0:
        top = seg.end.copy()
    else:
        top = seg.point(t_c).ravel()
        top[1] = H
    if top[0] <= CONNECT_TOL:
        raise GeometryError("fill level meets the axis; free surface is degenerate")

    wet = []
    node_pts = [segs[0].start.copy()]
    s_offsets = 0.0
    for j, (k, seg, t_c) in enumerate(pieces):
        piece_seg = seg if t_c >= 1.0 else seg.sub(t_c, top)
        left = "axis" if j == 0 else mer.junction_angles[k - 1]
        wet.append(BoundaryPiece(piece_seg, k + 1, 0.0, (left, None), (j, j + 1)))
        node_pts.append(piece_seg.end.copy())
    sigma = Segment("line", top, (0.0, H), label=0)
    last = wet[-1].segment
    corner = junction_angle(last.tangent(1.0), sigma.tangent(-1.0))
    wet[-1].ends = (wet[-1].ends[0], corner)
    for j in range(len(wet) - 1):
        wet[j].ends = (wet[j].ends[0], wet[j + 1].ends[0])
    n_nodes = len(node_pts)
    node_pts.append(np.array([0.0, H]))
    wet.append(BoundaryPiece(sigma, 0, 0.0, (corner, "axis"), (n_nodes - 1, n_nodes)))
    mer.wetted = wet
    mer.nodes = node_pts
    mer.free_surface_radius = float(top[0])


def frame_at(meridian: Meridian, segment_index: int, t: float) -> SurfaceFrame:
    if abs(t) > 1.0:
        raise GeometryError("parameter outside [-1, 1]")
    seg = meridian.segment(segment_index)
    return segment_frame(seg, t)


def segment_frame(seg: Segment, t: float) -> SurfaceFrame:
    p = seg.point(t)
    tg = seg.tangent(t)
    n = seg.normal(t)
    return SurfaceFrame(MeridianPoint(max(float(p[0]), 0.0), float(p[1])),
                        (float(tg[0]), float(tg[1])), (float(n[0]), float(n[1])),
                        float(np.arctan2(n[0], n[1])), seg.curvature)


def free_surface_area(meridian: Meridian) -> float:
    r = meridian.free_surface_radius
    if r <= 0.0:
        raise GeometryError("degenerate free surface")
    return float(np.pi * r * r)


def wetted_quadrature_curve(meridian: Meridian) -> list[tuple[int, tuple[float, float]]]:
    """(parent segment index, arclength span) for every boundary piece of D.

    The free surface is the final entry with index 0, its span measured from
    the wall inward to the axis.
    """
    return [(p.parent, (p.s_offset, p.s_offset + p.segment.length)) for p in meridian.wetted]


def resegment(meridian: Meridian, index: int, t_split: float = 0.0) -> Meridian:
    """Same shell with segment ``index`` split into two pieces at ``t_split``."""
    specs = []
    for i, seg in enumerate(meridian.segments, start=1):
        parts = [seg]
        if i == index:
            mid = seg.point(t_split).ravel()
            if seg.kind == "line":
                parts = [Segment("line", seg.start, mid), Segment("line", mid, seg.end)]
            else:
                parts = [Segment("arc", seg.start, mid, seg.center, seg.ccw),
                         Segment("arc", mid, seg.end, seg.center, seg.ccw)]
        for p in parts:
            spec = {"kind": p.kind, "end": tuple(p.end)}
            if p.kind == "arc":
                spec.update(center=tuple(p.center), ccw=p.ccw)
            specs.append(spec)
    return build_meridian(specs, meridian.fill_level, start=meridian.segments[0].start)


# --- ready-made shells -----------------------------------------------------

def cylinder_specs(radius: float, height: float) -> list[dict]:
    """Flat bottom disk plus cylindrical wall."""
    return [{"kind": "line", "end": (radius, 0.0)},
            {"kind": "line", "end": (radius, height)}]


def tank_specs() -> list[dict]:
    """Hemispherical bottom (R=1), cylinder (h=2) and cone (h=2) closing on the axis."""
    return [{"kind": "arc", "end": (1.0, 1.0), "center": (0.0, 1.0), "ccw": True},
            {"kind": "line", "end": (1.0, 3.0)},
            {"kind": "line", "end": (0.0, 5.0)}]


def stepped_cylinder_specs(r_inner: float = 1.0, r_outer: float = 2.0,
                           step: float = 1.0, height: float = 2.5) -> list[dict]:
    """Cylinder widening at z = step; the step corner has interior angle 3pi/2."""
    if not 0.0 < r_inner < r_outer:
        raise GeometryError("need 0 < r_inner < r_outer")
    return [{"kind": "line", "end": (r_inner, 0.0)},
            {"kind": "line", "end": (r_inner, step)},
            {"kind": "line", "end": (r_outer, step)},
            {"kind": "line", "end": (r_outer, height)}]
