"""Hydroelastic modal system: wet modes and transient pulse response.

The displacement is expanded in K mass-normalized dry modes,
``w = sum c_k w_k``, and the dynamic pressure in the modal pressures,
``p = sum c_k'' p_k + rho_l g f``.  Projecting the shell equations onto the
modes gives::

    (I + A) c'' + (Lambda + G) c = Q(t),

with the added mass A, the dry spectrum Lambda = diag(omega_k^2) and the
hydrostatic stiffness ``G_jk = rho_l g |sigma| f_j f_k`` of the planar free
surface (``f = sum c_k f_k`` is its elevation).  Time stepping uses the
average-acceleration Newmark scheme.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from . import elasticity as el
from . import fluid_solver as fs
from .geometry import Meridian, free_surface_area

log = logging.getLogger(__name__)

GRAVITY = 9.81


class DynamicsError(ValueError):
    pass


@dataclass
class Probe:
    """Output point (r, z) in the closed liquid domain or on the shell."""

    name: str
    r: float
    z: float

    @property
    def point(self) -> tuple[float, float]:
        return (self.r, self.z)


@dataclass
class CoupledSystem:
    shell: el.ShellModel
    modes: list
    omega2: np.ndarray
    added: fs.AddedMassMatrix | None
    rho_l: float
    g: float = GRAVITY
    load_vector: np.ndarray | None = None
    load: el.SurfaceLoad | None = None
    fluid: fs.BIESystem | None = None
    damping_ratio: float = 0.0
    sigma_area: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    _rigid: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def added_mass(self) -> np.ndarray:
        if self.added is None:
            return np.zeros((self.size, self.size))
        return self.added.matrix

    @property
    def free_surface_factors(self) -> np.ndarray:
        if self.added is None or self.added.free_surface is None:
            return np.zeros(self.size)
        return self.added.free_surface

    @property
    def mass(self) -> np.ndarray:
        return np.eye(self.size) + self.added_mass

    @property
    def gravity_stiffness(self) -> np.ndarray:
        f = self.free_surface_factors
        return self.rho_l * self.g * self.sigma_area * np.outer(f, f)

    @property
    def stiffness(self) -> np.ndarray:
        return np.diag(self.omega2) + self.gravity_stiffness

    @property
    def damping(self) -> np.ndarray:
        return np.diag(2.0 * self.damping_ratio * np.sqrt(np.maximum(self.omega2, 0.0)))


def build_coupled(shell: el.ShellModel, modes, meridian: Meridian | None = None,
                  rho_l: float = 0.0, g: float = GRAVITY, n: int = 32,
                  load: el.SurfaceLoad | None = None, damping_ratio: float = 0.0,
                  fluid: fs.BIESystem | None = None) -> CoupledSystem:
    """Project shell, liquid and load onto the given dry modes."""
    modes = list(modes)
    if not modes:
        raise DynamicsError("at least one mode is required")
    if rho_l < 0:
        raise DynamicsError("liquid density must be non-negative")
    om2 = np.array([m.omega2 for m in modes])
    added = None
    area = 0.0
    timings = {}
    if meridian is not None:
        t0 = time.perf_counter()
        if fluid is None:
            fluid = fs.assemble(meridian, 0, n)
        timings["fluid_assembly_s"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        added = fs.added_mass(fluid, modes, rho_l)
        timings["added_mass_s"] = time.perf_counter() - t0
        area = free_surface_area(meridian)
    Q = None
    if load is not None:
        Q = np.array([el._load_projection(shell, m.coefficients, load) for m in modes])
    sys = CoupledSystem(shell, modes, om2, added, rho_l, g, Q, load, fluid,
                        damping_ratio, area)
    sys.diagnostics.update(timings)
    if fluid is not None:
        sys.diagnostics["fluid_condition"] = fluid.condition
    if added is not None:
        sys.diagnostics["added_mass_asymmetry"] = added.asymmetry
    if Q is not None:
        sys.diagnostics["load_participation"] = load_participation(shell, modes, load)
    return sys


def load_participation(shell: el.ShellModel, modes, load: el.SurfaceLoad) -> float:
    """Share of the dry load 'mass' Q^T M^-1 Q captured by the retained modes."""
    Z = shell.basis.Z
    Qr = np.array([el._load_projection(shell, Z[:, k], load) for k in range(Z.shape[1])])
    full = float(Qr @ np.linalg.solve(shell.M, Qr))
    kept = sum(el._load_projection(shell, m.coefficients, load) ** 2 for m in modes)
    return kept / full if full > 0 else 1.0


def base_excitation(coupled: CoupledSystem) -> tuple[np.ndarray, fs.PressureField | None]:
    """Modal force per unit vertical base acceleration, and its liquid pressure.

    Displacements are taken relative to the container. The shell then
    carries the inertia ``-rho h a e_z`` and the liquid the pressure of a
    rigidly accelerated column, which loads the wall through ``int p w_j dS``.
    """
    if coupled._rigid is None:
        B = -np.array([el.axial_momentum(coupled.shell, m) for m in coupled.modes])
        p_rig = None
        if coupled.fluid is not None and coupled.rho_l > 0:
            sys = coupled.fluid
            data = fs.build_neumann_data(sys, coupled.rho_l, rigid=fs.RigidMotion(axial=1.0))
            p_rig = fs.solve(sys, data)
            wall = fs.surface_weights(sys, wetted_only=True)
            W = np.column_stack([fs.wall_displacement(sys, m) for m in coupled.modes])
            B = B + (W * wall[:, None]).T @ p_rig.trace
        coupled._rigid = (B, p_rig)
    return coupled._rigid


def wet_modes(coupled: CoupledSystem) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of (Lambda + G) phi = omega^2 (I + A) phi, ascending."""
    Mt = coupled.mass
    try:
        np.linalg.cholesky(Mt)
    except np.linalg.LinAlgError as exc:
        raise DynamicsError("combined mass I + A is not positive definite") from exc
    vals, vecs = eigh(coupled.stiffness, Mt)
    return [(float(v), vecs[:, k]) for k, v in enumerate(vals)]


# ---------------------------------------------------------------------------
# time integration
# ---------------------------------------------------------------------------

def time_grid(t_end: float, tau: float | None, period_min: float, dt: float | None = None,
              pulse_fraction: float = 20.0) -> np.ndarray:
    """Graded time grid: steps <= tau/pulse_fraction inside [0, 10 tau], then <= T_min/20."""
    if t_end <= 0:
        raise DynamicsError("t_end must be positive")
    main = period_min / 20.0 if np.isfinite(period_min) else t_end / 200.0
    if dt is not None:
        if dt <= 0:
            raise DynamicsError("time step must be positive")
        main = min(main, dt)
    pieces = [np.zeros(1)]
    t0 = 0.0
    if tau is not None and tau > 0:
        fine = min(tau / pulse_fraction, main)
        t_pulse = min(10.0 * tau, t_end)
        k = int(np.ceil(t_pulse / fine - 1e-9))
        pieces.append(np.linspace(0.0, t_pulse, k + 1)[1:])
        t0 = t_pulse
        # geometric transition from the pulse step to the main step
        h = fine
        while h < main and t0 < t_end:
            h = min(2.0 * h, main)
            t0 = min(t0 + h, t_end)
            pieces.append(np.array([t0]))
    if t0 < t_end:
        k = int(np.ceil((t_end - t0) / main - 1e-9))
        pieces.append(np.linspace(t0, t_end, k + 1)[1:])
    return np.concatenate(pieces)


@dataclass
class TransientResult:
    times: np.ndarray
    c: np.ndarray
    cdot: np.ndarray
    cddot: np.ndarray
    free_surface: np.ndarray
    displacement: dict = field(default_factory=dict)
    pressure: dict = field(default_factory=dict)
    energy: np.ndarray | None = None
    timings: dict = field(default_factory=dict)
    base_acceleration: np.ndarray | None = None


def newmark(M, C, K, force, times, c0=None, v0=None):
    """Average-acceleration Newmark integration on an arbitrary time grid.

    ``force(t)`` returns the load vector.  Returns (c, cdot, cddot) sampled
    on ``times``; the acceleration is the scheme's own state.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DynamicsError("time grid must be strictly increasing with >= 2 points")
    n = M.shape[0]
    c = np.zeros((times.size, n))
    v = np.zeros((times.size, n))
    a = np.zeros((times.size, n))
    c[0] = 0.0 if c0 is None else c0
    v[0] = 0.0 if v0 is None else v0
    a[0] = np.linalg.solve(M, force(times[0]) - C @ v[0] - K @ c[0])
    cache = {}
    for i in range(times.size - 1):
        # steps equal to 12 digits share one factorization and one h, so the
        # scheme stays exactly energy conserving in the free phase
        key = float(f"{times[i + 1] - times[i]:.12e}")
        if key not in cache:
            cache[key] = np.linalg.inv(4.0 / key**2 * M + 2.0 / key * C + K)
        Keff_inv = cache[key]
        h = key
        rhs = (force(times[i + 1])
               + M @ (4.0 / h**2 * c[i] + 4.0 / h * v[i] + a[i])
               + C @ (2.0 / h * c[i] + v[i]))
        c[i + 1] = Keff_inv @ rhs
        v[i + 1] = 2.0 / h * (c[i + 1] - c[i]) - v[i]
        a[i + 1] = 4.0 / h**2 * (c[i + 1] - c[i]) - 4.0 / h * v[i] - a[i]
    return c, v, a


def modal_energy(M, K, c, v) -> np.ndarray:
    return 0.5 * np.einsum("ti,ij,tj->t", v, M, v) + 0.5 * np.einsum("ti,ij,tj->t", c, K, c)


def integrate_pulse(coupled: CoupledSystem, q0: float, tau: float, t_end: float,
                    dt: float | None = None, probes=(), pulse_fraction: float = 20.0,
                    times=None, base_acceleration=None) -> TransientResult:
    """Response to the surface pulse q(t) = q0 exp(-t/tau) from rest.

    ``base_acceleration(t)``, if given, is a prescribed vertical acceleration
    of the container added to the pulse.
    """
    if coupled.load_vector is None:
        raise DynamicsError("the coupled system carries no load")
    if tau <= 0:
        raise DynamicsError("pulse time constant must be positive")
    t_start = time.perf_counter()
    M, C, K = coupled.mass, coupled.damping, coupled.stiffness
    if times is None:
        wmax2 = max(w for w, _ in wet_modes(coupled))
        period_min = 2.0 * np.pi / np.sqrt(wmax2) if wmax2 > 0 else np.inf
        times = time_grid(t_end, tau, period_min, dt, pulse_fraction)
    Q0 = coupled.load_vector

    B = base_excitation(coupled)[0] if base_acceleration is not None else None

    def force(t):
        out = Q0 * (q0 * np.exp(-t / tau))
        if B is not None:
            out = out + B * float(base_acceleration(t))
        return out

    c, v, a = newmark(M, C, K, force, times)
    res = TransientResult(times, c, v, a, c @ coupled.free_surface_factors,
                          energy=modal_energy(M, K, c, v))
    if base_acceleration is not None:
        res.base_acceleration = np.array([float(base_acceleration(t)) for t in times])
    res.timings["integration_s"] = time.perf_counter() - t_start
    if probes:
        reconstruct_probes(coupled, res, probes)
    return res


def _shell_location(meridian: Meridian, r: float, z: float, tol: float = 1e-9):
    """(segment label, arclength) of a point lying on the shell, else None."""
    best = None
    for seg in meridian.segments:
        tt = np.linspace(-1.0, 1.0, 2001)
        p = seg.point(tt)
        d = np.hypot(p[0] - r, p[1] - z)
        k = int(np.argmin(d))
        lo, hi = tt[max(k - 1, 0)], tt[min(k + 1, tt.size - 1)]
        for _ in range(60):
            a = lo + 0.382 * (hi - lo)
            b = lo + 0.618 * (hi - lo)
            da = np.hypot(*(seg.point(a) - (r, z)))
            db = np.hypot(*(seg.point(b) - (r, z)))
            if da < db:
                hi = b
            else:
                lo = a
        tc = 0.5 * (lo + hi)
        dc = float(np.hypot(*(seg.point(tc) - (r, z))))
        if dc <= tol * max(1.0, abs(r) + abs(z)) and (best is None or dc < best[2]):
            best = (seg.label, float(seg.arclength(tc)), dc)
    return None if best is None else best[:2]


def reconstruct_probes(coupled: CoupledSystem, res: TransientResult, probes) -> None:
    """Probe displacement (shell points) and pressure (liquid points)."""
    mer = coupled.shell.meridian
    for pr in probes:
        loc = _shell_location(mer, pr.r, pr.z)
        if loc is not None:
            wk = np.array([m.normal_displacement(loc[0], loc[1]) for m in coupled.modes])
            res.displacement[pr.name] = res.c @ wk
        if coupled.added is not None and coupled.fluid is not None:
            fields = coupled.added.fields
            F = np.column_stack([fl.f for fl in fields])
            shift = np.array([fl.shift for fl in fields])
            pk = fs.pressure_rows(fields[0].system, [pr.point])[0] @ F + shift
            p = res.cddot @ pk + coupled.rho_l * coupled.g * res.free_surface
            if res.base_acceleration is not None:
                p_rig = base_excitation(coupled)[1]
                p = p + res.base_acceleration * fs.evaluate_pressure_at(p_rig, [pr.point])[0]
            res.pressure[pr.name] = p


# ---------------------------------------------------------------------------
# analysis classes
# ---------------------------------------------------------------------------

ANALYSIS_CLASSES = {
    "a": "static",
    "b": "dry modes",
    "c": "wet modes",
    "d": "dry forced",
    "e": "wet forced",
}


@dataclass
class AnalysisOutcome:
    kind: str
    shell: el.ShellModel
    dry: list = field(default_factory=list)
    wet: list = field(default_factory=list)
    static: np.ndarray | None = None
    transient: TransientResult | None = None
    coupled: CoupledSystem | None = None
    timings: dict = field(default_factory=dict)


def analysis_mode_dispatch(config) -> AnalysisOutcome:
    """Run the pipeline named by ``config.analysis`` (classes a-e).

    ``config`` provides ``meridian``, ``material``, ``bc``, ``degree``,
    ``modes``, ``n``, ``liquid`` (rho_l, g or None), ``load`` (q0, tau,
    footprint or None), ``t_end``, ``dt``, ``damping`` and ``probes``.
    """
    kind = config.analysis
    if kind not in ANALYSIS_CLASSES:
        raise DynamicsError(f"unknown analysis class {kind!r}; expected one of a-e")
    if kind in ("c", "e") and config.liquid is None:
        raise DynamicsError(f"class {kind} ({ANALYSIS_CLASSES[kind]}) needs a liquid block")
    if kind in ("a", "d", "e") and config.load is None:
        raise DynamicsError(f"class {kind} ({ANALYSIS_CLASSES[kind]}) needs a load block")
    timings = {}
    t0 = time.perf_counter()
    shell = el.assemble_shell(config.meridian, config.material, config.degree, config.bc)
    timings["shell_assembly_s"] = time.perf_counter() - t0
    out = AnalysisOutcome(ANALYSIS_CLASSES[kind], shell, timings=timings)
    load = None
    if config.load is not None:
        load = el.SurfaceLoad(el.exponential_pulse(config.load.q0, config.load.tau),
                              segments=config.load.segments, below=config.load.below)
    if kind == "a":
        out.static = el.static_solution(shell, load, 0.0)
        return out
    t0 = time.perf_counter()
    nmodes = min(config.modes, shell.basis.size)
    out.dry = el.dry_modes(shell, nmodes)
    timings["dry_modes_s"] = time.perf_counter() - t0
    if kind == "b":
        return out
    wet = kind in ("c", "e")
    rho_l = config.liquid.rho_l if wet else 0.0
    g = config.liquid.g if wet else GRAVITY
    coupled = build_coupled(shell, out.dry, config.meridian if wet else None, rho_l, g,
                            config.n, load, config.damping)
    for k in ("fluid_assembly_s", "added_mass_s"):
        if k in coupled.diagnostics:
            timings[k] = coupled.diagnostics[k]
    out.coupled = coupled
    if wet:
        out.wet = wet_modes(coupled)
    if kind in ("d", "e"):
        out.transient = integrate_pulse(coupled, config.load.q0, config.load.tau,
                                        config.t_end, config.dt, config.probes)
        timings["integration_s"] = out.transient.timings["integration_s"]
    return out
