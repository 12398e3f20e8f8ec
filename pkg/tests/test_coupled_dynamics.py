from types import SimpleNamespace

import numpy as np
import pytest

from revshell_hydro import coupled_dynamics as cd
from revshell_hydro import elasticity as el
from revshell_hydro import fluid_solver as fs


def pulse_response(omega, q0, tau, t):
    """Undamped 1-DOF response to q0 exp(-t/tau) from rest."""
    a = 1.0 / tau
    return q0 / (omega**2 + a**2) * (np.exp(-a * t) - np.cos(omega * t)
                                     + a / omega * np.sin(omega * t))


@pytest.fixture(scope="module")
def tank_fluid(tank):
    return fs.assemble(tank, 0, 24)


@pytest.fixture(scope="module")
def coupled(tank, tank_shell, tank_modes, tank_fluid):
    load = el.SurfaceLoad(el.exponential_pulse(1e5, 14.2e-6), below=4.0)
    return cd.build_coupled(tank_shell, tank_modes[:6], tank, 1000.0, load=load,
                            fluid=tank_fluid)


def test_newmark_second_order():
    om, q0, tau = 2.0 * np.pi, 1.0, 0.05
    errs = []
    for h in (1e-2, 5e-3):
        t = np.arange(0.0, 2.0 + h / 2, h)
        c, _, _ = cd.newmark(np.eye(1), np.zeros((1, 1)), np.eye(1) * om**2,
                             lambda s: np.array([q0 * np.exp(-s / tau)]), t)
        errs.append(np.max(np.abs(c[:, 0] - pulse_response(om, q0, tau, t))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_newmark_conserves_energy_in_free_vibration(rng):
    A = rng.normal(size=(4, 4))
    M = A @ A.T + 4 * np.eye(4)
    B = rng.normal(size=(4, 4))
    K = B @ B.T + np.eye(4)
    t = np.linspace(0.0, 30.0, 3001)
    c, v, _ = cd.newmark(M, np.zeros((4, 4)), K, lambda s: np.zeros(4), t,
                         c0=np.ones(4), v0=np.zeros(4))
    e = cd.modal_energy(M, K, c, v)
    assert np.ptp(e) < 1e-10 * e[0]


def test_newmark_rejects_bad_grid():
    with pytest.raises(cd.DynamicsError):
        cd.newmark(np.eye(1), np.zeros((1, 1)), np.eye(1), lambda s: np.zeros(1), [0.0, 0.0])


def test_time_grid_steps():
    tau, T = 1e-5, 1e-3
    t = cd.time_grid(0.01, tau, T)
    h = np.diff(t)
    assert t[0] == 0.0 and t[-1] == pytest.approx(0.01)
    assert np.all(h > 0)
    assert h[t[1:] <= 10 * tau].max() <= tau / 20 * (1 + 1e-9)
    assert h.max() <= T / 20 * (1 + 1e-9)
    # graded transition doubles at most
    assert np.all(h[1:] / h[:-1] <= 2.0 + 1e-9)


def test_time_grid_validation():
    with pytest.raises(cd.DynamicsError):
        cd.time_grid(-1.0, 1e-5, 1e-3)
    with pytest.raises(cd.DynamicsError):
        cd.time_grid(1.0, 1e-5, 1e-3, dt=0.0)


def test_dry_limit(tank_shell, tank_modes):
    cs = cd.build_coupled(tank_shell, tank_modes[:4])
    assert np.array_equal(cs.mass, np.eye(4))
    assert np.array_equal(cs.stiffness, np.diag([m.omega2 for m in tank_modes[:4]]))
    wet = cd.wet_modes(cs)
    assert [w for w, _ in wet] == pytest.approx([m.omega2 for m in tank_modes[:4]], rel=1e-14)


def test_wet_frequencies_lower(coupled, tank_modes):
    wet = [w for w, _ in cd.wet_modes(coupled)]
    dry = [m.omega2 for m in tank_modes[:6]]
    assert np.all(np.array(wet) <= np.array(dry))


def test_gravity_stiffness_rank_one(coupled):
    G = coupled.gravity_stiffness
    f = coupled.free_surface_factors
    assert G == pytest.approx(1000.0 * cd.GRAVITY * np.pi * 0.25 * np.outer(f, f))
    assert np.linalg.matrix_rank(G, tol=1e-12 * np.abs(G).max()) == 1


def test_load_participation_bounded(coupled):
    p = coupled.diagnostics["load_participation"]
    assert 0.0 < p <= 1.0


def test_pulse_integration_and_probes(coupled):
    probes = [cd.Probe("wall", 1.0, 2.0), cd.Probe("inner", 0.4, 0.8)]
    res = cd.integrate_pulse(coupled, 1e5, 14.2e-6, 2e-3, probes=probes)
    assert set(res.displacement) == {"wall"}
    assert set(res.pressure) == {"wall", "inner"}
    # displacement is the modal sum at the probe
    wk = np.array([m.normal_displacement(2, 1.0) for m in coupled.modes])
    assert res.displacement["wall"] == pytest.approx(res.c @ wk)
    assert np.all(np.isfinite(res.pressure["inner"]))
    assert res.free_surface == pytest.approx(res.c @ coupled.free_surface_factors)


def test_pulse_requires_load(tank_shell, tank_modes):
    cs = cd.build_coupled(tank_shell, tank_modes[:2])
    with pytest.raises(cd.DynamicsError):
        cd.integrate_pulse(cs, 1e5, 1e-5, 1e-3)


def test_damping_matrix(tank_shell, tank_modes):
    cs = cd.build_coupled(tank_shell, tank_modes[:3], damping_ratio=0.02)
    assert np.diag(cs.damping) == pytest.approx([0.04 * m.omega for m in tank_modes[:3]])


def _config(tank, steel, kind, **kw):
    base = dict(analysis=kind, meridian=tank, material=steel, degree=10, bc="b", modes=4,
                n=16, liquid=SimpleNamespace(rho_l=1000.0, g=9.81),
                load=SimpleNamespace(q0=1e5, tau=14.2e-6, segments=None, below=4.0),
                t_end=1e-3, dt=None, damping=0.0, probes=[cd.Probe("wall", 1.0, 2.0)])
    base.update(kw)
    return SimpleNamespace(**base)


@pytest.mark.parametrize("kind", ["a", "b", "c", "d", "e"])
def test_dispatch_classes(tank, steel, kind):
    out = cd.analysis_mode_dispatch(_config(tank, steel, kind))
    assert out.kind == cd.ANALYSIS_CLASSES[kind]
    assert (out.static is not None) == (kind == "a")
    assert bool(out.dry) == (kind != "a")
    assert bool(out.wet) == (kind in ("c", "e"))
    assert (out.transient is not None) == (kind in ("d", "e"))


def test_dispatch_rejects_missing_blocks(tank, steel):
    with pytest.raises(cd.DynamicsError):
        cd.analysis_mode_dispatch(_config(tank, steel, "e", liquid=None))
    with pytest.raises(cd.DynamicsError):
        cd.analysis_mode_dispatch(_config(tank, steel, "d", load=None))
    with pytest.raises(cd.DynamicsError):
        cd.analysis_mode_dispatch(_config(tank, steel, "z"))


def test_heavier_liquid_lowers_first_wet_frequency(tank, tank_shell, tank_modes, tank_fluid):
    first = []
    for rho in (500.0, 1000.0, 2000.0):
        cs = cd.build_coupled(tank_shell, tank_modes[:6], tank, rho, fluid=tank_fluid)
        first.append(cd.wet_modes(cs)[0][0])
    assert first[0] > first[1] > first[2]


def test_zero_load_gives_zero_response(coupled):
    res = cd.integrate_pulse(coupled, 0.0, 14.2e-6, 1e-3,
                             probes=[cd.Probe("wall", 1.0, 2.0)])
    assert not np.any(res.c) and not np.any(res.cddot)
    assert not np.any(res.free_surface)
    assert not np.any(res.pressure["wall"])


def test_coupled_step_refinement_second_order(coupled):
    # uniform grids so the step ratio is exact; compare at a common end time
    t_end = 2e-4
    end = {}
    for steps in (200, 400, 3200):
        times = np.linspace(0.0, t_end, steps + 1)
        end[steps] = cd.integrate_pulse(coupled, 1e5, 14.2e-6, t_end, times=times).c[-1]
    e1 = np.linalg.norm(end[200] - end[3200])
    e2 = np.linalg.norm(end[400] - end[3200])
    assert 3.0 < e1 / e2 < 5.0


def test_base_excitation_liquid_column(tank, tank_shell, tank_modes):
    coupled = cd.build_coupled(tank_shell, tank_modes[:6], tank, 1000.0, n=48)
    B, p_rig = cd.base_excitation(coupled)
    # rigidly accelerated column: p = rho (H - z) with zero mean on sigma
    pts = [(0.3, 1.0), (0.8, 2.5), (0.2, 3.5)]
    expect = [1000.0 * (4.0 - z) for _, z in pts]
    assert fs.evaluate_pressure_at(p_rig, pts) == pytest.approx(expect, rel=1e-7)
    shell = [-el.axial_momentum(coupled.shell, m) for m in coupled.modes]
    fluid = []
    for m in coupled.modes:
        total = 0.0
        for label in (1, 2, 3):
            seg = tank.segment(label)
            x, w = np.polynomial.legendre.leggauss(200)
            lo, hi = -1.0, 1.0
            if seg.end[1] > 4.0:
                hi = seg.crossings(4.0)[0]
            t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            r, z = seg.point(t)
            wn = m.field(label, seg.arclength(t))
            jac = 0.25 * (hi - lo) * seg.length * w
            total += np.sum(jac * 2.0 * np.pi * r * 1000.0 * (4.0 - z) * wn)
        fluid.append(total)
    scale = np.abs(np.array(fluid)).max()
    assert np.abs(B - np.array(shell) - np.array(fluid)).max() < 1e-5 * scale


def test_base_excitation_adds_linearly(coupled):
    times = np.linspace(0.0, 5e-4, 401)
    base = cd.integrate_pulse(coupled, 0.0, 14.2e-6, 5e-4, times=times,
                              base_acceleration=lambda t: 9.81)
    pulse = cd.integrate_pulse(coupled, 1e5, 14.2e-6, 5e-4, times=times)
    both = cd.integrate_pulse(coupled, 1e5, 14.2e-6, 5e-4, times=times,
                              base_acceleration=lambda t: 9.81,
                              probes=[cd.Probe("inner", 0.4, 0.8)])
    assert both.c == pytest.approx(base.c + pulse.c, rel=1e-9, abs=1e-15)
    assert np.any(base.c)
    assert np.all(np.isfinite(both.pressure["inner"]))
