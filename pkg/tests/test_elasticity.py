import numpy as np
import pytest

from revshell_hydro import elasticity as el
from revshell_hydro.geometry import build_meridian

R, L = 1.0, 5.0


def segmented_cylinder(parts=5):
    """Bottom plate plus a cylinder of length L split into equal parts."""
    specs = [{"kind": "line", "end": (R, 0.0)}]
    specs += [{"kind": "line", "end": (R, L * (k + 1) / parts)} for k in range(parts)]
    return build_meridian(specs, L / 2)


@pytest.fixture(scope="module")
def cyl():
    return segmented_cylinder()


def test_material_validation():
    with pytest.raises(el.ShellError, match="Poisson"):
        el.MaterialSpec(2e11, 0.5, 7800, 0.01)
    with pytest.raises(el.ShellError):
        el.MaterialSpec(-1.0, 0.3, 7800, 0.01)
    with pytest.raises(el.ShellError):
        el.MaterialSpec(2e11, 0.3, 7800, 0.0)
    m = el.MaterialSpec(2e11, 0.3, 7800, 0.01)
    assert m.bending_stiffness == pytest.approx(m.membrane_stiffness * 0.01**2 / 12)


def test_thick_shell_warns(tank):
    with pytest.warns(UserWarning):
        el.assemble_shell(tank, el.MaterialSpec(2e11, 0.3, 7800, 0.2), 6, "b")


def test_basis_validation(cyl):
    with pytest.raises(el.ShellError):
        el.build_basis(cyl, 2, "b")
    with pytest.raises(el.ShellError):
        el.build_basis(cyl, 8, "clamped")


def test_uniform_expansion_energy(cyl, steel):
    m = el.assemble_shell(cyl, steel, 8, "free")
    x = np.zeros(m.basis.full_size)
    for i in range(1, 6):
        x[m.basis.block(i).start + 9] = 1.0  # P0 coefficient of w
    assert m.strain_energy(x) == pytest.approx(steel.membrane_stiffness * np.pi * L / R, rel=1e-12)


def test_rigid_translation_has_no_energy(cyl, steel):
    m = el.assemble_shell(cyl, steel, 8, "free")
    x = np.zeros(m.basis.full_size)
    for i, seg in enumerate(cyl.segments):
        b = m.basis.block(i)
        tr, tz = seg.tangent(0.0)
        x[b.start], x[b.start + 9] = tz, -tr  # unit axial translation
    assert abs(m.basis.constraints @ x).max() < 1e-12
    assert m.strain_energy(x) < 1e-12 * steel.membrane_stiffness


def test_free_shell_has_zero_frequency(cyl, steel):
    m = el.assemble_shell(cyl, steel, 8, "free")
    modes = el.dry_modes(m, 2)
    assert modes[0].omega < 1e-4 * modes[1].omega


def test_modes_mass_orthonormal(tank_shell, tank_modes):
    X = np.column_stack([md.coefficients for md in tank_modes])
    G = X.T @ tank_shell.M_full @ X
    assert np.allclose(G, np.eye(len(tank_modes)), atol=1e-10)
    om = [md.omega for md in tank_modes]
    assert np.all(np.diff(om) > 0)


def test_mode_count_limit(tank_shell):
    with pytest.raises(el.ShellError):
        el.dry_modes(tank_shell, tank_shell.basis.size + 1)


def test_fixed_segment_does_not_move(tank_shell, tank_modes):
    t = np.linspace(-1, 1, 11)
    for md in tank_modes[:3]:
        for what in ("radial", "axial", "rotation"):
            assert np.abs(tank_shell.evaluate(md.coefficients, 1, t, what)).max() < 1e-10


def test_junction_continuity(tank_shell, tank_modes):
    x = tank_modes[2].coefficients
    for i in (2,):
        for what in ("radial", "axial", "rotation"):
            a = tank_shell.evaluate(x, i, [1.0], what)
            b = tank_shell.evaluate(x, i + 1, [-1.0], what)
            assert a == pytest.approx(b, abs=1e-10 * np.abs(x).max())


def test_pressurized_cylinder_membrane(cyl):
    # nu = 0: far from the clamp w = p R^2 / (E h)
    mat = el.MaterialSpec(2e11, 0.0, 7800, 0.01)
    m = el.assemble_shell(cyl, mat, 14, "b")
    load = el.SurfaceLoad(lambda t: 1e5 + 0 * t)
    x = el.static_solution(m, load)
    w_mid = m.evaluate(x, 4, [0.0])[0]  # z = 2.5
    assert w_mid == pytest.approx(1e5 * R**2 / (mat.E * mat.h), rel=1e-4)


def test_static_junction_force_jump_converges(cyl, steel):
    # junction 1 carries the clamp reaction; the free junction at z = 1 must
    # balance in the limit
    load = el.SurfaceLoad(lambda t: 1e5 + 0 * t)
    jumps = []
    for P in (8, 12, 16):
        m = el.assemble_shell(cyl, steel, P, "b")
        x = el.static_solution(m, load)
        jumps.append(np.linalg.norm(el.junction_force_balance(m, x)[1]["jump"][:2]))
    assert jumps[0] > jumps[1] > jumps[2]
    assert jumps[2] < 1e-4 * 1e5 * R


def test_load_footprint_below_level(cyl, steel):
    m = el.assemble_shell(cyl, steel, 8, "b")
    mode = el.dry_modes(m, 1)[0]
    full = el.SurfaceLoad(lambda t: 1.0 + 0 * t)
    low = el.SurfaceLoad(lambda t: 1.0 + 0 * t, below=L / 2)
    high = el.SurfaceLoad(lambda t: 1.0 + 0 * t, segments=(4, 5, 6))
    f_full, f_low, f_high = (el.modal_force(m, mode, ld) for ld in (full, low, high))
    # z = L/2 is the middle of segment 4
    f4 = el.modal_force(m, mode, el.SurfaceLoad(lambda t: 1.0 + 0 * t, segments=(4,), below=L / 2))
    assert f_full == pytest.approx(f_low + f_high - f4, rel=1e-10)


def test_exponential_pulse():
    q = el.exponential_pulse(2.0, 0.5)
    assert q(1.0) == pytest.approx(2.0 * np.exp(-2.0))
    with pytest.raises(el.ShellError):
        el.exponential_pulse(1.0, 0.0)


def test_breathing_fraction_of_uniform_expansion(cyl, steel):
    m = el.assemble_shell(cyl, steel, 8, "free")
    x = np.zeros(m.basis.full_size)
    for i in range(1, 6):
        x[m.basis.block(i).start + 9] = 1.0
    assert el.breathing_fraction(m, el.ModeShape(m, x)) == pytest.approx(1.0)
