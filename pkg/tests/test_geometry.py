import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revshell_hydro.geometry import (GeometryError, build_meridian, cylinder_specs,
                                     frame_at, free_surface_area, tank_specs,
                                     resegment, stepped_cylinder_specs)


def test_tank_junction_angles(tank):
    # smooth sphere-cylinder junction, cone opening outward
    a1, a2 = tank.junction_angles
    assert a1 == pytest.approx(np.pi)
    assert a2 == pytest.approx(np.pi - np.arctan(0.5))


def test_tank_wetted_pieces(tank):
    parents = [p.parent for p in tank.wetted]
    assert parents == [1, 2, 3, 0]
    assert tank.wetted[-1].is_free_surface
    assert tank.free_surface_radius == pytest.approx(0.5)
    assert free_surface_area(tank) == pytest.approx(np.pi * 0.25)
    # the cone is cut at the fill level
    assert tank.wetted[2].segment.end == pytest.approx([0.5, 4.0])


def test_frame_on_cylinder(tank):
    fr = frame_at(tank, 2, 0.0)
    assert (fr.point.r, fr.point.z) == pytest.approx((1.0, 2.0))
    assert fr.normal == pytest.approx((1.0, 0.0))
    assert fr.curvature == 0.0


def test_sphere_curvature_and_normal(tank):
    seg = tank.segment(1)
    t = np.linspace(-0.9, 0.9, 7)
    p = seg.point(t)
    n = seg.normal(t)
    # outward normal points away from the centre (0, 1)
    assert np.allclose(n, (p - np.array([[0.0], [1.0]])), atol=1e-12)
    assert abs(seg.curvature) == pytest.approx(1.0)
    assert seg.length == pytest.approx(np.pi / 2)


def test_arclength_inverse(tank):
    seg = tank.segment(3)
    s = np.linspace(0.0, seg.length, 9)
    assert seg.arclength(seg.param_of_arclength(s)) == pytest.approx(s)


def test_disconnected_chain_rejected():
    specs = [{"kind": "line", "end": (1.0, 0.0)},
             {"kind": "line", "start": (1.2, 0.0), "end": (1.2, 1.0)}]
    with pytest.raises(GeometryError, match="disconnected"):
        build_meridian(specs, 0.5)


def test_chain_must_start_on_axis():
    with pytest.raises(GeometryError):
        build_meridian(cylinder_specs(1.0, 2.0), 1.0, start=(0.5, 0.0))


def test_stepped_cylinder_reentrant_corner():
    mer = build_meridian(stepped_cylinder_specs(), 2.0)
    assert mer.junction_angles[1] == pytest.approx(1.5 * np.pi)


def test_resegment_preserves_shape(tank):
    mer = resegment(tank, 2, 0.0)
    assert len(mer.segments) == 4
    assert mer.junction_angles[1] == pytest.approx(np.pi)
    assert mer.free_surface_radius == pytest.approx(tank.free_surface_radius)


@settings(max_examples=30, deadline=None)
@given(radius=st.floats(0.2, 3.0), height=st.floats(0.5, 4.0), frac=st.floats(0.1, 0.9))
def test_cylinder_fill_properties(radius, height, frac):
    mer = build_meridian(cylinder_specs(radius, height), frac * height)
    assert mer.free_surface_radius == pytest.approx(radius)
    wall = [p for p in mer.wetted if p.parent == 2][0]
    assert wall.segment.length == pytest.approx(frac * height)
    assert mer.junction_angles == pytest.approx([np.pi / 2])
