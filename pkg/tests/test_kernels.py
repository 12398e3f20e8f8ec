import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma, hyp2f1

from revshell_hydro import kernels as kn
from revshell_hydro.geometry import MeridianPoint, SurfaceFrame

pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")


_BREAKS = [1e-4, 1e-3, 1e-2, 0.1]


def brute_ring(m, r, z, r0, z0):
    """(1/2pi) int cos(m psi)/|x - y| dpsi by adaptive quadrature."""
    def f(psi):
        d2 = r * r + r0 * r0 - 2.0 * r * r0 * np.cos(psi) + (z - z0) ** 2
        return np.cos(m * psi) / np.sqrt(d2)
    val, _ = quad(f, 0.0, np.pi, epsabs=0.0, epsrel=1e-13, limit=400, points=_BREAKS)
    return val / np.pi


def q_integral(m, chi):
    # Q_{m-1/2}(chi) = int_0^pi cos(m t) / sqrt(2 (chi - cos t)) dt
    return quad(lambda t: np.cos(m * t) / np.sqrt(2.0 * (chi - np.cos(t))), 0.0, np.pi,
                epsabs=0.0, epsrel=1e-13, limit=400, points=_BREAKS)[0]


def p_integral(m, chi):
    # Laplace integral for P_{m-1/2}
    s = np.sqrt(chi * chi - 1.0)
    return quad(lambda t: (chi + s * np.cos(t)) ** (m - 0.5), 0.0, np.pi,
                epsabs=0.0, epsrel=1e-13)[0] / np.pi


def q_hypergeometric(m, chi):
    return (np.sqrt(np.pi) * gamma(m + 0.5) / (gamma(m + 1) * (2 * chi) ** (m + 0.5))
            * hyp2f1((2 * m + 3) / 4, (2 * m + 1) / 4, m + 1, 1 / chi**2))


@pytest.mark.parametrize("chim1", [0.3, 2.0, 40.0, 1e3])
def test_q_half_matches_hypergeometric(chim1):
    q = kn.legendre_q_half(8, chim1)
    ref = q_hypergeometric(np.arange(9), 1.0 + chim1)
    assert np.allclose(q, ref, rtol=1e-12, atol=0.0)


@pytest.mark.parametrize("chim1", [1e-6, 1e-3, 0.05, 0.3])
def test_q_half_matches_integral(chim1):
    q = kn.legendre_q_half(8, chim1)
    ref = np.array([q_integral(m, 1.0 + chim1) for m in range(9)])
    assert np.allclose(q, ref, rtol=1e-11, atol=0.0)


@pytest.mark.parametrize("chim1", [1e-8, 0.01, 0.5, 3.0])
def test_p_half_matches_laplace_integral(chim1):
    p = kn.legendre_p_half(8, chim1)
    ref = np.array([p_integral(m, 1.0 + chim1) for m in range(9)])
    assert np.allclose(p, ref, rtol=1e-11, atol=0.0)


def test_q_singular_at_one():
    with pytest.raises(ValueError):
        kn.legendre_q_half(2, 0.0)


@pytest.mark.parametrize("m", [0, 3, 8])
def test_log_free_part_is_continuous(m):
    small = kn.q_log_free(m, np.array([1e-10]))[0]
    assert small == pytest.approx(kn.log_free_limit(m), abs=1e-8)


def test_ring_green_symmetric_and_matches_quadrature():
    a, b = MeridianPoint(0.7, 0.2), MeridianPoint(1.3, -0.4)
    for m in range(9):
        g1 = kn.ring_green(m, a, b).total
        g2 = kn.ring_green(m, b, a).total
        assert g1 == pytest.approx(g2, rel=1e-14)
        assert g1 == pytest.approx(brute_ring(m, a.r, a.z, b.r, b.z), rel=1e-10)


def test_ring_green_log_split():
    # total = coeff * ln(1/sqrt|M - M0|) + smooth, up to O(d^2 ln d)
    M0 = MeridianPoint(1.0, 0.0)
    for m in (0, 2, 5):
        for d in (1e-2, 1e-4):
            M = MeridianPoint(1.0 + 0.6 * d, 0.8 * d)
            sp = kn.ring_green(m, M, M0)
            rebuilt = sp.log_coefficient * np.log(1.0 / np.sqrt(d)) + sp.smooth_part
            assert rebuilt == pytest.approx(sp.total, rel=10 * d)


def test_ring_green_axis_limits():
    on_axis = MeridianPoint(0.0, 1.0)
    off = MeridianPoint(0.6, 0.2)
    assert kn.ring_green(0, on_axis, off).total == pytest.approx(1.0 / np.hypot(0.6, 0.8))
    assert kn.ring_green(3, on_axis, off).total == 0.0


def test_harmonic_index_range():
    with pytest.raises(ValueError):
        kn.ring_green(9, MeridianPoint(1, 0), MeridianPoint(2, 0))


@settings(max_examples=40, deadline=None)
@given(m=st.integers(0, 8), r=st.floats(0.2, 2.0), r0=st.floats(0.2, 2.0),
       dz=st.floats(-1.0, 1.0), nang=st.floats(0.0, 2 * np.pi))
def test_layer_kernel_normal_derivative(m, r, r0, dz, nang):
    if np.hypot(r - r0, dz) < 0.05:
        return
    nr, nz = np.cos(nang), np.sin(nang)
    h = 1e-6

    def G(shift):
        rr0, zz0 = r0 + shift * nr, shift * nz
        return kn.layer_kernel(m, rr0, r, r - rr0, dz - zz0)

    fd = (G(h) - G(-h)) / (2 * h)
    val = kn.layer_kernel_dn0(m, r0, r, r - r0, dz, nr, nz)
    assert val == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_layer_kernel_is_quarter_ring_average():
    # solver kernel uses 1/(4 pi) instead of 1/(2 pi)
    m, r0, r, dz = 2, 0.8, 1.1, 0.3
    assert kn.layer_kernel(m, r0, r, r - r0, dz) == pytest.approx(
        0.5 * brute_ring(m, r, dz, r0, 0.0), rel=1e-12)


def test_chord_term_on_circle():
    # every chord of a circle of radius R gives 1/(2R)
    R = 2.0
    th0 = 0.4
    p0 = MeridianPoint(3 + R * np.cos(th0), R * np.sin(th0))
    frame = SurfaceFrame(p0, (-np.sin(th0), np.cos(th0)), (np.cos(th0), np.sin(th0)),
                         th0, 1.0 / R)
    for th in (0.9, 2.0, -1.3):
        M = MeridianPoint(3 + R * np.cos(th), R * np.sin(th))
        assert kn.chord_term(kn.KernelPairGeometry(frame, M)) == pytest.approx(0.5 / R)
    assert kn.chord_term(kn.KernelPairGeometry(frame, p0)) == pytest.approx(0.5 / R)


def test_split_identity_over_chord_range(rng):
    # total - c ln(1/sqrt(chord)) equals the smooth part for chord in [1e-6, 1]
    worst = 0.0
    for _ in range(150):
        r0, z0 = rng.uniform(0.1, 2.0), rng.uniform(0.0, 5.0)
        d, a = 10 ** rng.uniform(-6, 0), rng.uniform(0, 2 * np.pi)
        M0 = MeridianPoint(r0, z0)
        M = MeridianPoint(max(r0 + d * np.cos(a), 1e-3), z0 + d * np.sin(a))
        chord = np.hypot(M.r - r0, M.z - z0)
        for m in range(9):
            sp = kn.ring_green(m, M, M0)
            gap = sp.total - sp.log_coefficient * np.log(1 / np.sqrt(chord)) - sp.smooth_part
            worst = max(worst, abs(gap) / max(abs(sp.total), abs(sp.smooth_part)))
    assert worst < 1e-12
