import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.integrate import quad

from thetaflow.elliptic import (agm, general_solution, hyp2f1, hyp2f1_deriv, legendre_ode_residual,
                                legendre_PQ, legendre_quad, legendre_quad_deriv)
from thetaflow.errors import BranchError, CutError, ParameterError, SingularModulus
from thetaflow.qseries import theta_quad

from conftest import rel

PI = np.pi
moduli = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)).filter(
    lambda k: abs(k) > 0.05 and abs(1 - k * k) > 0.05 and abs(k.imag) > 1e-3 and abs(k.real) > 1e-3)
args = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)).filter(
    lambda s: abs(s.imag) > 1e-3 and abs(s - 1) > 0.05)


def test_legendre_identity_real_modulus():
    assert abs(legendre_quad(0.37).legendre_relation() - PI / 2) < 1e-12


@given(moduli)
def test_legendre_identity(k):
    assert abs(legendre_quad(k).legendre_relation() - PI / 2) < 1e-12


@given(moduli)
def test_quad_matches_mpmath(k):
    mp.mp.dps = 30
    m, mc = k * k, 1 - k * k
    ref = [mp.ellipk(m), mp.ellipk(mc), mp.ellipe(m), mp.ellipe(mc)]
    assert rel(legendre_quad(k).values, [complex(v) for v in ref]) < 1e-13


def test_self_complementary_point_against_quadrature():
    k = 1 / np.sqrt(2)
    lq = legendre_quad(k)
    assert abs(lq.K - lq.Kprime) < 1e-14
    ref, _ = quad(lambda t: 1 / np.sqrt(1 - k * k * np.sin(t) ** 2), 0, PI / 2, epsabs=1e-14)
    assert abs(lq.K - ref) < 1e-10


def test_small_modulus_limit():
    lq = legendre_quad(1e-6)
    assert abs(lq.K - PI / 2) < 1e-11 and abs(lq.E - PI / 2) < 1e-11


def test_agm_of_equal_arguments():
    assert agm(2, 2) == 2


def test_dE_dk_against_finite_difference():
    k, h = 1 / np.sqrt(2), 1e-6
    d = legendre_quad_deriv(k, legendre_quad(k))
    lq = legendre_quad(k)
    assert abs(d[2] - (lq.E - lq.K) / k) < 1e-14
    fd = (legendre_quad(k + h).E - legendre_quad(k - h).E) / (2 * h)
    assert abs(fd - d[2]) < 1e-8


@pytest.mark.parametrize("k", np.arange(1, 10) / 10)
def test_closed_system_matches_finite_differences(k):
    h = 1e-6
    fd = (legendre_quad(k + h).values - legendre_quad(k - h).values) / (2 * h)
    assert rel(fd, legendre_quad_deriv(k, legendre_quad(k))) < 1e-8


@pytest.mark.parametrize("k", [0.2, 0.5, 0.8, 0.4 + 0.3j])
def test_second_order_linear_equation_for_K(k):
    h = 2e-4

    def dA(kk):
        return 4 * legendre_quad_deriv(kk, legendre_quad(kk))[0]

    A = 4 * legendre_quad(k).K
    Ak = dA(k)
    Akk = (8 * (dA(k + h) - dA(k - h)) - (dA(k + 2 * h) - dA(k - 2 * h))) / (12 * h)
    res = k * (k * k - 1) * Akk + (3 * k * k - 1) * Ak + k * A
    assert abs(res) / abs(k * A) < 1e-9


def test_identity_constants_give_canonical_quad():
    lq = legendre_quad(0.3 + 0.2j)
    assert rel(general_solution(lq, 1, 0, 0, 1).values, lq.values) == 0


@given(moduli, st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_general_solution_level_surface(k, al, be, ga, de):
    lq = general_solution(legendre_quad(k), al, be, ga, de)
    scale = max(1.0, abs(al * de), abs(be * ga))
    assert abs(lq.legendre_relation() - PI / 2 * (al * de + be * ga)) / scale < 1e-11


@pytest.mark.parametrize("tau", [0.8j, 1j, 1.3j, 0.2 + 1j])
def test_modular_representations_of_K(tau):
    t2, t3, _, _ = theta_quad(tau).values
    lq = legendre_quad(t2 * t2 / (t3 * t3))
    assert abs(lq.K - PI / 2 * t3 ** 2) / abs(lq.K) < 1e-10
    assert abs(lq.Kprime - PI / 2j * tau * t3 ** 2) / abs(lq.Kprime) < 1e-10


def test_hyp2f1_at_zero_and_elliptic_reduction():
    assert hyp2f1(0.5, 0.5, 1, 0) == 1
    k = 0.3
    assert abs(hyp2f1(0.5, 0.5, 1, k * k) - 2 / PI * legendre_quad(k).K) < 1e-12


def test_hyp2f1_derivative_rule():
    a, b, c, s, h = 1 / 6, 1 / 3, 1 / 2, 0.2, 1e-5
    fd = (hyp2f1(a, b, c, s + h) - hyp2f1(a, b, c, s - h)) / (2 * h)
    assert abs(fd - hyp2f1_deriv(a, b, c, s)) < 1e-8
    assert hyp2f1_deriv(a, b, c, s) == pytest.approx(a * b / c * hyp2f1(a + 1, b + 1, c + 1, s))


@given(args, st.sampled_from([(1 / 6, 1 / 3, 1 / 2), (0.5, 0.5, 1.0), (0.3 + 0.1j, 1.2, 2.5),
                              (-0.25, 0.75, 1 / 3)]))
def test_hyp2f1_matches_mpmath(s, abc):
    mp.mp.dps = 30
    ref = complex(mp.hyp2f1(*abc, s))
    assume(abs(ref) > 1e-6)
    assert abs(hyp2f1(*abc, s) - ref) / abs(ref) < 1e-12


def test_hyp2f1_cut_needs_side():
    with pytest.raises(CutError):
        hyp2f1(0.3, 0.4, 1.5, 2.0)
    above = hyp2f1(0.3, 0.4, 1.5, 2.0, side=1)
    below = hyp2f1(0.3, 0.4, 1.5, 2.0, side=-1)
    assert abs(above - np.conj(below)) < 1e-12
    with pytest.raises(ParameterError):
        hyp2f1(0.3, 0.4, -2, 0.5)


def test_legendre_ode_residual_at_test_point():
    P, Q = legendre_PQ(0.5, 1 / 3, 2 + 1j, derivs=True)
    for f in (P, Q):
        assert abs(legendre_ode_residual(0.5, 1 / 3, 2 + 1j, f)) / abs(f[0]) < 1e-9


@given(st.builds(complex, st.floats(-4, 4), st.floats(-4, 4)).filter(
    lambda z: abs(z.imag) > 0.05 and abs(z * z - 1) > 0.1))
def test_legendre_functions_match_mpmath_type3(z):
    mp.mp.dps = 30
    P, Q = legendre_PQ(0.5, 1 / 3, z)
    assert abs(P - complex(mp.legenp(0.5, 1 / 3, z, type=3))) / abs(P) < 1e-12
    assert abs(Q - complex(mp.legenq(0.5, 1 / 3, z, type=3))) / abs(Q) < 1e-12


def test_legendre_wronskian_nonzero():
    for z in (2 + 1j, -0.5 + 2j):
        P, Q = legendre_PQ(0.5, 1 / 3, z, derivs=True)
        w = P[0] * Q[1] - P[1] * Q[0]
        assert abs(w) / (abs(P[0] * Q[1]) + abs(P[1] * Q[0])) > 1e-3


def test_trivial_legendre_index():
    for z in (2 + 1j, 3.0, -1 + 0.5j):
        assert abs(legendre_PQ(0, 0, z)[0] - 1) < 1e-14


def test_singular_and_cut_moduli():
    with pytest.raises(SingularModulus):
        legendre_quad(0)
    with pytest.raises(SingularModulus):
        legendre_quad(1)
    with pytest.raises(BranchError):
        legendre_quad(1.5)
    with pytest.raises(CutError):
        legendre_PQ(0.5, 1 / 3, 0.5)
