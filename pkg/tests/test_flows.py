import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from thetaflow.errors import BranchError, SingularTransform, UnsupportedSystem
from thetaflow.flows import (CANONICAL19, DARBOUX_HALPHEN, INTERMEDIATE25, JACOBI9, LEGENDRE28,
                             RAMAMANI44, SYMMETRIC8, WEIERSTRASS3, SystemId, SystemState,
                             canonical_I, halphen_brioschi, homogeneity_residual, jacobian,
                             lie_derivatives, pushforward_residual, transform_state, vector_field)
from thetaflow.integrate import PathSegment, integrate
from thetaflow.qseries import Moebius, closed_form_state

from conftest import STANDARD_MOEBIUS, STANDARD_TAU, rel

PI = np.pi
ORIGIN_DECOUPLED = [0, 1, 1, 0]
components = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2))


def state(system, v, t=None):
    return SystemState(system, v, t)


def theta_states(n, seed=3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        tau = complex(rng.uniform(-0.8, 0.8), rng.uniform(0.6, 1.6))
        out.append(closed_form_state(CANONICAL19, tau, Moebius(1, 0, rng.uniform(-0.4, 0.4), 1)))
    return out


def test_canonical_field_at_decoupled_point():
    assert_allclose(vector_field(state(CANONICAL19, ORIGIN_DECOUPLED)), [0, -1, -1, -1])


def test_darboux_halphen_symmetric_collapse():
    c = 0.7 - 0.2j
    assert_allclose(vector_field(state(DARBOUX_HALPHEN, [c, c, c])), [c * c] * 3, rtol=1e-15)


def test_halphen_brioschi_half_half_one_is_linearly_conjugate_to_darboux_halphen():
    # X = (y + z) / 2 and cyclic: the symmetric solution of M V_hb(v) = V_dh(M v)
    M = 0.5 * (np.ones((3, 3)) - np.eye(3))
    hb = halphen_brioschi(0.5, 0.5, 1)
    rng = np.random.default_rng(1)
    for _ in range(5):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        lhs = M @ vector_field(state(hb, v))
        rhs = vector_field(state(DARBOUX_HALPHEN, M @ v))
        assert rel(lhs, rhs) < 1e-14


def random_state(system, rng):
    v = rng.normal(size=system.dim) + 1j * rng.normal(size=system.dim)
    if system.tag == "LegendreClosure28":
        return state(system, v, 0.4 + 0.2j)
    return state(system, v)


@pytest.mark.parametrize("system", [CANONICAL19, JACOBI9, SYMMETRIC8, INTERMEDIATE25, LEGENDRE28,
                                    DARBOUX_HALPHEN, WEIERSTRASS3, RAMAMANI44,
                                    halphen_brioschi(1 / 6, 1 / 3, 1 / 2)])
def test_jacobian_matches_finite_differences(system):
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(20):
        s = random_state(system, rng)
        W = jacobian(s)
        fd = np.empty_like(W)
        for j in range(system.dim):
            e = np.zeros(system.dim, dtype=complex)
            e[j] = h
            fd[:, j] = (vector_field(s.with_v(s.v + e)) - vector_field(s.with_v(s.v - e))) / (2 * h)
        assert rel(fd, W) < 1e-8


def test_darboux_halphen_trace():
    rng = np.random.default_rng(6)
    for _ in range(20):
        s = random_state(DARBOUX_HALPHEN, rng)
        assert abs(np.trace(jacobian(s)) - 2 * s.v.sum()) < 1e-13


def test_canonical_jacobian_entries():
    W = jacobian(state(CANONICAL19, ORIGIN_DECOUPLED))
    assert W[0, 0] == 2
    assert not np.any(jacobian(state(CANONICAL19, [0, 0, 0, 0])))
    assert np.any(jacobian(state(CANONICAL19, [1e-3, 0, 0, 0])))


def test_darboux_halphen_image_and_chain_rule():
    s = state(CANONICAL19, ORIGIN_DECOUPLED)
    dh = transform_state(s, DARBOUX_HALPHEN)
    assert_allclose(dh.v, [2, -1, -1])
    x, y, z, u = s.v
    dx, dy, dz, du = vector_field(s)
    assert du + 2 * y * dy + 2 * z * dz == -5
    assert vector_field(dh)[0] == -5


def test_ramamani_image_printed_convention():
    r = transform_state(state(CANONICAL19, ORIGIN_DECOUPLED), RAMAMANI44, convention="printed")
    P, Pt, Q = r.v
    assert_allclose([PI * 1j * P, PI * 1j * Pt, PI ** 2 * Q], [4, 6, 36], rtol=1e-15)


def test_intermediate_round_trip_and_integral_quotient(theta_state):
    x, y, z, u = theta_state.v
    i25 = transform_state(theta_state, INTERMEDIATE25, branch=(1, 1))
    A, B, k, IJ = i25.v
    assert abs(k * k - (1 - z * z / (y * y))) < 1e-12
    assert abs(canonical_I(theta_state.v) - (y * y - z * z) / (PI * x * x)) == 0
    for bs in [(1, 1), (-1, 1), (1, -1), (-1, -1)]:
        back = transform_state(transform_state(theta_state, INTERMEDIATE25, branch=(1, bs[1])),
                               CANONICAL19, branch=(1, bs[0]))
        if rel(back.v, theta_state.v) < 1e-12:
            break
    else:
        pytest.fail("no branch choice round-trips")


def test_second_derivative_from_taylor_propagation():
    s = state(CANONICAL19, ORIGIN_DECOUPLED)
    d = lie_derivatives(s, "u", 2)
    assert d[0] == -1
    oracle = jacobian(s)[3] @ vector_field(s)
    assert abs(d[1] - oracle) < 1e-13


@given(components, components, components, components)
def test_first_lie_derivative_is_the_field(x, y, z, u):
    s = state(CANONICAL19, [x, y, z, u])
    V = vector_field(s)
    for j in range(4):
        assert lie_derivatives(s, j, 1)[0] == pytest.approx(V[j], rel=1e-14, abs=1e-14)


@given(components, components, components, components)
def test_third_lie_derivative_matches_nested_jacobians(x, y, z, u):
    s = state(CANONICAL19, [x, y, z, u])
    h = 1e-5

    def second(v):
        return lie_derivatives(s.with_v(v), 3, 2)[1]

    grad = np.array([(second(s.v + h * e) - second(s.v - h * e)) / (2 * h) for e in np.eye(4)])
    d3 = lie_derivatives(s, 3, 3)[2]
    assert abs(d3 - grad @ vector_field(s)) <= 1e-6 * max(1.0, abs(d3))


def test_darboux_halphen_is_a_subsystem_along_trajectories(theta_state):
    tr = integrate(theta_state, PathSegment(STANDARD_TAU, STANDARD_TAU + 0.4j))
    worst = max(pushforward_residual(tr.state(i), DARBOUX_HALPHEN) for i in range(len(tr)))
    assert worst < 1e-10
    dh = integrate(transform_state(theta_state, DARBOUX_HALPHEN),
                   PathSegment(STANDARD_TAU, STANDARD_TAU + 0.4j))
    assert rel(dh.final.v, transform_state(tr.final, DARBOUX_HALPHEN).v) < 1e-10


def test_jacobi_map_intertwines_fields_in_the_same_time():
    for s in theta_states(10):
        assert pushforward_residual(s, JACOBI9, branch=1) < 1e-9
    # the quarter-pi-i rescaled time does not intertwine the fields
    assert pushforward_residual(theta_states(1)[0], JACOBI9, branch=1,
                                time_factor=0.25j * PI) > 0.1


def test_weierstrass_map_intertwines_fields():
    for s in theta_states(10):
        assert pushforward_residual(s, WEIERSTRASS3) < 1e-9


def test_ramamani_series_convention_intertwines_and_printed_does_not():
    for s in theta_states(5):
        assert pushforward_residual(s, RAMAMANI44, convention="series") < 1e-9
        assert pushforward_residual(s, RAMAMANI44, convention="printed") > 0.1


@given(st.lists(components, min_size=3, max_size=3), st.floats(0.2, 3))
def test_quadratic_systems_are_homogeneous(v, c):
    assert homogeneity_residual(state(DARBOUX_HALPHEN, v), c) < 1e-14
    assert homogeneity_residual(state(halphen_brioschi(1 / 6, 1 / 3, 1 / 2), v), c) < 1e-14


@given(st.lists(components, min_size=4, max_size=4), st.floats(0.2, 3))
def test_weighted_homogeneity_of_four_dimensional_systems(v, c):
    # Canonical19: weights (1, 1, 1, 2), degree 2 in the time scaling
    s = state(CANONICAL19, v)
    w = np.array([1, 1, 1, 2])
    lhs = vector_field(s.with_v(c ** w * s.v))
    assert rel(lhs, c ** (w + 2) * vector_field(s)) < 1e-13 or not np.any(vector_field(s))
    # Jacobi9: weights (0, 1, 1, 2), degree 1
    s = state(JACOBI9, v)
    w = np.array([0, 1, 1, 2])
    lhs = vector_field(s.with_v(c ** w * s.v))
    assert rel(lhs, c ** (w + 1) * vector_field(s)) < 1e-13 or not np.any(vector_field(s))


def test_transform_errors():
    with pytest.raises(UnsupportedSystem):
        transform_state(state(JACOBI9, [1, 1, 1, 1]), SYMMETRIC8)
    with pytest.raises(SingularTransform):
        transform_state(state(CANONICAL19, [1, 1, 1, 0]), JACOBI9, branch=1)
    with pytest.raises(BranchError):
        transform_state(state(DARBOUX_HALPHEN, [2, -1, -1]), CANONICAL19, branch=1)
    with pytest.raises(BranchError):
        transform_state(state(CANONICAL19, [1, 2, 1, 0]), JACOBI9, branch=3)
    with pytest.raises(UnsupportedSystem):
        SystemId("Lorenz63")
    with pytest.raises(ValueError):
        SystemState(CANONICAL19, [1, 2, 3])
