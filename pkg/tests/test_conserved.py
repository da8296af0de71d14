import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thetaflow.conserved import (CHAZY_FORMS, CHAZY_WINNER, CONSERVED_WEIERSTRASS,
                                 PRINTED_WEIERSTRASS, LegendreBranch, algebraic_invariants,
                                 canonical_integrals_with_gradients, chazy_residuals,
                                 continued_quad_at_tau, drift, halphen_brioschi_seed,
                                 identity_report, integral_identity_residual, invariant_columns,
                                 normalizer_N, ode_residual_report, principal_quad, ramamani_report,
                                 scan_weierstrass_normalization, select_chazy_form,
                                 transcendental_invariants)
from thetaflow.errors import ParameterError, SingularModulus, SingularState
from thetaflow.flows import (CANONICAL19, DARBOUX_HALPHEN, INTERMEDIATE25, JACOBI9, RAMAMANI44,
                             SYMMETRIC8, WEIERSTRASS3, SystemState, halphen_brioschi,
                             transform_state, vector_field)
from thetaflow.integrate import PathSegment, integrate
from thetaflow.poisson import fd_gradient
from thetaflow.qseries import C6, Moebius, closed_form_state, theta_quad

from conftest import STANDARD_MOEBIUS, STANDARD_TAU, rel

PI = np.pi
JITTERED = closed_form_state(CANONICAL19, 0.2 + 0.9j, Moebius(1, 0, 0.3, 1), eps=0.3 + 0.5j)


def theta_states(n, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        tau = complex(rng.uniform(-0.9, 0.9), rng.uniform(0.5, 1.6))
        eps = C6 * rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(-0.5, 0.5))
        out.append(closed_form_state(CANONICAL19, tau, Moebius(1, 0, rng.uniform(-0.5, 0.5), 1),
                                     eps=eps))
    return out


def decoupled_states(n, seed=12):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g, d = rng.uniform(-1, 1), rng.uniform(0.5, 1.5)
        tau = complex(rng.uniform(-1, 1), rng.uniform(0.4, 3))
        out.append(closed_form_state(CANONICAL19, tau, Moebius(1 / d, 0, g, d), eps=0))
    return out


# algebraic integrals

def test_symmetric_theta_solution_sits_on_zero_level():
    U = algebraic_invariants(SystemState(SYMMETRIC8, theta_quad(1j).values))["U"]
    assert abs(U) < 1e-13


def test_jacobi_integral_with_b_zero():
    inv = algebraic_invariants(SystemState(JACOBI9, [0.3, 0.7, 1.5 - 0.5j, 0]))
    assert inv["I2"] == (1.5 - 0.5j) ** 2


def test_decoupled_state_has_no_quotient_integral():
    with pytest.raises(SingularState):
        algebraic_invariants(SystemState(CANONICAL19, [0, 1, 1, 0]))


# transcendental integrals

def test_integral_identity_at_random_states():
    for s in theta_states(20):
        assert integral_identity_residual(s) < 1e-11


@given(st.floats(-0.9, 0.9), st.floats(0.5, 2.5), st.floats(-0.5, 0.5))
def test_integral_identity_property(re, im, gamma):
    s = closed_form_state(CANONICAL19, complex(re, im), Moebius(1, 0, gamma, 1))
    assert integral_identity_residual(s) < 1e-11


def trajectory(system_state, t0, t1, **kw):
    return integrate(system_state, PathSegment(t0, t1), **kw)


def test_canonical_integrals_are_conserved(theta_state):
    tr = trajectory(theta_state, STANDARD_TAU, STANDARD_TAU + 0.4j)
    cols = invariant_columns(tr)
    for name in ("H", "J1", "J2"):
        assert drift(cols[name]) < 1e-8


@pytest.mark.parametrize("target,kw", [(JACOBI9, {"branch": 1}),
                                       (INTERMEDIATE25, {"branch": (1, 1)}),
                                       (DARBOUX_HALPHEN, {}),
                                       (RAMAMANI44, {"convention": "series"}),
                                       (WEIERSTRASS3, {})])
def test_integrals_of_image_systems_are_conserved(target, kw):
    s = transform_state(JITTERED, target, **kw)
    tr = trajectory(s, 0, 0.4 + 0.3j)
    cols = invariant_columns(tr)
    assert {"J1", "J2"} <= set(cols)
    for name, col in cols.items():
        assert drift(col) < 1e-8, name


def test_darboux_halphen_integrals_on_images_of_canonical_trajectories(theta_state):
    tr = trajectory(transform_state(theta_state, DARBOUX_HALPHEN), STANDARD_TAU,
                    STANDARD_TAU + 0.4j)
    cols = invariant_columns(tr)
    assert max(drift(cols["J1"]), drift(cols["J2"])) < 1e-8


def test_halphen_brioschi_integrals():
    hb = halphen_brioschi_seed(1 / 6, 1 / 3, 1 / 2, 0.3 + 0.2j)
    tr = trajectory(hb, 0, 0.1 + 0.1j)
    cols = invariant_columns(tr, hb_form="corrected")
    assert drift(cols["J1"]) < 1e-7 and drift(cols["J2"]) < 1e-7
    printed = invariant_columns(tr, hb_form="printed")
    assert drift(printed["J1"]) < 1e-7
    assert drift(printed["J2"]) > 1e-3


def test_halphen_brioschi_integrals_follow_the_mixing_coefficients():
    a, b, c, s0 = 1 / 6, 1 / 3, 1 / 2, 0.3 + 0.2j
    J = transcendental_invariants(halphen_brioschi_seed(a, b, c, s0, mix=(1, 0.5)))
    assert abs(J["J1"] - 0.5) < 1e-12 and abs(J["J2"] + 1) < 1e-12
    pure = transcendental_invariants(halphen_brioschi_seed(a, b, c, s0, mix=(1, 0)))
    assert abs(pure["J1"]) < 1e-12


def test_halphen_brioschi_integer_c_rejected():
    s = SystemState(halphen_brioschi(0.5, 0.5, 1), [1, 2, 3])
    with pytest.raises(ParameterError):
        transcendental_invariants(s)


def test_jacobi_integrals_are_linear_in_A_B():
    s = transform_state(JITTERED, JACOBI9, branch=1)
    A, B, a, b = s.v
    J = transcendental_invariants(s)
    J2x = transcendental_invariants(s.with_v([2 * A, 2 * B, a, b]))
    assert abs(J2x["J1"] - 2 * J["J1"]) < 1e-13 * abs(J["J1"])
    assert abs(J2x["J2"] - 2 * J["J2"]) < 1e-13 * abs(J["J2"])


def test_integral_gradients_have_rank_two():
    for s in theta_states(10):
        _, _, g1, g2 = canonical_integrals_with_gradients(s)
        G = np.array([g1 / np.linalg.norm(g1), g2 / np.linalg.norm(g2)])
        assert np.linalg.svd(G, compute_uv=False)[-1] > 1e-8


def test_integral_gradients_match_finite_differences():
    for s in theta_states(5):
        J1, J2, g1, g2 = canonical_integrals_with_gradients(s)
        fd1 = fd_gradient(lambda t: transcendental_invariants(t)["J1"], s)
        fd2 = fd_gradient(lambda t: transcendental_invariants(t)["J2"], s)
        assert rel(fd1, g1) < 1e-7 and rel(fd2, g2) < 1e-7


# time normalizer

def test_normalizer_advances_at_unit_rate():
    for s in theta_states(50, seed=13):
        _, g = normalizer_N(s)
        assert abs(g @ vector_field(s) - 1) < 1e-9


def test_normalizer_gradient_matches_finite_differences():
    for s in theta_states(5):
        _, g = normalizer_N(s)
        fd = fd_gradient(lambda t: normalizer_N(t)[0], s)
        assert rel(fd, g) < 1e-7


def test_normalizer_along_a_trajectory(theta_state):
    t1 = STANDARD_TAU + 0.3 + 0.2j
    tr = trajectory(theta_state, STANDARD_TAU, t1)
    branch = LegendreBranch((theta_state.v[2] / theta_state.v[1]) ** 2)
    for i in range(1, len(tr)):
        v = tr.states[i]
        branch.advance((v[2] / v[1]) ** 2)
    N0 = normalizer_N(theta_state)[0]
    N1 = normalizer_N(tr.final, quad=branch.quad)[0]
    assert abs((N1 - N0) - (t1 - STANDARD_TAU)) < 1e-8


def test_legendre_branch_returns_to_principal_after_a_closed_loop():
    branch = LegendreBranch(0.3)
    loop = [0.3 + 0.5j, 1.5 + 0.5j, 1.5 - 0.5j, 0.3 - 0.5j, 0.3]
    for m in loop:
        branch.advance(m)
    assert not branch.on_principal
    for m in loop[::-1][1:] + [0.3]:
        branch.advance(m)
    assert branch.on_principal
    assert rel(branch.quad, principal_quad(0.3)) < 1e-12
    with pytest.raises(SingularModulus):
        LegendreBranch(1.0)


# identity and ODE residual reports

@pytest.mark.parametrize("tau", [1j, 0.3 + 0.7j])
def test_identity_report_rows(tau):
    rows = identity_report(tau)
    assert len(rows) == 19
    for r in rows:
        assert r.residual < 1e-10, r


def test_identity_report_outside_the_fundamental_region_uses_continuation():
    rows = {r.check: r for r in identity_report(0.7 + 0.3j)}
    assert rows["modular_K"].detail == "continued"
    assert all(r.passed for r in rows.values())
    q, moved = continued_quad_at_tau(0.7 + 0.3j)
    assert moved
    assert abs(q[0] * q[3] + q[1] * q[2] - q[0] * q[1] - PI / 2) < 1e-11


def test_identity_report_below_floor_flags_rows():
    rows = identity_report(0.3 + 0.01j)
    assert rows and all(not r.passed and "DomainError" in r.detail for r in rows)


def test_chazy_form_pinned_by_the_decoupled_family():
    dec = decoupled_states(20)
    assert select_chazy_form(dec) == (CHAZY_WINNER,)
    for s in dec:
        assert chazy_residuals(s)[CHAZY_WINNER] < 1e-11


def test_chazy_winner_along_flows_and_losers_fail(theta_state):
    tr = trajectory(theta_state, STANDARD_TAU, STANDARD_TAU + 0.4j)
    for i in range(0, len(tr), 8):
        res = chazy_residuals(tr.state(i))
        assert res[CHAZY_WINNER] < 1e-10
        assert all(res[n] > 1e-3 for n in CHAZY_FORMS if n != CHAZY_WINNER)


def test_ode_residual_report_gating_rows_pass():
    for s in theta_states(10):
        rows = ode_residual_report(s)
        names = {r.check for r in rows}
        assert {"c_equation_1/y", "c_equation_1/z", "c_equation_1/x_fourth_order",
                "c_equation_theta_-pi2", "scaling_law_36c4"} <= names
        for r in rows:
            if r.gating:
                assert r.passed, r


def test_scaling_law_constant():
    assert abs(36 * C6 ** 4 + PI ** 2) < 1e-13


def test_ramamani_printed_discrepancy_is_a_measured_constant():
    rows = {r.check: r for r in ramamani_report(theta_states(8))}
    assert all(rows[f"ramamani_series_{n}"].passed for n in ("P", "Pt", "Q"))
    assert not rows["ramamani_printed_P"].passed and not rows["ramamani_printed_P"].gating
    const = rows["ramamani_printed_discrepancy_constant"]
    assert const.passed
    assert const.detail == "residual / Q = 0+3.14159265359i, 0+6.28318530718i, 0+0i"


# Weierstrass normalization

def test_weierstrass_scan_selects_a_unique_conserved_normalization():
    w = transform_state(JITTERED, WEIERSTRASS3)
    tr = trajectory(w, 0, 0.3 + 0.2j)
    res = scan_weierstrass_normalization([tr.state(i) for i in range(0, len(tr), 8)])
    assert res.unique
    assert res.selected[0] == CONSERVED_WEIERSTRASS
    printed = dict(res.candidates)[PRINTED_WEIERSTRASS]
    assert printed > 1e-3
