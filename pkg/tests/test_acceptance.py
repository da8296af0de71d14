"""Acceptance criteria 1-9, one pass/fail line each."""

import numpy as np
import pytest

from thetaflow import checks
from thetaflow.cli import EXIT_INTERNAL, main
from thetaflow.conserved import (drift, halphen_brioschi_seed, integral_identity_residual,
                                 invariant_columns, canonical_integrals_with_gradients)
from thetaflow.elliptic import hyp2f1, legendre_PQ, legendre_quad
from thetaflow.errors import ThetaFlowError
from thetaflow.flows import (CANONICAL19, DARBOUX_HALPHEN, JACOBI9, RAMAMANI44, WEIERSTRASS3,
                             SystemState, pushforward_residual, transform_state)
from thetaflow.integrate import PathSegment, integrate
from thetaflow.poisson import omega_matrix
from thetaflow.qseries import Moebius, closed_form_state, theta_quad
from thetaflow.suites import RunConfig, run_suite

from conftest import STANDARD_MOEBIUS, STANDARD_TAU, rel


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def suite(name, **kw):
    rows = run_suite(name, RunConfig(**kw))
    return rows, {r.check: r for r in rows}


def worst(rows):
    gating = [r for r in rows if r.gating]
    bad = [r.check for r in gating if not r.passed]
    return bad, max(r.residual for r in gating if r.check.startswith(("jacobi", "log", "eta",
                                                                       "sym", "dup", "g", "leg",
                                                                       "mod", "sch")))


def test_criterion_1_identity_suite(report):
    rows, by = suite("identities", samples=100)
    bad, w = worst(rows)
    ok = (not bad and len(rows) == 19 and all(r.threshold <= 1e-9 for r in rows)
          and by["legendre_identity"].residual < 1e-12)
    report(1, ok, f"19 identity rows at 100 taus, worst {w:.2e}, "
                  f"Legendre {by['legendre_identity'].residual:.2e}, failing {bad}")


def test_criterion_2_closed_form_versus_flow(report):
    t0, t1 = STANDARD_TAU, STANDARD_TAU + 0.4j
    s = closed_form_state(CANONICAL19, t0, STANDARD_MOEBIUS)
    tr = integrate(s, PathSegment(t0, t1), rtol=1e-10)
    d19 = rel(tr.final.v, closed_form_state(CANONICAL19, t1, STANDARD_MOEBIUS).v)
    kw = {"I": 1.3 + 0.2j, "sign": 1}
    sj = closed_form_state(JACOBI9, t0, STANDARD_MOEBIUS, **kw)
    trj = integrate(sj, PathSegment(t0, t1), rtol=1e-10)
    d9 = rel(trj.final.v, closed_form_state(JACOBI9, t1, STANDARD_MOEBIUS, **kw).v)
    report(2, d19 < 1e-8 and d9 < 1e-8,
           f"Canonical19 endpoint {d19:.2e}, Jacobi9 endpoint {d9:.2e} in the closed form's own time")


def test_criterion_3_invariant_drift(report):
    t0, t1 = STANDARD_TAU, STANDARD_TAU + 0.4j
    s = closed_form_state(CANONICAL19, t0, STANDARD_MOEBIUS)
    drifts, ident = {}, 0.0
    tr = integrate(s, PathSegment(t0, t1), rtol=1e-10)
    for k, c in invariant_columns(tr).items():
        drifts[f"Canonical19.{k}"] = drift(c)
    ident = max(integral_identity_residual(tr.state(i)) for i in range(len(tr)))
    sj = closed_form_state(JACOBI9, t0, STANDARD_MOEBIUS, I=1.3 + 0.2j, sign=1)
    for k, c in invariant_columns(integrate(sj, PathSegment(t0, t1), rtol=1e-10)).items():
        drifts[f"Jacobi9.{k}"] = drift(c)
    d = transform_state(s, DARBOUX_HALPHEN)
    for k, c in invariant_columns(integrate(d, PathSegment(t0, t1), rtol=1e-10)).items():
        drifts[f"DarbouxHalphen2.{k}"] = drift(c)
    hb = halphen_brioschi_seed(1 / 6, 1 / 3, 1 / 2, 0.3 + 0.2j)
    for k, c in invariant_columns(integrate(hb, PathSegment(0, 0.1 + 0.1j), rtol=1e-10),
                                  hb_form="corrected").items():
        drifts[f"HalphenBrioschi57.{k}"] = drift(c)
    need = {"Canonical19.I2", "Canonical19.J1", "Canonical19.J2", "Jacobi9.I", "Jacobi9.J1",
            "Jacobi9.J2", "DarbouxHalphen2.J1", "DarbouxHalphen2.J2", "HalphenBrioschi57.J1",
            "HalphenBrioschi57.J2"}
    w = max(drifts.values())
    ok = need <= set(drifts) and w < 1e-7 and ident < 1e-11
    report(3, ok, f"{len(drifts)} integral columns, worst drift {w:.2e}, "
                  f"J1 K' - J2 K identity {ident:.2e}")


def test_criterion_4_hamiltonian_layer(report):
    rows, by = suite("brackets", samples=20)
    nrows, nby = suite("nambu", samples=20)
    ok = (checks.all_passed(rows) and checks.all_passed(nrows)
          and by["omega_grad_H"].residual < 1e-12
          and sum(k.startswith("jacobi_identity_pencil") for k in by) == 3
          and all(by[k].residual < 1e-9 for k in by if k.startswith(("casimir", "det_pencil")))
          and max(by[k].residual for k in by if k.startswith("jacobi_identity")) < 1e-5
          and nby["nambu_reduction"].residual < 1e-8)
    jac = max(by[k].residual for k in by if k.startswith("jacobi_identity"))
    report(4, ok, f"field {by['omega_grad_H'].residual:.2e}, "
                  f"Casimirs {max(by[k].residual for k in by if k.startswith('casimir')):.2e}, "
                  f"det {max(by['det_pencil[lam=1]'].residual, by['det_pencil[lam=2+1i]'].residual):.2e}, "
                  f"Jacobi identity {jac:.2e}, Nambu {nby['nambu_reduction'].residual:.2e}")


def test_criterion_5_constant_bracket_obstruction(report):
    rows, by = suite("obstruction", samples=20)
    dims = {n: by[f"nullspace_dim_{n}"].residual for n in ("Symmetric8", "Jacobi9", "Canonical19")}
    sv = min(by[f"smallest_singular_value_{n}"].residual for n in dims)
    ctrl = by["nullspace_dim_positive_control"].residual
    ok = checks.all_passed(rows) and all(v == 0 for v in dims.values()) and sv > 1e-6 and ctrl >= 1
    report(5, ok, f"nullspace dims {dims}, smallest singular value {sv:.2e}, control dim {ctrl:.0f}")


def test_criterion_6_ode_residuals(report):
    rows, by = suite("chazy", samples=20)
    ok = (checks.all_passed(rows) and by["chazy_pinned"].residual < 1e-10
          and by["c_equation_1/y"].residual < 1e-9 and by["c_equation_1/z"].residual < 1e-9
          and by["scaling_law_36c4"].passed and by["c_equation_1/x_fourth_order"].residual < 1e-8)
    report(6, ok, f"{by['chazy_selection'].detail}, Chazy {by['chazy_pinned'].residual:.2e}, "
                  f"C = 1/y {by['c_equation_1/y'].residual:.2e}, "
                  f"C = 1/z {by['c_equation_1/z'].residual:.2e}, "
                  f"fourth order {by['c_equation_1/x_fourth_order'].residual:.2e}")


def test_criterion_7_subsystem_atlas(report):
    t0, t1 = STANDARD_TAU, STANDARD_TAU + 0.4j
    s = closed_form_state(CANONICAL19, t0, STANDARD_MOEBIUS)
    tr = integrate(s, PathSegment(t0, t1), rtol=1e-10)
    dh_field = max(pushforward_residual(tr.state(i), DARBOUX_HALPHEN) for i in range(len(tr)))
    dh = integrate(transform_state(s, DARBOUX_HALPHEN), PathSegment(t0, t1), rtol=1e-10)
    dh_traj = rel(dh.final.v, transform_state(tr.final, DARBOUX_HALPHEN).v)
    j9 = max(pushforward_residual(tr.state(i), JACOBI9, branch=1) for i in range(0, len(tr), 4))
    w3 = max(pushforward_residual(tr.state(i), WEIERSTRASS3) for i in range(0, len(tr), 4))
    rows, by = suite("ramamani", samples=20)
    const = by["ramamani_printed_discrepancy_constant"]
    ok = (dh_field < 1e-10 and dh_traj < 1e-10 and j9 < 1e-9 and w3 < 1e-9
          and checks.all_passed(rows) and const.passed)
    report(7, ok, f"DH field {dh_field:.2e}, DH trajectory {dh_traj:.2e}, Jacobi9 {j9:.2e}, "
                  f"Weierstrass3 {w3:.2e}, Ramamani printed form: {const.detail}")


def test_criterion_8_transport_and_lagrangian(report):
    rows, by = suite("transport", samples=4)
    unique = [r for r in rows if r.check == "transport_unique_convention"]
    linear = [r for r in rows if r.check == "transport_step_linear"]
    held = [r.residual for r in rows if r.check.endswith("_statement")]
    lrows, lby = suite("lagrangian", samples=4)
    order = lby["euler_lagrange_order"]
    ok = (checks.all_passed(rows) and len(unique) == 2 and all(r.passed for r in unique)
          and all(r.passed for r in linear) and max(held) < 1e-6 and checks.all_passed(lrows))
    report(8, ok, f"{unique[0].detail}, transport residual {max(held):.2e}, "
                  f"{linear[0].detail}; Euler-Lagrange {order.detail}")


def fuzz_corpus(n, seed=99):
    rng = np.random.default_rng(seed)
    valid = [
        ["eval", "theta", "--tau", "0.1,1.1", "--order", "2"],
        ["eval", "elliptic", "--k", "0.3,0.1"],
        ["eval", "hyp2f1", "--a", "0.5", "--b", "0.5", "--c", "1", "--s", "0.2"],
        ["eval", "forms", "--tau", "0,1"],
        ["flow", "Canonical19", "--state", "0,0;1,0;1,0;0,0", "--t0", "0", "--t1", "0.2"],
        ["flow", "Jacobi9", "--from-theta", "0.1,1.1", "--I", "1.3,0.2", "--sign", "1",
         "--t1", "0.1,1.15"],
        ["flow", "HalphenBrioschi57", "--params", "0.1667,0.3333,0.5", "--state", "1;2;3",
         "--t0", "0", "--t1", "0.01"],
        ["check", "nambu", "--samples", "2"],
        ["check", "identities", "--samples", "2", "--region", "-0.5,0.5,0.8,1.5"],
    ]
    junk = ["", "nan", "inf", "-inf", "1e999", "0", "-1", "0,0", "1,2,3", ";", ";;", "abc", "--",
            "--tau", "--state", "1;nan;2;3", "0,-1", "1;1;1;1", "1;1", "\x00", "é", "1e-400",
            "-0.5,1", "9" * 40, "0x10", "1j", "  ", "--seed", "--format", "xml", "--rtol", "1e-3",
            "Lorenz63", "check", "flow", "eval", "1,1;1,1;1,-1;0,0", "2,0"]
    global_flags = [["--seed", "abc"], ["--seed", "-5"], ["--rtol", "0"], ["--atol", "nan"],
                    ["--format", "xml"], ["--out", "/nonexistent/dir/file.csv"], []]
    cases = []
    for _ in range(n):
        argv = list(valid[rng.integers(len(valid))])
        for _ in range(rng.integers(1, 4)):
            op = rng.integers(4)
            if op == 0 and argv:
                argv[rng.integers(len(argv))] = junk[rng.integers(len(junk))]
            elif op == 1 and argv:
                del argv[rng.integers(len(argv))]
            elif op == 2:
                argv.insert(rng.integers(len(argv) + 1), junk[rng.integers(len(junk))])
            else:
                argv = global_flags[rng.integers(len(global_flags))] + argv
        cases.append(argv)
    return cases


SINGULAR_INPUTS = [
    ("theta at real tau", lambda: theta_quad(0.5)),
    ("theta below the floor", lambda: theta_quad(0.3 + 0.01j)),
    ("K at k = 0", lambda: legendre_quad(0)),
    ("K at k = 1", lambda: legendre_quad(1)),
    ("K on the cut", lambda: legendre_quad(1.5)),
    ("2F1 with c = -2", lambda: hyp2f1(1, 1, -2, 0.5)),
    ("2F1 on the cut", lambda: hyp2f1(0.3, 0.4, 1.5, 2.0)),
    ("Legendre P on the cut", lambda: legendre_PQ(0.5, 1 / 3, 0.5)),
    ("Moebius with det != 1", lambda: Moebius(1, 1, 1, 1)),
    ("modulus from y^2 = z^2", lambda: transform_state(SystemState(CANONICAL19, [1, 1, 1, 0]),
                                                       JACOBI9, branch=1)),
    ("bracket at y^2 = z^2", lambda: omega_matrix(SystemState(CANONICAL19, [1, 1, 1, 0]))),
    ("integrals at x = 0", lambda: canonical_integrals_with_gradients(
        SystemState(CANONICAL19, [0, 1, 1, 0]))),
    ("Darboux-Halphen blow-up", lambda: integrate(SystemState(DARBOUX_HALPHEN, [1, 1, 1]),
                                                  PathSegment(0, 2))),
    ("non-finite state", lambda: integrate(SystemState(CANONICAL19, [np.nan, 1, 1, 0]),
                                           PathSegment(0, 1))),
    ("Ramamani convention", lambda: transform_state(SystemState(CANONICAL19, [1, 2, 1, 0]),
                                                    RAMAMANI44, convention="other")),
]


def test_criterion_9_determinism_and_robustness(report, capsys, tmp_path):
    argv = ["--seed", "5", "--format", "csv", "check", "brackets", "--samples", "6"]
    outs = []
    for extra in ([], [], ["--workers", "2"]):
        main(argv + extra)
        outs.append(capsys.readouterr().out)
    main(["flow", "Canonical19", "--from-theta", "0.2,1", "--t1", "0.2,1.3"])
    f1 = capsys.readouterr().out
    main(["flow", "Canonical19", "--from-theta", "0.2,1", "--t1", "0.2,1.3"])
    f2 = capsys.readouterr().out
    identical = outs[0] == outs[1] == outs[2] and f1 == f2

    crashes, internal = [], []
    for case in fuzz_corpus(1000):
        try:
            code = main(case)
        except BaseException as exc:  # noqa: BLE001 - any escape is a crash
            crashes.append((case, repr(exc)))
            continue
        if code == EXIT_INTERNAL:
            internal.append(case)
    capsys.readouterr()

    untyped = []
    for name, fn in SINGULAR_INPUTS:
        try:
            fn()
            untyped.append(f"{name}: no error")
        except ThetaFlowError:
            pass
        except Exception as exc:  # noqa: BLE001
            untyped.append(f"{name}: {type(exc).__name__}")
    ok = identical and not crashes and not internal and not untyped
    report(9, ok, f"byte-identical {identical}, 1000 fuzz cases: {len(crashes)} crashes, "
                  f"{len(internal)} internal errors; {len(SINGULAR_INPUTS)} singular inputs, "
                  f"untyped {untyped}")
