"""Seeded verification suites shared by the command line and the tests."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import checks
from .conserved import (CHAZY_WINNER, identity_report, ode_residual_report, ramamani_report,
                        select_chazy_form)
from .errors import ParameterError, ThetaFlowError
from .flows import CANONICAL19, JACOBI9, SYMMETRIC8
from .integrate import PathSegment, integrate
from .poisson import (bracket_transport_residual, casimir_and_det_check, commutation_check,
                      constant_bracket_obstruction, hamiltonian_field_check,
                      jacobi_identity_report, lagrangian_residual, nambu_reduce_check,
                      positive_control)
from .qseries import C6, Moebius, closed_form_state

DEFAULT_SEED = 0xD1CE
DEFAULT_REGION = (-1.0, 1.0, 0.4, 3.0)
SUITES = ("identities", "brackets", "obstruction", "transport", "lagrangian", "nambu",
          "ramamani", "chazy")


@dataclass(frozen=True)
class RunConfig:
    seed: int = DEFAULT_SEED
    rtol: float = 1e-10
    atol: float = 1e-12
    samples: int = 20
    region: tuple = DEFAULT_REGION
    thresholds: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.samples < 1:
            raise ParameterError("samples must be positive")
        if self.workers < 1:
            raise ParameterError("workers must be positive")
        re0, re1, im0, im1 = self.region
        if not (re0 < re1 and 0 < im0 < im1):
            raise ParameterError("region must satisfy re0 < re1 and 0 < im0 < im1")
        if any(not v > 0 for v in self.thresholds.values()):
            raise ParameterError("thresholds must be positive")

    def rng(self, stream=0):
        return np.random.default_rng([int(self.seed), stream])


def random_taus(cfg, n, stream=0):
    rng = cfg.rng(stream)
    re0, re1, im0, im1 = cfg.region
    return [complex(a, b) for a, b in zip(rng.uniform(re0, re1, n), rng.uniform(im0, im1, n))]


def random_canonical_states(cfg, n, stream=1):
    """Theta-generated Canonical19 states with Moebius and scale jitter."""
    rng = cfg.rng(stream)
    re0, re1, im0, im1 = cfg.region
    out = []
    while len(out) < n:
        tau = complex(rng.uniform(re0, re1), rng.uniform(im0, im1))
        gamma = rng.uniform(-0.5, 0.5)
        eps = C6 * rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(-0.5, 0.5))
        s = closed_form_state(CANONICAL19, tau, Moebius(1, 0, gamma, 1), eps=eps)
        x, y, z, _ = s.v
        if abs(y * y - z * z) > 1e-6 * abs(y * y) and abs(x) > 1e-8:
            out.append((tau, s))
    return out


def decoupled_states(cfg, n, stream=2):
    """States of the elementary family (x = 0) with random (gamma, delta)."""
    rng = cfg.rng(stream)
    out = []
    for _ in range(n):
        gamma, delta = rng.uniform(-1, 1), rng.uniform(0.5, 1.5)
        tau = complex(rng.uniform(-1, 1), rng.uniform(0.4, 3))
        out.append(closed_form_state(CANONICAL19, tau, Moebius(1 / delta, 0, gamma, delta), eps=0))
    return out


def aggregate(row_lists):
    """One row per check name: worst residual, pass only if every sample passed."""
    order = []
    groups = {}
    for rows in row_lists:
        for r in rows:
            if r.check not in groups:
                order.append(r.check)
                groups[r.check] = []
            groups[r.check].append(r)
    out = []
    n = len(row_lists)
    for name in order:
        rs = groups[name]
        finite = [r for r in rs if np.isfinite(r.residual)]
        worst = max(finite, key=lambda r: r.residual) if len(finite) == len(rs) else \
            next(r for r in rs if not np.isfinite(r.residual))
        passed = all(r.passed for r in rs)
        detail = worst.detail
        if n > 1:
            detail = f"worst of {len(rs)}" + (f"; {detail}" if detail else "")
        out.append(checks.Check(name, worst.residual, worst.threshold, passed, detail,
                                worst.absolute, all(r.gating for r in rs)))
    return out


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _guard(name, fn, *args):
    try:
        return fn(*args)
    except ThetaFlowError as exc:
        return [checks.failed(name, 0.0, exc)]


# per-sample workers (top level so that they pickle)

def _identities_one(item):
    tau, thr = item
    return identity_report(tau, thr)


def _brackets_one(s):
    def run():
        rows = [hamiltonian_field_check(s)]
        rows += casimir_and_det_check(s, 1.0)
        rows += casimir_and_det_check(s, 2 + 1j)
        rows += commutation_check(s, 1.0)
        rows += jacobi_identity_report(s)
        return rows
    return _guard("brackets", run)


def _nambu_one(s):
    return _guard("nambu", nambu_reduce_check, s)


def _chazy_one(s):
    return _guard("ode_residuals", ode_residual_report, s)


def suite_identities(cfg):
    taus = random_taus(cfg, cfg.samples)
    return aggregate(_map(_identities_one, [(t, dict(cfg.thresholds)) for t in taus], cfg.workers))


def suite_brackets(cfg):
    states = [s for _, s in random_canonical_states(cfg, cfg.samples)]
    return aggregate(_map(_brackets_one, states, cfg.workers))


def suite_nambu(cfg):
    states = [s for _, s in random_canonical_states(cfg, cfg.samples)]
    return aggregate(_map(_nambu_one, states, cfg.workers))


def suite_obstruction(cfg):
    rows = []
    for k, system in enumerate((SYMMETRIC8, JACOBI9, CANONICAL19)):
        cert = constant_bracket_obstruction(system, cfg.rng(10 + k), max(12, cfg.samples))
        rows.append(checks.make(f"nullspace_dim_{system.tag}", cert.nullspace_dim, 0.5,
                                detail=f"{cert.samples} samples, {cert.unknowns} unknowns"))
        rows.append(checks.make(f"smallest_singular_value_{system.tag}", cert.smallest, 1e-6,
                                passed=cert.smallest > 1e-6,
                                detail="normalized; must exceed the threshold"))
    ctrl = positive_control(cfg.rng(20))
    rows.append(checks.make("nullspace_dim_positive_control", ctrl.nullspace_dim, 1,
                            passed=ctrl.nullspace_dim >= 1,
                            detail="linear field with a constant bracket; must be >= 1"))
    return rows


def _trajectory(cfg, stream):
    (tau, s), = random_canonical_states(cfg, 1, stream)
    return tau, s, integrate(s, PathSegment(tau, tau + 0.4j), cfg.rtol, cfg.atol)


def suite_transport(cfg):
    try:
        tau, s, tr = _trajectory(cfg, 3)
        rows, _ = bracket_transport_residual(tr, kind="omega")
        prow, _ = bracket_transport_residual(tr, lam=1.0, kind="pencil")
        return rows + prow
    except ThetaFlowError as exc:
        return [checks.failed("transport", 0.0, exc)]


def suite_lagrangian(cfg):
    try:
        (tau, s), = random_canonical_states(cfg, 1, 4)
        return lagrangian_residual(s, tau, tau + 0.4j)
    except ThetaFlowError as exc:
        return [checks.failed("lagrangian", 0.0, exc)]


def suite_ramamani(cfg):
    states = [s for _, s in random_canonical_states(cfg, cfg.samples)]
    return ramamani_report(states)


def suite_chazy(cfg):
    dec = decoupled_states(cfg, cfg.samples)
    chosen = select_chazy_form(dec)
    rows = [checks.make("chazy_selection", 0.0 if chosen == (CHAZY_WINNER,) else 1.0, 0.5,
                        detail="vanishing on the decoupled family: " + (", ".join(chosen) or "none"))]
    states = [s for _, s in random_canonical_states(cfg, cfg.samples)]
    return rows + aggregate(_map(_chazy_one, states, cfg.workers))


SUITE_FUNCTIONS = {
    "identities": suite_identities, "brackets": suite_brackets,
    "obstruction": suite_obstruction, "transport": suite_transport,
    "lagrangian": suite_lagrangian, "nambu": suite_nambu, "ramamani": suite_ramamani,
    "chazy": suite_chazy,
}


def run_suite(name, cfg):
    if name not in SUITE_FUNCTIONS:
        raise ParameterError(f"unknown suite {name!r}")
    return checks.override(SUITE_FUNCTIONS[name](cfg), cfg.thresholds)


__all__ = ["RunConfig", "SUITES", "DEFAULT_SEED", "DEFAULT_REGION", "random_taus",
           "random_canonical_states", "decoupled_states", "aggregate", "run_suite"]
