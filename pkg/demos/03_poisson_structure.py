"""The Poisson pencil of the canonical system, checked numerically.

Run: python demos/03_poisson_structure.py
"""

import numpy as np

from thetaflow.flows import CANONICAL19, SystemId, SystemState, vector_field
from thetaflow.poisson import (casimir_and_det_check, constant_bracket_obstruction,
                               jacobi_identity_report, nambu_reduce_check, observables,
                               omega_matrix, positive_control)
from thetaflow.qseries import Moebius, closed_form_state

s = SystemState(CANONICAL19, [1, 2, 1, 0])
field = omega_matrix(s) @ observables()["H"].gradient(s)
print(f"omega grad H at (1, 2, 1, 0) = {np.round(field.real, 12)}")
print(f"the vector field there       = {vector_field(s).real}")

s = closed_form_state(CANONICAL19, 0.1 + 1.1j, Moebius(1, 0, 0.2, 1))
print("\nAt a theta-built state:")
for rows in (casimir_and_det_check(s, 2 + 1j), jacobi_identity_report(s), nambu_reduce_check(s)):
    for r in rows:
        print(f"  {r.check:34s} {r.residual:.2e}  {'pass' if r.passed else 'FAIL'}")

print("\nNo constant antisymmetric bracket carries these fields:")
rng = np.random.default_rng(0)
for name in ("Symmetric8", "Jacobi9", "Canonical19"):
    cert = constant_bracket_obstruction(SystemId(name), rng, 20)
    print(f"  {name:12s} nullspace dimension {cert.nullspace_dim}, "
          f"smallest singular value {cert.smallest:.3f}")
print(f"  a linear field built to have one: dimension {positive_control(rng).nullspace_dim}")
