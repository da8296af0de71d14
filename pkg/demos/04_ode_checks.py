"""Which third-order equation does u satisfy, and what the Ramamani map does.

Run: python demos/04_ode_checks.py
"""

from thetaflow.conserved import (CHAZY_FORMS, chazy_residuals, ode_residual_report,
                                 ramamani_report, select_chazy_form)
from thetaflow.flows import CANONICAL19
from thetaflow.integrate import PathSegment, integrate
from thetaflow.qseries import Moebius, closed_form_state
from thetaflow.suites import RunConfig, decoupled_states

dec = decoupled_states(RunConfig(), 10)
print("Candidate Chazy normalizations on the decoupled family (x = 0):")
print(f"  the one vanishing everywhere: {select_chazy_form(dec)}")

t0 = 0.1 + 1.1j
s = closed_form_state(CANONICAL19, t0, Moebius(1, 0, 0.2, 1))
tr = integrate(s, PathSegment(t0, t0 + 0.4j))
print("\nResiduals at the end of a canonical trajectory:")
res = chazy_residuals(tr.final)
for name in CHAZY_FORMS:
    print(f"  {name:22s} {res[name]:.2e}")

print("\nC-equations and the constant-scaling law:")
for r in ode_residual_report(tr.final):
    print(f"  {r.check:30s} {r.residual:.2e}  {r.detail}")

print("\nRamamani system, printed and series sign conventions:")
for r in ramamani_report([tr.state(i) for i in range(0, len(tr), 10)]):
    print(f"  {r.check:38s} {r.residual:.2e}  {r.detail}")
