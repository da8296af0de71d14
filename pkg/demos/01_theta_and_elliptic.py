"""Theta-constants, eta, and how they produce the complete elliptic integrals.

Run: python demos/01_theta_and_elliptic.py
"""

import numpy as np

from thetaflow.elliptic import hyp2f1, legendre_quad
from thetaflow.qseries import modular_forms, theta_quad

tau = 1j
tq = theta_quad(tau, max_order=1)
t2, t3, t4, eta = tq.values
print(f"At tau = i the theta-constants are {t2.real:.15f}, {t3.real:.15f}, {t4.real:.15f}")
print(f"and eta(i) = {eta.real:.15f}; compare pi/4 = {np.pi / 4:.15f}")
print(f"Jacobi quartic identity residual: {abs(t3**4 - t2**4 - t4**4):.1e}")

# The squared ratio theta2^2 / theta3^2 is the elliptic modulus for this tau.
k = t2 ** 2 / t3 ** 2
lq = legendre_quad(k)
print(f"\nModulus k = {k.real:.15f}")
print(f"K(k) = {lq.K.real:.15f}, (pi/2) theta3^2 = {(np.pi / 2 * t3 ** 2).real:.15f}")
print(f"K and K' coincide at tau = i: {abs(lq.K - lq.Kprime):.1e}")
print(f"Legendre relation E K' + E' K - K K' = {lq.legendre_relation().real:.15f}")

# The same K as a Gauss hypergeometric series.
print(f"(pi/2) 2F1(1/2, 1/2; 1; k^2) = {(np.pi / 2 * hyp2f1(0.5, 0.5, 1, k * k)).real:.15f}")

mf = modular_forms(tq)
print(f"\nEisenstein series at tau = i: E2 = {mf.E2.real:.12f}, E4 = {mf.E4.real:.12f}, "
      f"E6 = {abs(mf.E6):.1e}")
