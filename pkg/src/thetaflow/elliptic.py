"""Complete elliptic integrals, the Gauss function 2F1 and Legendre functions."""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma, rgamma

from .errors import (BranchError, CutError, NoConvergence, ParameterError,
                     SingularModulus)

PI = np.pi
_SING_TOL = 1e-10
_AGM_MAXIT = 80


@dataclass(frozen=True)
class LegendreQuad:
    K: complex
    Kprime: complex
    E: complex
    Eprime: complex

    @property
    def values(self):
        return np.array([self.K, self.Kprime, self.E, self.Eprime], dtype=complex)

    @classmethod
    def from_values(cls, v):
        return cls(*(complex(x) for x in v))

    def legendre_relation(self):
        """K E' + K' E - K K'."""
        return self.K * self.Eprime + self.Kprime * self.E - self.K * self.Kprime


def agm(a, b):
    """Arithmetic-geometric mean with the right-half-plane square root."""
    a, b = complex(a), complex(b)
    for _ in range(_AGM_MAXIT):
        if abs(a - b) <= 1e-15 * abs(a):
            return (a + b) / 2
        a, b = (a + b) / 2, np.sqrt(a * b)
    raise NoConvergence("AGM did not converge")


def _k_e(m):
    """(K, E) at parameter m = k^2 from the AGM and its side sequence."""
    a, b = 1 + 0j, np.sqrt(1 - m)
    csum = 0.5 * m          # 2^{-1} c_0^2
    p = 0.5
    for _ in range(_AGM_MAXIT):
        if abs(a - b) <= 1e-15 * abs(a):
            a = (a + b) / 2
            break
        c = (a - b) / 2
        a, b = (a + b) / 2, np.sqrt(a * b)
        p *= 2
        csum += p * c * c
    else:
        raise NoConvergence("AGM did not converge")
    K = PI / (2 * a)
    return K, K * (1 - csum)


def _on_cut(m):
    # K(m) has its cut on real m > 1
    return m.imag == 0 and m.real > 1


def legendre_quad(k):
    """K(k), K'(k), E(k), E'(k) on the principal branch."""
    k = complex(k)
    if not np.isfinite(k):
        raise SingularModulus("modulus must be finite")
    m = k * k
    if abs(k) < _SING_TOL or abs(1 - m) < _SING_TOL:
        raise SingularModulus(f"modulus {k} on the singular set")
    mp_ = 1 - m
    if _on_cut(m) or _on_cut(mp_):
        raise BranchError(f"k^2 = {m} lies on a branch cut; side is ambiguous")
    K, E = _k_e(m)
    Kp, Ep = _k_e(mp_)
    return LegendreQuad(K, Kp, E, Ep)


def legendre_quad_deriv(k, lq):
    """dK/dk, dK'/dk, dE/dk, dE'/dk from the closed differential system."""
    k = complex(k)
    if abs(k) < _SING_TOL or abs(1 - k * k) < _SING_TOL:
        raise SingularModulus(f"modulus {k} on the singular set")
    K, Kp, E, Ep = lq.values
    k2 = k * k
    return np.array([-K / k - E / ((k2 - 1) * k), k * Kp / (1 - k2) + Ep / ((k2 - 1) * k),
                     (E - K) / k, k * Kp / (1 - k2) + k * Ep / (k2 - 1)])


def general_solution(lq, alpha, beta, gamma_, delta):
    """Four-parameter solution of the closed system built from a canonical quad."""
    K, Kp, E, Ep = lq.values
    return LegendreQuad(alpha * K - beta * Kp, gamma_ * K + delta * Kp,
                        alpha * E + beta * (Ep - Kp), delta * Ep + gamma_ * (K - E))


# ---------------------------------------------------------------------------
# Gauss hypergeometric function

_CROSSOVER = 0.7
_SERIES_MAX = 20000


def _is_nonpos_int(x):
    x = complex(x)
    return x.imag == 0 and x.real <= 0 and x.real == round(x.real)


def _is_int(x):
    x = complex(x)
    return abs(x.imag) < 1e-14 and abs(x.real - round(x.real)) < 1e-14


def _series(a, b, c, w):
    term = 1 + 0j
    total = 1 + 0j
    small = 0
    for n in range(_SERIES_MAX):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * w
        total += term
        if term == 0:
            return total
        if abs(term) < 1e-17 * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise NoConvergence(f"2F1 series did not converge at |w| = {abs(w):.3g}")


def _g(*args):
    out = 1 + 0j
    for x in args:
        out *= gamma(x)
    return out


def _rg(*args):
    out = 1 + 0j
    for x in args:
        out *= rgamma(x)
    return out


def _route_pfaff(a, b, c, s):
    w = s / (s - 1)
    return (1 - s) ** (-a) * _series(a, c - b, c, w)


def _route_one_minus(a, b, c, s):
    w = 1 - s
    t1 = _g(c, c - a - b) * _rg(c - a, c - b) * _series(a, b, a + b - c + 1, w)
    t2 = w ** (c - a - b) * _g(c, a + b - c) * _rg(a, b) * _series(c - a, c - b, c - a - b + 1, w)
    return t1 + t2


def _inv_formula(a, b, c, s):
    # argument 1/s; needs a - b non-integer
    w = 1 / s
    t1 = _g(c, b - a) * _rg(b, c - a) * (-s) ** (-a) * _series(a, a - c + 1, a - b + 1, w)
    t2 = _g(c, a - b) * _rg(a, c - b) * (-s) ** (-b) * _series(b, b - c + 1, b - a + 1, w)
    return t1 + t2


def _route_inv(a, b, c, s):
    return _inv_formula(a, b, c, s)


def _route_inv_one_minus(a, b, c, s):
    w = 1 / (1 - s)
    t1 = _g(c, b - a) * _rg(b, c - a) * (1 - s) ** (-a) * _series(a, c - b, a - b + 1, w)
    t2 = _g(c, a - b) * _rg(a, c - b) * (1 - s) ** (-b) * _series(b, c - a, b - a + 1, w)
    return t1 + t2


def _route_one_minus_inv(a, b, c, s):
    w0 = s / (s - 1)
    return (1 - s) ** (-a) * _inv_formula(a, c - b, c, w0)


def _routes(a, b, c, s):
    out = [(abs(s), None)]
    if s != 1:
        out.append((abs(s / (s - 1)), _route_pfaff))
        if not _is_int(c - a - b):
            out.append((abs(1 - s), _route_one_minus))
        if not _is_int(a - b):
            out.append((abs(1 / (1 - s)), _route_inv_one_minus))
        if not _is_int(a + b - c) and s != 0:
            out.append((abs(1 - 1 / s), _route_one_minus_inv))
    if s != 0 and not _is_int(a - b):
        out.append((abs(1 / s), _route_inv))
    return out


def _continue_ode(a, b, c, s):
    """Integrate the hypergeometric equation along the ray from 0 to s."""
    s0 = 0.5 * s / abs(s)
    f0 = _series(a, b, c, s0)
    d0 = a * b / c * _series(a + 1, b + 1, c + 1, s0)

    def rhs(t, y):
        w = s0 + t * (s - s0)
        f, fp = y
        fpp = -((c - (a + b + 1) * w) * fp - a * b * f) / (w * (1 - w))
        return [fp * (s - s0), fpp * (s - s0)]

    sol = solve_ivp(rhs, (0.0, 1.0), [f0, d0], method="DOP853", rtol=1e-13, atol=1e-16)
    if not sol.success:
        raise NoConvergence("2F1 continuation failed: " + sol.message)
    return sol.y[0, -1]


def hyp2f1(a, b, c, s, side=None):
    """Gauss hypergeometric function 2F1(a, b; c | s), principal branch.

    On the cut s in [1, inf) a side (+1 above, -1 below) must be given.
    """
    a, b, c, s = complex(a), complex(b), complex(c), complex(s)
    if not all(np.isfinite(v) for v in (a, b, c, s)):
        raise ParameterError("non-finite input")
    if _is_nonpos_int(c):
        raise ParameterError(f"c = {c} is a non-positive integer")
    if s == 0:
        return 1 + 0j
    if _is_nonpos_int(a) or _is_nonpos_int(b):
        # terminating polynomial
        return _series(a, b, c, s)
    if s.imag == 0 and s.real >= 1:
        if side not in (1, -1):
            raise CutError(f"s = {s.real} lies on the cut [1, inf); pass side=+1 or -1")
        if s.real == 1:
            if (c - a - b).real <= 0:
                raise NoConvergence("2F1 diverges at s = 1")
            return _g(c, c - a - b) * _rg(c - a, c - b)
        s = complex(s.real, side * 1e-300)
    best = min(_routes(a, b, c, s), key=lambda r: r[0])
    radius, route = best
    if radius <= _CROSSOVER or (radius < 0.9 and route is None):
        return _series(a, b, c, s) if route is None else route(a, b, c, s)
    if radius < 0.9:
        return route(a, b, c, s)
    return _continue_ode(a, b, c, s)


def hyp2f1_deriv(a, b, c, s, order=1, side=None):
    """n-th s-derivative via the parameter-shift rule."""
    coef = 1 + 0j
    for j in range(order):
        coef *= (a + j) * (b + j) / (c + j)
    return coef * hyp2f1(a + order, b + order, c + order, s, side)


# ---------------------------------------------------------------------------
# Associated Legendre functions off the cut [-1, 1]

def _legendre_P(nu, mu, z):
    if _is_nonpos_int(1 - mu):
        raise ParameterError(f"1 - mu = {1 - mu} is a non-positive integer")
    a, b, c = -nu, nu + 1, 1 - mu
    s = (1 - z) / 2
    side = -1 if z.imag == 0 else None   # real z < -1 is taken as z + i0
    C = rgamma(c)
    g = (z + 1) ** (mu / 2) / (z - 1) ** (mu / 2)
    F = [hyp2f1(a, b, c, s, side), hyp2f1_deriv(a, b, c, s, 1, side),
         hyp2f1_deriv(a, b, c, s, 2, side)]
    L = -mu / (z * z - 1)
    Lp = 2 * mu * z / (z * z - 1) ** 2
    P0 = C * g * F[0]
    P1 = C * g * (L * F[0] - 0.5 * F[1])
    P2 = C * g * (L * (L * F[0] - 0.5 * F[1]) + Lp * F[0] - 0.5 * L * F[1] + 0.25 * F[2])
    return np.array([P0, P1, P2])


def _legendre_Q(nu, mu, z):
    c = nu + 1.5
    if _is_nonpos_int(c) or _is_nonpos_int(nu + mu + 1):
        raise ParameterError(f"degenerate Legendre indices nu={nu}, mu={mu}")
    a, b = (nu + mu + 2) / 2, (nu + mu + 1) / 2
    s = 1 / (z * z)
    C = np.exp(1j * PI * mu) * np.sqrt(PI) * gamma(nu + mu + 1) * rgamma(c) / 2 ** (nu + 1)
    h = z ** (-nu - mu - 1) * (z + 1) ** (mu / 2) * (z - 1) ** (mu / 2)
    F = [hyp2f1(a, b, c, s), hyp2f1_deriv(a, b, c, s, 1), hyp2f1_deriv(a, b, c, s, 2)]
    L = (-nu - mu - 1) / z + mu * z / (z * z - 1)
    Lp = (nu + mu + 1) / z ** 2 - mu * (z * z + 1) / (z * z - 1) ** 2
    sp, spp = -2 / z ** 3, 6 / z ** 4
    Q0 = C * h * F[0]
    Q1 = C * h * (L * F[0] + F[1] * sp)
    Q2 = C * h * (L * (L * F[0] + F[1] * sp) + Lp * F[0] + L * F[1] * sp
                  + F[2] * sp * sp + F[1] * spp)
    return np.array([Q0, Q1, Q2])


def legendre_PQ(nu, mu, z, derivs=False):
    """P^mu_nu(z), Q^mu_nu(z) for z off [-1, 1] (the "type 3" normalisation).

    With ``derivs=True`` each is returned as [f, f', f''].
    """
    nu, mu, z = complex(nu), complex(mu), complex(z)
    if not all(np.isfinite(v) for v in (nu, mu, z)):
        raise ParameterError("non-finite input")
    if z.imag == 0 and -1 <= z.real <= 1:
        raise CutError(f"z = {z.real} lies on the cut [-1, 1]")
    P = _legendre_P(nu, mu, z)
    Q = _legendre_Q(nu, mu, z)
    if derivs:
        return P, Q
    return P[0], Q[0]


def legendre_ode_residual(nu, mu, z, f):
    """(1 - z^2) f'' - 2 z f' + (nu(nu+1) - mu^2 / (1 - z^2)) f."""
    return ((1 - z * z) * f[2] - 2 * z * f[1]
            + (nu * (nu + 1) - mu * mu / (1 - z * z)) * f[0])


__all__ = ["LegendreQuad", "agm", "legendre_quad", "legendre_quad_deriv",
           "general_solution", "hyp2f1", "hyp2f1_deriv", "legendre_PQ",
           "legendre_ode_residual"]
