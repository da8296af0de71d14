"""Theta-constants and the eta series with termwise tau-derivatives.

    theta2 = sum_k exp(pi i tau (k + 1/2)^2)
    theta3 = 1 + 2 sum_{k>=1} q^{k^2}
    theta4 = 1 + 2 sum_{k>=1} (-1)^k q^{k^2}
    eta    = 2 pi^2 (1/24 - sum_{k>=1} q^{2k} / (1 - q^{2k})^2),   q = exp(pi i tau)
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchError, DomainError, ParameterError

PI = np.pi
IM_FLOOR = 0.05
MAX_ORDER = 3
_REL_STOP = 1e-17
_MIN_TERMS = 8
_MAX_TERMS = 100000

C6 = np.sqrt(1j * PI / 6)

# Eulerian-number numerators of (x d/dx)^n [x / (1 - x)^2]
_LAMBERT_NUM = [
    [0, 1],
    [0, 1, 1],
    [0, 1, 4, 1],
    [0, 1, 11, 11, 1],
]


@dataclass(frozen=True)
class Tau:
    re: float
    im: float

    def __post_init__(self):
        re, im = float(self.re), float(self.im)
        if not (np.isfinite(re) and np.isfinite(im)):
            raise DomainError("tau must be finite")
        if im <= 0:
            raise DomainError(f"tau = {re}+{im}i is not in the upper half-plane")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def of(cls, tau):
        if isinstance(tau, Tau):
            return tau
        tau = complex(tau)
        return cls(tau.real, tau.imag)

    @property
    def value(self):
        return complex(self.re, self.im)

    @property
    def nome(self):
        return np.exp(1j * PI * self.value)


@dataclass(frozen=True)
class ThetaQuad:
    """(theta2, theta3, theta4, eta) at tau; ``derivs[n]`` holds the n-th
    tau-derivative of the four values, n = 0..max_order."""
    tau: Tau
    derivs: np.ndarray = field(repr=False)

    @property
    def theta2(self):
        return self.derivs[0, 0]

    @property
    def theta3(self):
        return self.derivs[0, 1]

    @property
    def theta4(self):
        return self.derivs[0, 2]

    @property
    def eta(self):
        return self.derivs[0, 3]

    @property
    def values(self):
        return self.derivs[0]

    @property
    def max_order(self):
        return self.derivs.shape[0] - 1

    def d(self, n):
        if n > self.max_order:
            raise ParameterError(f"derivative order {n} not computed (max {self.max_order})")
        return self.derivs[n]


@dataclass(frozen=True)
class Moebius:
    alpha: complex = 1
    beta: complex = 0
    gamma: complex = 0
    delta: complex = 1

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if abs(self.alpha * self.delta - self.beta * self.gamma - 1) > 1e-12:
            raise DomainError("Moebius coefficients must satisfy alpha*delta - beta*gamma = 1")

    def __call__(self, tau):
        return (self.alpha * tau + self.beta) / (self.gamma * tau + self.delta)

    def denominator(self, tau):
        return self.gamma * tau + self.delta


IDENTITY = Moebius()


def _check_tau(tau):
    tau = Tau.of(tau)
    if tau.im < IM_FLOOR:
        raise DomainError(f"im(tau) = {tau.im} is below the floor {IM_FLOOR}")
    return tau


def _sum_terms(term_fn, start):
    """Sum term_fn(k) (arrays over derivative order) from k = start until the
    leading-order term is negligible against the running sum."""
    total = None
    k = start
    count = 0
    while True:
        t = term_fn(k)
        total = t if total is None else total + t
        count += 1
        k += 1
        if count >= _MIN_TERMS and abs(t[0]) < _REL_STOP * abs(total[0]):
            # higher-order terms carry extra polynomial factors in k; keep going
            # until those are negligible too
            if np.all(np.abs(t) <= _REL_STOP * np.maximum(np.abs(total), 1e-300)):
                return total
        if count > _MAX_TERMS:
            from .errors import NoConvergence
            raise NoConvergence("theta series failed to converge")


def theta_quad(tau, max_order=0):
    """Evaluate (theta2, theta3, theta4, eta) and tau-derivatives up to max_order."""
    if not 0 <= int(max_order) <= MAX_ORDER:
        raise ParameterError(f"max_order must be in 0..{MAX_ORDER}")
    max_order = int(max_order)
    tau = _check_tau(tau)
    t = tau.value
    n = np.arange(max_order + 1)
    ipi = 1j * PI

    def th2(k):
        e = (k + 0.5) ** 2
        return 2 * np.exp(ipi * t * e) * (ipi * e) ** n

    def th3(k):
        e = k * k
        return 2 * np.exp(ipi * t * e) * (ipi * e) ** n

    def th4(k):
        e = k * k
        return 2 * (-1) ** k * np.exp(ipi * t * e) * (ipi * e) ** n

    def lam(k):
        x = np.exp(2 * ipi * t * k)
        w = 2 * ipi * k
        out = np.empty(max_order + 1, dtype=complex)
        for m in range(max_order + 1):
            out[m] = np.polyval(_LAMBERT_NUM[m][::-1], x) / (1 - x) ** (m + 2) * w ** m
        return out

    d = np.zeros((max_order + 1, 4), dtype=complex)
    d[:, 0] = _sum_terms(th2, 0)
    s3 = _sum_terms(th3, 1)
    s4 = _sum_terms(th4, 1)
    d[:, 1] = s3
    d[:, 2] = s4
    d[0, 1] += 1
    d[0, 2] += 1
    s = _sum_terms(lam, 1)
    d[:, 3] = -2 * PI ** 2 * s
    d[0, 3] += PI ** 2 / 12
    d.setflags(write=False)
    return ThetaQuad(tau, d)


@dataclass(frozen=True)
class ModularForms:
    g2_sym: complex
    g3_sym: complex
    g2: complex
    g3: complex
    E2: complex
    E4: complex
    E6: complex


def _forms_from_values(t2, t3, t4, eta):
    p2, p3, p4 = t2 ** 4, t3 ** 4, t4 ** 4
    g2s = PI ** 4 / 24 * (p2 * p2 + p3 * p3 + p4 * p4)
    g3s = PI ** 6 / 432 * (p2 + p3) * (p3 + p4) * (p4 - p2)
    g2 = PI ** 4 / 12 * (p3 * p3 - p3 * p4 + p4 * p4)
    g3 = PI ** 6 / 432 * (2 * p3 - p4) * (p3 + p4) * (2 * p4 - p3)
    return ModularForms(g2s, g3s, g2, g3, 12 * eta / PI ** 2, 12 * g2 / PI ** 4,
                        216 * g3 / PI ** 6)


def modular_forms(tq):
    """g2, g3 in the symmetric and theta2-free conventions, and E2, E4, E6."""
    return _forms_from_values(*tq.values)


def duplication_values(tq, eta_tau=None, g2_tau=None):
    """eta(2 tau) and g2(2 tau) from values at tau."""
    t3, t4 = tq.theta3, tq.theta4
    if eta_tau is None:
        eta_tau = tq.eta
    if g2_tau is None:
        g2_tau = modular_forms(tq).g2
    s = t3 ** 4 + t4 ** 4
    return (0.5 * eta_tau + PI ** 2 / 48 * s,
            -0.25 * g2_tau + 5 * PI ** 4 / 192 * s * s)


def closed_form_state(system, tau, m=IDENTITY, eps=None, I=None, sign=None):
    """General solutions of Canonical19 and Jacobi9 built from theta-constants.

    Canonical19: eps scales x (default sqrt(pi i / 6)); eps = 0 gives the
    decoupled elementary family, whose y-sign is ``sign`` (default +1).
    Jacobi9: ``I`` is the algebraic integral and ``sign`` the common sign of
    (A, B); both are required.
    """
    from .flows import SystemId, SystemState

    tag = system.tag if isinstance(system, SystemId) else SystemId.parse(system).tag
    t = complex(tau.value if isinstance(tau, Tau) else tau)
    D = m.denominator(t)
    if D == 0:
        raise DomainError("gamma tau + delta = 0")
    if tag == "Canonical19":
        if eps is None:
            eps = C6
        if eps == 0:
            sg = 1 if sign is None else sign
            if sg not in (1, -1):
                raise BranchError("sign must be +1 or -1")
            ga, de = m.gamma, m.delta
            v = [0, sg / D, 1 / D, -(ga * ga * t + ga * de - 1) / D ** 2]
            return SystemState(SystemId(tag), v)
        T = m(t)
        if not T.imag > 0:
            raise DomainError("Moebius image of tau leaves the upper half-plane")
        t2, t3, t4, eta = theta_quad(T).values
        v = [eps * t2 * t2 / D, C6 * t3 * t3 / D, C6 * t4 * t4 / D,
             2j / PI * eta / D ** 2 - m.gamma / D]
        return SystemState(SystemId(tag), v)
    if tag == "Jacobi9":
        if sign not in (1, -1):
            raise BranchError("Jacobi9 closed form needs sign = +1 or -1")
        if I is None:
            raise BranchError("Jacobi9 closed form needs the integral I")
        I = complex(I)
        if I == 0:
            raise DomainError("I = 0 gives a degenerate solution")
        T = m(t)
        if not T.imag > 0:
            raise DomainError("Moebius image of tau leaves the upper half-plane")
        t2, t3, t4, eta = theta_quad(T).values
        r = t2 ** 4 / t3 ** 4
        a = I - 2 * I * r
        b = I * I / 8 * t2 ** 4 * t4 ** 4 / t3 ** 8
        A = sign * np.sqrt(1j * PI / I) * t3 ** 2 / D
        B = sign * np.sqrt(1j * I / PI ** 3) / (D * t3 ** 2) * (
            PI ** 2 / 12 * (t2 ** 4 - t4 ** 4) + eta + 0.5j * PI * m.gamma * D)
        return SystemState(SystemId(tag), [A, B, a, b])
    raise DomainError(f"no closed form for {tag}")


def jacobi_variables(tq):
    """(A, B, a, b) expressed through theta-constants at tau (Jacobi's change)."""
    t2, t3, t4, eta = tq.values
    return np.array([t3 ** 2, 4 / (PI ** 2 * t3 ** 2) * (eta + PI ** 2 / 12 * (t2 ** 4 - t4 ** 4)),
                     4 - 8 * t2 ** 4 / t3 ** 4, 2 * t2 ** 4 * t4 ** 4 / t3 ** 8])


__all__ = ["Tau", "ThetaQuad", "Moebius", "IDENTITY", "ModularForms", "theta_quad",
           "modular_forms", "duplication_values", "closed_form_state",
           "jacobi_variables", "IM_FLOOR"]
