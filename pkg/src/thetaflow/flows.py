"""Vector fields, Jacobians, point transformations and Taylor-mode derivatives.

Component orderings:

    Symmetric8          (theta2, theta3, theta4, eta)
    Jacobi9             (A, B, a, b)
    Canonical19         (x, y, z, u)
    Intermediate25      (A, B, k, I)
    LegendreClosure28   (K, K', E, E')      independent variable k
    DarbouxHalphen2     (X, Y, Z)
    Weierstrass3        (g2, g3, eta)
    Ramamani44          (P, Ptilde, Q)
    HalphenBrioschi57   (x, y, z)           parameters (a, b, c)
"""

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import (BranchError, ParameterError, SingularModulus, SingularTransform,
                     UnsupportedSystem)

PI = np.pi
C6 = np.sqrt(1j * PI / 6)  # sqrt(pi i / 6), principal branch

_DIMS = {
    "Symmetric8": 4, "Jacobi9": 4, "Canonical19": 4, "Intermediate25": 4,
    "LegendreClosure28": 4, "DarbouxHalphen2": 3, "Weierstrass3": 3,
    "Ramamani44": 3, "HalphenBrioschi57": 3,
}

COMPONENTS = {
    "Symmetric8": ("theta2", "theta3", "theta4", "eta"),
    "Jacobi9": ("A", "B", "a", "b"),
    "Canonical19": ("x", "y", "z", "u"),
    "Intermediate25": ("A", "B", "k", "I"),
    "LegendreClosure28": ("K", "Kp", "E", "Ep"),
    "DarbouxHalphen2": ("X", "Y", "Z"),
    "Weierstrass3": ("g2", "g3", "eta"),
    "Ramamani44": ("P", "Pt", "Q"),
    "HalphenBrioschi57": ("x", "y", "z"),
}


def hb_coefficients(a, b, c):
    """Coefficients of the quadratic form in the Halphen-Brioschi system."""
    return ((a * c + b * c - 2 * a * b - c) / 4,
            (a * a + b * b - a * c - b * c + c - 1) / 4,
            (c * c + 2 * a * b - a * c - b * c - c) / 4)


@dataclass(frozen=True)
class SystemId:
    tag: str
    params: tuple = ()

    def __post_init__(self):
        if self.tag not in _DIMS:
            raise UnsupportedSystem(f"unknown system {self.tag!r}")
        if self.tag == "HalphenBrioschi57":
            if len(self.params) != 3:
                raise UnsupportedSystem("HalphenBrioschi57 needs (a, b, c)")
            object.__setattr__(self, "params", tuple(complex(p) for p in self.params))
        elif self.params:
            raise UnsupportedSystem(f"{self.tag} takes no parameters")

    @property
    def dim(self):
        return _DIMS[self.tag]

    @property
    def components(self):
        return COMPONENTS[self.tag]

    @property
    def derived(self):
        """(bold a, bold b, bold c), always recomputed from (a, b, c)."""
        if self.tag != "HalphenBrioschi57":
            return ()
        return hb_coefficients(*self.params)

    @property
    def polynomial(self):
        return self.tag != "LegendreClosure28"

    @classmethod
    def parse(cls, text, params=()):
        key = text.strip().lower()
        for tag in _DIMS:
            if tag.lower() == key:
                return cls(tag, tuple(params))
        raise UnsupportedSystem(f"unknown system {text!r}")

    def __str__(self):
        return self.tag


SYMMETRIC8 = SystemId("Symmetric8")
JACOBI9 = SystemId("Jacobi9")
CANONICAL19 = SystemId("Canonical19")
INTERMEDIATE25 = SystemId("Intermediate25")
LEGENDRE28 = SystemId("LegendreClosure28")
DARBOUX_HALPHEN = SystemId("DarbouxHalphen2")
WEIERSTRASS3 = SystemId("Weierstrass3")
RAMAMANI44 = SystemId("Ramamani44")


def halphen_brioschi(a, b, c):
    return SystemId("HalphenBrioschi57", (a, b, c))


@dataclass(frozen=True)
class SystemState:
    """Complex state of one system.  ``t`` is the independent variable when
    the field depends on it (the modulus k for LegendreClosure28)."""
    system: SystemId
    v: np.ndarray = field(repr=False)
    t: complex = None

    def __post_init__(self):
        v = np.array(self.v, dtype=complex).reshape(-1)
        if v.size != self.system.dim:
            raise ParameterError(
                f"{self.system} expects {self.system.dim} components, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        if self.system.tag == "LegendreClosure28" and self.t is None:
            raise ParameterError("LegendreClosure28 state needs its modulus t=k")

    def with_v(self, v, t=None):
        return SystemState(self.system, v, self.t if t is None else t)

    def __repr__(self):
        return f"SystemState({self.system}, {np.array2string(self.v, precision=6)})"


# ---------------------------------------------------------------------------
# Truncated Taylor series used for Lie derivatives

class Taylor:
    """Truncated power series in the time variable."""

    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, c):
        self.c = np.asarray(c, dtype=complex)

    @property
    def n(self):
        return self.c.size

    def _coerce(self, other):
        if isinstance(other, Taylor):
            return other.c
        out = np.zeros(self.n, dtype=complex)
        out[0] = other
        return out

    def __add__(self, other):
        return Taylor(self.c + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Taylor(self.c - self._coerce(other))

    def __rsub__(self, other):
        return Taylor(self._coerce(other) - self.c)

    def __neg__(self):
        return Taylor(-self.c)

    def __mul__(self, other):
        if isinstance(other, Taylor):
            return Taylor(np.convolve(self.c, other.c)[:self.n])
        return Taylor(self.c * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        a = self.c
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term")
        r = np.zeros_like(a)
        r[0] = 1 / a[0]
        for m in range(1, a.size):
            r[m] = -np.dot(a[1:m + 1], r[m - 1::-1][:m]) / a[0]
        return Taylor(r)

    def log(self):
        # d/dt log f = f'/f, integrated termwise
        d = self.derivative() / self
        out = np.zeros_like(self.c)
        out[0] = np.log(self.c[0])
        out[1:] = d.c[:-1] / np.arange(1, self.n)
        return Taylor(out)

    def __pow__(self, p):
        if not isinstance(p, int) or p < 0:
            raise ParameterError("only non-negative integer powers")
        out = Taylor(np.eye(1, self.n, dtype=complex)[0])
        base = self
        while p:
            if p & 1:
                out = out * base
            base = base * base
            p >>= 1
        return out

    def derivative(self):
        d = np.zeros_like(self.c)
        d[:-1] = self.c[1:] * np.arange(1, self.n)
        return Taylor(d)

    def derivs(self):
        """Values f, f', f'', ... at t = 0."""
        fact = np.cumprod(np.r_[1, np.arange(1, self.n)])
        return self.c * fact

    @classmethod
    def from_derivs(cls, d):
        d = np.asarray(d, dtype=complex)
        fact = np.cumprod(np.r_[1, np.arange(1, d.size)])
        return cls(d / fact)


# ---------------------------------------------------------------------------
# Right-hand sides (generic arithmetic: complex scalars, arrays or Taylor)

def _rhs(tag, v, params=(), t=None):
    if tag == "Canonical19":
        x, y, z, u = v
        y2, z2 = y * y, z * z
        return [(u + y2 + z2) * x, (u + y2 - 2 * z2) * y, (u - 2 * y2 + z2) * z,
                u * u - y2 * y2 + y2 * z2 - z2 * z2]
    if tag == "Jacobi9":
        A, B, a, b = v
        A2 = A * A
        return [2 * A2 * B, b * A2 * A, -16 * b * A2, a * b * A2]
    if tag == "Symmetric8":
        t2, t3, t4, eta = v
        p2, p3, p4 = t2 ** 4, t3 ** 4, t4 ** 4
        c = 1j / PI
        h = PI ** 2 / 12
        return [c * (eta + h * (p3 + p4)) * t2, c * (eta + h * (p2 - p4)) * t3,
                c * (eta - h * (p2 + p3)) * t4,
                c * (2 * eta * eta - (PI ** 4 / 144) * (p2 * p2 + p3 * p3 + p4 * p4))]
    if tag == "Intermediate25":
        A, B, k, I = v
        A2 = A * A
        w = k * (1 - k * k)
        return [2 * A2 * B, (1 / 8) * I * I * k * w * A2 * A, 0.5 * I * w * A2, 0 * I]
    if tag == "DarbouxHalphen2":
        X, Y, Z = v
        return [(Y + Z) * X - Y * Z, (X + Z) * Y - X * Z, (X + Y) * Z - X * Y]
    if tag == "Weierstrass3":
        g2, g3, eta = v
        c = 1j / PI
        return [c * (8 * g2 * eta - 12 * g3), c * (12 * g3 * eta - (2 / 3) * g2 * g2),
                c * (2 * eta * eta - g2 / 6)]
    if tag == "Ramamani44":
        P, Pt, Q = v
        return [0.5j * PI * (P * P - Q), 1j * PI * (P * Pt - Q), 2j * PI * (P - Pt) * Q]
    if tag == "HalphenBrioschi57":
        x, y, z = v
        aa, bb, cc = hb_coefficients(*params)
        xi = aa * (y - x) ** 2 + bb * (z - x) ** 2 + cc * (z - y) ** 2
        return [x * x + xi, y * y + xi, z * z + xi]
    if tag == "LegendreClosure28":
        K, Kp, E, Ep = v
        k = t
        k2 = k * k
        return [-K / k - E / ((k2 - 1) * k), k * Kp / (1 - k2) + Ep / ((k2 - 1) * k),
                (E - K) / k, k * Kp / (1 - k2) + k * Ep / (k2 - 1)]
    raise UnsupportedSystem(tag)


def _check_modulus(k):
    if abs(k) < 1e-10 or abs(1 - k * k) < 1e-10:
        raise SingularModulus(f"modulus {k} on the singular set")


def vector_field(s):
    """Right-hand side of the state's system, in that system's own time."""
    if s.system.tag == "LegendreClosure28":
        _check_modulus(s.t)
    return np.array(_rhs(s.system.tag, s.v, s.system.params, s.t), dtype=complex)


def jacobian(s):
    """Analytic matrix W[j, k] = dV^j / dX^k."""
    tag = s.system.tag
    v = s.v
    if tag == "Canonical19":
        x, y, z, u = v
        y2, z2 = y * y, z * z
        W = [[u + y2 + z2, 2 * x * y, 2 * x * z, x],
             [0, u + 3 * y2 - 2 * z2, -4 * y * z, y],
             [0, -4 * y * z, u - 2 * y2 + 3 * z2, z],
             [0, -4 * y ** 3 + 2 * y * z2, 2 * y2 * z - 4 * z ** 3, 2 * u]]
    elif tag == "Jacobi9":
        A, B, a, b = v
        W = [[4 * A * B, 2 * A * A, 0, 0],
             [3 * b * A * A, 0, 0, A ** 3],
             [-32 * b * A, 0, 0, -16 * A * A],
             [2 * a * b * A, 0, b * A * A, a * A * A]]
    elif tag == "Symmetric8":
        t2, t3, t4, eta = v
        c = 1j / PI
        h = PI ** 2 / 12
        q = PI ** 4 / 144
        p2, p3, p4 = t2 ** 4, t3 ** 4, t4 ** 4
        W = [[c * (eta + h * (p3 + p4)), c * h * 4 * t3 ** 3 * t2, c * h * 4 * t4 ** 3 * t2, c * t2],
             [c * h * 4 * t2 ** 3 * t3, c * (eta + h * (p2 - p4)), -c * h * 4 * t4 ** 3 * t3, c * t3],
             [-c * h * 4 * t2 ** 3 * t4, -c * h * 4 * t3 ** 3 * t4, c * (eta - h * (p2 + p3)), c * t4],
             [-c * q * 8 * t2 ** 7, -c * q * 8 * t3 ** 7, -c * q * 8 * t4 ** 7, 4 * c * eta]]
    elif tag == "Intermediate25":
        A, B, k, I = v
        w = k * (1 - k * k)
        dw = 1 - 3 * k * k
        W = [[4 * A * B, 2 * A * A, 0, 0],
             [(3 / 8) * I * I * k * w * A * A, 0, (1 / 8) * I * I * (w + k * dw) * A ** 3, (1 / 4) * I * k * w * A ** 3],
             [I * w * A, 0, 0.5 * I * dw * A * A, 0.5 * w * A * A],
             [0, 0, 0, 0]]
    elif tag == "DarbouxHalphen2":
        X, Y, Z = v
        W = [[Y + Z, X - Z, X - Y],
             [Y - Z, X + Z, Y - X],
             [Z - Y, Z - X, X + Y]]
    elif tag == "Weierstrass3":
        g2, g3, eta = v
        c = 1j / PI
        W = [[8 * c * eta, -12 * c, 8 * c * g2],
             [-(4 / 3) * c * g2, 12 * c * eta, 12 * c * g3],
             [-c / 6, 0, 4 * c * eta]]
    elif tag == "Ramamani44":
        P, Pt, Q = v
        W = [[1j * PI * P, 0, -0.5j * PI],
             [1j * PI * Pt, 1j * PI * P, -1j * PI],
             [2j * PI * Q, -2j * PI * Q, 2j * PI * (P - Pt)]]
    elif tag == "HalphenBrioschi57":
        x, y, z = v
        aa, bb, cc = s.system.derived
        gx = -2 * aa * (y - x) - 2 * bb * (z - x)
        gy = 2 * aa * (y - x) - 2 * cc * (z - y)
        gz = 2 * bb * (z - x) + 2 * cc * (z - y)
        W = [[2 * x + gx, gy, gz], [gx, 2 * y + gy, gz], [gx, gy, 2 * z + gz]]
    elif tag == "LegendreClosure28":
        k = s.t
        _check_modulus(k)
        k2 = k * k
        W = [[-1 / k, 0, -1 / ((k2 - 1) * k), 0],
             [0, k / (1 - k2), 0, 1 / ((k2 - 1) * k)],
             [-1 / k, 0, 1 / k, 0],
             [0, k / (1 - k2), 0, k / (k2 - 1)]]
    else:
        raise UnsupportedSystem(tag)
    return np.array(W, dtype=complex)


def taylor_coefficients(s, order):
    """Taylor coefficients c[n, j] of the solution through s, n = 0..order."""
    if not s.system.polynomial:
        raise UnsupportedSystem(f"{s.system} has a non-polynomial right-hand side")
    d = s.system.dim
    c = np.zeros((order + 1, d), dtype=complex)
    c[0] = s.v
    for n in range(order):
        series = [Taylor(c[:n + 1, j]) for j in range(d)]
        rhs = _rhs(s.system.tag, series, s.system.params)
        for j in range(d):
            r = rhs[j]
            val = r.c[n] if isinstance(r, Taylor) else (r if n == 0 else 0)
            c[n + 1, j] = val / (n + 1)
    return c


def lie_derivatives(s, component, order):
    """Time derivatives of orders 1..order of one component along the flow."""
    if not 1 <= order:
        raise ParameterError("order must be >= 1")
    idx = component if isinstance(component, int) else s.system.components.index(component)
    c = taylor_coefficients(s, order)[:, idx]
    fact = np.cumprod(np.r_[1, np.arange(1, order + 1)])
    return (c * fact)[1:]


def component_series(s, order):
    """Per-component Taylor objects of the flow through s."""
    c = taylor_coefficients(s, order)
    return [Taylor(c[:, j]) for j in range(s.system.dim)]


# ---------------------------------------------------------------------------
# Point transformations

def _sqrt(w, sign):
    if sign not in (1, -1):
        raise BranchError(f"branch sign must be +1 or -1, got {sign!r}")
    return sign * np.sqrt(complex(w))


def _signs(branch, n):
    if branch is None:
        return (1,) * n
    if isinstance(branch, (int, np.integer)):
        branch = (int(branch),) * n
    branch = tuple(branch)
    if len(branch) != n or any(b not in (1, -1) for b in branch):
        raise BranchError(f"expected {n} branch signs of +-1, got {branch!r}")
    return branch


def canonical_I(v):
    """Canonical I^2 = (y^2 - z^2) / (pi x^2)."""
    x, y, z, _ = v
    if abs(x) == 0:
        raise SingularTransform("x = 0: integral quotient undefined")
    return (y * y - z * z) / (PI * x * x)


def _c19_to_dh(v):
    x, y, z, u = v
    return [u + y * y + z * z, u + y * y - 2 * z * z, u - 2 * y * y + z * z]


def _dh_to_c19(v, branch, x):
    X, Y, Z = v
    sy, sz = _signs(branch, 2)
    if x is None:
        raise BranchError("the x component is not determined by (X, Y, Z); pass x=")
    return [x, _sqrt((X - Z) / 3, sy), _sqrt((X - Y) / 3, sz), (X + Y + Z) / 3]


def _c19_to_j9(v, branch):
    x, y, z, u = v
    (sI,) = _signs(branch, 1)
    if abs(y) == 0:
        raise SingularTransform("y = 0")
    Ic = _sqrt(canonical_I(v), sI)
    if Ic == 0:
        raise SingularTransform("y^2 = z^2")
    y2, z2 = y * y, z * z
    A = (1 - 1j) / (2 * Ic) * y
    B = (1 + 1j) / 2 * Ic / y * (u + y2 - 2 * z2)
    a = 12 / (PI * 1j) * (y2 - z2) / x ** 2 * (y2 - 2 * z2) / y2
    b = -18 / PI ** 2 * z2 / (x ** 4 * y2 * y2) * (y2 - z2) ** 3
    return [A, B, a, b]


def _c19_to_i25(v, branch):
    x, y, z, u = v
    sI, sk = _signs(branch, 2)
    if abs(y) == 0:
        raise SingularTransform("y = 0")
    Ic2 = canonical_I(v)
    Ic = _sqrt(Ic2, sI)
    if Ic == 0:
        raise SingularTransform("y^2 = z^2")
    A = (1 - 1j) / (2 * Ic) * y
    B = (1 + 1j) / 2 * Ic / y * (u + y * y - 2 * z * z)
    k = _sqrt(1 - z * z / (y * y), sk)
    return [A, B, k, 12j * Ic2]


def _i25_to_c19(v, branch):
    A, B, k, IJ = v
    sI, sz = _signs(branch, 2)
    Ic = _sqrt(IJ / 12j, sI)
    if Ic == 0:
        raise SingularTransform("I = 0")
    Ic2 = Ic * Ic
    x = (1 + 1j) / np.sqrt(PI) * k * A
    y = (1 + 1j) * Ic * A
    z = _sqrt(2j * Ic2 * (1 - k * k) * A * A, sz)
    u = 2 * A * (B - 1j * Ic2 * (2 * k * k - 1) * A)
    return [x, y, z, u]


def _j9_to_c19(v, branch):
    A, B, a, b = v
    sJ, sI, sk, sz = _signs(branch, 4)
    IJ = _sqrt(a * a + 32 * b, sJ)
    if IJ == 0:
        raise SingularTransform("a^2 + 32 b = 0")
    k = _sqrt(0.5 - 0.5 * a / IJ, sk)
    return _i25_to_c19([A, B, k, IJ], (sI, sz))


def _c19_to_r44(v, convention):
    x, y, z, u = v
    y2, z2 = y * y, z * z
    sgn = {"printed": 1, "series": -1}[convention]
    return [2 * (u + y2 + z2) / (PI * 1j), 3 * (y2 + z2) / (PI * 1j), sgn * 36 * y2 * z2 / PI ** 2]


def _r44_to_dh(v, branch, convention):
    P, Pt, Q = v
    (sr,) = _signs(branch, 1)
    sgn = {"printed": 1, "series": -1}[convention]
    X = 0.5j * PI * P
    s = 1j * PI * Pt          # (X - Y) + (X - Z)
    p = sgn * PI ** 2 * Q / 4  # (X - Y)(X - Z)
    disc = _sqrt(s * s - 4 * p, sr)
    xz = (s + disc) / 2
    xy = (s - disc) / 2
    return [X, X - xy, X - xz]


def _dh_to_w3(v):
    X, Y, Z = v
    eta = PI * (X + Y + Z) / 6j
    g2 = -PI ** 2 * (X * X + Y * Y + Z * Z - X * Y - X * Z - Y * Z) / 3
    g3 = PI ** 3 * (2 * X - Y - Z) * (2 * Y - X - Z) * (2 * Z - X - Y) / (-54j)
    return [g2, g3, eta]


_PERMS = list(permutations(range(3)))


def _w3_to_dh(v, branch):
    g2, g3, eta = v
    idx = 0 if branch is None else branch
    if not isinstance(idx, (int, np.integer)) or not 0 <= idx < 6:
        raise BranchError("Weierstrass3 -> DarbouxHalphen2 branch is a root ordering 0..5")
    S = 6j * eta / PI
    roots = np.roots([1, 0, 9 * g2 / PI ** 2, 54j * g3 / PI ** 3])
    roots = sorted(roots, key=lambda r: (round(r.real, 12), round(r.imag, 12)))
    e = [roots[i] for i in _PERMS[idx]]
    return [(ei + S) / 3 for ei in e]


def _c19_to_w3(v):
    x, y, z, u = v
    p3 = (y / C6) ** 2   # theta3^4
    p4 = (z / C6) ** 2   # theta4^4
    g2 = PI ** 4 / 12 * (p3 * p3 - p3 * p4 + p4 * p4)
    g3 = PI ** 6 / 432 * (2 * p3 - p4) * (p3 + p4) * (2 * p4 - p3)
    return [g2, g3, PI * u / 2j]


def _l28_to_j9(v, k):
    K, Kp, E, Ep = v
    kp2 = 1 - k * k
    return [2 * K / PI, 2 * E / PI - kp2 * 2 * K / PI, 4 * (1 - 2 * k * k), 2 * k * k * kp2]


def transform_state(s, to, *, branch=None, x=None, convention="printed"):
    """Map a state into another system's coordinates.

    ``branch`` resolves square-root (or root-ordering) ambiguities; see the
    individual maps.  ``convention`` selects the sign of the Q component for
    Ramamani44 ("printed" or "series").
    """
    src = s.system.tag
    dst = to.tag if isinstance(to, SystemId) else SystemId.parse(to).tag
    if convention not in ("printed", "series"):
        raise ParameterError("convention must be 'printed' or 'series'")
    v = s.v
    if src == "Canonical19" and dst == "DarbouxHalphen2":
        out = _c19_to_dh(v)
    elif src == "DarbouxHalphen2" and dst == "Canonical19":
        out = _dh_to_c19(v, branch, x)
    elif src == "Canonical19" and dst == "Jacobi9":
        out = _c19_to_j9(v, branch)
    elif src == "Jacobi9" and dst == "Canonical19":
        out = _j9_to_c19(v, branch)
    elif src == "Canonical19" and dst == "Intermediate25":
        out = _c19_to_i25(v, branch)
    elif src == "Intermediate25" and dst == "Canonical19":
        out = _i25_to_c19(v, branch)
    elif src == "Canonical19" and dst == "Ramamani44":
        out = _c19_to_r44(v, convention)
    elif src == "Ramamani44" and dst == "DarbouxHalphen2":
        out = _r44_to_dh(v, branch, convention)
    elif src == "DarbouxHalphen2" and dst == "Weierstrass3":
        out = _dh_to_w3(v)
    elif src == "Weierstrass3" and dst == "DarbouxHalphen2":
        out = _w3_to_dh(v, branch)
    elif src == "Canonical19" and dst == "Weierstrass3":
        out = _c19_to_w3(v)
    elif src == "LegendreClosure28" and dst == "Jacobi9":
        out = _l28_to_j9(v, s.t)
    else:
        raise UnsupportedSystem(f"no transformation {src} -> {dst}")
    out = np.array(out, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise SingularTransform(f"{src} -> {dst} undefined at this state")
    return SystemState(SystemId(dst) if dst != "HalphenBrioschi57" else to, out)


def pushforward_residual(s, to, *, time_factor=1.0, step=None, **kw):
    """max |T V_src - c V_dst| with T from fourth-order central differences
    of the map; the default step is 2e-4 times the state's size."""
    d = s.system.dim
    base = transform_state(s, to, **kw)
    if step is None:
        step = 2e-4 * max(1.0, float(np.max(np.abs(s.v))))
    T = np.zeros((base.system.dim, d), dtype=complex)

    def f(j, c):
        e = np.zeros(d, dtype=complex)
        e[j] = c * step
        return transform_state(s.with_v(s.v + e), to, **kw).v

    for j in range(d):
        T[:, j] = (8 * (f(j, 1) - f(j, -1)) - (f(j, 2) - f(j, -2))) / (12 * step)
    lhs = T @ vector_field(s)
    rhs = time_factor * vector_field(base)
    scale = max(np.max(np.abs(rhs)), np.max(np.abs(lhs)), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def homogeneity_residual(s, c):
    """|V(cX) - c^2 V(X)| relative, for the quadratic homogeneous systems."""
    lhs = vector_field(s.with_v(c * s.v))
    rhs = c * c * vector_field(s)
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))


__all__ = [
    "SystemId", "SystemState", "Taylor", "vector_field", "jacobian",
    "taylor_coefficients", "lie_derivatives", "component_series",
    "transform_state", "pushforward_residual", "homogeneity_residual",
    "hb_coefficients", "halphen_brioschi", "canonical_I",
    "SYMMETRIC8", "JACOBI9", "CANONICAL19", "INTERMEDIATE25", "LEGENDRE28",
    "DARBOUX_HALPHEN", "WEIERSTRASS3", "RAMAMANI44",
]
