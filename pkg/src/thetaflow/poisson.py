"""Poisson structures of the canonical system and their verification.

Canonical19 coordinates are X = (x, y, z, u).  The rational bracket omega
and the transcendental bracket omega_tilde form the pencil
Omega = omega + lam * omega_tilde; both make the canonical field
Hamiltonian for H = (y^2 - z^2) / (2 x^2).
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import checks
from .conserved import (LegendreBranch, _apply, canonical_integrals_with_gradients,
                        hamiltonian_with_gradient, normalizer_N, principal_quad)
from .errors import (ParameterError, ResamplingError, SingularState, SingularTransform,
                     ThetaFlowError)
from .flows import (CANONICAL19, INTERMEDIATE25, JACOBI9, SystemState, jacobian,
                    taylor_coefficients, transform_state, vector_field)

PI = np.pi
FD_STEP = 1e-6


@dataclass(frozen=True)
class BracketMatrix:
    m: np.ndarray
    kind: str
    lam: complex = None

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class Observable:
    """A scalar function of the state with an optional analytic gradient."""
    name: str
    fn: object
    grad: object = None

    def value(self, s):
        return self.fn(s)

    def gradient(self, s):
        if self.grad is not None:
            return np.asarray(self.grad(s), dtype=complex)
        return fd_gradient(self.fn, s)


def fd_gradient(fn, s, h=FD_STEP):
    d = s.v.size
    g = np.zeros(d, dtype=complex)
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = h
        g[j] = (fn(s.with_v(s.v + e)) - fn(s.with_v(s.v - e))) / (2 * h)
    return g


def pfaffian_det(m):
    """det of a 4x4 antisymmetric matrix as the square of its Pfaffian."""
    pf = m[0, 1] * m[2, 3] - m[0, 2] * m[1, 3] + m[0, 3] * m[1, 2]
    return pf * pf


def pfaffian_scale(m):
    """(sum of |Pfaffian terms|)^2: the roundoff scale of pfaffian_det under cancellation."""
    t = abs(m[0, 1] * m[2, 3]) + abs(m[0, 2] * m[1, 3]) + abs(m[0, 3] * m[1, 2])
    return t * t


def _antisym(upper):
    m = np.zeros((4, 4), dtype=complex)
    for (i, j), val in upper.items():
        m[i, j] = val
        m[j, i] = -val
    return m


def _require_c19(s):
    if s.system.tag != "Canonical19":
        raise SingularState("brackets are defined on Canonical19 states")


def omega_matrix(s):
    _require_c19(s)
    x, y, z, u = s.v
    H, _ = hamiltonian_with_gradient(s)
    if H == 0:
        raise SingularState("H = 0: the rational bracket prefactor is undefined")
    y2, z2 = y * y, z * z
    r = [(u + y2 - 2 * z2) * y, (u - 2 * y2 + z2) * z, u * u - y2 * y2 + y2 * z2 - z2 * z2]
    return x / (2 * H) * _antisym({(0, 1): r[0], (0, 2): r[1], (0, 3): r[2]})


def omega_tilde_matrix(s, quad=None):
    _require_c19(s)
    x, y, z, u = s.v
    if y == 0:
        raise SingularState("y = 0")
    q = principal_quad((z / y) ** 2) if quad is None else quad
    K, E = q[0], q[2]
    e = E / K
    y2, z2 = y * y, z * z
    M1 = 3 * y2 * (e - 1) ** 2 - z2
    M3 = y2 * (3 * e * e - 1) + z2
    M2 = 3 * y2 * y2 * (e - 1) ** 2 + y2 * z2 * (6 * e - 5) + 2 * z2 * z2
    m = _antisym({(0, 1): x * z2 / y, (0, 2): x * z, (0, 3): x * M1,
                  (1, 2): z * (y2 - z2) / y, (1, 3): M2 / y, (2, 3): z * M3})
    return 2 / PI * K * K * m


def bracket(s, kind="omega", lam=1.0, quad=None):
    """omega, omega_tilde or the pencil omega + lam * omega_tilde at s."""
    if kind == "omega":
        return BracketMatrix(omega_matrix(s), "omega")
    if kind == "omega_tilde":
        return BracketMatrix(omega_tilde_matrix(s, quad), "omega_tilde")
    if kind == "pencil":
        m = omega_matrix(s)
        if lam != 0:
            m = m + lam * omega_tilde_matrix(s, quad)
        return BracketMatrix(m, "pencil", complex(lam))
    raise ParameterError(f"unknown bracket kind {kind!r}")


def poisson_bracket(f, g, b, s):
    """{f, g}_b = grad f . b . grad g."""
    gf = f.gradient(s) if isinstance(f, Observable) else np.asarray(f)
    gg = g.gradient(s) if isinstance(g, Observable) else np.asarray(g)
    return gf @ b.m @ gg


# ---------------------------------------------------------------------------
# Standard observables of the canonical system

def observables(quad=None):
    """H, J1, J2, N and the coordinates, all with analytic gradients."""
    def J(i):
        return lambda s: canonical_integrals_with_gradients(s, quad)[i]
    obs = {
        "H": Observable("H", lambda s: hamiltonian_with_gradient(s)[0],
                        lambda s: hamiltonian_with_gradient(s)[1]),
        "J1": Observable("J1", J(0), J(2)),
        "J2": Observable("J2", J(1), J(3)),
        "N": Observable("N", lambda s: normalizer_N(s, quad)[0],
                        lambda s: normalizer_N(s, quad)[1]),
    }
    for i, name in enumerate(("x", "y", "z", "u")):
        e = np.eye(4, dtype=complex)[i]
        obs[name] = Observable(name, lambda s, i=i: s.v[i], lambda s, e=e: e)
    return obs


def inverse_integral(lam, quad=None):
    """(lam J1)^-1 as an observable."""
    def f(s):
        return 1 / (lam * canonical_integrals_with_gradients(s, quad)[0])

    def g(s):
        J1, _, g1, _ = canonical_integrals_with_gradients(s, quad)
        return -g1 / (lam * J1 * J1)
    return Observable("inv_lam_J1", f, g)


def hamiltonian_field_check(s, threshold=1e-12):
    """omega grad H against the canonical vector field."""
    _, gH = hamiltonian_with_gradient(s)
    lhs = omega_matrix(s) @ gH
    V = vector_field(s)
    r = checks.relative(lhs - V, V)
    return checks.make("omega_grad_H", r, threshold)


def casimir_and_det_check(s, lam=1.0, threshold=1e-9):
    """Casimir relations of both brackets and the pencil determinant."""
    obs = observables()
    gH = obs["H"].gradient(s)
    J1, J2, g1, g2 = canonical_integrals_with_gradients(s)
    _, gN = normalizer_N(s)
    w = omega_matrix(s)
    wt = omega_tilde_matrix(s)
    rows = []

    def cas(name, m, g):
        scale = np.max(np.abs(m)) * np.max(np.abs(g))
        rows.append(checks.make(name, checks.relative(m @ g, scale), threshold))

    cas("casimir_omega_J1", w, g1)
    cas("casimir_omega_J2", w, g2)
    cas("casimir_omega_tilde_H", wt, gH)
    cas("casimir_omega_tilde_N", wt, gN)
    x, y, z, u = s.v
    lam = complex(lam)
    Om = w + lam * wt
    det = pfaffian_det(Om)
    target = 4 / PI ** 2 * lam * lam * J1 ** 4 * x ** 6 * y * y * z * z
    rows.append(checks.make(f"det_pencil[lam={_fmt(lam)}]", abs(det - target) / pfaffian_scale(Om),
                            threshold, absolute=abs(det - target),
                            detail="relative to the squared Pfaffian term sum"))
    dw = pfaffian_det(w)
    rows.append(checks.make("det_omega_zero", abs(dw) / np.max(np.abs(w)) ** 4, 1e-12,
                            absolute=abs(dw)))
    return rows


def commutation_check(s, lam=1.0, threshold=1e-9):
    """{H, J1} = {H, J2} = 0 and {J2, (lam J1)^-1} = 1 in the pencil."""
    obs = observables()
    b = bracket(s, "pencil", lam)
    rows = []
    gH = obs["H"].gradient(s)
    J1, J2, g1, g2 = canonical_integrals_with_gradients(s)
    sc = np.max(np.abs(b.m))
    for name, g in (("H_J1", g1), ("H_J2", g2)):
        val = gH @ b.m @ g
        scale = sc * np.max(np.abs(gH)) * np.max(np.abs(g))
        rows.append(checks.make(f"bracket_{name}", abs(val) / scale, threshold, absolute=abs(val)))
    val = poisson_bracket(obs["J2"], inverse_integral(lam), b, s)
    rows.append(checks.make("bracket_J2_invJ1", abs(val - 1), 1e-8, absolute=abs(val - 1)))
    return rows


def _fmt(z):
    z = complex(z)
    return f"{z.real:g}{z.imag:+g}i" if z.imag else f"{z.real:g}"


# ---------------------------------------------------------------------------
# Jacobi identity

def _fd_entries(b_field, s, l, h):
    e = np.zeros(s.v.size, dtype=complex)
    e[l] = h
    return (b_field(s.with_v(s.v + e)) - b_field(s.with_v(s.v - e))) / (2 * h)


def _fd_step(s, base=1e-4):
    """Difference step shrunk near the singular moduli k^2 in {0, 1}."""
    h = base * max(1.0, float(np.max(np.abs(s.v))))
    if s.system.tag == "Canonical19" and s.v[1] != 0:
        m = (s.v[2] / s.v[1]) ** 2
        h *= min(1.0, 10 * min(abs(m), abs(1 - m)))
    return h


def jacobi_identity_residual(b_field, s, h=None):
    """max over (i, j, k) of |sum_l (B^il d_l B^jk + B^jl d_l B^ki + B^kl d_l B^ij)|,
    relative to max|B|^2 / max|X|; derivatives by Richardson-refined central
    differences.  ``b_field`` maps a state to a matrix."""
    h = _fd_step(s) if h is None else h
    B = np.asarray(b_field(s))
    n = B.shape[0]
    D = np.empty((n, n, n), dtype=complex)
    for l in range(n):
        d1 = _fd_entries(b_field, s, l, h)
        d2 = _fd_entries(b_field, s, l, h / 2)
        D[l] = (4 * d2 - d1) / 3
    # T[i, j, k] = sum_l B[i, l] D[l, j, k]
    T = np.einsum("il,ljk->ijk", B, D)
    cyc = T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))
    res = float(np.max(np.abs(cyc)))
    scale = np.max(np.abs(B)) ** 2 / max(np.max(np.abs(s.v)), 1e-300)
    return res / max(scale, 1e-300) if scale > 0 else res


def jacobi_identity_report(s, lams=(1, -1, 2 + 1j), threshold=1e-5):
    rows = []
    fields = [("omega", lambda q: omega_matrix(q)), ("omega_tilde", lambda q: omega_tilde_matrix(q))]
    for lam in lams:
        fields.append((f"pencil[lam={_fmt(lam)}]",
                       lambda q, lam=lam: omega_matrix(q) + lam * omega_tilde_matrix(q)))
    for name, f in fields:
        try:
            rows.append(checks.make(f"jacobi_identity_{name}", jacobi_identity_residual(f, s),
                                    threshold))
        except ThetaFlowError as exc:
            rows.append(checks.failed(f"jacobi_identity_{name}", threshold, exc))
    return rows


# ---------------------------------------------------------------------------
# Nambu bracket

def _perm_sign(p):
    p = list(p)
    sgn = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sgn = -sgn
    return sgn


_EPS = [(p, _perm_sign(p)) for p in permutations(range(4))]


def levi_civita_contract(*vectors):
    """eps^{jk l n} v_l w_n for two vectors (a 4x4 matrix), or the full
    contraction eps^{ijkl} a_i b_j c_k d_l for four vectors."""
    if len(vectors) == 2:
        a, b = vectors
        m = np.zeros((4, 4), dtype=complex)
        for (j, k, l, n), sg in _EPS:
            m[j, k] += sg * a[l] * b[n]
        return m
    if len(vectors) == 4:
        return sum(sg * vectors[0][i] * vectors[1][j] * vectors[2][k] * vectors[3][l]
                   for (i, j, k, l), sg in _EPS)
    raise ParameterError("contract with two or four vectors")


def nambu_bracket(f1, f2, f3, f4, s, xi):
    """xi * det of the four gradients (the 4-bracket with density xi)."""
    grads = [f.gradient(s) if isinstance(f, Observable) else np.asarray(f)
             for f in (f1, f2, f3, f4)]
    return xi * levi_civita_contract(*grads)


def nambu_reduce_check(s, lam=1.0, threshold=1e-8):
    """The rational bracket rebuilt from the two transcendental integrals."""
    x, y, z, u = s.v
    J1, J2, g1, g2 = canonical_integrals_with_gradients(s)
    w = omega_matrix(s)
    nm = 2 / PI * x ** 3 * y * z * levi_civita_contract(g1, g2)
    rows = [checks.make("nambu_reduction", checks.relative(nm - w, w), threshold)]
    swapped = 2 / PI * x ** 3 * y * z * levi_civita_contract(g2, g1)
    rows.append(checks.make("nambu_slot_swap", checks.relative(swapped + nm, nm), 1e-15))
    # 4-bracket {f1, f2, I2, I1} with I2 = J2, I1 = (lam J1)^-1 and density sqrt(det Omega)
    lam = complex(lam)
    Om = w + lam * omega_tilde_matrix(s)
    xi = 2 / PI * lam * J1 * J1 * x ** 3 * y * z
    det = pfaffian_det(Om)
    rows.append(checks.make("nambu_density_squared", abs(xi * xi - det) / pfaffian_scale(Om), 1e-9,
                            absolute=abs(xi * xi - det),
                            detail="xi = (2/pi) lam J1^2 x^3 y z; relative to the squared Pfaffian term sum"))
    gI1 = -g1 / (lam * J1 * J1)
    E = np.eye(4, dtype=complex)
    m4 = np.array([[nambu_bracket(E[i], E[j], g2, gI1, s, xi) for j in range(4)]
                   for i in range(4)])
    rows.append(checks.make("nambu_four_bracket", checks.relative(m4 - w, w), threshold))
    return rows


# ---------------------------------------------------------------------------
# Constant brackets

def _antisym_basis(n):
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n))
            m[i, j], m[j, i] = 1, -1
            basis.append(m)
    return basis


def constraint_matrix(jacobians):
    """Rows of Omega W + W^T Omega = 0 (Omega W symmetric) over a constant
    antisymmetric Omega, one block per sampled Jacobian."""
    n = jacobians[0].shape[0]
    basis = _antisym_basis(n)
    iu = np.triu_indices(n, 1)
    blocks = []
    for W in jacobians:
        cols = []
        for Bm in basis:
            C = Bm @ W + W.T @ Bm
            cols.append(C[iu])
        blk = np.array(cols).T
        nrm = np.max(np.abs(blk))
        blocks.append(blk / nrm if nrm > 0 else blk)
    return np.vstack(blocks)


@dataclass(frozen=True)
class RankCertificate:
    system: str
    samples: int
    unknowns: int
    singular_values: tuple
    nullspace_dim: int
    tolerance: float

    @property
    def smallest(self):
        return self.singular_values[-1]


def rank_certificate(name, jacobians, tol=1e-6):
    A = constraint_matrix(jacobians)
    # complex equations split into real and imaginary parts over a complex unknown
    sv = np.linalg.svd(A, compute_uv=False)
    sv = sv / sv[0]
    null = int(np.sum(sv < tol)) + max(0, A.shape[1] - sv.size)
    return RankCertificate(name, len(jacobians), A.shape[1], tuple(float(v) for v in sv),
                           null, tol)


def random_states(system, n, rng):
    """Random complex states with components of moderate size."""
    d = 4
    out = []
    while len(out) < n:
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        out.append(SystemState(system, v))
    return out


def constant_bracket_obstruction(system, rng=None, samples=12, tol=1e-6):
    """Nullspace dimension of the constant-antisymmetric-bracket constraints."""
    from .flows import SystemId
    if not isinstance(system, SystemId):
        system = SystemId.parse(system)
    rng = np.random.default_rng(0xD1CE) if rng is None else rng
    states = random_states(system, max(12, samples), rng)
    return rank_certificate(system.tag, [jacobian(s) for s in states], tol)


def positive_control(rng=None, samples=12, tol=1e-6):
    """A linear field x' = P S x with constant antisymmetric P and symmetric S
    preserves the constant bracket P^-1: the harness must find it."""
    rng = np.random.default_rng(1) if rng is None else rng
    P = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=complex)
    S = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    S = S + S.T
    W = P @ S
    return rank_certificate("linear_control", [W] * max(12, samples), tol)


# ---------------------------------------------------------------------------
# Transport of the bracket along the flow

def _advance(s, h, order=10):
    c = taylor_coefficients(s, order)
    return s.with_v((h ** np.arange(order + 1)) @ c)


def transport_residuals(s, lam=None, h=1e-8, kind="omega"):
    """(statement, proof) residuals of d Omega / d tau against
    W Omega + Omega W^T and -(Omega W + W^T Omega) by a forward difference."""
    def B(q):
        return bracket(q, kind, 1.0 if lam is None else lam).m
    B0 = B(s)
    dB = (B(_advance(s, h)) - B0) / h
    W = jacobian(s)
    stmt = W @ B0 + B0 @ W.T
    proof = -(B0 @ W + W.T @ B0)
    sc = max(np.max(np.abs(dB)), np.max(np.abs(stmt)), 1e-300)
    return (float(np.max(np.abs(dB - stmt)) / sc), float(np.max(np.abs(dB - proof)) / sc))


def bracket_transport_residual(traj, lam=None, kind="omega", every=8, h=1e-8,
                               threshold=1e-6, linear_steps=(1e-3, 5e-4)):
    """Transport residual profile along a Canonical19 trajectory."""
    idx = list(range(0, len(traj), every))
    prof = np.array([transport_residuals(traj.state(i), lam, h, kind) for i in idx])
    worst = prof.max(axis=0)
    win = int(np.argmin(worst))
    names = ("statement", "proof")
    rows = [checks.make(f"transport_{kind}_{names[0]}", worst[0], threshold, gating=False),
            checks.make(f"transport_{kind}_{names[1]}", worst[1], threshold, gating=False)]
    exactly_one = (worst[0] < threshold) != (worst[1] < threshold)
    rows.append(checks.make("transport_unique_convention", 0.0 if exactly_one else 1.0, 0.5,
                            detail=f"holding: {names[win]}" if exactly_one else "ambiguous"))
    s0 = traj.state(idx[len(idx) // 2])
    r1 = transport_residuals(s0, lam, linear_steps[0], kind)[win]
    r2 = transport_residuals(s0, lam, linear_steps[1], kind)[win]
    ratio = r1 / r2 if r2 > 0 else float("inf")
    target = linear_steps[0] / linear_steps[1]
    rows.append(checks.make("transport_step_linear", abs(ratio / target - 1), 0.1,
                            detail=f"residual ratio {ratio:.4f} for step ratio {target:g}"))
    return rows, prof


# ---------------------------------------------------------------------------
# Lagrangian in (A, B, k, I)

def _quad_k(k, coeffs):
    q = principal_quad(k * k)
    return q if coeffs is None else _apply(coeffs, q)


def _jacobi_pair(X, coeffs=None):
    A, B, k, I = X
    K, Kp, E, Ep = _quad_k(k, coeffs)
    J1 = 4 * K * B - (E + (k * k - 1) * K) * A * I
    J2 = 4 * Kp * B + (Ep - k * k * Kp) * A * I
    return J1, J2, K


def lagrangian_one_form(X, coeffs=None):
    """rho(X) with L = rho . X' - J1^2 (total derivative dropped)."""
    A, B, k, I = X
    J1, J2, K = _jacobi_pair(X, coeffs)
    return np.array([4 * J1 * K / (A * A), 0,
                     -2 * (k * I * K * K + (J1 * J1 - 16 * B * B * K * K)
                           / (k * (k * k - 1) * I * A * A)),
                     J2 + 2 * K / (A * I) * (J1 - 4 * B * K)], dtype=complex)


def total_derivative_potential(X, coeffs=None):
    A, B, k, I = X
    K = _quad_k(k, coeffs)[0]
    return B * K * K / A


def total_derivative_gradient(X, coeffs=None):
    """Analytic gradient of G = B K^2 / A (dK/dk from the closed Legendre system)."""
    A, B, k, I = X
    K, _, E, _ = _quad_k(k, coeffs)
    dK = -K / k - E / ((k * k - 1) * k)
    return np.array([-B * K * K / (A * A), K * K / A, 2 * B * K * dK / A, 0], dtype=complex)


def _fd_jac(f, X, h=FD_STEP):
    X = np.asarray(X, dtype=complex)
    f0 = np.atleast_1d(f(X))
    out = np.zeros((f0.size, X.size), dtype=complex)
    for j in range(X.size):
        e = np.zeros(X.size, dtype=complex)
        e[j] = h
        out[:, j] = (np.atleast_1d(f(X + e)) - np.atleast_1d(f(X - e))) / (2 * h)
    return out


def intermediate_track(states):
    """Intermediate25 images of consecutive Canonical19 states on one branch."""
    out = []
    prev = None
    for v in states:
        s = SystemState(CANONICAL19, v)
        cands = []
        for br in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            try:
                cands.append(transform_state(s, INTERMEDIATE25, branch=br).v)
            except ThetaFlowError:
                pass
        if not cands:
            raise SingularTransform("no Intermediate25 image")
        img = cands[0] if prev is None else min(cands, key=lambda c: np.max(np.abs(c - prev)))
        out.append(img)
        prev = img
    return np.array(out)


def _branch_coeffs(Xs):
    tr = LegendreBranch(Xs[0][2] ** 2)
    out = [tr.coeffs]
    for X in Xs[1:]:
        tr.advance(X[2] ** 2)
        out.append(tr.coeffs)
    return out


def el_residual(Xs, h, stencil=2, with_total=False, coeffs=None):
    """Discrete Euler-Lagrange residual at interior grid points.

    E = d/dt rho(X) - (d rho / dX)^T X' + grad J1^2, with derivatives by
    central differences of the given order (2 or 4)."""
    n = len(Xs)
    coeffs = coeffs or [None] * n

    def rho(X, c):
        r = lagrangian_one_form(X, c)
        if with_total:
            r = r - 8 * total_derivative_gradient(X, c)
        return r

    R = [rho(X, c) for X, c in zip(Xs, coeffs)]
    w = 2 if stencil == 4 else 1
    res = []
    for i in range(w, n - w):
        c = coeffs[i]
        if stencil == 4:
            dR = (R[i - 2] - 8 * R[i - 1] + 8 * R[i + 1] - R[i + 2]) / (12 * h)
            dX = (Xs[i - 2] - 8 * Xs[i - 1] + 8 * Xs[i + 1] - Xs[i + 2]) / (12 * h)
        else:
            dR = (R[i + 1] - R[i - 1]) / (2 * h)
            dX = (Xs[i + 1] - Xs[i - 1]) / (2 * h)
        Jr = _fd_jac(lambda Y: rho(Y, c), Xs[i])
        gH = _fd_jac(lambda Y: _jacobi_pair(Y, c)[0] ** 2, Xs[i])[0]
        res.append(dR - Jr.T @ dX + gH)
    return np.array(res)


def el_residual_on_shell(X, coeffs=None, with_total=False):
    """Continuum Euler-Lagrange residual (d rho - d rho^T) V + grad J1^2 with the
    exact Intermediate25 velocity V."""
    def rho(Y):
        r = lagrangian_one_form(Y, coeffs)
        if with_total:
            r = r - 8 * total_derivative_gradient(Y, coeffs)
        return r
    V = vector_field(SystemState(INTERMEDIATE25, X))
    Jr = _fd_jac(rho, X)
    gH = _fd_jac(lambda Y: _jacobi_pair(Y, coeffs)[0] ** 2, X)[0]
    return (Jr - Jr.T) @ V + gH


def lagrangian_residual(init, t0, t1, n=20, threshold_order=3.5):
    """Mesh-refinement test of the discrete Euler-Lagrange residual.

    ``init`` is a Canonical19 state at time t0; the trajectory is resampled on
    uniform grids of n and 2n steps and mapped to (A, B, k, I)."""
    if init.system.tag != "Canonical19":
        raise ResamplingError("lagrangian_residual expects a Canonical19 initial state")
    from .integrate import resample
    rows = []
    res = []
    for m in (n, 2 * n):
        try:
            grid, states = resample(init, t0, t1, m)
        except ThetaFlowError as exc:
            raise ResamplingError(f"resampling failed: {exc}") from exc
        Xs = intermediate_track(states)
        co = _branch_coeffs(Xs)
        h = (t1 - t0) / m
        E = el_residual(Xs, h, coeffs=co)
        # compare at the common grid points (every other point of the fine grid)
        res.append((Xs, co, h, E))
    coarse = np.max(np.abs(res[0][3]))
    fine_common = np.max(np.abs(res[1][3][1::2]))
    ratio = coarse / fine_common
    rows.append(checks.make("euler_lagrange_order", 1 / ratio, 1 / threshold_order,
                            detail=f"coarse {coarse:.3e}, fine {fine_common:.3e}, ratio {ratio:.3f}"))
    # exact-velocity residuals, with and without the total derivative term
    Xs, co, h, _ = res[1]
    pts = range(0, len(Xs), max(1, len(Xs) // 8))
    Ea = np.array([el_residual_on_shell(Xs[i], co[i]) for i in pts])
    Eb = np.array([el_residual_on_shell(Xs[i], co[i], with_total=True) for i in pts])
    sc = max(np.max(np.abs([_fd_jac(lambda Y: _jacobi_pair(Y, co[i])[0] ** 2, Xs[i])[0]
                            for i in pts])), 1e-300)
    rows.append(checks.make("euler_lagrange_on_shell", np.max(np.abs(Ea)) / sc, 1e-8))
    rows.append(checks.make("euler_lagrange_total_derivative",
                            np.max(np.abs(Ea - Eb)) / sc, 1e-8))
    # on-shell values of the first displayed line: J1^2 (N' - 1) + J2 I' - 8 G'
    rows.extend(_on_shell_rows(Xs, co))
    return rows


def _on_shell_rows(Xs, co):
    """On shell (N' = 1, I' = 0) the Lagrangian equals -8 dG/dtau, G = B K^2 / A.

    Velocities come from the Intermediate25 field.  Reported: the residual
    of L + 8 G' (which vanishes) and of L + J1^2."""
    L, J1sq, Gd = [], [], []
    for X, c in zip(Xs, co):
        V = vector_field(SystemState(INTERMEDIATE25, X))
        J1 = _jacobi_pair(X, c)[0]
        L.append(lagrangian_one_form(X, c) @ V - J1 * J1)
        J1sq.append(J1 * J1)
        Gd.append(total_derivative_gradient(X, c) @ V)
    L, J1sq, Gd = map(np.array, (L, J1sq, Gd))
    sc = max(np.max(np.abs(J1sq)), np.max(np.abs(L)))
    r1 = np.max(np.abs(L + 8 * Gd)) / sc
    r2 = np.max(np.abs(L + J1sq)) / sc
    return [checks.make("lagrangian_on_shell_total_derivative", r1, 1e-7,
                        detail="L = -8 d/dtau (B K^2 / A) on shell"),
            checks.make("lagrangian_on_shell_minus_J1_squared", r2, 1e-7,
                        detail="L = -J1^2 on shell", gating=False)]


# ---------------------------------------------------------------------------
# Pushforward to Jacobi coordinates

def c19_to_j9_jacobian(s, branch=1):
    """Analytic Jacobian T[k, n] = dY^k / dX^n of the Canonical19 -> Jacobi9 map."""
    x, y, z, u = s.v
    if x == 0 or y == 0:
        raise SingularTransform("x y = 0")
    q = (y * y - z * z) / (PI * x * x)
    if q == 0:
        raise SingularTransform("y^2 = z^2")
    Ic = branch * np.sqrt(q)
    c1, c2 = (1 - 1j) / 2, (1 + 1j) / 2
    dq = np.array([-2 * q / x, 2 * y / (PI * x * x), -2 * z / (PI * x * x), 0])
    dI = dq / (2 * Ic)
    ey = np.array([0, 1, 0, 0])
    dA = c1 * (ey / Ic - y * dI / (Ic * Ic))
    P = u + y * y - 2 * z * z
    dP = np.array([0, 2 * y, -4 * z, 1])
    dB = c2 * (dI * P / y + Ic * (dP / y - P * ey / (y * y)))
    R = 1 - 2 * z * z / (y * y)
    dR = np.array([0, 4 * z * z / y ** 3, -4 * z / (y * y), 0])
    da = 12 / 1j * (dq * R + q * dR)
    S = z * z / (y * y) - z ** 4 / y ** 4
    dS = np.array([0, -2 * z * z / y ** 3 + 4 * z ** 4 / y ** 5, 2 * z / (y * y) - 4 * z ** 3 / y ** 4, 0])
    db = -18 * (2 * q * dq * S + q * q * dS)
    return np.array([dA, dB, da, db], dtype=complex)


def jacobi_hamiltonian_gradient(Y, I):
    """grad_Y of H = -(pi i / 24) I with I^2 = a^2 + 32 b, on the given root I."""
    return -1j * PI / 24 * np.array([0, 0, Y[2], 16], dtype=complex) / I


def pushforward_bracket(s, branch=1, lam=0.0, threshold=1e-8):
    """T Omega T^T in Jacobi coordinates and the Hamiltonian form of the
    Jacobi field it produces.  Returns (BracketMatrix, rows)."""
    T = c19_to_j9_jacobian(s, branch)
    w = omega_matrix(s)
    Om = w if lam == 0 else w + lam * omega_tilde_matrix(s)
    Ot = T @ Om @ T.T
    Y = transform_state(s, JACOBI9, branch=branch)
    x, y, z, u = s.v
    I = 12j * (y * y - z * z) / (PI * x * x)
    rows = []
    if lam == 0:
        Yd = Ot @ jacobi_hamiltonian_gradient(Y.v, I)
        V = vector_field(Y)
        rows.append(checks.make("pushforward_hamiltonian_field", checks.relative(Yd - V, V),
                                threshold))
    rows.append(checks.make("pushforward_antisymmetry", checks.relative(Ot + Ot.T, Ot), 1e-13))
    Ot1 = T @ (w + omega_tilde_matrix(s)) @ T.T
    d1 = pfaffian_det(Ot1)
    d0 = pfaffian_det(w + omega_tilde_matrix(s)) * np.linalg.det(T) ** 2
    rows.append(checks.make("pushforward_det_congruence", abs(d1 - d0) / abs(d0), 1e-9))
    return BracketMatrix(Ot, "pushforward", lam), rows


# ---------------------------------------------------------------------------
# Scaling symmetry

def scaling_symmetry_check(s, branch=1, scale_s=0.3):
    """Checks of the linear symmetry field (x d/dx in canonical coordinates)."""
    rows = []
    Y = transform_state(s, JACOBI9, branch=branch).v
    A, B, a, b = Y
    G_printed = np.array([A, -B, -2 * a, -4 * b])
    I2 = a * a + 32 * b
    gI2 = np.array([0, 0, 2 * a, 32])
    # identically zero; scale by the term magnitudes since I2 may cancel
    scale = 8 * abs(a * a) + 256 * abs(b)
    rows.append(checks.make("G_on_I2", abs(gI2 @ G_printed + 4 * I2) / scale, 1e-14))
    # push 2 x d/dx through the map and compare with the printed field
    T = c19_to_j9_jacobian(s, branch)
    G_c19 = np.array([2 * s.v[0], 0, 0, 0])
    pushed = T @ G_c19
    ratio = pushed / G_printed
    rows.append(checks.make("G_printed_is_x_dx", checks.relative(T @ (G_c19 / 2) - G_printed,
                                                                 G_printed), 1e-12,
                            detail="image of 2x d/dx over printed field: "
                                   + ", ".join(f"{r.real:.12g}" for r in ratio)))
    # [G, V] = DV G - DG V for the linear field G = 2x d/dx
    W = jacobian(s)
    DG = np.diag([2, 0, 0, 0]).astype(complex)
    V = vector_field(s)
    lie = W @ G_c19 - DG @ V
    rows.append(checks.make("G_commutes_with_field", checks.relative(lie, V), 1e-14))
    # finite scaling x -> e^{2s} x maps solutions to solutions; I^2 scales by e^{-4s}
    f = np.exp(2 * scale_s)
    s2 = s.with_v(np.array([f * s.v[0], s.v[1], s.v[2], s.v[3]]))
    V2 = vector_field(s2)
    r1 = checks.relative(V2 - np.array([f * V[0], V[1], V[2], V[3]]), V)
    rows.append(checks.make("G_flow_maps_solutions", r1, 1e-14))
    from .flows import canonical_I
    r2 = abs(canonical_I(s2.v) - np.exp(-4 * scale_s) * canonical_I(s.v)) / abs(canonical_I(s.v))
    rows.append(checks.make("G_flow_rescales_integral", r2, 1e-14))
    return rows


__all__ = [
    "BracketMatrix", "Observable", "fd_gradient", "pfaffian_det", "pfaffian_scale", "omega_matrix", "omega_tilde_matrix",
    "bracket", "poisson_bracket", "observables", "inverse_integral",
    "hamiltonian_field_check", "casimir_and_det_check", "commutation_check",
    "jacobi_identity_residual", "jacobi_identity_report", "levi_civita_contract",
    "nambu_bracket", "nambu_reduce_check", "constraint_matrix", "RankCertificate",
    "rank_certificate", "constant_bracket_obstruction", "positive_control",
    "transport_residuals", "bracket_transport_residual", "lagrangian_one_form",
    "total_derivative_potential", "total_derivative_gradient", "intermediate_track", "el_residual", "el_residual_on_shell", "lagrangian_residual",
    "c19_to_j9_jacobian", "jacobi_hamiltonian_gradient", "pushforward_bracket",
    "scaling_symmetry_check",
]
