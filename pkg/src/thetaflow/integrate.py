"""Adaptive Dormand-Prince 5(4) integration along straight complex segments."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainEscape, ParameterError, StepUnderflow
from .flows import SystemState, vector_field

# Dormand-Prince coefficients
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_H_FLOOR = 1e-12
_BLOWUP = 1e100

IM_FLOOR = 0.05


@dataclass(frozen=True)
class PathSegment:
    t0: complex
    t1: complex
    upper_half_plane: bool = False

    def __post_init__(self):
        object.__setattr__(self, "t0", complex(self.t0))
        object.__setattr__(self, "t1", complex(self.t1))
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)):
            raise ParameterError("segment endpoints must be finite")
        if self.t0 == self.t1:
            raise ParameterError("segment has zero length")
        if self.upper_half_plane and min(self.t0.imag, self.t1.imag) <= IM_FLOOR:
            from .errors import DomainError
            raise DomainError("segment endpoints must satisfy im > im_floor")

    def at(self, sigma):
        return self.t0 + sigma * (self.t1 - self.t0)


@dataclass(frozen=True)
class StepStats:
    accepted: int
    rejected: int
    evaluations: int
    h_min: float
    h_max: float


@dataclass(frozen=True)
class Trajectory:
    system: object
    sigma: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)
    stats: StepStats = None
    invariants: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return self.t.size

    @property
    def samples(self):
        return list(zip(self.t, self.states))

    def state(self, i):
        tag = getattr(self.system, "tag", None)
        return SystemState(self.system, self.states[i], self.t[i] if tag == "LegendreClosure28" else None)

    @property
    def final(self):
        return self.state(-1)

    def with_invariants(self, inv):
        merged = dict(self.invariants)
        merged.update(inv)
        return Trajectory(self.system, self.sigma, self.t, self.states, self.errors,
                          self.stats, merged)


def _err_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    # complex components as (re, im) pairs of a doubled real system
    r = np.concatenate([err.real / scale, err.imag / scale])
    return float(np.sqrt(np.mean(r * r)))


def solve_segment(fun, y0, rtol, atol, hmax=1.0, guard=None):
    """Integrate dy/dsigma = fun(sigma, y) on sigma in [0, 1].

    Returns (sigma, states, local error estimates, stats)."""
    y = np.array(y0, dtype=complex)
    s = 0.0
    sig = [0.0]
    ys = [y.copy()]
    errs = [0.0]
    k1 = fun(0.0, y)
    nfev = 1
    d0 = np.sqrt(np.mean(np.abs(y) ** 2)) + 1e-300
    d1 = np.sqrt(np.mean(np.abs(k1) ** 2)) + 1e-300
    h = min(hmax, 0.01 * d0 / d1 if d1 > 1e-300 else hmax, 0.01 if d1 > 1e-300 else hmax)
    h = max(h, 1e-6)
    err_prev = 1e-4
    accepted = rejected = 0
    hmin_seen, hmax_seen = np.inf, 0.0
    while s < 1.0:
        h = min(h, hmax, 1.0 - s)
        if h < _H_FLOOR:
            raise StepUnderflow(f"step {h:.3g} below floor at sigma = {s:.12g}", last_t=s)
        K = [k1]
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[i], K))
            K.append(fun(s + _C[i] * h, yi))
        nfev += 6
        y_new = y + h * sum(b * k for b, k in zip(_B5, K) if b != 0)
        e_vec = h * sum(e * k for e, k in zip(_E, K))
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(e_vec)):
            err = np.inf
        else:
            err = _err_norm(e_vec, y, y_new, rtol, atol)
        if err <= 1.0:
            if np.max(np.abs(y_new)) > _BLOWUP:
                raise DomainEscape(f"state magnitude exceeded {_BLOWUP:g}", last_t=s)
            if guard is not None:
                msg = guard(y_new)
                if msg:
                    raise DomainEscape(msg, last_t=s)
            s = 1.0 if (1.0 - (s + h)) < 1e-14 else s + h
            y = y_new
            k1 = K[6]
            accepted += 1
            hmin_seen = min(hmin_seen, h)
            hmax_seen = max(hmax_seen, h)
            sig.append(s)
            ys.append(y.copy())
            errs.append(float(np.max(np.abs(e_vec))))
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            rejected += 1
            fac = 0.2 if not np.isfinite(err) else max(0.2, _SAFETY * err ** (-1 / 5))
            h *= fac
    stats = StepStats(accepted, rejected, nfev, float(hmin_seen), float(hmax_seen))
    return np.array(sig), np.array(ys), np.array(errs), stats


def _guard_for(s):
    tag = s.system.tag
    if tag == "Canonical19" and s.v[0] != 0:
        def guard(v):
            y2, z2 = v[1] * v[1], v[2] * v[2]
            if abs(y2 - z2) <= 1e-13 * (abs(y2) + abs(z2)):
                return "y^2 = z^2 collision"
            if abs(v[0]) == 0:
                return "x reached 0"
            return None
        return guard
    if tag == "LegendreClosure28":
        return None
    return None


def integrate(init, path, rtol=1e-10, atol=1e-12, min_samples=64):
    """Integrate a system state along a straight segment of its time variable."""
    if not (1e-13 <= rtol <= 1e-6) or not (1e-13 <= atol <= 1e-6):
        raise ParameterError("rtol and atol must lie in [1e-13, 1e-6]")
    if not isinstance(path, PathSegment):
        path = PathSegment(*path)
    if not np.all(np.isfinite(init.v)):
        raise DomainEscape("initial state is not finite")
    dt = path.t1 - path.t0
    system = init.system
    if system.tag == "LegendreClosure28":
        if abs(complex(init.t) - path.t0) > 1e-14 * max(1.0, abs(path.t0)):
            raise ParameterError("LegendreClosure28 state modulus must equal the segment start")

        def fun(sig, y):
            return dt * vector_field(SystemState(system, y, path.at(sig)))
    else:
        def fun(sig, y):
            return dt * vector_field(SystemState(system, y))

    hmax = 1.0 / (min_samples + 1)
    try:
        sig, ys, errs, stats = solve_segment(fun, init.v, rtol, atol, hmax, _guard_for(init))
    except (StepUnderflow, DomainEscape) as exc:
        if exc.last_t is not None:
            exc.last_t = path.at(exc.last_t)
        raise
    return Trajectory(system, sig, path.at(sig), ys, errs, stats)


def integrate_chain(init, points, rtol=1e-10, atol=1e-12, min_samples=64):
    """Integrate along a polygonal path; returns the list of segment trajectories."""
    out = []
    s = init
    for t0, t1 in zip(points[:-1], points[1:]):
        if s.system.tag == "LegendreClosure28":
            s = SystemState(s.system, s.v, t0)
        tr = integrate(s, PathSegment(t0, t1), rtol, atol, min_samples)
        out.append(tr)
        s = tr.final
    return out


def resample(init, t0, t1, n, rtol=1e-12, atol=1e-13):
    """States on a uniform grid of n + 1 points from t0 to t1."""
    grid = t0 + (t1 - t0) * np.arange(n + 1) / n
    states = [np.array(init.v)]
    s = init
    for a, b in zip(grid[:-1], grid[1:]):
        tr = integrate(s, PathSegment(a, b), rtol, atol, min_samples=4)
        s = tr.final
        states.append(np.array(s.v))
    return grid, np.array(states)


__all__ = ["PathSegment", "StepStats", "Trajectory", "integrate", "integrate_chain",
           "solve_segment", "resample"]
