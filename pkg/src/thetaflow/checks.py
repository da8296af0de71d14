"""Uniform residual rows shared by the verification reports."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Check:
    check: str
    residual: float
    threshold: float
    passed: bool
    detail: str = ""
    absolute: float = None
    gating: bool = True

    def to_dict(self):
        out = {"check": self.check, "residual": _finite_or_str(self.residual),
               "threshold": self.threshold, "pass": bool(self.passed)}
        if self.absolute is not None:
            out["absolute"] = _finite_or_str(self.absolute)
        if self.detail:
            out["detail"] = self.detail
        if not self.gating:
            out["gating"] = False
        return out


def _finite_or_str(x):
    x = float(x)
    return x if np.isfinite(x) else str(x)


def relative(value, scale):
    """|value| / max(|scale|, tiny) for scalars or arrays (max-norm)."""
    num = float(np.max(np.abs(np.atleast_1d(value))))
    den = float(np.max(np.abs(np.atleast_1d(scale))))
    return num / max(den, 1e-300)


def make(check, residual, threshold, detail="", absolute=None, passed=None, gating=True):
    """A row; non-gating rows record candidates expected to fail and do not
    enter the suite verdict."""
    residual = float(residual)
    ok = (residual < threshold) if passed is None else bool(passed)
    if not np.isfinite(residual):
        ok = False if passed is None else ok
    absolute = None if absolute is None else float(absolute)
    return Check(check, residual, float(threshold), bool(ok), detail, absolute, gating)


def failed(check, threshold, exc):
    return Check(check, float("nan"), float(threshold), False, f"{type(exc).__name__}: {exc}")


def override(rows, thresholds):
    """Re-judge rows whose name has a user threshold (residual < threshold)."""
    if not thresholds:
        return list(rows)
    out = []
    for r in rows:
        if r.check in thresholds:
            th = float(thresholds[r.check])
            r = Check(r.check, r.residual, th, bool(np.isfinite(r.residual) and r.residual < th),
                      r.detail, r.absolute, r.gating)
        out.append(r)
    return out


def all_passed(rows):
    return all(r.passed for r in rows if r.gating)


__all__ = ["Check", "relative", "make", "failed", "override", "all_passed"]
