"""Central finite differences and analytic-gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError


@dataclass
class GradCheckReport:
    max_rel_err: float
    max_abs_err: float
    n_checked: int
    rtol: float
    atol: float
    passed: bool
    worst_index: int = -1
    analytic: np.ndarray = field(default=None, repr=False)
    numeric: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "max_rel_err": self.max_rel_err,
            "max_abs_err": self.max_abs_err,
            "n_checked": self.n_checked,
            "rtol": self.rtol,
            "atol": self.atol,
            "passed": self.passed,
            "worst_index": self.worst_index,
        }


def _value(fn, x):
    v = float(fn(x))
    if not np.isfinite(v):
        raise NumericalError(f"function value is not finite: {v!r}")
    return v


def numerical_gradient(fn, params, rel_step=1e-6, indices=None):
    """Central differences with step ``rel_step * max(1, |x_i|)``.

    ``fn`` takes an array shaped like ``params`` and returns a float. Only the
    flat ``indices`` are differentiated (all of them by default); the result
    is flat with one entry per checked index.
    """
    x0 = np.array(params, dtype=np.float64)
    flat = x0.reshape(-1)
    idx = np.arange(flat.size) if indices is None else np.asarray(indices)
    out = np.empty(len(idx))
    for k, i in enumerate(idx):
        h = rel_step * max(1.0, abs(flat[i]))
        orig = flat[i]
        flat[i] = orig + h
        hi = flat[i] - orig
        f_plus = _value(fn, x0)
        flat[i] = orig - h
        lo = orig - flat[i]
        f_minus = _value(fn, x0)
        flat[i] = orig
        out[k] = (f_plus - f_minus) / (hi + lo)
    return out


def compare(analytic, numeric, rtol=1e-5, atol=1e-8):
    """Error of each component is ``|a - n| / max(|a|, |n|, atol / rtol)``.

    The floor in the denominator turns the criterion into an absolute one
    (``|a - n| <= atol``) for components whose magnitude is below
    ``atol / rtol``.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    diff = np.abs(a - n)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), atol / rtol)
    rel = diff / scale
    worst = int(np.argmax(rel)) if rel.size else -1
    max_rel = float(rel.max()) if rel.size else 0.0
    return GradCheckReport(
        max_rel_err=max_rel,
        max_abs_err=float(diff.max()) if diff.size else 0.0,
        n_checked=int(a.size),
        rtol=rtol,
        atol=atol,
        passed=bool(max_rel <= rtol) and bool(np.all(np.isfinite(a))),
        worst_index=worst,
        analytic=a,
        numeric=n,
    )


def grad_check(fn, params, grad, step=1e-6, indices=None, rtol=1e-5, atol=1e-8) -> GradCheckReport:
    """Compare an analytic gradient ``grad`` (shaped like ``params``) with central differences."""
    g = np.asarray(grad, dtype=np.float64).reshape(-1)
    idx = np.arange(g.size) if indices is None else np.asarray(indices)
    numeric = numerical_gradient(fn, params, step, idx)
    return compare(g[idx], numeric, rtol, atol)
