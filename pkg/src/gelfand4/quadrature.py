"""Adaptive Simpson quadrature and cumulative integral tables.

Integrands here are smooth on compact subintervals of the nonlinearity
domain, so plain interval-bisection Simpson with a Richardson correction
is enough; no Gauss-Kronrod machinery is needed.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

ABS_FLOOR = 1e-14


def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def _nonfinite_verdict(samples, a, b):
    """Overflow to +/-inf propagates as an infinite integral; NaN raises."""
    vals = np.asarray(samples, dtype=float)
    bad = vals[~np.isfinite(vals)]
    if bad.size and np.all(np.isposinf(bad)):
        return math.inf
    if bad.size and np.all(np.isneginf(bad)):
        return -math.inf
    raise QuadratureError(f"non-finite integrand on [{a}, {b}]")


def adaptive_simpson(fn, a: float, b: float, rel_tol: float = 1e-10,
                     abs_floor: float = ABS_FLOOR, max_depth: int = 60) -> float:
    """Integrate ``fn`` over [a, b] by adaptive Simpson bisection.

    The local acceptance test compares each panel against its two-half
    refinement; the panel is accepted when the Richardson error estimate
    is below ``rel_tol`` times the running integral magnitude (with an
    absolute floor so integrals near zero terminate).  An integrand that
    overflows to +inf yields an infinite integral rather than a hang or
    an exception; NaN raises :class:`QuadratureError`.
    """
    if b < a:
        raise ValueError(f"integration bounds out of order: [{a}, {b}]")
    if b == a:
        return 0.0
    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = _simpson(fa, fm, fb, b - a)
    if not np.isfinite(whole):
        return _nonfinite_verdict([fa, fm, fb], a, b)
    # rough magnitude for the relative test, improved as panels are accepted
    scale = max(abs(whole), abs_floor)
    total = 0.0
    worst = 0.0
    stack = [(a, b, fa, fb, fm, whole, 0)]
    while stack:
        a0, b0, f0, f1, fmid, s0, depth = stack.pop()
        mid = 0.5 * (a0 + b0)
        lm = 0.5 * (a0 + mid)
        rm = 0.5 * (mid + b0)
        flm, frm = fn(lm), fn(rm)
        left = _simpson(f0, flm, fmid, mid - a0)
        right = _simpson(fmid, frm, f1, b0 - mid)
        err = (left + right - s0) / 15.0
        if not np.isfinite(err):
            return _nonfinite_verdict([f0, flm, fmid, frm, f1], a, b)
        tol = max(rel_tol * scale, abs_floor) * (b0 - a0) / (b - a)
        if abs(err) <= tol or depth >= max_depth:
            if depth >= max_depth and abs(err) > tol:
                worst = max(worst, abs(err) / max(tol, abs_floor))
            total += left + right + err
            scale = max(scale, abs(total))
        else:
            stack.append((a0, mid, f0, fmid, flm, left, depth + 1))
            stack.append((mid, b0, fmid, f1, frm, right, depth + 1))
    if worst > 1e3:
        raise QuadratureError(
            f"adaptive Simpson hit depth {max_depth} with local error "
            f"{worst:.3g}x the tolerance on [{a}, {b}]")
    if not np.isfinite(total):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    return total


class CumulativeTable:
    """Cumulative integral t -> int_0^t fn(s) ds on [0, t_max].

    Built once per state from a fixed number of panels (composite Simpson
    per panel) and evaluated with the Simpson parabola inside each panel,
    so partial-panel values are third-order accurate.  A power grading
    ``s = t_max * x**grade`` clusters nodes near 0 so integrands with an
    integrable algebraic singularity at the origin are still resolved.

    ``refinement_error`` is the relative disagreement of the endpoint
    value against a run with half the panels.
    """

    def __init__(self, fn, t_max: float, panels: int = 4096, grade: int = 2):
        if t_max < 0:
            raise ValueError("t_max must be nonnegative")
        self.t_max = float(t_max)
        self.panels = int(panels)
        self.grade = int(grade)
        if t_max == 0.0:
            self._phi = np.zeros(1)
            self._cum = np.zeros(1)
            self.refinement_error = 0.0
            return
        self._phi, self._cum = self._build(fn, self.panels)
        _, half = self._build(fn, self.panels // 2)
        denom = max(abs(self._cum[-1]), ABS_FLOOR)
        self.refinement_error = abs(self._cum[-1] - half[-1]) / denom

    def _build(self, fn, panels):
        g = self.grade
        x = np.linspace(0.0, 1.0, 2 * panels + 1)
        s = self.t_max * x**g
        # graded substitution: int fn(s) ds = int fn(s(x)) * s'(x) dx
        vals = np.asarray(fn(s), dtype=float) * (self.t_max * g * x**(g - 1))
        if not np.all(np.isfinite(vals)):
            bad = s[~np.isfinite(vals)]
            raise QuadratureError(
                f"integrand not finite at s={bad[:3]!r} while building table")
        dx = 1.0 / panels
        panel = (vals[:-2:2] + 4.0 * vals[1:-1:2] + vals[2::2]) * dx / 6.0
        cum = np.concatenate([[0.0], np.cumsum(panel)])
        return vals, cum

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if self.t_max == 0.0:
            if np.any(t_arr > 1e-15):
                raise ValueError("evaluation above table range")
            return np.zeros_like(t_arr) if t_arr.ndim else 0.0
        if np.any(t_arr < -1e-15) or np.any(t_arr > self.t_max * (1 + 1e-12)):
            raise ValueError(
                f"evaluation outside table range [0, {self.t_max}]")
        tc = np.clip(t_arr, 0.0, self.t_max)
        x = (tc / self.t_max) ** (1.0 / self.grade)
        n = self.panels
        k = np.minimum((x * n).astype(int), n - 1)
        xi = x * n - k
        p0 = self._phi[2 * k]
        pm = self._phi[2 * k + 1]
        p1 = self._phi[2 * k + 2]
        # antiderivative of the Simpson parabola through (p0, pm, p1)
        part = (p0 * xi
                + 0.5 * xi**2 * (-3.0 * p0 + 4.0 * pm - p1)
                + (xi**3 / 3.0) * (2.0 * p0 - 4.0 * pm + 2.0 * p1)) / n
        out = self._cum[k] + part
        return out if t_arr.ndim else float(out)
