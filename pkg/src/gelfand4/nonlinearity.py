"""Admissible nonlinearities and their derived scalar quantities.

A nonlinearity is the triple (f, f', f'') on [0, a_f), smooth, increasing
and convex with f(0) > 0, either *regular* (a_f = inf, f superlinear) or
*singular* (a_f finite, f blows up at a_f).  This module provides the
builtin catalog, user-supplied families, the derived functions

    F(t)  = int_0^t f(s) ds
    g(t)  = sqrt(2 * max(F(t) - t, 0))          (laplacian_envelope)
    H(t)  = int_0^t f''(s) sqrt(F(s)) ds        (curvature_mass)

and the curvature exponents tau_minus/tau_plus, the liminf/limsup of
f*f''/f'^2 as t -> a_f.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GelfandError
from .expressions import parse_expression
from .quadrature import adaptive_simpson


class Kind(enum.Enum):
    REGULAR = "regular"
    SINGULAR = "singular"


@dataclass(frozen=True)
class Nonlinearity:
    """An admissible nonlinearity with analytic or callback evaluators.

    ``f``, ``df``, ``d2f`` must accept scalars and numpy arrays.
    ``F_closed``/``shift_closed`` are optional closed forms for the
    antiderivative and for f(t) - f(0) (the latter avoids cancellation
    for small t).  ``tau_exact`` is set for families whose curvature
    ratio is a known constant.
    """

    name: str
    kind: Kind
    a_f: float
    f: Callable
    df: Callable
    d2f: Callable
    F_closed: Optional[Callable] = None
    shift_closed: Optional[Callable] = None
    tau_exact: Optional[float] = None
    params: tuple = ()

    def __post_init__(self):
        if self.kind is Kind.REGULAR and math.isfinite(self.a_f):
            raise ValueError("regular nonlinearity must have a_f = inf")
        if self.kind is Kind.SINGULAR and not math.isfinite(self.a_f):
            raise ValueError("singular nonlinearity must have finite a_f")

    def __repr__(self):
        return f"Nonlinearity({self.name!r}, kind={self.kind.value}, a_f={self.a_f})"


def _quiet(fn):
    def wrapped(t):
        with np.errstate(all="ignore"):
            return fn(t)
    return wrapped


# ---------------------------------------------------------------------------
# builtin catalog
# ---------------------------------------------------------------------------

BUILTIN_FAMILIES = ("exp", "exp_pow", "power", "singular_power", "t_log_t")


def make_builtin(name: str, params: Sequence[float] = ()) -> Nonlinearity:
    """Construct a catalog nonlinearity.

    Families: ``exp`` (e^t), ``exp_pow`` with parameter a > 0 (e^(t^a)),
    ``power`` with p > 1 ((1+t)^p), ``singular_power`` with p > 1
    ((1-t)^-p on [0,1)), and ``t_log_t`` ((t+e)ln(t+e), the smooth
    convex completion of t ln t).
    """
    params = tuple(float(x) for x in params)
    if name == "exp":
        if params:
            raise ValueError("exp takes no parameters")
        return Nonlinearity(
            name="exp", kind=Kind.REGULAR, a_f=math.inf,
            f=np.exp, df=np.exp, d2f=np.exp,
            F_closed=np.expm1, shift_closed=np.expm1,
            tau_exact=1.0)
    if name == "exp_pow":
        if len(params) != 1 or params[0] <= 0:
            raise ValueError("exp_pow needs one parameter a > 0")
        a = params[0]
        f = _quiet(lambda t: np.exp(np.asarray(t, dtype=float)**a))
        df = _quiet(lambda t: a * np.asarray(t, dtype=float)**(a - 1)
                    * np.exp(np.asarray(t, dtype=float)**a))
        d2f = _quiet(lambda t: a * np.asarray(t, dtype=float)**(a - 2)
                     * np.exp(np.asarray(t, dtype=float)**a)
                     * (a * np.asarray(t, dtype=float)**a + a - 1))
        shift = _quiet(lambda t: np.expm1(np.asarray(t, dtype=float)**a))
        return Nonlinearity(
            name=f"exp_pow({a:g})", kind=Kind.REGULAR, a_f=math.inf,
            f=f, df=df, d2f=d2f, shift_closed=shift, params=(a,))
    if name == "power":
        if len(params) != 1:
            raise ValueError("power needs one parameter p")
        p = params[0]
        if p <= 1:
            raise ValueError("power family requires p > 1")
        f = _quiet(lambda t: np.exp(p * np.log1p(t)))
        df = _quiet(lambda t: p * np.exp((p - 1) * np.log1p(t)))
        d2f = _quiet(lambda t: p * (p - 1) * np.exp((p - 2) * np.log1p(t)))
        F = _quiet(lambda t: np.expm1((p + 1) * np.log1p(t)) / (p + 1))
        shift = _quiet(lambda t: np.expm1(p * np.log1p(t)))
        return Nonlinearity(
            name=f"power({p:g})", kind=Kind.REGULAR, a_f=math.inf,
            f=f, df=df, d2f=d2f, F_closed=F, shift_closed=shift,
            tau_exact=(p - 1) / p, params=(p,))
    if name == "singular_power":
        if len(params) != 1:
            raise ValueError("singular_power needs one parameter p")
        p = params[0]
        if p <= 1:
            raise ValueError("singular_power family requires p > 1")
        f = _quiet(lambda t: np.exp(-p * np.log1p(-np.asarray(t, dtype=float))))
        df = _quiet(lambda t: p * np.exp(-(p + 1) * np.log1p(-np.asarray(t, dtype=float))))
        d2f = _quiet(lambda t: p * (p + 1)
                     * np.exp(-(p + 2) * np.log1p(-np.asarray(t, dtype=float))))
        F = _quiet(lambda t: np.expm1(-(p - 1) * np.log1p(-np.asarray(t, dtype=float)))
                   / (p - 1))
        shift = _quiet(lambda t: np.expm1(-p * np.log1p(-np.asarray(t, dtype=float))))
        return Nonlinearity(
            name=f"singular_power({p:g})", kind=Kind.SINGULAR, a_f=1.0,
            f=f, df=df, d2f=d2f, F_closed=F, shift_closed=shift,
            tau_exact=(p + 1) / p, params=(p,))
    if name == "t_log_t":
        if params:
            raise ValueError("t_log_t takes no parameters")
        e = math.e
        f = _quiet(lambda t: (np.asarray(t, dtype=float) + e) * np.log(np.asarray(t, dtype=float) + e))
        df = _quiet(lambda t: np.log(np.asarray(t, dtype=float) + e) + 1.0)
        d2f = _quiet(lambda t: 1.0 / (np.asarray(t, dtype=float) + e))
        # f(t) - f(0) = t + (t+e)*log1p(t/e), stable near 0
        shift = _quiet(lambda t: np.asarray(t, dtype=float)
                       + (np.asarray(t, dtype=float) + e) * np.log1p(np.asarray(t, dtype=float) / e))
        return Nonlinearity(
            name="t_log_t", kind=Kind.REGULAR, a_f=math.inf,
            f=f, df=df, d2f=d2f, shift_closed=shift)
    raise ValueError(f"unknown family {name!r}; known: {', '.join(BUILTIN_FAMILIES)}")


def make_custom(name: str, f: Callable, df: Optional[Callable], d2f: Optional[Callable],
                a_f: float, fd_step: float = 1e-5, check: bool = True) -> Nonlinearity:
    """Wrap user callbacks into a Nonlinearity.

    Missing derivatives fall back to centered finite differences of the
    level below (degraded tolerance).  When ``check`` is true, supplied
    derivatives are validated against finite differences at load time.
    """
    kind = Kind.SINGULAR if math.isfinite(a_f) else Kind.REGULAR
    f = _quiet(f)
    if df is None:
        base = f
        df = _fd_derivative(base, a_f, fd_step)
    else:
        df = _quiet(df)
    if d2f is None:
        base = df
        d2f = _fd_derivative(base, a_f, fd_step)
    else:
        d2f = _quiet(d2f)
    nl = Nonlinearity(name=name, kind=kind, a_f=float(a_f), f=f, df=df, d2f=d2f)
    if check:
        _validate_derivatives(nl)
    return nl


def _fd_derivative(fn, a_f, step):
    def deriv(t):
        t_arr = np.asarray(t, dtype=float)
        h = step * (1.0 + np.abs(t_arr))
        if math.isfinite(a_f):
            h = np.minimum(h, 0.25 * np.maximum(a_f - t_arr, 1e-300))
        h = np.maximum(h, 1e-12)
        with np.errstate(all="ignore"):
            out = (fn(t_arr + h) - fn(np.maximum(t_arr - h, 0.0))) \
                / (h + np.minimum(t_arr, h))
        return out if t_arr.ndim else float(out)
    return deriv


def _validate_derivatives(nl, n_points=25, rtol=1e-3):
    hi = min(5.0, 0.9 * nl.a_f) if nl.kind is Kind.SINGULAR else 5.0
    ts = np.linspace(0.05 * hi, hi, n_points)
    fd = fd_check(nl, ts)
    worst = max(fd["df_rel_err"].max(), fd["d2f_rel_err"].max())
    if not np.isfinite(worst) or worst > rtol:
        raise ValueError(
            f"supplied derivatives of {nl.name!r} disagree with finite "
            f"differences (worst relative error {worst:.3g})")


def fd_check(nl: Nonlinearity, ts) -> dict:
    """Fourth-order centered-difference consistency check of df and d2f.

    The step adapts to the local logarithmic derivative so the relative
    truncation error stays small even for exp(t^a)-type growth.
    """
    ts = np.asarray(ts, dtype=float)
    out_df = np.empty_like(ts)
    out_d2f = np.empty_like(ts)
    for j, t in enumerate(ts):
        h = (np.finfo(float).eps) ** (1 / 6) * (1.0 + abs(t))
        with np.errstate(all="ignore"):
            fv0, dv0, hv0 = float(nl.f(t)), float(nl.df(t)), float(nl.d2f(t))
        # keep h * |log-derivative| small: truncation ~ (h L)^4 / 30
        for num, den in ((fv0, dv0), (dv0, hv0)):
            if den != 0 and math.isfinite(num / den):
                h = min(h, 0.02 * abs(num / den))
        if nl.kind is Kind.SINGULAR:
            h = min(h, 0.2 * (nl.a_f - t))
        h = max(min(h, 0.5 * t if t > 0 else h), 1e-12)
        tpts = t + h * np.array([-2.0, -1.0, 1.0, 2.0])
        fv = np.asarray(nl.f(tpts), dtype=float)
        out_df[j] = (8.0 * (fv[2] - fv[1]) - (fv[3] - fv[0])) / (12.0 * h)
        dv = np.asarray(nl.df(tpts), dtype=float)
        out_d2f[j] = (8.0 * (dv[2] - dv[1]) - (dv[3] - dv[0])) / (12.0 * h)
    df_vals = np.asarray(nl.df(ts), dtype=float)
    d2f_vals = np.asarray(nl.d2f(ts), dtype=float)
    df_err = np.abs(out_df - df_vals) / np.maximum(np.abs(df_vals), 1e-300)
    d2f_err = np.abs(out_d2f - d2f_vals) / np.maximum(np.abs(d2f_vals), 1e-300)
    return {"t": ts, "df_rel_err": df_err, "d2f_rel_err": d2f_err}


# ---------------------------------------------------------------------------
# sampling schedules
# ---------------------------------------------------------------------------

def sampling_schedule(nl: Nonlinearity, k_singular: int = 12, k_regular: float = 8.0):
    """Geometric schedule accumulating at a_f, capped by an overflow guard.

    Singular: t = a_f * (1 - 10^-k), k = 1..k_singular.
    Regular:  t = 10^k for k on an eighth-integer grid in [-1, k_regular],
    truncated at the first point where f, f' or f'' overflows.  The
    eighth-decade resolution keeps enough usable tail samples for
    extrapolation even when the guard bites early (e.g. e^(t^2) overflows
    just past t = 26).
    """
    if nl.kind is Kind.SINGULAR:
        ks = np.arange(1, k_singular + 1)
        ts = nl.a_f * (1.0 - 10.0 ** (-ks))
    else:
        ts = 10.0 ** np.arange(-1.0, k_regular + 1e-9, 0.125)
    keep = []
    for t in ts:
        try:
            with np.errstate(all="ignore"):
                vals = (nl.f(t), nl.df(t), nl.d2f(t))
            finite = all(np.isfinite(v) for v in vals)
        except Exception:  # noqa: BLE001 - evaluation failure ends the schedule
            finite = False
        if finite:
            keep.append(t)
        elif nl.kind is Kind.REGULAR:
            break
    return np.asarray(keep, dtype=float)


# ---------------------------------------------------------------------------
# derived scalar functions
# ---------------------------------------------------------------------------

def _require_domain(nl, t):
    if t < 0 or t >= nl.a_f:
        raise ValueError(f"t={t!r} outside [0, {nl.a_f}) for {nl.name}")


def antiderivative(nl: Nonlinearity, t) -> float:
    """F(t) = int_0^t f(s) ds; closed form when available, else adaptive
    Simpson with relative error <= 1e-10."""
    if nl.F_closed is not None:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr >= nl.a_f):
            raise ValueError(f"argument outside [0, {nl.a_f}) for {nl.name}")
        out = nl.F_closed(t_arr)
        return out if t_arr.ndim else float(out)
    t = float(t)
    _require_domain(nl, t)
    return adaptive_simpson(nl.f, 0.0, t, rel_tol=1e-10)


def f_shifted(nl: Nonlinearity, t):
    """f(t) - f(0), computed without cancellation when a closed form exists."""
    if nl.shift_closed is not None:
        return nl.shift_closed(t)
    return nl.f(t) - nl.f(0.0)


def laplacian_envelope(nl: Nonlinearity, t):
    """sqrt(2 * max(F(t) - t, 0)).

    Along any solution of the fourth-order problem, -Delta u is bounded
    below by sqrt(lambda) times this function of u.  The clamp handles
    the region near 0 where F(t) - t can dip negative when f(0) < 1;
    only the t -> a_f regime carries content.
    """
    F = antiderivative(nl, t)
    gap = np.maximum(F - np.asarray(t, dtype=float), 0.0)
    out = np.sqrt(2.0 * gap)
    return out if np.ndim(t) else float(out)


def curvature_mass(nl: Nonlinearity, t: float, rel_tol: float = 1e-8) -> float:
    """H(t) = int_0^t f''(s) sqrt(F(s)) ds by adaptive quadrature."""
    t = float(t)
    _require_domain(nl, t)
    if t == 0.0:
        return 0.0

    def integrand(s):
        F = antiderivative(nl, s)
        return float(nl.d2f(s)) * math.sqrt(max(F, 0.0))

    return adaptive_simpson(integrand, 0.0, t, rel_tol=rel_tol)


def curvature_ratio(nl: Nonlinearity, t):
    """f(t) f''(t) / f'(t)^2, computed as (f/f') * (f''/f') to avoid overflow."""
    with np.errstate(all="ignore"):
        fv = np.asarray(nl.f(t), dtype=float)
        dv = np.asarray(nl.df(t), dtype=float)
        hv = np.asarray(nl.d2f(t), dtype=float)
        out = (fv / dv) * (hv / dv)
    return out if np.ndim(t) else float(out)


# ---------------------------------------------------------------------------
# curvature exponent estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TauEstimate:
    """Extrapolated curvature exponents with their sampling evidence."""

    tau_minus: float
    tau_plus: float
    samples: tuple          # (t, ratio) pairs along the schedule
    converged: bool
    tolerance: float

    def as_dict(self):
        return {
            "tau_minus": self.tau_minus,
            "tau_plus": self.tau_plus,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "samples": [[t, r] for t, r in self.samples],
        }


def _aitken(seq):
    """One pass of Aitken delta-squared; exact for geometric sequences."""
    out = []
    for i in range(len(seq) - 2):
        r0, r1, r2 = seq[i], seq[i + 1], seq[i + 2]
        denom = r2 - 2.0 * r1 + r0
        if abs(denom) <= 1e-13 * max(1.0, abs(r0), abs(r2)):
            out.append(r2)
        else:
            out.append(r0 - (r1 - r0) ** 2 / denom)
    return out


def estimate_tau(nl: Nonlinearity, schedule=None, tol: float = 1e-6,
                 use_exact: bool = True) -> TauEstimate:
    """Estimate tau_minus/tau_plus from the curvature ratio along the schedule.

    The last five valid ratios are accelerated by Aitken extrapolation
    (second-order Richardson for the geometric tails all catalog families
    exhibit); tau_minus/tau_plus are the min/max of the extrapolated
    tail.  Families with a constant ratio report the exact constant.
    Non-convergence is flagged via ``converged=False``, never raised.
    """
    if schedule is None:
        schedule = sampling_schedule(nl)
    ts = np.asarray(schedule, dtype=float)
    ratios = curvature_ratio(nl, ts)
    valid = np.isfinite(ratios)
    samples = tuple((float(t), float(r)) for t, r in zip(ts[valid], ratios[valid]))
    if use_exact and nl.tau_exact is not None:
        return TauEstimate(nl.tau_exact, nl.tau_exact, samples, True, tol)
    tail = [r for _, r in samples[-5:]]
    if len(tail) < 3:
        if not tail:
            return TauEstimate(math.nan, math.nan, samples, False, tol)
        last = tail[-1]
        return TauEstimate(last, last, samples, False, tol)
    acc = _aitken(tail)
    bound = 10.0 * max(abs(r) for r in tail) + 1.0
    if not acc or any(not math.isfinite(a) or abs(a) > bound for a in acc):
        # extrapolation diverged: fall back to the raw last sample
        last = tail[-1]
        return TauEstimate(last, last, samples, False, tol)
    lo = max(0.0, min(acc))
    hi = max(0.0, max(acc))
    converged = (hi - lo) < tol
    return TauEstimate(lo, hi, samples, converged, tol)


# ---------------------------------------------------------------------------
# admissibility and tail checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCheck:
    t: float
    f: float
    df: float
    d2f: float
    monotone_ok: bool
    convex_ok: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-point admissibility record: positivity at 0, monotonicity,
    convexity, and blow-up (singular) or superlinearity (regular)."""

    name: str
    kind: Kind
    f0: float
    f0_positive: bool
    points: tuple
    growth_ok: bool
    growth_note: str
    passed: bool


def check_admissibility(nl: Nonlinearity, schedule=None) -> AdmissibilityReport:
    """Sample the admissibility conditions along the schedule.

    Evaluation failures (overflow, domain) at single points are recorded
    on the point, not raised.  The growth leg is a finite-sample proxy:
    blow-up for singular families, increasing f(t)/t for regular ones.
    """
    if schedule is None:
        schedule = sampling_schedule(nl)
    ts = np.asarray(schedule, dtype=float)
    if len(ts) < 10:
        raise ValueError("schedule needs at least 10 points accumulating at a_f")
    f0 = float(nl.f(0.0))
    points = []
    for t in ts:
        try:
            with np.errstate(all="ignore"):
                fv, dv, hv = float(nl.f(t)), float(nl.df(t)), float(nl.d2f(t))
        except Exception as exc:  # noqa: BLE001 - reported, not thrown
            points.append(PointCheck(float(t), math.nan, math.nan, math.nan,
                                     False, False, error=str(exc)))
            continue
        if not (math.isfinite(fv) and math.isfinite(dv) and math.isfinite(hv)):
            points.append(PointCheck(float(t), fv, dv, hv, False, False,
                                     error="non-finite evaluation"))
            continue
        slack = 1e-12 * max(1.0, abs(dv), abs(hv))
        points.append(PointCheck(float(t), fv, dv, hv,
                                 monotone_ok=dv >= -slack,
                                 convex_ok=hv >= -slack))
    usable = [p for p in points if p.error is None]
    growth_ok, note = _growth_check(nl, usable, f0)
    passed = (f0 > 0.0 and len(usable) >= 5 and growth_ok
              and all(p.monotone_ok and p.convex_ok for p in usable))
    return AdmissibilityReport(
        name=nl.name, kind=nl.kind, f0=f0, f0_positive=f0 > 0.0,
        points=tuple(points), growth_ok=growth_ok, growth_note=note,
        passed=passed)


def _growth_check(nl, usable, f0):
    if len(usable) < 3:
        return False, "too few valid samples"
    fs = np.array([p.f for p in usable])
    ts = np.array([p.t for p in usable])
    if nl.kind is Kind.SINGULAR:
        increasing = bool(np.all(np.diff(fs) >= -1e-12 * np.abs(fs[:-1])))
        mid = fs[len(fs) // 2]
        still_growing = fs[-1] >= 1.5 * max(mid, 1e-300)
        big = fs[-1] >= 10.0 * max(f0, 1e-300)
        ok = increasing and still_growing and big
        return ok, ("blow-up confirmed along the tail" if ok
                    else "f does not keep growing toward a_f")
    # superlinearity is a tail property: test f(t)/t on the upper half
    mask = ts > 0
    q = fs[mask] / ts[mask]
    tail = q[-max(5, len(q) // 2):]
    increasing = bool(np.all(np.diff(tail) >= -1e-12 * np.abs(tail[:-1])))
    grew = tail[-1] >= 1.1 * tail[0]
    ok = increasing and grew and len(tail) >= 3
    return ok, ("f(t)/t increasing along the schedule tail" if ok
                else "f(t)/t fails to grow (not superlinear)")


def antiderivative_unbounded(nl: Nonlinearity) -> bool:
    """True iff F grows without bound along the tail schedule.

    For singular nonlinearities this must hold whenever tau_plus < 2,
    so the outcome cross-validates the tau estimate.  Regular families
    are sampled on the overflow-capped geometric schedule; an F that
    overflows to +inf counts as unbounded (it exceeded float range on
    the way up).
    """
    if nl.kind is Kind.SINGULAR:
        ts = nl.a_f * (1.0 - 10.0 ** (-np.arange(1.0, 13.0)))
    else:
        ts = sampling_schedule(nl)
        ts = ts[ts >= 1.0] if np.any(ts >= 1.0) else ts
    vals = []
    for t in ts:
        try:
            with np.errstate(all="ignore"):
                F = antiderivative(nl, t) if t < nl.a_f else math.inf
        except Exception:  # noqa: BLE001 - bounded-tail probes may overflow
            F = math.nan
        if math.isnan(F):
            break
        if math.isinf(F):
            return True
        vals.append(F)
    if len(vals) < 3:
        return False
    vals = np.asarray(vals)
    if not np.all(np.diff(vals) >= -1e-12 * np.abs(vals[:-1])):
        return False
    mid = vals[len(vals) // 2]
    return bool(vals[-1] >= 100.0 * max(mid, 1e-300))


@dataclass(frozen=True)
class CurvatureLiminfReport:
    """Tail of f^(1+eps/4) f'' / f'^2 and its positivity verdict."""

    epsilon: float
    holds: bool
    samples: tuple
    margin: float
    bounded_dim: Optional[int]   # 7 when the criterion holds
    note: str


def curvature_liminf_positive(nl: Nonlinearity, epsilon: float = 0.0,
                              schedule=None) -> CurvatureLiminfReport:
    """Check liminf_{t->inf} f(t)^(1+eps/4) f''(t) / f'(t)^2 > 0.

    The discriminator watches the reciprocal of the sampled ratio: a
    positive liminf means the reciprocal settles (flat tail or shrinking
    increments), while a vanishing ratio makes the reciprocal drift
    upward with non-shrinking increments, as t log t-type tails do.
    A positive verdict carries the dimension-7 boundedness conclusion.
    """
    if nl.kind is not Kind.REGULAR:
        raise ValueError("the liminf criterion applies to regular nonlinearities")
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    if schedule is None:
        schedule = sampling_schedule(nl)
    ts = np.asarray(schedule, dtype=float)
    with np.errstate(all="ignore"):
        rho = curvature_ratio(nl, ts) * np.exp(
            (epsilon / 4.0) * np.log(np.asarray(nl.f(ts), dtype=float)))
    valid = np.isfinite(rho)
    samples = tuple((float(t), float(r)) for t, r in zip(ts[valid], rho[valid]))
    tail = np.array([r for _, r in samples[-5:]])
    if len(tail) < 4:
        return CurvatureLiminfReport(epsilon, False, samples, 0.0, None,
                                     "too few valid samples")
    if np.any(tail <= 0.0):
        return CurvatureLiminfReport(epsilon, False, samples, float(tail[-1]),
                                     None, "ratio touched zero on the tail")
    s = 1.0 / tail
    d = np.diff(s)
    scale = max(1.0, abs(s[-1]))
    if abs(s[-1] - s[0]) < 0.05 * scale:
        verdict, note = True, "reciprocal tail is flat"
    elif abs(d[-2]) < 1e-9 * scale:
        verdict, note = True, "reciprocal increments vanished"
    elif abs(d[-1]) <= 0.9 * abs(d[-2]):
        verdict, note = True, "reciprocal increments shrink geometrically"
    else:
        verdict, note = False, "reciprocal drifts without settling (liminf 0)"
    return CurvatureLiminfReport(
        epsilon=epsilon, holds=verdict, samples=samples,
        margin=float(tail[-1]), bounded_dim=7 if verdict else None, note=note)


# ---------------------------------------------------------------------------
# config-block construction
# ---------------------------------------------------------------------------

def nonlinearity_from_config(cfg: dict) -> Nonlinearity:
    """Build a nonlinearity from a parsed config mapping.

    ``family`` selects a catalog entry (parameter key ``p``), or
    ``family = "custom"`` with expression strings ``f`` (required),
    ``f1``/``f2`` (optional derivatives; finite-difference fallback
    otherwise) and ``a_f`` (number, or "inf" for a regular family).
    """
    family = cfg.get("family")
    if family is None:
        raise GelfandError("nonlinearity config needs a 'family' key")
    if family != "custom":
        params = (cfg["p"],) if "p" in cfg else ()
        return make_builtin(family, params)
    if "f" not in cfg:
        raise GelfandError("custom family needs an 'f' expression")
    f_expr = parse_expression(str(cfg["f"]))
    df_expr = parse_expression(str(cfg["f1"])) if "f1" in cfg else None
    d2f_expr = parse_expression(str(cfg["f2"])) if "f2" in cfg else None
    a_f_raw = cfg.get("a_f", "inf")
    a_f = math.inf if str(a_f_raw).lower() in ("inf", "infinity") else float(a_f_raw)
    name = str(cfg.get("name", f"custom[{f_expr.text}]"))
    return make_custom(name, f_expr, df_expr, d2f_expr, a_f)
