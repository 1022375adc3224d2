"""Quartic dimension bounds: polynomial construction, root isolation,
negativity certificates, and inverse threshold solves.

The central object is the quartic

    P(alpha) = (2-tau_minus)^2 alpha^4 - 8 (2-tau_plus) alpha^2
               + 4 (4-3 tau_plus) alpha - 4 (1-tau_plus)

whose largest root alpha_star feeds the dimension bound

    n_quartic = (4 alpha_star (2-tau_plus) + 2 tau_plus) / tau_plus
                * max(1, tau_plus)   [regular; singular omits the max factor]

combined with the complementary 8 / tau_plus leg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InconsistentQuartic, TauNotConverged
from .nonlinearity import Kind, Nonlinearity, estimate_tau, TauEstimate

_SCAN_CHUNK = 1_000_000


@dataclass(frozen=True)
class QuarticPoly:
    """Coefficients of c4*a^4 + c2*a^2 + c1*a + c0 (no cubic term)."""

    c4: float
    c2: float
    c1: float
    c0: float
    provenance: tuple   # ("general", tm, tp) | ("power", p) | ("singular_power", p)

    def value(self, alpha):
        a = np.asarray(alpha, dtype=float)
        out = ((self.c4 * a * a + self.c2) * a + self.c1) * a + self.c0
        return out if np.ndim(alpha) else float(out)

    def coefficients(self):
        return {"c4": self.c4, "c2": self.c2, "c1": self.c1, "c0": self.c0}


def quartic_general(tau_minus: float, tau_plus: float) -> QuarticPoly:
    """Quartic for curvature exponents (tau_minus, tau_plus).

    Requires 0 < tau_minus <= tau_plus < 2; then the value at alpha=1
    equals (2-tau_minus)^2 - 4 < 0, so a root above 1 always exists.
    """
    if not (0.0 < tau_minus <= tau_plus):
        raise ValueError(
            f"need 0 < tau_minus <= tau_plus, got ({tau_minus}, {tau_plus})")
    if not tau_plus < 2.0:
        raise ValueError(f"tau_plus must be below 2, got {tau_plus}")
    return QuarticPoly(
        c4=(2.0 - tau_minus) ** 2,
        c2=-8.0 * (2.0 - tau_plus),
        c1=4.0 * (4.0 - 3.0 * tau_plus),
        c0=-4.0 * (1.0 - tau_plus),
        provenance=("general", tau_minus, tau_plus))


def quartic_power(p: float) -> QuarticPoly:
    """Quartic for f = (1+t)^p; equals p^2 times the general quartic at
    tau = (p-1)/p, so both have the same roots."""
    if p <= 1.0:
        raise ValueError(f"power family requires p > 1, got {p}")
    return QuarticPoly(
        c4=(p + 1.0) ** 2,
        c2=-8.0 * p * (p + 1.0),
        c1=4.0 * p * (p + 3.0),
        c0=-4.0 * p,
        provenance=("power", p))


def quartic_singular_power(p: float) -> QuarticPoly:
    """Quartic for f = (1-t)^-p.

    Its largest root beta_star relates to the general quartic at
    tau = (p+1)/p by beta_star = alpha_star * (p-1)/(p+1).
    """
    if p <= 1.0:
        raise ValueError(f"singular_power family requires p > 1, got {p}")
    q = p + 1.0
    return QuarticPoly(
        c4=1.0,
        c2=-8.0 * p * (p - 1.0) / q**2,
        c1=4.0 * p * (p - 1.0) * (p - 3.0) / q**3,
        c0=4.0 * p * (p - 1.0) ** 2 / q**4,
        provenance=("singular_power", p))


@dataclass(frozen=True)
class RootResult:
    """Isolated real roots above 1, rightmost first bracketing interval."""

    roots: tuple
    alpha_star: float
    bracket: tuple
    width: float


def _bisect(poly, lo, hi, flo, fhi, width):
    # keep the sign change inside [lo, hi]
    for _ in range(200):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        fmid = poly.value(mid)
        if fmid == 0.0:
            return mid, mid
        if (flo < 0.0) == (fmid < 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return lo, hi


def _scan_roots(poly, lo, hi, scan_step, width):
    """Sign-change scan over [lo, hi] plus bisection of every bracket."""
    brackets = []
    n_pts = int(math.ceil((hi - lo) / scan_step)) + 1
    prev_x, prev_v = lo, poly.value(lo)
    start = 0
    while start < n_pts:
        stop = min(start + _SCAN_CHUNK, n_pts)
        xs = lo + scan_step * np.arange(start + 1, stop + 1, dtype=float)
        vs = poly.value(xs)
        flips = np.nonzero((vs < 0.0) != np.concatenate([[prev_v < 0.0], vs[:-1] < 0.0]))[0]
        for i in flips:
            blo = prev_x if i == 0 else xs[i - 1]
            brackets.append((blo, xs[i]))
        prev_x, prev_v = xs[-1], vs[-1]
        start = stop
    roots = []
    last = None
    for blo, bhi in brackets:
        lo2, hi2 = _bisect(poly, blo, bhi, poly.value(blo), poly.value(bhi), width)
        roots.append(0.5 * (lo2 + hi2))
        last = (lo2, hi2)
    roots.sort()
    return roots, last


def largest_root(poly: QuarticPoly, scan_step: float = 1e-3,
                 width: float = 1e-12) -> RootResult:
    """Isolate all real roots of ``poly`` in (1, scan bound] and return
    the rightmost.

    Scans from alpha=1 to one past the Cauchy bound at ``scan_step``,
    records every sign change, and bisects each bracket down to
    ``width``.  Requires poly.value(1) < 0 (guaranteed for admissible
    curvature exponents); otherwise the input is reported inconsistent.
    """
    if poly.c4 <= 0.0:
        raise InconsistentQuartic(f"leading coefficient must be positive: {poly}")
    v1 = poly.value(1.0)
    if v1 >= 0.0:
        raise InconsistentQuartic(
            f"value at alpha=1 is {v1:.6g} >= 0; no root is bracketed above 1")
    cauchy = 1.0 + max(abs(poly.c2), abs(poly.c1), abs(poly.c0)) / poly.c4
    hi_end = 1.0 + max(1.0, cauchy)
    roots, last = _scan_roots(poly, 1.0, hi_end, scan_step, width)
    if not roots:
        raise InconsistentQuartic(
            "no sign change found on the scan range despite value(1) < 0")
    return RootResult(roots=tuple(roots), alpha_star=roots[-1],
                      bracket=last, width=last[1] - last[0])


def positive_roots(poly: QuarticPoly, scan_step: float = 1e-3,
                   width: float = 1e-12) -> tuple:
    """All real roots in (0, Fujiwara bound].

    Unlike :func:`largest_root` this makes no sign assumption at 1, so
    it also serves quartics whose largest root sits below 1 (the
    singular-power form does for p close to 1).
    """
    if poly.c4 <= 0.0:
        raise InconsistentQuartic(f"leading coefficient must be positive: {poly}")
    fujiwara = 2.0 * max(abs(poly.c2 / poly.c4) ** 0.5,
                         abs(poly.c1 / poly.c4) ** (1.0 / 3.0),
                         abs(poly.c0 / poly.c4) ** 0.25)
    roots, _ = _scan_roots(poly, 0.0, max(fujiwara, 1.0) * 1.001, scan_step, width)
    return tuple(roots)


@dataclass(frozen=True)
class DimensionBound:
    """Dimension bound assembled from the quartic root and the 8/tau leg."""

    n_quartic: float
    n_8tau: float
    n_combined: float
    max_dim: int
    kind: Kind


def dimension_bound(alpha_star: float, tau_plus: float, kind: Kind) -> DimensionBound:
    """Evaluate the dimension formula at (alpha_star, tau_plus).

    ``max_dim`` is the largest integer strictly below the combined
    bound: the underlying statements are strict inequalities, so an
    exactly-integer bound excludes itself.
    """
    if not alpha_star > 1.0:
        raise ValueError(f"alpha_star must exceed 1, got {alpha_star}")
    if not 0.0 < tau_plus < 2.0:
        raise ValueError(f"tau_plus must lie in (0, 2), got {tau_plus}")
    n_q = (4.0 * alpha_star * (2.0 - tau_plus) + 2.0 * tau_plus) / tau_plus
    if kind is Kind.REGULAR:
        n_q *= max(1.0, tau_plus)
    n_8 = 8.0 / tau_plus
    n_c = max(n_q, n_8)
    floor = math.floor(n_c)
    max_dim = floor - 1 if n_c == floor else floor
    return DimensionBound(n_quartic=n_q, n_8tau=n_8, n_combined=n_c,
                          max_dim=max_dim, kind=kind)


@dataclass(frozen=True)
class PipelineReport:
    """Full trace of tau -> quartic -> root -> dimension bound."""

    name: str
    kind: Kind
    tau: TauEstimate
    poly: QuarticPoly
    root: RootResult
    bound: DimensionBound

    def as_dict(self):
        return {
            "family": self.name,
            "kind": self.kind.value,
            "tau_minus": self.tau.tau_minus,
            "tau_plus": self.tau.tau_plus,
            "coefficients": self.poly.coefficients(),
            "alpha_star": self.root.alpha_star,
            "n_quartic": self.bound.n_quartic,
            "n_8tau": self.bound.n_8tau,
            "max_dim": self.bound.max_dim,
        }


def dimension_pipeline(nl: Nonlinearity, tau_tol: float = 1e-6) -> PipelineReport:
    """Compose tau estimation, quartic construction, root isolation and
    the dimension formula for one nonlinearity.

    Tau non-convergence or out-of-range exponents raise
    :class:`TauNotConverged` carrying the estimate as evidence.
    """
    est = estimate_tau(nl, tol=tau_tol)
    if not est.converged:
        raise TauNotConverged(est)
    if not (0.0 < est.tau_minus and est.tau_plus < 2.0):
        raise TauNotConverged(
            est, f"curvature exponents ({est.tau_minus:.6g}, {est.tau_plus:.6g}) "
                 "outside the admissible range (0, 2)")
    poly = quartic_general(est.tau_minus, est.tau_plus)
    root = largest_root(poly)
    bound = dimension_bound(root.alpha_star, est.tau_plus, nl.kind)
    return PipelineReport(name=nl.name, kind=nl.kind, tau=est,
                          poly=poly, root=root, bound=bound)


# ---------------------------------------------------------------------------
# negativity certificates
# ---------------------------------------------------------------------------

CERTIFICATE_FORMULAS = {
    "A": lambda tau: 5.0 * tau / (2.0 * (2.0 - tau)),
    "B": lambda tau: 5.0 * tau / (4.0 * (2.0 - tau)),
}


@dataclass(frozen=True)
class NegativityCertificate:
    """Grid evidence that P(alpha(tau), tau, tau) < 0 on [tau_lo, tau_hi].

    ``margin`` is the distance of the worst grid value below zero
    (positive iff certified).  A refinement pass at step/100 around the
    worst point sharpens the reported minimum.
    """

    formula: str
    tau_lo: float
    tau_hi: float
    grid_step: float
    certified: bool
    worst_value: float
    tau_at_worst: float
    margin: float
    n_points: int

    def as_dict(self):
        return {
            "formula": self.formula,
            "tau_lo": self.tau_lo,
            "tau_hi": self.tau_hi,
            "grid_step": self.grid_step,
            "certified": self.certified,
            "worst_value": self.worst_value,
            "tau_at_worst": self.tau_at_worst,
            "margin": self.margin,
            "n_points": self.n_points,
        }


def _certificate_values(formula, taus):
    alpha = CERTIFICATE_FORMULAS[formula](taus)
    c4 = (2.0 - taus) ** 2
    c2 = -8.0 * (2.0 - taus)
    c1 = 4.0 * (4.0 - 3.0 * taus)
    c0 = -4.0 * (1.0 - taus)
    return ((c4 * alpha * alpha + c2) * alpha + c1) * alpha + c0


def certify_negativity(formula: str, tau_lo: float, tau_hi: float,
                       grid_step: float = 1e-3, refine: bool = True) -> NegativityCertificate:
    """Certify strict negativity of the equal-exponent quartic along a
    tau grid, at alpha given by the named formula (A or B).

    A failed certification is a valid result, reported with the worst
    value and its location; nothing is raised.
    """
    if formula not in CERTIFICATE_FORMULAS:
        raise ValueError(f"unknown formula {formula!r}; known: A, B")
    if not (0.0 < tau_lo < tau_hi < 2.0):
        raise ValueError(f"need 0 < tau_lo < tau_hi < 2, got ({tau_lo}, {tau_hi})")
    n = int(round((tau_hi - tau_lo) / grid_step)) + 1
    taus = np.linspace(tau_lo, tau_hi, max(n, 2))
    vals = _certificate_values(formula, taus)
    i_worst = int(np.argmax(vals))
    worst_tau, worst_val = float(taus[i_worst]), float(vals[i_worst])
    n_points = len(taus)
    if refine:
        lo = max(tau_lo, worst_tau - grid_step)
        hi = min(tau_hi, worst_tau + grid_step)
        fine = np.linspace(lo, hi, 201)
        fvals = _certificate_values(formula, fine)
        j = int(np.argmax(fvals))
        if fvals[j] > worst_val:
            worst_tau, worst_val = float(fine[j]), float(fvals[j])
        n_points += len(fine)
    certified = bool(worst_val < 0.0)
    return NegativityCertificate(
        formula=formula, tau_lo=tau_lo, tau_hi=tau_hi, grid_step=grid_step,
        certified=certified, worst_value=worst_val, tau_at_worst=worst_tau,
        margin=-worst_val, n_points=n_points)


# ---------------------------------------------------------------------------
# inverse threshold solves
# ---------------------------------------------------------------------------

# Default ranges stay clear of tau -> 2, where the quartic degenerates
# (leading coefficient -> 0) and the scan bound blows up.
_DEFAULT_SCAN = {
    ("tau", Kind.SINGULAR): (0.05, 1.95),
    ("tau", Kind.REGULAR): (0.05, 1.95),
    ("p", Kind.SINGULAR): (1.05, 200.0),
    ("p", Kind.REGULAR): (1.05, 1e6),
}


def _tau_of_param(param, scan, kind):
    if scan == "tau":
        return param
    if kind is Kind.SINGULAR:
        return (param + 1.0) / param
    return (param - 1.0) / param


def threshold_solve(target_dim: int, kind: Kind, scan: str = "p",
                    scan_range: Optional[tuple] = None, width: float = 1e-6,
                    monotone_points: int = 33) -> float:
    """Find the parameter where the quartic dimension bound crosses
    ``target_dim``.

    ``scan`` selects the parameter: "tau" varies the equal curvature
    exponent directly, "p" varies the power-family parameter (mapped to
    tau by kind).  Monotonicity of the composed map is verified on a
    coarse grid before bisecting; a non-monotone range fails loudly.
    """
    if target_dim < 2:
        raise ValueError(f"target_dim must be at least 2, got {target_dim}")
    if scan not in ("tau", "p"):
        raise ValueError(f"scan must be 'tau' or 'p', got {scan!r}")
    lo, hi = scan_range if scan_range is not None else _DEFAULT_SCAN[(scan, kind)]

    def n_of(param):
        tau = _tau_of_param(param, scan, kind)
        if not 0.0 < tau < 2.0:
            raise ValueError(f"parameter {param} maps to tau={tau} outside (0, 2)")
        poly = quartic_general(tau, tau)
        alpha = largest_root(poly).alpha_star
        return dimension_bound(alpha, tau, kind).n_quartic

    # p-scans are probed uniformly in tau for even coverage
    if scan == "p":
        taus = np.linspace(_tau_of_param(lo, scan, kind),
                           _tau_of_param(hi, scan, kind), monotone_points)
        if kind is Kind.SINGULAR:
            grid = 1.0 / (taus - 1.0)
        else:
            grid = 1.0 / (1.0 - taus)
        grid = np.sort(grid)
        grid[0], grid[-1] = lo, hi
    else:
        grid = np.linspace(lo, hi, monotone_points)
    values = np.array([n_of(g) for g in grid])
    diffs = np.diff(values)
    if np.all(diffs > 0.0):
        increasing = True
    elif np.all(diffs < 0.0):
        increasing = False
    else:
        raise InconsistentQuartic(
            "dimension bound is not monotone on the scan range; "
            "bisection would be unsound")
    target = float(target_dim)
    if not (min(values[0], values[-1]) <= target <= max(values[0], values[-1])):
        raise ValueError(
            f"target dimension {target_dim} unreachable on scan range "
            f"[{lo}, {hi}] (bound spans [{values.min():.4g}, {values.max():.4g}])")
    p_lo, p_hi = lo, hi
    while p_hi - p_lo > width:
        mid = 0.5 * (p_lo + p_hi)
        if (n_of(mid) < target) == increasing:
            p_lo = mid
        else:
            p_hi = mid
    return 0.5 * (p_lo + p_hi)


def tau_of_threshold(param: float, kind: Kind, scan: str = "p") -> float:
    """Map a threshold-scan parameter back to its curvature exponent."""
    return _tau_of_param(param, scan, kind)
