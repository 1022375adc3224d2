"""Radial discretization and minimal-branch continuation for
Delta^2 u = lambda f(u) on the unit ball with Navier conditions.

The fourth-order problem splits into the second-order system

    -Delta u = v,   -Delta v = lambda f(u),   u(1) = v(1) = 0,

on the radial Laplacian u'' + (n-1)/r u'.  Minimal solutions on the
ball are radial, so everything reduces to a 1-D boundary value problem:
damped Newton with a monotone-iteration fallback from the zero
subsolution, lambda marching with step halving to bracket the fold, a
weighted Sturm-Liouville eigenvalue for the stability inequality, and
per-state diagnostics for every checkable integral bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .errors import EigenIterationError, NoSolution, SingularTouch
from .nonlinearity import Kind, Nonlinearity, antiderivative, estimate_tau, f_shifted
from .quadrature import CumulativeTable

CLAMP_EPS = 1e-12        # singular iterates are held at a_f - CLAMP_EPS
POSITIVITY_TOL = 1e-10
THETA_PANELS = 4096


def _sphere_area(n):
    """Surface measure of the unit (n-1)-sphere."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    """Equispaced radial grid with cell-integrated quadrature weights.

    ``weights[i]`` is omega_{n-1} * int r^{n-1} dr over the cell around
    node i (cells split at midpoints), so the weight sum telescopes to
    the exact ball volume.  ``lap`` is the centered-difference radial
    Laplacian with the r=0 closure Delta phi(0) = n phi''(0) from even
    extension; its boundary row is empty (boundary conditions are
    imposed on the system level).  ``jac_band`` holds the static part of
    the Newton Jacobian in LAPACK band storage for the interleaved
    (u_0, v_0, u_1, v_1, ...) ordering, where it is pentadiagonal.
    """

    n: int
    M: int
    h: float
    r: np.ndarray
    weights: np.ndarray
    lap: sp.csr_matrix = field(repr=False)
    lap_band: np.ndarray = field(repr=False)
    jac_band: np.ndarray = field(repr=False)

    @property
    def volume(self):
        return float(self.weights.sum())

    def integrate(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))


def discretize(n: int, M: int) -> RadialGrid:
    """Build the radial grid and operator handles for dimension n.

    Requires M >= 64 so that branch-level tolerances make sense at all.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension n must be a positive integer, got {n}")
    if int(M) != M or M < 64:
        raise ValueError(f"M too small: need M >= 64, got {M}")
    n, M = int(n), int(M)
    h = 1.0 / M
    r = np.linspace(0.0, 1.0, M + 1)

    omega = _sphere_area(n)
    edges = np.concatenate([[0.0], r[:-1] + 0.5 * h, [1.0]])
    weights = omega * (edges[1:] ** n - edges[:-1] ** n) / n

    main = np.zeros(M + 1)
    lower = np.zeros(M)
    upper = np.zeros(M)
    main[0] = -2.0 * n / h**2
    upper[0] = 2.0 * n / h**2
    i = np.arange(1, M)
    main[i] = -2.0 / h**2
    lower[i - 1] = 1.0 / h**2 - (n - 1) / (2.0 * h * r[i])
    upper[i] = 1.0 / h**2 + (n - 1) / (2.0 * h * r[i])
    lap = sp.diags([lower, main, upper], [-1, 0, 1], shape=(M + 1, M + 1),
                   format="csr")

    # Dirichlet-row Laplacian in (1,1) band storage for monotone iteration
    lap_band = np.zeros((3, M + 1))
    lap_band[0, 1:] = upper
    lap_band[1, :] = main
    lap_band[1, M] = 1.0
    lap_band[2, :M] = lower
    lap_band[2, M - 1] = 0.0   # Dirichlet row has no lower coupling

    # static part of the interleaved Newton Jacobian, band width (2, 2)
    N = 2 * M + 2
    jac = np.zeros((5, N))
    idx = np.arange(M)                      # interior equations i = 0..M-1
    jac[0, 2 * idx + 2] = upper[idx]        # A[U_i, U_{i+1}]
    jac[0, 2 * idx + 3] = upper[idx]        # A[V_i, V_{i+1}]
    jac[2, 2 * idx] = main[idx]             # A[U_i, U_i]
    jac[2, 2 * idx + 1] = main[idx]         # A[V_i, V_i]
    jac[2, 2 * M] = 1.0                     # Dirichlet u(1)
    jac[2, 2 * M + 1] = 1.0                 # Dirichlet v(1)
    ii = np.arange(1, M)
    jac[4, 2 * ii - 2] = lower[ii - 1]      # A[U_i, U_{i-1}]
    jac[4, 2 * ii - 1] = lower[ii - 1]      # A[V_i, V_{i-1}]
    jac[1, 2 * idx + 1] = 1.0               # A[U_i, V_i]
    # jac[3, 2i] = lambda f'(u_i) is filled per Newton iteration

    r.setflags(write=False)
    weights.setflags(write=False)
    lap_band.setflags(write=False)
    jac.setflags(write=False)
    return RadialGrid(n=n, M=M, h=h, r=r, weights=weights, lap=lap,
                      lap_band=lap_band, jac_band=jac)


@dataclass(frozen=True)
class RadialState:
    """One converged branch point: (lambda, u, v = -Delta u)."""

    lam: float
    u: np.ndarray
    v: np.ndarray
    residual: float
    newton_iters: int
    picard_iters: int = 0

    def __post_init__(self):
        self.u.setflags(write=False)
        self.v.setflags(write=False)

    @property
    def u0(self):
        return float(self.u[0])


def zero_state(grid: RadialGrid) -> RadialState:
    return RadialState(lam=0.0, u=np.zeros(grid.M + 1), v=np.zeros(grid.M + 1),
                       residual=0.0, newton_iters=0)


def _f_on_grid(nl, u):
    with np.errstate(all="ignore"):
        return np.asarray(nl.f(u), dtype=float)


def _residual(grid, nl, lam, u, v):
    M = grid.M
    fu = _f_on_grid(nl, u)
    with np.errstate(all="ignore"):
        ru = grid.lap @ u + v
        rv = grid.lap @ v + lam * fu
    ru[M] = u[M]
    rv[M] = v[M]
    return np.concatenate([ru, rv]), fu


def _clamp(nl, u):
    if nl.kind is Kind.SINGULAR:
        cap = nl.a_f - CLAMP_EPS
        if np.any(u > cap):
            return np.minimum(u, cap), True
    return u, False


def _tol_floor(grid, u, v, lam, fu):
    """Attainable max-norm residual in float64.

    The second-difference rows scale like 1/h^2, so evaluating them on
    O(1) iterates leaves cancellation noise of order eps/h^2; requesting
    less than that loops forever.  The requested tolerance is floored
    at this level.
    """
    eps = np.finfo(float).eps
    scale = max(1.0, float(np.abs(u).max()), float(np.abs(v).max()))
    forcing = lam * float(np.abs(fu).max()) if len(fu) else 0.0
    return 8.0 * eps * scale / grid.h**2 + 4.0 * eps * forcing


def _newton(grid, nl, lam, u, v, tol, max_iter=25):
    """Damped Newton on the coupled system; returns (u, v, res, iters, status).

    The Jacobian is pentadiagonal in the interleaved unknown ordering,
    so each step is one LAPACK banded solve.
    """
    M = grid.M
    u, touched = _clamp(nl, u.copy())
    v = v.copy()
    R, fu = _residual(grid, nl, lam, u, v)
    res = float(np.abs(R).max())
    for it in range(1, max_iter + 1):
        if not math.isfinite(res):
            return u, v, res, it - 1, "diverged"
        if res < max(tol, _tol_floor(grid, u, v, lam, fu)):
            status = "touched" if touched else "converged"
            return u, v, res, it - 1, status
        with np.errstate(all="ignore"):
            dfu = np.asarray(nl.df(u), dtype=float)
        if not np.all(np.isfinite(dfu[:M])):
            return u, v, res, it - 1, "diverged"
        ab = grid.jac_band.copy()
        ab[3, 0:2 * M:2] = lam * dfu[:M]
        rhs = np.empty(2 * M + 2)
        rhs[0::2] = -R[:M + 1]
        rhs[1::2] = -R[M + 1:]
        try:
            delta = solve_banded((2, 2), ab, rhs)
        except np.linalg.LinAlgError:
            return u, v, res, it - 1, "diverged"
        du, dv = delta[0::2], delta[1::2]
        step = 1.0
        improved = False
        for _ in range(25):
            u_try, touch_try = _clamp(nl, u + step * du)
            v_try = v + step * dv
            R_try, _ = _residual(grid, nl, lam, u_try, v_try)
            res_try = float(np.abs(R_try).max())
            if math.isfinite(res_try) and res_try < res:
                u, v, R, res = u_try, v_try, R_try, res_try
                touched = touch_try
                improved = True
                break
            step *= 0.5
        if not improved:
            return u, v, res, it, "diverged"
    ok = res < max(tol, _tol_floor(grid, u, v, lam, fu))
    status = "touched" if touched and ok else ("converged" if ok else "diverged")
    return u, v, res, max_iter, status


def _picard(grid, nl, lam, tol, max_iter, u_cap=1e6):
    """Monotone iteration from the zero subsolution with Newton polish.

    Increasing f makes the iterates increase pointwise toward the
    minimal solution when one exists; unbounded growth or a singular
    clamp is the no-solution signal.  Newton polish is attempted on a
    geometric schedule so slow linear convergence near the fold hands
    off once the quadratic basin is reached.
    """
    M = grid.M
    u = np.zeros(M + 1)
    v = np.zeros(M + 1)
    polish_at = 32
    for it in range(1, max_iter + 1):
        fu = _f_on_grid(nl, u)
        if not np.all(np.isfinite(fu)):
            return u, v, math.inf, it, "diverged"
        rhs_v = -lam * fu
        rhs_v[M] = 0.0
        v_new = solve_banded((1, 1), grid.lap_band, rhs_v)
        rhs_u = -v_new
        rhs_u[M] = 0.0
        u_new = solve_banded((1, 1), grid.lap_band, rhs_u)
        u_new, touched = _clamp(nl, u_new)
        if touched:
            return u_new, v_new, math.inf, it, "touched"
        if not np.isfinite(u_new[0]) or u_new[0] > u_cap:
            return u_new, v_new, math.inf, it, "diverged"
        delta = float(np.abs(u_new - u).max())
        u, v = u_new, v_new
        stagnated = delta < 1e-13 * max(1.0, float(np.abs(u).max()))
        if stagnated or it >= polish_at:
            polish_at *= 2
            un, vn, res, nit, status = _newton(grid, nl, lam, u, v, tol, max_iter=10)
            if status == "converged":
                return un, vn, res, it, "converged"
            if status == "touched":
                return un, vn, res, it, "touched"
            if stagnated:
                # stagnated below Newton's basin: report the residual we have
                R, fu = _residual(grid, nl, lam, u, v)
                res = float(np.abs(R).max())
                ok = res < max(tol, _tol_floor(grid, u, v, lam, fu))
                return u, v, res, it, "converged" if ok else "diverged"
    return u, v, math.inf, max_iter, "diverged"


def solve_at_lambda(grid: RadialGrid, nl: Nonlinearity, lam: float,
                    init: Optional[RadialState] = None, tol: float = 1e-10,
                    picard_max: int = 4000, force_minimal: bool = False) -> RadialState:
    """Solve the coupled system at one lambda.

    Newton runs from ``init`` (or zero); on divergence, monotone Picard
    iteration from the zero subsolution takes over, which lands on the
    minimal solution when one exists.  ``force_minimal`` skips the
    Newton warm start entirely.  Raises :class:`NoSolution` when both
    schemes fail and :class:`SingularTouch` when iterates reach the
    domain endpoint of a singular nonlinearity.
    """
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if lam == 0.0:
        return zero_state(grid)
    if init is not None and float(np.max(init.u)) >= nl.a_f:
        raise ValueError("initial state is infeasible: max u >= a_f")

    newton_iters = 0
    if not force_minimal:
        u0 = init.u if init is not None else np.zeros(grid.M + 1)
        v0 = init.v if init is not None else np.zeros(grid.M + 1)
        u, v, res, newton_iters, status = _newton(grid, nl, lam, u0, v0, tol)
        if status == "converged" and _positivity_ok(u, v):
            return RadialState(lam=lam, u=u, v=v, residual=res,
                               newton_iters=newton_iters)
        if status == "touched":
            raise SingularTouch(lam)

    u, v, res, pit, status = _picard(grid, nl, lam, tol, picard_max)
    if status == "converged" and _positivity_ok(u, v):
        return RadialState(lam=lam, u=u, v=v, residual=res,
                           newton_iters=newton_iters, picard_iters=pit)
    if status == "touched":
        raise SingularTouch(lam)
    raise NoSolution(lam)


def _positivity_ok(u, v):
    return bool(np.min(u) >= -POSITIVITY_TOL and np.min(v) >= -POSITIVITY_TOL)


@dataclass(frozen=True)
class StabilityReport:
    """Smallest eigenvalue of -Delta - sqrt(lambda f'(u)) on radial H^1_0.

    ``mu_min >= 0`` is the discrete form of the stability inequality
    (test functions integrate sqrt(f') against phi^2 on one side and
    carry the Dirichlet energy on the other).
    """

    lam: float
    mu_min: float
    eigvec_sign_changes: int
    iterations: int
    residual: float


def _stability_tridiagonal(grid, nl, state):
    n, M, h = grid.n, grid.M, grid.h
    omega = _sphere_area(n)
    r = grid.r
    stiff = omega * (r[1:] ** n - r[:-1] ** n) / (n * h**2)
    diag = np.empty(M)
    diag[0] = stiff[0]
    diag[1:] = stiff[:M - 1] + stiff[1:M]
    off = -stiff[:M - 1]
    with np.errstate(all="ignore"):
        c = np.sqrt(np.maximum(state.lam * np.asarray(nl.df(state.u), dtype=float), 0.0))
    w = grid.weights[:M]
    d = (diag - w * c[:M]) / w
    e = off / np.sqrt(w[:-1] * w[1:])
    return d, e, c


def _tridiag_solve(d, e, sigma, rhs):
    m = len(d)
    ab = np.zeros((3, m))
    ab[0, 1:] = e
    ab[1, :] = d - sigma
    ab[2, :-1] = e
    return solve_banded((1, 1), ab, rhs)


def stability_eigenvalue(grid: RadialGrid, nl: Nonlinearity, state: RadialState,
                         tol: float = 1e-9, max_iter: int = 200) -> StabilityReport:
    """Compute mu_min by shifted inverse iteration with Rayleigh updates.

    The weighted eigenproblem (stiffness and mass both carry r^{n-1})
    reduces to a symmetric tridiagonal pencil; the start shift sits
    below the whole spectrum, so the iteration converges to the ground
    state, whose sign pattern is reported as a cross-check.
    """
    if not math.isfinite(state.residual):
        raise ValueError("state did not converge; no stability report")
    d, e, c = _stability_tridiagonal(grid, nl, state)
    sigma = -float(np.max(c)) - 1.0
    x = np.sqrt(grid.weights[:grid.M])
    x /= np.linalg.norm(x)
    mu_prev = math.inf
    mu = sigma
    for it in range(1, max_iter + 1):
        shift = sigma if it <= 4 else mu
        try:
            y = _tridiag_solve(d, e, shift, x)
        except np.linalg.LinAlgError:
            y = _tridiag_solve(d, e, shift + 1e-10 * max(1.0, abs(shift)), x)
        norm = np.linalg.norm(y)
        if not math.isfinite(norm) or norm == 0.0:
            raise EigenIterationError("inverse iteration produced a degenerate vector")
        x = y / norm
        mu = float(x @ (d * x) + 2.0 * (x[:-1] * e * x[1:]).sum())
        if it > 4 and abs(mu - mu_prev) <= tol * max(1.0, abs(mu)):
            break
        mu_prev = mu
    else:
        raise EigenIterationError(
            f"no convergence after {max_iter} inverse iterations")
    # residual ||B x - mu x|| as an a-posteriori check
    Bx = d * x
    Bx[:-1] += e * x[1:]
    Bx[1:] += e * x[:-1]
    resid = float(np.linalg.norm(Bx - mu * x))
    signs = np.sign(x[np.abs(x) > 1e-12 * np.abs(x).max()])
    flips = int(np.sum(signs[:-1] * signs[1:] < 0))
    return StabilityReport(lam=state.lam, mu_min=mu, eigvec_sign_changes=flips,
                           iterations=it, residual=resid)


@dataclass(frozen=True)
class Branch:
    """Lambda-ordered minimal-branch states with the fold bracket."""

    grid: RadialGrid
    nonlinearity: str
    states: tuple
    stability: tuple
    lambda_star_estimate: float
    lambda_star_bracket: tuple

    @property
    def fold_indicator(self):
        return np.array([rep.mu_min for rep in self.stability])

    @property
    def lambdas(self):
        return np.array([st.lam for st in self.states])

    @property
    def u0s(self):
        return np.array([st.u0 for st in self.states])


def trace_branch(grid: RadialGrid, nl: Nonlinearity, lambda_step: float = 0.05,
                 step_floor: float = 1e-4, stab_tol: float = 1e-6,
                 max_states: int = 100000, tol: float = 1e-10) -> Branch:
    """March lambda upward, reusing each state to seed the next solve.

    Failed steps halve until ``step_floor``; the fold bracket is the
    last accepted lambda and the smallest failed one, so its width stays
    below twice the floor.  Every accepted state must pass the
    stability check (the minimal branch is semistable) and grow
    monotonically; a state that fails those is re-solved from the zero
    subsolution before the step is rejected.
    """
    if not lambda_step > step_floor > 0.0:
        raise ValueError(
            f"need lambda_step > step_floor > 0, got ({lambda_step}, {step_floor})")
    states = []
    reports = []
    prev = zero_state(grid)
    lam = 0.0
    step = lambda_step
    last_fail = math.nan
    while len(states) < max_states:
        if step < step_floor:
            break
        lam_try = lam + step
        accepted = False
        try:
            st = solve_at_lambda(grid, nl, lam_try, init=prev, tol=tol)
            ok, rep = _acceptable(grid, nl, st, prev, stab_tol)
            if not ok:
                st = solve_at_lambda(grid, nl, lam_try, tol=tol, force_minimal=True)
                ok, rep = _acceptable(grid, nl, st, prev, stab_tol)
            accepted = ok
        except (NoSolution, SingularTouch):
            rep = None
        if accepted:
            states.append(st)
            reports.append(rep)
            prev = st
            lam = lam_try
        else:
            last_fail = lam_try
            step *= 0.5
    if math.isnan(last_fail):
        bracket = (lam, math.nan)
        estimate = math.nan
    else:
        bracket = (lam, last_fail)
        estimate = 0.5 * (bracket[0] + bracket[1])
    return Branch(grid=grid, nonlinearity=nl.name, states=tuple(states),
                  stability=tuple(reports), lambda_star_estimate=estimate,
                  lambda_star_bracket=bracket)


def _acceptable(grid, nl, st, prev, stab_tol):
    scale = max(1.0, float(np.abs(st.u).max()))
    if np.min(st.u - prev.u) < -1e-8 * scale:
        return False, None
    if nl.kind is Kind.SINGULAR and float(np.max(st.u)) >= nl.a_f - 2 * CLAMP_EPS:
        return False, None
    rep = stability_eigenvalue(grid, nl, st)
    return rep.mu_min >= -stab_tol, rep


# ---------------------------------------------------------------------------
# per-state diagnostics
# ---------------------------------------------------------------------------

def _antiderivative_values(nl, u, umax):
    if nl.F_closed is not None:
        return np.asarray(nl.F_closed(u), dtype=float)
    table = CumulativeTable(lambda s: np.asarray(nl.f(s), dtype=float), umax,
                            panels=THETA_PANELS)
    return np.asarray(table(u), dtype=float)


def pointwise_margin(grid: RadialGrid, nl: Nonlinearity, state: RadialState) -> float:
    """min over the grid of v - sqrt(lambda) * sqrt(2 max(F(u) - u, 0)).

    The continuum bound says this is nonnegative; discretely it may dip
    by O(h^2).
    """
    umax = float(np.max(state.u))
    F_vals = _antiderivative_values(nl, state.u, umax)
    g_vals = np.sqrt(2.0 * np.maximum(F_vals - state.u, 0.0))
    return float(np.min(state.v - math.sqrt(state.lam) * g_vals))


def _theta_sq_factory(nl, alpha):
    def theta_sq(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        m = s > 0.0
        if not np.any(m):
            return out
        sm = s[m]
        with np.errstate(all="ignore"):
            tld = np.asarray(f_shifted(nl, sm), dtype=float)
            dfv = np.asarray(nl.df(sm), dtype=float)
            d2fv = np.asarray(nl.d2f(sm), dtype=float)
            curef = 1.0 - tld * d2fv / (2.0 * dfv * dfv)
            vals = (alpha**2 * np.exp((2.0 * alpha - 2.0) * np.log(tld))
                    * np.exp((2.0 - alpha) * np.log(dfv)) * curef * curef)
        out[m] = np.nan_to_num(vals, nan=0.0, posinf=np.inf)
        return out
    return theta_sq


def _theta_grade(alpha):
    # theta'(s)^2 ~ s^(2 alpha - 2) near 0; grading s = t x^g turns the
    # graded integrand into x^(g (2 alpha - 1) - 1), so higher g smooths
    # the cusp that appears for alpha < 1
    if alpha >= 1.0:
        return 2
    if alpha >= 0.75:
        return 3
    return int(math.ceil(1.0 / (2.0 * alpha - 1.0))) + 2


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Weighted integrals of one state used by the uniform-bound checks."""

    lam: float
    alpha: float
    int_f: float
    int_neg_lap: float
    energy: float
    lq_fprime: dict
    lq_f: dict
    key_lhs: float
    key_rhs: float
    pointwise_margin: float
    theta_refinement_error: float


def diagnostics(grid: RadialGrid, nl: Nonlinearity, state: RadialState,
                q_list: Sequence[float] = (1.0, 2.0), alpha: float = 1.2) -> DiagnosticsRecord:
    """Evaluate every tracked integral for one state.

    The key inequality compares

        LHS = int sqrt(f'(u)) theta(u)^2,
        theta(t) = shifted(t)^alpha / f'(t)^(alpha/2),

    against the Hoelder product bound with exponent pairs (2 alpha,
    2 alpha / (2 alpha - 1)); Theta(t) = int theta'(s)^2 ds comes from a
    cumulative table on [0, max u], rebuilt per state and cross-checked
    against a half-resolution build.
    """
    if alpha <= 0.5:
        raise ValueError(f"alpha must exceed 1/2, got {alpha}")
    if not len(q_list):
        raise ValueError("q_list must be nonempty")
    u = state.u
    w = grid.weights
    umax = float(np.max(u))
    with np.errstate(all="ignore"):
        fv = np.asarray(nl.f(u), dtype=float)
        dfv = np.asarray(nl.df(u), dtype=float)
        tld = np.asarray(f_shifted(nl, u), dtype=float)
    F_vals = _antiderivative_values(nl, u, umax)

    if umax > 0.0:
        F_of = (nl.F_closed if nl.F_closed is not None
                else CumulativeTable(lambda s: np.asarray(nl.f(s), dtype=float),
                                     umax, panels=THETA_PANELS))
        h_table = CumulativeTable(
            lambda s: np.asarray(nl.d2f(s), dtype=float)
            * np.sqrt(np.maximum(np.asarray(F_of(s), dtype=float), 0.0)),
            umax, panels=THETA_PANELS)
        H_vals = np.asarray(h_table(u), dtype=float)
        theta_table = CumulativeTable(_theta_sq_factory(nl, alpha), umax,
                                      panels=THETA_PANELS, grade=_theta_grade(alpha))
        Theta_vals = np.asarray(theta_table(u), dtype=float)
        theta_err = theta_table.refinement_error
    else:
        H_vals = np.zeros_like(u)
        Theta_vals = np.zeros_like(u)
        theta_err = 0.0

    energy = float(w @ (np.sqrt(np.maximum(F_vals, 0.0)) * H_vals))
    int_f = float(w @ fv)
    int_neg_lap = float(w @ state.v)

    def lq(vals):
        out = {}
        for q in q_list:
            with np.errstate(all="ignore"):
                out[float(q)] = float((w @ vals**q) ** (1.0 / q))
        return out

    two_a = 2.0 * alpha
    pos = tld > 0.0
    with np.errstate(all="ignore"):
        lhs_vals = np.where(pos, tld**two_a * dfv**(0.5 - alpha), 0.0)
        y_vals = fv**two_a * dfv**(0.5 - alpha)
        z_pow = two_a / (two_a - 1.0)
        z_vals = np.where(Theta_vals > 0.0,
                          Theta_vals**z_pow * dfv**(-0.5 / (two_a - 1.0)), 0.0)
    key_lhs = float(w @ np.nan_to_num(lhs_vals, nan=0.0))
    Y = float(w @ np.nan_to_num(y_vals, nan=0.0))
    Z = float(w @ np.nan_to_num(z_vals, nan=0.0))
    key_rhs = (alpha**2 / (two_a - 1.0)) * Y ** (1.0 / two_a) \
        * Z ** ((two_a - 1.0) / two_a)

    return DiagnosticsRecord(
        lam=state.lam, alpha=alpha, int_f=int_f, int_neg_lap=int_neg_lap,
        energy=energy, lq_fprime=lq(dfv), lq_f=lq(fv), key_lhs=key_lhs,
        key_rhs=key_rhs, pointwise_margin=pointwise_margin(grid, nl, state),
        theta_refinement_error=theta_err)


@dataclass(frozen=True)
class UniformityRow:
    lam: float
    i_alpha: float
    q1_norm: float
    q2_norm: float
    int_neg_lap: float
    energy: float


UNIFORMITY_QUANTITIES = ("i_alpha", "q1_norm", "q2_norm", "int_neg_lap", "energy")


@dataclass(frozen=True)
class UniformityReport:
    """Branch-wide table of the quantities that must stay uniformly
    bounded as lambda approaches the fold.

    ``summary[name]`` carries the branch maximum, the value at the state
    nearest 0.9 lambda_star with its growth ratio, and the tail slope of
    log(quantity) against log(lambda_star - lambda).  A quantity counts
    as bounded when that slope stays shallow (no power-law divergence);
    the square-root cusp of a convergent quantity flattens the slope,
    while a diverging one drives it below -0.1.
    """

    alpha: float
    tau2: float
    q1: float
    q2: float
    rows: tuple
    summary: dict

    def max_of(self, name):
        return max(getattr(r, name) for r in self.rows) if self.rows else math.nan

    @property
    def bounded(self):
        return {name: info["bounded"] for name, info in self.summary.items()}


def uniformity_report(branch: Branch, nl: Nonlinearity, alpha: float = 1.2,
                      tau2: Optional[float] = None) -> UniformityReport:
    """Tabulate the uniform-bound quantities across a branch.

    ``q1 = alpha (2/tau2 - 1) + 1/2`` weights f'(u) and
    ``q2 = alpha (2 - tau2) + tau2/2`` weights f(u); tau2 defaults to
    the estimated tau_plus.  Each quantity is flagged bounded when its
    branch maximum stays below twice its mid-branch value.
    """
    if tau2 is None:
        tau2 = estimate_tau(nl).tau_plus
    q1 = alpha * (2.0 / tau2 - 1.0) + 0.5
    q2 = alpha * (2.0 - tau2) + tau2 / 2.0
    grid = branch.grid
    w = grid.weights
    rows = []
    for st in branch.states:
        with np.errstate(all="ignore"):
            fv = np.asarray(nl.f(st.u), dtype=float)
            dfv = np.asarray(nl.df(st.u), dtype=float)
            tld = np.asarray(f_shifted(nl, st.u), dtype=float)
            i_vals = np.where(tld > 0.0, tld**(2 * alpha) * dfv**(0.5 - alpha), 0.0)
            i_alpha = float(w @ np.nan_to_num(i_vals, nan=0.0))
            q1_norm = float((w @ dfv**q1) ** (1.0 / q1))
            q2_norm = float((w @ fv**q2) ** (1.0 / q2))
        umax = float(np.max(st.u))
        F_vals = _antiderivative_values(nl, st.u, umax)
        if umax > 0.0:
            F_of = (nl.F_closed if nl.F_closed is not None
                    else CumulativeTable(lambda s: np.asarray(nl.f(s), dtype=float),
                                         umax, panels=THETA_PANELS))
            h_table = CumulativeTable(
                lambda s: np.asarray(nl.d2f(s), dtype=float)
                * np.sqrt(np.maximum(np.asarray(F_of(s), dtype=float), 0.0)),
                umax, panels=THETA_PANELS)
            H_vals = np.asarray(h_table(st.u), dtype=float)
        else:
            H_vals = np.zeros_like(st.u)
        energy = float(w @ (np.sqrt(np.maximum(F_vals, 0.0)) * H_vals))
        rows.append(UniformityRow(
            lam=st.lam, i_alpha=i_alpha, q1_norm=q1_norm, q2_norm=q2_norm,
            int_neg_lap=float(w @ st.v), energy=energy))
    summary = {}
    if rows:
        lam_star = branch.lambda_star_estimate
        lams = np.array([r.lam for r in rows])
        for name in UNIFORMITY_QUANTITIES:
            vals = np.array([getattr(r, name) for r in rows])
            summary[name] = _boundedness_summary(vals, lams, lam_star)
    return UniformityReport(alpha=alpha, tau2=tau2, q1=q1, q2=q2,
                            rows=tuple(rows), summary=summary)


def _boundedness_summary(vals, lams, lam_star, tail=10, slope_floor=-0.1):
    out = {"max": float(vals.max())}
    if math.isfinite(lam_star) and lam_star > 0.0:
        anchor = float(vals[int(np.argmin(np.abs(lams - 0.9 * lam_star)))])
        out["anchor"] = anchor
        out["anchor_ratio"] = out["max"] / max(anchor, 1e-300)
        eps = lam_star - lams
        keep = eps > 0.0
        v, e = vals[keep], eps[keep]
        if len(v) >= 4:
            # fit on the states closest to the fold, where a convergent
            # quantity's slope has flattened but a power-law divergence
            # keeps its exponent
            near = e <= 32.0 * e.min()
            if near.sum() < 4:
                near = np.zeros_like(near)
                near[-min(tail, len(v)):] = True
            v, e = v[near], e[near]
        if len(v) >= 4 and np.all(v > 0.0):
            slope = float(np.polyfit(np.log(e), np.log(v), 1)[0])
            out["tail_slope"] = slope
            out["bounded"] = bool(slope >= slope_floor)
            return out
    out["anchor"] = out.get("anchor", math.nan)
    out["anchor_ratio"] = out.get("anchor_ratio", math.nan)
    out["tail_slope"] = math.nan
    out["bounded"] = None
    return out
