import math

import numpy as np
import pytest
from scipy.integrate import solve_bvp
from scipy.linalg import eigh, eigh_tridiagonal

from gelfand4 import radial as rd
from gelfand4.errors import NoSolution, SingularTouch
from gelfand4.nonlinearity import make_builtin

# independent collocation oracle (scipy.solve_bvp, tol 1e-10) for
# n=3, exp, lambda=1: u(0)
U0_BVP_ORACLE = 0.019658020993587853


@pytest.fixture(scope="module")
def exp_nl():
    return make_builtin("exp")


@pytest.fixture(scope="module")
def sp2_nl():
    return make_builtin("singular_power", [2.0])


@pytest.fixture(scope="module")
def grid128():
    return rd.discretize(3, 128)


@pytest.fixture(scope="module")
def branch_exp_128(grid128, exp_nl):
    return rd.trace_branch(grid128, exp_nl, lambda_step=0.5, step_floor=5e-3)


@pytest.fixture(scope="module")
def branch_sp2_128(grid128, sp2_nl):
    return rd.trace_branch(grid128, sp2_nl, lambda_step=0.5, step_floor=5e-3)


# ---------------------------------------------------------------------------
# grid and operators
# ---------------------------------------------------------------------------

def test_discretize_validation():
    with pytest.raises(ValueError):
        rd.discretize(3, 32)
    with pytest.raises(ValueError):
        rd.discretize(0, 128)


def test_weights_positive_and_exact_volume():
    for n in (1, 2, 3, 4, 7):
        g = rd.discretize(n, 128)
        assert np.all(g.weights > 0.0)
        exact = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2) / n
        assert g.volume == pytest.approx(exact, rel=1e-8)


def test_weights_integrate_smooth_function():
    g = rd.discretize(3, 256)
    got = g.integrate(1.0 - g.r**2)
    assert got == pytest.approx(8 * math.pi / 15, rel=1e-4)


def test_laplacian_exact_on_quadratic():
    g = rd.discretize(3, 256)
    vals = (g.lap @ (1.0 - g.r**2))[:g.M]
    assert np.abs(vals + 6.0).max() < 1e-8


def test_laplacian_n1_is_second_difference():
    g = rd.discretize(1, 128)
    phi = np.cos(g.r)
    interior = (g.lap @ phi)[1:g.M]
    assert np.abs(interior + np.cos(g.r[1:g.M])).max() < 1e-4


# ---------------------------------------------------------------------------
# solves
# ---------------------------------------------------------------------------

def test_lambda_zero_is_exact(grid128, exp_nl):
    st = rd.solve_at_lambda(grid128, exp_nl, 0.0)
    assert st.u0 == 0.0 and st.residual == 0.0
    assert np.all(st.u == 0.0) and np.all(st.v == 0.0)


def test_negative_lambda_rejected(grid128, exp_nl):
    with pytest.raises(ValueError):
        rd.solve_at_lambda(grid128, exp_nl, -1.0)


def test_solve_matches_bvp_oracle(exp_nl):
    g = rd.discretize(3, 256)
    st = rd.solve_at_lambda(g, exp_nl, 1.0)
    assert st.u0 == pytest.approx(U0_BVP_ORACLE, abs=5e-7)


def test_solve_mesh_refinement(exp_nl):
    u0 = {}
    for M in (128, 256, 512):
        g = rd.discretize(3, M)
        u0[M] = rd.solve_at_lambda(g, exp_nl, 1.0).u0
    d1 = abs(u0[128] - u0[256])
    d2 = abs(u0[256] - u0[512])
    assert 2.0 <= d1 / d2 <= 8.0      # O(h^2) predicts a factor of 4
    assert d2 < 1e-6


def test_solve_positivity_and_boundary(grid128, exp_nl):
    st = rd.solve_at_lambda(grid128, exp_nl, 5.0)
    assert st.u[-1] == pytest.approx(0.0, abs=1e-12)
    assert st.v[-1] == pytest.approx(0.0, abs=1e-12)
    assert np.min(st.u) >= -1e-10 and np.min(st.v) >= -1e-10


def test_no_solution_beyond_fold(grid128, exp_nl, branch_exp_128):
    lam_big = 10.0 * branch_exp_128.lambda_star_estimate
    with pytest.raises(NoSolution):
        rd.solve_at_lambda(grid128, exp_nl, lam_big)


def test_singular_touch_beyond_fold(grid128, sp2_nl, branch_sp2_128):
    lam_big = 10.0 * branch_sp2_128.lambda_star_estimate
    with pytest.raises((SingularTouch, NoSolution)):
        rd.solve_at_lambda(grid128, sp2_nl, lam_big)


def test_infeasible_init_rejected(grid128, sp2_nl):
    bad = rd.RadialState(lam=1.0, u=np.full(grid128.M + 1, 1.5),
                         v=np.zeros(grid128.M + 1), residual=0.0,
                         newton_iters=0)
    with pytest.raises(ValueError):
        rd.solve_at_lambda(grid128, sp2_nl, 1.0, init=bad)


# ---------------------------------------------------------------------------
# branch tracing
# ---------------------------------------------------------------------------

def test_trace_branch_validation(grid128, exp_nl):
    with pytest.raises(ValueError):
        rd.trace_branch(grid128, exp_nl, lambda_step=0.01, step_floor=0.05)


def test_branch_monotone_and_bracketed(branch_exp_128):
    br = branch_exp_128
    lams = br.lambdas
    assert np.all(np.diff(lams) > 0.0)
    assert np.all(np.diff(br.u0s) > 0.0)
    lo, hi = br.lambda_star_bracket
    assert lo <= br.lambda_star_estimate <= hi
    assert hi - lo <= 2 * 5e-3
    # pointwise monotone in lambda at every node
    u_prev = br.states[0].u
    for st in br.states[1:]:
        assert np.min(st.u - u_prev) >= -1e-9
        u_prev = st.u


def test_branch_semistable(branch_exp_128):
    assert np.all(branch_exp_128.fold_indicator >= -1e-6)
    # final point is the branch minimum of the fold indicator
    assert branch_exp_128.fold_indicator[-1] == pytest.approx(
        branch_exp_128.fold_indicator.min(), abs=1e-9)


def test_branch_singular_stays_below_endpoint(branch_sp2_128, sp2_nl):
    for st in branch_sp2_128.states:
        assert float(np.max(st.u)) < sp2_nl.a_f - 1e-3


# ---------------------------------------------------------------------------
# stability eigenvalue
# ---------------------------------------------------------------------------

def test_stability_zero_state_matches_ball_eigenvalue(grid128, exp_nl):
    rep = rd.stability_eigenvalue(grid128, exp_nl, rd.zero_state(grid128))
    assert rep.mu_min == pytest.approx(math.pi**2, rel=2e-4)
    assert rep.eigvec_sign_changes == 0


def test_stability_matches_dense_oracle(exp_nl):
    g = rd.discretize(3, 128)
    st = rd.solve_at_lambda(g, exp_nl, 10.0)
    rep = rd.stability_eigenvalue(g, exp_nl, st)
    d, e, _ = rd._stability_tridiagonal(g, exp_nl, st)
    # oracle 1: LAPACK tridiagonal smallest eigenvalue
    mu_tri = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0][0]
    # oracle 2: dense symmetric eigensolver
    B = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    mu_dense = eigh(B, eigvals_only=True)[0]
    assert rep.mu_min == pytest.approx(mu_tri, abs=1e-9 * max(1, abs(mu_tri)))
    assert rep.mu_min == pytest.approx(mu_dense, abs=1e-9 * max(1, abs(mu_dense)))
    assert rep.residual < 1e-8


def test_stability_sequence_nonincreasing(branch_exp_128):
    mu = branch_exp_128.fold_indicator
    assert np.all(np.diff(mu) <= 1e-9)


# ---------------------------------------------------------------------------
# pointwise bound and diagnostics
# ---------------------------------------------------------------------------

def test_margin_zero_state(grid128, exp_nl):
    assert rd.pointwise_margin(grid128, exp_nl, rd.zero_state(grid128)) == 0.0


def test_margin_mid_branch(exp_nl, sp2_nl):
    for nl, lam in ((exp_nl, 10.0), (sp2_nl, 6.0)):
        margins = {}
        for M in (256, 512):
            g = rd.discretize(3, M)
            st = rd.solve_at_lambda(g, nl, lam)
            margins[M] = rd.pointwise_margin(g, nl, st)
        # the bound may dip by discretization error only
        assert margins[256] >= -10.0 * (1.0 / 256) ** 2
        assert margins[512] >= -10.0 * (1.0 / 512) ** 2


def test_diagnostics_zero_state(grid128, exp_nl):
    d = rd.diagnostics(grid128, exp_nl, rd.zero_state(grid128),
                       q_list=[1.0, 2.0], alpha=1.2)
    assert d.int_f == pytest.approx(grid128.volume, rel=1e-12)
    assert d.int_neg_lap == 0.0
    assert d.key_lhs == 0.0 and d.key_rhs == 0.0
    assert d.energy == 0.0
    assert d.lq_fprime[1.0] == pytest.approx(grid128.volume, rel=1e-12)


def test_diagnostics_validation(grid128, exp_nl):
    st = rd.zero_state(grid128)
    with pytest.raises(ValueError):
        rd.diagnostics(grid128, exp_nl, st, q_list=[1.0], alpha=0.5)
    with pytest.raises(ValueError):
        rd.diagnostics(grid128, exp_nl, st, q_list=[], alpha=1.2)


def test_key_inequality_mid_branch(grid128, exp_nl, sp2_nl):
    for nl, lam in ((exp_nl, 10.0), (sp2_nl, 6.0)):
        st = rd.solve_at_lambda(grid128, nl, lam)
        for alpha in (0.8, 1.2, 2.0):
            d = rd.diagnostics(grid128, nl, st, q_list=[1.0, 2.0], alpha=alpha)
            assert d.key_lhs <= d.key_rhs * 1.001
            assert d.theta_refinement_error < 1e-6


def test_diagnostics_mesh_consistency(exp_nl):
    vals = {}
    for M in (256, 512):
        g = rd.discretize(3, M)
        st = rd.solve_at_lambda(g, exp_nl, 10.0)
        d = rd.diagnostics(g, exp_nl, st, q_list=[1.0], alpha=1.2)
        vals[M] = (d.int_f, d.int_neg_lap, d.energy, d.key_lhs, d.key_rhs)
    for a, b in zip(vals[256], vals[512]):
        assert a == pytest.approx(b, rel=5e-4)


def test_singular_power_derivative_identity(grid128, sp2_nl):
    # f'(t) = p f(t)^((p+1)/p) pointwise, so the f' and f norm families
    # differ only by an exponent shift
    st = rd.solve_at_lambda(grid128, sp2_nl, 6.0)
    fv = np.asarray(sp2_nl.f(st.u), dtype=float)
    dfv = np.asarray(sp2_nl.df(st.u), dtype=float)
    assert np.allclose(dfv, 2.0 * fv ** 1.5, rtol=1e-12)


def test_uniformity_report(branch_exp_128, exp_nl):
    rep = rd.uniformity_report(branch_exp_128, exp_nl, alpha=1.2)
    assert rep.tau2 == 1.0
    assert rep.q1 == pytest.approx(1.2 * 1.0 + 0.5)
    assert rep.q2 == pytest.approx(1.2 + 0.5)
    assert len(rep.rows) == len(branch_exp_128.states)
    # on this coarse floor only the norm quantities have entered the
    # flat regime; i_alpha/energy flatten on acceptance-grade floors
    for name in ("q1_norm", "q2_norm", "int_neg_lap"):
        assert rep.summary[name]["bounded"] is True, name
    for name in rd.UNIFORMITY_QUANTITIES:
        assert math.isfinite(rep.summary[name]["tail_slope"])


def test_boundedness_flags_synthetic_divergence(branch_exp_128):
    lams = branch_exp_128.lambdas
    lam_star = branch_exp_128.lambda_star_estimate
    diverging = (lam_star - lams) ** -0.5
    info = rd._boundedness_summary(diverging, lams, lam_star)
    assert info["bounded"] is False
    assert info["tail_slope"] == pytest.approx(-0.5, abs=1e-6)


def test_uniformity_report_int_neglap_bounded(branch_sp2_128, sp2_nl):
    rep = rd.uniformity_report(branch_sp2_128, sp2_nl, alpha=1.2)
    info = rep.summary["int_neg_lap"]
    assert info["bounded"] is True
    assert info["anchor_ratio"] < 2.0


def test_uniformity_report_empty_branch(grid128, exp_nl):
    empty = rd.Branch(grid=grid128, nonlinearity="exp", states=(), stability=(),
                      lambda_star_estimate=math.nan,
                      lambda_star_bracket=(0.0, math.nan))
    rep = rd.uniformity_report(empty, exp_nl, alpha=1.2)
    assert rep.rows == () and rep.summary == {}


def test_solve_bvp_oracle_reproduces():
    # regenerate the frozen collocation value to guard against drift
    lam = 1.0

    def rhs(r, y):
        u, up, v, vp = y
        return np.vstack([up, -v, vp, -lam * np.exp(u)])

    S = np.zeros((4, 4))
    S[1, 1] = -2.0
    S[3, 3] = -2.0

    def bc(ya, yb):
        return np.array([ya[1], ya[3], yb[0], yb[2]])

    r = np.linspace(0.0, 1.0, 200)
    sol = solve_bvp(rhs, bc, r, np.zeros((4, r.size)), S=S, tol=1e-10)
    assert sol.status == 0
    assert sol.sol(0.0)[0] == pytest.approx(U0_BVP_ORACLE, abs=1e-9)
