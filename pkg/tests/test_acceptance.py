"""Acceptance suite: every headline claim at its stated tolerance.

Each criterion prints one PASS/FAIL line (visible under ``pytest -s``;
the per-test verdict carries the same information under ``-v``).  The
branch criteria share module-scoped traces at M=512/256.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from gelfand4 import bounds as bd
from gelfand4 import radial as rd
from gelfand4.cli import main
from gelfand4.nonlinearity import Kind, estimate_tau, make_builtin


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d}: FAIL - {description}", flush=True)
        raise
    print(f"ACCEPTANCE {number:2d}: PASS - {description}", flush=True)


@pytest.fixture(scope="module")
def exp_nl():
    return make_builtin("exp")


@pytest.fixture(scope="module")
def sp2_nl():
    return make_builtin("singular_power", [2.0])


@pytest.fixture(scope="module")
def grid512():
    return rd.discretize(3, 512)


@pytest.fixture(scope="module")
def grid256():
    return rd.discretize(3, 256)


@pytest.fixture(scope="module")
def branch_exp_512(grid512, exp_nl):
    return rd.trace_branch(grid512, exp_nl, lambda_step=0.05, step_floor=1e-4)


@pytest.fixture(scope="module")
def branch_exp_256(grid256, exp_nl):
    return rd.trace_branch(grid256, exp_nl, lambda_step=0.05, step_floor=1e-4)


@pytest.fixture(scope="module")
def branch_sp2_512(grid512, sp2_nl):
    return rd.trace_branch(grid512, sp2_nl, lambda_step=0.05, step_floor=1e-4)


def _margin_tolerance(nl, lam_mid, grids):
    """Calibrate C in the margin >= -C h^2 contract by mesh refinement."""
    margins = {}
    for g in grids:
        st = rd.solve_at_lambda(g, nl, lam_mid)
        margins[g.M] = rd.pointwise_margin(g, nl, st)
    (m_coarse, h_coarse), (m_fine, h_fine) = [
        (margins[g.M], g.h) for g in grids]
    c_est = (m_coarse - m_fine) / (h_coarse**2 - h_fine**2)
    return max(10.0, 5.0 * abs(c_est))


def test_01_tau_reproduction():
    with criterion(1, "tau exponents reproduce the catalog constants"):
        t0 = time.perf_counter()
        cases = [("exp", (), 1.0), ("exp_pow", (0.5,), 1.0),
                 ("exp_pow", (2.0,), 1.0)]
        cases += [("power", (p,), (p - 1) / p) for p in (1.5, 2.0, 3.0, 10.0)]
        cases += [("singular_power", (p,), (p + 1) / p) for p in (1.5, 2.0, 3.0)]
        for family, params, expected in cases:
            est = estimate_tau(make_builtin(family, params))
            assert est.converged
            assert abs(est.tau_minus - expected) <= 1e-6, (family, params)
            assert abs(est.tau_plus - expected) <= 1e-6, (family, params)
        assert time.perf_counter() - t0 < 1.0


def test_02_headline_dimensions():
    with criterion(2, "headline dimensions: exp -> 12, tau=1.57863 -> 7.000"):
        t0 = time.perf_counter()
        rep = bd.dimension_pipeline(make_builtin("exp"))
        assert rep.bound.max_dim == 12
        p_at_threshold = 1.0 / 0.57863       # (p+1)/p = 1.57863
        rep = bd.dimension_pipeline(make_builtin("singular_power",
                                                 (p_at_threshold,)))
        assert abs(rep.bound.n_quartic - 7.0) <= 0.02
        assert time.perf_counter() - t0 < 1.0


def test_03_threshold_inversions():
    with criterion(3, "threshold inversions: p*(7)=1.72822, p*(8)=2.2609"):
        t0 = time.perf_counter()
        p7 = bd.threshold_solve(7, Kind.SINGULAR, "p")
        p8 = bd.threshold_solve(8, Kind.SINGULAR, "p")
        assert abs(p7 - 1.72822) <= 5e-4
        assert abs(p8 - 2.2609) <= 5e-4
        tau7 = bd.threshold_solve(7, Kind.SINGULAR, "tau")
        assert abs(tau7 - (p7 + 1.0) / p7) <= 1e-5
        assert time.perf_counter() - t0 < 5.0


def test_04_certificates():
    with criterion(4, "negativity certificates A on [2/3,1], B on [1,1.57863]"):
        t0 = time.perf_counter()
        cert_a = bd.certify_negativity("A", 2.0 / 3.0, 1.0, grid_step=1e-3)
        assert cert_a.certified and cert_a.worst_value < 0.0
        cert_b = bd.certify_negativity("B", 1.0, 1.57863, grid_step=1e-3)
        assert cert_b.certified and cert_b.worst_value < 0.0
        assert time.perf_counter() - t0 < 1.0


def test_05_quartic_consistency():
    with criterion(5, "power/singular-power quartics match the general one"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(20260810)
        for p in 1.0 + 9.0 * rng.random(20):
            tau_r = (p - 1.0) / p
            a_gen = bd.largest_root(bd.quartic_general(tau_r, tau_r)).alpha_star
            a_pow = bd.largest_root(bd.quartic_power(p)).alpha_star
            assert abs(a_pow - a_gen) <= 1e-8
            tau_s = (p + 1.0) / p
            a_gen = bd.largest_root(bd.quartic_general(tau_s, tau_s)).alpha_star
            b_sp = max(bd.positive_roots(bd.quartic_singular_power(p)))
            assert abs(b_sp - a_gen * (p - 1.0) / (p + 1.0)) <= 1e-8
        assert time.perf_counter() - t0 < 1.0


def _oracle_largest_root(poly, step=1e-5):
    c4 = poly.c4
    fuji = 2.0 * max(abs(poly.c2 / c4) ** 0.5, abs(poly.c1 / c4) ** (1 / 3),
                     abs(poly.c0 / c4) ** 0.25)
    hi = max(fuji, 1.0) * 1.001
    xs = np.arange(1.0, hi, step)
    vs = poly.value(xs)
    neg = vs < 0
    idx = np.nonzero(neg[:-1] != neg[1:])[0]
    a, b = float(xs[idx[-1]]), float(xs[idx[-1] + 1])
    fa = poly.value(a)
    for _ in range(100):
        if b - a < 1e-13:
            break
        m = 0.5 * (a + b)
        fm = poly.value(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def test_06_root_oracle_equivalence():
    with criterion(6, "largest_root matches the dense-scan oracle on "
                      "100 random exponent pairs"):
        rng = np.random.default_rng(46214)
        for _ in range(100):
            tm = 0.05 + 1.85 * rng.random()
            tp = tm + (1.95 - tm) * rng.random()
            poly = bd.quartic_general(tm, tp)
            got = bd.largest_root(poly).alpha_star
            assert abs(got - _oracle_largest_root(poly)) <= 1e-8


def _branch_checks(grid, grid_coarse, nl, branch, floor):
    lo, hi = branch.lambda_star_bracket
    assert len(branch.states) > 0
    assert hi - lo <= 2 * floor
    assert np.all(branch.fold_indicator >= -1e-6)
    lam_mid = 0.5 * branch.lambda_star_estimate
    c_margin = _margin_tolerance(nl, lam_mid, (grid_coarse, grid))
    tol_margin = c_margin * grid.h**2
    worst_margin = math.inf
    worst_ratio = 0.0
    for st in branch.states:
        for alpha in (0.8, 1.2, 2.0):
            d = rd.diagnostics(grid, nl, st, q_list=(1.0, 2.0), alpha=alpha)
            if d.key_rhs > 0.0:
                worst_ratio = max(worst_ratio, d.key_lhs / d.key_rhs)
            else:
                assert d.key_lhs <= 1e-12
            worst_margin = min(worst_margin, d.pointwise_margin)
    assert worst_margin >= -tol_margin
    assert worst_ratio <= 1.001
    return worst_margin, worst_ratio


def test_07_branch_suite_exp(grid512, grid256, exp_nl, branch_exp_512):
    with criterion(7, "exp branch at M=512: bracket, stability, margin, "
                      "key inequality"):
        t0 = time.perf_counter()
        margin, ratio = _branch_checks(grid512, grid256, exp_nl,
                                       branch_exp_512, 1e-4)
        assert time.perf_counter() - t0 < 120.0


def test_08_branch_suite_singular(grid512, grid256, sp2_nl, branch_sp2_512):
    with criterion(8, "singular branch at M=512: same checks plus "
                      "endpoint gap and uniform integral cap"):
        t0 = time.perf_counter()
        _branch_checks(grid512, grid256, sp2_nl, branch_sp2_512, 1e-4)
        for st in branch_sp2_512.states:
            assert float(np.max(st.u)) <= 1.0 - 1e-3
        uni = rd.uniformity_report(branch_sp2_512, sp2_nl, alpha=1.2)
        info = uni.summary["int_neg_lap"]
        assert info["bounded"] is True
        assert info["anchor_ratio"] <= 2.0     # uniform cap along the branch
        assert time.perf_counter() - t0 < 120.0


def test_09_mesh_convergence(grid512, grid256, exp_nl, branch_exp_512,
                             branch_exp_256):
    with criterion(9, "lambda* and mid-branch u0 converge at the O(h^2) rate"):
        ls512 = branch_exp_512.lambda_star_estimate
        ls256 = branch_exp_256.lambda_star_estimate
        assert abs(ls512 - ls256) / ls512 <= 0.01
        lam_mid = 0.5 * ls512
        u0 = {}
        for M in (128, 256, 512):
            g = rd.discretize(3, M)
            u0[M] = rd.solve_at_lambda(g, exp_nl, lam_mid).u0
        d1 = abs(u0[128] - u0[256])
        d2 = abs(u0[256] - u0[512])
        # O(h^2) Richardson prediction: d2 = d1/4, accepted within 5x
        assert d2 <= 5.0 * (d1 / 4.0)


def test_10_determinism(tmp_path, monkeypatch):
    with criterion(10, "repeated verify runs emit byte-identical CSV bodies"):
        monkeypatch.setenv("GELFAND4_OUT", str(tmp_path))
        assert main(["verify", "--out", "r1"]) == 0
        assert main(["verify", "--out", "r2"]) == 0
        a = (tmp_path / "r1" / "verify.csv").read_bytes()
        b = (tmp_path / "r2" / "verify.csv").read_bytes()
        assert a == b and len(a) > 0
