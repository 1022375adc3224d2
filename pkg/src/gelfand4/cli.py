"""Command-line front end.

Subcommands: ``tau``, ``bounds``, ``certify``, ``threshold``, ``solve``,
``sweep``, ``verify``.  Flags mirror config keys; ``--config FILE``
loads a document and flags override it.  Every run writes its result
files plus ``manifest.json`` into the output directory; the exit status
is 0 iff every required check passed.  The environment variable
``GELFAND4_OUT`` relocates the output root (and nothing else).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bounds as bd
from . import radial as rd
from .config import (RunConfig, build_run_config, parse_config_text,
                     resolve_out_dir)
from .errors import ConfigError, GelfandError
from .manifest import RunManifest, version_string, write_csv, write_json
from .nonlinearity import (Kind, estimate_tau, make_builtin,
                           nonlinearity_from_config)

SWEEP_HEADER = ("lambda", "u0", "mu_min", "margin_lemma21", "int_f",
                "int_neglap", "energy", "key_ineq_lhs", "key_ineq_rhs",
                "I_alpha", "alpha")

# verify battery targets: catalog tau values and the headline dimensions
_TAU_CASES = (
    ("exp", (), 1.0),
    ("exp_pow", (0.5,), 1.0),
    ("exp_pow", (2.0,), 1.0),
    ("power", (1.5,), 1.0 / 3.0),
    ("power", (2.0,), 0.5),
    ("power", (3.0,), 2.0 / 3.0),
    ("power", (10.0,), 0.9),
    ("singular_power", (1.5,), 5.0 / 3.0),
    ("singular_power", (2.0,), 1.5),
    ("singular_power", (3.0,), 4.0 / 3.0),
)
_P_STAR_DIM7 = 1.72822
_P_STAR_DIM8 = 2.2609


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelfand4",
        description="Dimension bounds and radial minimal-branch tracing "
                    "for the fourth-order Gelfand problem.")
    sub = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config document; flags override")
    common.add_argument("--out", type=str, help="output directory")
    family = argparse.ArgumentParser(add_help=False)
    family.add_argument("--family", type=str)
    family.add_argument("--p", type=float, help="family parameter")
    family.add_argument("--f", type=str, help="custom family: f(t) expression")
    family.add_argument("--f1", type=str, help="custom family: f'(t) expression")
    family.add_argument("--f2", type=str, help="custom family: f''(t) expression")
    family.add_argument("--a-f", dest="a_f", type=str,
                        help="custom family: domain endpoint (number or 'inf')")

    sub.add_parser("tau", parents=[common, family],
                   help="estimate curvature exponents")
    sub.add_parser("bounds", parents=[common, family],
                   help="quartic root and dimension bound")

    cert = sub.add_parser("certify", parents=[common],
                          help="negativity certificate on a tau grid")
    cert.add_argument("--formula", choices=("A", "B"))
    cert.add_argument("--tau-lo", dest="tau_lo", type=float)
    cert.add_argument("--tau-hi", dest="tau_hi", type=float)
    cert.add_argument("--step", dest="grid_step", type=float,
                      help="certificate grid step")

    thr = sub.add_parser("threshold", parents=[common],
                         help="invert the dimension bound for a target dimension")
    thr.add_argument("--dim", type=int)
    thr.add_argument("--kind", choices=("regular", "singular"))
    thr.add_argument("--scan", choices=("p", "tau"))

    solve = sub.add_parser("solve", parents=[common, family],
                           help="solve the radial system at one lambda")
    solve.add_argument("--n", type=int)
    solve.add_argument("--M", type=int)
    solve.add_argument("--lambda", dest="lam", type=float)

    sweep = sub.add_parser("sweep", parents=[common, family],
                           help="trace the minimal branch and emit diagnostics")
    sweep.add_argument("--n", type=int)
    sweep.add_argument("--M", type=int)
    sweep.add_argument("--step", type=float)
    sweep.add_argument("--floor", type=float)
    sweep.add_argument("--alphas", type=str, help="comma-separated alpha list")
    sweep.add_argument("--q", type=str, help="comma-separated q list")

    verify = sub.add_parser("verify", parents=[common, family],
                            help="reproduce the headline claims in one run")
    verify.add_argument("--full", action="store_true",
                        help="include the M=512 branch suites (minutes)")
    return parser


def _args_to_mapping(args) -> dict:
    mapping = {}
    skip = {"config", "command"}
    for key, value in vars(args).items():
        if key in skip or value is None or value is False:
            continue
        if key == "lam":
            mapping["lambda"] = value
        elif key == "q_list":
            mapping["q"] = value
        elif key in ("alphas", "q") and isinstance(value, str):
            mapping[key] = [float(x) for x in value.split(",") if x.strip()]
        else:
            mapping[key] = value
    return mapping


def load_run_config(args) -> RunConfig:
    mapping = {}
    if getattr(args, "config", None):
        mapping.update(parse_config_text(Path(args.config).read_text()))
    mapping.update(_args_to_mapping(args))
    if args.command:
        mapping["command"] = args.command
    return build_run_config(mapping)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    try:
        config = load_run_config(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        man = run(config)
    except GelfandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for op in man.operations:
        flag = "PASS" if op["status"] == "ok" else "FAIL"
        req = "" if op["required"] else " (informational)"
        print(f"[{flag}] {op['name']}{req}: {op['detail']}")
    print(f"wrote {len(man.outputs)} file(s) under {resolve_out_dir(config.out)}")
    return 0 if man.passed else 1


def run(config: RunConfig) -> RunManifest:
    """Dispatch a validated config, write artifacts, return the manifest."""
    out_dir = resolve_out_dir(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    man = RunManifest(command=config.command, config=config.as_dict(),
                      version=version_string())
    t0 = time.perf_counter()
    runner = {
        "tau": _run_tau,
        "bounds": _run_bounds,
        "certify": _run_certify,
        "threshold": _run_threshold,
        "solve": _run_solve,
        "sweep": _run_sweep,
        "verify": _run_verify,
    }[config.command]
    runner(config, out_dir, man)
    man.wall_time_s = time.perf_counter() - t0
    man.write(out_dir / "manifest.json")
    return man


def _nl(config):
    return nonlinearity_from_config(config.nonlinearity)


def _run_tau(config, out_dir, man):
    nl = _nl(config)
    est = estimate_tau(nl)
    path = write_json(out_dir / "tau.json", {"family": nl.name, **est.as_dict()})
    man.attach(path)
    man.record("tau_estimate", est.converged,
               f"tau=[{est.tau_minus:.8g}, {est.tau_plus:.8g}] for {nl.name}")


def _run_bounds(config, out_dir, man):
    nl = _nl(config)
    rep = bd.dimension_pipeline(nl)
    payload = rep.as_dict()
    payload["certificate"] = None
    path = write_json(out_dir / "bounds.json", payload)
    man.attach(path)
    man.record("dimension_bound", True,
               f"{nl.name}: alpha*={rep.root.alpha_star:.8g} "
               f"max_dim={rep.bound.max_dim}")


def _run_certify(config, out_dir, man):
    cert = bd.certify_negativity(config.formula, config.tau_lo, config.tau_hi,
                                 grid_step=config.grid_step)
    path = write_json(out_dir / "certificate.json", cert.as_dict())
    man.attach(path)
    taus = np.linspace(config.tau_lo, config.tau_hi,
                       int(round((config.tau_hi - config.tau_lo) / config.grid_step)) + 1)
    alphas = bd.CERTIFICATE_FORMULAS[config.formula](taus)
    vals = bd._certificate_values(config.formula, taus)
    grid_path = write_csv(out_dir / "certificate_grid.csv",
                          ("tau", "alpha", "value"),
                          zip(taus, alphas, vals))
    man.attach(grid_path)
    man.record("certificate", cert.certified,
               f"formula {cert.formula} on [{cert.tau_lo:.6g}, {cert.tau_hi:.6g}]: "
               f"margin {cert.margin:.6g} at tau={cert.tau_at_worst:.6g}")


def _run_threshold(config, out_dir, man):
    kind = Kind.REGULAR if config.kind == "regular" else Kind.SINGULAR
    critical = bd.threshold_solve(config.dim, kind, config.scan)
    tau_c = bd.tau_of_threshold(critical, kind, config.scan)
    poly = bd.quartic_general(tau_c, tau_c)
    alpha = bd.largest_root(poly).alpha_star
    n_at = bd.dimension_bound(alpha, tau_c, kind).n_quartic
    path = write_json(out_dir / "threshold.json", {
        "target_dim": config.dim, "kind": config.kind, "scan": config.scan,
        "critical": critical, "tau_at_critical": tau_c, "n_at_critical": n_at,
    })
    man.attach(path)
    man.record("threshold", abs(n_at - config.dim) < 1e-3,
               f"dim {config.dim} ({config.kind}, scan {config.scan}): "
               f"critical={critical:.8g}, tau={tau_c:.8g}")


def _run_solve(config, out_dir, man):
    nl = _nl(config)
    grid = rd.discretize(config.n, config.M)
    state = rd.solve_at_lambda(grid, nl, config.lam)
    stab = rd.stability_eigenvalue(grid, nl, state) if config.lam > 0 else None
    margin = rd.pointwise_margin(grid, nl, state)
    profile = write_csv(out_dir / "profile.csv", ("r", "u", "v"),
                        zip(grid.r, state.u, state.v))
    man.attach(profile)
    summary = {
        "family": nl.name, "n": config.n, "M": config.M, "lambda": config.lam,
        "u0": state.u0, "v0": float(state.v[0]), "residual": state.residual,
        "newton_iters": state.newton_iters, "picard_iters": state.picard_iters,
        "mu_min": stab.mu_min if stab else None,
        "margin_lemma21": margin,
    }
    path = write_json(out_dir / "solve.json", summary)
    man.attach(path)
    ok = stab is None or stab.mu_min >= -1e-6
    man.record("solve", ok,
               f"lambda={config.lam}: u0={state.u0:.8g}, "
               f"mu_min={stab.mu_min if stab else float('nan'):.6g}")


def _sweep_rows(grid, nl, branch, alphas, q_list):
    for st, rep in zip(branch.states, branch.stability):
        for a in alphas:
            d = rd.diagnostics(grid, nl, st, q_list=q_list, alpha=a)
            yield (st.lam, st.u0, rep.mu_min, d.pointwise_margin, d.int_f,
                   d.int_neg_lap, d.energy, d.key_lhs, d.key_rhs, d.key_lhs, a)


def _run_sweep(config, out_dir, man):
    nl = _nl(config)
    grid = rd.discretize(config.n, config.M)
    branch = rd.trace_branch(grid, nl, lambda_step=config.step,
                             step_floor=config.floor)
    csv_path = write_csv(out_dir / "branch.csv", SWEEP_HEADER,
                         _sweep_rows(grid, nl, branch, config.alphas,
                                     config.q_list))
    man.attach(csv_path)
    uni = rd.uniformity_report(branch, nl, alpha=config.alphas[0])
    summary = {
        "family": nl.name, "n": config.n, "M": config.M,
        "step": config.step, "floor": config.floor,
        "alphas": list(config.alphas), "q": list(config.q_list),
        "n_states": len(branch.states),
        "lambda_star_estimate": branch.lambda_star_estimate,
        "lambda_star_bracket": list(branch.lambda_star_bracket),
        "uniformity": uni.summary,
        "tolerances": {"newton": 1e-10, "stability": 1e-9, "stab_accept": 1e-6},
    }
    path = write_json(out_dir / "sweep.json", summary)
    man.attach(path)
    width = branch.lambda_star_bracket[1] - branch.lambda_star_bracket[0]
    ok = bool(len(branch.states) > 0 and width <= 2 * config.floor)
    man.record("sweep", ok,
               f"{nl.name}: {len(branch.states)} states, "
               f"lambda*~{branch.lambda_star_estimate:.6g} "
               f"(bracket width {width:.3g})")


def _run_verify(config, out_dir, man):
    rows = []

    def check(name, value, expected, tol, required=True, note=""):
        ok = bool(abs(value - expected) <= tol)
        rows.append((name, value, expected, tol, ok, note))
        man.record(name, ok, f"value={value!r} expected={expected!r} tol={tol!r}",
                   required=required)
        return ok

    for family, params, want in _TAU_CASES:
        nl = make_builtin(family, params)
        est = estimate_tau(nl)
        check(f"tau[{nl.name}]", est.tau_plus, want, 1e-6)
        check(f"tau_spread[{nl.name}]", est.tau_plus - est.tau_minus, 0.0, 1e-6)

    rep = bd.dimension_pipeline(make_builtin("exp"))
    check("max_dim[exp]", rep.bound.max_dim, 12, 0)
    p_at_tau = 1.0 / 0.57863
    rep2 = bd.dimension_pipeline(make_builtin("singular_power", (p_at_tau,)))
    check("n_quartic[singular_power@tau1.57863]", rep2.bound.n_quartic, 7.0, 0.02)

    p7 = bd.threshold_solve(7, Kind.SINGULAR, "p")
    p8 = bd.threshold_solve(8, Kind.SINGULAR, "p")
    check("threshold_p[dim7]", p7, _P_STAR_DIM7, 5e-4)
    check("threshold_p[dim8]", p8, _P_STAR_DIM8, 5e-4)
    tau7 = bd.threshold_solve(7, Kind.SINGULAR, "tau")
    check("threshold_consistency", tau7, (p7 + 1.0) / p7, 1e-5)

    certA = bd.certify_negativity("A", 2.0 / 3.0, 1.0, grid_step=1e-3)
    certB = bd.certify_negativity("B", 1.0, 1.57863, grid_step=1e-3)
    certB_aux = bd.certify_negativity("B", 2.0 / 3.0, 1.0, grid_step=1e-3)
    rows.append(("certify_A[2/3,1]", certA.margin, math.nan, math.nan,
                 certA.certified, f"worst at tau={certA.tau_at_worst:.6g}"))
    man.record("certify_A[2/3,1]", certA.certified, f"margin={certA.margin:.6g}")
    rows.append(("certify_B[1,1.57863]", certB.margin, math.nan, math.nan,
                 certB.certified, f"worst at tau={certB.tau_at_worst:.6g}"))
    man.record("certify_B[1,1.57863]", certB.certified, f"margin={certB.margin:.6g}")
    rows.append(("certify_B[2/3,1]", certB_aux.margin, math.nan, math.nan,
                 certB_aux.certified, "companion interval, informational"))
    man.record("certify_B[2/3,1]", certB_aux.certified,
               f"margin={certB_aux.margin:.6g}", required=False)

    rng = np.random.default_rng(20260810)
    worst = 0.0
    for p in 1.0 + 9.0 * rng.random(20):
        tau_r = (p - 1.0) / p
        a_gen = bd.largest_root(bd.quartic_general(tau_r, tau_r)).alpha_star
        a_pow = bd.largest_root(bd.quartic_power(p)).alpha_star
        worst = max(worst, abs(a_gen - a_pow))
        tau_s = (p + 1.0) / p
        a_gen_s = bd.largest_root(bd.quartic_general(tau_s, tau_s)).alpha_star
        # the singular-power quartic's largest root can sit below 1
        b_sp = max(bd.positive_roots(bd.quartic_singular_power(p)))
        worst = max(worst, abs(b_sp - a_gen_s * (p - 1.0) / (p + 1.0)))
    check("quartic_consistency[20 random p]", worst, 0.0, 1e-8)

    if config.nonlinearity.get("family", "exp") != "exp":
        nl = _nl(config)
        rep3 = bd.dimension_pipeline(nl)
        rows.append((f"max_dim[{nl.name}]", rep3.bound.max_dim, math.nan,
                     math.nan, True, "requested family, informational"))
        man.record(f"max_dim[{nl.name}]", True,
                   f"max_dim={rep3.bound.max_dim}", required=False)

    if config.full:
        _verify_branches(config, out_dir, man, rows)

    path = write_csv(out_dir / "verify.csv",
                     ("check", "value", "expected", "tol", "passed", "note"),
                     rows)
    man.attach(path)


def _verify_branches(config, out_dir, man, rows):
    for family, params, cap_u in (("exp", (), None),
                                  ("singular_power", (2.0,), 1.0 - 1e-3)):
        nl = make_builtin(family, params)
        grid = rd.discretize(3, 512)
        branch = rd.trace_branch(grid, nl, lambda_step=config.step,
                                 step_floor=config.floor)
        width = branch.lambda_star_bracket[1] - branch.lambda_star_bracket[0]
        ok_bracket = bool(len(branch.states) > 0 and width <= 2 * config.floor)
        mu_ok = bool(np.all(branch.fold_indicator >= -1e-6))
        h2 = grid.h**2
        worst_ratio, worst_margin = 0.0, math.inf
        for st in branch.states:
            for a in (0.8, 1.2, 2.0):
                d = rd.diagnostics(grid, nl, st, q_list=config.q_list, alpha=a)
                if d.key_rhs > 0:
                    worst_ratio = max(worst_ratio, d.key_lhs / d.key_rhs)
                worst_margin = min(worst_margin, d.pointwise_margin)
        name = f"branch[{nl.name}]"
        checks = {
            "bracket": ok_bracket,
            "stability": mu_ok,
            "margin": worst_margin >= -10.0 * h2,
            "key_inequality": worst_ratio <= 1.001,
        }
        if cap_u is not None:
            checks["max_u"] = bool(max(float(st.u.max())
                                       for st in branch.states) <= cap_u)
            uni = rd.uniformity_report(branch, nl)
            checks["int_neglap_bounded"] = bool(
                uni.summary["int_neg_lap"]["bounded"])
        ok = all(checks.values())
        detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}"
                           for k, v in checks.items())
        rows.append((name, worst_ratio, math.nan, 1.001, ok, detail))
        man.record(name, ok, detail)
        csv_path = write_csv(out_dir / f"branch_{family}.csv", SWEEP_HEADER,
                             _sweep_rows(grid, nl, branch, (0.8, 1.2, 2.0),
                                         config.q_list))
        man.attach(csv_path)


if __name__ == "__main__":
    sys.exit(main())
