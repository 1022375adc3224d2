"""Walk through the dimension-bound machinery on the builtin catalog.

For each nonlinearity: estimate the curvature exponents tau_-/tau_+,
build the quartic, isolate its largest root, and evaluate the dimension
bound.  Then invert the map (which p gives dimension 7? 8?) and certify
the closed-form negativity claims that back the headline dimensions.

Run:  python demos/dimension_bounds.py
"""

from gelfand4 import (Kind, certify_negativity, dimension_pipeline,
                      make_builtin, threshold_solve, tau_of_threshold)

CATALOG = [
    ("exp", ()),
    ("exp_pow", (0.5,)),
    ("exp_pow", (2.0,)),
    ("power", (2.0,)),
    ("power", (3.0,)),
    ("power", (10.0,)),
    ("singular_power", (1.5,)),
    ("singular_power", (2.0,)),
    ("singular_power", (3.0,)),
]

print("Dimension bounds for the builtin catalog")
print("-" * 76)
print(f"{'family':<22}{'tau':>8}{'alpha*':>10}{'n_quartic':>11}"
      f"{'8/tau':>8}{'max_dim':>9}")
for family, params in CATALOG:
    nl = make_builtin(family, params)
    rep = dimension_pipeline(nl)
    print(f"{nl.name:<22}{rep.tau.tau_plus:>8.4f}{rep.root.alpha_star:>10.5f}"
          f"{rep.bound.n_quartic:>11.4f}{rep.bound.n_8tau:>8.3f}"
          f"{rep.bound.max_dim:>9d}")

print()
print("The exponential family tops out at dimension 12; the singular")
print("power family loses admissible dimensions as tau = (p+1)/p grows.")
print()

# Invert the singular-power map: which p first reaches dimensions 7 and 8?
p7 = threshold_solve(7, Kind.SINGULAR, "p")
p8 = threshold_solve(8, Kind.SINGULAR, "p")
print(f"dimension 7 needs p > {p7:.5f}  (tau < {tau_of_threshold(p7, Kind.SINGULAR):.5f})")
print(f"dimension 8 needs p > {p8:.5f}  (tau < {tau_of_threshold(p8, Kind.SINGULAR):.5f})")
print()

# The dimension claims rest on strict negativity of the quartic at two
# closed-form alpha(tau) choices; certify both on a fine tau grid.
for formula, lo, hi in (("A", 2.0 / 3.0, 1.0), ("B", 1.0, 1.57863)):
    cert = certify_negativity(formula, lo, hi, grid_step=1e-3)
    status = "certified" if cert.certified else "FAILED"
    print(f"formula {formula} on [{lo:.5f}, {hi:.5f}]: {status}, "
          f"worst margin {cert.margin:.4g} at tau = {cert.tau_at_worst:.5f}")
