"""The headline construction: unit-volume tori with huge first eigenvalue.

On the stretched torus diag(h^2, 1/h^2) with one-way drift eta*h dx, the
averaged energy picks up the factor 1/(1 + eta cos theta) on the fiber; once
the drift passes the threshold where the weak symbol direction reaches 1/r^2,
the first eigenvalue satisfies lambda_1 >= 4 pi^2 h^2 while the volume stays
1.  No reversible metric on the torus can do this: lambda_1 * vol is bounded
for them.  Sweeping h shows the growth is unbounded.
"""

import numpy as np

from fspec import (RandersMetric, SymbolField, TorusGrid, assemble,
                   randers_axis_symbol, solve, threshold_eta)

FOUR_PI2 = 4 * np.pi**2

print(" h    threshold eta      lambda_1     lambda_1*vol   vs flat torus")
for h in (1.0, 2.0, 4.0, 8.0):
    eta = threshold_eta(h, margin=1e-6)
    if eta > 0:
        spec = RandersMetric.axis_drift_torus(h, eta)
    else:
        from fspec import RiemannianMetric
        spec = RiemannianMetric.stretched(h)
    field = SymbolField.compute(spec, TorusGrid.square(64))
    lam1 = float(solve(assemble(field), 1).values[1])
    lv = lam1 * field.total_volume()
    print(f"{h:3.0f}   {eta:.12f}   {lam1:10.3f}   {lv:12.3f}   "
          f"{lv / FOUR_PI2:8.2f}x")

print("\nThe drift threshold makes the weak direction as stiff as the strong")
print("one: at threshold A = h^2 = 1/r^2 exactly, so lambda_1 = 4 pi^2 h^2.")
h = 4.0
eta = threshold_eta(h, margin=1e-6)
A, B = randers_axis_symbol(h, 1 / h, eta)
print(f"h = {h:g}: A = {A:.6f} (h^2 = {h**2:g}), B = {B:.6f}, "
      f"lambda_1 = 4 pi^2 min(A, B) = {FOUR_PI2 * min(A, B):.3f}")

print("\nBelow the threshold the drift is wasted: lambda_1 stays Riemannian-small.")
for eta in (0.0, 0.9, float(threshold_eta(2.0, margin=1e-6))):
    A, B = randers_axis_symbol(2.0, 0.5, eta)
    print(f"  h = 2, eta = {eta:.10f}: lambda_1 -> {FOUR_PI2 * min(A, B):9.3f} "
          f"(condition A >= 1/r^2: {A >= 4.0})")
