# %% [markdown]
# # Derivative of the flow with respect to the velocity
#
# For a steady field $u_0$ perturbed to $u_0 + \delta w$, the derivative
# $M = \partial_\delta X_t$ solves $\dot M = \nabla u_0(X) M + w(X)$,
# $M(0) = 0$. Central differences of the flow converge to it at rate
# $\delta^2$ until round-off takes over.

# %%
import numpy as np

from eulag import make_grid
from eulag.frechet import (
    delta_sweep,
    flow_frechet_at_zero,
    flow_frechet_literal_1d,
    flow_functional,
    labels_frechet_at_zero,
    labels_functional,
)

grid = make_grid(1, 64)
x = grid.nodes[0]
u0, w, t, dt = np.sin(x)[None], np.cos(x)[None], 0.3, 1e-3

for name, analytic, functional in (
    ("flow X_t", flow_frechet_at_zero, flow_functional),
    ("labels A_t", labels_frechet_at_zero, labels_functional),
):
    ref = analytic(u0, w, t, grid, dt)
    errors, slope = delta_sweep(functional(grid, t, dt), u0, w, ref, deltas=(1e-1, 3e-2, 1e-2, 3e-3))
    print(f"{name:11s} errors {np.array2string(errors, precision=2)}  slope {slope:.3f}")

# %% [markdown]
# The label $a = 0$ is fixed by $\sin x$ with $u_0'(0) = 1$, so
# $M(0) = e^t - 1$ there. The product
# $\exp(\int u_0'(X_s)\,ds)\int w(X_s)\,ds$ gives $t e^t$ instead: it is not
# a solution of the variational equation unless $u_0' \equiv 0$ along the path.

# %%
m = flow_frechet_at_zero(u0, w, t, grid, dt)[0, 0]
lit = flow_frechet_literal_1d(u0, w, t, grid, dt)[0, 0]
print(f"variational {m:.12f}   exact {np.expm1(t):.12f}   product form {lit:.12f}")
