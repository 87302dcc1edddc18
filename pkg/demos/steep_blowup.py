# %% [markdown]
# # Refusing to certify a shock
#
# $\rho_0 = 1 + 0.9\sin x$ at rest steepens into a shock. Both solvers stop
# with an explicit error before the state loses resolution, and the states
# produced so far stay finite.

# %%
import numpy as np

from eulag import EulerState, PicardConfig, SolverError, gamma_law, make_grid, rk4_solve, solve

grid = make_grid(1, 128)
x = grid.nodes[0]
law = gamma_law()
rho0, u0 = 1 + 0.9 * np.sin(x), np.zeros((1, 128))

for name in ("reference", "lagrangian"):
    try:
        if name == "reference":
            rk4_solve(EulerState(0.0, rho0, u0), law, grid, 1.0, 2e-3, stride=25)
        else:
            solve(grid, rho0, u0, law, 1.0, PicardConfig(dt=2e-3, stride=25))
        print(f"{name}: no error (unexpected)")
    except SolverError as err:
        states = err.partial if name == "reference" else err.partial.states
        last = states[-1]
        print(f"{name:10s} {err.kind} at t={err.t:.3f}: {err}")
        print(f"{'':10s} last kept state t={last.t:.3f}, max|u|={np.max(np.abs(last.u)):.3f}, finite={np.all(np.isfinite(last.u))}")
