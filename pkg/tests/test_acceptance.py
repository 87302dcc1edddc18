"""Acceptance criteria, one PASS/FAIL line each at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eulag.errors import BlowupError, FoldingError, NoConvergenceError, SolverError
from eulag.flow import VelocityHistory, advance_flow, back_to_labels, compose, jacobian, wrap
from eulag.frechet import (
    compare_linearization,
    fd_gateaux,
    flow_frechet_at_zero,
    flow_frechet_literal_1d,
    flow_functional,
    labels_frechet_at_zero,
    labels_functional,
)
from eulag.initial import make_initial
from eulag.lagrangian import PicardConfig, regularized_residual, residual_F, solve
from eulag.reference import EulerState, momentum_residual, rk4_solve
from eulag.spectral import heat_smooth, make_grid, mean, rel_l2, smoothing_gap
from eulag.thermo import gamma_law

LAW = gamma_law(1.0, 1.4)


class Criterion:
    """Collects sub-checks and emits a single PASS/FAIL line."""

    def __init__(self, number, title):
        self.number, self.title, self.checks = number, title, []

    def check(self, label, value, tol, op="<="):
        ok = {"<=": value <= tol, ">=": value >= tol, "<": value < tol}[op] if np.isfinite(value) else False
        self.checks.append((label, value, tol, op, bool(ok)))
        return ok

    def within(self, label, value, centre, halfwidth):
        ok = bool(np.isfinite(value) and abs(value - centre) <= halfwidth)
        self.checks.append((label, value, f"{centre}±{halfwidth}", "in", ok))
        return ok

    def flag(self, label, ok):
        self.checks.append((label, None, None, None, bool(ok)))
        return ok

    def finish(self):
        ok = all(c[-1] for c in self.checks)
        parts = []
        for label, value, tol, op, good in self.checks:
            mark = "" if good else " [FAIL]"
            if value is None:
                parts.append(f"{label}{mark}")
            else:
                tol_s = tol if isinstance(tol, str) else f"{tol:g}"
                parts.append(f"{label} {value:.3g} {op} {tol_s}{mark}")
        line = f"{'PASS' if ok else 'FAIL'} [{self.number}] {self.title}: " + "; ".join(parts)
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line


def _x(g):
    return g.nodes[0]


def _smooth(g):
    return 1 + 0.2 * np.sin(_x(g)), (0.1 * np.sin(_x(g)))[None]


def _broadband(g, r=0.35):
    x = _x(g)
    p = r * np.sin(x) / (1 - 2 * r * np.cos(x) + r * r)
    return 1 + 0.2 * p, (0.1 * p)[None]


def _sweep_slope(fn, base, w, deltas, ref_delta):
    # error against a Richardson-extrapolated central difference
    ref = (4 * fd_gateaux(fn, base, w, ref_delta / 2) - fd_gateaux(fn, base, w, ref_delta)) / 3
    errs = [np.linalg.norm(fd_gateaux(fn, base, w, d) - ref) / np.linalg.norm(ref) for d in deltas]
    return float(np.polyfit(np.log(deltas), np.log(errs), 1)[0])


def test_criterion_1_base_point_identity():
    c = Criterion(1, "base-point identity F(0, u0) = 0, n=128")
    g = make_grid(1, 128)
    for preset in ("constant", "translation", "smooth", "acoustic", "steep"):
        rho0, u0 = make_initial(g, preset)
        F = residual_F(0.0, VelocityHistory.steady(g, u0), rho0, u0, LAW)
        c.check(f"{preset} max|F|", float(np.max(np.abs(F))), 1e-12)
    c.finish()


def test_criterion_2_derivative_identity():
    c = Criterion(2, "Gateaux derivative of F at the base point")
    g = make_grid(1, 128)
    x = _x(g)
    rho0, u0 = _smooth(g)
    eps = 1e-2
    directions = {"sin x": np.sin(x)[None], "cos 2x": np.cos(2 * x)[None], "0.5+cos 3x": (0.5 + np.cos(3 * x))[None]}

    def F(t, dt=None):
        return lambda u: residual_F(t, VelocityHistory.steady(g, u), rho0, u0, LAW, dt=dt)

    def Fe(t, dt=None):
        return lambda u: regularized_residual(t, VelocityHistory.steady(g, u), rho0, u0, LAW, eps, dt=dt)

    t_star, dt = 1e-2, 1e-3
    for name, w in directions.items():
        plain = compare_linearization(w, fd_gateaux(F(0.0), u0, w, 1e-4), 1e-4).rel_error_l2
        smooth = compare_linearization(heat_smooth(w, g, eps), fd_gateaux(Fe(0.0), u0, w, 1e-4), 1e-4).rel_error_l2
        c.check(f"{name}: DF[w] vs w", plain, 1e-3)
        c.check(f"DF^eps[w] vs S^eps w", smooth, 1e-3)
        # at t = 0 F is affine in u, so the delta^2 slope is measured at a small positive time
        c.within("slope F", _sweep_slope(F(t_star, dt), u0, w, [1e-1, 3e-2, 1e-2], 1e-2), 2.0, 0.2)
        c.within("slope F^eps", _sweep_slope(Fe(t_star, dt), u0, w, [1e-1, 3e-2, 1e-2], 1e-2), 2.0, 0.2)
    c.finish()


@pytest.mark.slow
def test_criterion_3_frechet_formulas():
    c = Criterion(3, "Frechet derivatives of X_t and A_t, 1D battery, delta=1e-4")
    g = make_grid(1, 64)
    x = _x(g)
    bases = {"0": np.zeros((1, 64)), "sin": np.sin(x)[None], "sin+0.3cos2x": (np.sin(x) + 0.3 * np.cos(2 * x))[None]}
    dirs = {"1": np.ones((1, 64)), "cos": np.cos(x)[None]}
    dt = 1e-3
    worst_x = worst_a = worst_lit = 0.0
    for u0 in bases.values():
        for w in dirs.values():
            for t in (0.1, 0.3):
                mx = flow_frechet_at_zero(u0, w, t, g, dt)
                ma = labels_frechet_at_zero(u0, w, t, g, dt)
                fx = fd_gateaux(flow_functional(g, t, dt), u0, w, 1e-4)
                fa = fd_gateaux(labels_functional(g, t, dt), u0, w, 1e-4)
                worst_x = max(worst_x, compare_linearization(mx, fx, 1e-4).rel_error_l2)
                worst_a = max(worst_a, compare_linearization(ma, fa, 1e-4).rel_error_l2)
                lit = flow_frechet_literal_1d(u0, w, t, g, dt)
                worst_lit = max(worst_lit, compare_linearization(mx, lit, 0.0).rel_error_l2)
    c.check("max rel err flow", worst_x, 1e-4)
    c.check("max rel err labels", worst_a, 1e-4)
    c.check("max literal-exponential gap", worst_lit, 1e-7)
    c.finish()


def test_criterion_4_inverse_map_identity():
    c = Criterion(4, "A_t o X_t = id, n=128, dt=1e-3, t=0.5, u=sin x")
    g = make_grid(1, 128)
    hist = VelocityHistory.steady(g, np.sin(_x(g))[None])
    X = advance_flow(hist, 0.0, 0.5, g, 1e-3)
    A = back_to_labels(hist, 0.5, g, 1e-3)
    err = float(np.max(np.abs(wrap(X.positions + compose(A.displacement, X) - g.nodes))))
    c.check("max node error", err, 1e-6)
    c.finish()


@pytest.fixture(scope="module")
def standard_runs():
    g = make_grid(1, 256)
    rho0, u0 = _smooth(g)
    lag = solve(g, rho0, u0, LAW, 0.2, PicardConfig(dt=1e-3, stride=1))
    ref = rk4_solve(EulerState(0.0, rho0, u0), LAW, g, 0.2, 1e-3)
    return g, lag, ref


@pytest.mark.slow
def test_criterion_5_formulation_equivalence(standard_runs):
    c = Criterion(5, "Lagrangian vs reference, n=256, T=0.2, dt=1e-3")
    g, lag, ref = standard_runs
    snaps = range(0, len(ref), 20)
    c.check("max rel L2 rho", max(rel_l2(lag.states[i].rho, ref[i].rho) for i in snaps), 1e-3)
    c.check("max rel L2 u", max(rel_l2(lag.states[i].u, ref[i].u) for i in snaps), 1e-3)
    s = lag.states
    worst = 0.0
    for form in ("conservative", "primitive"):
        r = np.stack([momentum_residual(s[i - 1], s[i], s[i + 1], LAW, g, form) for i in range(1, len(s) - 1)])
        worst = max(worst, float(np.sqrt(np.mean(r**2))))
    c.check("momentum residual (L2)", worst, 1e-3)
    c.finish()


@pytest.mark.slow
def test_criterion_6_conservation(standard_runs):
    c = Criterion(6, "conservation")
    g, lag, ref = standard_runs
    m0 = mean(lag.states[0].rho, g)
    c.check("mass drift lagrangian", max(abs(mean(s.rho, g) - m0) / m0 for s in lag.states), 1e-8)
    c.check("mass drift reference", max(abs(mean(s.rho, g) - m0) / m0 for s in ref), 1e-8)
    g2 = make_grid(2, 64)
    x, y = g2.nodes
    u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    A = back_to_labels(VelocityHistory.steady(g2, u), 0.5, g2, 1e-2)
    c.check("2D div-free |JA-1|", float(np.max(np.abs(jacobian(A) - 1))), 1e-6)
    c.finish()


@pytest.mark.slow
def test_criterion_7_regularization():
    c = Criterion(7, "regularization")
    gaps = []
    for d, n in ((1, 64), (1, 128), (1, 256), (2, 32), (2, 64)):
        g = make_grid(d, n)
        for eps in (1e-6, 1e-4, PicardConfig().eps_for(g)):
            gaps.append(smoothing_gap(2.0, eps, g))
    c.check("max smoothing gap", max(gaps), 1.0, "<")
    g = make_grid(1, 128)
    rho0, u0 = _smooth(g)
    finals = {eps: solve(g, rho0, u0, LAW, 0.1, PicardConfig(dt=1e-3, epsilon=eps, stride=100)).states[-1] for eps in (0.0, 1e-6, 1e-4)}
    drift = max(max(rel_l2(finals[e].u, finals[0.0].u), rel_l2(finals[e].rho, finals[0.0].rho)) for e in (1e-6, 1e-4))
    c.check("drift across eps", drift, 1e-4)
    c.finish()


def _self_errors(run, data):
    fine = run(512, data)
    errs = []
    for n in (64, 128):
        rho, u = run(n, data)
        step = 512 // n
        errs.append(max(rel_l2(rho, fine[0][::step]), rel_l2(u, fine[1][:, ::step])))
    return errs


def _lag_final(n, data):
    g = make_grid(1, n)
    s = solve(g, *data(g), LAW, 0.1, PicardConfig(dt=1e-3, stride=1000)).states[-1]
    return s.rho, s.u


def _ref_final(n, data):
    g = make_grid(1, n)
    s = rk4_solve(EulerState(0.0, *data(g)), LAW, g, 0.1, 1e-3, stride=1000)[-1]
    return s.rho, s.u


@pytest.mark.slow
def test_criterion_8_self_convergence():
    c = Criterion(8, "self-convergence (smooth case, T=0.1, vs n=512)")
    for name, run in (("reference", _ref_final), ("lagrangian", _lag_final)):
        e64, e128 = _self_errors(run, _smooth)
        c.check(f"{name} e64/e128 (e64 {e64:.2g}, e128 {e128:.2g})", e64 / max(e128, 1e-300), 10.0, ">=")
    g = make_grid(1, 64)
    rho0, u0 = _smooth(g)
    finals = [rk4_solve(EulerState(0.0, rho0, u0), LAW, g, 0.96, dt, stride=10**6)[-1].u for dt in (0.032, 0.016, 0.008, 0.004)]
    diffs = [rel_l2(finals[i], finals[i + 1]) for i in range(3)]
    for i in range(2):
        c.within(f"reference time order dt={(0.032, 0.016)[i]}", float(np.log2(diffs[i] / diffs[i + 1])), 4.0, 0.5)
    # supplementary: broadband data whose spectrum is not resolved to round-off at n=64
    for name, run in (("reference", _ref_final), ("lagrangian", _lag_final)):
        e64, e128 = _self_errors(run, _broadband)
        info = f"INFO [8] broadband profile {name}: e64 {e64:.3g}, e128 {e128:.3g}, ratio {e64 / e128:.3g}"
        ACCEPTANCE_LINES.append(info)
        print(info)
    c.finish()


@pytest.mark.slow
def test_criterion_9_failure_honesty():
    c = Criterion(9, "steep data fails loudly in both solvers")
    g = make_grid(1, 128)
    rho0, u0 = 1 + 0.9 * np.sin(_x(g)), np.zeros((1, 128))
    expected = (BlowupError, NoConvergenceError, FoldingError)
    for name in ("reference", "lagrangian"):
        try:
            if name == "reference":
                rk4_solve(EulerState(0.0, rho0, u0), LAW, g, 1.0, 2e-3, stride=25)
            else:
                solve(g, rho0, u0, LAW, 1.0, PicardConfig(dt=2e-3, stride=25))
        except SolverError as err:
            states = err.partial if name == "reference" else err.partial.states
            finite = all(np.all(np.isfinite(s.rho)) and np.all(np.isfinite(s.u)) for s in states)
            c.flag(f"{name}: {err.kind} at t={err.t:.3g}, output finite", isinstance(err, expected) and finite)
        else:
            c.flag(f"{name}: finished without error", False)
    c.finish()
