import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from eulag.errors import FoldingError
from eulag.flow import (
    FOLD_TOL,
    FlowMap,
    VelocityHistory,
    advance_flow,
    back_to_labels,
    compose,
    compose_maps,
    grad_map,
    identity_map,
    jacobian,
    pushforward_covector,
    trace,
    translation_map,
    wrap,
)
from eulag.spectral import make_grid


def sin_flow(a, t):
    """Closed-form flow of dX/dt = sin X, branch-consistent on (-pi, pi]."""
    return 2 * np.arctan(np.exp(t) * np.tan(wrap(a) / 2))


@pytest.fixture(scope="module")
def g128():
    return make_grid(1, 128)


@pytest.fixture(scope="module")
def sin_hist(g128):
    return VelocityHistory.steady(g128, np.sin(g128.nodes))


class TestWrap:
    @settings(max_examples=50)
    @given(st.floats(-1e3, 1e3))
    def test_range_and_congruence(self, x):
        w = float(wrap(x))
        assert -np.pi < w <= np.pi
        assert np.isclose(np.cos(w), np.cos(x), atol=1e-9) and np.isclose(np.sin(w), np.sin(x), atol=1e-9)

    def test_pi_maps_to_pi(self):
        assert wrap(np.pi) == np.pi
        assert wrap(-np.pi) == np.pi


class TestVelocityHistory:
    def test_rejects_unsorted(self, g128):
        with pytest.raises(ValueError, match="increasing"):
            VelocityHistory(g128, [0.0, 0.0], np.zeros((2, 1, 128)))

    def test_rejects_nonfinite(self, g128):
        u = np.zeros((1, 1, 128))
        u[0, 0, 5] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            VelocityHistory(g128, [0.0], u)

    def test_linear_in_time(self, g128):
        h = VelocityHistory(g128, [0.0, 2.0], np.stack([np.zeros((1, 128)), np.ones((1, 128))]))
        np.testing.assert_allclose(h.field_at(0.5), 0.25)
        assert h.covers(0.0, 2.0) and not h.covers(0.0, 2.5)

    def test_trace_outside_history(self, g128):
        h = VelocityHistory(g128, [0.0, 1.0], np.zeros((2, 1, 128)))
        with pytest.raises(ValueError, match="cover"):
            trace(h, g128.nodes, 0.0, 2.0, 0.1)


class TestAdvanceFlow:
    def test_zero_velocity(self, g128):
        m = advance_flow(VelocityHistory.steady(g128, np.zeros((1, 128))), 0.0, 1.0, g128, 0.1)
        assert m.is_identity

    @pytest.mark.parametrize("c", [0.3, -2.0, 7.0])
    def test_constant_translation(self, g128, c):
        m = advance_flow(VelocityHistory.steady(g128, np.full((1, 128), c)), 0.0, 1.5, g128, 0.01)
        np.testing.assert_allclose(m.displacement, wrap(c * 1.5), atol=1e-12)

    def test_sin_flow_closed_form(self, g128, sin_hist):
        m = advance_flow(sin_hist, 0.0, 0.5, g128, 1e-3)
        exact = wrap(sin_flow(g128.nodes[0], 0.5) - g128.nodes[0])
        assert np.max(np.abs(wrap(m.displacement[0] - exact))) <= 1e-8

    def test_closed_form_agrees_with_fine_integrator(self):
        # the oracle above, checked against an independent adaptive integrator
        a = np.linspace(-3, 3, 13)
        sol = solve_ivp(lambda t, x: np.sin(x), (0, 0.5), a, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(sol.y[:, -1], sin_flow(a, 0.5), atol=1e-11)

    def test_group_property(self, g128):
        x = g128.nodes[0]
        times = np.linspace(0.0, 0.6, 7)
        fields = np.stack([(np.sin(x) + 0.3 * np.cos(2 * x) * (1 + t))[None] for t in times])
        hist = VelocityHistory(g128, times, fields)
        whole = advance_flow(hist, 0.0, 0.6, g128, 1e-3)
        first = advance_flow(hist, 0.0, 0.3, g128, 1e-3)
        second = advance_flow(hist, 0.3, 0.6, g128, 1e-3)
        joined = compose_maps(second, first)
        assert np.max(np.abs(wrap(joined.displacement - whole.displacement))) <= 1e-7

    def test_folding_detected(self):
        g = make_grid(1, 32)
        hist = VelocityHistory.steady(g, 3 * np.sin(g.nodes))
        with pytest.raises(FoldingError, match="folding|non-finite"):
            advance_flow(hist, 0.0, 8.0, g, 0.01)


class TestBackToLabels:
    def test_zero(self, g128):
        assert back_to_labels(VelocityHistory.steady(g128, np.zeros((1, 128))), 2.0, g128, 0.5).is_identity

    def test_translation(self, g128):
        c, t = 0.8, 1.1
        A = back_to_labels(VelocityHistory.steady(g128, np.full((1, 128), c)), t, g128, 0.01)
        np.testing.assert_allclose(A.displacement, wrap(-c * t), atol=1e-12)

    def test_inverse_identity(self, g128, sin_hist):
        X = advance_flow(sin_hist, 0.0, 0.5, g128, 1e-3)
        A = back_to_labels(sin_hist, 0.5, g128, 1e-3)
        a_back = X.positions + compose(A.displacement, X)
        assert np.max(np.abs(wrap(a_back - g128.nodes))) <= 1e-6

    def test_time_reversal(self, g128):
        x = g128.nodes[0]
        t = 0.4
        times = np.linspace(0.0, t, 5)
        fields = np.stack([(np.sin(x) * (1 + s) + 0.2 * np.cos(x))[None] for s in times])
        hist = VelocityHistory(g128, times, fields)
        rev = VelocityHistory(g128, t - times[::-1], -fields[::-1])
        X = advance_flow(hist, 0.0, t, g128, 1e-3)
        A_rev = back_to_labels(rev, t, g128, 1e-3)
        assert np.max(np.abs(wrap(A_rev.displacement - X.displacement))) <= 1e-6

    def test_jacobian_liouville(self, g128, sin_hist):
        t = 0.3
        A = back_to_labels(sin_hist, t, g128, 1e-3)
        x = g128.nodes[0]

        # oracle: integrate Y' = -sin Y and L' = -cos Y backward in time with a tight integrator
        def rhs(s, y):
            n = y.size // 2
            return np.concatenate([-np.sin(y[:n]), -np.cos(y[:n])])

        sol = solve_ivp(rhs, (0, t), np.concatenate([x, np.zeros_like(x)]), rtol=1e-12, atol=1e-13)
        oracle = np.exp(sol.y[128:, -1])
        assert np.max(np.abs(jacobian(A) - oracle)) <= 1e-6

    def test_divergence_free_2d(self):
        g = make_grid(2, 48)
        x, y = g.nodes
        u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
        A = back_to_labels(VelocityHistory.steady(g, u), 0.5, g, 1e-2)
        assert np.max(np.abs(jacobian(A) - 1)) <= 1e-6


class TestMapAlgebra:
    def test_grad_identity_and_translation(self, g128):
        for m in (identity_map(g128), translation_map(g128, 1.3)):
            G = grad_map(m)
            np.testing.assert_allclose(G, np.ones((1, 1, 128)), atol=1e-13)

    def test_grad_sin_displacement(self, g128):
        x = g128.nodes[0]
        m = FlowMap(g128, 0.1 * np.sin(x)[None])
        np.testing.assert_allclose(grad_map(m)[0, 0], 1 + 0.1 * np.cos(x), atol=1e-12)

    def test_jacobian_identity_exact(self, g2):
        np.testing.assert_array_equal(jacobian(identity_map(g2)), 1.0)

    def test_jacobian_folding(self, g128):
        m = FlowMap(g128, 1.5 * np.sin(g128.nodes), 0.7)
        with pytest.raises(FoldingError, match=r"t=0\.7"):
            jacobian(m)
        assert np.min(jacobian(m, check=False)) < FOLD_TOL

    def test_compose(self, g128):
        x = g128.nodes[0]
        f = np.sin(x)
        np.testing.assert_array_equal(compose(f, identity_map(g128)), f)
        np.testing.assert_allclose(compose(np.full(128, 2.0), translation_map(g128, 0.4)), 2.0, atol=1e-13)
        np.testing.assert_allclose(compose(f, translation_map(g128, 0.4)), np.sin(x + 0.4), atol=1e-10)

    def test_compose_2d_vector(self, g2):
        x, y = g2.nodes
        u = np.stack([np.sin(x), np.cos(y)])
        out = compose(u, translation_map(g2, [0.2, -0.5]))
        np.testing.assert_allclose(out[0], np.sin(x + 0.2), atol=1e-12)
        np.testing.assert_allclose(out[1], np.cos(y - 0.5), atol=1e-12)

    def test_pushforward(self, g128):
        x = g128.nodes[0]
        v = np.ones((1, 128))
        np.testing.assert_array_equal(pushforward_covector(identity_map(g128), v), v)
        np.testing.assert_allclose(pushforward_covector(translation_map(g128, 2.0), v), v, atol=1e-13)
        m = FlowMap(g128, 0.1 * np.sin(x)[None])
        np.testing.assert_allclose(pushforward_covector(m, v)[0], 1 + 0.1 * np.cos(x), atol=1e-12)

    def test_pushforward_2d_transpose(self, g2):
        x, y = g2.nodes
        m = FlowMap(g2, np.stack([0.1 * np.sin(y), 0 * x]))
        v = np.stack([np.ones_like(x), np.zeros_like(x)])
        out = pushforward_covector(m, v)
        # (grad m)^T v picks row 0 of grad m: (1, 0.1 cos y)
        np.testing.assert_allclose(out[0], 1.0, atol=1e-12)
        np.testing.assert_allclose(out[1], 0.1 * np.cos(y), atol=1e-12)

    def test_displacement_shape_checked(self, g128):
        with pytest.raises(ValueError, match="shape"):
            FlowMap(g128, np.zeros(128))


@settings(max_examples=10, deadline=None)
@given(amp=st.floats(0.05, 0.5), t=st.floats(0.05, 0.5), k=st.integers(1, 4))
def test_inverse_identity_property(amp, t, k):
    # strain amp * k * t <= 1; beyond that A steepens past what n=256 resolves
    g = make_grid(1, 256)
    x = g.nodes[0]
    hist = VelocityHistory.steady(g, (amp * np.sin(k * x) + 0.3)[None])
    X = advance_flow(hist, 0.0, t, g, 1e-2)
    A = back_to_labels(hist, t, g, 1e-2)
    err = np.max(np.abs(wrap(X.positions + compose(A.displacement, X) - g.nodes)))
    assert err <= 1e-6
