import numpy as np
import pytest

from helpers import oracle_wigner_product_integral
from weyltop.errors import NumericError, TrajectoryAbort
from weyltop.numerics import (
    StencilSpec,
    build_angular_grid,
    fd_gradient,
    integrate_angular,
    ode_step,
)
from weyltop.wavefield import wigner_down, wigner_up


class TestAngularGrid:
    def test_weights_sum_to_total_measure(self, grid888):
        assert abs(np.sum(grid888.weights) - 2.0) < 1e-12

    def test_weights_positive(self, grid888):
        assert np.all(grid888.weights > 0.0)

    def test_beta_nodes_interior(self, grid888):
        assert np.all(grid888.beta > 0.0)
        assert np.all(grid888.beta < np.pi)

    @pytest.mark.parametrize("bad", [(1, 8, 8), (8, 1, 8), (8, 8, 0)])
    def test_counts_below_two_rejected(self, bad):
        with pytest.raises(ValueError):
            build_angular_grid(*bad)

    def test_constant_integrates_to_two(self, grid888):
        # analytic oracle: the measure totals 2 on alpha, gamma in [0, 2pi)
        val = integrate_angular(grid888, lambda a, b, g: np.ones_like(a))
        assert abs(val - 2.0) < 1e-12

    def test_wigner_up_norm(self, grid888):
        val = integrate_angular(grid888, lambda a, b, g: np.abs(wigner_up(a, b, g)) ** 2)
        assert abs(val - 1.0) < 1e-12

    def test_wigner_down_norm(self, grid888):
        val = integrate_angular(grid888, lambda a, b, g: np.abs(wigner_down(a, b, g)) ** 2)
        assert abs(val - 1.0) < 1e-12

    def test_wigner_cross_term_vanishes(self, grid888):
        val = integrate_angular(
            grid888, lambda a, b, g: wigner_up(a, b, g) * np.conj(wigner_down(a, b, g))
        )
        assert abs(val) < 1e-12

    def test_cos_beta_integrates_to_zero(self, grid888):
        val = integrate_angular(grid888, lambda a, b, g: np.cos(b))
        assert abs(val) < 1e-12

    def test_wigner_products_match_oracle(self, grid888):
        # every D_up/D_down product of total degree <= 4 whose half-angle
        # phases combine to integer harmonics
        combos = [
            (p, q, r, s)
            for p in range(3)
            for q in range(3)
            for r in range(3)
            for s in range(3)
            if 0 < p + q + r + s <= 4 and (p - r) % 2 == (q - s) % 2
        ]
        assert len(combos) > 20
        for p, q, r, s in combos:
            expected = oracle_wigner_product_integral(p, q, r, s)

            def f(a, b, g):
                up, dn = wigner_up(a, b, g), wigner_down(a, b, g)
                return up**p * dn**q * np.conj(up) ** r * np.conj(dn) ** s

            val = integrate_angular(grid888, f)
            assert abs(val - expected) < 1e-10, (p, q, r, s)

    def test_linearity(self, grid888, rng):
        f = lambda a, b, g: np.cos(b) ** 2
        h = lambda a, b, g: np.sin(a) * np.sin(b)
        lhs = integrate_angular(grid888, lambda a, b, g: 2.5 * f(a, b, g) - 1.25 * h(a, b, g))
        rhs = 2.5 * integrate_angular(grid888, f) - 1.25 * integrate_angular(grid888, h)
        assert abs(lhs - rhs) < 1e-14

    def test_nonfinite_integrand_reports_node(self, grid888):
        def f(a, b, g):
            out = np.ones_like(a)
            out[3] = np.inf
            return out

        with pytest.raises(NumericError) as err:
            integrate_angular(grid888, f)
        assert err.value.node is not None


class TestStencils:
    def test_linear_field(self):
        grad = fd_gradient(lambda p: p[:, 1], np.zeros(4))
        assert np.allclose(grad, [0.0, 1.0, 0.0, 0.0], atol=1e-12)

    def test_cos_beta_derivative(self):
        # analytic oracle: d cos(b) / db at pi/3 is -sin(pi/3)
        spec = StencilSpec(step=1e-2, order=4)
        grad = fd_gradient(lambda p: np.cos(p[:, 0]), np.array([np.pi / 3.0]), spec)
        assert abs(grad[0] + np.sin(np.pi / 3.0)) < 1e-6

    def test_constant_field(self):
        grad = fd_gradient(lambda p: np.full(p.shape[0], 7.25), np.ones(3))
        assert np.allclose(grad, 0.0, atol=1e-12)

    @pytest.mark.parametrize("order", [2, 4])
    def test_convergence_order(self, order):
        f = lambda p: np.sin(2.0 * p[:, 0]) * np.exp(0.3 * p[:, 0])
        point = np.array([0.4])
        exact = 2.0 * np.cos(0.8) * np.exp(0.12) + 0.3 * np.sin(0.8) * np.exp(0.12)
        err = []
        for h in (2e-2, 1e-2):
            grad = fd_gradient(f, point, StencilSpec(step=h, order=order))
            err.append(abs(grad[0] - exact))
        assert err[0] / err[1] > 2**order / 1.5

    def test_failure_inside_stencil(self):
        def f(p):
            if np.any(p > 0.5):
                raise FloatingPointError("blows up")
            return p[:, 0]

        with pytest.raises(NumericError):
            fd_gradient(f, np.array([0.5]))

    @pytest.mark.parametrize("bad", [{"step": -1e-3}, {"step": 1.0}, {"order": 3}])
    def test_spec_validation(self, bad):
        with pytest.raises(ValueError):
            StencilSpec(**bad)


class TestOdeStep:
    def test_constant_velocity(self):
        v = lambda q, t: np.array([1.0, 0.0, 0.0])
        out = ode_step(np.zeros(3), v, 0.5)
        assert np.allclose(out, [0.5, 0.0, 0.0], atol=1e-15)

    def test_circular_field_closes(self):
        # analytic oracle: period of the unit circle flow is 2 pi, so 628
        # steps of dt = 2 pi / 628 return to the start
        v = lambda q, t: np.array([-q[1], q[0]])
        q = np.array([1.0, 0.0])
        dt = 2.0 * np.pi / 628.0
        for _ in range(628):
            q = ode_step(q, v, dt)
        assert np.linalg.norm(q - [1.0, 0.0]) < 1e-4

    def test_zero_field(self):
        q0 = np.array([0.3, -0.7])
        assert np.array_equal(ode_step(q0, lambda q, t: np.zeros(2), 0.1), q0)

    def test_nonfinite_velocity_aborts(self):
        with pytest.raises(TrajectoryAbort):
            ode_step(np.zeros(2), lambda q, t: np.array([np.nan, 0.0]), 0.1)

    def test_energy_error_scales_as_dt4(self):
        # harmonic oscillator: per-step energy defect of the classical
        # fourth-order scheme shrinks at least 2^4/1.5 per halving
        v = lambda q, t: np.array([q[1], -q[0]])
        energy = lambda q: q[0] ** 2 + q[1] ** 2
        defects = []
        for dt in (2e-2, 1e-2):
            q = ode_step(np.array([1.0, 0.0]), v, dt)
            defects.append(abs(energy(q) - 1.0))
        assert defects[0] / defects[1] > 2**4 / 1.5
