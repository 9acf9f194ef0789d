import numpy as np
import pytest

from helpers import offnode_configs, random_interior_configs, random_orientations
from weyltop.errors import ResolutionError
from weyltop.geometry import TopParams
from weyltop.numerics import build_angular_grid, integrate_angular
from weyltop.wavefield import (
    GaussianPacket,
    PathPhaseTracker,
    ProductState,
    SingleTopState,
    SingletState,
    SpinorCoeffs,
    apply_hamiltonian,
    continuity_residual,
    default_packets,
    hje_residual,
    singlet_action_arctan,
    state_velocity,
    top_frequency,
    wigner_down,
    wigner_up,
    xi_coupling,
)


class TestWignerComponents:
    def test_pointwise_unit_modulus(self, rng):
        a, b, g = random_orientations(rng, 100, beta_margin=0.0)
        total = np.abs(wigner_up(a, b, g)) ** 2 + np.abs(wigner_down(a, b, g)) ** 2
        assert np.max(np.abs(total - 1.0)) < 1e-14

    def test_gram_matrix_identity(self, grid888):
        pair = (wigner_up, wigner_down)
        gram = np.array(
            [
                [
                    integrate_angular(grid888, lambda a, b, g: fi(a, b, g) * np.conj(fj(a, b, g)))
                    for fj in pair
                ]
                for fi in pair
            ]
        )
        assert np.max(np.abs(gram - np.eye(2))) < 1e-10


class TestSpinorCoeffs:
    def test_norm_enforced(self):
        with pytest.raises(ValueError):
            SpinorCoeffs(1.0, 1.0)

    def test_canonical_constructors(self):
        assert SpinorCoeffs.up().a == 1.0
        assert SpinorCoeffs.down().b == 1.0


class TestGaussianPacket:
    def test_normalized_at_all_times(self, params):
        # separable density: the 3-D norm factorizes into line integrals
        # through the moving center, divided by the center density squared
        p = GaussianPacket(center=(0.2, -0.5, 0.1), velocity=(0.3, 1.0, 0.0), sigma=1.3)
        for t in (0.0, 2.5):
            x = np.linspace(-30, 30, 4001)
            center = np.asarray(p.center) + np.asarray(p.velocity) * t
            norms = []
            for d in range(3):
                pts = np.broadcast_to(center, (x.size, 3)).copy()
                pts[:, d] = x
                norms.append(np.trapezoid(p.density(pts, t, params), x))
            full = norms[0] * norms[1] * norms[2] / p.density(center, t, params) ** 2
            assert abs(full - 1.0) < 1e-8

    def test_free_schrodinger_residual(self, rng, params):
        p = GaussianPacket(center=(0.0, -2.0, 0.5), velocity=(0.1, 1.0, -0.3), sigma=3.0)
        x = rng.normal(0, 2, (30, 3)) + np.array([0.0, -1.5, 0.5])
        t, ht, hx = 0.7, 1e-4, 1e-3
        dpsi_dt = (p.value(x, t + ht, params) - p.value(x, t - ht, params)) / (2 * ht)
        lap = sum(
            (
                p.value(x + hx * np.eye(3)[d], t, params)
                - 2 * p.value(x, t, params)
                + p.value(x - hx * np.eye(3)[d], t, params)
            )
            / hx**2
            for d in range(3)
        )
        residual = np.abs(1j * dpsi_dt + 0.5 * lap) / np.abs(p.value(x, t, params))
        assert residual.max() < 1e-6

    def test_log_derivatives_match_stencils(self, rng, params):
        p = GaussianPacket(center=(0.0, 1.0, 0.0), velocity=(0.2, -0.4, 0.0), sigma=2.0)
        x = rng.normal(0.5, 1.5, (10, 3))
        t, h = 0.4, 1e-4
        for d in range(3):
            fd = (p.value(x + h * np.eye(3)[d], t, params) - p.value(x - h * np.eye(3)[d], t, params)) / (
                2 * h * p.value(x, t, params)
            )
            assert np.max(np.abs(p.log_grad(x, t, params)[:, d] - fd)) < 1e-6
        fd_t = (p.value(x, t + h, params) - p.value(x, t - h, params)) / (2 * h * p.value(x, t, params))
        assert np.max(np.abs(p.log_dt(x, t, params) - fd_t)) < 1e-6

    def test_default_pair_well_separated(self, params):
        pa, pb = default_packets(params)
        assert pa.overlap_bound(pb, 0.0, params) < 1e-6
        assert pa.overlap_bound(pb, 5.0, params) < 1e-6


class TestSingleTop:
    def test_reference_orientation_value(self, params):
        p1, p2 = default_packets(params)
        state = SingleTopState(SpinorCoeffs.up(), p1, p2, params)
        q = np.zeros(6)
        q[0:3] = p1.center
        t = 0.9
        expected = np.exp(-1j * state.omega * t) * p1.value(np.asarray(p1.center), t, params)
        assert abs(state.psi(q, t) - expected) < 1e-15

    def test_angular_marginal_is_weighted_spatial_density(self, grid888, params):
        # integrating the orientations away leaves |a|^2 |psi_1|^2 +
        # |b|^2 |psi_2|^2 at the spatial point
        p1, p2 = default_packets(params)
        coeffs = SpinorCoeffs(0.6, 0.8j)
        state = SingleTopState(coeffs, p1, p2, params)
        x = np.asarray(p1.center) + np.array([0.5, -0.2, 1.0])
        t = 0.3

        def marg(a, b, g):
            q = np.zeros(a.shape + (6,))
            q[..., 0:3] = x
            q[..., 3], q[..., 4], q[..., 5] = a, b, g
            return np.abs(state.psi(q, t)) ** 2

        val = integrate_angular(grid888, marg)
        expected = (
            abs(coeffs.a) ** 2 * abs(p1.value(x, t, params)) ** 2
            + abs(coeffs.b) ** 2 * abs(p2.value(x, t, params)) ** 2
        )
        assert abs(val - expected) < 1e-10 * expected

    def test_frequency_value(self, params):
        assert abs(top_frequency(params) - 0.525) < 1e-15


class TestSingletState:
    def test_polar_reference_density(self, singlet):
        q = np.zeros((1, 12))
        q[0, 10] = np.pi
        q[0, 3], q[0, 5] = 1.2, 0.4
        assert abs(singlet.angular_density(q)[0] - 0.5) < 1e-14

    def test_nodal_configuration(self, singlet):
        q = np.zeros((1, 12))
        q[0, 4] = q[0, 10] = np.pi / 2.0
        assert singlet.angular_density(q)[0] < 1e-14
        assert not singlet.sample(q, 0.0).valid[0]

    def test_swap_antisymmetry(self, rng, singlet):
        q = random_interior_configs(rng, 30)
        swapped = np.concatenate([q[:, 6:], q[:, :6]], axis=1)
        psi = singlet.angular_psi(q, 0.7)
        assert np.max(np.abs(singlet.angular_psi(swapped, 0.7) + psi)) < 1e-14

    def test_born_rule(self, rng, singlet):
        q = offnode_configs(singlet, rng, 20, 0.5)
        sample = singlet.sample(q, 0.5)
        assert np.max(np.abs(sample.rho - np.abs(sample.psi) ** 2)) < 1e-30
        closed = singlet.rho(q, 0.5)
        assert np.max(np.abs(sample.rho - closed) / closed) < 1e-12

    def test_polar_decomposition(self, rng, singlet):
        q = offnode_configs(singlet, rng, 20, 0.2)
        s = singlet.sample(q, 0.2)
        recon = np.sqrt(s.rho) * np.exp(1j * s.action / singlet.params.hbar)
        assert np.max(np.abs(recon - s.psi)) < 1e-10 * np.max(np.abs(s.psi))

    def test_gamma_momenta(self, rng, singlet):
        q = offnode_configs(singlet, rng, 15, 0.0)
        grad = singlet.sample(q, 0.0).grad_action
        assert np.max(np.abs(grad[:, 5] - 0.5)) < 1e-8
        assert np.max(np.abs(grad[:, 11] - 0.5)) < 1e-8

    def test_time_dependence_of_angular_phase(self, rng, singlet):
        q = random_interior_configs(rng, 5)
        t = 0.37
        ratio = singlet.angular_psi(q, t) / singlet.angular_psi(q, 0.0)
        expected = np.exp(-2j * singlet.omega * t)
        assert np.max(np.abs(ratio - expected)) < 1e-12

    def test_action_matches_wavefunction_phase(self, rng, singlet):
        q = offnode_configs(singlet, rng, 25, 0.4)
        s = singlet.action_principal(q, 0.4)
        phase = np.exp(1j * s / singlet.params.hbar)
        psi_dir = singlet.psi(q, 0.4)
        assert np.max(np.abs(phase - psi_dir / np.abs(psi_dir))) < 1e-9

    def test_arctan_form_cross_check(self, rng, singlet):
        q = offnode_configs(singlet, rng, 40, 0.1)
        tracked = singlet.action_principal(q, 0.1)
        printed = singlet_action_arctan(singlet, q, 0.1)
        dev = (tracked - printed + np.pi / 2.0) % np.pi - np.pi / 2.0
        assert np.max(np.abs(dev)) < 1e-9

    def test_path_tracker_continuity(self, singlet):
        # wind gamma_A through a full turn: the tracked action grows by
        # pi (half-angle phase) without branch jumps
        base = np.zeros((1, 12))
        base[0, 4], base[0, 10] = 0.4, 2.6
        base[0, 0:3] = singlet.packet_a.center
        base[0, 6:9] = singlet.packet_b.center
        tracker = PathPhaseTracker(singlet)
        gammas = np.linspace(0.0, 2.0 * np.pi, 100)
        values = []
        for g in gammas:
            q = base.copy()
            q[0, 5] = g
            values.append(tracker.action(q, 0.0))
        steps = np.diff(values)
        assert np.max(np.abs(steps)) < 0.5
        assert abs((values[-1] - values[0]) - np.pi) < 1e-9

    def test_overlapping_packets_rejected(self, params):
        close = GaussianPacket(center=(0, 0, 0), velocity=(0, 0, 0), sigma=10.0)
        with pytest.raises(ValueError):
            SingletState(packet_a=close, packet_b=close, params=params)


class TestResiduals:
    def test_singlet_exact_solution(self, rng, singlet):
        q = offnode_configs(singlet, rng, 30, 0.6)
        assert np.max(hje_residual(singlet, q, 0.6)) < 1e-4
        assert np.max(continuity_residual(singlet, q, 0.6)) < 1e-4

    def test_product_exact_solution(self, rng, product):
        q = offnode_configs(product, rng, 30, 0.6, factor_floor=0.05)
        assert np.max(hje_residual(product, q, 0.6)) < 1e-4
        assert np.max(continuity_residual(product, q, 0.6)) < 1e-4

    def test_perturbed_action_detected(self, rng, params):
        # adding 0.1 * beta_A to the action breaks the balance
        class Perturbed(SingletState):
            def log_grad(self, q, t):
                out = super().log_grad(q, t)
                out[..., 4] = out[..., 4] + 0.1j
                return out

        state = Perturbed(params=params)
        q = offnode_configs(state, rng, 40, 0.6)
        assert np.max(hje_residual(state, q, 0.6)) > 1e-2
        assert np.max(continuity_residual(state, q, 0.6)) > 1e-2

    def test_divergence_free_constant_density(self, rng, params):
        # constant rho with a gamma-aligned flow: both sides vanish
        class Uniform:
            particles = 2
            rotation_invariant = False

            def __init__(self):
                self.params = params

            def rho(self, q, t):
                return np.ones(np.asarray(q).shape[0])

            def rho_scale(self, t):
                return 1.0

            def log_grad(self, q, t):
                out = np.zeros(np.asarray(q).shape, dtype=complex)
                out[..., 5] = 0.5j
                out[..., 11] = 0.5j
                return out

            def log_dt(self, q, t):
                return np.zeros(np.asarray(q).shape[0], dtype=complex)

        q = random_interior_configs(rng, 10)
        assert np.max(continuity_residual(Uniform(), q, 0.0)) < 1e-9


class TestApplyHamiltonian:
    def test_wigner_eigenvalue(self, params):
        grid = build_angular_grid(32, 16, 16)
        omega = top_frequency(params)
        for f in (wigner_up, wigner_down):
            out = apply_hamiltonian(f, grid, params)
            ratio = out / f(grid.alphas, grid.betas, grid.gammas)
            assert np.max(np.abs(ratio - omega)) / omega < 1e-5

    def test_constant_picks_curvature_coupling(self, params):
        grid = build_angular_grid(12, 8, 8)
        out = apply_hamiltonian(lambda a, b, g: np.ones_like(a, dtype=complex), grid, params)
        assert np.max(np.abs(out - 0.15)) < 1e-6

    def test_coarse_grid_rejected(self, params):
        with pytest.raises(ResolutionError):
            apply_hamiltonian(wigner_up, build_angular_grid(3, 2, 8), params)


class TestCouplingConstants:
    def test_xi_values(self):
        assert abs(xi_coupling(6) - 0.1) < 1e-15
        assert abs(xi_coupling(12) - 5.0 / 44.0) < 1e-15


class TestProductState:
    def test_beta_gradient_vanishes_only_for_singlet_not_product(self, rng, product):
        q = random_interior_configs(rng, 10)
        grad = product.params.hbar * np.imag(product.log_grad(q, 0.0))
        # up/down product carries no beta action gradient at all
        assert np.max(np.abs(grad[:, 4])) < 1e-14
        assert np.max(np.abs(grad[:, 10])) < 1e-14

    def test_velocity_spatial_components(self, product):
        q = np.zeros((1, 12))
        q[0, 0:3] = product.packet_a.center
        q[0, 6:9] = product.packet_b.center
        q[0, 4], q[0, 10] = 0.8, 2.1
        v = state_velocity(product, q, 0.0)
        assert np.allclose(v[0, 0:3], product.packet_a.velocity, atol=1e-12)
        assert np.allclose(v[0, 6:9], product.packet_b.velocity, atol=1e-12)
