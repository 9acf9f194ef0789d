"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a single PASS line after its assertions; run with
``pytest tests/test_acceptance.py -v -s`` to see the full scoreboard.
"""

import time

import numpy as np
import pytest

from helpers import offnode_configs, random_interior_configs, random_orientations
from weyltop.geometry import (
    BlockMetric,
    TopParams,
    gauge_rescale,
    riemann_scalar,
    spin_apply,
    weyl_curvature_from_density,
)
from weyltop.measurement import (
    PlanePatch,
    bell_scan,
    closed_form_fluxes,
    coincidence_fluxes,
    detector_flux,
)
from weyltop.numerics import build_angular_grid
from weyltop.dynamics import advance_ensemble, equivariance_check, sample_ensemble
from weyltop.wavefield import (
    GaussianPacket,
    ProductState,
    SingletState,
    apply_hamiltonian,
    continuity_residual,
    hje_residual,
    top_frequency,
    wigner_down,
    wigner_up,
)

SEED = 20260808


def _stamp(name, start, detail=""):
    print(f"\n[acceptance] PASS {name} ({time.time() - start:.1f}s) {detail}")


def test_criterion_1_riemann_scalar():
    start = time.time()
    rng = np.random.default_rng(SEED)
    params = TopParams()
    pts6 = random_interior_configs(rng, 100)[:, :6]
    r6 = riemann_scalar(BlockMetric(1, params), pts6)
    rel6 = np.max(np.abs(r6 - 1.5)) / 1.5
    assert rel6 < 1e-4
    pts12 = random_interior_configs(rng, 5)
    r12 = riemann_scalar(BlockMetric(2, params), pts12)
    rel12 = np.max(np.abs(r12 - 3.0)) / 3.0
    assert rel12 < 1e-4
    assert time.time() - start < 10.0
    _stamp("criterion 1: Riemann scalar 3/(2a^2) and 3/a^2", start,
           f"rel dev {rel6:.2e} / {rel12:.2e}")


def test_criterion_2_spectral_check():
    start = time.time()
    params = TopParams()
    grid = build_angular_grid(32, 16, 16)
    omega = top_frequency(params)
    assert abs(omega - 21.0 / 40.0) < 1e-15
    worst = 0.0
    for f in (wigner_up, wigner_down):
        out = apply_hamiltonian(f, grid, params)
        ratio = out / f(grid.alphas, grid.betas, grid.gammas)
        worst = max(worst, float(np.max(np.abs(ratio - omega)) / omega))
    assert worst < 1e-5
    assert time.time() - start < 30.0
    _stamp("criterion 2: spectral eigenvalue 21/40", start, f"rel dev {worst:.2e}")


def test_criterion_3_spin_algebra():
    start = time.time()
    rng = np.random.default_rng(SEED)
    pts = random_orientations(rng, 25)
    eps = {(0, 1): 2, (1, 2): 0, (2, 0): 1}
    worst = 0.0
    for f in (wigner_up, wigner_down):
        for (i, j), k in eps.items():
            lhs = spin_apply(i, spin_apply(j, f))(*pts) - spin_apply(j, spin_apply(i, f))(*pts)
            rhs = 1j * spin_apply(k, f)(*pts)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst < 1e-5
    assert time.time() - start < 5.0
    _stamp("criterion 3: spin commutation relations", start, f"max dev {worst:.2e}")


def test_criterion_4_exact_solution_residuals():
    start = time.time()
    rng = np.random.default_rng(SEED)
    params = TopParams()
    t = 0.6
    worst = {}
    for name, state in (("singlet", SingletState(params=params)),
                        ("product", ProductState(params=params))):
        floor = 0.15 if name == "singlet" else 0.05
        q = offnode_configs(state, rng, 200, t, factor_floor=floor)
        worst[f"hje_{name}"] = float(np.max(hje_residual(state, q, t)))
        worst[f"continuity_{name}"] = float(np.max(continuity_residual(state, q, t)))
    for key, value in worst.items():
        assert value < 1e-4, (key, value)
    assert time.time() - start < 60.0
    _stamp("criterion 4: Hamilton-Jacobi/continuity residuals", start,
           " ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_criterion_5_curvature_structure():
    start = time.time()
    rng = np.random.default_rng(SEED)
    params = TopParams()
    metric = BlockMetric(2, params)
    singlet = SingletState(params=params)

    pts = random_interior_configs(rng, 400)
    pts = pts[singlet.angular_factor(pts) > 0.2][:250]
    bracket = singlet.angular_factor(pts)
    rw = weyl_curvature_from_density(metric, singlet.angular_density, pts,
                                     rho_max=0.5, riemann=3.0)
    design = np.column_stack([np.ones(len(pts)), 1.0 / bracket])
    coef, *_ = np.linalg.lstsq(design, rw, rcond=None)
    assert abs(coef[0] - 9.6) < 1e-3
    assert abs(abs(coef[1]) - 4.4) < 1e-3
    sign = int(np.sign(coef[1]))

    product = ProductState(params=params)
    betas = np.linspace(0.6, 2.5, 5)
    qp = np.zeros((25, 12))
    qp[:, 4] = np.repeat(betas, 5)
    qp[:, 10] = np.tile(betas, 5)
    rwp = weyl_curvature_from_density(metric, product.angular_density, qp,
                                      rho_max=1.0, riemann=3.0).reshape(5, 5)
    mixed = rwp[1:, 1:] - rwp[:-1, 1:] - rwp[1:, :-1] + rwp[:-1, :-1]
    assert np.max(np.abs(mixed)) < 1e-5
    assert time.time() - start < 60.0
    _stamp("criterion 5: Weyl curvature structure", start,
           f"constant {coef[0]:.6f}, coupling magnitude {abs(coef[1]):.6f}, "
           f"coupling sign fixed by the numerical oracle: {sign:+d}")


def test_criterion_6_coincidence_closed_forms():
    start = time.time()
    rng = np.random.default_rng(SEED)
    grid = build_angular_grid(8, 8, 8)
    worst_flux = worst_total = 0.0
    for _ in range(25):
        ta, tb = rng.uniform(0.0, 2.0 * np.pi, 2)
        tab = coincidence_fluxes(ta, tb, grid)
        ref = closed_form_fluxes(ta, tb)
        worst_flux = max(worst_flux, abs(tab.phi_uu - ref.phi_uu),
                         abs(tab.phi_ud - ref.phi_ud), abs(tab.phi_du - ref.phi_du),
                         abs(tab.phi_dd - ref.phi_dd))
        worst_total = max(worst_total, abs(tab.total() - 1.0))
    assert worst_flux < 1e-10
    assert worst_total < 1e-8
    assert time.time() - start < 10.0
    _stamp("criterion 6: coincidence closed forms", start,
           f"max flux dev {worst_flux:.1e}, closure dev {worst_total:.1e}")


def test_criterion_7_bell_violation():
    start = time.time()
    grid = build_angular_grid(8, 8, 8)
    coarse = bell_scan(np.deg2rad(np.arange(0.0, 45.5, 1.0)), grid)
    assert bool(np.all(coarse.violated[1:-1]))
    fine = bell_scan(np.deg2rad(np.arange(29.0, 31.02, 0.1)), grid)
    assert abs(fine.max_value - 2.5) < 1e-6
    assert abs(np.rad2deg(fine.argmax) - 30.0) <= 0.1
    outside = bell_scan(np.deg2rad(np.arange(45.0, 90.5, 1.0)), grid)
    assert float(outside.values.max()) <= 2.0 + 1e-9
    assert time.time() - start < 10.0
    _stamp("criterion 7: Bell violation", start,
           f"max {fine.max_value:.9f} at {np.rad2deg(fine.argmax):.1f} deg")


def test_criterion_8_gauge_invariance():
    start = time.time()
    params = TopParams()
    base = SingletState(params=params)
    ens = sample_ensemble(base, 5, seed=SEED)
    end_base = advance_ensemble(base, ens.configs, 0.0, 0.5, dt=2e-3).configs
    grid = build_angular_grid(8, 8, 8)
    packet = GaussianPacket(center=(0.0, -4.0, 0.0), velocity=(0.0, 1.0, 0.0), sigma=1.5)
    patch = PlanePatch(center=(0.0, -4.0, 0.0), normal=(0.0, 1.0, 0.0), half_u=9.0, half_v=9.0)
    profile = lambda a, b, g: np.abs(wigner_up(a, b, g)) ** 2
    flux_base = detector_flux(packet, profile, patch, grid, params=params)
    table_base = coincidence_fluxes(0.3, 1.4, grid, params=params)

    for lam in (0.25, 4.0):
        rescaled = gauge_rescale(lam, params)
        state = SingletState(packet_a=base.packet_a, packet_b=base.packet_b, params=rescaled)
        end = advance_ensemble(state, ens.configs, 0.0, 0.5, dt=2e-3).configs
        assert np.max(np.abs(end - end_base)) <= 1e-10 * max(1.0, np.max(np.abs(end_base)))
        assert abs(top_frequency(rescaled) - top_frequency(params)) <= 1e-10 * top_frequency(params)
        flux = detector_flux(packet, profile, patch, grid, params=rescaled)
        assert abs(flux - flux_base) <= 1e-10 * abs(flux_base)
        table = coincidence_fluxes(0.3, 1.4, grid, params=rescaled)
        for attr in ("phi_uu", "phi_ud", "phi_du", "phi_dd"):
            assert abs(getattr(table, attr) - getattr(table_base, attr)) <= 1e-10
    assert time.time() - start < 60.0
    _stamp("criterion 8: gauge invariance under lambda in {1/4, 4}", start)


def test_criterion_9_equivariance():
    start = time.time()
    state = SingletState()
    ens = sample_ensemble(state, 100_000, seed=SEED)
    report = equivariance_check(state, ens, t1=5.0, dt=5e-3)
    assert report.aborted_fraction <= 0.01
    assert report.p_alignment > 0.01
    assert report.p_cos_beta > 0.01
    assert report.p_gamma_drift < 1e-6
    assert time.time() - start < 600.0
    _stamp("criterion 9: ensemble equivariance at t = 5", start,
           f"p = {report.p_alignment:.3f}/{report.p_cos_beta:.3f}, "
           f"drift {report.p_gamma_drift:.1e}, aborted {report.aborted_fraction:.2%}")
