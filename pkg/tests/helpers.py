"""Shared oracles and samplers for the test suite.

The quadrature oracles here are deliberately independent of the production
code paths: factorized angular integrals reduce to one-dimensional adaptive
quadratures, and expected values are computed from them (or from analytic
substitution) before being compared against the package.
"""

import numpy as np
from scipy.integrate import quad

TWO_PI = 2.0 * np.pi


def oracle_wigner_product_integral(p, q, r, s):
    """Integral of D_up^p D_down^q conj(D_up)^r conj(D_down)^s against the
    angular measure, via 1-D adaptive quadratures of the factorized form.

    The alpha exponent is (p-r-q+s)/2 and the gamma exponent (p-r+q-s)/2;
    the beta factor is cos(b/2)^(p+r) sin(b/2)^(q+s).
    """
    k_alpha = 0.5 * (p - r - q + s)
    k_gamma = 0.5 * (p - r + q - s)

    def phase_integral(k):
        re = quad(lambda x: np.cos(k * x), 0.0, TWO_PI, limit=200)[0]
        im = quad(lambda x: np.sin(k * x), 0.0, TWO_PI, limit=200)[0]
        return re + 1j * im

    ia = phase_integral(k_alpha)
    ig = phase_integral(k_gamma)
    ib = quad(
        lambda b: np.cos(b / 2.0) ** (p + r) * np.sin(b / 2.0) ** (q + s) * np.sin(b),
        0.0,
        np.pi,
        limit=200,
    )[0]
    return ia * ig * ib / (4.0 * np.pi**2)


def random_orientations(rng, n, beta_margin=0.3):
    """Interior orientation triples, away from the chart poles."""
    return (
        rng.uniform(0.0, TWO_PI, n),
        rng.uniform(beta_margin, np.pi - beta_margin, n),
        rng.uniform(0.0, TWO_PI, n),
    )


def random_interior_configs(rng, n, beta_margin=0.3):
    """Two-top configurations with interior betas and unit-box positions."""
    q = np.zeros((n, 12))
    for p in range(2):
        q[:, 6 * p : 6 * p + 3] = rng.uniform(-1.0, 1.0, (n, 3))
        q[:, 6 * p + 3] = rng.uniform(0.0, TWO_PI, n)
        q[:, 6 * p + 4] = rng.uniform(beta_margin, np.pi - beta_margin, n)
        q[:, 6 * p + 5] = rng.uniform(0.0, TWO_PI, n)
    return q


def offnode_configs(state, rng, n, t, factor_floor=0.15, beta_margin=0.3):
    """Interior configurations with positions near the packet centers and
    the orientational factor bounded away from the nodal set."""
    out, have = [], 0
    while have < n:
        q = random_interior_configs(rng, 2 * n, beta_margin)
        for sl, packet in ((slice(0, 3), state.packet_a), (slice(6, 9), state.packet_b)):
            center = np.asarray(packet.center) + np.asarray(packet.velocity) * t
            q[:, sl] = center + rng.normal(0.0, packet.sigma, (2 * n, 3))
        keep = state.angular_factor(q) > factor_floor
        out.append(q[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:n]
