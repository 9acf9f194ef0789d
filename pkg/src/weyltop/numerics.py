"""Shared numerical kernels: quadrature with the Euler-angle measure,
central-difference stencils, and explicit Runge-Kutta stepping.

The angular measure used throughout is

    d(mu) = sin(beta) / (4 pi^2) d(alpha) d(beta) d(gamma),

with alpha, gamma in [0, 2 pi) and beta in [0, pi].  The total measure is
then 2, and each spin-1/2 Wigner entry has unit norm.  Quadrature combines
Gauss-Legendre in cos(beta) with uniform periodic rules in alpha and gamma,
which integrates the trigonometric-polynomial integrands of this problem
exactly (to rounding) at small node counts and never places a node on the
sin(beta) = 0 chart singularity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, TrajectoryAbort

TWO_PI = 2.0 * np.pi

# offsets (in units of h) and weights of the central first-derivative stencils
STENCILS = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


@dataclass(frozen=True)
class AngularGrid:
    """Tensor-product quadrature grid over one top's Euler angles.

    ``beta``/``beta_weight`` hold the Gauss-Legendre rule mapped to beta in
    (0, pi); ``alpha`` and ``gamma`` are uniform on [0, 2 pi).  The flat
    arrays enumerate all nodes in (beta, alpha, gamma) meshgrid order with
    combined weights that include the 1/(4 pi^2) sin(beta) factor, so the
    weights sum to 2.
    """

    n_beta: int
    n_alpha: int
    n_gamma: int
    beta: np.ndarray
    beta_weight: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    gammas: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self):
        return self.weights.size

    def shape(self):
        return (self.n_beta, self.n_alpha, self.n_gamma)


def build_angular_grid(n_beta, n_alpha, n_gamma):
    """Build an :class:`AngularGrid` with the given node counts.

    All counts must be at least 2.  Integration of trigonometric polynomials
    of degree < n_alpha (n_gamma) in alpha (gamma) and of polynomials in
    cos(beta) of degree < 2 n_beta is exact to rounding.
    """
    for name, n in (("n_beta", n_beta), ("n_alpha", n_alpha), ("n_gamma", n_gamma)):
        if int(n) < 2:
            raise ValueError(f"{name} must be >= 2, got {n}")
    n_beta, n_alpha, n_gamma = int(n_beta), int(n_alpha), int(n_gamma)

    x, w = np.polynomial.legendre.leggauss(n_beta)  # x = cos(beta) on (-1, 1)
    beta = np.arccos(x[::-1])
    beta_weight = w[::-1].copy()
    alpha = TWO_PI * np.arange(n_alpha) / n_alpha
    gamma = TWO_PI * np.arange(n_gamma) / n_gamma

    bb, aa, gg = np.meshgrid(beta, alpha, gamma, indexing="ij")
    ww = np.broadcast_to(
        (beta_weight / (n_alpha * n_gamma))[:, None, None], bb.shape
    )
    return AngularGrid(
        n_beta=n_beta,
        n_alpha=n_alpha,
        n_gamma=n_gamma,
        beta=beta,
        beta_weight=beta_weight,
        alpha=alpha,
        gamma=gamma,
        alphas=aa.ravel(),
        betas=bb.ravel(),
        gammas=gg.ravel(),
        weights=ww.ravel().copy(),
    )


def integrate_angular(grid, f):
    """Integrate ``f(alpha, beta, gamma)`` (vectorized) against the measure.

    Returns the weighted node sum in a fixed reduction order.  A non-finite
    node value raises :class:`NumericError` carrying the offending node.
    """
    values = np.asarray(f(grid.alphas, grid.betas, grid.gammas))
    bad = ~np.isfinite(values) if not np.iscomplexobj(values) else ~(
        np.isfinite(values.real) & np.isfinite(values.imag)
    )
    if np.any(bad):
        i = int(np.argmax(bad))
        node = (grid.alphas[i], grid.betas[i], grid.gammas[i])
        raise NumericError(f"non-finite integrand at node {node}", node=node)
    return np.sum(grid.weights * values)


@dataclass(frozen=True)
class StencilSpec:
    """Step sizes (radians for angles, lengths for space) and accuracy order
    of the central-difference stencils."""

    step: float = 1e-3
    order: int = 4

    def __post_init__(self):
        steps = np.atleast_1d(np.asarray(self.step, dtype=float))
        if np.any(steps <= 0.0):
            raise ValueError("stencil steps must be positive")
        if np.any(steps >= np.pi / 8):
            raise ValueError("stencil steps must stay below pi/8")
        if self.order not in STENCILS:
            raise ValueError(f"unsupported stencil order {self.order}")

    def steps_for(self, dim):
        return np.broadcast_to(np.asarray(self.step, dtype=float), (dim,))


def fd_gradient(f, point, spec=StencilSpec()):
    """Central-difference gradient of a scalar field at one point.

    ``f`` must accept a batch of points shaped (m, d) and return (m,)
    values; the error is O(step**order) on smooth fields.
    """
    point = np.asarray(point, dtype=float)
    d = point.size
    offsets, coeffs = STENCILS[spec.order]
    steps = spec.steps_for(d)

    pts = np.repeat(point[None, :], d * offsets.size, axis=0)
    for mu in range(d):
        rows = slice(mu * offsets.size, (mu + 1) * offsets.size)
        pts[rows, mu] += offsets * steps[mu]
    try:
        values = np.asarray(f(pts))
    except Exception as exc:  # noqa: BLE001 - wrap with evaluation context
        raise NumericError(f"field evaluation failed near {point}: {exc}", node=point)
    if not np.all(np.isfinite(np.atleast_1d(values.real))) or (
        np.iscomplexobj(values) and not np.all(np.isfinite(values.imag))
    ):
        raise NumericError(f"non-finite field value in stencil around {point}", node=point)
    values = values.reshape(d, offsets.size)
    return values @ coeffs / steps


def ode_step(state, velocity_fn, dt, t=0.0):
    """One classical fourth-order Runge-Kutta step of dq/dt = v(q, t)."""
    q = np.asarray(state, dtype=float)
    k1 = np.asarray(velocity_fn(q, t))
    k2 = np.asarray(velocity_fn(q + 0.5 * dt * k1, t + 0.5 * dt))
    k3 = np.asarray(velocity_fn(q + 0.5 * dt * k2, t + 0.5 * dt))
    k4 = np.asarray(velocity_fn(q + dt * k3, t + dt))
    if not (
        np.all(np.isfinite(k1))
        and np.all(np.isfinite(k2))
        and np.all(np.isfinite(k3))
        and np.all(np.isfinite(k4))
    ):
        raise TrajectoryAbort(f"non-finite velocity near state {q}")
    return q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
