"""Configuration-space geometry of spinning tops.

One top lives on R^3 x SO(3) with coordinates (x, y, z, alpha, beta, gamma)
and the block-diagonal metric

    g = diag(s * delta_ij,  a^2 * gamma_ab(beta)),

where s is the (conformal) scale of the flat spatial block, a the gyration
radius, and gamma_ab the Euler metric with unit diagonal, gamma_ag = cos(beta)
and det = sin(beta)^2.  Two tops double the block structure (dimension 12).

The module provides the triads lambda/mu that put gamma in dyadic form,
spin operators as line-arc derivatives, a generic finite-difference
Christoffel/Riemann engine (with an analytic fast path for the Euler block
used as a cross check), and the scalar curvature of the Weyl connection in
both its potential form and its density form:

    R_W = R + (n-1) [ (2/sqrt(g)) d_mu(sqrt(g) g^mu.nu phi_nu)
                      - (n-2) g^mu.nu phi_mu phi_nu ]
    R_W = R + (n-1)/(n-2) [ g^mu.nu d_mu(rho) d_nu(rho) / rho^2
                            - (2/(rho sqrt(g))) d_mu(sqrt(g) g^mu.nu d_nu rho) ]

which agree whenever phi = -ln(rho/A)/(n-2).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ChartSingularityError, NearNodeError
from .numerics import STENCILS

CHART_EPS = 1e-9
NODE_FLOOR_RATIO = 1e-8


@dataclass(frozen=True)
class EulerAngles:
    """One top's orientation; alpha, gamma stored reduced mod 2 pi."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not -1e-12 <= self.beta <= np.pi + 1e-12:
            raise ValueError(f"beta must lie in [0, pi], got {self.beta}")
        object.__setattr__(self, "alpha", float(self.alpha) % (2.0 * np.pi))
        object.__setattr__(self, "gamma", float(self.gamma) % (2.0 * np.pi))
        object.__setattr__(self, "beta", float(min(max(self.beta, 0.0), np.pi)))

    def as_array(self):
        return np.array([self.alpha, self.beta, self.gamma])


@dataclass(frozen=True)
class TopParams:
    """Mass (gauge weight -1), gyration radius, and spatial block scale."""

    mass: float = 1.0
    radius: float = 1.0
    spatial_scale: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0 or self.radius <= 0 or self.spatial_scale <= 0:
            raise ValueError("mass, radius and spatial scale must be positive")

    @property
    def inertia(self):
        """m a^2, invariant under constant gauge rescalings."""
        return self.mass * self.radius**2

    @property
    def spatial_mass(self):
        """m s, the invariant combination entering flat-block dynamics."""
        return self.mass * self.spatial_scale


def gauge_rescale(lam, params):
    """Constant conformal rescaling g -> lam g.

    The radius carries weight 1/2, the mass weight -1, the spatial block
    scales by lam; m a^2 and m s are invariant, so are velocities,
    trajectories, fluxes and eigenfrequencies built from them.
    """
    if lam <= 0:
        raise ValueError(f"gauge factor must be positive, got {lam}")
    return TopParams(
        mass=params.mass / lam,
        radius=np.sqrt(lam) * params.radius,
        spatial_scale=lam * params.spatial_scale,
        hbar=params.hbar,
    )


# ---------------------------------------------------------------------------
# Euler metric, triads, spin operators
# ---------------------------------------------------------------------------

def euler_metric(beta):
    """3x3 internal metric: unit diagonal, gamma_ag = cos(beta)."""
    beta = np.asarray(beta, dtype=float)
    c = np.cos(beta)
    g = np.zeros(beta.shape + (3, 3))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = 1.0
    g[..., 2, 2] = 1.0
    g[..., 0, 2] = c
    g[..., 2, 0] = c
    return g


def euler_metric_inverse(beta):
    """Closed-form inverse of :func:`euler_metric`; singular at sin(beta)=0."""
    beta = np.asarray(beta, dtype=float)
    c = np.cos(beta)
    s2 = np.sin(beta) ** 2
    g = np.zeros(beta.shape + (3, 3))
    g[..., 0, 0] = 1.0 / s2
    g[..., 1, 1] = 1.0
    g[..., 2, 2] = 1.0 / s2
    g[..., 0, 2] = -c / s2
    g[..., 2, 0] = -c / s2
    return g


@dataclass(frozen=True)
class Triad:
    """Congruence parameters lambda^i_a (rows i) and momenta mu^a_i (rows a),
    with mu . lambda = 1 and lambda^T lambda equal to the Euler metric."""

    lam: np.ndarray
    mu: np.ndarray


def triad(alpha, beta, gamma):
    """Evaluate the triad at one orientation (vectorized over leading axes)."""
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float),
        np.asarray(beta, dtype=float),
        np.asarray(gamma, dtype=float),
    )
    sb = np.sin(beta)
    if np.any(np.abs(sb) < CHART_EPS):
        raise ChartSingularityError("triad inverse undefined at sin(beta) = 0")
    ca, sa, cb = np.cos(alpha), np.sin(alpha), np.cos(beta)

    lam = np.zeros(beta.shape + (3, 3))
    # rows: body-rate components; columns: d/dt of (alpha, beta, gamma)
    lam[..., 0, 1] = -sa
    lam[..., 0, 2] = ca * sb
    lam[..., 1, 1] = ca
    lam[..., 1, 2] = sa * sb
    lam[..., 2, 0] = 1.0
    lam[..., 2, 2] = cb

    mu = np.zeros(beta.shape + (3, 3))
    mu[..., 0, 0] = -ca * cb / sb
    mu[..., 0, 1] = -sa * cb / sb
    mu[..., 0, 2] = 1.0
    mu[..., 1, 0] = -sa
    mu[..., 1, 1] = ca
    mu[..., 2, 0] = ca / sb
    mu[..., 2, 1] = sa / sb
    return Triad(lam=lam, mu=mu)


def spin_apply(i, f, step=1e-3, order=4, hbar=1.0):
    """Spin component i as a derivative along the congruence lines:
    returns the function -i hbar mu^a_i d_a f, with d_a by central stencils.

    ``f(alpha, beta, gamma)`` must be vectorized.
    """
    if i not in (0, 1, 2):
        raise ValueError("spin axis index must be 0, 1 or 2")
    offsets, coeffs = STENCILS[order]

    def applied(alpha, beta, gamma):
        alpha, beta, gamma = np.broadcast_arrays(
            np.asarray(alpha, dtype=float),
            np.asarray(beta, dtype=float),
            np.asarray(gamma, dtype=float),
        )
        tri = triad(alpha, beta, gamma)
        grad = []
        for axis, arr in enumerate((alpha, beta, gamma)):
            acc = 0.0
            for o, c in zip(offsets, coeffs):
                args = [alpha, beta, gamma]
                args[axis] = arr + o * step
                acc = acc + c * np.asarray(f(*args))
            grad.append(acc / step)
        out = 0.0
        for a in range(3):
            out = out + tri.mu[..., a, i] * grad[a]
        return -1j * hbar * out

    return applied


# ---------------------------------------------------------------------------
# Block metric for one or two tops
# ---------------------------------------------------------------------------

class BlockMetric:
    """Block-diagonal configuration-space metric for 1 or 2 tops.

    Coordinate layout per particle: (x, y, z, alpha, beta, gamma); particles
    are concatenated, so dim is 6 or 12 and beta sits at index 4 (and 10).
    """

    def __init__(self, particles, params=TopParams()):
        if particles not in (1, 2):
            raise ValueError("particles must be 1 or 2")
        self.particles = particles
        self.params = params
        self.dim = 6 * particles
        self.blocks = []
        for p in range(particles):
            self.blocks.append((slice(6 * p, 6 * p + 3), "spatial"))
            self.blocks.append((slice(6 * p + 3, 6 * p + 6), "euler"))

    @property
    def beta_indices(self):
        return [6 * p + 4 for p in range(self.particles)]

    def block_of(self, mu):
        for sl, kind in self.blocks:
            if sl.start <= mu < sl.stop:
                return sl, kind
        raise IndexError(mu)

    def matrix_at(self, q):
        q = np.asarray(q, dtype=float)
        g = np.zeros(q.shape[:-1] + (self.dim, self.dim))
        s = self.params.spatial_scale
        a2 = self.params.radius**2
        for sl, kind in self.blocks:
            if kind == "spatial":
                for k in range(sl.start, sl.stop):
                    g[..., k, k] = s
            else:
                beta = q[..., sl.start + 1]
                g[..., sl, sl] = a2 * euler_metric(beta)
        return g

    def inverse_at(self, q):
        q = np.asarray(q, dtype=float)
        g = np.zeros(q.shape[:-1] + (self.dim, self.dim))
        s = self.params.spatial_scale
        a2 = self.params.radius**2
        for sl, kind in self.blocks:
            if kind == "spatial":
                for k in range(sl.start, sl.stop):
                    g[..., k, k] = 1.0 / s
            else:
                beta = q[..., sl.start + 1]
                g[..., sl, sl] = euler_metric_inverse(beta) / a2
        return g

    def det_at(self, q):
        q = np.asarray(q, dtype=float)
        s = self.params.spatial_scale
        a = self.params.radius
        det = np.ones(q.shape[:-1])
        for sl, kind in self.blocks:
            if kind == "spatial":
                det = det * s**3
            else:
                det = det * a**6 * np.sin(q[..., sl.start + 1]) ** 2
        return det

    def sqrt_det_at(self, q):
        q = np.asarray(q, dtype=float)
        s = self.params.spatial_scale
        a = self.params.radius
        root = np.full(q.shape[:-1], s ** (1.5 * self.particles))
        for p in range(self.particles):
            root = root * a**3 * np.abs(np.sin(q[..., 6 * p + 4]))
        return root

    def contract_inverse(self, q, covector):
        """g^mu.nu w_nu, exploiting the block structure."""
        q = np.asarray(q, dtype=float)
        w = np.asarray(covector)
        out = np.zeros_like(w)
        for sl, kind in self.blocks:
            if kind == "spatial":
                out[..., sl] = w[..., sl] / self.params.spatial_scale
            else:
                ginv = euler_metric_inverse(q[..., sl.start + 1]) / self.params.radius**2
                out[..., sl] = np.einsum("...ab,...b->...a", ginv, w[..., sl])
        return out


# ---------------------------------------------------------------------------
# Christoffel symbols and Riemann scalar (finite differences of the metric)
# ---------------------------------------------------------------------------

def christoffel_fd(metric, points, h=1e-3, order=4):
    """Gamma^s_mn of ``metric`` at ``points`` (N, dim) from central
    differences of the closed-form metric."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    offsets, coeffs = STENCILS[order]
    dg = np.zeros((n, d, d, d))
    for lam in range(d):
        acc = 0.0
        for o, c in zip(offsets, coeffs):
            shifted = points.copy()
            shifted[:, lam] += o * h
            acc = acc + c * metric.matrix_at(shifted)
        dg[:, lam] = acc / h
    ginv = metric.inverse_at(points)
    lowered = 0.5 * (dg.transpose(0, 2, 1, 3) + dg.transpose(0, 2, 3, 1) - dg)
    return np.einsum("nsl,nlmv->nsmv", ginv, lowered)


def euler_christoffel(beta):
    """Analytic Christoffel symbols of the internal block (any constant
    overall metric scale drops out); cross-check for the generic engine."""
    beta = np.asarray(beta, dtype=float)
    s, c = np.sin(beta), np.cos(beta)
    G = np.zeros(beta.shape + (3, 3, 3))
    half_cot = c / (2.0 * s)
    inv_2s = 1.0 / (2.0 * s)
    G[..., 0, 0, 1] = G[..., 0, 1, 0] = half_cot
    G[..., 0, 1, 2] = G[..., 0, 2, 1] = -inv_2s
    G[..., 1, 0, 2] = G[..., 1, 2, 0] = s / 2.0
    G[..., 2, 0, 1] = G[..., 2, 1, 0] = -inv_2s
    G[..., 2, 1, 2] = G[..., 2, 2, 1] = half_cot
    return G


def riemann_scalar(metric, points, h=2e-3, order=4, inner_h=1e-3):
    """Numerical Riemann scalar of ``metric`` at ``points`` (N, dim).

    Christoffels come from :func:`christoffel_fd`; their derivatives from an
    outer central stencil.  Constant for the top metrics: 3/(2 a^2) per
    particle internal block, 0 for the flat blocks.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    offsets, coeffs = STENCILS[order]
    gamma0 = christoffel_fd(metric, points, h=inner_h, order=order)
    dgamma = np.zeros((n, d, d, d, d))
    for kappa in range(d):
        acc = 0.0
        for o, c in zip(offsets, coeffs):
            shifted = points.copy()
            shifted[:, kappa] += o * h
            acc = acc + c * christoffel_fd(metric, shifted, h=inner_h, order=order)
        dgamma[:, kappa] = acc / h

    t1 = np.einsum("nmmba->nab", dgamma)
    t2 = np.einsum("nbmma->nab", dgamma)
    trace = np.einsum("nmml->nl", gamma0)
    t3 = np.einsum("nl,nlba->nab", trace, gamma0)
    t4 = np.einsum("nmbl,nlma->nab", gamma0, gamma0)
    ricci = t1 - t2 + t3 - t4
    ginv = metric.inverse_at(points)
    return np.einsum("nab,nab->n", ginv, ricci)


# ---------------------------------------------------------------------------
# Weyl connection and curvature
# ---------------------------------------------------------------------------

@dataclass
class WeylField:
    """Scalar potential phi(q) with its gradient covector phi_mu = d_mu phi.

    ``grad`` may be an analytic gradient callable; when omitted, phi_mu is
    produced by central differences of ``phi`` (the integrability of phi_mu
    is then automatic).
    """

    phi: callable
    grad: callable = None

    def grad_at(self, points, h=1e-3, order=4):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.grad is not None:
            return np.asarray(self.grad(points))
        n, d = points.shape
        offsets, coeffs = STENCILS[order]
        out = np.zeros((n, d))
        for mu in range(d):
            acc = 0.0
            for o, c in zip(offsets, coeffs):
                shifted = points.copy()
                shifted[:, mu] += o * h
                acc = acc + c * np.asarray(self.phi(shifted))
            out[:, mu] = acc / h
        return out


def weyl_connection(metric, weyl, points, h=1e-3, order=4):
    """Connection coefficients -{s,mn} + delta^s_m phi_n + delta^s_n phi_m
    + g_mn phi^s; symmetric in the lower pair."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    gamma = christoffel_fd(metric, points, h=h, order=order)
    phi_mu = weyl.grad_at(points, h=h, order=order)
    phi_up = metric.contract_inverse(points, phi_mu)
    g = metric.matrix_at(points)
    d = metric.dim
    eye = np.eye(d)
    out = -gamma
    out = out + np.einsum("sm,nv->nsmv", eye, phi_mu)
    out = out + np.einsum("sv,nm->nsmv", eye, phi_mu)
    out = out + np.einsum("nmv,ns->nsmv", g, phi_up)
    return out


def _partial(f, points, mu, h, order):
    offsets, coeffs = STENCILS[order]
    acc = 0.0
    for o, c in zip(offsets, coeffs):
        shifted = points.copy()
        shifted[:, mu] += o * h
        acc = acc + c * np.asarray(f(shifted))
    return acc / h


def _grad_block(f, points, indices, h, order):
    return np.stack([_partial(f, points, mu, h, order) for mu in indices], axis=-1)


def _flux_divergence(metric, grad_fn, points, h, order):
    """d_mu( sqrt(g) g^mu.nu w_nu ) with w_nu = grad_fn restricted per block."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    offsets, coeffs = STENCILS[order]
    total = np.zeros(n)
    for mu in range(d):
        sl, kind = metric.block_of(mu)
        idx = list(range(sl.start, sl.stop))
        local = mu - sl.start
        for o, c in zip(offsets, coeffs):
            shifted = points.copy()
            shifted[:, mu] += o * h
            w = grad_fn(shifted, idx)
            if kind == "spatial":
                flux = w[:, local] / metric.params.spatial_scale
            else:
                ginv = euler_metric_inverse(shifted[:, sl.start + 1]) / metric.params.radius**2
                flux = np.einsum("nb,nb->n", ginv[:, local, :], w)
            total += (c / h) * metric.sqrt_det_at(shifted) * flux
    return total


def weyl_curvature_from_density(
    metric,
    rho,
    points,
    rho_max=None,
    riemann=None,
    h=1e-3,
    order=4,
    floor_ratio=NODE_FLOOR_RATIO,
):
    """Weyl scalar curvature in the density form.

    ``rho`` is a vectorized callable over (N, dim) points.  Evaluations with
    rho below ``floor_ratio * rho_max`` raise :class:`NearNodeError`, since
    the curvature genuinely diverges on the nodal set.  ``riemann`` overrides
    the finite-difference Riemann scalar (pass 0.0 for the bare bracket).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    rho0 = np.asarray(rho(points))
    if rho_max is None:
        rho_max = float(np.max(rho0))
    floor = floor_ratio * rho_max
    if np.any(rho0 <= floor):
        bad = float(np.min(rho0))
        raise NearNodeError(
            f"density {bad:.3e} below nodal floor {floor:.3e}", rho=bad, floor=floor
        )

    grad = _grad_block(rho, points, range(metric.dim), h, order)
    quad = np.einsum("nm,nm->n", metric.contract_inverse(points, grad), grad)
    div = _flux_divergence(
        metric, lambda pts, idx: _grad_block(rho, pts, idx, h, order), points, h, order
    )
    n = metric.dim
    bracket = (n - 1.0) / (n - 2.0) * (
        quad / rho0**2 - 2.0 * div / (rho0 * metric.sqrt_det_at(points))
    )
    if riemann is None:
        riemann = riemann_scalar(metric, points[:1])[0]
    return riemann + bracket


def weyl_curvature_from_phi(metric, weyl, points, riemann=None, h=1e-3, order=4):
    """Weyl scalar curvature in the potential form (see module docstring)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi_mu = weyl.grad_at(points, h=h, order=order)
    quad = np.einsum("nm,nm->n", metric.contract_inverse(points, phi_mu), phi_mu)
    div = _flux_divergence(
        metric,
        lambda pts, idx: weyl.grad_at(pts, h=h, order=order)[:, idx],
        points,
        h,
        order,
    )
    n = metric.dim
    bracket = (n - 1.0) * (
        2.0 * div / metric.sqrt_det_at(points) - (n - 2.0) * quad
    )
    if riemann is None:
        riemann = riemann_scalar(metric, points[:1])[0]
    return riemann + bracket


def phi_from_rho(rho_value, n, norm=1.0):
    """Invert rho = A exp[-(n-2) phi]; additive over density factors."""
    rho_value = np.asarray(rho_value, dtype=float)
    if np.any(rho_value <= 0.0):
        raise ValueError("density must be positive to define the potential")
    return -np.log(rho_value / norm) / (n - 2.0)


# ---------------------------------------------------------------------------
# Rotations acting on Euler charts
# ---------------------------------------------------------------------------

def euler_to_matrix(alpha, beta, gamma):
    """Rotation matrix R_z(alpha) R_y(beta) R_z(gamma), vectorized."""
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float),
        np.asarray(beta, dtype=float),
        np.asarray(gamma, dtype=float),
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    R = np.empty(alpha.shape + (3, 3))
    R[..., 0, 0] = ca * cb * cg - sa * sg
    R[..., 0, 1] = -ca * cb * sg - sa * cg
    R[..., 0, 2] = ca * sb
    R[..., 1, 0] = sa * cb * cg + ca * sg
    R[..., 1, 1] = -sa * cb * sg + ca * cg
    R[..., 1, 2] = sa * sb
    R[..., 2, 0] = -sb * cg
    R[..., 2, 1] = sb * sg
    R[..., 2, 2] = cb
    return R


def matrix_to_euler(R, pole_eps=1e-12):
    """Extract (alpha, beta, gamma) in the same convention; at the poles the
    split between alpha and gamma is fixed by setting gamma = 0."""
    R = np.asarray(R, dtype=float)
    cb = np.clip(R[..., 2, 2], -1.0, 1.0)
    beta = np.arccos(cb)
    alpha = np.arctan2(R[..., 1, 2], R[..., 0, 2])
    gamma = np.arctan2(R[..., 2, 1], -R[..., 2, 0])
    north = cb > 1.0 - pole_eps
    south = cb < -1.0 + pole_eps
    if np.any(north) or np.any(south):
        alpha = np.where(north, np.arctan2(R[..., 1, 0], R[..., 0, 0]), alpha)
        gamma = np.where(north, 0.0, gamma)
        alpha = np.where(south, np.arctan2(-R[..., 0, 1], -R[..., 0, 0]), alpha)
        gamma = np.where(south, 0.0, gamma)
    return alpha % (2.0 * np.pi), beta, gamma % (2.0 * np.pi)


def rotate_orientation(alpha, beta, gamma, R):
    """Compose a fixed spatial rotation with an orientation: R . R(angles)."""
    return matrix_to_euler(R @ euler_to_matrix(alpha, beta, gamma))


def rotation_x(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
