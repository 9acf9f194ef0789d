"""Hamilton-Jacobi trajectory engine on the two-top configuration space.

Trajectories follow v^mu = g^mu.nu d_nu S / m with the analytic action
gradients of the closed-form states.  The engine integrates whole ensembles
as vectorized fourth-order Runge-Kutta sweeps with two guards applied after
every step:

* node guard: members whose orientational density drops below the nodal
  floor abort with a tagged status (velocities diverge there);
* chart guard: members drifting into the Euler-chart bands beta < 0.05 or
  beta > pi - 0.05 are continued through an alternative chart obtained by
  composing both tops with a fixed 90-degree reference rotation.  This is
  exact for rotation-invariant states; other states use a much tighter band
  and abort instead (their closed forms keep beta constant in practice).

Everything is deterministic: sampling is a pure function of the seed, and
members are reduced in index order.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ChartSingularityError, NearNodeError
from .geometry import (
    BlockMetric,
    EulerAngles,
    rotate_orientation,
    rotation_x,
    rotation_y,
)
from .wavefield import NODE_FLOOR, state_velocity

TWO_PI = 2.0 * np.pi

STATUS_COMPLETED = "completed"
STATUS_NODE = "aborted-near-node"
STATUS_CHART = "aborted-chart"

CHART_BAND = 0.05
CHART_BAND_TIGHT = 0.005

_CHART_ROTATIONS = (
    rotation_x(np.pi / 2.0),
    rotation_y(np.pi / 2.0),
    rotation_x(np.pi),
)


@dataclass(frozen=True)
class TwoTopConfig:
    """One point of the 12-dimensional configuration space."""

    r_a: tuple
    euler_a: EulerAngles
    r_b: tuple
    euler_b: EulerAngles

    def as_array(self):
        return np.concatenate(
            [
                np.asarray(self.r_a, dtype=float),
                self.euler_a.as_array(),
                np.asarray(self.r_b, dtype=float),
                self.euler_b.as_array(),
            ]
        )

    @classmethod
    def from_array(cls, q):
        q = np.asarray(q, dtype=float)
        return cls(
            r_a=tuple(q[0:3]),
            euler_a=EulerAngles(q[3], q[4], q[5]),
            r_b=tuple(q[6:9]),
            euler_b=EulerAngles(q[9], q[10], q[11]),
        )


@dataclass
class Trajectory:
    """Ordered samples of one integrated path."""

    times: np.ndarray
    points: np.ndarray
    status: str

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must increase strictly")


@dataclass
class Ensemble:
    """Initial configurations drawn from the state's density."""

    configs: np.ndarray
    t0: float
    seed: int


@dataclass
class EnsembleResult:
    configs: np.ndarray
    statuses: list
    t1: float
    chart_swaps: int = 0
    wrapped: int = 0
    paths: np.ndarray = None
    path_times: np.ndarray = None

    @property
    def aborted_fraction(self):
        n = len(self.statuses)
        return sum(s != STATUS_COMPLETED for s in self.statuses) / max(n, 1)


def velocity_field(state, q, t):
    """Guarded velocity field; raises the tagged errors instead of
    returning silent non-finite values."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    dens = state.angular_density(q)
    if np.any(dens < NODE_FLOOR):
        raise NearNodeError(
            "velocity requested inside the nodal guard", rho=float(np.min(dens)), floor=NODE_FLOOR
        )
    betas = np.concatenate([q[:, 4], q[:, 10]])
    if np.any(np.sin(betas) < np.sin(CHART_BAND_TIGHT)):
        raise ChartSingularityError("velocity requested inside the chart band")
    return state_velocity(state, q, t)


def _rk4(state, q, t, dt, transform):
    def v(qq, tt):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = state_velocity(state, qq, tt)
        if transform is not None:
            out = transform(out)
        return out

    k1 = v(q, t)
    k2 = v(q + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = v(q + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = v(q + dt * k3, t + dt)
    return q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _remap_chart(q, rows, rotations):
    """Rotate both tops of the selected members through reference charts
    until the betas clear the band; returns rows that stay stuck."""
    stuck = []
    for r in rows:
        for R in _CHART_ROTATIONS:
            aa, ba, ga = rotate_orientation(q[r, 3], q[r, 4], q[r, 5], R)
            ab, bb, gb = rotate_orientation(q[r, 9], q[r, 10], q[r, 11], R)
            if min(ba, np.pi - ba, bb, np.pi - bb) > 2.0 * CHART_BAND:
                q[r, 3:6] = (aa, ba, ga)
                q[r, 9:12] = (ab, bb, gb)
                rotations[r] = R @ rotations[r]
                break
        else:
            stuck.append(r)
    return stuck


def advance_ensemble(
    state,
    configs,
    t0,
    t1,
    dt=1e-3,
    velocity_transform=None,
    record_stride=None,
):
    """Integrate every member from t0 to t1; returns final configurations,
    per-member statuses and (optionally) recorded paths every
    ``record_stride`` steps.  Aborted members freeze at their last point."""
    q = np.array(configs, dtype=float, copy=True)
    if q.ndim == 1:
        q = q[None, :]
    n = q.shape[0]
    statuses = np.zeros(n, dtype=int)  # 0 running, 1 node, 2 chart
    rotations = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    chart_swaps = 0

    steps = int(np.ceil((t1 - t0) / dt - 1e-12))
    record = record_stride is not None
    if record:
        path_times = [t0]
        paths = [q.copy()]
        rot_paths = [rotations.copy()]

    def apply_guards(t):
        nonlocal chart_swaps
        running = statuses == 0
        bad = running & ~np.all(np.isfinite(q), axis=1)
        dens = np.full(n, np.inf)
        ok = running & ~bad
        if np.any(ok):
            dens[ok] = state.angular_density(q[ok])
        node = running & (bad | (dens < NODE_FLOOR))
        statuses[node] = 1
        running = statuses == 0
        band = CHART_BAND if state.rotation_invariant else CHART_BAND_TIGHT
        in_band = running & (
            (q[:, 4] < band)
            | (q[:, 4] > np.pi - band)
            | (q[:, 10] < band)
            | (q[:, 10] > np.pi - band)
        )
        rows = np.flatnonzero(in_band)
        if rows.size:
            if state.rotation_invariant:
                stuck = _remap_chart(q, rows, rotations)
                chart_swaps += rows.size - len(stuck)
                statuses[list(stuck)] = 2
            else:
                statuses[rows] = 2

    apply_guards(t0)
    t = t0
    for k in range(steps):
        step = min(dt, t1 - t)
        active = statuses == 0
        if not np.any(active):
            break
        q[active] = _rk4(state, q[active], t, step, velocity_transform)
        t += step
        apply_guards(t)
        if record and (k + 1) % record_stride == 0:
            path_times.append(t)
            paths.append(q.copy())
            rot_paths.append(rotations.copy())

    if record and path_times[-1] != t:
        path_times.append(t)
        paths.append(q.copy())
        rot_paths.append(rotations.copy())

    names = {0: STATUS_COMPLETED, 1: STATUS_NODE, 2: STATUS_CHART}
    wrapped = int(
        np.sum(
            np.any((q[:, [3, 5, 9, 11]] < 0.0) | (q[:, [3, 5, 9, 11]] >= TWO_PI), axis=1)
        )
    )
    result = EnsembleResult(
        configs=q,
        statuses=[names[s] for s in statuses],
        t1=t1,
        chart_swaps=chart_swaps,
        wrapped=wrapped,
    )
    result.rotations = rotations
    if record:
        result.paths = np.stack(paths)
        result.path_times = np.asarray(path_times)
        result.rot_paths = np.stack(rot_paths)
    return result


def integrate_trajectory(state, q0, t0, t1, dt=1e-3, record_stride=1):
    """Integrate a single configuration, recording every ``record_stride``
    steps; aborts near nodes and chart edges are tagged in ``status``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(q0, TwoTopConfig):
        q0 = q0.as_array()
    res = advance_ensemble(state, q0, t0, t1, dt=dt, record_stride=record_stride)
    return Trajectory(
        times=res.path_times,
        points=res.paths[:, 0, :],
        status=res.statuses[0],
    )


def sample_ensemble(state, n, seed, t0=0.0):
    """Draw initial configurations from the state's density (positions from
    the packet Gaussians, orientations from the angular factor);
    reproducible from the seed."""
    if n < 1:
        raise ValueError("ensemble size must be at least 1")
    rng = np.random.default_rng(seed)
    q = np.zeros((n, 12))
    for sl, packet in ((slice(0, 3), state.packet_a), (slice(6, 9), state.packet_b)):
        width = packet.sigma * abs(packet._spread(t0, state.params))
        center = np.asarray(packet.center) + np.asarray(packet.velocity) * t0
        q[:, sl] = center + rng.normal(0.0, width, (n, 3))
    angles = state.sample_angles(rng, n)
    q[:, 3:6] = angles[:, 0:3]
    q[:, 9:12] = angles[:, 3:6]
    return Ensemble(configs=q, t0=t0, seed=seed)


# ---------------------------------------------------------------------------
# Equivariance diagnostics
# ---------------------------------------------------------------------------

def singlet_alignment(q):
    """cos of the angle between the two tops' figure axes; the singlet
    angular density depends on the orientations only through this."""
    q = np.asarray(q)
    ba, bb = q[..., 4], q[..., 10]
    da = q[..., 9] - q[..., 3]
    return np.cos(ba) * np.cos(bb) + np.cos(da) * np.sin(ba) * np.sin(bb)


def singlet_alignment_bin_mass(edges):
    """Stationary bin masses of the alignment under the singlet density:
    the base measure makes the alignment uniform on [-1, 1], and the
    density reweights it by (1 - c), so P([c1,c2]) = int (1-c)/2 dc."""
    edges = np.asarray(edges, dtype=float)
    anti = lambda c: 0.5 * c - 0.25 * c**2
    return anti(edges[1:]) - anti(edges[:-1])


@dataclass
class EquivarianceReport:
    members: int
    aborted_fraction: float
    chart_swaps: int
    chi2_alignment: float
    p_alignment: float
    chi2_cos_beta: float
    p_cos_beta: float
    max_marginal_deviation: float
    p_gamma_drift: float

    @property
    def passed(self):
        return self.p_alignment > 0.01 and self.p_cos_beta > 0.01


def equivariance_check(
    state, ensemble, t1, dt=5e-3, n_bins=20, velocity_transform=None
):
    """Push the ensemble to t1 and compare empirical angular marginals with
    the stationary density (chi-squared over alignment and cos beta bins).

    Aborts above 1 percent of members are a configuration error.
    """
    if not getattr(state, "rotation_invariant", False):
        raise NotImplementedError("equivariance marginals implemented for the singlet")
    res = advance_ensemble(
        state,
        ensemble.configs,
        ensemble.t0,
        t1,
        dt=dt,
        velocity_transform=velocity_transform,
    )
    if res.aborted_fraction > 0.01:
        raise ValueError(
            f"{res.aborted_fraction:.1%} of members aborted; configuration error"
        )
    keep = np.array([s == STATUS_COMPLETED for s in res.statuses])
    q = res.configs[keep]
    m = q.shape[0]

    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    c = singlet_alignment(q)
    counts, _ = np.histogram(np.clip(c, -1.0, 1.0), bins=edges)
    expected = m * singlet_alignment_bin_mass(edges)
    chi2_c = float(np.sum((counts - expected) ** 2 / expected))
    p_c = float(stats.chi2.sf(chi2_c, n_bins - 1))

    # cos(beta_A) in the reference chart: undo accumulated chart rotations
    rot_t = np.swapaxes(res.rotations[keep], 1, 2)
    aa, ba, _ = rotate_orientation(q[:, 3], q[:, 4], q[:, 5], rot_t)
    counts_b, _ = np.histogram(np.cos(ba), bins=edges)
    expected_b = np.full(n_bins, m / n_bins)
    chi2_b = float(np.sum((counts_b - expected_b) ** 2 / expected_b))
    p_b = float(stats.chi2.sf(chi2_b, n_bins - 1))

    dev = max(
        float(np.max(np.abs(counts / m - singlet_alignment_bin_mass(edges)))),
        float(np.max(np.abs(counts_b / m - 1.0 / n_bins))),
    )

    metric = BlockMetric(2, state.params)
    v = state_velocity(state, q, res.t1)
    momenta = np.einsum("nab,nb->na", metric.matrix_at(q), v) * state.params.mass
    half = 0.5 * state.params.hbar
    drift = float(
        max(np.max(np.abs(momenta[:, 5] - half)), np.max(np.abs(momenta[:, 11] - half)))
    )

    return EquivarianceReport(
        members=m,
        aborted_fraction=res.aborted_fraction,
        chart_swaps=res.chart_swaps,
        chi2_alignment=chi2_c,
        p_alignment=p_c,
        chi2_cos_beta=chi2_b,
        p_cos_beta=p_b,
        max_marginal_deviation=dev,
        p_gamma_drift=drift,
    )
