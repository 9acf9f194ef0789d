"""Command-line front end.

Subcommands: ``verify`` (run the full invariant suite and write a JSON
report), ``bell-scan`` (Redhead functional over analyzer half-differences),
``trajectories`` (ensemble integration with conservation and equivariance
summaries), ``curvature-map`` (Weyl curvature on a 2-D orientation slice)
and ``coincidence`` (one analyzer pair).  Every report path writes the
delimited data plus a rendered figure; outputs embed the seed, a config
echo and the code version, and re-running an identical configuration
reproduces the numeric payloads byte for byte.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 numeric abort.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ChartSingularityError,
    ContractViolationError,
    NearNodeError,
    NumericError,
    ResolutionError,
    TrajectoryAbort,
)
from .geometry import (
    BlockMetric,
    TopParams,
    WeylField,
    euler_metric,
    gauge_rescale,
    phi_from_rho,
    riemann_scalar,
    rotate_orientation,
    triad,
    weyl_curvature_from_density,
    weyl_curvature_from_phi,
    spin_apply,
)
from .measurement import (
    PlanePatch,
    bell_scan,
    closed_form_fluxes,
    coincidence_fluxes,
    correlation,
    detector_flux,
    redhead_functional,
    sga_transform,
)
from .numerics import build_angular_grid, integrate_angular
from .wavefield import (
    GaussianPacket,
    ProductState,
    SingletState,
    SpinorCoeffs,
    apply_hamiltonian,
    continuity_residual,
    hje_residual,
    top_frequency,
    wigner_down,
    wigner_up,
)
from . import dynamics as dyn
from . import plotting

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (
    NearNodeError,
    ChartSingularityError,
    NumericError,
    ResolutionError,
    TrajectoryAbort,
    ContractViolationError,
)


# ---------------------------------------------------------------------------
# Shared option handling and output writers
# ---------------------------------------------------------------------------

def _parse_grid(text):
    try:
        nb, na, ng = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be 'NB,NA,NG', got {text!r}")
    return nb, na, ng


def _parse_range(text):
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be 'A:B', got {text!r}")
    return lo, hi


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _config_echo(args, keys):
    return ";".join(f"{k}={getattr(args, k)}" for k in keys if hasattr(args, k))


def _meta(args, keys):
    return {
        "version": __version__,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "config": _config_echo(args, keys),
    }


def write_csv(path, meta, header, rows):
    lines = [f"# {k} = {v}" for k, v in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_config(path):
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line must be key=value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


def _apply_config(parser, args, argv):
    """Config file sets anything the command line did not; flags win."""
    if not getattr(args, "config", None):
        return args
    values = _load_config(args.config)
    for key, raw in values.items():
        if not hasattr(args, key):
            parser.error(f"unknown config key {key!r}")
        if f"--{key.replace('_', '-')}" in argv:
            continue  # explicit flag overrides the file
        current = getattr(args, key)
        if isinstance(current, bool):
            val = raw.lower() in ("1", "true", "yes")
        elif isinstance(current, int) and not isinstance(current, bool):
            val = int(raw)
        elif isinstance(current, float):
            val = float(raw)
        elif isinstance(current, tuple):
            val = _parse_grid(raw) if len(current) == 3 else _parse_range(raw)
        else:
            val = raw
        setattr(args, key, val)
    return args


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _make_state(name, params):
    if name == "singlet":
        return SingletState(params=params)
    if name == "product":
        return ProductState(params=params)
    raise ValueError(f"unknown state {name!r}")


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    value: float
    expected: float
    tolerance: float
    deviation: float
    passed: bool
    detail: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "deviation": self.deviation,
            "passed": bool(self.passed),
            "detail": self.detail,
        }


def _check(name, value, expected, tol, detail=""):
    dev = abs(value - expected)
    return CheckResult(name, float(value), float(expected), tol, float(dev), dev <= tol, detail)


def _check_below(name, value, tol, detail=""):
    return CheckResult(name, float(value), 0.0, tol, float(abs(value)), abs(value) <= tol, detail)


def _random_interior_points(rng, n, particles):
    q = np.zeros((n, 6 * particles))
    for p in range(particles):
        q[:, 6 * p : 6 * p + 3] = rng.uniform(-1.0, 1.0, (n, 3))
        q[:, 6 * p + 3] = rng.uniform(0.0, 2.0 * np.pi, n)
        q[:, 6 * p + 4] = rng.uniform(0.35, np.pi - 0.35, n)
        q[:, 6 * p + 5] = rng.uniform(0.0, 2.0 * np.pi, n)
    return q


def _sample_offnode(state, rng, n, t, factor_floor=0.15):
    out = []
    have = 0
    while have < n:
        q = _random_interior_points(rng, 2 * n, 2)
        for sl, packet in ((slice(0, 3), state.packet_a), (slice(6, 9), state.packet_b)):
            center = np.asarray(packet.center) + np.asarray(packet.velocity) * t
            q[:, sl] = center + rng.normal(0.0, packet.sigma, (2 * n, 3))
        keep = state.angular_factor(q) > factor_floor
        out.append(q[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:n]


def run_verify_checks(seed=1234, inject_failure=False):
    rng = np.random.default_rng(seed)
    params = TopParams()
    checks = []

    # geometry: curvature of the block metrics
    m1 = BlockMetric(1, params)
    pts6 = _random_interior_points(rng, 25, 1)
    r6 = riemann_scalar(m1, pts6)
    checks.append(
        _check("riemann_scalar_single_top", float(np.mean(r6)), 1.5, 1e-4,
               detail=f"max rel dev {np.max(np.abs(r6 - 1.5)) / 1.5:.3e} over 25 points")
    )
    m2 = BlockMetric(2, params)
    pts12 = _random_interior_points(rng, 4, 2)
    r12 = riemann_scalar(m2, pts12)
    checks.append(
        _check("riemann_scalar_two_tops", float(np.mean(r12)), 3.0, 1e-4,
               detail=f"max rel dev {np.max(np.abs(r12 - 3.0)) / 3.0:.3e} over 4 points")
    )

    # triad identities
    a, b, g = (rng.uniform(0, 2 * np.pi, 1000), rng.uniform(0.05, np.pi - 0.05, 1000),
               rng.uniform(0, 2 * np.pi, 1000))
    tri = triad(a, b, g)
    dyadic = np.max(np.abs(np.einsum("nia,nib->nab", tri.lam, tri.lam) - euler_metric(b)))
    inverse = np.max(np.abs(np.einsum("nai,nib->nab", tri.mu, tri.lam) - np.eye(3)))
    checks.append(_check_below("triad_dyadic_identity", max(dyadic, inverse), 1e-12))

    # spin algebra on the Wigner basis
    sample = (rng.uniform(0, 2 * np.pi, 40), rng.uniform(0.3, np.pi - 0.3, 40),
              rng.uniform(0, 2 * np.pi, 40))
    worst = 0.0
    eps = {(0, 1): 2, (1, 2): 0, (2, 0): 1}
    for f in (wigner_up, wigner_down):
        for (i, j), k in eps.items():
            lhs = spin_apply(i, spin_apply(j, f))(*sample) - spin_apply(j, spin_apply(i, f))(*sample)
            rhs = 1j * spin_apply(k, f)(*sample)  # [s_i, s_j] = i s_k at spin 1/2
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    checks.append(_check_below("spin_commutators", worst, 1e-5))

    # quadrature and Wigner orthonormality
    grid = build_angular_grid(8, 8, 8)
    checks.append(_check("quadrature_total_measure",
                         float(np.real(integrate_angular(grid, lambda *ang: np.ones_like(ang[0])))),
                         2.0, 1e-12))
    gram = np.array([
        [integrate_angular(grid, lambda *ang: wigner_up(*ang) * np.conj(wigner_up(*ang))),
         integrate_angular(grid, lambda *ang: wigner_up(*ang) * np.conj(wigner_down(*ang)))],
        [integrate_angular(grid, lambda *ang: wigner_down(*ang) * np.conj(wigner_up(*ang))),
         integrate_angular(grid, lambda *ang: wigner_down(*ang) * np.conj(wigner_down(*ang)))],
    ])
    checks.append(_check_below("wigner_gram_identity", float(np.max(np.abs(gram - np.eye(2)))), 1e-10))

    # spectral check of the angular wave operator
    spectral_grid = build_angular_grid(32, 16, 16)
    omega = top_frequency(params)
    for name, f in (("spectral_up", wigner_up), ("spectral_down", wigner_down)):
        hf = apply_hamiltonian(f, spectral_grid, params)
        ratio = hf / f(spectral_grid.alphas, spectral_grid.betas, spectral_grid.gammas)
        dev = float(np.max(np.abs(ratio - omega)) / omega)
        checks.append(CheckResult(name, float(np.real(np.mean(ratio))), omega, 1e-5, dev, dev <= 1e-5,
                                  detail="eigenvalue of the Wigner entry"))
    hc = apply_hamiltonian(lambda *ang: np.ones_like(ang[0], dtype=complex), spectral_grid, params)
    checks.append(_check("hamiltonian_on_constant", float(np.real(hc[0])), 0.15, 1e-6,
                         detail="curvature coupling alone: xi(6) R"))

    # Weyl curvature: singlet structure and the two printed forms
    state = SingletState(params=params)
    q = _random_interior_points(rng, 60, 2)
    q = q[state.angular_factor(q) > 0.25][:40]
    bracket = state.angular_factor(q)
    rw = weyl_curvature_from_density(m2, state.angular_density, q, rho_max=0.5, riemann=3.0)
    design = np.column_stack([np.ones(len(q)), 1.0 / bracket])
    coef, *_ = np.linalg.lstsq(design, rw, rcond=None)
    checks.append(_check("singlet_curvature_constant", float(coef[0]), 9.6, 1e-3))
    checks.append(_check("singlet_curvature_coupling_magnitude", float(abs(coef[1])), 4.4, 1e-3,
                         detail=f"oracle sign of the coupling term: {np.sign(coef[1]):+.0f}"))

    phi_field = WeylField(phi=lambda pts: phi_from_rho(state.angular_density(pts), 12))
    rw_phi = weyl_curvature_from_phi(m2, phi_field, q[:10], riemann=3.0)
    checks.append(_check_below("curvature_forms_agree", float(np.max(np.abs(rw_phi - rw[:10]))), 1e-6))

    product = ProductState(params=params)
    qa = q[:1].repeat(9, axis=0)
    betas = np.linspace(0.7, 2.3, 3)
    qa[:, 4] = np.repeat(betas, 3)
    qa[:, 10] = np.tile(betas, 3)
    rw_prod = weyl_curvature_from_density(m2, product.angular_density, qa, rho_max=1.0, riemann=3.0).reshape(3, 3)
    mixed = rw_prod[1:, 1:] - rw_prod[:-1, 1:] - rw_prod[1:, :-1] + rw_prod[:-1, :-1]
    checks.append(_check_below("product_curvature_separable", float(np.max(np.abs(mixed))), 1e-5,
                               detail="mixed second differences across (beta_A, beta_B)"))

    # exact-solution residuals
    t = 0.6
    qs = _sample_offnode(state, rng, 50, t)
    checks.append(_check_below("hje_residual_singlet", float(np.max(hje_residual(state, qs, t))), 1e-4))
    checks.append(_check_below("continuity_residual_singlet",
                               float(np.max(continuity_residual(state, qs, t))), 1e-4))
    checks.append(_check_below("hje_residual_product", float(np.max(hje_residual(product, qs, t))), 1e-4))

    # coincidence statistics
    worst_flux, worst_total = 0.0, 0.0
    for _ in range(10):
        ta, tb = rng.uniform(0.0, 2.0 * np.pi, 2)
        tab = coincidence_fluxes(ta, tb, grid)
        ref = closed_form_fluxes(ta, tb)
        worst_flux = max(
            worst_flux,
            abs(tab.phi_uu - ref.phi_uu), abs(tab.phi_ud - ref.phi_ud),
            abs(tab.phi_du - ref.phi_du), abs(tab.phi_dd - ref.phi_dd),
        )
        worst_total = max(worst_total, abs(tab.total() - 1.0))
    checks.append(_check_below("coincidence_closed_forms", worst_flux, 1e-10))
    checks.append(_check_below("coincidence_table_closure", worst_total, 1e-8))

    checks.append(_check("bell_maximum", redhead_functional(np.pi / 6.0, grid), 2.5, 1e-6,
                         detail="Redhead functional at 30 degrees"))
    interior = np.array([redhead_functional(d, grid) for d in np.deg2rad(np.arange(1.0, 45.0, 4.0))])
    checks.append(CheckResult("bell_interior_violation", float(interior.min()), 2.0, 0.0,
                              float(interior.min() - 2.0), bool(np.all(interior > 2.0)),
                              detail="sampled every 4 degrees inside (0, 45)"))
    outside = np.array([redhead_functional(d, grid) for d in np.deg2rad(np.arange(45.0, 90.5, 5.0))])
    checks.append(CheckResult("bell_bound_outside", float(outside.max()), 2.0, 1e-9,
                              float(max(outside.max() - 2.0, 0.0)), bool(outside.max() <= 2.0 + 1e-9),
                              detail="no violation on [45, 90] degrees"))

    # gauge invariance
    rescaled = gauge_rescale(4.0, params)
    checks.append(_check("gauge_invariant_frequency", top_frequency(rescaled), top_frequency(params), 1e-10))
    packet = GaussianPacket(center=(0.0, -4.0, 0.0), velocity=(0.0, 1.0, 0.0), sigma=1.5)
    patch = PlanePatch(center=(0.0, -4.0, 0.0), normal=(0.0, 1.0, 0.0), half_u=9.0, half_v=9.0)
    profile = lambda *ang: np.abs(wigner_up(*ang)) ** 2
    f_base = detector_flux(packet, profile, patch, grid, params=params)
    f_resc = detector_flux(packet, profile, patch, grid, params=rescaled)
    checks.append(_check_below("gauge_invariant_flux", abs(f_resc - f_base) / abs(f_base), 1e-10,
                               detail="relative change under lambda = 4"))
    ens = dyn.sample_ensemble(state, 3, seed=seed)
    end_base = dyn.advance_ensemble(state, ens.configs, 0.0, 0.5, dt=2e-3).configs
    state_resc = SingletState(packet_a=state.packet_a, packet_b=state.packet_b, params=rescaled)
    end_resc = dyn.advance_ensemble(state_resc, ens.configs, 0.0, 0.5, dt=2e-3).configs
    checks.append(_check_below("gauge_invariant_trajectories",
                               float(np.max(np.abs(end_base - end_resc))), 1e-10))

    # filter unitarity
    ch = sga_transform(SpinorCoeffs(0.6 + 0.0j, 0.8j), 0.77)
    unit = abs(abs(ch.up_amplitude) ** 2 + abs(ch.down_amplitude) ** 2 - 1.0)
    checks.append(_check_below("sga_unitarity", unit, 1e-12))

    if inject_failure:
        checks.append(CheckResult("injected_failure", 1.0, 0.0, 1e-12, 1.0, False,
                                  detail="tolerance tampering probe (test mode)"))
    return checks


def cmd_verify(args):
    out = _outdir(args)
    checks = run_verify_checks(seed=args.seed, inject_failure=args.inject_failure)
    for c in checks:
        mark = "ok  " if c.passed else "FAIL"
        print(f"[{mark}] {c.name}: value={c.value:.12g} expected={c.expected:.12g} "
              f"dev={c.deviation:.3e} tol={c.tolerance:.1e}")
    all_passed = all(c.passed for c in checks)
    payload = {
        "meta": _meta(args, ("seed", "out")),
        "checks": [c.as_dict() for c in checks],
        "all_passed": all_passed,
    }
    write_json(out / "verify_report.json", payload)
    if not args.no_figures:
        plotting.save_verify_figure(out / "verify_report.png", checks)
    print(f"report: {out / 'verify_report.json'}  all_passed={all_passed}")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILURE


# ---------------------------------------------------------------------------
# bell-scan
# ---------------------------------------------------------------------------

def cmd_bell_scan(args, parser):
    lo, hi = args.range
    if not (0.0 <= lo < hi <= 90.0):
        parser.error(f"--range must satisfy 0 <= A < B <= 90 degrees, got {lo}:{hi}")
    if args.step <= 0:
        parser.error("--step must be positive")
    out = _outdir(args)
    grid = build_angular_grid(*args.grid)
    deltas_deg = np.arange(lo, hi + 0.5 * args.step, args.step)
    result = bell_scan(np.deg2rad(deltas_deg), grid)
    meta = _meta(args, ("range", "step", "grid", "out", "format"))
    rows = [
        (d, f, int(v))
        for d, f, v in zip(deltas_deg, result.values, result.violated)
    ]
    if args.format == "json":
        payload = {
            "meta": meta,
            "rows": [dict(zip(("delta_theta_deg", "F", "violated"), r)) for r in rows],
            "max_F": result.max_value,
            "argmax_deg": float(np.rad2deg(result.argmax)),
        }
        write_json(out / "bell_scan.json", payload)
    else:
        write_csv(out / "bell_scan.csv", meta, ("delta_theta_deg", "F", "violated"), rows)
    if not args.no_figures:
        plotting.save_bell_scan_figure(out / "bell_scan.png", deltas_deg, result.values)
    print(f"max F = {result.max_value:.12g} at {np.rad2deg(result.argmax):.6g} deg; "
          f"{int(result.violated.sum())} of {len(rows)} points violate the bound")
    return EXIT_OK


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def cmd_trajectories(args):
    out = _outdir(args)
    params = TopParams()
    state = _make_state(args.state, params)
    ens = dyn.sample_ensemble(state, args.ensemble, seed=args.seed)
    res = dyn.advance_ensemble(
        state, ens.configs, ens.t0, args.t1, dt=args.dt, record_stride=args.stride
    )

    # report every sample in the reference chart
    S, N = res.paths.shape[0], res.paths.shape[1]
    header = ("member", "t", "x_A", "y_A", "z_A", "alpha_A", "beta_A", "gamma_A",
              "x_B", "y_B", "z_B", "alpha_B", "beta_B", "gamma_B", "status")
    meta = _meta(args, ("state", "ensemble", "seed", "dt", "t1", "stride", "out"))
    rows = []
    drift = 0.0
    metric = BlockMetric(2, params)
    for i in range(N):
        for k in range(S):
            qk = res.paths[k, i].copy()
            rot = res.rot_paths[k, i]
            if not np.allclose(rot, np.eye(3)):
                back = rot.T
                qk[3:6] = rotate_orientation(qk[3], qk[4], qk[5], back)
                qk[9:12] = rotate_orientation(qk[9], qk[10], qk[11], back)
            rows.append((i, res.path_times[k], *qk, res.statuses[i]))
    for k in range(S):
        qk = res.paths[k]
        ok = state.angular_density(qk) > 1e-6
        if np.any(ok):
            v = dyn.state_velocity(state, qk[ok], res.path_times[k])
            mom = np.einsum("nab,nb->na", metric.matrix_at(qk[ok]), v) * params.mass
            half = 0.5 * params.hbar
            drift = max(drift, float(np.max(np.abs(mom[:, [5, 11]] - half))))

    write_csv(out / "trajectories.csv", meta, header, rows)

    summary = {
        "meta": meta,
        "members": N,
        "statuses": {s: res.statuses.count(s) for s in set(res.statuses)},
        "aborted_fraction": res.aborted_fraction,
        "chart_swaps": res.chart_swaps,
        "wrapped_members": res.wrapped,
        "p_gamma_drift_max": drift,
    }
    if state.rotation_invariant:
        try:
            rep = dyn.equivariance_check(state, ens, args.t1, dt=args.dt)
            summary["equivariance"] = {
                "chi2_alignment": rep.chi2_alignment,
                "p_alignment": rep.p_alignment,
                "chi2_cos_beta": rep.chi2_cos_beta,
                "p_cos_beta": rep.p_cos_beta,
            }
        except ValueError as exc:
            summary["equivariance"] = {"error": str(exc)}
    write_json(out / "trajectories_summary.json", summary)
    if not args.no_figures:
        plotting.save_trajectories_figure(out / "trajectories.png", res.path_times, res.paths)
    print(f"{N} members to t={args.t1}: aborted {res.aborted_fraction:.2%}, "
          f"chart swaps {res.chart_swaps}, p_gamma drift {drift:.3e}")
    if res.aborted_fraction > 0.01:
        print("warning: more than 1% of members aborted", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------------------
# curvature-map
# ---------------------------------------------------------------------------

def cmd_curvature_map(args, parser):
    out = _outdir(args)
    params = TopParams()
    try:
        nb, nd = (int(p) for p in args.slice.split("x"))
    except ValueError:
        parser.error(f"--slice must be 'NBxND', got {args.slice!r}")
    margin = 0.15
    if not margin < args.beta_b < np.pi - margin:
        parser.error("--beta-b must avoid the chart margins")
    beta_a = np.linspace(margin, np.pi - margin, nb)
    dalpha = np.linspace(0.0, 2.0 * np.pi, nd, endpoint=False)
    bb, dd = np.meshgrid(beta_a, dalpha, indexing="ij")
    q = np.zeros((nb * nd, 12))
    q[:, 4] = bb.ravel()
    q[:, 9] = dd.ravel()
    q[:, 10] = args.beta_b

    metric = BlockMetric(2, params)
    if args.state == "constant":
        rho_fn, rho_max = (lambda pts: np.ones(pts.shape[0])), 1.0
    else:
        st = _make_state(args.state, params)
        rho_fn, rho_max = st.angular_density, (0.5 if args.state == "singlet" else 1.0)

    dens = rho_fn(q)
    valid = dens > 1e-6 * rho_max
    rw = np.full(nb * nd, np.nan)
    if np.any(valid):
        rw[valid] = weyl_curvature_from_density(
            metric, rho_fn, q[valid], rho_max=rho_max, riemann=3.0
        )

    meta = _meta(args, ("state", "beta_b", "slice", "out"))
    rows = [
        (q[i, 4], q[i, 9], rw[i] if valid[i] else np.nan, int(valid[i]))
        for i in range(nb * nd)
    ]
    write_csv(out / "curvature_map.csv", meta, ("beta_A", "dalpha", "R_W", "valid"), rows)

    summary = {"meta": meta, "valid_points": int(valid.sum()), "invalid_points": int((~valid).sum())}
    if args.state == "singlet":
        st = _make_state("singlet", params)
        bracket = st.angular_factor(q[valid])
        design = np.column_stack([np.ones(bracket.size), 1.0 / bracket])
        coef, *_ = np.linalg.lstsq(design, rw[valid], rcond=None)
        resid = float(np.max(np.abs(rw[valid] - design @ coef)))
        summary["fit"] = {
            "constant": float(coef[0]),
            "coupling": float(coef[1]),
            "coupling_magnitude": float(abs(coef[1])),
            "coupling_sign": float(np.sign(coef[1])),
            "max_fit_residual": resid,
        }
        print(f"singlet fit: constant {coef[0]:.6f}, coupling {coef[1]:.6f} "
              f"(magnitude expected 4.4, sign from the numerical oracle)")
    elif args.state == "product":
        probe_b = np.linspace(0.7, 2.4, 4)
        qa = np.zeros((16, 12))
        qa[:, 4] = np.repeat(probe_b, 4)
        qa[:, 10] = np.tile(probe_b, 4)
        rwp = weyl_curvature_from_density(
            metric, rho_fn, qa, rho_max=rho_max, riemann=3.0
        ).reshape(4, 4)
        mixed = rwp[1:, 1:] - rwp[:-1, 1:] - rwp[1:, :-1] + rwp[:-1, :-1]
        summary["separability_mixed_difference_max"] = float(np.max(np.abs(mixed)))
        print(f"product separability: max mixed difference {summary['separability_mixed_difference_max']:.3e}")
    write_json(out / "curvature_map_summary.json", summary)
    if not args.no_figures:
        plotting.save_curvature_map_figure(
            out / "curvature_map.png", beta_a, dalpha, rw.reshape(nb, nd)
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# coincidence
# ---------------------------------------------------------------------------

def cmd_coincidence(args):
    out = _outdir(args)
    grid = build_angular_grid(*args.grid)
    table = coincidence_fluxes(np.deg2rad(args.theta_a), np.deg2rad(args.theta_b), grid)
    payload = {"meta": _meta(args, ("theta_a", "theta_b", "grid", "out"))}
    payload.update(table.as_dict())
    write_json(out / "coincidence.json", payload)
    if not args.no_figures:
        plotting.save_coincidence_figure(out / "coincidence.png", table)
    print(f"theta_A={args.theta_a} deg, theta_B={args.theta_b} deg: "
          f"uu={table.phi_uu:.12g} ud={table.phi_ud:.12g} du={table.phi_du:.12g} "
          f"dd={table.phi_dd:.12g} E={correlation(table):.12g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="weyltop",
        description="Spin-1/2 top geometrodynamics: verification suite, Bell scans, "
                    "trajectory ensembles and curvature maps.",
    )
    parser.add_argument("--version", action="version", version=f"weyltop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=42, help="random seed (recorded in outputs)")
        p.add_argument("--config", default=None, help="flat key=value file; flags override it")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("verify", help="run the invariant suite, write a JSON report")
    common(p)
    p.add_argument("--inject-failure", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("bell-scan", help="Redhead functional over analyzer half-differences")
    common(p)
    p.add_argument("--range", type=_parse_range, default=(0.0, 45.0),
                   help="degrees, 'A:B' within [0, 90]")
    p.add_argument("--step", type=float, default=1.0, help="degrees")
    p.add_argument("--grid", type=_parse_grid, default=(8, 8, 8), help="'NB,NA,NG' quadrature nodes")

    p = sub.add_parser("trajectories", help="integrate a seeded ensemble, dump CSV + summary")
    common(p)
    p.add_argument("--state", choices=("singlet", "product"), default="singlet")
    p.add_argument("--ensemble", type=int, default=100, help="member count")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--stride", type=int, default=20, help="record every N steps")

    p = sub.add_parser("curvature-map", help="Weyl curvature on a beta_A x dalpha slice")
    common(p)
    p.add_argument("--state", choices=("singlet", "product", "constant"), default="singlet")
    p.add_argument("--beta-b", dest="beta_b", type=float, default=1.2, help="fixed beta_B (rad)")
    p.add_argument("--slice", default="48x48", help="'NBxND' slice resolution")

    p = sub.add_parser("coincidence", help="one analyzer pair: fluxes and correlation")
    common(p)
    p.add_argument("--theta-a", dest="theta_a", type=float, default=0.0, help="degrees")
    p.add_argument("--theta-b", dest="theta_b", type=float, default=45.0, help="degrees")
    p.add_argument("--grid", type=_parse_grid, default=(8, 8, 8))

    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, args, argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK

    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "bell-scan":
            return cmd_bell_scan(args, parser)
        if args.command == "trajectories":
            return cmd_trajectories(args)
        if args.command == "curvature-map":
            return cmd_curvature_map(args, parser)
        if args.command == "coincidence":
            return cmd_coincidence(args)
    except SystemExit as exc:  # parser.error inside a command
        return int(exc.code) if exc.code else EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
