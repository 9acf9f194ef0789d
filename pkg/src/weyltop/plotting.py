"""Figure rendering for the CLI report paths.

Each writer takes data already computed by the commands and saves a PNG next
to the delimited output; nothing here feeds back into the numerics.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_bell_scan_figure(path, deltas_deg, values, bound=2.0):
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(deltas_deg, values, color="#1f4e8c", lw=1.6)
    ax.axhline(bound, color="#b23a2f", ls="--", lw=1.0, label="local bound")
    violated = np.asarray(values) > bound
    if np.any(violated):
        ax.fill_between(
            deltas_deg, bound, values, where=violated, color="#b23a2f", alpha=0.18
        )
    ax.set_xlabel(r"analyzer half-difference $\Delta\vartheta$ [deg]")
    ax.set_ylabel(r"$F(\Delta\vartheta)$")
    ax.grid(True, alpha=0.4)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_curvature_map_figure(path, beta_a, dalpha, values):
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    mesh = ax.pcolormesh(dalpha, beta_a, values, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$R_W$  [$1/a^2$]")
    ax.set_xlabel(r"$\Delta\alpha$ [rad]")
    ax.set_ylabel(r"$\beta_A$ [rad]")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trajectories_figure(path, times, paths, max_members=12):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    k = min(max_members, paths.shape[1])
    for i in range(k):
        axes[0].plot(times, paths[:, i, 4], lw=0.9)
        axes[1].plot(times, paths[:, i, 1], lw=0.9)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel(r"$\beta_A$ [rad]")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel(r"$y_A$")
    for ax in axes:
        ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_coincidence_figure(path, table):
    deltas = np.linspace(0.0, np.pi, 241)
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.plot(np.rad2deg(deltas), 0.5 * np.sin(deltas / 2.0) ** 2, label=r"$\Phi_{uu}=\Phi_{dd}$")
    ax.plot(np.rad2deg(deltas), 0.5 * np.cos(deltas / 2.0) ** 2, label=r"$\Phi_{ud}=\Phi_{du}$")
    sep = np.rad2deg(table.theta_b - table.theta_a) % 360.0
    ax.plot([sep, sep], [0, 0.5], color="gray", ls=":", lw=1.0)
    ax.scatter([sep, sep], [table.phi_uu, table.phi_ud], color="#b23a2f", zorder=5, s=18)
    ax.set_xlabel(r"analyzer separation $\theta_B-\theta_A$ [deg]")
    ax.set_ylabel("coincidence flux")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_verify_figure(path, checks):
    names = [c.name for c in checks]
    ratios = [
        max(c.deviation / c.tolerance, 1e-16) if c.tolerance else 1e-16 for c in checks
    ]
    colors = ["#2e7d32" if c.passed else "#b23a2f" for c in checks]
    fig, ax = plt.subplots(figsize=(7.0, 0.42 * len(checks) + 1.2))
    ax.barh(range(len(checks)), ratios, color=colors)
    ax.axvline(1.0, color="k", lw=1.0)
    ax.set_yticks(range(len(checks)), names, fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("deviation / tolerance")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
