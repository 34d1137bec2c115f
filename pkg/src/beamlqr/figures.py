"""Figure rendering for the CLI report path.

Every command that emits CSVs can render companion PNGs next to them;
plots are deliberately plain (log-log coefficient decays, complex-plane
spectra, space-time fields) and carry no run-dependent metadata.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .kernels import ConvergenceReport
from .sim import Trajectory, reconstruct

__all__ = [
    "save_mode_table_figure",
    "save_kernel_figures",
    "save_spectrum_figure",
    "save_trajectory_figure",
    "save_field_figure",
    "save_tail_figure",
]

_SAVE_OPTS = {"dpi": 130, "metadata": {"Software": None}}


def _finish(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return str(path)


def save_mode_table_figure(path, rows) -> str:
    """Per-mode Riccati entries and gains against the mode index (log-log)."""
    n = np.array([row.n for row in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for key, pick in (("p11", lambda r: r.riccati.p11), ("p12", lambda r: r.riccati.p12), ("p22", lambda r: r.riccati.p22)):
        vals = np.array([abs(pick(r)) for r in rows])
        ax1.loglog(n[vals > 0], vals[vals > 0], "o-", ms=3, label=key)
    ax1.set_xlabel("mode n")
    ax1.set_ylabel("|entry|")
    ax1.set_title("Riccati entries")
    if ax1.lines:
        ax1.legend(fontsize=8)
    for key, pick in (("|k1|", lambda r: abs(r.gain.k1)), ("|k2|", lambda r: abs(r.gain.k2))):
        vals = np.array([pick(r) for r in rows])
        ax2.loglog(n[vals > 0], vals[vals > 0], "s-", ms=3, label=key)
    ax2.set_xlabel("mode n")
    ax2.set_ylabel("|gain|")
    ax2.set_title("feedback gains")
    if ax2.lines:
        ax2.legend(fontsize=8)
    return _finish(fig, path)


def save_kernel_figures(path_value, path_gain, x, P, K) -> list[str]:
    """Heatmaps of the value-kernel entries and line plot of the gain kernel."""
    x = np.asarray(x, dtype=float)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    for ax, (i, j, label) in zip(axes, ((0, 0, "P11"), (0, 1, "P12"), (1, 1, "P22"))):
        im = ax.pcolormesh(x, x, P[:, :, i, j].T, shading="auto", cmap="RdBu_r")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(label)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    out = [_finish(fig, path_value)]

    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.plot(x, K[:, 0], label="K1")
    ax.plot(x, K[:, 1], label="K2")
    ax.set_xlabel("x")
    ax.set_ylabel("gain kernel")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.legend(fontsize=8)
    out.append(_finish(fig, path_gain))
    return out


def save_spectrum_figure(path, spectra) -> str:
    """Open- vs closed-loop eigenvalues in the complex plane."""
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    lam = np.array([[s[1].mu_plus, s[1].mu_minus] for s in spectra]).ravel()
    mu = np.array([[s[2].mu_plus, s[2].mu_minus] for s in spectra]).ravel()
    ax.plot(lam.real, lam.imag, "x", ms=5, label="open loop")
    ax.plot(mu.real, mu.imag, "o", ms=3, label="closed loop")
    ax.axvline(0.0, color="k", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(fontsize=8)
    ax.set_title("spectrum")
    return _finish(fig, path)


def save_trajectory_figure(path, traj: Trajectory, max_modes: int = 4) -> str:
    """Boundary signal and the few largest modal amplitudes over time."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(traj.times, traj.u, lw=0.9)
    ax1.set_ylabel("u(t)")
    amp = np.sqrt(traj.states[:, :, 0] ** 2 + traj.states[:, :, 1] ** 2)
    biggest = np.argsort(amp.max(axis=0))[::-1][:max_modes]
    for i in sorted(biggest):
        if amp[:, i].max() > 0.0:
            ax2.plot(traj.times, amp[:, i], lw=0.9, label=f"mode {i + 1}")
    ax2.set_xlabel("t")
    ax2.set_ylabel("|a_n|")
    if ax2.lines:
        ax2.legend(fontsize=8)
    return _finish(fig, path)


def save_field_figure(path, traj: Trajectory, xgrid, snapshots: int = 120) -> str:
    """Space-time map of the reconstructed displacement."""
    x = np.asarray(xgrid, dtype=float)
    stride = max(1, len(traj) // snapshots)
    idx = np.arange(0, len(traj), stride)
    Z = np.empty((idx.size, x.size))
    for k, i in enumerate(idx):
        Z[k], _ = reconstruct(traj.state_at(int(i)), x)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    vmax = np.max(np.abs(Z)) or 1.0
    im = ax.pcolormesh(x, traj.times[idx], Z, shading="auto", cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(im, ax=ax, label="displacement")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    return _finish(fig, path)


def save_tail_figure(path, report: ConvergenceReport) -> str:
    """Coefficient tail against its bound, and the damping trend."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    n = report.modes.astype(float)
    ok = report.p12 > 0
    ax1.loglog(n[ok], report.p12[ok], "o", ms=3, label="p12")
    ax1.loglog(n, report.p12_bound, "-", lw=1, label="bound")
    ax1.set_xlabel("mode n")
    ax1.set_ylabel("coefficient")
    ax1.legend(fontsize=8)
    ax1.set_title("off-diagonal tail")
    okd = report.damping > 0
    ax2.loglog(n[okd], report.damping[okd], "s-", ms=3)
    ax2.set_xlabel("mode n")
    ax2.set_ylabel("|Re mu|")
    ax2.set_title(
        f"closed-loop damping (fit exponent {report.damping_growth_exponent:+.3f})"
    )
    return _finish(fig, path)
