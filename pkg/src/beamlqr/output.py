"""Delimited output: deterministic CSV writers.

Numbers are written with 17 significant digits and a ``.`` decimal
separator regardless of locale, so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import numpy as np

from .sim import Trajectory, reconstruct

__all__ = [
    "fmt_float",
    "write_csv",
    "write_modes_csv",
    "write_kernel_value_csv",
    "write_kernel_gain_csv",
    "write_spectrum_csv",
    "write_trajectory_csv",
    "write_field_csv",
]


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return fmt_float(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def write_modes_csv(path, rows) -> None:
    """Mode table: Riccati entries, gains, residuals and the + branch eigenvalue."""
    header = ["n", "p11", "p12", "p22", "k1", "k2", "res11", "res12", "res22", "mu_re", "mu_im"]
    out = []
    for row in rows:
        P, K, mu = row.riccati, row.gain, row.closed_loop.mu_plus
        res = P.residuals
        out.append(
            [row.n, P.p11, P.p12, P.p22, K.k1, K.k2, res[0], res[1], res[3], mu.real, mu.imag]
        )
    write_csv(path, header, out)


def write_kernel_value_csv(path, x, P) -> None:
    """Sampled symmetric 2x2 kernel: columns x1, x2, P11, P12, P22."""
    x = np.asarray(x, dtype=float)
    rows = []
    for i, x1 in enumerate(x):
        for j, x2 in enumerate(x):
            b = P[i, j]
            rows.append([x1, x2, b[0, 0], b[0, 1], b[1, 1]])
    write_csv(path, ["x1", "x2", "P11", "P12", "P22"], rows)


def write_kernel_gain_csv(path, x, K) -> None:
    x = np.asarray(x, dtype=float)
    rows = [[xi, K[i, 0], K[i, 1]] for i, xi in enumerate(x)]
    write_csv(path, ["x", "K1", "K2"], rows)


def write_spectrum_csv(path, spectra) -> None:
    """Open- and closed-loop eigenvalues per mode, both branches."""
    header = [
        "n",
        "lam_plus_re",
        "lam_plus_im",
        "lam_minus_re",
        "lam_minus_im",
        "mu_plus_re",
        "mu_plus_im",
        "mu_minus_re",
        "mu_minus_im",
    ]
    rows = []
    for n, lam, mu in spectra:
        rows.append(
            [
                n,
                lam.mu_plus.real,
                lam.mu_plus.imag,
                lam.mu_minus.real,
                lam.mu_minus.imag,
                mu.mu_plus.real,
                mu.mu_plus.imag,
                mu.mu_minus.real,
                mu.mu_minus.imag,
            ]
        )
    write_csv(path, header, rows)


def write_trajectory_csv(path, traj: Trajectory, fmt: str = "wide") -> None:
    """Trajectory in wide (t,u,a1_pos,a1_vel,...) or long (t,u,mode,a_pos,a_vel) form."""
    if fmt == "wide":
        header = ["t", "u"]
        for n in range(1, traj.N + 1):
            header += [f"a{n}_pos", f"a{n}_vel"]
        rows = (
            [traj.times[i], traj.u[i], *traj.states[i].reshape(-1)]
            for i in range(len(traj))
        )
        write_csv(path, header, rows)
    elif fmt == "long":
        header = ["t", "u", "mode", "a_pos", "a_vel"]
        rows = (
            [traj.times[i], traj.u[i], n, traj.states[i, n - 1, 0], traj.states[i, n - 1, 1]]
            for i in range(len(traj))
            for n in range(1, traj.N + 1)
        )
        write_csv(path, header, rows)
    else:
        raise ValueError(f"unknown trajectory format {fmt!r}; use wide or long")


def write_field_csv(path, traj: Trajectory, xgrid, stride: int = 1) -> None:
    """Reconstructed displacement/velocity field: columns t, x, displacement, velocity."""
    x = np.asarray(xgrid, dtype=float)
    rows = []
    for i in range(0, len(traj), max(1, stride)):
        disp, vel = reconstruct(traj.state_at(i), x)
        t = traj.times[i]
        for j, xj in enumerate(x):
            rows.append([t, xj, disp[j], vel[j]])
    write_csv(path, ["t", "x", "displacement", "velocity"], rows)
