"""Independent 2x2 CARE solver via the Hamiltonian stable-subspace method.

Solves F'P + P F - P G R^-1 G' P + Q = 0 for the unique stabilizing
nonnegative definite P by

1. forming the 4x4 Hamiltonian [[F, -G R^-1 G'], [-Q, -F']],
2. stacking the eigenvectors of its two stable eigenvalues as [X; Y] and
   taking P = Y X^-1,
3. polishing with a couple of Newton-Kleinman steps, each of which solves
   the Lyapunov equation (F - S P_k)' P + P (F - S P_k) = -(Q + P_k S P_k).

This route shares no algebra with the closed-form per-mode solutions in
``modal`` and therefore serves as an independent cross-check of them.

All entry points accept either a single problem (F of shape (2, 2)) or a
stack of problems (F of shape (..., 2, 2)); stacked calls run the LAPACK
loops in C, which matters for the large verification sweeps.
"""

from __future__ import annotations

import numpy as np

from .exceptions import IllConditioned, NotStabilizable

__all__ = ["care_oracle", "care_residual", "solve_lyapunov_2x2"]


def _as_batch(a, m: int, tail: tuple[int, ...], name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    flat = a.reshape((-1,) + tail) if a.size > int(np.prod(tail)) else a.reshape((1,) + tail)
    if flat.shape[0] == m:
        return flat
    if flat.shape[0] == 1:
        return np.broadcast_to(flat, (m,) + tail)
    raise ValueError(f"{name} has batch size {flat.shape[0]}, expected {m} or 1")


def solve_lyapunov_2x2(A, W):
    """Solve A' X + X A = W for symmetric 2x2 X (W symmetric; stacked OK)."""
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    single = A.ndim == 2
    Ab = A.reshape(-1, 2, 2)
    m = Ab.shape[0]
    Wb = _as_batch(W, m, (2, 2), "W")

    a11, a12 = Ab[:, 0, 0], Ab[:, 0, 1]
    a21, a22 = Ab[:, 1, 0], Ab[:, 1, 1]
    M = np.zeros((m, 3, 3))
    M[:, 0, 0] = 2.0 * a11
    M[:, 0, 1] = 2.0 * a21
    M[:, 1, 0] = a12
    M[:, 1, 1] = a11 + a22
    M[:, 1, 2] = a21
    M[:, 2, 1] = 2.0 * a12
    M[:, 2, 2] = 2.0 * a22
    rhs = np.stack([Wb[:, 0, 0], Wb[:, 0, 1], Wb[:, 1, 1]], axis=1)
    try:
        sol = np.linalg.solve(M, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"singular Lyapunov system: {exc}") from exc
    X = np.empty((m, 2, 2))
    X[:, 0, 0] = sol[:, 0]
    X[:, 0, 1] = sol[:, 1]
    X[:, 1, 0] = sol[:, 1]
    X[:, 1, 1] = sol[:, 2]
    return X[0] if single else X.reshape(A.shape)


def care_residual(F, G, Q, R, P):
    """Residual matrix F'P + PF - P G R^-1 G' P + Q (stacked OK)."""
    F = np.asarray(F, dtype=float)
    single = F.ndim == 2
    Fb = F.reshape(-1, 2, 2)
    m = Fb.shape[0]
    Gb = _as_batch(G, m, (2, 1), "G")
    Qb = _as_batch(Q, m, (2, 2), "Q")
    Pb = _as_batch(P, m, (2, 2), "P")
    Rb = _as_batch(np.asarray(R, dtype=float).reshape(-1, 1), m, (1,), "R")[:, 0]
    S = (Gb @ np.transpose(Gb, (0, 2, 1))) / Rb[:, None, None]
    FT = np.transpose(Fb, (0, 2, 1))
    res = FT @ Pb + Pb @ Fb - Pb @ S @ Pb + Qb
    return res[0] if single else res.reshape(F.shape)


def care_oracle(F, G, Q, R, *, newton_steps: int = 2, residual_rtol: float = 1e-10):
    """Stabilizing nonnegative definite solution of the 2x2 CARE.

    Parameters
    ----------
    F, Q : (..., 2, 2) arrays
    G : (..., 2, 1) array (or (2,) / (2, 1) broadcast over the batch)
    R : positive scalar (or batch of scalars)
    newton_steps : Newton-Kleinman polish iterations after the subspace solve
    residual_rtol : final acceptance threshold, relative to the size of the
        terms actually summed in the residual (the raw residual of a perfect
        P cannot beat evaluation rounding, which scales with ||F'P||)

    A zero Q short-circuits to P = 0: zero cost is attainable with zero
    control, and when F has purely imaginary spectrum the Hamiltonian has no
    stable subspace to extract even though P = 0 solves the equation.

    The problem is first balanced with D = diag(d, 1/d), d^4 = |F21 / F12|,
    which equalizes the position/velocity scales (for oscillator-like F the
    raw scales differ by the squared frequency and would otherwise dominate
    the conditioning of the eigensolve and the Newton steps).  The residual
    is checked in the balanced coordinates where the solve runs.

    Raises NotStabilizable when the Hamiltonian spectrum does not split into
    two stable and two antistable eigenvalues, and IllConditioned when the
    eigenvector basis is numerically singular or the polished residual fails
    its threshold.
    """
    F = np.asarray(F, dtype=float)
    single = F.ndim == 2
    batch_shape = F.shape[:-2]
    F_in = F.reshape(-1, 2, 2)
    m = F_in.shape[0]
    G_in = _as_batch(G, m, (2, 1), "G")
    Q_in = _as_batch(Q, m, (2, 2), "Q")
    Rb = _as_batch(np.asarray(R, dtype=float).reshape(-1, 1), m, (1,), "R")[:, 0]
    if np.any(Rb <= 0.0):
        raise ValueError("R must be positive")

    # diagonal balancing: z -> D z with D = diag(d, 1/d)
    f12 = np.abs(F_in[:, 0, 1])
    f21 = np.abs(F_in[:, 1, 0])
    d2 = np.where((f12 > 0.0) & (f21 > 0.0), np.sqrt(f21 / np.where(f12 > 0.0, f12, 1.0)), 1.0)
    d = np.sqrt(d2)
    Fb = F_in.copy()
    Fb[:, 0, 1] = F_in[:, 0, 1] * d2
    Fb[:, 1, 0] = F_in[:, 1, 0] / d2
    Gb = G_in.copy()
    Gb[:, 0, 0] = G_in[:, 0, 0] * d
    Gb[:, 1, 0] = G_in[:, 1, 0] / d
    Qb = Q_in.copy()
    Qb[:, 0, 0] = Q_in[:, 0, 0] / d2
    Qb[:, 1, 1] = Q_in[:, 1, 1] * d2

    S = (Gb @ np.transpose(Gb, (0, 2, 1))) / Rb[:, None, None]
    qnorm = np.max(np.abs(Qb), axis=(1, 2))
    P = np.zeros((m, 2, 2))
    todo = np.flatnonzero(qnorm > 0.0)

    if todo.size:
        Ft, St, Qt = Fb[todo], S[todo], Qb[todo]
        H = np.zeros((todo.size, 4, 4))
        H[:, :2, :2] = Ft
        H[:, :2, 2:] = -St
        H[:, 2:, :2] = -Qt
        H[:, 2:, 2:] = -np.transpose(Ft, (0, 2, 1))

        evals, evecs = np.linalg.eig(H)
        order = np.argsort(evals.real, axis=1)
        re_sorted = np.take_along_axis(evals.real, order, axis=1)
        bad = ~((re_sorted[:, 1] < 0.0) & (re_sorted[:, 2] > 0.0))
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise NotStabilizable(
                "Hamiltonian spectrum does not split 2/2 about the imaginary "
                f"axis (batch index {todo[k]}, sorted real parts {re_sorted[k]})"
            )
        V = np.take_along_axis(evecs, order[:, None, :2], axis=2)  # (k, 4, 2)
        X, Y = V[:, :2, :], V[:, 2:, :]

        detX = X[:, 0, 0] * X[:, 1, 1] - X[:, 0, 1] * X[:, 1, 0]
        nX = np.max(np.abs(X), axis=(1, 2))
        sick = np.abs(detX) <= 1e-13 * nX * nX
        if np.any(sick):
            k = int(np.flatnonzero(sick)[0])
            raise IllConditioned(
                f"stable-subspace basis is numerically singular (batch index {todo[k]})"
            )
        Pt = np.transpose(
            np.linalg.solve(np.transpose(X, (0, 2, 1)), np.transpose(Y, (0, 2, 1))),
            (0, 2, 1),
        ).real
        Pt = 0.5 * (Pt + np.transpose(Pt, (0, 2, 1)))

        # the subspace pick can pass on rounding noise when eigenvalues sit on
        # the imaginary axis; a stabilizing P must make F - S P Hurwitz, which
        # for a 2x2 matrix means trace < 0 < determinant
        Acl = Ft - St @ Pt
        tr = Acl[:, 0, 0] + Acl[:, 1, 1]
        det = Acl[:, 0, 0] * Acl[:, 1, 1] - Acl[:, 0, 1] * Acl[:, 1, 0]
        unstable = ~((tr < 0.0) & (det > 0.0))
        if np.any(unstable):
            k = int(np.flatnonzero(unstable)[0])
            raise NotStabilizable(
                f"candidate closed loop is not Hurwitz (batch index {todo[k]}, "
                f"trace {tr[k]!r}, det {det[k]!r})"
            )

        for _ in range(newton_steps):
            Acl = Ft - St @ Pt
            W = -(Qt + Pt @ St @ Pt)
            Pt = solve_lyapunov_2x2(Acl, W)
            Pt = 0.5 * (Pt + np.transpose(Pt, (0, 2, 1)))
        P[todo] = Pt

    FTP = np.transpose(Fb, (0, 2, 1)) @ P
    PSP = P @ S @ P
    res = FTP + np.transpose(FTP, (0, 2, 1)) - PSP + Qb
    scale = (
        1.0
        + qnorm
        + 2.0 * np.max(np.abs(FTP), axis=(1, 2))
        + np.max(np.abs(PSP), axis=(1, 2))
    )
    worst = np.max(np.abs(res), axis=(1, 2))
    if np.any(worst > residual_rtol * scale):
        k = int(np.argmax(worst / scale))
        raise IllConditioned(
            f"CARE residual {worst[k]:.3e} exceeds {residual_rtol:.1e} * scale "
            f"{scale[k]:.3e} (batch index {k})"
        )

    # undo the balancing: P = D Ptilde D
    P[:, 0, 0] *= d2
    P[:, 1, 1] /= d2
    return P[0] if single else P.reshape(batch_shape + (2, 2))
