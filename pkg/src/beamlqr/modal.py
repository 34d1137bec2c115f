"""Closed-form LQR synthesis for the beam's per-frequency 2x2 subsystems.

The hinged beam with bending-moment actuation at the right end decouples
over the sine basis sin(n*pi*x).  Spatial frequency n carries the two
dimensional system

    d/dt (a1, a2) = F a + G u,
    F = [[0, 1], [-(n pi)^4, -alpha]],   G = [[0], [n pi beta]],

so the quadratic regulator for the full beam reduces to one 2x2 algebraic
Riccati equation per frequency.  That equation is solvable in closed form:
the off-diagonal entry comes from a scalar quadratic, the velocity entry
from a second quadratic once the off-diagonal entry is known, and the
position entry then follows linearly.  This module evaluates those closed
forms (written in cancellation-free form so residuals stay at rounding
level for large n), the residual diagnostics, the feedback gain and the
closed-loop spectrum.

Everything here is a pure function of its arguments with no shared state;
synthesis across modes is embarrassingly parallel.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BetaZero, NegativeDiscriminant

__all__ = [
    "BeamParams",
    "ModalWeight",
    "ModalRiccati",
    "ModalGain",
    "EigenPair",
    "open_loop_eigenvalues",
    "solve_mode_riccati",
    "riccati_residuals",
    "mode_gain",
    "closed_loop_matrix",
    "closed_loop_eigenvalues",
]


@dataclass(frozen=True)
class BeamParams:
    """Beam damping, control influence and control weight.

    alpha -- viscous damping coefficient, >= 0
    beta  -- scale of the boundary input as seen by every mode
    R     -- scalar control weight, > 0
    """

    alpha: float = 0.0
    beta: float = 1.0
    R: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.R > 0.0:
            raise ValueError(f"R must be > 0, got {self.R}")

    @property
    def gamma_sq(self) -> float:
        """Effective control authority beta^2 / R."""
        return self.beta * self.beta / self.R


@dataclass(frozen=True, slots=True)
class ModalWeight:
    """Symmetric 2x2 state weight for one spatial frequency (q21 = q12)."""

    q11: float = 0.0
    q12: float = 0.0
    q22: float = 0.0

    @property
    def q21(self) -> float:
        return self.q12

    def norm(self) -> float:
        """Max-abs entry."""
        return max(abs(self.q11), abs(self.q12), abs(self.q22))

    def is_psd(self, tol: float = 0.0) -> bool:
        scale = 1.0 + self.norm()
        return (
            self.q11 >= -tol * scale
            and self.q22 >= -tol * scale
            and self.q11 * self.q22 - self.q12 * self.q12 >= -tol * scale * scale
        )

    def is_positive_definite(self) -> bool:
        return self.q11 > 0.0 and self.q11 * self.q22 - self.q12 * self.q12 > 0.0

    def scaled(self, c: float) -> "ModalWeight":
        return ModalWeight(c * self.q11, c * self.q12, c * self.q22)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.q11, self.q12], [self.q12, self.q22]])


@dataclass(frozen=True, slots=True)
class ModalRiccati:
    """Symmetric 2x2 Riccati solution for one mode, with residual diagnostics.

    ``residuals`` holds the defects of the four scalar Riccati equations
    (position-position, position-velocity, velocity-position,
    velocity-velocity) evaluated left minus right at this solution.
    """

    p11: float
    p12: float
    p22: float
    residuals: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @property
    def p21(self) -> float:
        return self.p12

    def norm(self) -> float:
        return max(abs(self.p11), abs(self.p12), abs(self.p22))

    def is_nonneg_definite(self, tol: float = 1e-12) -> bool:
        scale = 1.0 + self.norm()
        det = self.p11 * self.p22 - self.p12 * self.p12
        return self.p11 >= -tol * scale and det >= -tol * scale * scale

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.p11, self.p12], [self.p12, self.p22]])


@dataclass(frozen=True, slots=True)
class ModalGain:
    """Row gain acting on one mode's (position, velocity) pair: u = k1*a1 + k2*a2."""

    k1: float = 0.0
    k2: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2])


@dataclass(frozen=True, slots=True)
class EigenPair:
    """The two eigenvalue branches of one mode (plus/minus index)."""

    mu_plus: complex
    mu_minus: complex

    def as_tuple(self) -> tuple[complex, complex]:
        return (self.mu_plus, self.mu_minus)


def _check_mode(n: int) -> int:
    if n < 1 or n != int(n):
        raise ValueError(f"mode index must be a positive integer, got {n}")
    return int(n)


def _mode_constants(n: int) -> tuple[float, float]:
    """Return ((n pi)^2, (n pi)^4) with a fixed evaluation order.

    Shared by the solver and the residual evaluator so that residuals of a
    freshly solved mode cancel exactly in floating point.
    """
    npi = n * math.pi
    n2pi2 = npi * npi
    return n2pi2, n2pi2 * n2pi2


def open_loop_eigenvalues(n: int, alpha: float) -> EigenPair:
    """Eigenvalues of the uncontrolled mode-n oscillator.

    Both branches of (-alpha +/- sqrt(alpha^2 - 4 (n pi)^4)) / 2; the plus
    branch takes the complex square root with nonnegative imaginary part.
    """
    n = _check_mode(n)
    _, n4pi4 = _mode_constants(n)
    root = cmath.sqrt(complex(alpha * alpha - 4.0 * n4pi4, 0.0))
    return EigenPair((-alpha + root) / 2.0, (-alpha - root) / 2.0)


def _p11_closed_form(
    n2pi2: float, n4pi4: float, g2: float, alpha: float, q12: float, p12: float, p22: float
) -> float:
    # fixed term order; riccati_residuals relies on recomputing this bit-exactly
    return alpha * p12 + n4pi4 * p22 - q12 + n2pi2 * g2 * (p12 * p22)


def _residual_tuple(
    p11: float,
    p12: float,
    p22: float,
    n2pi2: float,
    n4pi4: float,
    g2: float,
    alpha: float,
    q: ModalWeight,
) -> tuple[float, float, float, float]:
    res_pp = -2.0 * n4pi4 * p12 + q.q11 - n2pi2 * g2 * (p12 * p12)
    res_pv = p11 - _p11_closed_form(n2pi2, n4pi4, g2, alpha, q.q12, p12, p22)
    res_vp = p11 - _p11_closed_form(n2pi2, n4pi4, g2, alpha, q.q21, p12, p22)
    res_vv = 2.0 * p12 - 2.0 * alpha * p22 + q.q22 - n2pi2 * g2 * (p22 * p22)
    return (res_pp, res_pv, res_vp, res_vv)


def solve_mode_riccati(n: int, q: ModalWeight, params: BeamParams) -> ModalRiccati:
    """Closed-form stabilizing Riccati solution of the mode-n LQR.

    Takes the positive branch of both scalar quadratics, which is the one
    producing a nonnegative definite solution for a nonnegative definite
    weight.  The branch formulas are evaluated conjugate-multiplied, i.e.

        p12 = q11 / ((n pi)^2 ((n pi)^2 + sqrt((n pi)^4 + g2 q11 / (n pi)^2)))
        p22 = (q22 + 2 p12) / (alpha + sqrt(alpha^2 + (n pi)^2 g2 (q22 + 2 p12)))

    which avoids the subtractive cancellation that would otherwise destroy
    the residuals for large n.

    Raises NegativeDiscriminant if a square-root argument is negative
    (possible only for an indefinite weight) and BetaZero if beta == 0
    while q != 0 (the mode is then uncontrollable).
    """
    n = _check_mode(n)
    g2 = params.gamma_sq
    if g2 == 0.0:
        if q.q11 == 0.0 and q.q12 == 0.0 and q.q22 == 0.0:
            return ModalRiccati(0.0, 0.0, 0.0, (0.0, 0.0, 0.0, 0.0))
        raise BetaZero(f"mode {n} carries weight but beta = 0: uncontrollable")

    n2pi2, n4pi4 = _mode_constants(n)
    alpha = params.alpha

    arg12 = n4pi4 + g2 * q.q11 / n2pi2
    if arg12 < 0.0:
        raise NegativeDiscriminant(
            f"mode {n}: discriminant of the p12 quadratic is negative ({arg12!r})"
        )
    p12 = q.q11 / (n2pi2 * (n2pi2 + math.sqrt(arg12)))

    lead = q.q22 + 2.0 * p12
    arg22 = alpha * alpha + n2pi2 * g2 * lead
    if arg22 < 0.0:
        raise NegativeDiscriminant(
            f"mode {n}: discriminant of the p22 quadratic is negative ({arg22!r})"
        )
    den = alpha + math.sqrt(arg22)
    p22 = lead / den if den > 0.0 else 0.0

    p11 = _p11_closed_form(n2pi2, n4pi4, g2, alpha, q.q12, p12, p22)
    res = _residual_tuple(p11, p12, p22, n2pi2, n4pi4, g2, alpha, q)
    return ModalRiccati(p11, p12, p22, res)


def riccati_residuals(
    P: ModalRiccati, n: int, q: ModalWeight, params: BeamParams
) -> tuple[float, float, float, float]:
    """Defects of the four scalar Riccati equations at P (left minus right).

    The velocity-position residual equals the position-velocity residual by
    symmetry of P and q.
    """
    n = _check_mode(n)
    n2pi2, n4pi4 = _mode_constants(n)
    return _residual_tuple(
        P.p11, P.p12, P.p22, n2pi2, n4pi4, params.gamma_sq, params.alpha, q
    )


def mode_gain(P: ModalRiccati, n: int, params: BeamParams) -> ModalGain:
    """Optimal feedback row K = -R^-1 G' P = -(n pi beta / R) (p12, p22)."""
    n = _check_mode(n)
    c = -(n * math.pi * params.beta) / params.R
    return ModalGain(c * P.p12, c * P.p22)


def closed_loop_matrix(n: int, params: BeamParams, K: ModalGain) -> np.ndarray:
    """Mode-n closed-loop matrix F + G K for an arbitrary row gain K."""
    n = _check_mode(n)
    n2pi2, n4pi4 = _mode_constants(n)
    b = n * math.pi * params.beta
    return np.array(
        [
            [0.0, 1.0],
            [-n4pi4 + b * K.k1, -params.alpha + b * K.k2],
        ]
    )


def closed_loop_eigenvalues(n: int, params: BeamParams, P: ModalRiccati) -> EigenPair:
    """Both closed-loop eigenvalue branches under the optimal gain for P.

    Exact eigenvalues of the closed-loop matrix

        [[0, 1], [-(n pi)^4 - (n pi)^2 g2 p12, -alpha - (n pi)^2 g2 p22]]

    via the quadratic formula; the plus branch takes the square root with
    nonnegative imaginary part, so the pair is conjugate whenever the
    discriminant is negative.
    """
    n = _check_mode(n)
    n2pi2, n4pi4 = _mode_constants(n)
    g2 = params.gamma_sq
    tr = -(params.alpha + n2pi2 * g2 * P.p22)
    det = n4pi4 + n2pi2 * g2 * P.p12
    root = cmath.sqrt(complex(tr * tr - 4.0 * det, 0.0))
    return EigenPair((tr + root) / 2.0, (tr - root) / 2.0)
