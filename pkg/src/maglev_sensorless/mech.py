"""Nonlinear speed and position observers driven by flux and current.

Both observers avoid differentiating the measured currents: the speed
observer output is an internal state minus a current-flux product, and
the flux derivative it needs is the known quantity -R*I + U.  In closed
loop the true flux is replaced by its estimate (certainty equivalence);
a diagnostic flag in the scenario runner can feed the true flux instead
to isolate the observer dynamics.

With the true flux, the speed observer error obeys

    verr' = -gamma * (flux norm)^2 * verr

so its log decays like the quadrature of the squared flux norm, and the
position observer error obeys the same law with an additive speed-error
term, which makes the cascade converge whenever the flux stays exciting.
"""

from __future__ import annotations

from dataclasses import dataclass

from .plant import PlantParams

__all__ = [
    "SpeedObserverState",
    "PositionObserverState",
    "speed_outputs_2dof",
    "speed_derivs_2dof",
    "position_derivs_2dof",
    "speed_output_1dof",
    "speed_deriv_1dof",
    "position_deriv_1dof",
]


@dataclass
class SpeedObserverState:
    """Internal state(s) and gain of a speed observer."""

    chi: tuple
    gain: float

    def __post_init__(self):
        if not self.gain > 0.0:
            raise ValueError(f"speed observer gain must be positive, got {self.gain!r}")


@dataclass
class PositionObserverState:
    """Position estimate and gain of a position observer."""

    q_hat: float
    gain: float

    def __post_init__(self):
        if not self.gain > 0.0:
            raise ValueError(f"position observer gain must be positive, got {self.gain!r}")


# ---------------------------------------------------------------------------
# 2-dof
# ---------------------------------------------------------------------------


def speed_outputs_2dof(chi1, chi2, I, flux, k, gamma_Y, gamma_X):
    """Algebraic observer outputs (vY_hat, vX_hat)."""
    vY = chi1 - gamma_Y * k * (I[0] * flux[0] - I[1] * flux[1])
    vX = chi2 - gamma_X * k * (I[2] * flux[2] - I[3] * flux[3])
    return vY, vX

def speed_derivs_2dof(vY_hat, vX_hat, I, flux, flux_dot, p: PlantParams,
                      gamma_Y, gamma_X):
    """Derivatives of the two speed-observer states.

    ``flux_dot`` is the known flux derivative -R*I + U, never a
    differentiated current.
    """
    k, m, g = p.k, p.m, p.g
    l1s = flux[0] * flux[0]
    l2s = flux[1] * flux[1]
    l3s = flux[2] * flux[2]
    l4s = flux[3] * flux[3]
    dchi1 = (-gamma_Y * ((l1s + l2s) * vY_hat
                         - 2.0 * k * (I[0] * flux_dot[0] - I[1] * flux_dot[1]))
             + (l1s - l2s - 2.0 * k * m * g) / (2.0 * k * m))
    dchi2 = (-gamma_X * ((l3s + l4s) * vX_hat
                         - 2.0 * k * (I[2] * flux_dot[2] - I[3] * flux_dot[3]))
             + (l3s - l4s) / (2.0 * k * m))
    return dchi1, dchi2


def position_derivs_2dof(Y_hat, X_hat, I, flux, vY_hat, vX_hat, p: PlantParams,
                         mu_Y, mu_X):
    """Derivatives of the position estimates.

    Built on the pointwise identities

        (lam1^2 + lam2^2) Y = (k I2 - c lam2) lam2 - (k I1 - c lam1) lam1
        (lam3^2 + lam4^2) X = (k I4 - c lam4) lam4 - (k I3 - c lam3) lam3

    so each bracket equals (flux norm)^2 * (estimate - true position) and
    the error contracts at mu * (flux norm)^2 with the speed-observer
    error as input.  The horizontal branch uses the horizontal currents
    I3, I4; the bracket sign follows the identity (the correction term is
    subtracted), which is what makes the error equation contracting.
    """
    k, c = p.k, p.c
    dY = (-mu_Y * ((flux[0] ** 2 + flux[1] ** 2) * Y_hat
                   - (k * I[1] - c * flux[1]) * flux[1]
                   + (k * I[0] - c * flux[0]) * flux[0])
          + vY_hat)
    dX = (-mu_X * ((flux[2] ** 2 + flux[3] ** 2) * X_hat
                   - (k * I[3] - c * flux[3]) * flux[3]
                   + (k * I[2] - c * flux[2]) * flux[2])
          + vX_hat)
    return dY, dX


# ---------------------------------------------------------------------------
# 1-dof
# ---------------------------------------------------------------------------


def speed_output_1dof(chi, i, flux, k, gamma_Y):
    return chi - gamma_Y * k * i * flux


def speed_deriv_1dof(v_hat, i, flux, flux_dot, p: PlantParams, gamma_Y):
    k, m, g = p.k, p.m, p.g
    return ((flux * flux / (2.0 * k) - m * g) / m
            - gamma_Y * flux * flux * v_hat
            + 2.0 * gamma_Y * k * i * flux_dot)


def position_deriv_1dof(Y_hat, i, flux, v_hat, p: PlantParams, mu_Y):
    # (c lam - k i) lam = lam^2 Y pointwise, so the error contracts at
    # mu_Y lam^2 with the speed error as input.
    return (-mu_Y * flux * flux * Y_hat
            + mu_Y * (p.c * flux - p.k * i) * flux
            + v_hat)
