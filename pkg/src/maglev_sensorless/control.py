"""Full-state control laws and reference generators.

2-dof: an energy-shaping / damping-injection law regulates to a member
of the assignable equilibrium family, parameterised by the desired
fluxes of actuators 2 and 4:

    lam1* = sqrt(2 k m g + lam2*^2),      lam3* = lam4*.

The vertical controller sees only vertical quantities and the horizontal
one only horizontal ones, so the two axes stay decoupled by design.
Time-varying position references are fed quasi-statically.

1-dof: a feedback-linearizing law cancels the force nonlinearity and
imposes third-order linear tracking dynamics with characteristic
polynomial s^3 + k2 s^2 + k1 s + k0 (validated to be Hurwitz at
configuration time).  The force F = flux^2/(2k) appears under a square
root in the gain, so F is floored at a configurable minimum; hitting the
floor is reported as an event.

References:  piecewise-constant step schedules (left-closed intervals,
zero derivatives), a circle (analytic derivatives), and a fourth-order
filter chain whose states are exactly the reference and its first three
derivatives (nothing is differentiated numerically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams

__all__ = [
    "IdapbcParams",
    "FlcParams",
    "equilibrium_map",
    "idapbc_control",
    "flc_control",
    "StepSchedule",
    "CircleReference",
    "chain_derivs",
    "chain_outputs",
    "sum_of_sines",
]


@dataclass(frozen=True)
class IdapbcParams:
    """Tuning scalars and desired fluxes of the 2-dof law.

    alpha, Gamma, Ra must be positive and beta strictly negative; a
    positive beta silently destabilizes, so it is rejected here.
    """

    alpha: float
    beta: float
    Gamma: float
    Ra: float
    lam2_star: float
    lam4_star: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not self.beta < 0.0:
            raise ValueError(f"beta must be strictly negative, got {self.beta!r}")
        if not self.Gamma > 0.0:
            raise ValueError(f"Gamma must be positive, got {self.Gamma!r}")
        if not self.Ra > 0.0:
            raise ValueError(f"Ra must be positive, got {self.Ra!r}")


@dataclass(frozen=True)
class FlcParams:
    """Target characteristic polynomial s^3 + k2 s^2 + k1 s + k0."""

    k0: float
    k1: float
    k2: float

    def __post_init__(self):
        # Routh conditions for a Hurwitz cubic
        if not (self.k2 > 0.0 and self.k0 > 0.0 and self.k1 * self.k2 > self.k0):
            raise ValueError(
                "FLC gains must satisfy k2 > 0, k0 > 0 and k1*k2 > k0 "
                f"(got k0={self.k0!r}, k1={self.k1!r}, k2={self.k2!r})")


def equilibrium_map(lam2_star: float, lam4_star: float, p: PlantParams):
    """Derived equilibrium fluxes (lam1*, lam3*).

    Vertical: lam1* carries the weight, lam1*^2 - lam2*^2 = 2 k m g.
    Horizontal: no gravity, so lam3* = lam4*.
    """
    lam1 = math.sqrt(2.0 * p.k * p.m * p.g + lam2_star * lam2_star)
    return lam1, lam4_star


def idapbc_control(I, flux, Y_hat, X_hat, vY_hat, vX_hat,
                   Y_star, X_star, cp: IdapbcParams, p: PlantParams) -> np.ndarray:
    """Four coil voltages of the energy-shaping law.

    All hatted quantities come from the observers (or the true state in
    diagnostic mode); I is measured.  The equilibrium fluxes derive from
    the configured lam2*, lam4*.
    """
    R, k = p.R, p.k
    al, be, Ga, Ra = cp.alpha, cp.beta, cp.Gamma, cp.Ra
    lam1s, lam3s = equilibrium_map(cp.lam2_star, cp.lam4_star, p)
    lam2s, lam4s = cp.lam2_star, cp.lam4_star

    tl1 = flux[0] - lam1s
    tl3 = flux[2] - lam3s
    tl4 = flux[3] - lam4s
    tY = Y_hat - Y_star
    tX = X_hat - X_star

    bracket_y = tl1 / al + tY + Ra * p.m * vY_hat
    d_bar = Ga * (tl3 / (2.0 * al) + tl4 / (2.0 * be) + tX + Ra * p.m * vX_hat)

    u1 = (R * I[0]
          - (R / (2.0 * k * al)) * (flux[0] ** 2 - lam1s ** 2)
          - (R / al + al * Ra) * Ga * bracket_y
          - al * vY_hat)
    u2 = (R * I[1]
          + (R / (2.0 * k * be)) * (flux[1] ** 2 - lam2s ** 2)
          - be * Ra * Ga * bracket_y
          - be * vY_hat)
    u3 = (R * I[2]
          - (R / (2.0 * k * al)) * (flux[2] ** 2 - lam3s ** 2)
          - (R / (2.0 * al) + al * Ra) * d_bar
          - al * vX_hat)
    u4 = (R * I[3]
          + (R / (2.0 * k * be)) * (flux[3] ** 2 - lam4s ** 2)
          - (R / (2.0 * be) + be * Ra) * d_bar
          - be * vX_hat)
    return np.array([u1, u2, u3, u4])


def flc_control(flux, Y_hat, v_hat, ref, cp: FlcParams, p: PlantParams,
                f_min: float = 1e-9):
    """Feedback-linearizing voltage; returns (u, hit_floor).

    ``ref`` is (r, r', r'', r''').  The magnetic force F = flux^2/(2k)
    enters as sqrt(k/(2F)) and sqrt(2F/k); F is floored at ``f_min`` to
    keep the law defined through flux-estimate start-up transients, and
    ``hit_floor`` reports when the floor was active.
    """
    r, dr, ddr, dddr = ref
    F = flux * flux / (2.0 * p.k)
    hit = F <= f_min
    if hit:
        F = f_min
    v_fl = (dddr
            - cp.k2 * ((F / p.m - p.g) - ddr)
            - cp.k1 * (v_hat - dr)
            - cp.k0 * (Y_hat - r))
    u = (math.sqrt(p.k / (2.0 * F)) * p.m * v_fl
         + p.R * (p.c - Y_hat) * math.sqrt(2.0 * F / p.k))
    return u, hit


# ---------------------------------------------------------------------------
# References
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepSchedule:
    """Piecewise-constant schedule; value switches exactly at each boundary.

    ``times`` are the interior switch instants (ascending); ``values``
    has one more entry than ``times``.  Intervals are left-closed /
    right-open, so value(times[i]) is already values[i + 1].
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.times) + 1:
            raise ValueError("a schedule with n switch times needs n+1 values")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("schedule times must be strictly increasing")

    def value(self, t: float) -> float:
        v = self.values[0]
        for ti, vi in zip(self.times, self.values[1:]):
            if t >= ti:
                v = vi
            else:
                break
        return v


@dataclass(frozen=True)
class CircleReference:
    """X* = amplitude*sin(omega t), Y* = amplitude*cos(omega t)."""

    amplitude: float = 0.1
    omega: float = 0.1

    def positions(self, t: float):
        return self.amplitude * math.sin(self.omega * t), \
            self.amplitude * math.cos(self.omega * t)


def chain_derivs(s, y0: float, nu: float) -> np.ndarray:
    """Derivatives of the fourth-order unity-DC filter chain.

    Four cascaded stages nu/(p+nu); the chain output s[3] is the
    reference and its derivatives are exact combinations of the states.
    """
    return np.array([
        nu * (y0 - s[0]),
        nu * (s[0] - s[1]),
        nu * (s[1] - s[2]),
        nu * (s[2] - s[3]),
    ])


def chain_outputs(s, nu: float):
    """(r, r', r'', r''') of the filter chain, all algebraic in the states."""
    r = s[3]
    dr = nu * (s[2] - s[3])
    ddr = nu * nu * (s[1] - 2.0 * s[2] + s[3])
    dddr = nu ** 3 * (s[0] - 3.0 * s[1] + 3.0 * s[2] - s[3])
    return r, dr, ddr, dddr


def sum_of_sines(t: float) -> float:
    """Raw 1-dof reference input: sin t + sin 2t + 0.5 sin(3.7 t + pi/3)."""
    return math.sin(t) + math.sin(2.0 * t) + 0.5 * math.sin(3.7 * t + math.pi / 3.0)
