"""Ground-truth continuous-time levitation plant models.

2-dof plant (four actuators, vertical position Y and horizontal X):

    flux:      lam_i' = -R*I_i + u_i                      i = 1..4
    currents:  I_1 = (c - Y) lam_1 / k,   I_2 = (c + Y) lam_2 / k
               I_3 = (c - X) lam_3 / k,   I_4 = (c + X) lam_4 / k
    forces:    f_i = lam_i^2 / (2k)
    vertical:  m Y'' = f_1 - f_2 - m g
    horizontal m X'' = f_3 - f_4

1-dof plant is the single-actuator vertical special case.  The physical
domain is |Y| < c, |X| < c; the formulas stay defined outside it, and the
scenario runner records (or optionally aborts on) violations rather than
clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PlantParams",
    "TwoDofState",
    "OneDofState",
    "forces",
    "currents_2dof",
    "derivatives_2dof",
    "current_1dof",
    "derivatives_1dof",
]


@dataclass(frozen=True)
class PlantParams:
    """Physical constants shared by both plants.

    m    rotor/ball mass [kg]
    k    flux constant [H m]
    c    nominal air gap [m]
    R    coil resistance [ohm]
    g    gravity [m/s^2]
    """

    m: float
    k: float
    c: float
    R: float
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "k", "c", "R", "g"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"plant parameter {name} must be positive, got {v!r}")


@dataclass
class TwoDofState:
    """Flux linkages, positions and velocities of the 2-dof plant."""

    lam: np.ndarray  # (4,) flux linkages [Wb]
    Y: float
    vY: float
    X: float
    vX: float

    def as_array(self) -> np.ndarray:
        return np.array([*self.lam, self.Y, self.vY, self.X, self.vX], dtype=float)

    @classmethod
    def from_array(cls, x) -> "TwoDofState":
        x = np.asarray(x, dtype=float)
        return cls(lam=x[0:4].copy(), Y=float(x[4]), vY=float(x[5]), X=float(x[6]), vX=float(x[7]))


@dataclass
class OneDofState:
    """Flux linkage, position and velocity of the 1-dof plant."""

    lam: float
    Y: float
    vY: float

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.Y, self.vY], dtype=float)

    @classmethod
    def from_array(cls, x) -> "OneDofState":
        x = np.asarray(x, dtype=float)
        return cls(lam=float(x[0]), Y=float(x[1]), vY=float(x[2]))


def forces(lam, k: float):
    """Actuator forces f_i = lam_i^2 / (2k)."""
    lam = np.asarray(lam, dtype=float)
    return lam * lam / (2.0 * k)


def currents_2dof(lam, Y: float, X: float, p: PlantParams) -> np.ndarray:
    """Measured coil currents of the 2-dof plant."""
    k = p.k
    c = p.c
    return np.array([
        (c - Y) * lam[0] / k,
        (c + Y) * lam[1] / k,
        (c - X) * lam[2] / k,
        (c + X) * lam[3] / k,
    ])


def derivatives_2dof(x, U, p: PlantParams) -> np.ndarray:
    """State derivative of the 2-dof plant.

    ``x`` is (lam1..lam4, Y, vY, X, vX); ``U`` the four coil voltages.
    """
    lam = x[0:4]
    Y, vY, X, vX = x[4], x[5], x[6], x[7]
    I = currents_2dof(lam, Y, X, p)
    f = forces(lam, p.k)
    dx = np.empty(8)
    dx[0:4] = -p.R * I + np.asarray(U, dtype=float)
    dx[4] = vY
    dx[5] = (f[0] - f[1]) / p.m - p.g
    dx[6] = vX
    dx[7] = (f[2] - f[3]) / p.m
    return dx


def current_1dof(lam: float, Y: float, p: PlantParams) -> float:
    """Measured coil current i = (c - Y) lam / k."""
    return (p.c - Y) * lam / p.k


def derivatives_1dof(x, u: float, p: PlantParams) -> np.ndarray:
    """State derivative of the 1-dof plant; ``x`` is (lam, Y, vY)."""
    lam, Y, vY = x[0], x[1], x[2]
    i = current_1dof(lam, Y, p)
    return np.array([
        -p.R * i + u,
        vY,
        lam * lam / (2.0 * p.k * p.m) - p.g,
    ])
