"""Flux observation as constant-parameter estimation.

The front end integrates an open-loop copy of the flux dynamics,

    psi' = -R*I + U,

so that along exact trajectories the difference flux - psi is the
constant vector of initial-condition offsets (theta for the 2-dof plant,
eta for the 1-dof plant).  In this simulator the copy sees the exact
currents, so the offset is constant to rounding; with real measurements
an exponentially decaying mismatch would ride on top of it, which is the
documented slack term of the regression contracts.

For the 2-dof plant the current/flux/position relation collapses to a
pointwise regression that is linear in (theta_1, theta_2, theta_1*theta_2):

    z1 = theta2*xi1 + theta1*xi2 - (2c/k)*theta1*theta2
    z2 = theta4*xi3 + theta3*xi4 - (2c/k)*theta3*theta4

with z and xi = I - (2c/k)*psi computable from measurements alone.  Note
the cross pairing (theta2 multiplies xi1): it falls straight out of
expanding I1*lam2 + I2*lam1 = (2c/k)*lam1*lam2 under lam = psi + theta,
and the exact-identity test gates it.

The 1-dof plant admits no such shortcut.  The pipeline in
:class:`OneDofPipeline` builds, from y = i and u only, a degree-6
polynomial regression in the single unknown eta.  Products of filtered
signals are tracked as polynomials in eta with measurable time-varying
coefficients (:class:`EtaPolySignal`); every low-pass is applied
coefficient-wise, which is valid because eta is constant.  Filter
transients on the constant coefficient slots are kept exactly (no
decaying terms are dropped), so the polynomial identity holds for all t
with zero filter initial conditions, and a final washout stage removes
the constant leading term before the regression is handed to the mixing
step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams
from .signals import NonFiniteSignalError

__all__ = [
    "DynamicExtension",
    "TwoDofRegressionSample",
    "two_dof_regressors",
    "EtaPolySignal",
    "OneDofRegressionSample",
    "PipelineSignals",
    "OneDofPipeline",
    "PipelineTruthProbe",
]


class DynamicExtension:
    """Open-loop integrator psi' = -R*I + U (same shape as the flux)."""

    def __init__(self, R: float, psi0):
        self.R = float(R)
        self.psi = np.atleast_1d(np.asarray(psi0, dtype=float)).copy()

    def step(self, I, U, dt: float) -> np.ndarray:
        I = np.atleast_1d(np.asarray(I, dtype=float))
        U = np.atleast_1d(np.asarray(U, dtype=float))
        if not (np.all(np.isfinite(I)) and np.all(np.isfinite(U))):
            raise NonFiniteSignalError("dynamic_extension", float("nan"))
        # The derivative does not depend on psi, so all RK4 stages agree
        # and the update is a plain increment.
        self.psi = self.psi + dt * (-self.R * I + U)
        return self.psi


@dataclass
class TwoDofRegressionSample:
    """One pointwise sample of the 2-dof regression."""

    z: np.ndarray            # (2,) channel outputs
    xi: np.ndarray           # (4,) shifted currents I - (2c/k) psi
    two_c_over_k: float      # constant regressor entry


def two_dof_regressors(I, psi, p: PlantParams) -> TwoDofRegressionSample:
    """Build the measurable regression sample from currents and psi."""
    a = 2.0 * p.c / p.k
    z = np.array([
        -I[0] * psi[1] - I[1] * psi[0] + a * psi[0] * psi[1],
        -I[2] * psi[3] - I[3] * psi[2] + a * psi[2] * psi[3],
    ])
    xi = np.asarray(I, dtype=float) - a * np.asarray(psi, dtype=float)
    return TwoDofRegressionSample(z=z, xi=xi, two_c_over_k=a)


# ---------------------------------------------------------------------------
# Polynomial-in-eta signal algebra
# ---------------------------------------------------------------------------


class EtaPolySignal:
    """A signal of the form sum_i coeff_i(t) * eta^i, eta an unknown constant.

    Coefficients are the current values of measurable time signals.
    Addition is coefficient-wise, multiplication is polynomial
    convolution, and any LTI filter acts coefficient-wise (each
    coefficient slot owns its own filter state elsewhere).  The pipeline
    never needs degree above 6; exceeding it raises.
    """

    MAX_DEGREE = 6

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = tuple(float(v) for v in coeffs)
        if len(c) == 0:
            c = (0.0,)
        if len(c) - 1 > self.MAX_DEGREE:
            raise ValueError(f"eta-polynomial degree {len(c) - 1} exceeds {self.MAX_DEGREE}")
        self.coeffs = c

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _padded(self, n: int) -> tuple:
        return self.coeffs + (0.0,) * (n - len(self.coeffs))

    def __add__(self, other: "EtaPolySignal") -> "EtaPolySignal":
        n = max(len(self.coeffs), len(other.coeffs))
        a, b = self._padded(n), other._padded(n)
        return EtaPolySignal(x + y for x, y in zip(a, b))

    def __sub__(self, other: "EtaPolySignal") -> "EtaPolySignal":
        n = max(len(self.coeffs), len(other.coeffs))
        a, b = self._padded(n), other._padded(n)
        return EtaPolySignal(x - y for x, y in zip(a, b))

    def __mul__(self, other):
        if isinstance(other, EtaPolySignal):
            a, b = self.coeffs, other.coeffs
            out = [0.0] * (len(a) + len(b) - 1)
            if len(out) - 1 > self.MAX_DEGREE:
                raise ValueError(
                    f"product degree {len(out) - 1} exceeds {self.MAX_DEGREE}")
            for i, x in enumerate(a):
                if x == 0.0:
                    continue
                for j, y in enumerate(b):
                    out[i + j] += x * y
            return EtaPolySignal(out)
        return self.scaled(float(other))

    __rmul__ = __mul__

    def scaled(self, s: float) -> "EtaPolySignal":
        return EtaPolySignal(s * v for v in self.coeffs)

    def shifted(self) -> "EtaPolySignal":
        """Multiply by eta (degree + 1)."""
        return EtaPolySignal((0.0,) + self.coeffs)

    def evaluate(self, eta: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * eta + c
        return acc

    def __repr__(self):
        return f"EtaPolySignal({list(self.coeffs)!r})"


def _conv(a, b):
    # plain-float polynomial product; sizes here are at most 3 x 5
    out = [0.0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0.0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


# ---------------------------------------------------------------------------
# 1-dof regression pipeline
# ---------------------------------------------------------------------------


@dataclass
class OneDofRegressionSample:
    """Washout-filtered 1-dof regression: z ~ phi . (eta, eta^2, ..., eta^5)."""

    z: float
    phi: np.ndarray          # (5,)
    c6: float                # raw leading coefficient, converges to 1


@dataclass
class PipelineSignals:
    """Full diagnostic view of one pipeline evaluation."""

    z: float
    phi: np.ndarray          # (5,)
    coeffs: np.ndarray       # (7,) c0..c6 of the pre-washout polynomial
    q1: float
    omega1: float
    phi1: EtaPolySignal
    phi2: EtaPolySignal
    prod_a: EtaPolySignal    # W[(x3^2 - 2mgk) * phi1]
    prod_b: EtaPolySignal    # W[(x3^2 - 2mgk) * phi2]
    prod_c: EtaPolySignal    # (mu/(p+mu)^2)[(x3^2 - 2mgk) * phi1]

    @property
    def c6(self) -> float:
        return float(self.coeffs[6])


# state layout (offsets into the 32-entry pipeline block)
_WBAR = 0          # lowpass of y backing the dirty derivative omega1
_OMEGA2 = 1        # W[omega1]
_WA = 2            # W[y*(u - R*y)]
_VB = 3            # (1/(p+mu))[(u - R*y) * omega1]
_Q2 = 4            # W[k*m*q1]
_PHI1 = 5          # 3 slots: W of (psi^2, 2 psi, 1)
_PHI2 = 8          # 3 slots: W[phi1]
_A = 11            # 5 slots: W[(x3^2 - 2mgk) * phi1]
_B = 16            # 5 slots: W[(x3^2 - 2mgk) * phi2]
_C = 21            # 5 slots: (1/(p+mu))[A]  (second stage of mu/(p+mu)^2)
_WASH = 26         # 6 washout lowpass slots for (z0, phi0_1..phi0_5)
PIPELINE_SIZE = 32


class OneDofPipeline:
    """Measurable construction of the degree-6 regression in eta.

    All 32 internal filter states advance on the shared clock.  The
    dirty-derivative lowpass is seeded with the first current sample so
    that the derivative estimate starts at zero; with a zero seed the
    spurious mu*y(0) output transient enters the eta-linear coefficient
    and the polynomial identity only holds asymptotically.

    The polynomial assembled in :meth:`signals` is

        P(eta) = 2 k^2 m mu * eta * (omega1*phi2 - omega2*phi1)
                 - phi2 * A + phi1 * B + mu * phi1 * C
                 - 2 k mu * (k m q1 * phi2 - q2 * phi1)

    with A = W[(x3^2 - 2mgk) phi1], B = W[(x3^2 - 2mgk) phi2],
    C = (mu/(p+mu)^2)[(x3^2 - 2mgk) phi1].  P vanishes identically at the
    true eta (given zero filter states), its eta^0 coefficient is -z0 and
    its eta^1..eta^5 coefficients are the raw regressor entries; the
    leading eta^6 coefficient is a pure filter transient converging to 1
    and is removed by the washout stage.
    """

    def __init__(self, plant: PlantParams, mu: float, rho: float):
        if not mu > 0.0:
            raise ValueError(f"pipeline filter rate mu must be positive, got {mu!r}")
        if not rho > 0.0:
            raise ValueError(f"washout rate rho must be positive, got {rho!r}")
        self.plant = plant
        self.mu = float(mu)
        self.rho = float(rho)

    @property
    def size(self) -> int:
        return PIPELINE_SIZE

    def init_state(self, y0: float) -> np.ndarray:
        s = np.zeros(PIPELINE_SIZE)
        s[_WBAR] = float(y0)  # seed the derivative lowpass
        return s

    # -- core evaluation ----------------------------------------------------

    def _core(self, s, y: float, u: float, psi: float):
        """Shared intermediates for derivatives and outputs.

        Returns (omega1, q1, polynomial coefficient list c0..c6,
        product input vectors pa, pb, phi1, phi2, a_states).
        """
        if isinstance(s, np.ndarray):
            s = s.tolist()
        p = self.plant
        mu = self.mu
        k, m, g = p.k, p.m, p.g

        omega1 = mu * (y - s[_WBAR])
        omega2 = s[_OMEGA2]
        q1 = s[_WA] - psi * omega1 + s[_VB]
        q2 = s[_Q2]

        phi1 = (s[_PHI1], s[_PHI1 + 1], s[_PHI1 + 2])
        phi2 = (s[_PHI2], s[_PHI2 + 1], s[_PHI2 + 2])
        a_st = (s[_A], s[_A + 1], s[_A + 2], s[_A + 3], s[_A + 4])
        b_st = (s[_B], s[_B + 1], s[_B + 2], s[_B + 3], s[_B + 4])
        c_st = (s[_C], s[_C + 1], s[_C + 2], s[_C + 3], s[_C + 4])

        # x3^2 = psi^2 + 2 psi eta + eta^2, shifted by the gravity constant
        xg = (psi * psi - 2.0 * m * g * k, 2.0 * psi, 1.0)
        pa = _conv(xg, phi1)   # input driving the A bank
        pb = _conv(xg, phi2)   # input driving the B bank

        # assemble P coefficient-wise (length 7)
        km = k * m
        c = [0.0] * 7
        # 2 k^2 m mu * eta * (omega1*phi2 - omega2*phi1)
        f = 2.0 * k * km * mu
        for i in range(3):
            c[i + 1] += f * (omega1 * phi2[i] - omega2 * phi1[i])
        # - phi2 * A + phi1 * B + mu * phi1 * C
        for i in range(3):
            p2i, p1i = phi2[i], phi1[i]
            for j in range(5):
                c[i + j] += -p2i * a_st[j] + p1i * b_st[j] + mu * p1i * c_st[j]
        # - 2 k mu * (k m q1 * phi2 - q2 * phi1)
        f2 = 2.0 * k * mu
        for i in range(3):
            c[i] += -f2 * (km * q1 * phi2[i] - q2 * phi1[i])

        return omega1, q1, c, pa, pb, phi1, phi2, a_st

    def derivatives(self, s, y: float, u: float, psi: float) -> np.ndarray:
        """Time derivative of the 32 pipeline states at the given inputs."""
        ds, _, _, _ = self.derivs_and_sample(s, y, u, psi)
        return np.asarray(ds)

    def derivs_and_sample(self, s, y: float, u: float, psi: float):
        """One-pass (state derivative, z, phi tuple, coeff tuple).

        Shares the polynomial assembly between the derivative and the
        regression outputs; this is the hot path of the coupled runs.
        """
        if isinstance(s, np.ndarray):
            s = s.tolist()
        p = self.plant
        mu, rho = self.mu, self.rho
        omega1, q1, c, pa, pb, _, _, a_st = self._core(s, y, u, psi)

        ds = [0.0] * PIPELINE_SIZE
        udr = u - p.R * y
        ds[_WBAR] = mu * (y - s[_WBAR])
        ds[_OMEGA2] = mu * (omega1 - s[_OMEGA2])
        ds[_WA] = mu * (y * udr - s[_WA])
        ds[_VB] = -mu * s[_VB] + udr * omega1
        ds[_Q2] = mu * (p.k * p.m * q1 - s[_Q2])
        ds[_PHI1] = mu * (psi * psi - s[_PHI1])
        ds[_PHI1 + 1] = mu * (2.0 * psi - s[_PHI1 + 1])
        ds[_PHI1 + 2] = mu * (1.0 - s[_PHI1 + 2])
        for i in range(3):
            ds[_PHI2 + i] = mu * (s[_PHI1 + i] - s[_PHI2 + i])
        for j in range(5):
            ds[_A + j] = mu * (pa[j] - s[_A + j])
            ds[_B + j] = mu * (pb[j] - s[_B + j])
            ds[_C + j] = -mu * s[_C + j] + a_st[j]
        ds[_WASH] = rho * (-c[0] - s[_WASH])
        for i in range(5):
            ds[_WASH + 1 + i] = rho * (c[i + 1] - s[_WASH + 1 + i])

        z = rho * (-c[0] - s[_WASH])
        phi = tuple(rho * (c[i + 1] - s[_WASH + 1 + i]) for i in range(5))
        return ds, z, phi, tuple(c)

    def signals(self, s, y: float, u: float, psi: float) -> PipelineSignals:
        """Current regression sample plus diagnostics (no state change)."""
        rho = self.rho
        omega1, q1, c, _, _, phi1, phi2, a_st = self._core(s, y, u, psi)
        z = rho * (-c[0] - s[_WASH])
        phi = np.array([rho * (c[i + 1] - s[_WASH + 1 + i]) for i in range(5)])
        b_st = tuple(s[_B + j] for j in range(5))
        c_st = tuple(s[_C + j] for j in range(5))
        return PipelineSignals(
            z=z,
            phi=phi,
            coeffs=np.asarray(c),
            q1=q1,
            omega1=omega1,
            phi1=EtaPolySignal(phi1),
            phi2=EtaPolySignal(phi2),
            prod_a=EtaPolySignal(a_st),
            prod_b=EtaPolySignal(b_st),
            prod_c=EtaPolySignal(c_st),
        )

    def sample(self, s, y: float, u: float, psi: float) -> OneDofRegressionSample:
        sig = self.signals(s, y, u, psi)
        return OneDofRegressionSample(z=sig.z, phi=sig.phi, c6=sig.c6)

    def step(self, s, y: float, u: float, psi: float, dt: float) -> np.ndarray:
        """Standalone advance with inputs held over the step (RK4)."""
        if not (math.isfinite(y) and math.isfinite(u) and math.isfinite(psi)):
            raise NonFiniteSignalError("one_dof_pipeline_input", float("nan"))
        s = np.asarray(s, dtype=float)
        k1 = np.asarray(self.derivatives(s, y, u, psi))
        k2 = np.asarray(self.derivatives(s + 0.5 * dt * k1, y, u, psi))
        k3 = np.asarray(self.derivatives(s + 0.5 * dt * k2, y, u, psi))
        k4 = np.asarray(self.derivatives(s + dt * k3, y, u, psi))
        out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise NonFiniteSignalError(f"one_dof_pipeline_state[{bad}]", float(out[bad]))
        return out


class PipelineTruthProbe:
    """Physical counterparts of the pipeline chains, fed by the true flux.

    Used by validation runs only: each probe state is the same filter
    chain as in the pipeline but driven directly by the (unmeasurable)
    flux, so that evaluating a pipeline polynomial at the true eta must
    reproduce the probe value to integrator accuracy.
    """

    SIZE = 7
    # slots: W[lam^2], W^2[lam^2], A, B, C, V[(lam^2/(2k)-mg)*W[lam^2]],
    #        washout lowpass of c6

    def __init__(self, plant: PlantParams, mu: float, rho: float):
        self.plant = plant
        self.mu = float(mu)
        self.rho = float(rho)

    def init_state(self) -> np.ndarray:
        return np.zeros(self.SIZE)

    def derivatives(self, s, lam: float, c6: float) -> np.ndarray:
        p = self.plant
        mu, rho = self.mu, self.rho
        lam2 = lam * lam
        gshift = lam2 - 2.0 * p.m * p.g * p.k
        return np.array([
            mu * (lam2 - s[0]),
            mu * (s[0] - s[1]),
            mu * (gshift * s[0] - s[2]),
            mu * (gshift * s[1] - s[3]),
            -mu * s[4] + s[2],
            -mu * s[5] + (lam2 / (2.0 * p.k) - p.m * p.g) * s[0],
            rho * (c6 - s[6]),
        ])

    def outputs(self, s, c6: float) -> dict:
        return {
            "w_lam2": s[0],
            "w2_lam2": s[1],
            "a": s[2],
            "b": s[3],
            "c": s[4],
            "v_q1_tail": s[5],
            "washout_c6": self.rho * (c6 - s[6]),
        }
