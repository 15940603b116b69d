"""First-order filter atoms and the fixed-step integration core.

Every dynamic block in this toolkit is built from three scalar operators,

    low-pass          gain / (p + pole)         (p = d/dt)
    dirty derivative  gain * p / (p + gain)
    washout           gain * p / (p + gain)

realized as single-state ODEs and advanced with classical fourth-order
Runge-Kutta on one shared clock.  The dirty derivative and washout share
the same realization (output = gain * (input - lowpass)); they differ
only in how they are used: the derivative approximates d/dt of a varying
signal, the washout annihilates constants.

The standalone ``step`` methods hold their input constant over one step
(zero-order hold).  Coupled simulations in :mod:`.harness` instead
integrate all states monolithically, re-evaluating algebraic
interconnections at the Runge-Kutta stage points; that is what makes the
exact-identity checks in the test suite hold to integrator accuracy
rather than O(dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NonFiniteSignalError",
    "IntegratorSpec",
    "FirstOrderFilter",
    "DirtyDerivative",
    "Washout",
    "rk4_step",
    "swapping_sides",
]


class NonFiniteSignalError(ArithmeticError):
    """A signal fed to a filter (or produced by one) is NaN or infinite."""

    def __init__(self, signal: str, value: float, t: float | None = None):
        self.signal = signal
        self.value = value
        self.t = t
        where = f" at t={t:.6g}" if t is not None else ""
        super().__init__(f"non-finite value {value!r} in signal '{signal}'{where}")


def rk4_step(deriv, y, t, dt):
    """One classical RK4 step of ``dy/dt = deriv(t, y)``.

    ``y`` may be a float or an ndarray; ``deriv`` must return the same
    shape.  Stage times are t, t+dt/2, t+dt.
    """
    k1 = deriv(t, y)
    k2 = deriv(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = deriv(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = deriv(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_linear(state: float, rate: float, forcing: float, dt: float) -> float:
    # RK4 applied to s' = -rate*s + forcing with forcing held over the step.
    k1 = forcing - rate * state
    k2 = forcing - rate * (state + 0.5 * dt * k1)
    k3 = forcing - rate * (state + 0.5 * dt * k2)
    k4 = forcing - rate * (state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class IntegratorSpec:
    """Shared integration contract: fixed step, classical RK4."""

    dt: float = 1e-4
    method: str = "rk4"

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be a positive finite number, got {self.dt!r}")
        if self.method != "rk4":
            raise ValueError(f"unsupported integration method {self.method!r}")


class FirstOrderFilter:
    """Stable first-order low-pass ``gain / (p + pole)``.

    State obeys s' = -pole*s + gain*input; the output is the state.
    With zero initial state and constant input c the output is
    (gain/pole)*c*(1 - exp(-pole*t)).
    """

    __slots__ = ("gain", "pole", "state", "name")

    def __init__(self, gain: float, pole: float, state: float = 0.0, name: str = "lowpass"):
        if not pole > 0.0:
            raise ValueError(f"filter pole must be positive, got {pole!r}")
        self.gain = float(gain)
        self.pole = float(pole)
        self.state = float(state)
        self.name = name

    @property
    def dc_gain(self) -> float:
        return self.gain / self.pole

    def step(self, u: float, dt: float) -> float:
        """Advance one step with ``u`` held constant; returns the new state."""
        if not math.isfinite(u):
            raise NonFiniteSignalError(self.name, u)
        self.state = _rk4_linear(self.state, self.pole, self.gain * u, dt)
        return self.state

    def reset(self, state: float = 0.0) -> None:
        self.state = float(state)


class DirtyDerivative:
    """Realizable derivative ``gain * p / (p + gain)``.

    Output is gain*(input - lowpass_state) where the lowpass state tracks
    (gain/(p+gain))[input].  No sample differencing is involved.  With
    ``seed_on_first`` the lowpass state is initialized to the first input
    sample, which removes the gain*input(0) output spike of a zero state.
    """

    __slots__ = ("gain", "lowpass_state", "name", "_seeded", "_seed_on_first")

    def __init__(self, gain: float, lowpass_state: float = 0.0,
                 seed_on_first: bool = False, name: str = "dirty_derivative"):
        if not gain > 0.0:
            raise ValueError(f"derivative gain must be positive, got {gain!r}")
        self.gain = float(gain)
        self.lowpass_state = float(lowpass_state)
        self.name = name
        self._seed_on_first = bool(seed_on_first)
        self._seeded = not self._seed_on_first

    def output(self, u: float) -> float:
        return self.gain * (u - self.lowpass_state)

    def step(self, u: float, dt: float) -> float:
        if not math.isfinite(u):
            raise NonFiniteSignalError(self.name, u)
        if not self._seeded:
            self.lowpass_state = float(u)
            self._seeded = True
        self.lowpass_state = _rk4_linear(self.lowpass_state, self.gain, self.gain * u, dt)
        return self.gain * (u - self.lowpass_state)

    def reset(self, lowpass_state: float = 0.0) -> None:
        self.lowpass_state = float(lowpass_state)
        self._seeded = not self._seed_on_first


class Washout:
    """Constant-killer ``gain * p / (p + gain)``.

    Same realization as the dirty derivative; on a constant input the
    output is gain*input*exp(-gain*t), i.e. it decays to zero at the
    filter rate.
    """

    __slots__ = ("gain", "lowpass_state", "name")

    def __init__(self, gain: float, lowpass_state: float = 0.0, name: str = "washout"):
        if not gain > 0.0:
            raise ValueError(f"washout gain must be positive, got {gain!r}")
        self.gain = float(gain)
        self.lowpass_state = float(lowpass_state)
        self.name = name

    def output(self, u: float) -> float:
        return self.gain * (u - self.lowpass_state)

    def step(self, u: float, dt: float) -> float:
        if not math.isfinite(u):
            raise NonFiniteSignalError(self.name, u)
        self.lowpass_state = _rk4_linear(self.lowpass_state, self.gain, self.gain * u, dt)
        return self.gain * (u - self.lowpass_state)

    def reset(self, lowpass_state: float = 0.0) -> None:
        self.lowpass_state = float(lowpass_state)


def swapping_sides(a, b, b_dot, mu: float, horizon: float, dt: float):
    """Both sides of the filtered-product identity, for testing.

    For W = mu/(p+mu) and zero-initialized filters,

        W[a*b] = b * W[a] - (1/(p+mu))[ b' * W[a] ]

    (minus sign; see the module tests for the derivation check).  ``a``,
    ``b`` and ``b_dot`` are callables of time, ``b_dot`` the exact
    derivative of ``b``.  Returns (t, lhs, rhs) sampled every step.  The
    three filter states are integrated as one coupled system with the
    inputs evaluated at the RK4 stage times, so the residual lhs - rhs
    reflects integrator accuracy only.
    """

    mu = float(mu)
    n = int(round(horizon / dt))

    def deriv(t, y):
        w, s, v = y
        at, bt, bdt = a(t), b(t), b_dot(t)
        return np.array([
            mu * (at - w),            # w = W[a]
            mu * (at * bt - s),       # s = W[a*b]
            -mu * v + bdt * w,        # v = (1/(p+mu))[b' * W[a]]
        ])

    y = np.zeros(3)
    ts = np.empty(n + 1)
    lhs = np.empty(n + 1)
    rhs = np.empty(n + 1)
    for i in range(n + 1):
        t = i * dt
        ts[i] = t
        lhs[i] = y[1]
        rhs[i] = b(t) * y[0] - y[2]
        if i < n:
            y = rk4_step(deriv, y, t, dt)
    return ts, lhs, rhs
