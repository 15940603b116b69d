"""Speed and position observers: closed-form decay laws and identities."""

import inspect
import math

import numpy as np

from maglev_sensorless import mech
from maglev_sensorless.plant import PlantParams, currents_2dof, current_1dof

P51 = PlantParams(m=0.0844, k=6.4042e-5, c=0.005, R=2.52)
P52 = PlantParams(m=0.0844, k=1.0, c=0.005, R=2.52)


def test_observers_never_take_a_current_derivative():
    # structural check: the observer interfaces consume currents and the
    # known flux derivative, never a differentiated current
    funcs = [mech.speed_outputs_2dof, mech.speed_derivs_2dof,
             mech.position_derivs_2dof, mech.speed_output_1dof,
             mech.speed_deriv_1dof, mech.position_deriv_1dof]
    banned = {"i_dot", "di", "didt", "d_i", "current_dot", "I_dot", "dI"}
    for fn in funcs:
        names = {p.lower() for p in inspect.signature(fn).parameters}
        assert not (names & {b.lower() for b in banned}), fn.__name__


def _frozen_flux_sim_2dof(gamma, mu, T, dt, vy0_err, y0_err):
    """Flux-hold trajectory: voltages cancel the resistive decay exactly.

    With all four flux linkages pinned at 1, the plant is in free fall
    and the observer errors follow their closed-form laws.
    """
    p = P51
    lam = np.ones(4)
    Y, vY = 0.0, 0.1
    chi1 = (vY - vy0_err) + gamma * p.k * 0.0  # current-flux term folded below
    Y_hat = Y - y0_err
    samples = []
    n = int(round(T / dt))
    I0 = currents_2dof(lam, Y, 0.0, p)
    chi1 = (vY - vy0_err) + gamma * p.k * (I0[0] * lam[0] - I0[1] * lam[1])

    state = np.array([Y, vY, chi1, Y_hat])

    def deriv(s):
        Y_, vY_, chi_, Yh_ = s
        I = currents_2dof(lam, Y_, 0.0, p)
        U = p.R * I  # holds the flux constant
        flux_dot = -p.R * I + U
        vh, _ = mech.speed_outputs_2dof(chi_, 0.0, I, lam, p.k, gamma, gamma)
        dchi1, _ = mech.speed_derivs_2dof(vh, 0.0, I, lam, flux_dot, p, gamma, gamma)
        dYh, _ = mech.position_derivs_2dof(Yh_, 0.0, I, lam, vh, 0.0, p, mu, mu)
        return np.array([vY_, -p.g, dchi1, dYh])

    for i in range(n):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * dt * k1)
        k3 = deriv(state + 0.5 * dt * k2)
        k4 = deriv(state + dt * k3)
        state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        I = currents_2dof(lam, state[0], 0.0, p)
        vh, _ = mech.speed_outputs_2dof(state[2], 0.0, I, lam, p.k, gamma, gamma)
        samples.append(((i + 1) * dt, state[1] - vh, state[0] - state[3]))
    return np.array(samples)


class TestFrozenFluxLaws2Dof:
    def test_speed_error_decays_at_twice_the_gain(self):
        gamma = 100.0
        out = _frozen_flux_sim_2dof(gamma, mu=1.0, T=0.03, dt=1e-4,
                                    vy0_err=0.02, y0_err=0.0)
        t, verr = out[:, 0], out[:, 1]
        expected = 0.02 * np.exp(-2.0 * gamma * t)  # lam1^2 + lam2^2 = 2
        mask = expected > 0.02 * 1e-3
        assert np.max(np.abs(verr[mask] - expected[mask]) / expected[mask]) < 0.01

    def test_position_error_decay_with_exact_speed(self):
        mu = 100.0
        out = _frozen_flux_sim_2dof(gamma=4000.0, mu=mu, T=0.03, dt=1e-4,
                                    vy0_err=0.0, y0_err=0.004)
        t, eY = out[:, 0], out[:, 2]
        expected = 0.004 * np.exp(-2.0 * mu * t)
        mask = expected > 0.004 * 1e-3
        assert np.max(np.abs(eY[mask] - expected[mask]) / expected[mask]) < 0.01

    def test_exact_initialization_stays_exact(self):
        out = _frozen_flux_sim_2dof(gamma=100.0, mu=100.0, T=0.01, dt=1e-4,
                                    vy0_err=0.0, y0_err=0.0)
        assert np.max(np.abs(out[:, 1])) < 1e-12
        assert np.max(np.abs(out[:, 2])) < 1e-12


class TestFrozenFluxLaw1Dof:
    def test_speed_error_decays_at_the_gain(self):
        p = P52
        gamma = 50.0
        lam = 1.0
        Y, vY = 0.0, 0.2
        dt = 1e-4
        i0 = current_1dof(lam, Y, p)
        chi = (vY - 0.05) + gamma * p.k * i0 * lam
        state = np.array([Y, vY, chi])

        def deriv(s):
            Y_, vY_, chi_ = s
            i = current_1dof(lam, Y_, p)
            u = p.R * i
            vh = mech.speed_output_1dof(chi_, i, lam, p.k, gamma)
            dchi = mech.speed_deriv_1dof(vh, i, lam, -p.R * i + u, p, gamma)
            return np.array([vY_, lam * lam / (2 * p.k * p.m) - p.g, dchi])

        worst = 0.0
        for i in range(int(round(0.1 / dt))):
            k1 = deriv(state)
            k2 = deriv(state + 0.5 * dt * k1)
            k3 = deriv(state + 0.5 * dt * k2)
            k4 = deriv(state + dt * k3)
            state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = (i + 1) * dt
            ii = current_1dof(lam, state[0], p)
            vh = mech.speed_output_1dof(state[2], ii, lam, p.k, gamma)
            expected = 0.05 * math.exp(-gamma * t)  # lam^2 = 1
            if expected > 0.05 * 1e-3:
                worst = max(worst, abs((state[1] - vh) - expected) / expected)
        assert worst < 0.01


class TestFrozenFluxPosition1Dof:
    def test_position_error_decays_at_the_gain(self):
        # frozen unit flux and an exact speed feed: e_Y(t) = e_Y(0) e^(-mu t)
        p = P52
        mu = 80.0
        lam = 1.0
        state = np.array([0.0, 0.3, -0.002])  # Y, vY, Y_hat

        def deriv(s):
            i = current_1dof(lam, s[0], p)
            dYh = mech.position_deriv_1dof(s[2], i, lam, s[1], p, mu)
            return np.array([s[1], lam * lam / (2 * p.k * p.m) - p.g, dYh])

        dt = 1e-4
        worst = 0.0
        for i in range(int(round(0.08 / dt))):
            k1 = deriv(state)
            k2 = deriv(state + 0.5 * dt * k1)
            k3 = deriv(state + 0.5 * dt * k2)
            k4 = deriv(state + dt * k3)
            state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            expected = 0.002 * math.exp(-mu * (i + 1) * dt)
            if expected > 0.002 * 1e-3:
                worst = max(worst, abs((state[0] - state[2]) - expected) / expected)
        assert worst < 0.01


class TestPositionIdentities:
    def test_two_dof_identity_every_sample(self, rec_steps2dof):
        r = rec_steps2dof
        k, c = P51.k, P51.c
        l1, l2 = r.col("lambda1"), r.col("lambda2")
        l3, l4 = r.col("lambda3"), r.col("lambda4")
        I1, I2, I3, I4 = (r.col(f"I{i}") for i in range(1, 5))
        lhsY = (l1 ** 2 + l2 ** 2) * r.col("Y")
        rhsY = (k * I2 - c * l2) * l2 - (k * I1 - c * l1) * l1
        lhsX = (l3 ** 2 + l4 ** 2) * r.col("X")
        rhsX = (k * I4 - c * l4) * l4 - (k * I3 - c * l3) * l3
        assert np.max(np.abs(lhsY - rhsY)) <= 1e-12 * np.max(np.abs(lhsY))
        assert np.max(np.abs(lhsX - rhsX)) <= 1e-12 * np.max(np.abs(lhsX))

    def test_one_dof_identity_every_sample(self, rec_sin1dof):
        r = rec_sin1dof
        k, c = P52.k, P52.c
        lam, i, Y = r.col("lambda1"), r.col("I1"), r.col("Y")
        lhs = (c * lam - k * i) * lam
        rhs = lam ** 2 * Y
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


class TestCascadeConvergence:
    def test_position_error_vanishes_once_speed_error_does(self, rec_steps2dof_godflux):
        # with the true flux fed to the observers the speed error decays
        # exponentially; over the final 10% both errors are at the floor
        r = rec_steps2dof_godflux
        n = r.n_samples
        tail = slice(int(0.9 * n), None)
        assert np.max(np.abs(r.col("err_vY")[tail])) <= 1e-6
        assert np.max(np.abs(r.col("err_vX")[tail])) <= 1e-6
        assert np.max(np.abs(r.col("err_Y")[tail])) <= 1e-6
        assert np.max(np.abs(r.col("err_X")[tail])) <= 1e-6
