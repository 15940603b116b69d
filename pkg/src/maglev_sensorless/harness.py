"""Scenario runner: synchronized step loop, recording, metrics, emission.

One run advances a single state vector holding the plant, the open-loop
flux copy, every filter bank, the estimators, the observers and (for
1-dof) the reference chain.  Per step the data flow is fixed:

    read currents from the plant state
    -> observers / estimator outputs (algebraic in the state)
    -> controller computes the coil voltages from the estimates
    -> everything integrates one RK4 step.

All algebraic interconnections (currents, regressors, determinants,
observer outputs, the control law itself) are re-evaluated at the RK4
stage points, so the coupled system integrates as one continuous ODE at
full order; holding the voltages over a whole step makes the sampled
loop unstable at the default step with the stock gains (the vertical
flux-difference/velocity loop exceeds unit gain per step).  Reference
step schedules switch exactly on step boundaries and are held within a
step.  Runs contain no randomness and no wall-clock, so identical
configurations produce byte-identical outputs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import control as ctl
from . import drem, mech, pebo, plant as plantmod
from .config import TWO_DOF, ScenarioConfig

__all__ = [
    "NumericFailure",
    "DomainViolationAbort",
    "RunRecord",
    "run_scenario",
    "run_many",
    "metrics",
    "emit_csv",
    "emit_plots",
    "emit_overlay",
]


class NumericFailure(RuntimeError):
    """A state went non-finite mid-run; names the block and the time."""

    def __init__(self, stage: str, t: float):
        self.stage = stage
        self.t = t
        super().__init__(f"non-finite value in '{stage}' at t={t:.6g}")


class DomainViolationAbort(RuntimeError):
    """Run aborted because the gap constraint was left (configured abort)."""

    def __init__(self, channel: str, t: float):
        self.channel = channel
        self.t = t
        super().__init__(f"|{channel}| left the physical gap at t={t:.6g}")


@dataclass
class RunRecord:
    """Uniformly sampled time series, event log and run metadata."""

    config: ScenarioConfig
    columns: dict            # name -> (n,) ndarray, insertion order = CSV order
    events: list             # [{"t": ..., "kind": ..., "detail": ...}]
    meta: dict               # true offsets etc.

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    @property
    def n_samples(self) -> int:
        return len(self.columns["t"])

    def col(self, name: str) -> np.ndarray:
        return self.columns[name]


# ---------------------------------------------------------------------------
# 2-dof closed loop
# ---------------------------------------------------------------------------

# state layout
_L = 0        # lam1..4
_Y = 4
_VY = 5
_X = 6
_VX = 7
_PSI = 8      # psi1..4
_F11 = 12     # channel-1 filter 1: (z1, xi2, xi1, const)
_F12 = 16     # channel-1 filter 2
_F23 = 20     # channel-2 filter 3: (z2, xi4, xi3, const)
_F24 = 24     # channel-2 filter 4
_TH = 28      # hat_theta1..4
_CHI1 = 32
_CHI2 = 33
_YH = 34
_XH = 35
_EX1 = 36
_EX2 = 37
_N2DOF = 38

_BLOCKS_2DOF = [
    (range(0, 8), "plant"),
    (range(8, 12), "flux_copy"),
    (range(12, 28), "drem_filters"),
    (range(28, 32), "offset_estimators"),
    (range(32, 34), "speed_observers"),
    (range(34, 36), "position_observers"),
    (range(36, 38), "excitation_monitors"),
]


class TwoDofLoop:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.p = cfg.plant
        self.cp = cfg.idapbc
        self.obs = cfg.observers
        self.kappas = cfg.drem.kappas
        self.nus = cfg.drem.nus
        self.gains = cfg.drem.gains
        self.const_col = -2.0 * self.p.c / self.p.k
        if cfg.reference.kind == "steps":
            r = cfg.reference
            sched_x = ctl.StepSchedule(r.times, r.x_values)
            sched_y = ctl.StepSchedule(r.times, r.y_values)
            # schedules are held over a step (t_sched = step start)
            self.reference = lambda t, t_sched: (sched_y.value(t_sched),
                                                 sched_x.value(t_sched))
        else:
            circ = ctl.CircleReference(cfg.reference.amplitude, cfg.reference.omega)

            def _circle_yx(t, t_sched, _c=circ):
                xs, ys = _c.positions(t)
                return ys, xs

            self.reference = _circle_yx

    @property
    def n_states(self) -> int:
        return _N2DOF

    def blocks(self):
        return _BLOCKS_2DOF

    def state0(self) -> np.ndarray:
        ic = self.cfg.init
        x = np.zeros(_N2DOF)
        x[_L:_L + 4] = ic.lam
        x[_Y], x[_VY], x[_X], x[_VX] = ic.Y, ic.vY, ic.X, ic.vX
        x[_PSI:_PSI + 4] = ic.psi
        x[_TH:_TH + 4] = np.asarray(ic.flux_hat) - np.asarray(ic.psi)
        x[_CHI1] = ic.vY_hat   # chi = v_hat at t=0 (current-flux term folded in below)
        x[_CHI2] = ic.vX_hat
        x[_YH], x[_XH] = ic.Y_hat, ic.X_hat
        # The observer output is chi - gamma*k*(I.lam terms); shift chi so the
        # configured initial speed estimates hold exactly at t=0.
        I = plantmod.currents_2dof(x[_L:_L + 4], x[_Y], x[_X], self.p)
        flux = self._observer_flux(x)
        x[_CHI1] = ic.vY_hat + self.obs.gamma_Y * self.p.k * (I[0] * flux[0] - I[1] * flux[1])
        x[_CHI2] = ic.vX_hat + self.obs.gamma_X * self.p.k * (I[2] * flux[2] - I[3] * flux[3])
        return x

    def _observer_flux(self, x):
        if self.cfg.god_flux:
            return x[_L:_L + 4]
        return x[_PSI:_PSI + 4] + x[_TH:_TH + 4]

    def _extensions(self, x, I):
        sample = pebo.two_dof_regressors(I, x[_PSI:_PSI + 4], self.p)
        z, xi, a = sample.z, sample.xi, -sample.two_c_over_k
        er1 = drem.extend_two_dof_channel(z[0], xi[1], xi[0], a,
                                          (x[_F11:_F11 + 4], x[_F12:_F12 + 4]))
        er2 = drem.extend_two_dof_channel(z[1], xi[3], xi[2], a,
                                          (x[_F23:_F23 + 4], x[_F24:_F24 + 4]))
        return sample, er1, er2

    def control_values(self, x, t, t_sched):
        """Coil voltages from the current state (pure; no event tracking)."""
        I = plantmod.currents_2dof(x[_L:_L + 4], x[_Y], x[_X], self.p)
        Y_star, X_star = self.reference(t, t_sched)
        if self.cfg.god_state:
            flux_c, Yc, Xc, vYc, vXc = x[_L:_L + 4], x[_Y], x[_X], x[_VY], x[_VX]
        else:
            flux_o = self._observer_flux(x)
            vY, vX = mech.speed_outputs_2dof(x[_CHI1], x[_CHI2], I, flux_o,
                                             self.p.k, self.obs.gamma_Y, self.obs.gamma_X)
            flux_c = x[_PSI:_PSI + 4] + x[_TH:_TH + 4]
            Yc, Xc, vYc, vXc = x[_YH], x[_XH], vY, vX
        return ctl.idapbc_control(I, flux_c, Yc, Xc, vYc, vXc, Y_star, X_star, self.cp, self.p)

    def controls(self, x, t):
        """Same-step voltages for recording, plus controller event flags."""
        return self.control_values(x, t, t), {}

    def deriv(self, x, t, t_sched):
        # hot path: plain-float unpack of the state; behavior is pinned to
        # the module functions by the record-time identity tests
        p = self.p
        k, c, R, m, g = p.k, p.c, p.R, p.m, p.g
        xs = x.tolist()
        l1, l2, l3, l4 = xs[_L:_L + 4]
        Y, vY_t, X, vX_t = xs[_Y], xs[_VY], xs[_X], xs[_VX]
        ps1, ps2, ps3, ps4 = xs[_PSI:_PSI + 4]
        th1, th2, th3, th4 = xs[_TH:_TH + 4]

        I1 = (c - Y) * l1 / k
        I2 = (c + Y) * l2 / k
        I3 = (c - X) * l3 / k
        I4 = (c + X) * l4 / k

        Y_star, X_star = self.reference(t, t_sched)
        if self.cfg.god_state:
            fc = (l1, l2, l3, l4)
            Yc, Xc, vYc, vXc = Y, X, vY_t, vX_t
            if self.cfg.god_flux:
                fo = fc
            else:
                fo = (ps1 + th1, ps2 + th2, ps3 + th3, ps4 + th4)
        else:
            fo = (l1, l2, l3, l4) if self.cfg.god_flux \
                else (ps1 + th1, ps2 + th2, ps3 + th3, ps4 + th4)
            vYo = xs[_CHI1] - self.obs.gamma_Y * k * (I1 * fo[0] - I2 * fo[1])
            vXo = xs[_CHI2] - self.obs.gamma_X * k * (I3 * fo[2] - I4 * fo[3])
            fc = (ps1 + th1, ps2 + th2, ps3 + th3, ps4 + th4)
            Yc, Xc, vYc, vXc = xs[_YH], xs[_XH], vYo, vXo
        u1, u2, u3, u4 = (float(v) for v in ctl.idapbc_control(
            (I1, I2, I3, I4), fc, Yc, Xc, vYc, vXc, Y_star, X_star, self.cp, self.p))

        dx = [0.0] * _N2DOF
        fd1 = -R * I1 + u1
        fd2 = -R * I2 + u2
        fd3 = -R * I3 + u3
        fd4 = -R * I4 + u4
        dx[_L] = fd1
        dx[_L + 1] = fd2
        dx[_L + 2] = fd3
        dx[_L + 3] = fd4
        inv2k = 1.0 / (2.0 * k)
        dx[_Y] = vY_t
        dx[_VY] = (l1 * l1 - l2 * l2) * inv2k / m - g
        dx[_X] = vX_t
        dx[_VX] = (l3 * l3 - l4 * l4) * inv2k / m
        dx[_PSI] = fd1
        dx[_PSI + 1] = fd2
        dx[_PSI + 2] = fd3
        dx[_PSI + 3] = fd4

        a = 2.0 * c / k
        z1 = -I1 * ps2 - I2 * ps1 + a * ps1 * ps2
        z2 = -I3 * ps4 - I4 * ps3 + a * ps3 * ps4
        xi1 = I1 - a * ps1
        xi2 = I2 - a * ps2
        xi3 = I3 - a * ps3
        xi4 = I4 - a * ps4
        na = -a

        k1f, k2f, k3f, k4f = self.kappas
        n1f, n2f, n3f, n4f = self.nus
        f11 = xs[_F11:_F11 + 4]
        f12 = xs[_F12:_F12 + 4]
        f23 = xs[_F23:_F23 + 4]
        f24 = xs[_F24:_F24 + 4]
        in1 = (z1, xi2, xi1, na)
        in2 = (z2, xi4, xi3, na)
        for j in range(4):
            dx[_F11 + j] = k1f * in1[j] - n1f * f11[j]
            dx[_F12 + j] = k2f * in1[j] - n2f * f12[j]
            dx[_F23 + j] = k3f * in2[j] - n3f * f23[j]
            dx[_F24 + j] = k4f * in2[j] - n4f * f24[j]

        d1, y1 = drem.mix3(
            ((xi2, xi1, na), (f11[1], f11[2], f11[3]), (f12[1], f12[2], f12[3])),
            (z1, f11[0], f12[0]))
        d2, y2 = drem.mix3(
            ((xi4, xi3, na), (f23[1], f23[2], f23[3]), (f24[1], f24[2], f24[3])),
            (z2, f23[0], f24[0]))
        g1, g2, g3, g4 = self.gains
        dx[_TH] = g1 * d1 * (y1[0] - d1 * th1)
        dx[_TH + 1] = g2 * d1 * (y1[1] - d1 * th2)
        dx[_TH + 2] = g3 * d2 * (y2[0] - d2 * th3)
        dx[_TH + 3] = g4 * d2 * (y2[1] - d2 * th4)

        gy, gx = self.obs.gamma_Y, self.obs.gamma_X
        o1, o2, o3, o4 = fo
        vYh = xs[_CHI1] - gy * k * (I1 * o1 - I2 * o2)
        vXh = xs[_CHI2] - gx * k * (I3 * o3 - I4 * o4)
        o1s, o2s, o3s, o4s = o1 * o1, o2 * o2, o3 * o3, o4 * o4
        dx[_CHI1] = (-gy * ((o1s + o2s) * vYh - 2.0 * k * (I1 * fd1 - I2 * fd2))
                     + (o1s - o2s - 2.0 * k * m * g) * inv2k / m)
        dx[_CHI2] = (-gx * ((o3s + o4s) * vXh - 2.0 * k * (I3 * fd3 - I4 * fd4))
                     + (o3s - o4s) * inv2k / m)
        muy, mux = self.obs.mu_Y, self.obs.mu_X
        dx[_YH] = (-muy * ((o1s + o2s) * xs[_YH]
                           - (k * I2 - c * o2) * o2 + (k * I1 - c * o1) * o1) + vYh)
        dx[_XH] = (-mux * ((o3s + o4s) * xs[_XH]
                           - (k * I4 - c * o4) * o4 + (k * I3 - c * o3) * o3) + vXh)

        dx[_EX1] = d1 * d1
        dx[_EX2] = d2 * d2
        return np.array(dx)

    def domain_flags(self, x):
        c = self.p.c
        return (("Y", abs(x[_Y]) >= c), ("X", abs(x[_X]) >= c))

    def column_names(self):
        names = ["t"]
        names += [f"lambda{i}" for i in range(1, 5)] + ["Y", "vY", "X", "vX"]
        names += [f"hat_lambda{i}" for i in range(1, 5)] + ["hat_Y", "hat_vY", "hat_X", "hat_vX"]
        names += [f"u{i}" for i in range(1, 5)] + [f"I{i}" for i in range(1, 5)]
        names += ["Delta1", "Delta2", "intDelta2_1", "intDelta2_2"]
        names += [f"psi{i}" for i in range(1, 5)] + [f"hat_theta{i}" for i in range(1, 5)]
        names += ["z1", "z2"] + [f"xi{i}" for i in range(1, 5)]
        names += ["Ymix1_1", "Ymix1_2", "Ymix2_1", "Ymix2_2"]
        names += ["ref_Y", "ref_X"]
        names += [f"err_lambda{i}" for i in range(1, 5)]
        names += ["err_Y", "err_vY", "err_X", "err_vX"]
        names += [f"err_theta{i}" for i in range(1, 5)]
        return names

    def sample(self, x, t, U):
        p = self.p
        lam = x[_L:_L + 4]
        psi = x[_PSI:_PSI + 4]
        th = x[_TH:_TH + 4]
        I = plantmod.currents_2dof(lam, x[_Y], x[_X], p)
        flux_hat = psi + th
        flux_o = self._observer_flux(x)
        vY, vX = mech.speed_outputs_2dof(x[_CHI1], x[_CHI2], I, flux_o,
                                         p.k, self.obs.gamma_Y, self.obs.gamma_X)
        sample, er1, er2 = self._extensions(x, I)
        Y_star, X_star = self.reference(t, t)
        row = [t]
        row += [*lam, x[_Y], x[_VY], x[_X], x[_VX]]
        row += [*flux_hat, x[_YH], vY, x[_XH], vX]
        row += [*U, *I]
        row += [er1.delta, er2.delta, x[_EX1], x[_EX2]]
        row += [*psi, *th]
        row += [*sample.z, *sample.xi]
        row += [er1.mixed[0], er1.mixed[1], er2.mixed[0], er2.mixed[1]]
        row += [Y_star, X_star]
        row += [*(lam - flux_hat)]
        row += [x[_Y] - x[_YH], x[_VY] - vY, x[_X] - x[_XH], x[_VX] - vX]
        row += [*(th - self._theta_true)]
        return row

    def prepare_meta(self):
        ic = self.cfg.init
        self._theta_true = np.asarray(ic.lam) - np.asarray(ic.psi)
        return {"theta_true": self._theta_true.copy()}


# ---------------------------------------------------------------------------
# 1-dof closed loop
# ---------------------------------------------------------------------------

_O_L = 0
_O_Y = 1
_O_VY = 2
_O_PSI = 3
_O_PIPE = 4                      # 32 pipeline states
_O_F = 36                        # 4 filters x (z, phi1..phi5)
_O_ETA = 60
_O_EX = 61
_O_CHI = 62
_O_YH = 63
_O_REF = 64                      # 4 chain states
_N1DOF = 68
_O_PROBE = 68                    # +7 when diagnostics are enabled

_BLOCKS_1DOF = [
    (range(0, 3), "plant"),
    (range(3, 4), "flux_copy"),
    (range(4, 36), "regression_pipeline"),
    (range(36, 60), "drem_filters"),
    (range(60, 61), "offset_estimator"),
    (range(61, 62), "excitation_monitor"),
    (range(62, 63), "speed_observer"),
    (range(63, 64), "position_observer"),
    (range(64, 68), "reference_chain"),
    (range(68, 75), "truth_probe"),
]


class OneDofLoop:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.p = cfg.plant
        self.cp = cfg.flc
        self.obs = cfg.observers
        self.kappas = cfg.drem.kappas
        self.nus = cfg.drem.nus
        self.gain = cfg.drem.gains[0]
        self.pipe = pebo.OneDofPipeline(self.p, cfg.pipeline.mu, cfg.pipeline.rho)
        self.nu_ref = cfg.reference.nu
        if cfg.reference.kind == "filtered-sines":
            self.ref_input = lambda t, t_sched: ctl.sum_of_sines(t)
        else:
            sched = ctl.StepSchedule(cfg.reference.times, cfg.reference.y_values)
            # schedule input to the chain is held over a step
            self.ref_input = lambda t, t_sched: sched.value(t_sched)
        self.with_probe = cfg.god_diagnostics
        self.probe = pebo.PipelineTruthProbe(self.p, cfg.pipeline.mu, cfg.pipeline.rho) \
            if self.with_probe else None

    @property
    def n_states(self) -> int:
        return _N1DOF + (pebo.PipelineTruthProbe.SIZE if self.with_probe else 0)

    def blocks(self):
        return _BLOCKS_1DOF

    def state0(self) -> np.ndarray:
        ic = self.cfg.init
        x = np.zeros(self.n_states)
        x[_O_L] = ic.lam[0]
        x[_O_Y], x[_O_VY] = ic.Y, ic.vY
        x[_O_PSI] = ic.psi[0]
        y0 = plantmod.current_1dof(x[_O_L], x[_O_Y], self.p)
        x[_O_PIPE:_O_PIPE + pebo.PIPELINE_SIZE] = self.pipe.init_state(y0)
        x[_O_ETA] = ic.eta_hat
        x[_O_YH] = ic.Y_hat
        # shift chi so the configured initial speed estimate holds at t=0
        flux = self._observer_flux(x)
        x[_O_CHI] = ic.vY_hat + self.obs.gamma_Y * self.p.k * y0 * flux
        return x

    def _observer_flux(self, x):
        if self.cfg.god_flux:
            return x[_O_L]
        return x[_O_PSI] + x[_O_ETA]

    def control_values(self, x, t, t_sched):
        """(voltage, floor hit) from the current state; pure."""
        y = plantmod.current_1dof(x[_O_L], x[_O_Y], self.p)
        ref = ctl.chain_outputs(x[_O_REF:_O_REF + 4], self.nu_ref)
        if self.cfg.god_state:
            flux_c, Yc, vc = x[_O_L], x[_O_Y], x[_O_VY]
        else:
            flux_o = self._observer_flux(x)
            v_hat = mech.speed_output_1dof(x[_O_CHI], y, flux_o, self.p.k, self.obs.gamma_Y)
            flux_c, Yc, vc = x[_O_PSI] + x[_O_ETA], x[_O_YH], v_hat
        return ctl.flc_control(flux_c, Yc, vc, ref, self.cp, self.p, self.cfg.flc_f_min)

    def controls(self, x, t):
        u, hit = self.control_values(x, t, t)
        return np.array([u]), {"flc_singularity": hit}

    def deriv(self, x, t, t_sched):
        # hot path: plain-float unpack; see the 2-dof loop for rationale
        p = self.p
        k, c, R, m, g = p.k, p.c, p.R, p.m, p.g
        xs = x.tolist()
        lam, Y, vY_t, psi = xs[_O_L], xs[_O_Y], xs[_O_VY], xs[_O_PSI]
        y = (c - Y) * lam / k

        ref = ctl.chain_outputs(xs[_O_REF:_O_REF + 4], self.nu_ref)
        flux_o = lam if self.cfg.god_flux else psi + xs[_O_ETA]
        gy = self.obs.gamma_Y
        v_hat = xs[_O_CHI] - gy * k * y * flux_o
        if self.cfg.god_state:
            u, _ = ctl.flc_control(lam, Y, vY_t, ref, self.cp, self.p, self.cfg.flc_f_min)
        else:
            u, _ = ctl.flc_control(psi + xs[_O_ETA], xs[_O_YH], v_hat, ref,
                                   self.cp, self.p, self.cfg.flc_f_min)

        dx = [0.0] * len(xs)
        dx[_O_L] = -R * y + u
        dx[_O_Y] = vY_t
        dx[_O_VY] = lam * lam / (2.0 * k * m) - g
        dx[_O_PSI] = -R * y + u

        pipe_s = xs[_O_PIPE:_O_PIPE + pebo.PIPELINE_SIZE]
        dpipe, z, phi, coeffs = self.pipe.derivs_and_sample(pipe_s, y, u, psi)
        dx[_O_PIPE:_O_PIPE + pebo.PIPELINE_SIZE] = dpipe

        sig = (z,) + phi
        rows = [phi]
        zv = [z]
        for j in range(4):
            base = _O_F + 6 * j
            fj = xs[base:base + 6]
            kj, nj = self.kappas[j], self.nus[j]
            for i in range(6):
                dx[base + i] = kj * sig[i] - nj * fj[i]
            rows.append(tuple(fj[1:6]))
            zv.append(fj[0])
        delta, y1 = drem.mix5_first(rows, zv)
        dx[_O_ETA] = self.gain * delta * (y1 - delta * xs[_O_ETA])
        dx[_O_EX] = delta * delta

        flux_dot = -R * y + u
        fo2 = flux_o * flux_o
        dx[_O_CHI] = ((fo2 / (2.0 * k) - m * g) / m
                      - gy * fo2 * v_hat + 2.0 * gy * k * y * flux_dot)
        dx[_O_YH] = (-self.obs.mu_Y * fo2 * xs[_O_YH]
                     + self.obs.mu_Y * (c * flux_o - k * y) * flux_o + v_hat)

        y0 = self.ref_input(t, t_sched)
        s0, s1, s2, s3 = xs[_O_REF:_O_REF + 4]
        nu = self.nu_ref
        dx[_O_REF] = nu * (y0 - s0)
        dx[_O_REF + 1] = nu * (s0 - s1)
        dx[_O_REF + 2] = nu * (s1 - s2)
        dx[_O_REF + 3] = nu * (s2 - s3)

        if self.with_probe:
            lam2 = lam * lam
            gs = lam2 - 2.0 * m * g * k
            pr = xs[_O_PROBE:_O_PROBE + 7]
            mu, rho = self.pipe.mu, self.pipe.rho
            dx[_O_PROBE] = mu * (lam2 - pr[0])
            dx[_O_PROBE + 1] = mu * (pr[0] - pr[1])
            dx[_O_PROBE + 2] = mu * (gs * pr[0] - pr[2])
            dx[_O_PROBE + 3] = mu * (gs * pr[1] - pr[3])
            dx[_O_PROBE + 4] = -mu * pr[4] + pr[2]
            dx[_O_PROBE + 5] = -mu * pr[5] + (lam2 / (2.0 * k) - m * g) * pr[0]
            dx[_O_PROBE + 6] = rho * (coeffs[6] - pr[6])
        return np.array(dx)

    def domain_flags(self, x):
        return (("Y", abs(x[_O_Y]) >= self.p.c),)

    def column_names(self):
        names = ["t", "lambda1", "Y", "vY", "hat_lambda1", "hat_Y", "hat_vY",
                 "u1", "I1", "Delta1", "intDelta2_1", "psi1", "hat_eta"]
        names += ["z"] + [f"phi{i}" for i in range(1, 6)]
        names += [f"c{i}" for i in range(7)] + ["Ymix", "q1", "omega1"]
        names += ["ref_Y", "ref_dY", "ref_ddY", "ref_dddY"]
        names += ["err_lambda1", "err_Y", "err_vY", "err_eta"]
        if self.with_probe:
            names += ["probe_w_lam2", "probe_w2_lam2", "probe_a", "probe_b",
                      "probe_c", "probe_vq1", "probe_washout_c6"]
            names += [f"pipe_phi1_{i}" for i in range(3)]
            names += [f"pipe_phi2_{i}" for i in range(3)]
            names += [f"pipe_a_{i}" for i in range(5)]
            names += [f"pipe_b_{i}" for i in range(5)]
            names += [f"pipe_c_{i}" for i in range(5)]
        return names

    def sample(self, x, t, U):
        p = self.p
        lam, Y = x[_O_L], x[_O_Y]
        y = plantmod.current_1dof(lam, Y, p)
        psi = x[_O_PSI]
        eta_hat = x[_O_ETA]
        flux_hat = psi + eta_hat
        flux_o = self._observer_flux(x)
        v_hat = mech.speed_output_1dof(x[_O_CHI], y, flux_o, p.k, self.obs.gamma_Y)
        pipe_s = x[_O_PIPE:_O_PIPE + pebo.PIPELINE_SIZE]
        sig = self.pipe.signals(pipe_s, y, U[0], psi)
        fst = x[_O_F:_O_F + 24].reshape(4, 6)
        er = drem.extend_one_dof(sig.z, sig.phi, fst)
        ref = ctl.chain_outputs(x[_O_REF:_O_REF + 4], self.nu_ref)
        row = [t, lam, Y, x[_O_VY], flux_hat, x[_O_YH], v_hat, U[0], y,
               er.delta, x[_O_EX], psi, eta_hat]
        row += [sig.z, *sig.phi]
        row += [*sig.coeffs, er.mixed[0], sig.q1, sig.omega1]
        row += [*ref]
        row += [lam - flux_hat, Y - x[_O_YH], x[_O_VY] - v_hat, eta_hat - self._eta_true]
        if self.with_probe:
            pr = self.probe.outputs(x[_O_PROBE:_O_PROBE + 7], sig.c6)
            row += [pr["w_lam2"], pr["w2_lam2"], pr["a"], pr["b"], pr["c"],
                    pr["v_q1_tail"], pr["washout_c6"]]
            row += [*sig.phi1.coeffs]
            row += [*sig.phi2.coeffs]
            row += [*sig.prod_a.coeffs]
            row += [*sig.prod_b.coeffs]
            row += [*sig.prod_c.coeffs]
        return row

    def prepare_meta(self):
        ic = self.cfg.init
        self._eta_true = ic.lam[0] - ic.psi[0]
        return {"eta_true": self._eta_true}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _make_loop(cfg: ScenarioConfig):
    return TwoDofLoop(cfg) if cfg.system == TWO_DOF else OneDofLoop(cfg)


def _blame(loop, x) -> str:
    bad = np.flatnonzero(~np.isfinite(x))
    names = []
    for rng, name in loop.blocks():
        if any(i in rng for i in bad):
            names.append(name)
    return ",".join(names) if names else "unknown"


def run_scenario(cfg: ScenarioConfig) -> RunRecord:
    """Run one validated scenario to completion; deterministic."""
    cfg.validate()
    loop = _make_loop(cfg)
    meta = loop.prepare_meta()
    dt = cfg.dt
    n_steps = int(round(cfg.horizon / dt))
    x = loop.state0()

    names = loop.column_names()
    rows = []
    events = []
    # events are recorded on entry transitions, not every step
    viol = {name: False for name, _ in loop.domain_flags(x)}
    ctl_flags: dict = {}

    for i in range(n_steps + 1):
        t = i * dt
        for name, flag in loop.domain_flags(x):
            if flag and not viol[name]:
                events.append({"t": t, "kind": "domain_violation",
                               "detail": f"|{name}| >= gap"})
                if cfg.abort_on_domain_violation:
                    raise DomainViolationAbort(name, t)
            viol[name] = flag
        U, flags = loop.controls(x, t)
        for kind, active in flags.items():
            if active and not ctl_flags.get(kind, False):
                events.append({"t": t, "kind": kind, "detail": "entered"})
            ctl_flags[kind] = active
        if i % cfg.record_every == 0:
            rows.append(loop.sample(x, t, U))
        if i == n_steps:
            break
        try:
            k1 = loop.deriv(x, t, t)
            k2 = loop.deriv(x + 0.5 * dt * k1, t + 0.5 * dt, t)
            k3 = loop.deriv(x + 0.5 * dt * k2, t + 0.5 * dt, t)
            k4 = loop.deriv(x + dt * k3, t + dt, t)
        except OverflowError:
            raise NumericFailure("state growth overflowed a derivative", (i + 1) * dt) from None
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NumericFailure(_blame(loop, x), (i + 1) * dt)

    data = np.asarray(rows, dtype=float)
    columns = {name: data[:, j].copy() for j, name in enumerate(names)}
    return RunRecord(config=cfg, columns=columns, events=events, meta=meta)


def _run_one(cfg: ScenarioConfig) -> RunRecord:
    return run_scenario(cfg)


def run_many(cfgs, parallel: bool = False, max_workers=None):
    """Run several scenarios; optionally in separate processes.

    Each run's state is fully private, so parallel execution returns the
    same records as sequential execution (order preserved).
    """
    cfgs = list(cfgs)
    if not parallel or len(cfgs) <= 1:
        return [run_scenario(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=max_workers) as ex:
        return list(ex.map(_run_one, cfgs))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _mono_verdict(err: np.ndarray, slack: float = 1e-9) -> bool:
    a = np.abs(err)
    return bool(np.all(np.diff(a) <= slack))


def metrics(rec: RunRecord) -> dict:
    """Summary metrics of one run (JSON-serializable)."""
    cols = rec.columns
    t = cols["t"]
    out = {"name": rec.config.name, "system": rec.config.system,
           "n_samples": int(len(t)), "horizon": float(t[-1]) if len(t) else 0.0}

    def chan_stats(names):
        for n in names:
            e = cols[n]
            out[f"max_abs_{n}"] = float(np.max(np.abs(e)))
            out[f"final_abs_{n}"] = float(abs(e[-1]))

    tail10 = slice(max(0, int(math.floor(len(t) * 0.9))), None)
    tail20_start = max(0, int(math.floor(len(t) * 0.8)))

    if rec.config.system == TWO_DOF:
        chan_stats([f"err_lambda{i}" for i in range(1, 5)]
                   + ["err_Y", "err_vY", "err_X", "err_vX"])
        mono = {f"theta{i}": _mono_verdict(cols[f"err_theta{i}"]) for i in range(1, 5)}
        out["parameter_error_monotone"] = mono
        out["parameter_error_monotone_all"] = bool(all(mono.values()))
        for ch in ("1", "2"):
            ex = cols[f"intDelta2_{ch}"]
            out[f"excitation_final_{ch}"] = float(ex[-1])
            if len(t) > 1:
                span = t[-1] - t[tail20_start]
                out[f"excitation_growth_rate_{ch}"] = (
                    float((ex[-1] - ex[tail20_start]) / span) if span > 0 else 0.0)
        out["sstrack_Y"] = float(np.max(np.abs(cols["Y"][tail10] - cols["ref_Y"][tail10])))
        out["sstrack_X"] = float(np.max(np.abs(cols["X"][tail10] - cols["ref_X"][tail10])))
    else:
        chan_stats(["err_lambda1", "err_Y", "err_vY", "err_eta"])
        mono = {"eta": _mono_verdict(cols["err_eta"])}
        out["parameter_error_monotone"] = mono
        out["parameter_error_monotone_all"] = bool(all(mono.values()))
        ex = cols["intDelta2_1"]
        out["excitation_final_1"] = float(ex[-1])
        if len(t) > 1:
            span = t[-1] - t[tail20_start]
            out["excitation_growth_rate_1"] = (
                float((ex[-1] - ex[tail20_start]) / span) if span > 0 else 0.0)
        out["sstrack_Y"] = float(np.max(np.abs(cols["Y"][tail10] - cols["ref_Y"][tail10])))

    out["events"] = rec.events
    return out


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def emit_csv(rec: RunRecord, path) -> str:
    """Write the record as CSV: header row, time first, full precision.

    Values are written with shortest round-tripping decimal text, so
    reading the file back reproduces the exact doubles.
    """
    names = list(rec.columns.keys())
    cols = [rec.columns[n] for n in names]
    n = rec.n_samples
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(repr(float(c[i])) for c in cols))
    text = "\n".join(lines) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return str(path)


_PANELS_2DOF = [
    ("position_y", ["Y", "ref_Y", "hat_Y"], "vertical position and reference [m]"),
    ("position_x", ["X", "ref_X", "hat_X"], "horizontal position and reference [m]"),
    ("flux_error_1", ["err_lambda1"], "flux estimation error, coil 1 [Wb]"),
    ("flux_error_2", ["err_lambda2"], "flux estimation error, coil 2 [Wb]"),
    ("flux_error_3", ["err_lambda3"], "flux estimation error, coil 3 [Wb]"),
    ("flux_error_4", ["err_lambda4"], "flux estimation error, coil 4 [Wb]"),
    ("position_error_y", ["err_Y"], "position observer error Y [m]"),
    ("position_error_x", ["err_X"], "position observer error X [m]"),
    ("speed_error_y", ["err_vY"], "speed observer error Y [m/s]"),
    ("speed_error_x", ["err_vX"], "speed observer error X [m/s]"),
    ("excitation", ["intDelta2_1", "intDelta2_2"], "integral of Delta^2"),
]

_PANELS_1DOF = [
    ("position_y", ["Y", "ref_Y", "hat_Y"], "position and reference [m]"),
    ("flux_error_1", ["err_lambda1"], "flux estimation error [Wb]"),
    ("position_error_y", ["err_Y"], "position observer error [m]"),
    ("speed_error_y", ["err_vY"], "speed observer error [m/s]"),
    ("offset_error", ["err_eta"], "flux-offset estimation error [Wb]"),
    ("excitation", ["intDelta2_1"], "integral of Delta^2"),
]


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "maglev-sensorless"
    return plt


def emit_plots(rec: RunRecord, outdir) -> list:
    """One deterministic vector-graphic file per channel group."""
    plt = _plt()
    os.makedirs(outdir, exist_ok=True)
    panels = _PANELS_2DOF if rec.config.system == TWO_DOF else _PANELS_1DOF
    t = rec.t
    written = []
    for stem, cols, ylabel in panels:
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        for name in cols:
            ax.plot(t, rec.columns[name], label=name, linewidth=1.0)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        if len(cols) > 1:
            ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = os.path.join(outdir, f"{rec.config.name}_{stem}.svg")
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def emit_overlay(recs, column: str, path) -> str:
    """Overlay one channel from several runs (e.g. a gain sweep) in one file."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for rec in recs:
        ax.plot(rec.t, rec.columns[column], label=rec.config.name, linewidth=1.0)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(column)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return str(path)
