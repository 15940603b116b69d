"""Declarative scenario configuration.

A scenario is one closed-loop run: plant constants, controller, observer
and estimator gains, reference, initial conditions, clock and output
options.  Configurations validate before running and round-trip through
JSON field-for-field, so every run is reproducible from a single file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .control import FlcParams, IdapbcParams
from .plant import PlantParams

__all__ = [
    "ValidationError",
    "ObserverGains",
    "DremConfig",
    "PipelineConfig",
    "ReferenceConfig",
    "InitialConditions",
    "ScenarioConfig",
]

TWO_DOF = "two-dof"
ONE_DOF = "one-dof"


class ValidationError(ValueError):
    """A configuration field failed validation; names the field."""

    def __init__(self, fieldname: str, reason: str):
        self.fieldname = fieldname
        self.reason = reason
        super().__init__(f"{fieldname}: {reason}")


@dataclass
class ObserverGains:
    """Speed (gamma) and position (mu) observer gains per axis."""

    gamma_Y: float
    mu_Y: float
    gamma_X: float = 0.0
    mu_X: float = 0.0


@dataclass
class DremConfig:
    """Filter bank (kappa_j/(p+nu_j), j=1..4) and estimator gains.

    For the 2-dof system the bank splits by channel (filters 1, 2 extend
    the vertical regression, 3, 4 the horizontal one) and ``gains`` has
    one entry per estimated offset; for 1-dof all four filters extend
    the single regression and ``gains`` has one entry.
    """

    kappas: tuple
    nus: tuple
    gains: tuple


@dataclass
class PipelineConfig:
    """1-dof regression pipeline rates: lowpass mu, washout rho."""

    mu: float = 10.0
    rho: float = 0.01


@dataclass
class ReferenceConfig:
    """Reference generator description.

    kind:
      "steps"          2-dof piecewise-constant (times + x/y values)
      "circle"         2-dof circle (amplitude, omega)
      "filtered-sines" 1-dof chain on sin t + sin 2t + 0.5 sin(3.7t + pi/3)
      "filtered-steps" 1-dof chain on a step schedule (times + y values)
    """

    kind: str
    times: tuple = ()
    x_values: tuple = ()
    y_values: tuple = ()
    amplitude: float = 0.1
    omega: float = 0.1
    nu: float = 10.0


@dataclass
class InitialConditions:
    """Plant, extension, estimator and observer initial values.

    ``flux_hat`` seeds the offset estimators as flux_hat - psi; for the
    1-dof system ``eta_hat`` seeds the single estimator directly.
    """

    lam: tuple = ()
    Y: float = 0.0
    vY: float = 0.0
    X: float = 0.0
    vX: float = 0.0
    psi: tuple = ()
    flux_hat: tuple = ()
    eta_hat: float = 0.0
    Y_hat: float = 0.0
    vY_hat: float = 0.0
    X_hat: float = 0.0
    vX_hat: float = 0.0


@dataclass
class ScenarioConfig:
    name: str
    system: str
    plant: PlantParams
    reference: ReferenceConfig
    observers: ObserverGains
    drem: DremConfig
    init: InitialConditions
    horizon: float
    dt: float = 1e-4
    record_every: int = 10
    idapbc: IdapbcParams | None = None
    flc: FlcParams | None = None
    pipeline: PipelineConfig | None = None
    god_flux: bool = False           # observers see the true flux
    god_state: bool = False          # controller sees the true state
    god_diagnostics: bool = False    # co-integrate truth probes (1-dof)
    abort_on_domain_violation: bool = False
    # force floor of the linearizing gain; loose floors admit start-up
    # voltage spikes that a fixed step cannot resolve
    flc_f_min: float = 2e-3

    # -- validation ---------------------------------------------------------

    def validate(self) -> "ScenarioConfig":
        if self.system not in (TWO_DOF, ONE_DOF):
            raise ValidationError("system", f"must be '{TWO_DOF}' or '{ONE_DOF}', got {self.system!r}")
        if not self.dt > 0.0:
            raise ValidationError("dt", f"must be positive, got {self.dt!r}")
        if self.horizon < 0.0:
            raise ValidationError("horizon", f"must be nonnegative, got {self.horizon!r}")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ValidationError("record_every", f"must be an integer >= 1, got {self.record_every!r}")
        try:
            PlantParams(self.plant.m, self.plant.k, self.plant.c, self.plant.R, self.plant.g)
        except ValueError as e:
            raise ValidationError("plant", str(e)) from None

        if len(self.drem.kappas) != 4 or len(self.drem.nus) != 4:
            raise ValidationError("drem", "needs exactly four filters (kappas, nus)")
        if any(not v > 0.0 for v in self.drem.kappas):
            raise ValidationError("drem.kappas", "filter gains must be positive")
        if any(not v > 0.0 for v in self.drem.nus):
            raise ValidationError("drem.nus", "filter poles must be positive")
        if any(not g > 0.0 for g in self.drem.gains):
            raise ValidationError("drem.gains", "estimator gains must be positive")

        if self.system == TWO_DOF:
            self._validate_two_dof()
        else:
            self._validate_one_dof()
        return self

    def _validate_two_dof(self):
        if self.idapbc is None:
            raise ValidationError("idapbc", "2-dof scenarios need the energy-shaping controller")
        try:
            IdapbcParams(self.idapbc.alpha, self.idapbc.beta, self.idapbc.Gamma,
                         self.idapbc.Ra, self.idapbc.lam2_star, self.idapbc.lam4_star)
        except ValueError as e:
            raise ValidationError("idapbc", str(e)) from None
        if self.reference.kind not in ("steps", "circle"):
            raise ValidationError("reference.kind",
                                  f"2-dof supports 'steps' or 'circle', got {self.reference.kind!r}")
        if self.reference.kind == "steps":
            if len(self.reference.x_values) != len(self.reference.times) + 1 \
                    or len(self.reference.y_values) != len(self.reference.times) + 1:
                raise ValidationError("reference", "step schedule needs len(times)+1 values per axis")
        # identical poles within a channel pair make the extension rows
        # identical and freeze the estimators; reject early
        if self.drem.nus[0] == self.drem.nus[1] and self.drem.kappas[0] == self.drem.kappas[1]:
            raise ValidationError("drem.nus", "channel-1 filters must differ (else Delta1 is 0)")
        if self.drem.nus[2] == self.drem.nus[3] and self.drem.kappas[2] == self.drem.kappas[3]:
            raise ValidationError("drem.nus", "channel-2 filters must differ (else Delta2 is 0)")
        if len(self.drem.gains) != 4:
            raise ValidationError("drem.gains", "2-dof needs four estimator gains")
        if len(self.init.lam) != 4 or len(self.init.psi) != 4 or len(self.init.flux_hat) != 4:
            raise ValidationError("init", "2-dof needs 4-entry lam, psi and flux_hat")
        for g in (self.observers.gamma_Y, self.observers.mu_Y,
                  self.observers.gamma_X, self.observers.mu_X):
            if not g > 0.0:
                raise ValidationError("observers", "2-dof observer gains must all be positive")

    def _validate_one_dof(self):
        if self.flc is None:
            raise ValidationError("flc", "1-dof scenarios need the feedback-linearizing controller")
        try:
            FlcParams(self.flc.k0, self.flc.k1, self.flc.k2)
        except ValueError as e:
            raise ValidationError("flc", str(e)) from None
        if self.pipeline is None:
            raise ValidationError("pipeline", "1-dof scenarios need pipeline rates (mu, rho)")
        if not self.pipeline.mu > 0.0 or not self.pipeline.rho > 0.0:
            raise ValidationError("pipeline", "mu and rho must be positive")
        if self.reference.kind not in ("filtered-sines", "filtered-steps"):
            raise ValidationError(
                "reference.kind",
                f"1-dof supports 'filtered-sines' or 'filtered-steps', got {self.reference.kind!r}")
        if self.reference.kind == "filtered-steps" \
                and len(self.reference.y_values) != len(self.reference.times) + 1:
            raise ValidationError("reference", "step schedule needs len(times)+1 values")
        if not self.reference.nu > 0.0:
            raise ValidationError("reference.nu", "chain rate must be positive")
        if len(set(zip(self.drem.kappas, self.drem.nus))) < 4:
            raise ValidationError("drem", "the four filters must be pairwise distinct (else Delta is 0)")
        if len(self.drem.gains) != 1:
            raise ValidationError("drem.gains", "1-dof needs exactly one estimator gain")
        if len(self.init.lam) != 1 or len(self.init.psi) != 1:
            raise ValidationError("init", "1-dof needs single-entry lam and psi")
        for g in (self.observers.gamma_Y, self.observers.mu_Y):
            if not g > 0.0:
                raise ValidationError("observers", "observer gains must be positive")
        if not self.flc_f_min > 0.0:
            raise ValidationError("flc_f_min", "force floor must be positive")

    # -- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, path=None, **dump_kwargs) -> str:
        text = json.dumps(self.to_dict(), indent=2, **dump_kwargs)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)

        def tup(x):
            return tuple(x) if x is not None else ()

        plant = PlantParams(**d.pop("plant"))
        reference = d.pop("reference")
        reference = ReferenceConfig(
            kind=reference["kind"],
            times=tup(reference.get("times", ())),
            x_values=tup(reference.get("x_values", ())),
            y_values=tup(reference.get("y_values", ())),
            amplitude=reference.get("amplitude", 0.1),
            omega=reference.get("omega", 0.1),
            nu=reference.get("nu", 10.0),
        )
        observers = ObserverGains(**d.pop("observers"))
        drem = d.pop("drem")
        drem = DremConfig(kappas=tup(drem["kappas"]), nus=tup(drem["nus"]),
                          gains=tup(drem["gains"]))
        init = d.pop("init")
        init = InitialConditions(
            lam=tup(init.get("lam", ())), Y=init.get("Y", 0.0), vY=init.get("vY", 0.0),
            X=init.get("X", 0.0), vX=init.get("vX", 0.0), psi=tup(init.get("psi", ())),
            flux_hat=tup(init.get("flux_hat", ())), eta_hat=init.get("eta_hat", 0.0),
            Y_hat=init.get("Y_hat", 0.0), vY_hat=init.get("vY_hat", 0.0),
            X_hat=init.get("X_hat", 0.0), vX_hat=init.get("vX_hat", 0.0),
        )
        idapbc = d.pop("idapbc", None)
        if idapbc is not None:
            idapbc = IdapbcParams(**idapbc)
        flc = d.pop("flc", None)
        if flc is not None:
            flc = FlcParams(**flc)
        pipeline = d.pop("pipeline", None)
        if pipeline is not None:
            pipeline = PipelineConfig(**pipeline)
        return cls(plant=plant, reference=reference, observers=observers, drem=drem,
                   init=init, idapbc=idapbc, flc=flc, pipeline=pipeline, **d)

    @classmethod
    def from_json(cls, source) -> "ScenarioConfig":
        """Load from a JSON string or a file path."""
        text = source
        if "\n" not in str(source) and str(source).lstrip()[:1] != "{":
            with open(source) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))
