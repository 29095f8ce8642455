"""Performance models: quality, utility and resource requirements per task type.

Every model function is written against numpy broadcasting, so a configuration
may hold scalars (one configuration) or equally shaped arrays (a whole grid).
The tracking model follows the radar range equation and a steady-state
nearly-constant-velocity Kalman filter; the other nine task types use the same
four-step recipe (goal, parameters, quality/resources, utility) with saturating
satisfaction curves whose constants live in the configuration file.
"""
from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, ClassVar, Mapping, Sequence

import numpy as np

from .errors import CombinationError, ConfigurationError, DomainError

SPEED_OF_LIGHT = 2.99792458e8
BOLTZMANN = 1.380649e-23
UTILITY_DUST = 1e-12

__all__ = [
    "SPEED_OF_LIGHT",
    "Emcon",
    "Calibration",
    "SystemParams",
    "MissionParams",
    "Environment",
    "UtilityParams",
    "CompositionParams",
    "TaskSpec",
    "TaskModel",
    "ModelSet",
    "snr",
    "measurement_sigmas",
    "ncv_prior_variance",
    "track_error_model",
    "tracking_quality",
    "task_duration",
    "tracking_resources",
    "tracking_weight",
    "tracking_utility",
    "generic_task_model",
    "combined_task_model",
    "satisfaction_ramp",
]


class Emcon(str, Enum):
    NONE = "NONE"
    BRAVO = "BRAVO"


@dataclass(frozen=True)
class Calibration:
    """Reference point at which :func:`snr` returns ``snr_db`` exactly."""

    config: Mapping[str, float]
    range: float
    snr_db: float
    rcs: float = 1.0


def _default_calibration() -> Calibration:
    return Calibration(
        config={"n_az": 16, "n_el": 16, "n_p": 1, "tau": 1e-5, "wavelength": 0.03},
        range=100e3,
        snr_db=13.0,
    )


@dataclass(frozen=True)
class SystemParams:
    n_elements: int = 256
    duty_limit: float = 0.25
    noise_temperature: float = 500.0  # K
    element_power: float = 10.0  # W
    element_gain: float = 3.14
    element_spacing: float = 0.015  # m
    epoch: float = 1.0  # s
    detection_floor_db: float = 10.0
    error_cap: float = 6000.0  # m
    calibration: Calibration | None = field(default_factory=_default_calibration)

    def __post_init__(self):
        if not 0.0 < self.duty_limit <= 1.0:
            raise DomainError(f"duty_limit must lie in (0, 1], got {self.duty_limit}")
        if self.n_elements < 1:
            raise DomainError("n_elements must be positive")
        if self.epoch <= 0:
            raise DomainError("epoch must be positive")

    @cached_property
    def calibration_offset_db(self) -> float:
        cal = self.calibration
        if cal is None:
            return 0.0
        raw = _raw_snr_db(cal.config, cal.range, cal.rcs, self)
        return float(cal.snr_db - raw)


@dataclass(frozen=True)
class MissionParams:
    false_alarm_rate: float = 1e-6
    volume_sr: float = 2.0
    emcon: Emcon = Emcon.NONE


@dataclass(frozen=True)
class Environment:
    """Everything a performance model needs that the resource manager does not control.

    ``target_range`` is the distance to whatever the task points at (target,
    scene, ground station or emitter). ``update_interval`` defaults to the
    allocation epoch. ``coast_error`` is set by the simulator for track
    requests: the RMS error the track would have if it is not updated.
    """

    target_range: float
    radial_velocity: float = 0.0
    target_priority: float = 1.0
    process_noise: float = 1.0  # m^2/s^3
    rcs: float = 1.0  # m^2
    loss_db: float = 0.0
    update_interval: float | None = None
    coast_error: float | None = None
    system: SystemParams = field(default_factory=SystemParams)
    mission: MissionParams = field(default_factory=MissionParams)

    def __post_init__(self):
        if not self.target_range > 0:
            raise DomainError(f"target_range must be positive, got {self.target_range}")
        if not self.target_priority > 0:
            raise DomainError(f"target_priority must be positive, got {self.target_priority}")

    @property
    def interval(self) -> float:
        return self.system.epoch if self.update_interval is None else self.update_interval


@dataclass(frozen=True)
class UtilityParams:
    k_r: float = 20e3  # m
    beta: float = 1000.0  # m
    velocity_floor: float = 0.0  # m/s

    def __post_init__(self):
        if self.k_r <= 0 or self.beta <= 0:
            raise DomainError("k_r and beta must be positive")


@dataclass(frozen=True)
class CompositionParams:
    """Penalties applied to members of combined blocks."""

    multifunction_factor: float = 0.9
    isolation_db: float = 3.0


# --------------------------------------------------------------------------
# Radar equation and tracking model
# --------------------------------------------------------------------------

def _f(config: Mapping[str, Any], key: str):
    return np.asarray(config[key], dtype=float)


def _raw_snr_db(config, target_range, rcs, system: SystemParams):
    n = _f(config, "n_az") * _f(config, "n_el")
    power = system.element_power * n
    gain = system.element_gain * n
    energy = power * _f(config, "tau") * _f(config, "n_p")
    num = energy * gain * gain * _f(config, "wavelength") ** 2 * rcs
    den = (4 * math.pi) ** 3 * np.asarray(target_range, dtype=float) ** 4 * BOLTZMANN * system.noise_temperature
    return 10.0 * np.log10(num / den)


def snr(config: Mapping[str, Any], env: Environment, penalty_db: float = 0.0):
    """Integrated SNR in dB.

    Transmit power, transmit gain and receive aperture each scale with the
    number of active elements, so SNR grows as ``n_tot**3``; integrating
    ``n_p`` pulses adds ``10 log10(n_p)``.
    """
    system = env.system
    return (
        _raw_snr_db(config, env.target_range, env.rcs, system)
        + system.calibration_offset_db
        - env.loss_db
        - penalty_db
    )


def measurement_sigmas(config: Mapping[str, Any], env: Environment, snr_db):
    """Range, azimuth cross-range and elevation cross-range standard deviations in metres."""
    snr_lin = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    root = np.sqrt(2.0 * snr_lin)
    d = env.system.element_spacing
    lam = _f(config, "wavelength")
    sigma_range = SPEED_OF_LIGHT / (2.0 * _f(config, "bandwidth") * root)
    theta_az = lam / (_f(config, "n_az") * d)
    theta_el = lam / (_f(config, "n_el") * d)
    sigma_az = env.target_range * theta_az / (1.6 * root)
    sigma_el = env.target_range * theta_el / (1.6 * root)
    return sigma_range, sigma_az, sigma_el


def ncv_prior_variance(sigma, q, interval):
    """Steady-state one-step-ahead position variance of a 1-D NCV Kalman filter.

    Continuous white-noise-acceleration model with intensity ``q`` (m^2/s^3),
    position measurements with standard deviation ``sigma`` every ``interval``
    seconds. Closed form of the 2x2 discrete Riccati fixed point: with
    ``rho = q T^3 / sigma^2`` the normalised variance is ``y^2 - 1`` where
    ``y + 1/y = (sqrt(rho) + sqrt(rho/3 + 16)) / 2``.
    """
    sigma = np.asarray(sigma, dtype=float)
    q = np.asarray(q, dtype=float)
    t = np.asarray(interval, dtype=float)
    r = sigma * sigma
    qt3 = q * t ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(r > 0, qt3 / np.where(r > 0, r, 1.0), 0.0)
        a = np.sqrt(rho)
        z = 0.5 * (a + np.sqrt(rho / 3.0 + 16.0))
        y = 0.5 * (z + np.sqrt(np.maximum(z * z - 4.0, 0.0)))
        var = r * (y * y - 1.0)
    # noiseless measurements: limit sigma -> 0
    var = np.where(r > 0, var, qt3 * (2.0 + math.sqrt(3.0)) / 6.0)
    return np.maximum(var, 0.0)


def track_error_model(config: Mapping[str, Any], env: Environment, time_since_update, penalty_db: float = 0.0):
    """Expected RMS horizontal position error (m) of a track maintained with ``config``.

    Uses the steady-state prediction error of an NCV filter along the range
    and azimuth cross-range axes. Below the detection floor the track is
    considered lost and the configured error cap is returned.
    """
    dt = np.asarray(time_since_update, dtype=float)
    if np.any(dt < 0):
        raise DomainError("time_since_update must be nonnegative")
    system = env.system
    s = snr(config, env, penalty_db)
    sig_r, sig_az, _ = measurement_sigmas(config, env, s)
    var = ncv_prior_variance(sig_r, env.process_noise, dt) + ncv_prior_variance(sig_az, env.process_noise, dt)
    err = np.minimum(np.sqrt(var), system.error_cap)
    return np.where(s < system.detection_floor_db, system.error_cap, err)


def tracking_quality(config, env: Environment, dt, penalty_db: float = 0.0) -> dict:
    err = track_error_model(config, env, dt, penalty_db)
    return {"track_error": err, "q": 1.0 / np.maximum(err, 1e-9)}


def task_duration(n_p, prf, tau, target_range, c: float = SPEED_OF_LIGHT):
    """Dwell time: pulse train, last pulse and the round trip of its echo."""
    n_p = np.asarray(n_p, dtype=float)
    return (n_p - 1.0) / np.asarray(prf, dtype=float) + np.asarray(tau, dtype=float) + 2.0 * np.asarray(target_range, dtype=float) / c


def tracking_resources(config: Mapping[str, Any], env: Environment) -> np.ndarray:
    """``[element fraction, timeline fraction]``, stacked on the last axis."""
    frac = _f(config, "n_az") * _f(config, "n_el") / env.system.n_elements
    t = task_duration(config["n_p"], config["prf"], config["tau"], env.target_range) / env.system.epoch
    frac, t = np.broadcast_arrays(frac, t)
    return np.stack([frac, t], axis=-1)


def tracking_weight(env: Environment, params: UtilityParams = UtilityParams()) -> float:
    v = max(abs(env.radial_velocity), params.velocity_floor)
    return env.target_priority * v / (env.target_range + params.k_r)


def tracking_utility(q, env: Environment, params: UtilityParams = UtilityParams()):
    """``w (1 - exp(-beta q))`` with ``w = K_t v / (R + K_R)``."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise DomainError("quality q must be nonnegative")
    u = tracking_weight(env, params) * (1.0 - np.exp(-params.beta * q))
    return u if u.ndim else float(u)


# --------------------------------------------------------------------------
# Generic saturating satisfaction
# --------------------------------------------------------------------------

def satisfaction_ramp(value, minimum, required, sharpness: float = 3.0):
    """Non-weighted satisfaction in [0, 1].

    0 at or beyond ``minimum`` (requirement not met), exactly 1 once
    ``required`` is reached, concave in between. Works for lower-is-better
    qualities by passing ``minimum > required``.
    """
    x = (np.asarray(value, dtype=float) - minimum) / (required - minimum)
    x = np.clip(x, 0.0, 1.0)
    if sharpness <= 0:
        return x
    return -np.expm1(-sharpness * x) / -math.expm1(-sharpness)


# --------------------------------------------------------------------------
# Task models
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TaskSpec:
    """A task request: its type, the grid spanning its operational space and mission settings."""

    name: str
    task_type: str
    grid: Mapping[str, Sequence[float]] = field(default_factory=dict)
    weight: float = 1.0
    priority: int = 0
    direction: float = 0.0  # rad, absolute bearing of the beam
    band: tuple[float, float] | None = None  # Hz

    def __post_init__(self):
        frozen = tuple((k, tuple(float(x) for x in np.atleast_1d(v))) for k, v in dict(self.grid).items())
        object.__setattr__(self, "grid", dict(frozen))
        object.__setattr__(self, "_grid_key", frozen)

    @property
    def grid_key(self) -> tuple:
        return self._grid_key

    def pointed(self, direction: float) -> "TaskSpec":
        """Copy aimed at another bearing (skips grid normalisation)."""
        out = copy.copy(self)
        object.__setattr__(out, "direction", float(direction))
        return out


class TaskModel:
    """Base class; subclasses fill in quality, satisfaction and resources."""

    task_type: ClassVar[str] = ""
    category: ClassVar[str] = "radar"  # radar | ea | comm | ew_receive
    continuous: ClassVar[bool] = False
    grid_keys: ClassVar[tuple[str, ...]] = ()
    grid_defaults: ClassVar[dict[str, float]] = {}
    defaults: ClassVar[dict[str, float]] = {}
    senses: ClassVar[dict[str, int]] = {}

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ConfigurationError(f"unknown parameter(s) for {self.task_type}: {sorted(unknown)}")
        self.params = {**self.defaults, **{k: float(v) for k, v in params.items()}}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"

    @property
    def transmits(self) -> bool:
        return self.category != "ew_receive"

    def p(self, key: str) -> float:
        return self.params[key]

    # grid handling -------------------------------------------------------
    def expand(self, grid: Mapping[str, Sequence[float]]) -> dict[str, np.ndarray]:
        unknown = set(grid) - set(self.grid_keys)
        if unknown:
            raise ConfigurationError(f"unknown grid dimension(s) for {self.task_type}: {sorted(unknown)}")
        axes = []
        for key in self.grid_keys:
            values = grid.get(key, (self.grid_defaults[key],))
            if len(values) == 0:
                raise ConfigurationError(f"empty grid dimension {key!r} for {self.task_type}")
            axes.append(values)
        points = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, len(self.grid_keys))
        return {key: points[:, i] for i, key in enumerate(self.grid_keys)}

    def duty(self, cfg):
        if "prf" in cfg and "tau" in cfg:
            return _f(cfg, "prf") * _f(cfg, "tau")
        return np.zeros_like(_f(cfg, self.grid_keys[0]))

    def feasible(self, cfg, system: SystemParams):
        ok = _f(cfg, "n_az") * _f(cfg, "n_el") <= system.n_elements
        if self.transmits:
            ok = ok & (self.duty(cfg) <= system.duty_limit + 1e-12)
        return ok

    def standalone(self, cfg):
        """Configurations usable outside an interleaved block."""
        return np.ones_like(_f(cfg, self.grid_keys[0]), dtype=bool)

    def element_fraction(self, cfg, env: Environment):
        return _f(cfg, "n_az") * _f(cfg, "n_el") / env.system.n_elements

    def band(self, grid: Mapping[str, Sequence[float]]) -> tuple[float, float]:
        lam = np.asarray(grid.get("wavelength", (self.grid_defaults.get("wavelength", 0.03),)), dtype=float)
        bw = np.asarray(grid.get("bandwidth", (self.grid_defaults.get("bandwidth", 0.0),)), dtype=float)
        f = SPEED_OF_LIGHT / lam
        return float(f.min() - bw.max() / 2), float(f.max() + bw.max() / 2)

    # evaluation ----------------------------------------------------------
    def resources(self, cfg, env: Environment) -> np.ndarray:
        e = self.element_fraction(cfg, env)
        t = _f(cfg, "share")
        e, t = np.broadcast_arrays(e, t)
        return np.stack([e, t], axis=-1)

    def quality(self, cfg, env: Environment, penalty_db: float = 0.0) -> dict:
        raise NotImplementedError

    def satisfaction(self, quality: Mapping[str, np.ndarray], env: Environment):
        raise NotImplementedError

    def weight(self, env: Environment) -> float:
        return self.p("weight")

    def utility(self, quality, env: Environment):
        u = self.weight(env) * self.satisfaction(quality, env)
        return np.where(u < UTILITY_DUST, 0.0, u)

    def degrade(self, quality: Mapping[str, np.ndarray], factor: float) -> dict:
        """Scale every quality measure toward 'worse' by ``factor`` (< 1)."""
        out = {}
        for key, val in quality.items():
            sense = self.senses.get(key, 0)
            out[key] = val * factor if sense > 0 else val / factor if sense < 0 else val
        return out

    def evaluate(self, cfg, env: Environment, penalty_db: float = 0.0, factor: float = 1.0):
        res = self.resources(cfg, env)
        qual = self.quality(cfg, env, penalty_db)
        if factor != 1.0:
            qual = self.degrade(qual, factor)
        return res, qual, self.utility(qual, env)


def _ramp(model: TaskModel, value, key: str):
    return satisfaction_ramp(value, model.p(f"{key}_min"), model.p(f"{key}_required"), model.p("sharpness"))


_RADAR_GRID = ("n_az", "n_el", "prf", "n_p", "tau", "bandwidth", "wavelength")
_RADAR_DEFAULTS = {"n_az": 16, "n_el": 16, "prf": 2000.0, "n_p": 16, "tau": 1e-5, "bandwidth": 5e6, "wavelength": 0.03}


class TrackModel(TaskModel):
    task_type = "track"
    grid_keys = _RADAR_GRID
    grid_defaults = _RADAR_DEFAULTS
    defaults = {"weight": 1.0, "beta": 1000.0, "k_r": 20e3, "velocity_floor": 0.0}
    senses = {"track_error": -1, "q": 1}

    @cached_property
    def utility_params(self) -> UtilityParams:
        return UtilityParams(k_r=self.p("k_r"), beta=self.p("beta"), velocity_floor=self.p("velocity_floor"))

    def resources(self, cfg, env):
        return tracking_resources(cfg, env)

    def quality(self, cfg, env, penalty_db=0.0):
        return tracking_quality(cfg, env, env.interval, penalty_db)

    def satisfaction(self, quality, env):
        return -np.expm1(-self.p("beta") * np.asarray(quality["q"], dtype=float))

    def weight(self, env):
        return self.p("weight") * tracking_weight(env, self.utility_params)

    def utility(self, quality, env):
        u = self.weight(env) * self.satisfaction(quality, env)
        if env.coast_error is not None:
            # value of the update = improvement over letting the track coast
            u = u - self.weight(env) * -math.expm1(-self.p("beta") / max(env.coast_error, 1e-9))
        return np.where(u < UTILITY_DUST, 0.0, u)


class HrrpModel(TaskModel):
    """A/A high range resolution profile: fine range resolution at adequate SNR."""

    task_type = "hrrp"
    grid_keys = _RADAR_GRID
    grid_defaults = {**_RADAR_DEFAULTS, "bandwidth": 150e6}
    defaults = {
        "weight": 1.0, "sharpness": 3.0,
        "resolution_min": 3.0, "resolution_required": 0.5,
        "snr_min": 10.0, "snr_required": 20.0,
    }
    senses = {"resolution": -1, "snr": 1}

    def resources(self, cfg, env):
        return tracking_resources(cfg, env)

    def quality(self, cfg, env, penalty_db=0.0):
        res = SPEED_OF_LIGHT / (2.0 * _f(cfg, "bandwidth"))
        s = snr(cfg, env, penalty_db)
        res, s = np.broadcast_arrays(res, s)
        return {"resolution": res, "snr": s}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["resolution"], "resolution") * _ramp(self, quality["snr"], "snr")


class SurveillanceModel(TaskModel):
    """A/A volume search: revisit interval over the search volume and detection range."""

    task_type = "surveillance"
    grid_keys = ("n_az", "n_el", "share", "prf", "n_p", "tau", "wavelength")
    grid_defaults = {**_RADAR_DEFAULTS, "share": 0.5, "n_p": 32}
    defaults = {
        "weight": 1.0, "sharpness": 3.0, "snr_detect": 13.0,
        "revisit_min": 15.0, "revisit_required": 3.0,
        "detection_range_min": 20e3, "detection_range_required": 60e3,
    }
    senses = {"revisit": -1, "detection_range": 1}

    def quality(self, cfg, env, penalty_db=0.0):
        d = env.system.element_spacing
        lam = _f(cfg, "wavelength")
        beam = (lam / (_f(cfg, "n_az") * d)) * (lam / (_f(cfg, "n_el") * d))
        beams = np.maximum(env.mission.volume_sr / beam, 1.0)
        dwell = task_duration(cfg["n_p"], cfg["prf"], cfg["tau"], env.target_range)
        revisit = beams * dwell / _f(cfg, "share")
        s = snr(cfg, env, penalty_db)
        det = env.target_range * 10.0 ** ((s - self.p("snr_detect")) / 40.0)
        revisit, det = np.broadcast_arrays(revisit, det)
        return {"revisit": revisit, "detection_range": det}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["revisit"], "revisit") * _ramp(self, quality["detection_range"], "detection_range")


class SarModel(TaskModel):
    """A/G stripmap SAR: continuous illumination; shares below 1 exist only when interleaved."""

    task_type = "sar"
    continuous = True
    grid_keys = ("n_az", "n_el", "share", "prf", "n_p", "tau", "bandwidth", "wavelength")
    grid_defaults = {**_RADAR_DEFAULTS, "share": 1.0, "n_p": 256, "bandwidth": 150e6}
    defaults = {
        "weight": 10.0, "sharpness": 3.0, "dwell": 70.0,
        "resolution_min": 3.0, "resolution_required": 1.0,
        "snr_min": 5.0, "snr_required": 15.0,
    }
    senses = {"resolution": -1, "snr": 1, "rate": 1}

    def standalone(self, cfg):
        return _f(cfg, "share") >= 1.0 - 1e-12

    def quality(self, cfg, env, penalty_db=0.0):
        res = SPEED_OF_LIGHT / (2.0 * _f(cfg, "bandwidth"))
        s = snr(cfg, env, penalty_db)
        rate = _f(cfg, "share")
        res, s, rate = np.broadcast_arrays(res, s, rate)
        return {"resolution": res, "snr": s, "rate": rate}

    def satisfaction(self, quality, env):
        return (
            _ramp(self, quality["resolution"], "resolution")
            * _ramp(self, quality["snr"], "snr")
            * np.clip(quality["rate"], 0.0, 1.0)
        )


class GmtiModel(TaskModel):
    """A/G wide-area GMTI: area coverage per epoch at sufficient SNR; wide beams cover faster."""

    task_type = "gmti"
    grid_keys = ("n_az", "n_el", "share", "prf", "n_p", "tau", "wavelength")
    grid_defaults = {**_RADAR_DEFAULTS, "share": 0.5, "n_p": 64}
    defaults = {
        "weight": 3.0, "sharpness": 3.0, "full_share": 0.8, "reference_az": 16.0,
        "coverage_min": 0.1, "coverage_required": 1.0,
        "snr_min": 8.0, "snr_required": 15.0,
    }
    senses = {"coverage": 1, "snr": 1}

    def quality(self, cfg, env, penalty_db=0.0):
        cov = np.minimum(_f(cfg, "share") / self.p("full_share") * self.p("reference_az") / _f(cfg, "n_az"), 1.0)
        s = snr(cfg, env, penalty_db)
        cov, s = np.broadcast_arrays(cov, s)
        return {"coverage": cov, "snr": s}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["coverage"], "coverage") * _ramp(self, quality["snr"], "snr")


class InterceptModel(TaskModel):
    """Passive EW receive (radar warning, ESM): intercept probability over the epoch."""

    task_type = "rwr"
    category = "ew_receive"
    grid_keys = ("n_az", "n_el", "share")
    grid_defaults = {"n_az": 8, "n_el": 8, "share": 0.1}
    defaults = {
        "weight": 1.0, "sharpness": 3.0, "share_scale": 0.1,
        "sensitivity_ref": 20.0, "reference_range": 100e3,
        "sensitivity_min": 0.0, "sensitivity_required": 10.0,
        "intercept_min": 0.2, "intercept_required": 0.9,
        "band_low": 2e9, "band_high": 18e9,
    }
    senses = {"intercept": 1, "sensitivity": 1}

    def band(self, grid):
        return self.p("band_low"), self.p("band_high")

    def quality(self, cfg, env, penalty_db=0.0):
        n = _f(cfg, "n_az") * _f(cfg, "n_el")
        sens = (
            self.p("sensitivity_ref")
            + 10.0 * np.log10(n / env.system.n_elements)
            - 20.0 * np.log10(env.target_range / self.p("reference_range"))
            - penalty_db
        )
        gate = satisfaction_ramp(sens, self.p("sensitivity_min"), self.p("sensitivity_required"), 0.0)
        p = -np.expm1(-_f(cfg, "share") / self.p("share_scale")) * gate
        p, sens = np.broadcast_arrays(p, sens)
        return {"intercept": p, "sensitivity": sens}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["intercept"], "intercept")


class EsmModel(InterceptModel):
    task_type = "esm"
    defaults = {**InterceptModel.defaults, "share_scale": 0.15, "intercept_min": 0.3, "intercept_required": 0.95}


class AttackModel(TaskModel):
    """Electronic attack: jamming-to-signal ratio on the threat emitter."""

    task_type = "ea"
    category = "ea"
    grid_keys = ("n_az", "n_el", "share", "prf", "tau", "wavelength")
    grid_defaults = {"n_az": 16, "n_el": 16, "share": 0.2, "prf": 5000.0, "tau": 2e-5, "wavelength": 0.03}
    defaults = {
        "weight": 2.0, "sharpness": 3.0, "js_ref": 10.0, "reference_range": 50e3,
        "js_min": 0.0, "js_required": 10.0,
    }
    senses = {"js": 1}

    def quality(self, cfg, env, penalty_db=0.0):
        n = _f(cfg, "n_az") * _f(cfg, "n_el")
        js = (
            self.p("js_ref")
            + 20.0 * np.log10(n / env.system.n_elements)
            + 10.0 * np.log10(_f(cfg, "share") / 0.2)
            + 20.0 * np.log10(env.target_range / self.p("reference_range"))
            - penalty_db
        )
        return {"js": js}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["js"], "js")


class LinkModel(TaskModel):
    """Communication link: Shannon rate of the time share against the required rate."""

    task_type = "datalink"
    category = "comm"
    grid_keys = ("n_az", "n_el", "share", "bandwidth", "wavelength")
    grid_defaults = {"n_az": 8, "n_el": 8, "share": 0.1, "bandwidth": 10e6, "wavelength": 0.05}
    defaults = {
        "weight": 1.0, "sharpness": 3.0, "snr_ref": 10.0, "reference_range": 100e3,
        "rate_min": 0.5e6, "rate_required": 5e6,
    }
    senses = {"rate": 1, "snr": 1}

    def quality(self, cfg, env, penalty_db=0.0):
        n = _f(cfg, "n_az") * _f(cfg, "n_el")
        s = (
            self.p("snr_ref")
            + 20.0 * np.log10(n / env.system.n_elements)
            - 20.0 * np.log10(env.target_range / self.p("reference_range"))
            - penalty_db
        )
        rate = _f(cfg, "share") * _f(cfg, "bandwidth") * np.log2(1.0 + 10.0 ** (s / 10.0))
        rate, s = np.broadcast_arrays(rate, s)
        return {"rate": rate, "snr": s}

    def satisfaction(self, quality, env):
        return _ramp(self, quality["rate"], "rate")


class SarLinkModel(LinkModel):
    task_type = "sarcomm"
    defaults = {**LinkModel.defaults, "rate_min": 2e6, "rate_required": 20e6}


MODEL_TYPES: dict[str, type[TaskModel]] = {
    cls.task_type: cls
    for cls in (
        SurveillanceModel, TrackModel, HrrpModel, SarModel, GmtiModel,
        InterceptModel, EsmModel, AttackModel, LinkModel, SarLinkModel,
    )
}
TASK_TYPES = tuple(MODEL_TYPES)


class ModelSet(Mapping[str, TaskModel]):
    """Registry of parametrised models, one per task type. Immutable after construction."""

    def __init__(self, params: Mapping[str, Mapping[str, float]] | None = None):
        params = dict(params or {})
        unknown = set(params) - set(MODEL_TYPES)
        if unknown:
            raise ConfigurationError(f"unknown task type(s): {sorted(unknown)}")
        self._models = {name: cls(**params.get(name, {})) for name, cls in MODEL_TYPES.items()}

    def __getitem__(self, task_type: str) -> TaskModel:
        try:
            return self._models[task_type]
        except KeyError:
            raise ConfigurationError(f"unknown task type {task_type!r}") from None

    def __iter__(self):
        return iter(self._models)

    def __len__(self):
        return len(self._models)


DEFAULT_MODELS = ModelSet()


def _scalarize(quality: Mapping[str, Any]) -> dict[str, float]:
    return {k: float(v) for k, v in quality.items()}


def generic_task_model(task_type: str, config: Mapping[str, float], env: Environment, models: ModelSet | None = None):
    """Evaluate one configuration of any registered task type.

    Returns ``(resources, quality, utility)``.
    """
    model = (models or DEFAULT_MODELS)[task_type]
    cfg = {**model.grid_defaults, **config}
    res, qual, util = model.evaluate(cfg, env)
    return np.asarray(res, dtype=float), _scalarize(qual), float(util)


def combined_task_model(
    mode,
    members: Sequence[tuple[TaskSpec | str, Mapping[str, float]]],
    env: Environment | Sequence[Environment],
    models: ModelSet | None = None,
    composition: CompositionParams = CompositionParams(),
):
    """Resources, member qualities and summed utility of tasks executed as one block.

    ``mode`` is a concurrency mode name or enum value. Raises
    :class:`CombinationError` when the members cannot share the aperture.
    """
    mode = str(getattr(mode, "value", mode)).lower()
    models = models or DEFAULT_MODELS
    envs = list(env) if isinstance(env, (list, tuple)) else [env] * len(members)
    if len(members) > 1 and mode == "standard":
        raise CombinationError("standard mode executes tasks one at a time")
    penalty, factor = 0.0, 1.0
    if mode == "multioperation" and len(members) > 1:
        penalty = composition.isolation_db
    elif mode == "multifunction" and len(members) > 1:
        factor = composition.multifunction_factor
    resources, qualities, utility = [], [], 0.0
    for (task, cfg), e in zip(members, envs):
        task_type = task.task_type if isinstance(task, TaskSpec) else task
        weight = task.weight if isinstance(task, TaskSpec) else 1.0
        model = models[task_type]
        cfg = {**model.grid_defaults, **cfg}
        res, qual, util = model.evaluate(cfg, e, penalty, factor)
        resources.append(np.asarray(res, dtype=float))
        qualities.append(_scalarize(qual))
        utility += weight * float(util)
    r = np.array(resources)
    if len(members) == 1:
        return r[0], qualities, utility
    if mode == "multioperation":
        combined = np.array([r[:, 0].sum(), r[:, 1].max()])
        if combined[0] > 1.0 + 1e-12:
            raise CombinationError(f"subarrays oversubscribe the aperture ({combined[0]:.3f} > 1)")
    elif mode == "multifunction":
        combined = np.array([1.0, r[:, 1].max()])
    elif mode == "interleaved":
        combined = np.array([r[:, 0].max(), r[:, 1].sum()])
        if combined[1] > 1.0 + 1e-12:
            raise CombinationError(f"interleaved dwells exceed the epoch ({combined[1]:.3f} > 1)")
    else:
        raise CombinationError(f"unknown concurrency mode {mode!r}")
    return combined, qualities, utility
