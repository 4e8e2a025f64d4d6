"""Experiment configuration and its flat key/value (TOML) file format."""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .geometry import ArrayGeometry, fresnel_distance

METHODS = ("ls", "nf_somp", "sc_pcsbl", "pcsbl_2d")
MODEL_TAGS = ("exact", "taylor")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


@dataclass(frozen=True)
class PcsblParams:
    """Hyperparameters shared by the pattern-coupled SBL solvers."""

    kappa: float = 1.0
    a: float = 0.5
    b: float = 1e-4
    max_iters: int = 200
    tol: float = 1e-4
    alpha_cap: float = 1e12
    learn_noise: bool = False

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ConfigError("pcsbl_kappa", f"must lie in [0, 1], got {self.kappa!r}")
        for name in ("a", "b", "tol", "alpha_cap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"pcsbl_{name}", f"must be positive, got {getattr(self, name)!r}")
        if self.max_iters < 1:
            raise ConfigError("pcsbl_max_iters", f"must be >= 1, got {self.max_iters!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Array, OFDM, channel and Monte Carlo settings.

    ``None`` for ``mu_bar``, ``polar_S``, ``somp_K`` and ``precoder_variance``
    selects the documented automatic value (see the matching ``resolved_*``
    properties).
    """

    N: int = 64
    P: int = 32
    L: int = 3
    T: int = 48
    f_c: float = 100e9
    B: float = 10e9
    snr_db: float = 10.0
    r_min: float = 10.0
    r_max: float = 20.0
    angle_clip: float = 0.01
    mu_bar: float | None = None
    trials: int = 20
    base_seed: int = 20240501
    methods: tuple = ("ls", "nf_somp", "sc_pcsbl", "pcsbl_2d")
    pcsbl: PcsblParams = field(default_factory=PcsblParams)
    polar_S: int | None = None
    model_tag: str = "exact"
    precoder_variance: float | None = None
    somp_K: int | None = None
    somp_residual_tol: float = 1e-6
    nlos_power_db: float = -10.0
    max_excess_delay: float = 20e-9
    T_values: tuple = (32, 48, 64)
    snr_values: tuple = (0.0, 10.0, 20.0, 30.0)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "T_values", tuple(int(t) for t in self.T_values))
        object.__setattr__(self, "snr_values", tuple(float(s) for s in self.snr_values))
        if self.N < 2:
            raise ConfigError("N", f"must be >= 2, got {self.N}")
        if self.P < 1:
            raise ConfigError("P", f"must be >= 1, got {self.P}")
        if self.L < 1:
            raise ConfigError("L", f"must be >= 1, got {self.L}")
        if self.T < 1:
            raise ConfigError("T", f"must be >= 1, got {self.T}")
        if not self.f_c > 0:
            raise ConfigError("f_c", "must be positive")
        if not self.B >= 0:
            raise ConfigError("B", "must be non-negative")
        if self.B / 2 >= self.f_c:
            raise ConfigError("B", "half the bandwidth must stay below the carrier")
        if not 0 < self.r_min <= self.r_max:
            raise ConfigError("r_min", "need 0 < r_min <= r_max")
        if not 0 < self.angle_clip < math.pi / 2:
            raise ConfigError("angle_clip", "must lie in (0, pi/2)")
        if self.mu_bar is not None and not self.mu_bar > 0:
            raise ConfigError("mu_bar", f"must be positive (or 'auto'), got {self.mu_bar!r}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError("methods", f"unknown method tag {m!r} (known: {', '.join(METHODS)})")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods", "duplicate method tags")
        if self.model_tag not in MODEL_TAGS:
            raise ConfigError("model_tag", f"unknown model tag {self.model_tag!r}")
        if self.polar_S is not None and self.polar_S < 1:
            raise ConfigError("polar_S", "must be >= 1")
        if self.precoder_variance is not None and not self.precoder_variance > 0:
            raise ConfigError("precoder_variance", "must be positive")
        if self.somp_K is not None and self.somp_K < 0:
            raise ConfigError("somp_K", "must be >= 0")
        if not self.max_excess_delay >= 0:
            raise ConfigError("max_excess_delay", "must be non-negative")
        if not self.T_values:
            raise ConfigError("T_values", "needs at least one pilot length")
        if not self.snr_values:
            raise ConfigError("snr_values", "needs at least one SNR")
        if any(t < 1 for t in self.T_values):
            raise ConfigError("T_values", "pilot lengths must be >= 1")
        if self.r_min < fresnel_distance(self.geometry):
            warnings.warn(
                f"r_min={self.r_min} m is below the Fresnel distance "
                f"{fresnel_distance(self.geometry):.3f} m; the Fresnel phase model is loose there",
                stacklevel=3,
            )

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.N, self.f_c)

    @property
    def resolved_mu_bar(self) -> float:
        """Dictionary effective distance; geometric mean of the coverage annulus by default."""
        return self.mu_bar if self.mu_bar is not None else math.sqrt(self.r_min * self.r_max)

    @property
    def resolved_polar_S(self) -> int:
        if self.polar_S is not None:
            return self.polar_S
        geom = self.geometry
        z = geom.n_antennas**2 * geom.spacing**2 / (2 * geom.carrier_wavelength)
        return min(math.ceil(z / self.r_min) + 1, 8)

    @property
    def resolved_precoder_variance(self) -> float:
        return self.precoder_variance if self.precoder_variance is not None else 1 / math.sqrt(self.N)

    def resolved_somp_K(self, T: int | None = None) -> int:
        """Atom budget for SOMP, never more than half the pilot length."""
        T = self.T if T is None else T
        if self.somp_K is not None:
            return min(self.somp_K, T)
        budget = 2 * math.ceil(2.5 * math.sqrt(self.N)) * self.L
        return max(1, min(budget, T // 2))

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


def desk_config(**overrides) -> SystemConfig:
    return SystemConfig(**overrides)


def paper_config(**overrides) -> SystemConfig:
    base = dict(
        N=256, P=128, L=3, T=160, trials=20,
        T_values=(64, 96, 128, 160, 192, 224, 256, 288, 320),
        snr_values=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
    )
    base.update(overrides)
    return SystemConfig(**base)


_AUTO_KEYS = ("mu_bar", "polar_S", "precoder_variance", "somp_K")
_PCSBL_PREFIX = "pcsbl_"


def _field_types():
    return {f.name: f for f in dataclasses.fields(SystemConfig) if f.name != "pcsbl"}


def _coerce(key, value, default):
    if key in _AUTO_KEYS and value == "auto":
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) or key in ("polar_S", "somp_K"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or key in ("mu_bar", "precoder_variance"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return tuple(value)
    raise ConfigError(key, "unsupported value")  # pragma: no cover


def config_from_dict(data: dict) -> SystemConfig:
    """Build a config from flat keys; unknown keys are errors."""
    fields = _field_types()
    pc_defaults = PcsblParams()
    kwargs, pc_kwargs = {}, {}
    for key, value in data.items():
        if key.startswith(_PCSBL_PREFIX):
            name = key[len(_PCSBL_PREFIX):]
            if name not in {f.name for f in dataclasses.fields(PcsblParams)}:
                raise ConfigError(key, "unknown key")
            pc_kwargs[name] = _coerce(key, value, getattr(pc_defaults, name))
        elif key in fields:
            f = fields[key]
            default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
            kwargs[key] = _coerce(key, value, default)
        else:
            raise ConfigError(key, "unknown key")
    try:
        kwargs["pcsbl"] = PcsblParams(**pc_kwargs)
        return SystemConfig(**kwargs)
    except TypeError as exc:  # pragma: no cover
        raise ConfigError("?", str(exc)) from exc


def config_to_dict(config: SystemConfig) -> dict:
    out = {}
    for f in dataclasses.fields(SystemConfig):
        value = getattr(config, f.name)
        if f.name == "pcsbl":
            for pf in dataclasses.fields(PcsblParams):
                out[_PCSBL_PREFIX + pf.name] = getattr(value, pf.name)
            continue
        if value is None:
            value = "auto"
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"cannot parse {path}: {exc}") from exc
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(key, "tables are not allowed; use flat keys such as pcsbl_kappa")
    return config_from_dict(data)


def dump_config(config: SystemConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))


def save_config(config: SystemConfig, path) -> None:
    Path(path).write_text(dump_config(config), encoding="utf-8")
