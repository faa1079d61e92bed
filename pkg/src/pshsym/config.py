"""Run configuration: defaults, an optional JSON config file, then flags.

The effective configuration is echoed into every report, so everything that
can change a number lives here.
"""

import json
import os
from dataclasses import asdict, dataclass, fields, replace

from .errors import SchemaError
from .slopes import SlopePolicy
from .volume import VolumeConfig

SEED_ENV = "PSH_SYMM_SEED"
FORMATS = ("json", "csv", "svg")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    t_min: float = -40.0
    slope_points: int = 41
    depth_factors: tuple = (1.0, 4.0, 16.0)
    grid_uniform: int = 200
    grid_near: int = 150
    grid_depth: float = 30.0
    mc_samples: int = 1_000_000
    mc_shells: int = 32
    rel_tol: float = 1e-6
    tolerance_floor: float = 0.05
    sample_points: int = 16
    formats: tuple = FORMATS
    out: str = "out"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise SchemaError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        positive = {"slope_points": self.slope_points, "grid_uniform": self.grid_uniform,
                    "grid_near": self.grid_near, "grid_depth": self.grid_depth,
                    "mc_samples": self.mc_samples, "mc_shells": self.mc_shells,
                    "rel_tol": self.rel_tol, "tolerance_floor": self.tolerance_floor,
                    "sample_points": self.sample_points, "t_min (negated)": -self.t_min}
        for name, value in positive.items():
            if not value > 0:
                raise SchemaError(f"{name} must be positive, got {value}")
        if any(f <= 0 for f in self.depth_factors):
            raise SchemaError("depth factors must be positive")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise SchemaError(f"unknown output formats {bad}; choose from {list(FORMATS)}")

    def volume(self):
        return VolumeConfig(rel_tol=self.rel_tol, mc_samples=int(self.mc_samples),
                            mc_shells=int(self.mc_shells), seed=int(self.seed))

    def policy(self):
        return SlopePolicy(t_min=self.t_min, points=int(self.slope_points),
                           depth_factors=tuple(float(f) for f in self.depth_factors))

    def to_dict(self):
        d = asdict(self)
        d["depth_factors"] = list(self.depth_factors)
        d["formats"] = list(self.formats)
        # the output directory does not change any number
        d.pop("out")
        return d


def _coerce(values):
    out = dict(values)
    for key in ("depth_factors", "formats"):
        if key in out and isinstance(out[key], str):
            out[key] = tuple(x.strip() for x in out[key].split(",") if x.strip())
        if key in out:
            out[key] = tuple(out[key])
    if "depth_factors" in out:
        out["depth_factors"] = tuple(float(x) for x in out["depth_factors"])
    return out


def load_config(path=None, overrides=None, env=None):
    """Build the effective RunConfig with precedence flags > file > defaults.

    ``overrides`` holds flag values (``None`` entries are ignored). The seed
    falls back to the PSH_SYMM_SEED environment variable when neither the
    flags nor the file set it.
    """
    env = os.environ if env is None else env
    names = {f.name for f in fields(RunConfig)}
    values = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise SchemaError(f"cannot read config file {path}: {err}") from err
        unknown = set(data) - names
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    if "seed" not in values and env.get(SEED_ENV):
        try:
            values["seed"] = int(env[SEED_ENV])
        except ValueError as err:
            raise SchemaError(f"{SEED_ENV} must be an integer") from err
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in names:
                raise SchemaError(f"unknown config key {key}")
            values[key] = value
    try:
        return replace(RunConfig(), **_coerce(values))
    except (TypeError, ValueError) as err:
        raise SchemaError(f"invalid configuration: {err}") from err
