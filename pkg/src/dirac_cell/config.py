"""Run configuration: Table-style defaults, TOML files, and flag overrides.

Flat TOML keys mirror the parameter table of the experiments; command-line
flags override file values, which override defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .compare import CompareConfig
from .errors import ConfigError
from .exclusion import ExclusionConfig
from .geometry import CellSpec
from .point_source import EXPLICIT_LAG, IMPLICIT, PointConfig


@dataclass(frozen=True)
class RunConfig:
    d: float = 1.0                  # diffusion coefficient
    phi: float = 1.0                # secretion flux density
    a: float = 1.0                  # uptake rate
    center: tuple[float, float] = (5.0, 5.0)
    radius: float = 0.25
    l: float = 10.0                 # square side length
    h: float = 0.2495               # target mesh size
    dt: float = 0.04
    t_end: float = 40.0
    eps: float = 0.02               # Gaussian regularization parameter
    eps_is_variance: bool = False   # interpret eps as sigma^2 instead of sigma
    nq: int = 64                    # circle quadrature points
    coupling: str = IMPLICIT
    out: str = "."
    jobs: int = 1
    snapshot_times: tuple[float, ...] = ()
    rel_tol: float = 1e-10

    @property
    def sigma(self) -> float:
        """Gaussian standard deviation under the configured interpretation."""
        return math.sqrt(self.eps) if self.eps_is_variance else self.eps

    def cell(self) -> CellSpec:
        return CellSpec(center=self.center, radius=self.radius,
                        phi=self.phi, uptake=self.a)

    def validate(self) -> None:
        def bad(key, why):
            raise ConfigError(f"{key}: {why}")
        if not self.d > 0:
            bad("d", f"diffusion coefficient must be > 0 (got {self.d})")
        if self.phi < 0:
            bad("phi", f"flux density must be >= 0 (got {self.phi})")
        if self.a < 0:
            bad("a", f"uptake rate must be >= 0 (got {self.a})")
        if not self.radius > 0:
            bad("radius", f"cell radius must be > 0 (got {self.radius})")
        if not self.l > 0:
            bad("l", f"side length must be > 0 (got {self.l})")
        if not 0 < self.h <= self.l / 2:
            bad("h", f"mesh size must lie in (0, l/2] (got {self.h})")
        if not self.dt > 0:
            bad("dt", f"time step must be > 0 (got {self.dt})")
        if self.t_end < self.dt:
            bad("t_end", f"final time must be at least dt (got {self.t_end})")
        if not self.eps > 0:
            bad("eps", f"regularization parameter must be > 0 (got {self.eps})")
        if self.nq < 16:
            bad("nq", f"need at least 16 circle quadrature points (got {self.nq})")
        if self.coupling not in (IMPLICIT, EXPLICIT_LAG):
            bad("coupling", f"must be '{IMPLICIT}' or '{EXPLICIT_LAG}' (got {self.coupling!r})")
        if self.jobs < 1:
            bad("jobs", f"must be >= 1 (got {self.jobs})")
        if not 0 < self.rel_tol < 1:
            bad("rel_tol", f"solver tolerance must lie in (0, 1) (got {self.rel_tol})")
        cx, cy = self.center
        if min(cx - self.radius, cy - self.radius,
               self.l - cx - self.radius, self.l - cy - self.radius) <= 0:
            bad("center", "cell disk must lie strictly inside the square")

    def exclusion_config(self, **overrides) -> ExclusionConfig:
        kw = dict(diffusion=self.d, cell=self.cell(), dt=self.dt, t_end=self.t_end,
                  side=self.l, h=self.h, rel_tol=self.rel_tol,
                  snapshot_times=self.snapshot_times)
        kw.update(overrides)
        return ExclusionConfig(**kw)

    def point_config(self, **overrides) -> PointConfig:
        kw = dict(diffusion=self.d, cell=self.cell(), dt=self.dt, t_end=self.t_end,
                  side=self.l, h=self.h, sigma=self.sigma, n_q=self.nq,
                  coupling=self.coupling, rel_tol=self.rel_tol,
                  snapshot_times=self.snapshot_times)
        kw.update(overrides)
        return PointConfig(**kw)

    def compare_config(self, **overrides) -> CompareConfig:
        kw = dict(diffusion=self.d, cell=self.cell(), dt=self.dt, t_end=self.t_end,
                  side=self.l, h=self.h, sigma=self.sigma, n_q=self.nq,
                  coupling=self.coupling, rel_tol=self.rel_tol)
        kw.update(overrides)
        return CompareConfig(**kw)

    def comment(self, mode: str) -> str:
        """One-line record of the resolved configuration for CSV headers.

        Output location and worker count are omitted: they do not influence
        the computed values, so identical model configurations produce
        byte-identical files regardless of where they are written.
        """
        parts = [f"mode={mode}"]
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("out", "jobs"):
                continue
            if f.name == "center":
                parts.append(f"center={v[0]:.17g},{v[1]:.17g}")
            elif f.name == "snapshot_times":
                parts.append("snapshot_times=" + ",".join(f"{t:.17g}" for t in v))
            elif isinstance(v, bool):
                parts.append(f"{f.name}={int(v)}")
            elif isinstance(v, float):
                parts.append(f"{f.name}={v:.17g}")
            else:
                parts.append(f"{f.name}={v}")
        return " ".join(parts)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key == "center":
        if isinstance(value, str):
            parts = value.split(",")
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            raise ConfigError(f"center: expected 'x,y' or [x, y] (got {value!r})")
        if len(parts) != 2:
            raise ConfigError(f"center: expected two coordinates (got {value!r})")
        try:
            return (float(parts[0]), float(parts[1]))
        except (TypeError, ValueError):
            raise ConfigError(f"center: coordinates must be numbers (got {value!r})")
    if key == "snapshot_times":
        if isinstance(value, str):
            items = [s for s in value.split(",") if s.strip()]
        elif isinstance(value, (list, tuple)):
            items = list(value)
        else:
            raise ConfigError(f"snapshot_times: expected a list (got {value!r})")
        try:
            return tuple(float(v) for v in items)
        except (TypeError, ValueError):
            raise ConfigError(f"snapshot_times: entries must be numbers (got {value!r})")
    if key == "eps_is_variance":
        if isinstance(value, bool):
            return value
        raise ConfigError(f"eps_is_variance: expected a boolean (got {value!r})")
    if key in ("nq", "jobs"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer (got {value!r})")
        return value
    if key in ("coupling", "out"):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string (got {value!r})")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number (got {value!r})")
    return float(value)


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Resolve defaults <- TOML file <- overrides, then validate."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
        for key, value in data.items():
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown configuration key '{key}' in {path}")
            values[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown configuration key '{key}'")
        values[key] = _coerce(key, value)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg
