"""Run and sweep configuration: flat ``key = value`` files plus CLI flags."""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import StepControls
from .grid import MappedGrid, ModelParams


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


# key -> (type, default); None means "required" or "unset"
RUN_KEYS = {
    "lambda": (float, None),
    "epsilon": (float, 0.1),
    "q": (float, 4.0),
    "u0": (str, "zero"),
    "nx": (int, 201),
    "neta": (int, 101),
    "dt_init": (float, 1e-3),
    "dt_min": (float, 1e-12),
    "dt_max": (float, 5e-2),
    "t_max": (float, 10.0),
    "touch_eps": (float, 5e-3),
    "cfl_source": (float, 0.1),
    "out": (str, "out"),
    "snapshot_stride": (int, 10),
}
SWEEP_KEYS = {
    "lambdas": (str, None),
    "lambda_min": (float, None),
    "lambda_max": (float, None),
    "lambda_count": (int, None),
    "spacing": (str, "linear"),
    "workers": (int, 1),
}


@dataclass
class RunConfig:
    lam: float
    epsilon: float = 0.1
    q: float = 4.0
    u0: str = "zero"
    nx: int = 201
    neta: int = 101
    controls: StepControls = field(default_factory=StepControls)
    out: str = "out"
    snapshot_stride: int = 10

    @property
    def params(self):
        return ModelParams(self.lam, self.epsilon, self.q)

    @property
    def grid(self):
        return MappedGrid.create(self.nx, self.neta)

    def initial_profile(self):
        return initial_profile(self.u0, self.grid.base.x)

    def with_lambda(self, lam):
        return RunConfig(
            lam=lam, epsilon=self.epsilon, q=self.q, u0=self.u0, nx=self.nx, neta=self.neta,
            controls=self.controls, out=self.out, snapshot_stride=self.snapshot_stride,
        )


@dataclass
class SweepConfig:
    base: RunConfig
    lambdas: list
    workers: int = 1


def initial_profile(selector, x):
    """Evaluate an initial-data selector on the nodes ``x``.

    zero | arch:h | bell:a,w | eig:c | file:path
    """
    x = np.asarray(x, dtype=float)
    kind, _, arg = selector.partition(":")
    try:
        if kind == "zero" and not arg:
            u = np.zeros_like(x)
        elif kind == "arch":
            u = float(arg) * (1.0 + np.cos(np.pi * x))
        elif kind == "bell":
            a, w = (float(s) for s in arg.split(","))
            if not 0 < w <= 1:
                raise ConfigError("u0", f"bell width must lie in (0, 1], got {w}")
            s = np.clip(np.abs(x) / w, 0.0, 1.0)
            inside = s < 1.0
            u = np.zeros_like(x)
            u[inside] = a * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        elif kind == "eig":
            u = float(arg) * np.cos(0.5 * np.pi * x)
        elif kind == "file":
            from .io import read_profile_csv

            xs, us = read_profile_csv(arg)
            if xs[0] > -1.0 + 1e-12 or xs[-1] < 1.0 - 1e-12:
                raise ConfigError("u0", "tabulated profile must cover [-1, 1]")
            u = np.interp(x, xs, us)
        else:
            raise ConfigError("u0", f"unknown initial-data selector {selector!r}")
    except (TypeError, ValueError, OSError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("u0", f"cannot evaluate {selector!r}: {exc}") from exc
    for end in (0, -1):
        if abs(u[end]) > 1e-12:
            raise ConfigError("u0", "initial deflection must vanish at x = +-1")
        u[end] = 0.0
    if not np.all(np.isfinite(u)) or u.min() <= -1.0:
        raise ConfigError("u0", "initial deflection must stay above -1")
    return u


def read_config_file(path):
    """Parse ``key = value`` lines; '#' starts a comment. Keys use underscores."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("config", f"line {lineno} is not 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(key, raw, kind):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"malformed value {raw!r}") from None


def merge(file_values, flag_values, allowed):
    """Flags override file values, which override defaults; unknown keys rejected."""
    unknown = set(file_values) - set(allowed)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    merged = {}
    for key, (kind, default) in allowed.items():
        if flag_values.get(key) is not None:
            merged[key] = _coerce(key, flag_values[key], kind)
        elif key in file_values:
            merged[key] = _coerce(key, file_values[key], kind)
        else:
            merged[key] = default
    return merged


def build_run_config(values):
    if values["lambda"] is None:
        raise ConfigError("lambda", "required")
    lam = values["lambda"]
    if not (math.isfinite(lam) and lam > 0):
        raise ConfigError("lambda", f"must be positive, got {lam}")
    if not values["epsilon"] >= 0:
        raise ConfigError("epsilon", f"must be non-negative, got {values['epsilon']}")
    if not values["q"] > 2:
        raise ConfigError("q", f"must exceed 2, got {values['q']}")
    if values["nx"] < 33 or values["nx"] % 2 == 0:
        raise ConfigError("nx", f"must be odd and >= 33, got {values['nx']}")
    if values["neta"] < 17:
        raise ConfigError("neta", f"must be >= 17, got {values['neta']}")
    if values["snapshot_stride"] < 0:
        raise ConfigError("snapshot_stride", "must be non-negative")
    dt_max = max(values["dt_max"], values["dt_init"])
    try:
        controls = StepControls(
            dt_init=values["dt_init"], dt_min=values["dt_min"], dt_max=dt_max,
            touch_eps=values["touch_eps"], cfl_source=values["cfl_source"], T_max=values["t_max"],
        )
    except ValueError as exc:
        raise ConfigError("step controls", str(exc)) from None
    cfg = RunConfig(
        lam=lam, epsilon=values["epsilon"], q=values["q"], u0=values["u0"],
        nx=values["nx"], neta=values["neta"], controls=controls, out=values["out"],
        snapshot_stride=values["snapshot_stride"],
    )
    cfg.initial_profile()  # validates the selector on the grid
    return cfg


def lambda_list(values):
    if values["lambdas"] is not None:
        items = [s for s in values["lambdas"].replace(" ", "").split(",") if s]
        lams = [_coerce("lambdas", s, float) for s in items]
    elif values["lambda_min"] is not None:
        lo, hi, n = values["lambda_min"], values["lambda_max"], values["lambda_count"]
        if hi is None or n is None:
            raise ConfigError("lambda_max", "lambda_min needs lambda_max and lambda_count")
        if n < 1 or not 0 < lo <= hi:
            raise ConfigError("lambda_count", "need 0 < lambda_min <= lambda_max and count >= 1")
        if values["spacing"] == "linear":
            lams = list(np.linspace(lo, hi, n))
        elif values["spacing"] == "geometric":
            lams = list(np.geomspace(lo, hi, n))
        else:
            raise ConfigError("spacing", "must be 'linear' or 'geometric'")
    else:
        lams = []
    if not lams:
        raise ConfigError("lambdas", "empty lambda list")
    if any(not (math.isfinite(lam) and lam > 0) for lam in lams):
        raise ConfigError("lambdas", "lambda values must be positive")
    return sorted(float(lam) for lam in lams)
