"""Experiment configuration: a YAML mapping validated into a dataclass."""
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import yaml

from ..errors import ConfigError

SUITE_NAMES = ("angles", "lyapunov", "bellman", "convexity", "chain", "galerkin", "heatflow", "bilinear", "multiplier", "all")
# accepted spelling for the intermediate-inequality suite
SUITE_ALIASES = {"chain6": "chain"}


def _default_multipliers():
    return [
        {"name": "imaginary_power", "args": [1.0]},
        {"name": "rational", "args": [1, 1]},
        {"name": "exp_sector", "args": [0.5]},
    ]


@dataclass
class ExperimentConfig:
    """Every field has a default; see the README for the meaning of each.

    ``model``: path of a model file, relative to the config file; ``None``
    selects the rotating model ``Q = I``, ``A = I + J``.
    ``theta_fraction``: working angle as a fraction of ``theta_p`` in ``[0, 1)``.
    ``tolerances``: per-anchor overrides of the check tolerances.
    """

    model: str = None
    suite: str = "all"
    p: float = 4.0
    theta_fraction: float = 0.5
    delta: float = None
    N: int = 6
    r_values: list = field(default_factory=lambda: [1.25, 1.5, 2.0, 3.0, 4.0, 8.0])
    samples: int = 20_000
    mc_samples: int = 20_000
    points: int = 200
    pairs: int = 5
    t_grid: list = field(default_factory=lambda: [0.0, 5.0, 26])
    multipliers: list = field(default_factory=_default_multipliers)
    seed: int = 0
    output: str = None
    tolerance: float = 1e-9
    sigmas: float = 3.0
    tolerances: dict = field(default_factory=dict)
    threads: int = 1
    record_timing: bool = False

    def to_dict(self):
        """Echo for reports; ``threads`` is left out so output does not depend on it."""
        d = asdict(self)
        d.pop("threads")
        return d

    def tol(self, anchor, default=None):
        return float(self.tolerances.get(anchor, self.tolerance if default is None else default))


_TYPES = {
    "model": (str, type(None)),
    "suite": str,
    "p": (int, float),
    "theta_fraction": (int, float),
    "delta": (int, float, type(None)),
    "N": int,
    "r_values": list,
    "samples": int,
    "mc_samples": int,
    "points": int,
    "pairs": int,
    "t_grid": list,
    "multipliers": list,
    "seed": int,
    "output": (str, type(None)),
    "tolerance": (int, float),
    "sigmas": (int, float),
    "tolerances": dict,
    "threads": int,
    "record_timing": bool,
}


def parse_config(doc, base_dir=None):
    """Validate a mapping into an :class:`ExperimentConfig`."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}", field=unknown[0])
    for key, value in doc.items():
        ok = _TYPES[key]
        if isinstance(value, bool) != (ok is bool) or not isinstance(value, ok):
            raise ConfigError(f"field {key!r} has the wrong type ({type(value).__name__})", field=key)
    cfg = ExperimentConfig(**doc)
    cfg.suite = SUITE_ALIASES.get(cfg.suite, cfg.suite)
    if cfg.suite not in SUITE_NAMES:
        raise ConfigError(f"unknown suite {cfg.suite!r}; choose from {list(SUITE_NAMES)}", field="suite")
    if cfg.p < 2:
        raise ConfigError("p must be >= 2", field="p")
    if not 0 <= cfg.theta_fraction < 1:
        raise ConfigError("theta_fraction must lie in [0, 1)", field="theta_fraction")
    if cfg.delta is not None and not 0 < cfg.delta < 1:
        raise ConfigError("delta must lie in (0, 1)", field="delta")
    for key in ("N", "samples", "mc_samples", "points", "pairs", "threads"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be positive", field=key)
    if any(not isinstance(r, (int, float)) or r <= 1 for r in cfg.r_values):
        raise ConfigError("r_values must be numbers > 1", field="r_values")
    if len(cfg.t_grid) != 3 or cfg.t_grid[0] < 0 or cfg.t_grid[1] <= cfg.t_grid[0] or int(cfg.t_grid[2]) < 2:
        raise ConfigError("t_grid must be [start, stop, count] with 0 <= start < stop, count >= 2", field="t_grid")
    for key, value in cfg.tolerances.items():
        if not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"tolerance override {key!r} must be a nonnegative number", field="tolerances")
    if cfg.model is not None and base_dir is not None and not Path(cfg.model).is_absolute():
        cfg.model = str(Path(base_dir) / cfg.model)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}", field="config") from exc
    return parse_config(doc, base_dir=path.parent)
