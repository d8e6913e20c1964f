"""Pipeline configuration: flat key=value files plus CLI overrides.

Every run writes a resolved-config snapshot next to its outputs so results
can be reproduced from the artifacts alone.
"""

from dataclasses import dataclass, fields

from .errors import ConfigError, FormatError

#: Keys accepted in config files and their parsers.
_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def _parse_bool(text):
    low = text.lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_auto_float(text):
    return None if text.lower() == "auto" else float(text)


def _parse_auto_int(text):
    return None if text.lower() == "auto" else int(text)


@dataclass
class PipelineConfig:
    """Defaults follow the reference experiment: 7 subsets, K=3, 56px."""

    n_subsets: int = 7
    k_neighbors: int = 3
    target_size: int = 56
    lee_window: int = 7
    lee_noise_variance: float | None = None  # None = auto estimate
    metric: str = "euclidean"
    normalize: bool = False
    nearmiss_m: int = 3
    nearmiss_k: int = 3
    nearmiss_target: int | None = None  # None = N * per_class_target cap
    per_class_target: int | None = None  # None = smallest cleaned class
    seed: int = 0
    threads: int = 1

    def validate(self):
        if self.n_subsets < 1:
            raise ConfigError("n_subsets must be >= 1")
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")
        if self.target_size < 1:
            raise ConfigError("target_size must be >= 1")
        if self.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self


_PARSERS = {
    "n_subsets": int,
    "k_neighbors": int,
    "target_size": int,
    "lee_window": int,
    "lee_noise_variance": _parse_auto_float,
    "metric": str,
    "normalize": _parse_bool,
    "nearmiss_m": int,
    "nearmiss_k": int,
    "nearmiss_target": _parse_auto_int,
    "per_class_target": _parse_auto_int,
    "seed": int,
    "threads": int,
}


def read_config_file(path):
    """Parse a flat `key = value` file ('#' starts a comment)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _PARSERS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def resolve(file_values=None, overrides=None):
    """Defaults <- config file <- CLI overrides (None overrides are skipped)."""
    cfg = PipelineConfig()
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    return cfg.validate()


def write_resolved(cfg, path):
    """Snapshot of every effective setting, one key = value per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in fields(cfg):
            value = getattr(cfg, f.name)
            if value is None:
                value = "auto"
            elif isinstance(value, bool):
                value = "true" if value else "false"
            fh.write(f"{f.name} = {value}\n")
