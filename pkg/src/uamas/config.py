"""Key-value config file with UMAS_* environment overrides.

Format: one ``key=value`` per line, ``#`` comments, blank lines ignored.
Per-task thresholds use dotted keys (``threshold.cooler=0.9``). Every CLI
flag has a config equivalent; precedence is CLI flag > environment > file
> default.

Recognized keys (env variable in parentheses):
  host (UMAS_HOST), port (UMAS_PORT), dataset_root (UMAS_DATASET_ROOT),
  models_dir (UMAS_MODELS_DIR), static_dir (UMAS_STATIC_DIR),
  trace_path (UMAS_TRACE_PATH), speed (UMAS_SPEED), seed (UMAS_SEED),
  epochs (UMAS_EPOCHS), threshold (UMAS_THRESHOLD),
  threshold.<task> (UMAS_THRESHOLD_<TASK>), mc_samples (UMAS_MC_SAMPLES),
  loop (UMAS_LOOP), out_dir (UMAS_OUT_DIR)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dataset import Task
from .errors import UamasError

ENV_PREFIX = "UMAS_"


class ConfigError(UamasError):
    pass


@dataclass
class Settings:
    host: str = "127.0.0.1"
    port: int = 8000
    dataset_root: str = "data"
    models_dir: str = "models"
    static_dir: str | None = None
    trace_path: str | None = None
    out_dir: str = "reports"
    speed: float = 60.0
    seed: int = 7
    epochs: int | None = None  # None = reference protocol (300)
    threshold: float = 0.8
    mc_samples: int = 50
    loop: bool = False
    task_thresholds: dict[str, float] = field(default_factory=dict)

    def threshold_for(self, task: Task) -> float:
        return self.task_thresholds.get(task.value, self.threshold)

    def as_banner(self) -> str:
        """One key=value per line; echoes the effective configuration."""
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name == "task_thresholds":
                for task, value in sorted(self.task_thresholds.items()):
                    lines.append(f"threshold.{task}={value}")
            else:
                lines.append(f"{f.name}={getattr(self, f.name)}")
        return "\n".join(lines)


_PARSERS = {
    "host": str,
    "port": int,
    "dataset_root": str,
    "models_dir": str,
    "static_dir": str,
    "trace_path": str,
    "out_dir": str,
    "speed": float,
    "seed": int,
    "epochs": int,
    "threshold": float,
    "mc_samples": int,
    "loop": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_config_file(path: Path | str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _apply(settings: Settings, key: str, value: str, origin: str) -> None:
    if key.startswith("threshold."):
        task_name = key.split(".", 1)[1]
        if task_name not in {t.value for t in Task}:
            raise ConfigError(f"{origin}: unknown task in {key!r}")
        settings.task_thresholds[task_name] = float(value)
        return
    parser = _PARSERS.get(key)
    if parser is None:
        raise ConfigError(f"{origin}: unknown key {key!r}")
    try:
        setattr(settings, key, parser(value))
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {exc}")


def load_settings(config_path: Path | str | None = None,
                  env: dict | None = None) -> Settings:
    """File first, then UMAS_* environment overrides."""
    settings = Settings()
    if config_path is not None:
        for key, value in parse_config_file(config_path).items():
            _apply(settings, key, value, origin=str(config_path))
    env = os.environ if env is None else env
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name.startswith("threshold_") and name != "threshold":
            _apply(settings, "threshold." + name[len("threshold_"):], value, origin=key)
        else:
            _apply(settings, name, value, origin=key)
    return settings
