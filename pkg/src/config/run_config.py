"""Run-config text format: `key = value` lines with `#` comments.

Keys are the `TrainConfig` field names plus dotted `dataset.*` and
`model.*` sub-keys. Lists are comma separated; `alpha_schedule` is written
`start:alpha, start:alpha`; `none` clears an optional value.
"""
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from src.models.config import TrainConfig
from src.utils.errors import ConfigError

TOP_LEVEL_KEYS = (
    "objective",
    "latent_dim",
    "batch_size",
    "epochs",
    "seed",
    "alpha_schedule",
    "weight_adv",
    "lr_g",
    "lr_d",
    "lr_e",
    "decay",
    "decay_mode",
    "encoder_normalize",
    "loss_norm",
)
DATASET_KEYS = ("kind", "count", "radius", "sigma", "ring_radii", "size", "path")
MODEL_KEYS = ("arch", "channels", "hidden_units", "seed_size", "kernel_size")
LIST_KEYS = {"dataset.ring_radii", "model.channels", "model.hidden_units"}
OPTIONAL_KEYS = {"latent_dim", "lr_e", "dataset.path", "model.arch"}

CONFIG_KEYS: tuple[str, ...] = (
    TOP_LEVEL_KEYS
    + tuple(f"dataset.{k}" for k in DATASET_KEYS)
    + tuple(f"model.{k}" for k in MODEL_KEYS)
)


def _parse_schedule(text: str, line: int) -> list[tuple[str, str]]:
    entries = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        start, sep, alpha = item.partition(":")
        if not sep:
            raise ConfigError(f"schedule entry '{item}' is not start:alpha", line, "alpha_schedule")
        entries.append((start.strip(), alpha.strip()))
    return entries


def _parse_value(key: str, text: str, line: int) -> Any:
    if key in OPTIONAL_KEYS and text.lower() == "none":
        return None
    if key == "alpha_schedule":
        return _parse_schedule(text, line)
    if key in LIST_KEYS:
        return [item.strip() for item in text.split(",") if item.strip()]
    return text


def parse_config(text: str) -> TrainConfig:
    """Parse config text; any problem raises one ConfigError naming line and key"""
    raw: dict[str, Any] = {"dataset": {}, "model": {}}
    lines: dict[str, int] = {}

    for number, original in enumerate(text.splitlines(), start=1):
        content = original.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError("expected 'key = value'", number)
        if key not in CONFIG_KEYS:
            raise ConfigError("unknown key", number, key)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", number, key)
        if not value:
            raise ConfigError("missing value", number, key)
        lines[key] = number

        parsed = _parse_value(key, value, number)
        section, dot, leaf = key.partition(".")
        if dot:
            raw[section][leaf] = parsed
        else:
            raw[key] = parsed

    try:
        return TrainConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = [str(part) for part in first["loc"] if not isinstance(part, int)]
        key: Optional[str] = ".".join(loc[:2]) if loc else None
        raise ConfigError(first["msg"], lines.get(key or ""), key) from e


def load_config(path: Path) -> TrainConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise ConfigError(f"config file {path} is not UTF-8: {e}") from e
    return parse_config(text)


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def render_config(cfg: TrainConfig) -> str:
    """Canonical text with every key; parses back to an equal config"""
    out = []
    for key in TOP_LEVEL_KEYS:
        value = getattr(cfg, key)
        if key == "alpha_schedule":
            out.append(f"{key} = " + ", ".join(f"{start}:{alpha!r}" for start, alpha in value))
        else:
            out.append(f"{key} = {_format(value)}")
    for key in DATASET_KEYS:
        out.append(f"dataset.{key} = {_format(getattr(cfg.dataset, key))}")
    for key in MODEL_KEYS:
        out.append(f"model.{key} = {_format(getattr(cfg.model, key))}")
    return "\n".join(out) + "\n"
