"""Run and sweep configuration.

Config files are flat ``key = value`` lines with dotted keys::

    # two-moons FixMatch
    algorithm = FixMatch
    data.labels_per_class = 4
    train.steps = 4000
    algo.fixed_threshold = 0.95
    model.hidden = [64, 64]

A ``[section]`` line prefixes the keys that follow it (``[train]`` then
``steps = 10`` means ``train.steps``). Values are integers, floats,
``true``/``false``, ``[a, b, ...]`` lists, or strings (optionally quoted).
``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..algorithms.spec import HYPER_FIELDS, canonical_name, compose
from ..augment import STRONG_OPS, AugmentConfig
from .results import SELECTION_MODES


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


# dotted key -> RunConfig field
RUN_KEYS = {
    "algorithm": "algorithm",
    "out": "out",
    "data.dataset": "dataset",
    "data.n": "n",
    "data.n_test": "n_test",
    "data.noise": "noise",
    "data.separation": "separation",
    "data.imbalance": "imbalance",
    "data.test_fraction": "test_fraction",
    "data.seed": "data_seed",
    "data.labels_per_class": "labels_per_class",
    "data.val_per_class": "val_per_class",
    "data.include_labeled": "include_labeled",
    "train.seed": "seed",
    "train.steps": "steps",
    "train.warmup": "warmup",
    "train.eval_every": "eval_every",
    "train.batch_size": "batch_size",
    "train.uratio": "uratio",
    "train.lr": "lr",
    "train.weight_decay": "weight_decay",
    "train.layer_decay": "layer_decay",
    "train.ema_momentum": "ema_momentum",
    "train.selection": "selection",
    "train.record_wall_time": "record_wall_time",
    "model.hidden": "hidden",
    "model.embed_dim": "embed_dim",
    "model.init_scale": "init_scale",
    "aug.weak_sigma": "weak_sigma",
    "aug.strong_n": "strong_n",
    "aug.strong_pool": "strong_pool",
    "aug.magnitude": "magnitude",
}
SWEEP_KEYS = ("sweep.algorithms", "sweep.datasets", "sweep.labels_per_class", "sweep.seeds")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "FixMatch"
    dataset: str = "two_moons"
    n: int = 1000
    n_test: int = 1000
    noise: float = 0.1
    separation: float = 4.0
    imbalance: float = 1.0
    test_fraction: float = 0.2
    data_seed: int = 0
    labels_per_class: int = 4
    val_per_class: int = 0
    include_labeled: bool = True
    seed: int = 0
    steps: int = 4000
    warmup: int = 0
    eval_every: int = 100
    batch_size: int = 16
    uratio: int = 1
    lr: float = 1e-2
    weight_decay: float = 5e-4
    layer_decay: float = 1.0
    ema_momentum: float = 0.0
    selection: str = "best_checkpoint"
    record_wall_time: bool = True
    hidden: tuple = (64, 64)
    embed_dim: int = 16
    init_scale: float = 1.0
    weak_sigma: float = 0.03
    strong_n: int = 2
    strong_pool: tuple = STRONG_OPS
    magnitude: tuple = (0.1, 0.5)
    algo: dict = field(default_factory=dict)
    out: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "algorithm", canonical_name(self.algorithm))
        except ValueError as exc:
            raise ConfigError(str(exc), "algorithm") from None
        if self.steps < 0:
            raise ConfigError("train.steps must be >= 0", "train.steps")
        if self.eval_every < 1:
            raise ConfigError("train.eval_every must be >= 1", "train.eval_every")
        if self.steps and self.steps % self.eval_every:
            raise ConfigError(f"train.eval_every={self.eval_every} does not divide train.steps={self.steps}",
                              "train.eval_every")
        if self.batch_size < 1 or self.uratio < 1:
            raise ConfigError("batch sizes must be >= 1", "train.batch_size")
        if self.warmup < 0 or (self.steps and self.warmup >= self.steps and self.warmup > 0):
            raise ConfigError("train.warmup must lie in [0, train.steps)", "train.warmup")
        if self.selection not in SELECTION_MODES:
            raise ConfigError(f"train.selection must be one of {SELECTION_MODES}", "train.selection")
        if self.selection == "validation" and self.val_per_class < 1:
            raise ConfigError("validation selection needs data.val_per_class >= 1", "train.selection")
        if not 0.0 <= self.ema_momentum <= 1.0:
            raise ConfigError("train.ema_momentum must lie in [0, 1]", "train.ema_momentum")
        if self.labels_per_class < 1:
            raise ConfigError("data.labels_per_class must be >= 1", "data.labels_per_class")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "strong_pool", tuple(self.strong_pool))
        object.__setattr__(self, "magnitude", tuple(float(m) for m in self.magnitude))
        if len(self.magnitude) != 2:
            raise ConfigError("aug.magnitude must be [low, high]", "aug.magnitude")
        try:
            self.augment_config()
        except ValueError as exc:
            raise ConfigError(str(exc), "aug") from None
        try:
            self.algorithm_spec()
        except ValueError as exc:
            bad = next((f"algo.{k}" for k in self.algo if k not in HYPER_FIELDS), "algo")
            raise ConfigError(str(exc), bad) from None

    def algorithm_spec(self):
        return compose(self.algorithm, **self.algo)

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(self.weak_sigma, self.strong_pool, self.strong_n, self.magnitude)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {}
        for key, name in RUN_KEYS.items():
            v = getattr(self, name)
            d[key] = list(v) if isinstance(v, tuple) else v
        for k in sorted(self.algo):
            d[f"algo.{k}"] = self.algo[k]
        return d


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    algorithms: tuple
    datasets: tuple
    labels_per_class: tuple
    seeds: tuple

    def cells(self) -> list[RunConfig]:
        """One run config per (dataset, labels, algorithm, seed), in that nesting order."""
        out = []
        for ds in self.datasets:
            for lpc in self.labels_per_class:
                for alg in self.algorithms:
                    for seed in self.seeds:
                        out.append(self.base.replace(dataset=ds, labels_per_class=int(lpc), algorithm=alg,
                                                     seed=int(seed)))
        return out


# ---------------------------------------------------------------------------
# parsing

_SECTION = re.compile(r"^\[([A-Za-z_][\w.]*)\]$")
_KEY = re.compile(r"^[A-Za-z_][\w.]*$")


def parse_value(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [parse_value(p) for p in _split_list(inner)] if inner else []
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _split_list(inner: str) -> list[str]:
    parts, buf, quote = [], [], None
    for ch in inner:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            buf.append(ch)
        elif ch == ",":
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return [p.strip() for p in parts if p.strip()]


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into an ordered ``{dotted key: value}`` mapping."""
    values: dict = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1) + "."
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = section + key.strip()
        if not _KEY.match(key):
            raise ConfigError(f"{source}:{lineno}: invalid key {key!r}", key)
        values[key] = parse_value(value)
    return values


def parse_override(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} is not of the form key=value")
    return key.strip(), parse_value(value)


def _coerce(key: str, value, default):
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, tuple):
            return tuple(value if isinstance(value, list) else [value])
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot use {value!r} here", key) from None


def build_configs(values: dict) -> tuple[RunConfig, SweepConfig]:
    """Turn parsed key/values into a run config and the sweep around it."""
    defaults = RunConfig()
    kwargs, algo, sweep = {}, {}, {}
    for key, value in values.items():
        if key in RUN_KEYS:
            name = RUN_KEYS[key]
            kwargs[name] = _coerce(key, value, getattr(defaults, name))
        elif key.startswith("algo."):
            hp = key[5:]
            if hp not in HYPER_FIELDS:
                raise ConfigError(f"unknown key {key!r}", key)
            ref = getattr(compose("FixMatch"), hp)
            algo[hp] = _coerce(key, value, ref)
        elif key in SWEEP_KEYS:
            sweep[key] = value if isinstance(value, list) else [value]
        else:
            raise ConfigError(f"unknown key {key!r}", key)
    base = RunConfig(**kwargs, algo=algo)
    for name in sweep.get("sweep.algorithms", []):
        try:
            canonical_name(str(name))
        except ValueError as exc:
            raise ConfigError(str(exc), "sweep.algorithms") from None
    sc = SweepConfig(
        base=base,
        algorithms=tuple(canonical_name(str(a)) for a in sweep.get("sweep.algorithms", [base.algorithm])),
        datasets=tuple(str(d) for d in sweep.get("sweep.datasets", [base.dataset])),
        labels_per_class=tuple(int(n) for n in sweep.get("sweep.labels_per_class", [base.labels_per_class])),
        seeds=tuple(int(s) for s in sweep.get("sweep.seeds", [base.seed])),
    )
    return base, sc


def load_config(path=None, overrides=()) -> tuple[RunConfig, SweepConfig]:
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values = parse_config_text(text, str(path))
    for item in overrides:
        key, value = parse_override(item)
        values[key] = value
    return build_configs(values)
