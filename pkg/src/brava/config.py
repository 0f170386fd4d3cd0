"""Pipeline configuration: ``[section]`` headers with ``key = value`` lines."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

from .model import Hyperparams
from .training import TrainConfig

TRAIN_MIXES = ("sf", "hrg", "mix")


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _strs(text) -> tuple[str, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(str(x) for x in text)
    return tuple(x.strip() for x in str(text).split(",") if x.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return int(text)


@dataclass
class PipelineConfig:
    # [recipe]
    n_scale_free: int = 3
    n_hyperbolic: int = 3
    n_nodes: int = 2000
    attach_m: int = 4
    train_mix: str = "mix"
    param_table: str = ""
    max_temperature: float = 0.5
    data_seed: int = 0
    # [model]
    hop_order: int = 6
    hidden: int = 12
    depth: int = 2
    mlp_hidden: tuple[int, ...] = (24, 24)
    dropout: float = 0.3
    mlp_on_embedding: bool = False
    # [train]
    epochs: int = 10
    lr: float = 5e-3
    pairs_per_node: int = 20
    batch_pairs: int | None = None
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    # [paths]
    workdir: str = "work"
    cache_dir: str = ""
    # [test]
    test_graphs: tuple[str, ...] = ()
    test_directed: bool = False
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_scale_free < 0 or self.n_hyperbolic < 0:
            raise ValueError("graph counts must be >= 0")
        if self.n_scale_free + self.n_hyperbolic < 1:
            raise ValueError("need at least one training graph")
        if self.train_mix not in TRAIN_MIXES:
            raise ValueError(f"train_mix must be one of {TRAIN_MIXES}")
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        if not 0 < self.max_temperature < 1:
            raise ValueError("max_temperature must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        self.hyperparams()

    def recipe_counts(self) -> tuple[int, int]:
        """(scale-free, hyperbolic) graph counts after applying ``train_mix``."""
        total = self.n_scale_free + self.n_hyperbolic
        if self.train_mix == "sf":
            return total, 0
        if self.train_mix == "hrg":
            return 0, total
        return self.n_scale_free, self.n_hyperbolic

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(hop_order=self.hop_order, hidden=self.hidden, depth=self.depth,
                           mlp_hidden=self.mlp_hidden, dropout=self.dropout,
                           mlp_on_embedding=self.mlp_on_embedding)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, lr=self.lr, pairs_per_node=self.pairs_per_node,
                           batch_pairs=self.batch_pairs, seed=seed)

    @property
    def cache_path(self) -> str:
        return self.cache_dir or os.path.join(self.workdir, "cache")


SECTIONS = {
    "recipe": ("n_scale_free", "n_hyperbolic", "n_nodes", "attach_m", "train_mix",
               "param_table", "max_temperature", "data_seed"),
    "model": ("hop_order", "hidden", "depth", "mlp_hidden", "dropout", "mlp_on_embedding"),
    "train": ("epochs", "lr", "pairs_per_node", "batch_pairs", "seeds", "threads"),
    "paths": ("workdir", "cache_dir"),
    "test": ("test_graphs", "test_directed"),
}

_PARSERS = {
    "mlp_hidden": _ints, "seeds": _ints, "test_graphs": _strs,
    "mlp_on_embedding": _bool, "test_directed": _bool, "batch_pairs": _opt_int,
}


def parse_value(name: str, raw):
    if name in _PARSERS:
        return _PARSERS[name](raw)
    kind = type(getattr(PipelineConfig, name, ""))
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return str(raw)


def field_names() -> list[str]:
    return [f.name for f in fields(PipelineConfig)]


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file (optional) and apply ``overrides`` on top."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser()
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        known = set(field_names())
        for section in cp.sections():
            for key, raw in cp.items(section):
                if key not in known:
                    raise ValueError(f"{path}: unknown key [{section}] {key}")
                values[key] = parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = parse_value(key, raw)
    return PipelineConfig(**values)


def format_config(cfg: PipelineConfig) -> str:
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return ", ".join(str(x) for x in v)
        return "" if v is None else str(v)

    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {fmt(getattr(cfg, k))}" for k in keys)
        lines.append("")
    return "\n".join(lines)
