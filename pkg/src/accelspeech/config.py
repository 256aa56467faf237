"""Run configuration: flat key=value files merged with command-line flags."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .dsp import FilterSpec
from .ingest import ColumnMapping
from .ml.models import KIND_ALIASES
from .segment import SegmentParams
from .simulate import ChannelSpec, CorpusOptions

TARGETS = ("gender_tag", "speaker_id", "word_id")


class ConfigError(Exception):
    """Bad or incomplete configuration (a usage error)."""


@dataclass(frozen=True)
class RunConfig:
    seed: int | None = None
    # signal chain
    rate: float | None = None
    cutoff: float = 1.0
    segment_cutoff: float = 8.0
    filter_order: int = 4
    window_s: float = 0.05
    k_mad: float = 4.0
    min_dur_s: float = 0.10
    max_dur_s: float = 2.0
    merge_gap_s: float = 0.15
    min_run_s: float = 0.05
    window_len: int = 64
    hop: int = 16
    image_size: int = 128
    # classifier and protocol
    classifier: str = "rf"
    split: str = "cv10"
    holdout_fraction: float = 0.8
    n_trees: int = 100
    n_members: int = 10
    subspace_fraction: float = 0.5
    dt_bins: int = 10
    dt_eval_folds: int = 5
    target: str = "all"
    # simulator
    sensor_rate: float = 420.0
    snr_db: float | None = 10.0
    words_per_class: int = 15
    gap_s: float = 5.0
    freq_jitter: float = 0.01
    amp_jitter: float = 0.1
    duration_jitter: float = 0.1
    hand_motion_walk_std: float = 1e-5
    n_speakers: int = 4
    image_csv: int = 0
    # input layout
    col_time: str = "time"
    col_x: str = "ax"
    col_y: str = "ay"
    col_z: str = "az"
    units: str = "m/s^2"
    # paths
    input: str | None = None
    truth: str | None = None
    regions: str | None = None
    features: str | None = None
    model: str | None = None
    out: str = "out"

    def validate(self) -> "RunConfig":
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or seed= in the config file)")
        if self.classifier not in KIND_ALIASES:
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        if self.split not in ("holdout", "cv10"):
            raise ConfigError(f"unknown split {self.split!r}")
        if self.target not in TARGETS + ("all", "label"):
            raise ConfigError(f"unknown target {self.target!r}")
        for name in ("input", "truth", "regions", "features", "model"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{name} path does not exist: {p}")
        return self

    # -- derived module configs -----------------------------------------

    @property
    def columns(self) -> ColumnMapping:
        return ColumnMapping(self.col_time, self.col_x, self.col_y, self.col_z, self.units)

    @property
    def feature_filter(self) -> FilterSpec:
        return FilterSpec(cutoff=self.cutoff, order=self.filter_order)

    @property
    def segment_filter(self) -> FilterSpec:
        return FilterSpec(cutoff=self.segment_cutoff, order=self.filter_order)

    @property
    def segment_params(self) -> SegmentParams:
        return SegmentParams(self.window_s, self.k_mad, self.min_dur_s, self.max_dur_s,
                             self.merge_gap_s, self.min_run_s)

    @property
    def channel(self) -> ChannelSpec:
        return ChannelSpec(sensor_rate=self.sensor_rate, hand_motion_walk_std=self.hand_motion_walk_std,
                           seed=int(self.seed))

    @property
    def corpus_options(self) -> CorpusOptions:
        return CorpusOptions(gap_s=self.gap_s, snr_db=self.snr_db, freq_jitter=self.freq_jitter,
                             amp_jitter=self.amp_jitter, duration_jitter=self.duration_jitter)

    @property
    def classifier_params(self) -> dict:
        kind = KIND_ALIASES[self.classifier]
        if kind == "random_forest":
            return {"n_trees": self.n_trees}
        if kind == "random_subspace":
            return {"n_members": self.n_members, "subspace_fraction": self.subspace_fraction}
        return {"bins": self.dt_bins, "eval_folds": self.dt_eval_folds}

    def to_dict(self) -> dict:
        return asdict(self)

    def content_dict(self) -> dict:
        """Everything that can change results; the output directory cannot."""
        d = self.to_dict()
        d.pop("out")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.content_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, text: str):
    default = _FIELDS[name].default
    kind = _FIELDS[name].type
    if text.lower() in ("none", "null", ""):
        return None
    if "int" in str(kind) and "float" not in str(kind):
        return int(text)
    if "float" in str(kind):
        return float(text)
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    return text


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError:
            raise ConfigError(f"config line {lineno}: bad value {value!r} for {key}") from None
    return out


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    """File values first, then non-None command-line overrides."""
    merged = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    return replace(RunConfig(), **merged)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        lines.append(f"{k} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"
