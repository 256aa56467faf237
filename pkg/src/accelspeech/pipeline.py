"""End-to-end glue: stream -> regions -> labelled features -> evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .config import TARGETS, RunConfig
from .features import FREQ_FEATURES, FeatureConfig, FeatureVector, extract_all
from .ingest import SampleStream, resample
from .ml import Dataset, cross_validate, holdout, make_trainer
from .ml.infogain import information_gain
from .segment import WordRegion, axis_variances, detect_stream, detection_rate, match_regions
from .simulate import LabeledRegion, make_corpus, vocabulary_profiles, DEFAULT_SPEAKERS

TARGET_TITLES = {"gender_tag": "Gender", "speaker_id": "Speaker", "word_id": "Speech",
                 "label": "Label"}
CLASSIFIER_TITLES = {"rf": "Random Forest", "rss": "Random Subspace", "dt": "Decision Table"}
KIND_TITLES = {"random_forest": "Random Forest", "random_subspace": "Random Subspace",
               "decision_table": "Decision Table"}


def simulate_corpus(cfg: RunConfig):
    speakers = DEFAULT_SPEAKERS[: cfg.n_speakers]
    return make_corpus(vocabulary_profiles(speakers), cfg.words_per_class, cfg.channel,
                       seed=int(cfg.seed), options=cfg.corpus_options)


def prepare_stream(stream: SampleStream, rate: float | None = None) -> SampleStream:
    """Resample to ``rate`` when given, else onto a uniform grid if needed."""
    if rate is not None:
        return resample(stream, rate)
    if not stream.is_uniform:
        return resample(stream, stream.nominal_rate)
    return stream


def rescale_truth(truth_seconds, stream: SampleStream) -> list[LabeledRegion]:
    """Map (start_s, end_s, labels) triples onto sample indices of ``stream``."""
    t0, rate = stream.timestamps[0], stream.nominal_rate
    out = []
    for start_s, end_s, labels in truth_seconds:
        s = int(round((start_s - t0) * rate))
        e = max(s + 1, int(round((end_s - t0) * rate)))
        out.append(LabeledRegion(WordRegion(s, e), labels))
    return out


def truth_in_seconds(truth: list[LabeledRegion], stream: SampleStream):
    t0, rate = float(stream.timestamps[0]), stream.nominal_rate
    return [(t0 + t.region.start / rate, t0 + t.region.end / rate, t.labels) for t in truth]


@dataclass
class SegmentResult:
    regions: list
    axis: str
    variances: dict
    labels: list | None = None  # per region, when ground truth was supplied
    matched_truth: list | None = None
    detection_rate: float | None = None


def segment_and_label(stream: SampleStream, cfg: RunConfig, truth=None) -> SegmentResult:
    """Detect regions; with ground truth, keep detections matched one-to-one to it."""
    variances = axis_variances(stream, cfg.segment_filter).as_dict()
    regions, axis = detect_stream(stream, cfg.segment_params, cfg.segment_filter)
    if truth is None:
        return SegmentResult(regions, axis, variances)
    truth_regions = [t.region for t in truth]
    pairs = match_regions(regions, truth_regions, 0.0)
    kept = [regions[i] for i, _, _ in pairs]
    labels = [dict(truth[j].labels) for _, j, _ in pairs]
    rate = detection_rate(regions, truth_regions, 0.5)
    return SegmentResult(kept, axis, variances, labels, [j for _, j, _ in pairs], rate)


def features_for(stream: SampleStream, regions, cfg: RunConfig, labels=None) -> list[FeatureVector]:
    return extract_all(stream, regions, FeatureConfig(cfg.feature_filter), labels=labels,
                       region_ids=[f"r{i:04d}" for i in range(len(regions))])


def relabel(vectors, label_dicts, target: str) -> list[FeatureVector]:
    return [FeatureVector(v.values, str(d[target]), v.region_id) for v, d in zip(vectors, label_dicts)]


def targets_for(cfg: RunConfig, available) -> list[str]:
    if cfg.target == "all":
        return [t for t in TARGETS if t in available]
    return [cfg.target]


def run_protocol(data: Dataset, cfg: RunConfig):
    trainer = make_trainer(cfg.classifier, cfg.classifier_params, int(cfg.seed))
    if cfg.split == "cv10":
        return cross_validate(data, 10, trainer, int(cfg.seed))
    return holdout(data, trainer, cfg.holdout_fraction, int(cfg.seed))


def cutoff_information_gain(stream: SampleStream, regions, labels, cutoffs, bins: int = 10,
                            order: int = 4) -> dict:
    """Summed information gain of the spectral features for each high-pass cutoff.

    A cutoff that strips speech energy shows up as a drop in total gain.
    """
    out = {}
    y = np.asarray(labels)
    for c in cutoffs:
        cfg = FeatureConfig(dsp.FilterSpec(cutoff=c, order=order))
        vecs = extract_all(stream, regions, cfg)
        X = np.array([v.values for v in vecs])
        j0 = len(X[0]) - len(FREQ_FEATURES)
        out[float(c)] = float(sum(information_gain(X[:, j], y, bins) for j in range(j0, X.shape[1])))
    return out


def truth_from_csv(text: str):
    """Read (start_s, end_s, labels) triples from a region file with label columns."""
    import csv
    import io

    from .errors import MissingColumn
    from .segment import REGION_COLUMNS

    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in ("start_s", "end_s") if c not in (reader.fieldnames or [])]
    if missing:
        raise MissingColumn(f"truth file lacks {missing}")
    out = []
    for row in reader:
        labels = {k: v for k, v in row.items() if k not in REGION_COLUMNS}
        out.append((float(row["start_s"]), float(row["end_s"]), labels))
    return out


def spectrogram_span(region: WordRegion, n: int, window_len: int) -> tuple[int, int]:
    """Region bounds widened symmetrically to at least one STFT window."""
    s, e = region.start, region.end
    if e - s >= window_len or n < window_len:
        return s, e
    extra = window_len - (e - s)
    s = max(0, s - extra // 2)
    e = s + window_len
    if e > n:
        e, s = n, n - window_len
    return s, e
