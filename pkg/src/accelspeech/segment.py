"""Word-region detection on a filtered single-axis signal, plus axis choice."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .dsp import DEFAULT_SEGMENT_CUTOFF, FilterSpec, highpass
from .errors import NonUniformGrid, SignalTooShort
from .ingest import SampleStream

TIE_ORDER = ("z", "y", "x")


@dataclass(frozen=True)
class SegmentParams:
    window_s: float = 0.05
    k_mad: float = 4.0
    min_dur_s: float = 0.10
    max_dur_s: float = 2.0
    merge_gap_s: float = 0.15
    min_run_s: float = 0.05  # shorter blips are dropped before merging


@dataclass(frozen=True)
class WordRegion:
    start: int  # inclusive sample index
    end: int  # exclusive
    peak_energy: float = 0.0
    axis: str = "z"

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"region start {self.start} must precede end {self.end}")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "WordRegion") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def iou(self, other: "WordRegion") -> float:
        inter = self.overlap(other)
        union = len(self) + len(other) - inter
        return inter / union if union else 0.0


@dataclass(frozen=True)
class AxisVarianceReport:
    var_x: float
    var_y: float
    var_z: float

    def as_dict(self) -> dict:
        return {"x": self.var_x, "y": self.var_y, "z": self.var_z}


def _require_uniform(stream: SampleStream) -> None:
    if not stream.is_uniform:
        raise NonUniformGrid("stream is not uniformly sampled; resample it first")


def axis_variances(stream: SampleStream, spec: FilterSpec | None = None) -> AxisVarianceReport:
    _require_uniform(stream)
    spec = spec or FilterSpec(cutoff=DEFAULT_SEGMENT_CUTOFF)
    v = [float(np.var(highpass(stream.axis(a), stream.nominal_rate, spec))) for a in "xyz"]
    return AxisVarianceReport(*v)


def select_axis(report: AxisVarianceReport) -> str:
    """Axis with the largest variance; ties resolve Z, then Y, then X."""
    vals = report.as_dict()
    best = TIE_ORDER[0]
    for a in TIE_ORDER[1:]:
        if vals[a] > vals[best]:
            best = a
    return best


def rms_envelope(x: np.ndarray, width: int) -> np.ndarray:
    """Centred sliding RMS; the window shrinks at the edges."""
    sq = np.concatenate(([0.0], np.cumsum(np.asarray(x, dtype=float) ** 2)))
    n = len(x)
    half = width // 2
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(np.arange(n) - half + width, 0, n)
    power = (sq[hi] - sq[lo]) / (hi - lo)
    return np.sqrt(np.maximum(power, 0.0))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def detect_regions(
    x, rate: float, params: SegmentParams | None = None, axis: str = "z"
) -> list[WordRegion]:
    """Energy-envelope word-region detector.

    Threshold is median + k * MAD of the RMS envelope, so it scales with
    the noise floor and the result is invariant to signal amplitude.
    """
    params = params or SegmentParams()
    x = np.asarray(x, dtype=float)
    width = max(1, int(round(params.window_s * rate)))
    if len(x) < width:
        raise SignalTooShort(f"signal of {len(x)} samples shorter than {width}-sample window")

    env = rms_envelope(x, width)
    med = float(np.median(env))
    mad = float(np.median(np.abs(env - med)))
    threshold = med + params.k_mad * mad
    min_run = int(round(params.min_run_s * rate))
    runs = [(s, e) for s, e in _runs(env > threshold) if e - s >= min_run]
    if not runs:
        return []

    merge_gap = int(round(params.merge_gap_s * rate))
    merged = [list(runs[0])]
    for s, e in runs[1:]:
        if s - merged[-1][1] < merge_gap:
            merged[-1][1] = e
        else:
            merged.append([s, e])

    min_len = int(round(params.min_dur_s * rate))
    max_len = int(round(params.max_dur_s * rate))
    regions = []
    for s, e in merged:
        if e - s < min_len:
            continue
        e = min(e, s + max_len)
        regions.append(WordRegion(s, e, float(env[s:e].max() ** 2), axis))
    return regions


def detect_stream(
    stream: SampleStream,
    params: SegmentParams | None = None,
    spec: FilterSpec | None = None,
    axis: str | None = None,
) -> tuple[list[WordRegion], str]:
    """Filter, choose the axis (unless given) and detect regions on a stream."""
    _require_uniform(stream)
    spec = spec or FilterSpec(cutoff=DEFAULT_SEGMENT_CUTOFF)
    if axis is None:
        axis = select_axis(axis_variances(stream, spec))
    filtered = highpass(stream.axis(axis), stream.nominal_rate, spec)
    return detect_regions(filtered, stream.nominal_rate, params, axis=axis), axis


# -- matching and region files -------------------------------------------------


def match_regions(detected, truth, min_iou: float = 0.0):
    """Greedy one-to-one matching by IoU, highest first.

    Returns a list of (detected_index, truth_index, iou).
    """
    pairs = []
    for i, d in enumerate(detected):
        for j, t in enumerate(truth):
            iou = d.iou(t)
            if iou > min_iou:
                pairs.append((iou, i, j))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_d, used_t, out = set(), set(), []
    for iou, i, j in pairs:
        if i in used_d or j in used_t:
            continue
        used_d.add(i)
        used_t.add(j)
        out.append((i, j, iou))
    out.sort()
    return out


def detection_rate(detected, truth, min_iou: float = 0.5) -> float:
    if not truth:
        return 1.0
    return len(match_regions(detected, truth, min_iou)) / len(truth)


REGION_COLUMNS = ("start_s", "end_s", "peak_energy", "axis")


def regions_to_csv(regions, rate: float, t0: float = 0.0, labels=None) -> str:
    """Serialise regions as start_s,end_s,peak_energy,axis (+ label columns).

    ``labels`` is an optional list of dicts, one per region, with identical keys.
    """
    label_keys = list(labels[0].keys()) if labels else []
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(REGION_COLUMNS) + label_keys)
    for i, r in enumerate(regions):
        row = [repr(t0 + r.start / rate), repr(t0 + r.end / rate), repr(float(r.peak_energy)), r.axis]
        if labels:
            row += [labels[i][k] for k in label_keys]
        w.writerow(row)
    return out.getvalue()


def regions_from_csv(text: str, rate: float, t0: float = 0.0):
    """Inverse of ``regions_to_csv``; also reads hand-annotated region files.

    Returns (regions, labels) where labels holds any extra columns per row.
    """
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in ("start_s", "end_s") if c not in (reader.fieldnames or [])]
    if missing:
        from .errors import MissingColumn

        raise MissingColumn(f"region file lacks {missing}")
    regions, labels = [], []
    for row in reader:
        start = int(round((float(row["start_s"]) - t0) * rate))
        end = int(round((float(row["end_s"]) - t0) * rate))
        regions.append(WordRegion(start, end, float(row.get("peak_energy") or 0.0),
                                  (row.get("axis") or "z").lower()))
        labels.append({k: v for k, v in row.items() if k not in REGION_COLUMNS})
    return regions, labels
