"""Parsing, validation and resampling of raw 3-axis accelerometer traces."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    MalformedRow,
    MissingColumn,
    NonMonotonicTimestamps,
    TooFewSamples,
    UpsamplingRequested,
)

AXES = ("x", "y", "z")

# Relative tolerance on sample intervals for a grid to count as uniform.
UNIFORM_RTOL = 1e-6


@dataclass(frozen=True)
class ColumnMapping:
    """Header names for the timestamp and the three axes.

    Defaults match the common phone sensor-logger layout (time, ax, ay, az).
    """

    time: str = "time"
    x: str = "ax"
    y: str = "ay"
    z: str = "az"
    units: str = "m/s^2"


@dataclass(frozen=True, eq=False)
class SampleStream:
    timestamps: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    nominal_rate: float
    source_label: str = ""
    units: str = "m/s^2"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in ("timestamps", "ax", "ay", "az"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        n = len(arrays["timestamps"])
        if any(len(a) != n for a in arrays.values()):
            raise ValueError("timestamps and axis arrays must have equal length")
        if n < 2:
            raise TooFewSamples(f"need at least 2 samples, got {n}")
        if not np.all(np.diff(arrays["timestamps"]) > 0):
            raise NonMonotonicTimestamps("timestamps must be strictly increasing")
        if not self.nominal_rate > 0:
            raise ValueError(f"nominal_rate must be positive, got {self.nominal_rate}")

    def __len__(self) -> int:
        return len(self.timestamps)

    def axis(self, name: str) -> np.ndarray:
        return {"x": self.ax, "y": self.ay, "z": self.az}[name.lower()]

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])

    @property
    def irregular(self) -> bool:
        """True when the median interval is more than 20% off 1/nominal_rate."""
        period = 1.0 / self.nominal_rate
        med = float(np.median(np.diff(self.timestamps)))
        return abs(med - period) > 0.2 * period

    @property
    def is_uniform(self) -> bool:
        period = 1.0 / self.nominal_rate
        dt = np.diff(self.timestamps)
        return bool(np.all(np.abs(dt - period) <= UNIFORM_RTOL * period))

    def equals(self, other: "SampleStream") -> bool:
        return (
            self.nominal_rate == other.nominal_rate
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("timestamps", "ax", "ay", "az")
            )
        )


def estimate_rate(timestamps: np.ndarray) -> float:
    """1 / median interval, snapped to 1e-6 Hz when within text-rounding noise."""
    rate = 1.0 / float(np.median(np.diff(timestamps)))
    snapped = round(rate, 6)
    return snapped if abs(rate - snapped) <= 1e-9 * rate else rate


def _parse_number(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, f"column {column!r}: cannot parse {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(line, f"column {column!r}: non-finite value {text!r}")
    return value


def parse_csv(
    path,
    schema: ColumnMapping | None = None,
    nominal_rate: float | None = None,
    source_label: str | None = None,
) -> SampleStream:
    """Read an accelerometer CSV export into a validated SampleStream.

    Any row with a missing or unparseable numeric field raises
    ``MalformedRow`` carrying the 1-based line number; rows are never skipped.
    When ``nominal_rate`` is omitted it is estimated from the median interval.
    """
    schema = schema or ColumnMapping()
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse(fh, schema, nominal_rate, source_label or path.name)


def parse_csv_text(text: str, schema: ColumnMapping | None = None, **kwargs) -> SampleStream:
    return _parse(io.StringIO(text), schema or ColumnMapping(), kwargs.get("nominal_rate"),
                  kwargs.get("source_label", ""))


def _parse(fh, schema, nominal_rate, source_label) -> SampleStream:
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TooFewSamples("empty file") from None
    wanted = {"time": schema.time, "x": schema.x, "y": schema.y, "z": schema.z}
    missing = [name for name in wanted.values() if name not in header]
    if missing:
        raise MissingColumn(f"missing column(s) {missing}; header is {header}")
    idx = {k: header.index(v) for k, v in wanted.items()}
    width = max(idx.values()) + 1

    cols = {k: [] for k in wanted}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < width:
            raise MalformedRow(line, f"expected at least {width} fields, got {len(row)}")
        for k, i in idx.items():
            cols[k].append(_parse_number(row[i].strip(), line, wanted[k]))

    t = np.asarray(cols["time"], dtype=float)
    if len(t) < 2:
        raise TooFewSamples(f"need at least 2 samples, got {len(t)}")
    bad = np.flatnonzero(np.diff(t) <= 0)
    if len(bad):
        # +2: header line plus 1-based numbering of the second row in the pair
        raise NonMonotonicTimestamps(f"timestamp not increasing at data row {bad[0] + 2}")
    rate = float(nominal_rate) if nominal_rate is not None else estimate_rate(t)
    return SampleStream(t, cols["x"], cols["y"], cols["z"], rate,
                        source_label=source_label, units=schema.units)


def write_csv(stream: SampleStream, path, schema: ColumnMapping | None = None) -> None:
    """Write a stream in the same layout ``parse_csv`` reads.

    Values use ``repr`` so a write/parse round trip is exact.
    """
    schema = schema or ColumnMapping()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_csv(stream, schema))


def format_csv(stream: SampleStream, schema: ColumnMapping | None = None) -> str:
    schema = schema or ColumnMapping()
    out = io.StringIO()
    out.write(f"{schema.time},{schema.x},{schema.y},{schema.z}\n")
    for row in zip(stream.timestamps.tolist(), stream.ax.tolist(),
                   stream.ay.tolist(), stream.az.tolist()):
        out.write(",".join(repr(v) for v in row))
        out.write("\n")
    return out.getvalue()


def resample(stream: SampleStream, target_rate: float) -> SampleStream:
    """Linearly interpolate every axis onto a uniform grid at ``target_rate``.

    Down-sampling only. No anti-alias filter is applied, matching what a
    rate-limited sensor would deliver.
    """
    if not target_rate > 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate > stream.nominal_rate * (1 + 1e-9):
        raise UpsamplingRequested(
            f"target rate {target_rate} Hz exceeds stream rate {stream.nominal_rate} Hz")
    t = stream.timestamps
    t0 = t[0]
    n = int(math.floor((t[-1] - t0) * target_rate + 1e-9)) + 1
    grid = t0 + np.arange(n) / target_rate
    # guard against the last grid point landing a hair past the final sample
    grid = np.minimum(grid, t[-1])
    if n < 2:
        raise TooFewSamples("resampled stream would have fewer than 2 samples")
    return replace(
        stream,
        timestamps=grid,
        ax=np.interp(grid, t, stream.ax),
        ay=np.interp(grid, t, stream.ay),
        az=np.interp(grid, t, stream.az),
        nominal_rate=float(target_rate),
        metadata={**stream.metadata, "resampled_from": stream.nominal_rate},
    )
