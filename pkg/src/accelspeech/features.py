"""Time- and frequency-domain statistics of a word region (25 features).

Formula conventions
-------------------
* cv = std / (|mean| + 1e-12)
* skewness = m3 / m2**1.5 and kurtosis = m4 / m2**2 (non-excess), both 0
  when m2 < 1e-24
* quantiles interpolate linearly between order statistics at the 1-based
  position p*(n-1) + 1
* mean_crossing_rate = sign changes of (x - mean) over adjacent pairs / (n - 1)
* the spectrum is one Hann-windowed FFT of the mean-removed region,
  zero-padded to the next power of two, DC bin dropped: M[k], f_k, k = 1..K
* an exactly constant region has an all-zero spectrum and every spectral
  feature is reported as 0
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dsp import FilterSpec, hann, highpass, next_pow2
from .errors import NonFiniteFeature, RegionTooShort

TIME_FEATURES = (
    "min", "max", "mean", "std", "variance", "range", "cv", "skewness",
    "kurtosis", "q25", "q50", "q85", "mean_crossing_rate",
)
FREQ_FEATURES = (
    "energy", "entropy", "freq_ratio", "irregularity_k", "irregularity_j",
    "sharpness", "smoothness", "spec_centroid", "spec_stddev", "spec_crest",
    "spec_skewness", "spec_kurtosis",
)
FEATURE_NAMES = TIME_FEATURES + FREQ_FEATURES

MIN_TIME_LEN = 4
MIN_FREQ_LEN = 8
MOMENT_EPS = 1e-24
SHARPNESS_EXP = 0.23
LOG_EPS = 1e-12

# Amplitude homogeneity degree of each feature: f(c*x) = c**d * f(x) for c > 0.
HOMOGENEITY = {
    "min": 1, "max": 1, "mean": 1, "std": 1, "variance": 2, "range": 1,
    "cv": 0, "skewness": 0, "kurtosis": 0, "q25": 1, "q50": 1, "q85": 1,
    "mean_crossing_rate": 0,
    "energy": 2, "entropy": 0, "freq_ratio": 0, "irregularity_k": 1,
    "irregularity_j": 0, "sharpness": 0, "smoothness": 0, "spec_centroid": 0,
    "spec_stddev": 0, "spec_crest": 0, "spec_skewness": 0, "spec_kurtosis": 0,
}


def time_features(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < MIN_TIME_LEN:
        raise RegionTooShort(f"time features need >= {MIN_TIME_LEN} samples, got {n}")
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d ** 2)
    std = math.sqrt(m2)
    if m2 < MOMENT_EPS:
        skew = kurt = 0.0
    else:
        skew = np.mean(d ** 3) / m2 ** 1.5
        kurt = np.mean(d ** 4) / m2 ** 2
    q25, q50, q85 = np.quantile(x, [0.25, 0.50, 0.85], method="linear")
    crossings = np.count_nonzero(d[:-1] * d[1:] < 0)
    lo, hi = x.min(), x.max()
    return np.array([
        lo, hi, mean, std, m2, hi - lo, std / (abs(mean) + 1e-12), skew, kurt,
        q25, q50, q85, crossings / (n - 1),
    ], dtype=float)


def magnitude_spectrum(x, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided magnitudes and frequencies, DC excluded."""
    x = np.asarray(x, dtype=float)
    if len(x) < MIN_FREQ_LEN:
        raise RegionTooShort(f"frequency features need >= {MIN_FREQ_LEN} samples, got {len(x)}")
    nfft = next_pow2(len(x))
    freqs = np.fft.rfftfreq(nfft, d=1.0 / rate)[1:]
    if x.max() == x.min():
        return np.zeros(len(freqs)), freqs
    mag = np.abs(np.fft.rfft((x - x.mean()) * hann(len(x)), n=nfft))[1:]
    return mag, freqs


def spectral_features(mag, freqs, rate: float) -> np.ndarray:
    """The 12 frequency-domain statistics of a magnitude spectrum."""
    raw = np.asarray(mag, dtype=float)
    f = np.asarray(freqs, dtype=float)
    K = len(raw)
    peak = raw.max() if K else 0.0
    if not peak > 0:
        return np.zeros(len(FREQ_FEATURES))
    # scale-free ratios use the peak-normalised spectrum so tiny inputs cannot underflow
    m = raw / peak
    total = m.sum()
    p2 = m ** 2
    e_norm = p2.sum()
    energy = float(np.sum(raw ** 2))
    p = p2 / e_norm
    nz = p > 0
    entropy = -np.sum(p[nz] * np.log2(p[nz])) / math.log2(K) if K > 1 else 0.0
    freq_ratio = p2[f > rate / 4].sum() / e_norm
    local = (m[:-2] + m[1:-1] + m[2:]) / 3.0
    irr_k = peak * np.abs(m[1:-1] - local).sum()
    irr_j = np.sum((m[:-1] - m[1:]) ** 2) / e_norm
    k = np.arange(1, K + 1)
    sharpness = np.sum((k / K) ** SHARPNESS_EXP * m) / total
    L = 20.0 * np.log10(raw + LOG_EPS)
    smooth = np.abs(L[1:-1] - (L[:-2] + L[1:-1] + L[2:]) / 3.0).sum()
    w = m / total
    centroid = np.sum(f * w)
    dev = f - centroid
    var = np.sum(dev ** 2 * w)
    spread = math.sqrt(var)
    crest = m.max() / m.mean()
    if var > 0:
        sskew = np.sum(dev ** 3 * w) / spread ** 3
        skurt = np.sum(dev ** 4 * w) / var ** 2
    else:
        sskew = skurt = 0.0
    return np.array([
        energy, entropy, freq_ratio, irr_k, irr_j, sharpness, smooth,
        centroid, spread, crest, sskew, skurt,
    ], dtype=float)


def freq_features(x, rate: float) -> np.ndarray:
    mag, freqs = magnitude_spectrum(x, rate)
    return spectral_features(mag, freqs, rate)


def region_features(x, rate: float) -> np.ndarray:
    return np.concatenate([time_features(x), freq_features(x, rate)])


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray  # 25, in FEATURE_NAMES order
    label: str = ""
    region_id: str = ""

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


@dataclass(frozen=True)
class FeatureConfig:
    filter: FilterSpec = FilterSpec()
    axis: str = "z"


def extract_all(stream, regions, config: FeatureConfig | None = None, labels=None,
                region_ids=None) -> list[FeatureVector]:
    """One FeatureVector per region of the (high-passed) analysis axis.

    Non-finite features raise NonFiniteFeature rather than being dropped.
    """
    config = config or FeatureConfig()
    if not regions:
        return []
    axis = regions[0].axis if regions[0].axis else config.axis
    x = highpass(stream.axis(axis), stream.nominal_rate, config.filter)
    out = []
    for i, r in enumerate(regions):
        rid = region_ids[i] if region_ids is not None else f"r{i:04d}"
        vals = region_features(x[r.start:r.end], stream.nominal_rate)
        bad = np.flatnonzero(~np.isfinite(vals))
        if len(bad):
            raise NonFiniteFeature(rid, FEATURE_NAMES[bad[0]])
        out.append(FeatureVector(vals, labels[i] if labels is not None else "", rid))
    return out


def vectors_to_csv(vectors) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(FEATURE_NAMES) + ["label", "region_id"])
    for v in vectors:
        w.writerow([repr(float(a)) for a in v.values] + [v.label, v.region_id])
    return out.getvalue()


def vectors_from_csv(text: str) -> list[FeatureVector]:
    from .errors import MalformedRow, MissingColumn

    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    missing = [c for c in FEATURE_NAMES + ("label",) if c not in header]
    if missing:
        raise MissingColumn(f"feature file lacks {missing}")
    idx = [header.index(c) for c in FEATURE_NAMES]
    li = header.index("label")
    ri = header.index("region_id") if "region_id" in header else None
    out = []
    for row in reader:
        if not row:
            continue
        try:
            vals = np.array([float(row[i]) for i in idx])
        except (ValueError, IndexError):
            raise MalformedRow(reader.line_num, "bad feature value") from None
        if not np.all(np.isfinite(vals)):
            raise MalformedRow(reader.line_num, "non-finite feature value")
        out.append(FeatureVector(vals, row[li], row[ri] if ri is not None else ""))
    return out
