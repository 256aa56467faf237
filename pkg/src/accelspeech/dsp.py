"""Filtering, spectral transforms and the accelerometer aliasing model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import (
    CutoffAboveNyquist,
    EmptySpectrogram,
    NonUniformGrid,
    SegmentTooShort,
)

DEFAULT_FEATURE_CUTOFF = 1.0
DEFAULT_SEGMENT_CUTOFF = 8.0
DEFAULT_WINDOW_LEN = 64
DEFAULT_HOP = 16
DB_FLOOR = -80.0


@dataclass(frozen=True)
class FilterSpec:
    cutoff: float = DEFAULT_FEATURE_CUTOFF
    order: int = 4
    kind: str = "highpass"
    design: str = "butterworth"

    def __post_init__(self):
        if self.kind != "highpass":
            raise ValueError(f"unsupported filter kind {self.kind!r}")
        if self.design != "butterworth":
            raise ValueError(f"unsupported filter design {self.design!r}")
        if not 1 <= int(self.order) <= 8 or int(self.order) != self.order:
            raise ValueError(f"order must be an integer in [1, 8], got {self.order}")
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def check_uniform(timestamps, rate: float, rtol: float = 1e-6) -> None:
    dt = np.diff(np.asarray(timestamps, dtype=float))
    period = 1.0 / rate
    if len(dt) and not np.all(np.abs(dt - period) <= rtol * period):
        raise NonUniformGrid("samples are not on a uniform grid; resample first")


def butter_highpass_sos(spec: FilterSpec, rate: float) -> np.ndarray:
    nyq = 0.5 * rate
    if not spec.cutoff < nyq:
        raise CutoffAboveNyquist(f"cutoff {spec.cutoff} Hz >= Nyquist {nyq} Hz")
    return sps.butter(spec.order, spec.cutoff / nyq, btype="highpass", output="sos")


def highpass(x, rate: float, spec: FilterSpec | None = None, timestamps=None) -> np.ndarray:
    """Zero-phase (forward-backward) Butterworth high-pass.

    The effective magnitude response is |H|^2 of the designed filter.
    Pass ``timestamps`` to have the grid checked for uniformity.
    """
    spec = spec or FilterSpec()
    if timestamps is not None:
        check_uniform(timestamps, rate)
    x = np.asarray(x, dtype=float)
    sos = butter_highpass_sos(spec, rate)
    # default filtfilt padding is too long for short word regions
    padlen = min(3 * (2 * len(sos) + 1), len(x) - 1)
    return sps.sosfiltfilt(sos, x, padlen=max(padlen, 0))


def analog_highpass_gain_db(freq, cutoff: float, order: int, zero_phase: bool = True):
    """Analog Butterworth high-pass gain |H(jw)| in dB, squared when zero_phase."""
    freq = np.asarray(freq, dtype=float)
    with np.errstate(divide="ignore"):
        mag2 = 1.0 / (1.0 + (cutoff / freq) ** (2 * order))
        g = 10.0 * np.log10(mag2)
    return 2 * g if zero_phase else g


def digital_highpass_gain_db(freq, rate: float, spec: FilterSpec, zero_phase: bool = True):
    sos = butter_highpass_sos(spec, rate)
    _, h = sps.sosfreqz(sos, worN=np.asarray(freq, dtype=float), fs=rate)
    g = 20.0 * np.log10(np.abs(h))
    return 2 * g if zero_phase else g


# -- spectrograms --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrogram:
    magnitudes: np.ndarray  # [frames, bins]
    frame_times: np.ndarray
    bin_freqs: np.ndarray
    window_len: int
    hop: int
    nfft: int
    rate: float
    window: str = "hann"

    @property
    def shape(self):
        return self.magnitudes.shape


def hann(n: int) -> np.ndarray:
    """Periodic Hann window of length n."""
    return sps.get_window("hann", n, fftbins=True)


def frame_count(n: int, window_len: int, hop: int) -> int:
    return (n - window_len) // hop + 1


def stft(x, rate: float, window_len: int = DEFAULT_WINDOW_LEN, hop: int = DEFAULT_HOP) -> Spectrogram:
    """Hann-windowed magnitude STFT, FFT length padded to the next power of two."""
    x = np.asarray(x, dtype=float)
    if window_len < 1 or window_len > len(x):
        raise SegmentTooShort(f"window_len {window_len} does not fit a signal of length {len(x)}")
    if not 1 <= hop <= window_len:
        raise ValueError(f"hop must be in [1, window_len], got {hop}")
    nfft = next_pow2(window_len)
    frames = np.lib.stride_tricks.sliding_window_view(x, window_len)[::hop]
    spec = np.abs(np.fft.rfft(frames * hann(window_len), n=nfft, axis=1))
    times = (np.arange(len(frames)) * hop + window_len / 2) / rate
    freqs = np.arange(nfft // 2 + 1) * rate / nfft
    return Spectrogram(spec, times, freqs, window_len, hop, nfft, float(rate))


def one_sided_energy(mag: np.ndarray, nfft: int) -> np.ndarray:
    """Per-frame signal energy recovered from a one-sided magnitude spectrum (Parseval)."""
    p = mag.astype(float) ** 2
    w = np.full(p.shape[-1], 2.0)
    w[0] = 1.0
    if nfft % 2 == 0:
        w[-1] = 1.0
    return (p * w).sum(axis=-1) / nfft


def peak_frequency(spec: Spectrogram) -> float:
    """Frequency of the bin with the largest time-averaged power."""
    power = (spec.magnitudes ** 2).mean(axis=0)
    return float(spec.bin_freqs[int(np.argmax(power))])


def render_image(spec: Spectrogram, size: int = 128) -> np.ndarray:
    """Grayscale uint8 image of the log-magnitude spectrogram.

    dB relative to the peak magnitude with a -80 dB floor, min-max scaled to
    [0, 255], bilinearly resized to size x size. Low frequencies at the bottom.
    """
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    mag = np.asarray(spec.magnitudes, dtype=float)
    if mag.size == 0:
        raise EmptySpectrogram("spectrogram has no frames or bins")
    peak = mag.max()
    if peak > 0:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag / peak)
        db = np.maximum(db, DB_FLOOR)
    else:
        db = np.full(mag.shape, DB_FLOOR)
    lo, hi = db.min(), db.max()
    norm = (db - lo) / (hi - lo) * 255.0 if hi > lo else np.zeros_like(db)
    img = bilinear_resize(norm.T[::-1], size, size)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def bilinear_resize(a: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Bilinear resize with align-corners sampling."""
    a = np.asarray(a, dtype=float)
    r = np.linspace(0, a.shape[0] - 1, rows)
    c = np.linspace(0, a.shape[1] - 1, cols)
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    r1 = np.minimum(r0 + 1, a.shape[0] - 1)
    c1 = np.minimum(c0 + 1, a.shape[1] - 1)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]
    top = a[np.ix_(r0, c0)] * (1 - fc) + a[np.ix_(r0, c1)] * fc
    bot = a[np.ix_(r1, c0)] * (1 - fc) + a[np.ix_(r1, c1)] * fc
    return top * (1 - fr) + bot * fr


def save_png(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(path, format="PNG")


def spectrogram_csv(spec: Spectrogram) -> str:
    """Frames as rows, one column per frequency bin."""
    lines = ["time_s," + ",".join(repr(float(f)) for f in spec.bin_freqs)]
    for t, row in zip(spec.frame_times.tolist(), spec.magnitudes.tolist()):
        lines.append(repr(t) + "," + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


# -- aliasing ------------------------------------------------------------------


@dataclass(frozen=True)
class AliasPrediction:
    source_freq: float
    sensor_rate: float
    fold_index: int
    alias_freq: float


def predict_alias(f: float, f_s: float) -> AliasPrediction:
    """Where a tone at ``f`` lands when point-sampled at ``f_s``.

    Picks the integer fold index minimising |f - N*f_s|; on an exact
    half-rate tie the smaller index wins.
    """
    if f < 0 or not f_s > 0:
        raise ValueError("need f >= 0 and f_s > 0")
    base = int(math.floor(f / f_s))
    best_n, best = None, math.inf
    for n in (base - 1, base, base + 1):
        if n < 0:
            continue
        d = abs(f - n * f_s)
        if d < best:
            best_n, best = n, d
    return AliasPrediction(float(f), float(f_s), best_n, best)
