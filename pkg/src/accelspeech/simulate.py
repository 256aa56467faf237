"""Synthetic ear-speaker vibration channel with ground-truth labels.

Speech-like sources (fundamental plus formant tones) are band-limited to the
speaker/body response band, attenuated and point-sampled at the sensor rate
with no anti-alias filter, so content above half the sensor rate folds into
the observable band. Hand-motion drift and white sensor noise are added on
top. Most of the energy lands on Z with weak leakage to X and Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import BadDuration
from .ingest import SampleStream
from .segment import WordRegion

MIN_SOURCE_RATE = 8000.0
DEFAULT_SOURCE_RATE = 16000.0
HAND_MOTION_CUTOFF = 5.0
# Speech-to-noise ratio standing in for a quiet earpiece: low enough that the
# detector misses a share of words, as observed for ear-speaker recordings.
EAR_SPEAKER_SNR_DB = 2.0


@dataclass(frozen=True)
class ChannelSpec:
    sensor_rate: float = 420.0
    response_band: tuple[float, float] = (100.0, 3300.0)
    attenuation_db: float = 40.0
    band_loss_db: tuple = ()  # ((f_lo, f_hi, extra loss dB), ...)
    hand_motion_walk_std: float = 0.0
    white_std: float = 1e-4
    leakage_db: float = -20.0
    gravity: tuple[float, float, float] = (0.0, 9.81, 0.0)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.response_band
        if not 0 <= lo < hi:
            raise ValueError(f"response band must satisfy 0 <= f_lo < f_hi, got {self.response_band}")
        if not self.sensor_rate > 0:
            raise ValueError("sensor_rate must be positive")
        if self.hand_motion_walk_std < 0 or self.white_std < 0:
            raise ValueError("noise standard deviations must be non-negative")


@dataclass(frozen=True)
class SpeakerProfile:
    fundamental: float
    formants: tuple = ()  # ((Hz, relative amplitude), ...)
    speaker_id: str = ""
    gender_tag: str = ""
    word_id: str = ""
    fundamental_amp: float = 1.0
    level: float = 1.0
    duration: float = 0.4

    def __post_init__(self):
        if not self.fundamental > 0:
            raise ValueError("fundamental must be positive")
        if self.fundamental_amp <= 0 or any(a <= 0 for _, a in self.formants):
            raise ValueError("tone amplitudes must be positive")

    @property
    def labels(self) -> dict:
        return {"speaker_id": self.speaker_id, "gender_tag": self.gender_tag, "word_id": self.word_id}


def source_rate_for(sensor_rate: float, minimum: float = DEFAULT_SOURCE_RATE) -> float:
    """Smallest integer multiple of the sensor rate at or above ``minimum``."""
    return sensor_rate * math.ceil(minimum / sensor_rate)


def tukey_envelope(n: int, alpha: float = 0.2) -> np.ndarray:
    return sps.windows.tukey(n, alpha)


def synth_utterance(
    profile: SpeakerProfile,
    duration: float,
    seed: int = 0,
    rate: float = DEFAULT_SOURCE_RATE,
    freq_jitter: float = 0.0,
    amp_jitter: float = 0.0,
) -> np.ndarray:
    """Sum of the profile's tones under a Tukey envelope, at ``rate`` Hz.

    Each tone gets a seeded random phase; ``freq_jitter`` and ``amp_jitter``
    are relative standard deviations applied once per utterance.
    """
    if not 0.1 <= duration <= 2.0:
        raise BadDuration(f"duration must be within [0.1, 2] s, got {duration}")
    if rate < MIN_SOURCE_RATE:
        raise ValueError(f"source rate must be >= {MIN_SOURCE_RATE} Hz")
    rng = np.random.default_rng(seed)
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    tones = [(profile.fundamental, profile.fundamental_amp)] + list(profile.formants)
    x = np.zeros(n)
    for f, a in tones:
        f = f * (1.0 + freq_jitter * rng.standard_normal()) if freq_jitter else f
        a = a * max(0.0, 1.0 + amp_jitter * rng.standard_normal()) if amp_jitter else a
        if not 0 < f < rate / 2:
            raise ValueError(f"tone at {f} Hz is outside (0, {rate / 2}) Hz")
        x += a * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    return profile.level * x * tukey_envelope(n)


# -- channel -------------------------------------------------------------------


def _band_limit(x: np.ndarray, rate: float, channel: ChannelSpec) -> np.ndarray:
    lo, hi = channel.response_band
    nyq = rate / 2
    if hi < nyq and lo > 0:
        sos = sps.butter(4, [lo / nyq, hi / nyq], btype="bandpass", output="sos")
    elif lo > 0:
        sos = sps.butter(4, lo / nyq, btype="highpass", output="sos")
    elif hi < nyq:
        sos = sps.butter(4, hi / nyq, btype="lowpass", output="sos")
    else:
        return x
    return sps.sosfiltfilt(sos, x)


def _apply_losses(x: np.ndarray, rate: float, channel: ChannelSpec) -> np.ndarray:
    x = x * 10.0 ** (-channel.attenuation_db / 20.0)
    if channel.band_loss_db:
        spec = np.fft.rfft(x)
        f = np.fft.rfftfreq(len(x), 1.0 / rate)
        for lo, hi, db in channel.band_loss_db:
            spec[(f >= lo) & (f < hi)] *= 10.0 ** (-db / 20.0)
        x = np.fft.irfft(spec, n=len(x))
    return x


def _point_sample(x: np.ndarray, rate: float, sensor_rate: float) -> np.ndarray:
    """Instantaneous samples at k / sensor_rate, no anti-alias filtering."""
    ratio = rate / sensor_rate
    n_out = int(math.floor((len(x) - 1) / ratio + 1e-9)) + 1
    if abs(ratio - round(ratio)) < 1e-9:
        return x[:: int(round(ratio))][:n_out].copy()
    pos = np.arange(n_out) * ratio
    return np.interp(pos, np.arange(len(x)), x)


def vibration(source: np.ndarray, source_rate: float, channel: ChannelSpec) -> np.ndarray:
    """Noise-free sensor-rate vibration (Z-axis scale) induced by a source."""
    x = _band_limit(np.asarray(source, dtype=float), source_rate, channel)
    x = _apply_losses(x, source_rate, channel)
    return _point_sample(x, source_rate, channel.sensor_rate)


def hand_motion(n: int, rate: float, walk_std: float, rng) -> np.ndarray:
    if walk_std == 0 or n < 16:
        return np.zeros(n)
    walk = np.cumsum(rng.normal(0.0, walk_std, n))
    cutoff = min(HAND_MOTION_CUTOFF, 0.45 * rate)
    sos = sps.butter(2, cutoff / (rate / 2), btype="lowpass", output="sos")
    return sps.sosfiltfilt(sos, walk)


def _assemble(clean_z: np.ndarray, channel: ChannelSpec, white_std: float, seed, label: str,
              metadata: dict) -> SampleStream:
    rng = np.random.default_rng(seed)
    n = len(clean_z)
    rate = channel.sensor_rate
    leak = 10.0 ** (channel.leakage_db / 20.0)
    axes = []
    for i, gain in enumerate((leak, -leak, 1.0)):
        white = rng.normal(0.0, white_std, n) if white_std > 0 else np.zeros(n)
        drift = hand_motion(n, rate, channel.hand_motion_walk_std, rng)
        axes.append(gain * clean_z + white + drift + channel.gravity[i])
    t = np.arange(n) / rate
    return SampleStream(t, axes[0], axes[1], axes[2], rate, source_label=label,
                        metadata={"white_std": white_std, **metadata})


def transmit(source: np.ndarray, source_rate: float, channel: ChannelSpec,
             noise_seed: int | None = None) -> SampleStream:
    """Pass a source waveform through the channel and the sensor."""
    clean = vibration(source, source_rate, channel)
    seed = channel.seed if noise_seed is None else noise_seed
    return _assemble(clean, channel, channel.white_std, seed, "simulated",
                     {"source_rate": source_rate})


# -- corpora -------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledRegion:
    region: WordRegion
    labels: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusOptions:
    gap_s: float = 5.0
    snr_db: float | None = None
    freq_jitter: float = 0.0
    amp_jitter: float = 0.0
    duration_jitter: float = 0.0
    source_rate_min: float = DEFAULT_SOURCE_RATE
    pad_s: float = 0.05


def make_corpus(
    profiles,
    words_per_class: int,
    channel: ChannelSpec,
    seed: int = 0,
    options: CorpusOptions | None = None,
) -> tuple[SampleStream, list[LabeledRegion]]:
    """Concatenate ``words_per_class`` utterances of each profile, class after class.

    Utterances are separated by ``gap_s`` of silence. With ``snr_db`` set the
    white-noise level is chosen so that mean speech power on Z over the
    utterance supports divided by the white-noise variance matches it.
    Returns the stream and exact ground-truth regions with their labels.
    """
    profiles = list(profiles)
    if len(profiles) < 2:
        raise ValueError("make_corpus needs at least two profiles")
    opts = options or CorpusOptions()
    fs = channel.sensor_rate
    src_rate = source_rate_for(fs, opts.source_rate_min)
    ratio = int(round(src_rate / fs))
    n_utt = len(profiles) * words_per_class
    seeds = np.random.SeedSequence(int(seed)).generate_state(n_utt + 1, dtype=np.uint32).tolist()
    pad_src = int(round(opts.pad_s * fs)) * ratio

    pieces = []
    truth = []
    cursor = int(round(opts.gap_s * fs))
    u = 0
    for prof in profiles:
        for _ in range(words_per_class):
            rng = np.random.default_rng(seeds[u])
            dur = prof.duration * (1.0 + opts.duration_jitter * rng.standard_normal()) \
                if opts.duration_jitter else prof.duration
            dur = float(np.clip(dur, 0.1, 2.0))
            # utterance length in whole sensor periods so onsets stay on the grid
            n_sensor = max(2, int(round(dur * fs)))
            src = synth_utterance(prof, n_sensor * ratio / src_rate, seed=int(rng.integers(2**31)),
                                  rate=src_rate, freq_jitter=opts.freq_jitter,
                                  amp_jitter=opts.amp_jitter)
            padded = np.concatenate([np.zeros(pad_src), src, np.zeros(pad_src)])
            vib = vibration(padded, src_rate, channel)
            lead = pad_src // ratio
            pieces.append((cursor - lead, vib))
            truth.append(LabeledRegion(WordRegion(cursor, cursor + n_sensor, 0.0, "z"), prof.labels))
            cursor += n_sensor + int(round(opts.gap_s * fs))
            u += 1

    clean = np.zeros(cursor)
    for start, vib in pieces:
        end = min(start + len(vib), len(clean))
        clean[start:end] += vib[: end - start]

    white_std = channel.white_std
    if opts.snr_db is not None:
        support = np.concatenate([clean[t.region.start:t.region.end] for t in truth])
        power = float(np.mean(support ** 2))
        white_std = math.sqrt(power / 10.0 ** (opts.snr_db / 10.0))
    meta = {"source_rate": src_rate, "snr_db": opts.snr_db, "seed": int(seed)}
    stream = _assemble(clean, channel, white_std, [seeds[-1], channel.seed], "corpus", meta)
    return stream, truth


# -- stock speakers and vocabulary ----------------------------------------------

# (speaker_id, gender, fundamental Hz, formant scale, level)
DEFAULT_SPEAKERS = (
    ("m1", "male", 112.0, 1.00, 1.00),
    ("m2", "male", 134.0, 1.06, 0.85),
    ("f1", "female", 208.0, 1.16, 0.95),
    ("f2", "female", 236.0, 1.22, 0.80),
)

# word_id -> ((F1, F2, F3) Hz, duration s); vowel-like formant patterns
DIGIT_WORDS = {
    "0": ((400.0, 1900.0, 2600.0), 0.45),
    "1": ((450.0, 900.0, 2400.0), 0.35),
    "2": ((320.0, 1000.0, 2300.0), 0.30),
    "3": ((300.0, 2300.0, 2950.0), 0.40),
    "4": ((520.0, 850.0, 2500.0), 0.35),
    "5": ((700.0, 1200.0, 2600.0), 0.50),
    "6": ((380.0, 2100.0, 2700.0), 0.40),
    "7": ((560.0, 1750.0, 2500.0), 0.55),
    "8": ((480.0, 2050.0, 2650.0), 0.30),
    "9": ((640.0, 1100.0, 2450.0), 0.45),
}
FORMANT_AMPS = (0.8, 0.5, 0.3)


def vocabulary_profiles(speakers=DEFAULT_SPEAKERS, words=DIGIT_WORDS) -> list[SpeakerProfile]:
    """One profile per (speaker, word), speaker-major order."""
    out = []
    for sid, gender, f0, scale, level in speakers:
        for wid, (formants, dur) in words.items():
            fm = tuple((f * scale, a) for f, a in zip(formants, FORMANT_AMPS))
            out.append(SpeakerProfile(f0, fm, sid, gender, wid, level=level, duration=dur))
    return out
