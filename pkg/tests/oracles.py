"""Independent reference implementations used only by the tests.

Written from the formula definitions with plain loops and a direct DFT,
so they share no code path with the package.
"""

from __future__ import annotations

import math

import numpy as np


def naive_quantile(x, p):
    s = sorted(float(v) for v in x)
    pos = p * (len(s) - 1) + 1  # 1-based
    lo = int(math.floor(pos))
    frac = pos - lo
    if lo >= len(s):
        return s[-1]
    return s[lo - 1] + frac * (s[lo] - s[lo - 1])


def naive_time(x):
    x = [float(v) for v in x]
    n = len(x)
    mean = sum(x) / n
    m2 = sum((v - mean) ** 2 for v in x) / n
    m3 = sum((v - mean) ** 3 for v in x) / n
    m4 = sum((v - mean) ** 4 for v in x) / n
    std = math.sqrt(m2)
    skew = 0.0 if m2 < 1e-24 else m3 / m2 ** 1.5
    kurt = 0.0 if m2 < 1e-24 else m4 / m2 ** 2
    changes = 0
    for a, b in zip(x[:-1], x[1:]):
        if (a - mean) * (b - mean) < 0:
            changes += 1
    return [min(x), max(x), mean, std, m2, max(x) - min(x), std / (abs(mean) + 1e-12),
            skew, kurt, naive_quantile(x, 0.25), naive_quantile(x, 0.5),
            naive_quantile(x, 0.85), changes / (n - 1)]


def naive_spectrum(x, rate):
    """Mean-removed, periodic-Hann windowed, zero-padded direct DFT without DC."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    nfft = 1
    while nfft < n:
        nfft *= 2
    idx = np.arange(n)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * idx / n)
    y = (x - x.mean()) * w
    k = np.arange(1, nfft // 2 + 1)
    basis = np.exp(-2j * np.pi * np.outer(k, idx) / nfft)
    mag = np.abs(basis @ y)
    freqs = k * rate / nfft
    return mag, freqs


def naive_spectral(mag, freqs, rate):
    m = [float(v) for v in mag]
    f = [float(v) for v in freqs]
    K = len(m)
    total = sum(m)
    if total <= 0:
        return [0.0] * 12
    energy = sum(v * v for v in m)
    ent = 0.0
    for v in m:
        p = v * v / energy
        if p > 0:
            ent -= p * math.log2(p)
    ent /= math.log2(K)
    upper = sum(v * v for v, fk in zip(m, f) if fk > rate / 4)
    irr_k = sum(abs(m[i] - (m[i - 1] + m[i] + m[i + 1]) / 3) for i in range(1, K - 1))
    irr_j = sum((m[i] - m[i + 1]) ** 2 for i in range(K - 1)) / energy
    sharp = sum(((i + 1) / K) ** 0.23 * m[i] for i in range(K)) / total
    L = [20 * math.log10(v + 1e-12) for v in m]
    smooth = sum(abs(L[i] - (L[i - 1] + L[i] + L[i + 1]) / 3) for i in range(1, K - 1))
    c = sum(fk * v for fk, v in zip(f, m)) / total
    var = sum((fk - c) ** 2 * v for fk, v in zip(f, m)) / total
    sd = math.sqrt(var)
    crest = max(m) / (total / K)
    if var > 0:
        sk = sum((fk - c) ** 3 * v for fk, v in zip(f, m)) / total / sd ** 3
        ku = sum((fk - c) ** 4 * v for fk, v in zip(f, m)) / total / var ** 2
    else:
        sk = ku = 0.0
    return [energy, ent, upper / energy, irr_k, irr_j, sharp, smooth, c, sd, crest, sk, ku]


def naive_features(x, rate):
    mag, freqs = naive_spectrum(x, rate)
    if max(x) == min(x):
        mag = np.zeros_like(mag)
    return naive_time(x) + naive_spectral(mag, freqs, rate)


def brute_force_alias(f, fs):
    """Enumerate fold indices; smallest distance wins, ties to the smaller N."""
    best = None
    for N in range(0, int(math.ceil(f / fs)) + 2):
        d = abs(f - N * fs)
        if best is None or d < best[1]:
            best = (N, d)
    return best


def hand_metrics(cm):
    """Per-class and support-weighted rates with Fractions, written out longhand."""
    from fractions import Fraction

    n = len(cm)
    total = sum(sum(r) for r in cm)
    rows = []
    for i in range(n):
        tp = cm[i][i]
        fn = sum(cm[i]) - tp
        fp = sum(cm[r][i] for r in range(n)) - tp
        tn = total - tp - fn - fp
        tpr = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        fpr = Fraction(fp, fp + tn) if fp + tn else Fraction(0)
        prec = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        rows.append((tpr, fpr, prec, tpr, tp + fn))
    weighted = []
    for j in range(4):
        weighted.append(sum(r[j] * r[4] for r in rows) / total if total else Fraction(0))
    acc = Fraction(sum(cm[i][i] for i in range(n)), total)
    return rows, weighted, acc
