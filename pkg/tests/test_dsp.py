import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accelspeech import dsp
from accelspeech.dsp import FilterSpec, highpass, predict_alias, render_image, stft
from accelspeech.errors import CutoffAboveNyquist, EmptySpectrogram, NonUniformGrid, SegmentTooShort
from oracles import brute_force_alias

RATE = 420.0


def tone(f, n=4200, rate=RATE, amp=1.0):
    return amp * np.sin(2 * np.pi * f * np.arange(n) / rate)


def steady_gain_db(y, x, trim):
    return 20 * np.log10(np.std(y[trim:-trim]) / np.std(x[trim:-trim]))


def test_dc_rejected():
    x = np.full(4200, 3.0)
    y = highpass(x, RATE, FilterSpec(cutoff=8.0, order=4))
    assert np.max(np.abs(y[8:-8])) < 1e-6 * 3.0


def test_one_hz_attenuated_through_8hz_filter():
    x = tone(1.0, n=8400)
    y = highpass(x, RATE, FilterSpec(cutoff=8.0, order=4))
    assert steady_gain_db(y, x, 2000) <= -30


def test_fifty_hz_passes():
    x = tone(50.0)
    y = highpass(x, RATE, FilterSpec(cutoff=8.0, order=4))
    assert steady_gain_db(y, x, 500) >= -0.5


def test_analytic_reference_values():
    # -3 dB per pass at the cutoff, so -6 dB zero-phase
    assert dsp.analog_highpass_gain_db(8.0, 8.0, 4) == pytest.approx(-6.0206, abs=1e-4)
    assert dsp.analog_highpass_gain_db(8.0, 8.0, 4, zero_phase=False) == pytest.approx(-3.0103, abs=1e-4)


def test_cutoff_above_nyquist():
    with pytest.raises(CutoffAboveNyquist):
        highpass(np.zeros(100), 10.0, FilterSpec(cutoff=5.0))


def test_non_uniform_grid_rejected():
    t = np.cumsum(np.r_[0, np.full(99, 1 / RATE)])
    t[50:] += 0.01
    with pytest.raises(NonUniformGrid):
        highpass(np.zeros(100), RATE, timestamps=t)


@pytest.mark.parametrize("order", [0, 9, 2.5])
def test_filter_order_bounds(order):
    with pytest.raises(ValueError):
        FilterSpec(order=order)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_highpass_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=300), rng.normal(size=300)
    spec = FilterSpec(cutoff=2.0)
    lhs = highpass(a * x + b * y, RATE, spec)
    rhs = a * highpass(x, RATE, spec) + b * highpass(y, RATE, spec)
    scale = np.max(np.abs(lhs)) + np.max(np.abs(rhs)) + 1e-300
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale


def test_stft_zero_and_shape():
    spec = stft(np.zeros(500), RATE)
    assert np.all(spec.magnitudes == 0)
    assert spec.shape == ((500 - 64) // 16 + 1, 33)
    assert spec.bin_freqs[0] == 0 and spec.bin_freqs[-1] == RATE / 2


@settings(max_examples=60, deadline=None)
@given(n=st.integers(8, 600), w=st.integers(1, 128), h=st.integers(1, 128))
def test_stft_shape_law(n, w, h):
    if w > n or h > w:
        return
    spec = stft(np.ones(n), RATE, w, h)
    assert spec.shape[0] == (n - w) // h + 1
    assert spec.shape[1] == dsp.next_pow2(w) // 2 + 1
    assert np.all(spec.magnitudes >= 0)


def test_stft_too_short():
    with pytest.raises(SegmentTooShort):
        stft(np.zeros(10), RATE, 64, 16)


def test_bin_centre_energy_concentration():
    k0 = 10
    f0 = k0 * RATE / 64
    spec = stft(tone(f0, n=1000), RATE, 64, 16)
    p = spec.magnitudes ** 2
    near = p[:, k0 - 1:k0 + 2].sum(axis=1)
    assert np.all(near >= 0.9 * p.sum(axis=1))


def test_parseval():
    rng = np.random.default_rng(2)
    x = rng.normal(size=700)
    for w in (64, 50):
        spec = stft(x, RATE, w, 16)
        frames = np.lib.stride_tricks.sliding_window_view(x, w)[::16] * dsp.hann(w)
        direct = (frames ** 2).sum(axis=1)
        recovered = dsp.one_sided_energy(spec.magnitudes, spec.nfft)
        assert np.allclose(recovered, direct, rtol=1e-9)


def test_hann_is_periodic():
    w = dsp.hann(8)
    assert w[0] == 0 and w[4] == pytest.approx(1.0)


def test_render_image_properties():
    rng = np.random.default_rng(0)
    spec = stft(rng.normal(size=400), RATE)
    img = render_image(spec)
    assert img.shape == (128, 128) and img.dtype == np.uint8
    doubled = dsp.Spectrogram(spec.magnitudes * 2, spec.frame_times, spec.bin_freqs,
                              spec.window_len, spec.hop, spec.nfft, spec.rate)
    assert np.array_equal(render_image(doubled), img)
    zero = render_image(stft(np.zeros(400), RATE))
    assert np.all(zero == zero[0, 0])


def test_render_low_frequencies_at_bottom():
    spec = stft(tone(10.0, n=600), RATE)
    img = render_image(spec, 32)
    assert img[-1].mean() > img[0].mean()


def test_render_empty():
    empty = dsp.Spectrogram(np.zeros((0, 33)), np.zeros(0), np.zeros(33), 64, 16, 64, RATE)
    with pytest.raises(EmptySpectrogram):
        render_image(empty)


def test_save_png_round_trip(tmp_path):
    from PIL import Image

    img = render_image(stft(np.random.default_rng(1).normal(size=400), RATE))
    path = tmp_path / "s.png"
    dsp.save_png(img, path)
    assert np.array_equal(np.asarray(Image.open(path)), img)


@pytest.mark.parametrize("f,fs,alias,n", [(420, 420, 0, 1), (500, 420, 80, 1), (3300, 520, 180, 6),
                                         (210, 420, 210, 0)])
def test_alias_examples(f, fs, alias, n):
    p = predict_alias(f, fs)
    assert (p.alias_freq, p.fold_index) == (pytest.approx(alias), n)


@settings(max_examples=300, deadline=None)
@given(f=st.floats(0, 5000), fs=st.sampled_from([200.0, 420.0, 520.0, 333.3]))
def test_alias_matches_brute_force(f, fs):
    p = predict_alias(f, fs)
    n, d = brute_force_alias(f, fs)
    assert p.fold_index == n and p.alias_freq == d
    assert 0 <= p.alias_freq <= fs / 2
    fixed = predict_alias(p.alias_freq, fs)
    assert fixed.fold_index == 0 and fixed.alias_freq == p.alias_freq
