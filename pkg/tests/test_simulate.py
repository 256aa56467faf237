import numpy as np
import pytest

from accelspeech.dsp import peak_frequency, predict_alias, stft
from accelspeech.errors import BadDuration
from accelspeech.segment import detect_stream, match_regions
from accelspeech.simulate import (
    ChannelSpec, SpeakerProfile, source_rate_for, synth_utterance, transmit, vocabulary_profiles,
)
from corpora import burst_corpus, word_corpus


def tone_through(f, sensor_rate=420.0, seconds=1.0, **channel):
    src_rate = source_rate_for(sensor_rate)
    prof = SpeakerProfile(f)
    src = synth_utterance(prof, seconds, seed=1, rate=src_rate)
    ch = ChannelSpec(sensor_rate=sensor_rate, white_std=0.0, **channel)
    return transmit(src, src_rate, ch)


def test_source_rate_is_sensor_multiple():
    for fs in (200.0, 420.0, 520.0):
        r = source_rate_for(fs)
        assert r >= 16000 and (r / fs) == int(r / fs)


def test_500hz_tone_aliases_to_80hz():
    s = tone_through(500.0)
    spec = stft(s.az, s.nominal_rate)
    bin_w = s.nominal_rate / spec.nfft
    assert abs(peak_frequency(spec) - 80.0) <= bin_w


@pytest.mark.parametrize("f", [150.0, 333.0, 777.0, 1234.0, 2900.0])
@pytest.mark.parametrize("fs", [420.0, 520.0])
def test_peak_matches_alias_model(f, fs):
    s = tone_through(f, fs)
    spec = stft(s.az, fs, 128, 32)
    expected = predict_alias(f, fs).alias_freq
    assert abs(peak_frequency(spec) - expected) <= fs / spec.nfft


def test_silent_source_gives_noise_variance():
    ch = ChannelSpec(white_std=1e-3, seed=5)
    s = transmit(np.zeros(16800 * 50), source_rate_for(420.0), ch)
    assert np.var(s.az) == pytest.approx(1e-6, rel=0.1)


def test_below_band_tone_attenuated():
    low = tone_through(50.0)
    high = tone_through(500.0)
    ratio_db = 10 * np.log10(np.var(low.az) / np.var(high.az))
    assert ratio_db <= -20


def test_leakage_and_gravity():
    s = tone_through(500.0)
    assert np.mean(s.ay) == pytest.approx(9.81, abs=1e-3)
    lz, lx = np.std(s.az), np.std(s.ax)
    assert 20 * np.log10(lx / lz) == pytest.approx(-20.0, abs=0.01)


def test_band_loss_removes_energy():
    plain = tone_through(500.0)
    lossy = tone_through(500.0, band_loss_db=((450.0, 550.0, 30.0),))
    assert 10 * np.log10(np.var(lossy.az) / np.var(plain.az)) == pytest.approx(-30.0, abs=1.0)


def test_bad_duration():
    with pytest.raises(BadDuration):
        synth_utterance(SpeakerProfile(200.0), 0.05)
    with pytest.raises(BadDuration):
        synth_utterance(SpeakerProfile(200.0), 2.5)


def test_profile_and_channel_validation():
    with pytest.raises(ValueError):
        SpeakerProfile(0.0)
    with pytest.raises(ValueError):
        SpeakerProfile(100.0, ((300.0, -1.0),))
    with pytest.raises(ValueError):
        ChannelSpec(response_band=(500.0, 100.0))
    with pytest.raises(ValueError):
        ChannelSpec(white_std=-1.0)


def test_corpus_reproducible():
    a, ta = burst_corpus(10.0, seed=3)
    b, tb = burst_corpus(10.0, seed=3)
    assert a.equals(b) and ta == tb
    c, _ = burst_corpus(10.0, seed=4)
    assert not a.equals(c)


def test_corpus_truth_matches_detection_at_15db():
    stream, truth = word_corpus(15.0, seed=2, reps=1)
    regions, _ = detect_stream(stream)
    pairs = match_regions(regions, [t.region for t in truth], 0.7)
    assert len(pairs) == len(truth)


def test_vocabulary_labels():
    profiles = vocabulary_profiles()
    assert len(profiles) == 40
    assert {p.gender_tag for p in profiles} == {"male", "female"}
    assert len({p.speaker_id for p in profiles}) == 4
    assert len({p.word_id for p in profiles}) == 10
