import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from virtimu.errors import DegenerateSignalError, SignalLengthError, VirtimuError
from virtimu.sigcore import (
    MotionTrace,
    max_lag_corr,
    pearson_corr,
    power_spectrum,
    resample,
)

PROP = settings(max_examples=100, derandomize=True, deadline=None)

finite_arrays = st.integers(2, 64).flatmap(
    lambda n: st.lists(
        st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
        min_size=n, max_size=n,
    )
)


# -- pearson_corr -----------------------------------------------------------

def test_pearson_self_and_negation():
    x = np.array([0.3, -1.2, 2.5, 0.0, 4.1])
    assert pearson_corr(x, x) == pytest.approx(1.0)
    assert pearson_corr(x, -x) == pytest.approx(-1.0)


def test_pearson_hand_computed():
    # direct evaluation of the formula: 9 / (2 * sqrt(21))
    assert pearson_corr([1, 2, 3], [1, 2, 4]) == pytest.approx(
        0.9819805060619657, abs=1e-12
    )


def test_pearson_errors():
    with pytest.raises(SignalLengthError):
        pearson_corr([1, 2], [1, 2, 3])
    with pytest.raises(SignalLengthError):
        pearson_corr([1], [2])
    with pytest.raises(DegenerateSignalError):
        pearson_corr([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateSignalError):
        pearson_corr([1, 2, 3], [5, 5, 5])


@PROP
@given(finite_arrays, st.floats(1e-3, 1e3), st.floats(-100, 100))
def test_pearson_symmetry_bound_and_affine(vals, alpha, beta):
    a = np.asarray(vals)
    rng = np.random.default_rng(len(vals))
    b = a + rng.standard_normal(a.size)
    if np.std(a) == 0 or np.std(b) == 0:
        return
    r1 = pearson_corr(a, b)
    r2 = pearson_corr(b, a)
    assert r1 == pytest.approx(r2, abs=1e-12)
    assert -1.0 <= r1 <= 1.0
    # affine invariance for alpha > 0
    assert pearson_corr(alpha * a + beta, b) == pytest.approx(r1, abs=1e-9)


# -- max_lag_corr -----------------------------------------------------------

def test_max_lag_corr_constructed_shift():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(200)
    lag, r = max_lag_corr(x[:-3], x[3:], 10)
    # b = a advanced by 3 -> a is a delayed copy at lag -3
    assert abs(lag) == 3 and r == pytest.approx(1.0)
    lag, r = max_lag_corr(x, x, 10)
    assert (lag, r) == (0, pytest.approx(1.0))


def test_max_lag_corr_delayed_sine():
    fs = 1000.0
    t = np.arange(1000) / fs
    a = np.sin(2 * np.pi * 8.0 * t)
    b = np.sin(2 * np.pi * 8.0 * (t - 0.010))  # delayed by 10 ms = 10 samples
    lag, r = max_lag_corr(a, b, 15)
    assert lag == 10
    assert r >= 0.999


def test_max_lag_corr_precondition():
    with pytest.raises(SignalLengthError):
        max_lag_corr(np.arange(10.0), np.arange(10.0), 5)
    with pytest.raises(SignalLengthError):
        max_lag_corr(np.arange(10.0), np.arange(10.0), -1)


@PROP
@given(st.integers(0, 2**31 - 1), st.integers(0, 8))
def test_max_lag_corr_finds_planted_lag(seed, true_lag):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(128)
    a = x[: 100]
    b = x[true_lag : true_lag + 100]
    lag, r = max_lag_corr(a, b, 10)
    assert lag == -true_lag or r >= 0.999
    assert abs(r) >= 0.999


# -- resample ---------------------------------------------------------------

def test_resample_identity_and_constant():
    tr = MotionTrace(100.0, ["tx"], np.full((1, 50), 2.5))
    assert resample(tr, 100.0) is tr
    down = resample(tr, 40.0)
    assert np.allclose(down.data, 2.5)
    assert down.sample_rate == 40.0


def test_resample_sine_against_analytic():
    t = np.arange(300) / 100.0
    tr = MotionTrace(100.0, ["tx"], np.sin(2 * np.pi * 1.0 * t)[None, :])
    half = resample(tr, 50.0)
    ref = np.sin(2 * np.pi * 1.0 * half.times)
    assert pearson_corr(half.data[0], ref) >= 0.999


def test_resample_round_trip():
    rng = np.random.default_rng(1)
    tr = MotionTrace(50.0, ["tx", "ty"], rng.standard_normal((2, 101)))
    back = resample(resample(tr, 200.0), 50.0)
    assert back.n_samples == tr.n_samples
    # original grid points are preserved exactly by linear interpolation
    assert np.allclose(back.data, tr.data, atol=1e-9)


@PROP
@given(st.integers(0, 2**31 - 1), st.floats(10.0, 500.0))
def test_resample_duration_preserved(seed, target):
    rng = np.random.default_rng(seed)
    tr = MotionTrace(100.0, ["tx"], rng.standard_normal((1, 64)))
    out = resample(tr, target)
    assert abs(out.duration - tr.duration) <= 1.0 / target + 1e-12


# -- power_spectrum ---------------------------------------------------------

def test_power_spectrum_tone_peaks():
    fs = 100.0
    t = np.arange(1024) / fs
    spec = power_spectrum(np.sin(2 * np.pi * 8.0 * t), fs)
    assert abs(spec.peak_freq() - 8.0) <= spec.bin_hz
    two = power_spectrum(
        np.sin(2 * np.pi * 5.0 * t) + np.sin(2 * np.pi * 12.0 * t), fs
    )
    p = two.power.copy()
    f1 = np.argmax(p)
    p[max(0, f1 - 2) : f1 + 3] = 0.0
    f2 = np.argmax(p)
    peaks = sorted([f1 * two.bin_hz, f2 * two.bin_hz])
    assert abs(peaks[0] - 5.0) <= two.bin_hz
    assert abs(peaks[1] - 12.0) <= two.bin_hz


def test_power_spectrum_constant_is_zero():
    spec = power_spectrum(np.full(64, 3.3), 100.0)
    assert np.all(spec.power >= 0)
    assert spec.power.sum() == pytest.approx(0.0, abs=1e-20)


def test_power_spectrum_too_short():
    with pytest.raises(SignalLengthError):
        power_spectrum(np.arange(7.0), 10.0)


@PROP
@given(st.integers(0, 2**31 - 1), st.integers(16, 512))
def test_power_spectrum_parseval(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) * rng.uniform(0.1, 10.0)
    spec = power_spectrum(x, 100.0)
    w = np.hanning(n)
    expected = np.sum((w * (x - x.mean())) ** 2) / np.sum(w**2)
    assert spec.power.sum() == pytest.approx(expected, rel=1e-6)
    assert np.all(spec.power >= 0)
    assert spec.freqs[-1] <= 50.0 + 1e-9


# -- MotionTrace ------------------------------------------------------------

def test_trace_validation():
    with pytest.raises(VirtimuError):
        MotionTrace(0.0, ["tx"], np.zeros((1, 4)))
    with pytest.raises(VirtimuError):
        MotionTrace(10.0, ["tx", "ty"], np.zeros((1, 4)))
    with pytest.raises(VirtimuError):
        MotionTrace(10.0, ["tx"], np.array([[1.0, np.nan]]))
    with pytest.raises(SignalLengthError):
        MotionTrace(10.0, ["tx"], np.zeros((1, 0)))


def test_trace_axis_lookup():
    tr = MotionTrace(10.0, ["tx", "ty"], np.arange(8.0).reshape(2, 4))
    assert np.array_equal(tr.axis("ty"), [4, 5, 6, 7])
    with pytest.raises(KeyError):
        tr.axis("tz")


def test_trace_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    tr = MotionTrace(123.5, ["tx", "ty"], rng.standard_normal((2, 40)), t0=0.25)
    path = tmp_path / "trace.csv"
    tr.save_csv(path)
    back = MotionTrace.load_csv(path)
    assert back.sample_rate == tr.sample_rate
    assert back.axes == tr.axes
    assert back.t0 == tr.t0
    assert np.array_equal(back.data, tr.data)  # repr round trip is exact


def test_trace_csv_errors():
    with pytest.raises(VirtimuError):
        MotionTrace.from_csv("")
    with pytest.raises(VirtimuError):
        MotionTrace.from_csv("time_s,tx\n0.0,1.0\n")  # no sample-rate comment
