import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gprda.errors import ConfigError, DegenerateInputError
from gprda.fdtd import AScan
from gprda.signal_prep import (
    LabelScaler,
    envelope,
    envelope_rows,
    fit_label_scaler,
    model_inputs,
    normalize_signal,
    preprocess_rows,
)
from oracles import brute_force_envelope


def _scan(samples, dt=1e-10):
    return AScan(np.asarray(samples, dtype=float), dt)


# -------------------------------------------------------------- envelope


@pytest.mark.parametrize("n", [8, 17, 64, 129, 256])
def test_envelope_matches_brute_force_dft(n):
    rng = np.random.default_rng(n)
    x = rng.normal(size=n)
    fast = envelope(_scan(x)).samples
    slow = brute_force_envelope(x)
    np.testing.assert_allclose(fast, slow, rtol=1e-6, atol=1e-9)


def test_envelope_of_pure_tone_is_flat():
    n = 1024
    t = np.arange(n)
    amp = 2.7
    x = amp * np.cos(2.0 * np.pi * 16.0 * t / n)  # integer cycles
    env = envelope(_scan(x)).samples
    mid = env[n // 4 : 3 * n // 4]
    assert np.max(np.abs(mid - amp) / amp) < 0.01


def test_envelope_of_zero_trace_is_zero():
    env = envelope(_scan(np.zeros(32))).samples
    np.testing.assert_allclose(env, 0.0, atol=1e-14)


def test_envelope_dominates_signal_pointwise():
    rng = np.random.default_rng(7)
    for n in (15, 16, 33, 128):
        x = rng.normal(size=n)
        env = envelope(_scan(x)).samples
        assert np.all(env >= np.abs(x) - 1e-9)


def test_envelope_rejects_single_sample():
    with pytest.raises(ConfigError):
        envelope(_scan([1.0]))


def test_envelope_rows_matches_single_trace_path():
    rng = np.random.default_rng(1)
    rows = rng.normal(size=(5, 40))
    batch = envelope_rows(rows)
    for i in range(5):
        np.testing.assert_allclose(batch[i], envelope(_scan(rows[i])).samples, rtol=1e-12)


# ---------------------------------------------------------- normalization


def test_normalize_simple_values():
    out = normalize_signal(_scan([0.0, 2.0, 4.0]))
    np.testing.assert_allclose(out.samples, [0.0, 0.5, 1.0])


def test_normalize_idempotent():
    x = np.array([0.25, 1.0, 0.5])
    once = normalize_signal(_scan(x)).samples
    twice = normalize_signal(_scan(once)).samples
    np.testing.assert_array_equal(once, twice)


@given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=2, max_size=64)
       .filter(lambda xs: max(xs) > 0.0))
@settings(max_examples=100, deadline=None)
def test_normalize_range_contract(xs):
    out = normalize_signal(_scan(xs)).samples
    assert np.max(out) == 1.0
    assert np.min(out) >= 0.0


def test_normalize_rejects_all_zero():
    with pytest.raises(DegenerateInputError):
        normalize_signal(_scan(np.zeros(8)))


def test_preprocess_rows_rejects_zero_row():
    rows = np.zeros((2, 16))
    rows[0, 3] = 1.0
    with pytest.raises(DegenerateInputError):
        preprocess_rows(rows)


def test_model_inputs_shape():
    rng = np.random.default_rng(2)
    x = model_inputs(rng.normal(size=(6, 50)))
    assert x.shape == (6, 1, 50)
    assert np.all(x <= 1.0 + 1e-12) and np.all(x >= 0.0)


# ---------------------------------------------------------- label scaling


def test_scaler_endpoints_and_midpoint():
    scaler = LabelScaler.from_ranges({"permittivity": (3.0, 12.9)})
    assert scaler.apply(np.array([3.0]))[0] == pytest.approx(0.0, abs=1e-15)
    assert scaler.apply(np.array([12.9]))[0] == pytest.approx(1.0, abs=1e-15)
    assert scaler.apply(np.array([7.95]))[0] == pytest.approx(0.5, abs=1e-12)


def test_scaler_roundtrip_many_random_labels():
    rng = np.random.default_rng(0)
    scaler = LabelScaler.from_ranges(
        {"p": (3.0, 12.9), "c": (0.0, 0.054), "d": (0.15, 0.25)}, names=["p", "c", "d"])
    y = rng.uniform([3.0, 0.0, 0.15], [12.9, 0.054, 0.25], size=(100, 3))
    back = scaler.invert(scaler.apply(y))
    assert np.max(np.abs(back - y)) < 1e-12


@given(st.floats(min_value=-5.0, max_value=5.0))
@settings(max_examples=60, deadline=None)
def test_scaler_column_roundtrip(v):
    scaler = LabelScaler.from_ranges({"x": (-2.0, 3.0)})
    back = scaler.invert_column("x", scaler.apply_column("x", np.array([v])))[0]
    assert abs(back - v) < 1e-12


def test_scaler_rejects_degenerate_range():
    with pytest.raises(DegenerateInputError):
        LabelScaler.from_ranges({"x": (1.0, 1.0)})


def test_fit_scaler_uses_declared_ranges_not_sample():
    # scaling then pruning then inverting returns the original labels
    from gprda.params import ParameterSpace, ParameterSpec

    space = ParameterSpace([ParameterSpec("p", 3.0, 13.0, count=11)])
    scaler = fit_label_scaler(space)
    full = space.spec("p").grid_values()
    pruned = full[full > 7.0]  # subset after a pruning stage
    np.testing.assert_allclose(scaler.invert(scaler.apply(pruned[:, None]))[:, 0],
                               pruned, atol=1e-12)
    assert scaler.low[0] == 3.0 and scaler.high[0] == 13.0
