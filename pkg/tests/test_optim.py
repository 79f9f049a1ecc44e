import math

import numpy as np
import pytest

from gprda.errors import ConfigError
from gprda.nn import Adam, ParameterStore, Sgd, lambda_schedule, lr_schedule
from gprda.nn.engine import Tensor, mse_loss


def test_lr_schedule_decay():
    assert lr_schedule(1e-3, 0) == 1e-3
    assert lr_schedule(1e-3, 1) == pytest.approx(9e-4, rel=1e-12)
    assert lr_schedule(1e-3, 10) == pytest.approx(1e-3 * 0.9**10, rel=1e-12)


def test_lambda_schedule_endpoints_and_monotonicity():
    assert lambda_schedule(0, 100) == 0.0
    assert lambda_schedule(100, 100) == pytest.approx(2.0 / (1.0 + math.exp(-10.0)) - 1.0,
                                                      abs=1e-15)
    vals = [lambda_schedule(k, 500) for k in range(501)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_lambda_schedule_rejects_zero_total():
    with pytest.raises(ConfigError):
        lambda_schedule(0, 0)


def test_sgd_single_step_on_quadratic():
    store = ParameterStore()
    w = store.add("w", np.array([1.0]))
    loss = mse_loss(w, np.zeros(1))  # w^2
    loss.backward()
    Sgd(store).step(0.1)
    np.testing.assert_allclose(w.data, [0.8])


def test_zero_gradients_leave_parameters_unchanged():
    store = ParameterStore()
    w = store.add("w", np.array([1.0, -2.0]))
    w.grad = np.zeros(2)
    before = w.data.copy()
    Sgd(store).step(0.5)
    np.testing.assert_array_equal(w.data, before)
    adam = Adam(store)
    w.grad = np.zeros(2)
    adam.step(0.5)
    np.testing.assert_array_equal(w.data, before)


def test_adam_state_shapes_match_parameters():
    store = ParameterStore()
    store.add("a", np.zeros((3, 4)))
    store.add("b", np.zeros(7))
    Adam(store)
    for name, t in store.items():
        assert store.opt_state[name]["m"].shape == t.data.shape
        assert store.opt_state[name]["v"].shape == t.data.shape


def test_adam_first_step_magnitude():
    # with bias correction the first step is ~lr regardless of gradient scale
    store = ParameterStore()
    w = store.add("w", np.array([0.0]))
    adam = Adam(store)
    w.grad = np.array([1e-3])
    adam.step(0.01)
    assert w.data[0] == pytest.approx(-0.01, rel=1e-4)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    store = ParameterStore()
    store.add("conv.w", rng.normal(size=(3, 2, 5)))
    store.add("conv.b", rng.normal(size=3))
    saved = {k: t.data.copy() for k, t in store.items()}
    store.save(tmp_path / "ck.json", tmp_path / "ck.bin", {"n": 1640})

    other = ParameterStore()
    other.add("conv.w", np.zeros((3, 2, 5)))
    other.add("conv.b", np.zeros(3))
    hp = other.load(tmp_path / "ck.json", tmp_path / "ck.bin")
    assert hp == {"n": 1640}
    for k in saved:
        np.testing.assert_array_equal(other[k].data, saved[k])
