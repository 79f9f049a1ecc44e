import math

import numpy as np
import pytest

from gprda.errors import ConfigError, StabilityError
from gprda.fdtd import (
    AScan,
    LayerStack,
    MaterialLayer,
    RadarConfig,
    echo_window_peak,
    expected_two_way_delay,
    simulate_ascan,
    waveform,
    waveform_peak_time,
)
from gprda.signal_prep import envelope
from oracles import two_way_delay

C = 299792458.0


def single_layer(eps=4.0, sigma=0.0, d=0.15, air_gap=0.05, bottom="perfect_conductor"):
    return LayerStack(air_gap=air_gap, layers=(MaterialLayer(eps, sigma, d),),
                      bottom_boundary=bottom)


# ------------------------------------------------------------- waveforms


def test_ricker_peak_normalized():
    f = 1.5e9
    assert waveform("ricker", f, waveform_peak_time(f)) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_tail_decays():
    f = 2.0e9
    sigma = 1.0 / (math.pi * f)  # width scale of exp(-(pi*f*tau)^2)
    t0 = waveform_peak_time(f)
    for tau in (6.1 * sigma, 8 * sigma, 20 * sigma):
        assert abs(waveform("gaussian", f, t0 + tau)) < 1e-12
        assert abs(waveform("gaussian", f, t0 - tau)) < 1e-12


def test_ricker_integrates_to_zero():
    # Riemann-sum quadrature oracle: a second derivative of a compactly
    # supported pulse integrates to zero
    f = 1.0e9
    dt = 1.0 / (200.0 * f)
    t = np.arange(0.0, 2.0 * waveform_peak_time(f), dt)
    integral = float(np.sum(waveform("ricker", f, t)) * dt)
    assert abs(integral) < 1e-8 * 1.0 * dt


def test_unknown_waveform_kind_rejected():
    with pytest.raises(ConfigError):
        waveform("sinc", 1e9, 0.0)


# ------------------------------------------------------- analytic delays


def test_expected_delay_hand_value():
    stack = single_layer(eps=4.0, d=0.15, air_gap=0.0)
    assert expected_two_way_delay(stack, 1) == pytest.approx(2.0 * 0.15 * 2.0 / C, rel=1e-12)
    assert expected_two_way_delay(stack, 1) == pytest.approx(2.0003e-9, rel=1e-3)


def test_expected_delay_vacuum():
    stack = LayerStack(air_gap=0.0, layers=(MaterialLayer(1.0, 0.0, 0.1),
                                            MaterialLayer(1.0, 0.0, 0.2)))
    assert expected_two_way_delay(stack, 2) == pytest.approx(2.0 * 0.3 / C, rel=1e-12)


def test_expected_delay_strictly_increasing():
    stack = LayerStack(air_gap=0.02, layers=(MaterialLayer(3.0, 0.0, 0.1),
                                             MaterialLayer(6.0, 0.0, 0.12)))
    delays = [expected_two_way_delay(stack, k) for k in range(3)]
    assert delays[0] < delays[1] < delays[2]
    assert delays[2] == pytest.approx(
        two_way_delay(0.02, [(3.0, 0.1), (6.0, 0.12)]), rel=1e-12)


def test_expected_delay_rejects_bad_interface():
    with pytest.raises(ConfigError):
        expected_two_way_delay(single_layer(), 2)


# ------------------------------------------------------------ simulation


def test_plate_echo_travel_time():
    radar = RadarConfig()
    stack = single_layer(eps=4.0, sigma=0.0, d=0.15)
    trace = simulate_ascan(stack, radar, seed=3)
    t_exp = waveform_peak_time(radar.center_frequency) + expected_two_way_delay(stack, 1)
    peak_t, _ = echo_window_peak(envelope(trace), t_exp, 1.0 / radar.center_frequency)
    assert abs(peak_t - t_exp) <= 2.0 * trace.dt


def test_two_layer_plate_echo_travel_time():
    radar = RadarConfig()
    stack = LayerStack(air_gap=0.05, layers=(MaterialLayer(2.0, 0.0, 0.1),
                                             MaterialLayer(6.5, 0.0, 0.15)))
    trace = simulate_ascan(stack, radar, seed=3)
    t_exp = waveform_peak_time(radar.center_frequency) + expected_two_way_delay(stack, 2)
    peak_t, _ = echo_window_peak(envelope(trace), t_exp, 1.0 / radar.center_frequency)
    assert abs(peak_t - t_exp) <= 2.0 * trace.dt


def test_identical_layers_produce_no_internal_echo():
    radar = RadarConfig()
    stack = LayerStack(air_gap=0.05, layers=(MaterialLayer(5.0, 0.0, 0.1),
                                             MaterialLayer(5.0, 0.0, 0.1)))
    env = envelope(simulate_ascan(stack, radar, seed=0))
    t0 = waveform_peak_time(radar.center_frequency)
    t_surface = t0 + expected_two_way_delay(stack, 0)
    t_internal = t0 + expected_two_way_delay(stack, 1)
    t_plate = t0 + expected_two_way_delay(stack, 2)
    _, surface_amp = echo_window_peak(env, t_surface, 0.8 / radar.center_frequency)
    # quiet zone between the surface and plate echoes, away from both tails
    half = 0.8 / radar.center_frequency
    _, mid_amp = echo_window_peak(env, t_internal, half * 0.5)
    assert t_surface + half < t_internal < t_plate - half
    assert mid_amp < 0.01 * surface_amp


def test_conductivity_attenuates_plate_echo():
    radar = RadarConfig()
    t0 = waveform_peak_time(radar.center_frequency)
    amps = []
    for sigma in (0.0, 0.05):
        stack = single_layer(eps=6.0, sigma=sigma, d=0.2)
        env = envelope(simulate_ascan(stack, radar, seed=0))
        t_exp = t0 + expected_two_way_delay(stack, 1)
        amps.append(echo_window_peak(env, t_exp, 1.0 / radar.center_frequency)[1])
    assert amps[1] < amps[0]


def test_determinism_given_seed():
    radar = RadarConfig(noise_std=0.05, time_jitter=3e-11, gain=1.2)
    stack = single_layer()
    a = simulate_ascan(stack, radar, seed=99)
    b = simulate_ascan(stack, radar, seed=99)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = simulate_ascan(stack, radar, seed=100)
    assert not np.array_equal(a.samples, c.samples)


def test_clean_config_matches_physics_regardless_of_seed():
    radar = RadarConfig()
    stack = single_layer()
    a = simulate_ascan(stack, radar, seed=1)
    b = simulate_ascan(stack, radar, seed=2)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_causality_quiet_before_direct_wave():
    radar = RadarConfig()
    stack = single_layer(air_gap=0.1)
    trace = simulate_ascan(stack, radar, seed=0)
    f = radar.center_frequency
    support_start = waveform_peak_time(f) - 1.8 / f
    early = trace.samples[trace.times() < support_start]
    assert early.size > 0
    assert np.max(np.abs(early)) < 1e-9 * np.max(np.abs(trace.samples))


def test_no_blowup_with_pec_and_zero_loss():
    radar = RadarConfig(time_window=30e-9)  # long window, multiples keep ringing
    stack = single_layer(eps=4.0, sigma=0.0, d=0.2)
    trace = simulate_ascan(stack, radar, seed=0)
    direct = np.max(np.abs(trace.samples[trace.times() < 2.0 / radar.center_frequency]))
    assert np.max(np.abs(trace.samples)) <= 10.0 * direct


def test_absorbing_bottom_kills_plate_echo():
    radar = RadarConfig()
    t0 = waveform_peak_time(radar.center_frequency)
    stack_pec = single_layer(eps=4.0, d=0.15)
    stack_abs = single_layer(eps=4.0, d=0.15, bottom="absorbing")
    t_exp = t0 + expected_two_way_delay(stack_pec, 1)
    half = 1.0 / radar.center_frequency
    _, amp_pec = echo_window_peak(envelope(simulate_ascan(stack_pec, radar, 0)), t_exp, half)
    _, amp_abs = echo_window_peak(envelope(simulate_ascan(stack_abs, radar, 0)), t_exp, half)
    assert amp_abs < 0.1 * amp_pec


def test_courant_factor_above_one_rejected():
    with pytest.raises(StabilityError):
        simulate_ascan(single_layer(), RadarConfig(courant_factor=1.5), seed=0)


def test_window_shorter_than_direct_wave_rejected():
    with pytest.raises(ConfigError):
        simulate_ascan(single_layer(), RadarConfig(time_window=0.5e-9), seed=0)


def test_invalid_materials_rejected():
    with pytest.raises(ConfigError):
        simulate_ascan(single_layer(eps=0.5), RadarConfig(), seed=0)
    with pytest.raises(ConfigError):
        simulate_ascan(single_layer(sigma=-0.1), RadarConfig(), seed=0)
    with pytest.raises(ConfigError):
        simulate_ascan(single_layer(d=-0.2), RadarConfig(), seed=0)
    with pytest.raises(ConfigError):
        simulate_ascan(LayerStack(air_gap=0.0, layers=()), RadarConfig(), seed=0)


def test_gain_scales_trace():
    stack = single_layer()
    base = simulate_ascan(stack, RadarConfig(), seed=0)
    scaled = simulate_ascan(stack, RadarConfig(gain=2.5), seed=0)
    np.testing.assert_allclose(scaled.samples, 2.5 * base.samples, rtol=1e-12)


def test_ascan_metadata():
    radar = RadarConfig()
    trace = simulate_ascan(single_layer(), radar, seed=0)
    assert trace.n == radar.num_samples
    assert trace.dt == pytest.approx(radar.time_window / radar.num_samples)
