"""1D FDTD simulation of radar pulses over layered lossy dielectrics.

The scene is a stack of horizontal layers below an antenna, optionally
terminated by a metal plate. Propagation is solved on a staggered 1D Yee
grid (E at integer nodes, H at half nodes, z positive downward):

    E[i] <- ca[i]*E[i] - cb[i]*(H[i] - H[i-1])
    H[i] <- H[i] - (dt / (mu0*dx)) * (E[i+1] - E[i])

with the conductivity loss folded into the E-update coefficients

    ca = (1 - sigma*dt/(2*eps)) / (1 + sigma*dt/(2*eps))
    cb = (dt / (eps*dx)) / (1 + sigma*dt/(2*eps)).

The top boundary is a first-order absorbing (Mur) termination above the
antenna, exact in 1D when the Courant number is 1 in air. The bottom is a
perfect electric conductor when a buried plate is modeled, absorbing
otherwise. Permittivity and conductivity are volume-averaged onto nodes so
layer interfaces are positioned with sub-cell accuracy; the grid spacing is
additionally snapped so the plate falls exactly on a node.

The recorded field at the antenna is resampled to a fixed number of output
samples, after which the domain-gap knobs apply: a per-trace timing jitter
draw shifts the resampling grid, gain scales the trace, and Gaussian noise
(standard deviation relative to the unscaled trace peak) is added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from gprda.errors import ConfigError, StabilityError

C0 = 299792458.0
MU0 = 4e-7 * math.pi

WAVEFORM_KINDS = ("ricker", "gaussian", "gaussian_derivative")
BOTTOM_BOUNDARIES = ("perfect_conductor", "absorbing")

# source delay and effective half-width in periods of the center frequency;
# the pulse tail below the delay is < 1e-9 of the peak, keeping traces causal
_SOURCE_DELAY_PERIODS = 2.5
_SOURCE_HALFWIDTH_PERIODS = 1.8

_PAD_TOP_CELLS = 16


@dataclass(frozen=True)
class MaterialLayer:
    relative_permittivity: float
    conductivity: float  # S/m
    thickness: float  # m

    def validate(self):
        if self.relative_permittivity < 1.0:
            raise ConfigError("relative permittivity must be >= 1")
        if self.conductivity < 0.0:
            raise ConfigError("conductivity must be non-negative")
        if self.thickness <= 0.0:
            raise ConfigError("layer thickness must be positive")


@dataclass(frozen=True)
class LayerStack:
    """Ordered material layers below an antenna, top layer first."""

    air_gap: float  # antenna height above the surface, m
    layers: tuple[MaterialLayer, ...]
    bottom_boundary: str = "perfect_conductor"

    def validate(self):
        if not self.layers:
            raise ConfigError("a layer stack needs at least one layer")
        if self.air_gap < 0.0:
            raise ConfigError("air gap must be non-negative")
        if self.bottom_boundary not in BOTTOM_BOUNDARIES:
            raise ConfigError(f"unknown bottom boundary {self.bottom_boundary!r}")
        for layer in self.layers:
            layer.validate()

    def total_thickness(self) -> float:
        return sum(l.thickness for l in self.layers)

    def max_permittivity(self) -> float:
        return max(l.relative_permittivity for l in self.layers)

    def with_parameter(self, layer_index: int, field_name: str, value: float) -> "LayerStack":
        layers = list(self.layers)
        layers[layer_index] = replace(layers[layer_index], **{field_name: value})
        return replace(self, layers=tuple(layers))


@dataclass(frozen=True)
class RadarConfig:
    waveform_kind: str = "ricker"
    center_frequency: float = 2.0e9  # Hz
    time_window: float = 12e-9  # s
    cells_per_min_wavelength: int = 40
    courant_factor: float = 1.0
    num_samples: int = 1640  # output trace length after resampling
    gain: float = 1.0
    noise_std: float = 0.0  # relative to the clean trace peak
    time_jitter: float = 0.0  # s, std of the per-trace timing shift

    def validate(self):
        if self.waveform_kind not in WAVEFORM_KINDS:
            raise ConfigError(f"unknown waveform kind {self.waveform_kind!r}")
        if self.center_frequency <= 0.0:
            raise ConfigError("center frequency must be positive")
        if self.time_window <= 0.0:
            raise ConfigError("time window must be positive")
        if self.cells_per_min_wavelength < 10:
            raise ConfigError("need at least 10 cells per minimum wavelength")
        if not 0.0 < self.courant_factor <= 1.0:
            raise StabilityError("courant factor must lie in (0, 1]")
        if self.num_samples < 2:
            raise ConfigError("need at least 2 output samples")

    def to_dict(self) -> dict:
        return {
            "waveform_kind": self.waveform_kind,
            "center_frequency": self.center_frequency,
            "time_window": self.time_window,
            "cells_per_min_wavelength": self.cells_per_min_wavelength,
            "courant_factor": self.courant_factor,
            "num_samples": self.num_samples,
            "gain": self.gain,
            "noise_std": self.noise_std,
            "time_jitter": self.time_jitter,
        }


@dataclass
class AScan:
    """Uniformly sampled radar trace with its sample interval."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.dt <= 0:
            raise ConfigError("sample interval must be positive")

    @property
    def n(self) -> int:
        return self.samples.size

    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt


def waveform_peak_time(frequency: float) -> float:
    """Time of the excitation pulse center."""
    return _SOURCE_DELAY_PERIODS / frequency


def waveform(kind: str, frequency: float, t) -> np.ndarray | float:
    """Source excitation amplitude at time t, peak-normalized to 1.

    The ricker pulse is the normalized second derivative of a Gaussian whose
    spectrum peaks at `frequency`; all kinds are delayed so their support
    begins essentially at t = 0.
    """
    if frequency <= 0.0:
        raise ConfigError("waveform frequency must be positive")
    tau = np.asarray(t, dtype=np.float64) - waveform_peak_time(frequency)
    zeta = (math.pi * frequency) ** 2
    if kind == "ricker":
        out = (1.0 - 2.0 * zeta * tau * tau) * np.exp(-zeta * tau * tau)
    elif kind == "gaussian":
        out = np.exp(-zeta * tau * tau)
    elif kind == "gaussian_derivative":
        peak = math.sqrt(2.0 * zeta) * math.exp(-0.5)
        out = -2.0 * zeta * tau * np.exp(-zeta * tau * tau) / peak
    else:
        raise ConfigError(f"unknown waveform kind {kind!r}")
    return out if isinstance(t, np.ndarray) else float(out)


def expected_two_way_delay(stack: LayerStack, interface_index: int) -> float:
    """Analytic round-trip time from the antenna to a layer interface.

    Interface 0 is the material surface; interface k is the bottom of layer
    k. Returns 2*air_gap/c plus 2*d_i*sqrt(eps_i)/c over the traversed
    layers. The source pulse center is not included; add
    ``waveform_peak_time`` to locate the echo within a trace.
    """
    if not 0 <= interface_index <= len(stack.layers):
        raise ConfigError("interface index exceeds the number of layers")
    delay = 2.0 * stack.air_gap / C0
    for layer in stack.layers[:interface_index]:
        delay += 2.0 * layer.thickness * math.sqrt(layer.relative_permittivity) / C0
    return delay


def _grid_spacing(stack: LayerStack, radar: RadarConfig) -> float:
    # resolve the shortest wavelength (taken at twice the center frequency,
    # which covers the ricker spectrum) in the densest medium
    f_max = 2.0 * radar.center_frequency
    lam_min = C0 / (f_max * math.sqrt(stack.max_permittivity()))
    return lam_min / radar.cells_per_min_wavelength


def _node_materials(stack: LayerStack, dx: float, n_nodes: int, i_src: int,
                    pad_below: float) -> tuple[np.ndarray, np.ndarray]:
    """Volume-average permittivity/conductivity onto E nodes.

    Node i sits at z = (i - i_src)*dx with z measured downward from the
    antenna; each node averages the material over [z - dx/2, z + dx/2].
    """
    segments = []  # (z_start, z_end, eps_r, sigma)
    z_top = -(i_src + 1) * dx
    segments.append((z_top, stack.air_gap, 1.0, 0.0))
    z = stack.air_gap
    for layer in stack.layers:
        segments.append((z, z + layer.thickness, layer.relative_permittivity,
                         layer.conductivity))
        z += layer.thickness
    if pad_below > 0:
        last = stack.layers[-1]
        segments.append((z, z + pad_below + dx, last.relative_permittivity,
                         last.conductivity))

    z_nodes = (np.arange(n_nodes) - i_src) * dx
    eps = np.zeros(n_nodes)
    sig = np.zeros(n_nodes)
    lo = z_nodes - 0.5 * dx
    hi = z_nodes + 0.5 * dx
    for z0, z1, e, s in segments:
        frac = np.clip(np.minimum(hi, z1) - np.maximum(lo, z0), 0.0, None) / dx
        eps += frac * e
        sig += frac * s
    # nodes fully outside every segment (shouldn't happen) would read eps 0
    eps = np.maximum(eps, 1.0)
    return eps, sig


def simulate_ascan(stack: LayerStack, radar: RadarConfig, seed: int) -> AScan:
    """Simulate the field recorded at the antenna over the time window.

    Deterministic given (stack, radar, seed); with gain 1, zero noise and
    zero jitter the returned trace is the clean physics solution resampled
    to ``radar.num_samples`` points.
    """
    stack.validate()
    radar.validate()
    t_src = waveform_peak_time(radar.center_frequency)
    if radar.time_window <= t_src + 2.0 * stack.air_gap / C0:
        raise ConfigError("time window shorter than the direct-wave arrival")

    dx_nominal = _grid_spacing(stack, radar)
    depth = stack.air_gap + stack.total_thickness()
    # snap the spacing so the stack bottom (the plate, when present) lands
    # exactly on a node
    n_below = max(int(math.ceil(depth / dx_nominal)), 2)
    dx = depth / n_below
    dt = radar.courant_factor * dx / C0

    pec_bottom = stack.bottom_boundary == "perfect_conductor"
    pad_below = 0.0 if pec_bottom else C0 / radar.center_frequency / math.sqrt(
        stack.layers[-1].relative_permittivity)
    n_pad_below = 0 if pec_bottom else int(math.ceil(pad_below / dx))

    i_src = _PAD_TOP_CELLS
    n_nodes = i_src + n_below + n_pad_below + 1
    eps_r, sigma = _node_materials(stack, dx, n_nodes, i_src, pad_below)
    if not pec_bottom:
        # graded conductivity sponge in the pad: a smooth ramp avoids an
        # impedance step while damping the round trip by ~e^-8
        eta0 = math.sqrt(MU0 / 8.8541878128e-12)
        sigma_max = 24.0 * math.sqrt(stack.layers[-1].relative_permittivity) / (
            n_pad_below * dx * eta0)
        ramp = (np.arange(1, n_pad_below + 1) / n_pad_below) ** 2
        sigma[-n_pad_below:] += sigma_max * ramp
    eps = eps_r * 8.8541878128e-12

    half = sigma * dt / (2.0 * eps)
    ca = (1.0 - half) / (1.0 + half)
    cb = (dt / (eps * dx)) / (1.0 + half)
    ch = dt / (MU0 * dx)

    n_steps = int(math.ceil(radar.time_window / dt))
    src = waveform(radar.waveform_kind, radar.center_frequency,
                   np.arange(n_steps) * dt)

    e = np.zeros(n_nodes)
    h = np.zeros(n_nodes - 1)
    raw = np.empty(n_steps)

    # Mur coefficients from the local wave speed at each open boundary
    s_top = radar.courant_factor  # air
    mur_top = (s_top - 1.0) / (s_top + 1.0)
    if not pec_bottom:
        s_bot = radar.courant_factor / math.sqrt(eps_r[-1])
        mur_bot = (s_bot - 1.0) / (s_bot + 1.0)

    for n in range(n_steps):
        e0_old, e1_old = e[0], e[1]
        if not pec_bottom:
            em1_old, em2_old = e[-1], e[-2]
        e[1:-1] = ca[1:-1] * e[1:-1] - cb[1:-1] * (h[1:] - h[:-1])
        e[0] = e1_old + mur_top * (e[1] - e0_old)
        if pec_bottom:
            e[-1] = 0.0
        else:
            e[-1] = em2_old + mur_bot * (e[-2] - em1_old)
        e[i_src] += src[n]
        raw[n] = e[i_src]
        h -= ch * np.diff(e)

    if not np.all(np.isfinite(raw)):
        raise StabilityError("field blew up; check the courant factor")

    # resample onto the fixed output grid, applying the gap knobs
    rng = np.random.default_rng(seed)
    dt_out = radar.time_window / radar.num_samples
    t_out = np.arange(radar.num_samples) * dt_out
    if radar.time_jitter > 0.0:
        t_out = t_out + rng.normal(0.0, radar.time_jitter)
    trace = np.interp(t_out, np.arange(n_steps) * dt, raw)
    peak = float(np.max(np.abs(trace)))
    trace = radar.gain * trace
    if radar.noise_std > 0.0 and peak > 0.0:
        trace = trace + rng.normal(0.0, radar.noise_std * peak, size=trace.size)
    return AScan(trace, dt_out)


def echo_window_peak(trace: AScan, center_time: float, half_width: float) -> tuple[float, float]:
    """Locate the largest-magnitude sample near an expected arrival.

    Searches |samples| within [center_time - half_width, center_time +
    half_width] and refines the peak time by parabolic interpolation.
    Returns (peak_time, peak_amplitude).
    """
    t = trace.times()
    lo = int(np.searchsorted(t, center_time - half_width))
    hi = int(np.searchsorted(t, center_time + half_width))
    lo = max(lo, 0)
    hi = min(hi, trace.n)
    if hi - lo < 3:
        raise ConfigError("echo search window too narrow for the trace")
    window = np.abs(trace.samples[lo:hi])
    k = int(np.argmax(window)) + lo
    amp = float(np.abs(trace.samples[k]))
    if 0 < k < trace.n - 1:
        y0, y1, y2 = np.abs(trace.samples[k - 1 : k + 2])
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            shift = 0.5 * (y0 - y2) / denom
            return (k + shift) * trace.dt, amp
    return k * trace.dt, amp
