"""Independent reference computations used by the test suite.

These deliberately avoid the package's own fast paths: the envelope oracle
is a quadratic-time DFT, gradients come from central finite differences,
and Sobol references come from closed-form variance algebra.
"""

from __future__ import annotations

import numpy as np

from gprda.nn.engine import Tensor


def brute_force_envelope(x: np.ndarray) -> np.ndarray:
    """Analytic-signal magnitude via an explicit O(n^2) DFT.

    Positive-frequency bins are doubled, DC and (for even n) the Nyquist
    bin are kept at weight one, negative frequencies are zeroed.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    k = np.arange(n)
    dft_matrix = np.exp(-2j * np.pi * np.outer(k, k) / n)
    spectrum = dft_matrix @ x.astype(complex)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[1 : n // 2] = 2.0
        weights[n // 2] = 1.0
    else:
        weights[1 : (n + 1) // 2] = 2.0
    analytic = np.conj(dft_matrix).T @ (spectrum * weights) / n
    return np.abs(analytic)


def finite_difference_grads(fn, arrays: list[np.ndarray], eps: float = 1e-6) -> list[np.ndarray]:
    """Central-difference gradient of scalar fn(*arrays) w.r.t. each array."""
    grads = []
    for idx, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = fn(*arrays)
            flat[i] = orig - eps
            lo = fn(*arrays)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * eps)
        grads.append(g)
    return grads


def check_gradients(build_loss, arrays: list[np.ndarray], rtol: float = 1e-4,
                    eps: float = 1e-6) -> float:
    """Compare analytic gradients with central differences.

    build_loss receives one Tensor per input array and must return a scalar
    Tensor. Returns the worst relative error over all inputs.
    """
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build_loss(*tensors)
    loss.backward()

    def scalar_fn(*arrs):
        ts = [Tensor(a) for a in arrs]
        return float(build_loss(*ts).data)

    numeric = finite_difference_grads(scalar_fn, [a.copy() for a in arrays], eps=eps)
    worst = 0.0
    for t, num in zip(tensors, numeric):
        ana = t.grad if t.grad is not None else np.zeros_like(num)
        denom = np.maximum(np.maximum(np.abs(ana), np.abs(num)), 1e-8)
        err = float(np.max(np.abs(ana - num) / denom))
        worst = max(worst, err)
        assert err < rtol, f"gradient mismatch: relative error {err:.3e} >= {rtol}"
    return worst


def ishigami_first_order() -> tuple[float, float, float]:
    """Closed-form first-order indices of the Ishigami function (a=7, b=0.1).

    f = sin(x1) + a*sin(x2)^2 + b*x3^4*sin(x1) over U(-pi, pi)^3:
        V1 = (1 + b*pi^4/5)^2 / 2,  V2 = a^2 / 8,  V3 = 0,
        V  = 1/2 + a^2/8 + b*pi^4/5 + b^2*pi^8/18.
    """
    a, b = 7.0, 0.1
    v1 = 0.5 * (1.0 + b * np.pi**4 / 5.0) ** 2
    v2 = a**2 / 8.0
    v = 0.5 + a**2 / 8.0 + b * np.pi**4 / 5.0 + b**2 * np.pi**8 / 18.0
    return v1 / v, v2 / v, 0.0


def two_way_delay(air_gap: float, layers: list[tuple[float, float]]) -> float:
    """Hand-computed round-trip time: 2*air_gap/c + sum 2*d*sqrt(eps)/c."""
    c = 299792458.0
    t = 2.0 * air_gap / c
    for eps_r, d in layers:
        t += 2.0 * d * np.sqrt(eps_r) / c
    return t
