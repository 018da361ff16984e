import numpy as np
import pytest

from conftest import random_signal
from sparsechan.analog import (AnalogParams, ContinuousSignal, a_to_d, d_to_a, grid_image,
                               narrowband_residual, sinc_w, time_frequency_shift,
                               verify_shift_intertwining)
from sparsechan.errors import InvalidAnalogParams, ModulusMismatch, OffGrid
from sparsechan.signals import delta


def test_params_validation():
    p = AnalogParams(64, bandwidth=2.0, carrier_multiple=5)
    assert p.duration == 32.0 and p.carrier == 10.0
    for bad in (dict(n=0), dict(n=4, bandwidth=0), dict(n=4, trunc=0), dict(n=4, carrier_multiple=-1)):
        with pytest.raises(InvalidAnalogParams):
            AnalogParams(**bad)


def test_d_to_a_delta_is_sinc():
    p = AnalogParams(16, bandwidth=2.0, carrier_multiple=0, trunc=16)
    s = d_to_a(delta(0, 16), p)
    t = np.linspace(-3, 3, 101)
    assert np.allclose(s(t), sinc_w(t, 2.0), atol=1e-14)
    with pytest.raises(ModulusMismatch):
        d_to_a(delta(0, 8), p)


def test_grid_samples_exact(rng):
    p = AnalogParams(64, bandwidth=1.0, carrier_multiple=10, trunc=8)
    s = random_signal(64, rng)
    grid = np.arange(64) / p.bandwidth
    vals = d_to_a(s, p)(grid)
    assert np.abs(vals - s).max() < 1e-12
    assert abs(np.linalg.norm(vals) - np.linalg.norm(s)) < 1e-12


def test_round_trip(rng):
    s = random_signal(64, rng)
    for trunc in (32, 64):
        p = AnalogParams(64, trunc=trunc)
        assert np.linalg.norm(a_to_d(d_to_a(s, p), p) - s) < 1e-6


def test_a_to_d_zero_and_periodisation():
    p = AnalogParams(16, bandwidth=1.0, carrier_multiple=0, trunc=16)
    zero = ContinuousSignal(lambda t: np.zeros_like(t, dtype=complex), (0.0, p.duration))
    assert np.array_equal(a_to_d(zero, p), np.zeros(16))
    shifted = time_frequency_shift(d_to_a(delta(0, 16), p), p.duration, 0.0)
    assert np.allclose(a_to_d(shifted, p), delta(0, 16), atol=1e-9)


def test_intertwining_examples(rng):
    p = AnalogParams(64, trunc=64)
    s = random_signal(64, rng)
    assert verify_shift_intertwining(s, (0.0, 0.0), p) <= 1e-6
    W, T = p.bandwidth, p.duration
    assert grid_image(3 / W, 5 / T, p) == (3, 5)
    assert verify_shift_intertwining(s, (3 / W, 5 / T), p) <= 1e-3


def test_intertwining_negative_frequency_maps_mod_n(rng):
    n = 16
    p = AnalogParams(n, trunc=16)
    s = random_signal(n, rng)
    for j in range(-n // 2, n // 2 + 1):
        f0 = j / p.duration
        assert grid_image(0.0, f0, p) == (0, j % n)
        assert verify_shift_intertwining(s, (0.0, f0), p) < 1e-9


def test_residual_does_not_grow_with_truncation(rng):
    # on-grid samples sit on sinc zeros, so the residual is already at rounding level
    s = random_signal(64, rng)
    shift = (7.0, 3 / 64)
    res = [verify_shift_intertwining(s, shift, AnalogParams(64, trunc=m)) for m in (8, 16, 32, 64)]
    assert max(res) < 1e-10


def test_off_grid_rejected(rng):
    p = AnalogParams(16)
    s = random_signal(16, rng)
    with pytest.raises(OffGrid):
        verify_shift_intertwining(s, (0.5, 0.0), p)
    with pytest.raises(OffGrid):
        verify_shift_intertwining(s, (0.0, 1 / 32), p)
    with pytest.raises(OffGrid):
        grid_image(0.0, 9 / 16, p)          # beyond W/2
    with pytest.raises(OffGrid):
        grid_image(17.0, 0.0, p)            # beyond T


def _baseband(w, rng):
    s = random_signal(32, rng)
    return d_to_a(s, AnalogParams(32, bandwidth=w, carrier_multiple=0, trunc=32), carrier=False)


def test_narrowband_identity_scale(rng):
    b = _baseband(1.0, rng)
    r = narrowband_residual(b, 1.0, 100.0, 1.0, np.linspace(0, 5, 50))
    assert r.residual == 0.0


def test_narrowband_residual_tracks_bandwidth_ratio():
    fc, a0 = 100.0, 1.001
    t = np.linspace(0, 3.0, 400)
    ratios, res = [], []
    for w in (1.0, 2.0, 5.0, 10.0):
        b = _baseband(w, np.random.default_rng(0))
        r = narrowband_residual(b, a0, fc, w, t)
        res.append(r.residual)
        ratios.append(r.residual / r.bound_shape.max())
    assert res[0] <= res[-1]
    assert all(x <= y for x, y in zip(res, res[1:]))
    # measured constant of the O(f0 t W / f_c) bound stays bounded over the sweep
    assert max(ratios) < 1.0
    assert max(ratios) / min(ratios) < 3.0
