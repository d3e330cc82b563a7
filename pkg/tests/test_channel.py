import numpy as np
import pytest

from plmimo.channel import complex_normal, sample_channel, transmit, trial_rng


def test_entry_variance_snr0(rng):
    h = sample_channel(4, 4, 0.0, rng)
    assert h.shape == (4, 4)
    # wide sanity band only; the tight check runs at 1e5 samples below
    assert 0.2 < np.mean(np.abs(h) ** 2) < 3.0


def test_entry_variance_snr10():
    rng = np.random.default_rng(0)
    h = sample_channel(50, 50, 10.0, rng)  # 2500 entries
    samples = [h]
    for _ in range(39):
        samples.append(sample_channel(50, 50, 10.0, rng))
    entries = np.concatenate([s.ravel() for s in samples])  # 1e5 entries
    var = np.mean(np.abs(entries) ** 2)
    assert var == pytest.approx(10.0, rel=0.02)
    # real and imaginary parts split the variance evenly
    assert np.var(entries.real) == pytest.approx(5.0, rel=0.05)


def test_shape_and_errors(rng):
    assert sample_channel(4, 4, 5.0, rng).shape == (4, 4)
    with pytest.raises(ValueError):
        sample_channel(4, 2, 5.0, rng)  # N < M
    with pytest.raises(ValueError):
        sample_channel(0, 1, 5.0, rng)


def test_transmit_noiseless(rng):
    h = sample_channel(3, 4, 5.0, rng)
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.array_equal(transmit(h, x, noiseless=True), h @ x)


def test_transmit_dimension_mismatch(rng):
    h = sample_channel(3, 4, 5.0, rng)
    with pytest.raises(ValueError):
        transmit(h, np.zeros(4), rng)


def test_noise_variance():
    rng = np.random.default_rng(1)
    h = np.eye(2, dtype=complex)
    ys = np.array([transmit(h, np.zeros(2, dtype=complex), rng) for _ in range(50000)])
    var = np.mean(np.abs(ys) ** 2)
    assert var == pytest.approx(1.0, rel=0.02)


def test_noise_mean():
    rng = np.random.default_rng(2)
    h = np.array([[1.0 + 0.5j, 0.2j], [0.1, 2.0]])
    x = np.array([1.0 + 1.0j, -0.5j])
    ys = np.array([transmit(h, x, rng) for _ in range(100000)])
    se = 1.0 / np.sqrt(ys.shape[0])  # per-component complex std 1
    assert np.all(np.abs(ys.mean(axis=0) - h @ x) < 3 * se * np.sqrt(2))


def test_reproducibility():
    a = sample_channel(4, 4, 7.0, trial_rng(9, 0, 3))
    b = sample_channel(4, 4, 7.0, trial_rng(9, 0, 3))
    assert np.array_equal(a, b)
    c = sample_channel(4, 4, 7.0, trial_rng(9, 0, 4))
    assert not np.array_equal(a, c)


def test_snr_scales_column_energy():
    rng = np.random.default_rng(3)
    e3 = np.mean([np.linalg.norm(sample_channel(2, 4, 3.0, rng)[:, 0]) ** 2
                  for _ in range(4000)])
    e6 = np.mean([np.linalg.norm(sample_channel(2, 4, 6.0, rng)[:, 0]) ** 2
                  for _ in range(4000)])
    assert e6 / e3 == pytest.approx(10 ** 0.3, rel=0.1)


def test_complex_normal_unit_variance():
    rng = np.random.default_rng(4)
    z = complex_normal(rng, 100000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.02)
