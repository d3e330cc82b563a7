import numpy as np
import pytest

from plmimo.constellation import (
    bits_to_symbols,
    build_constellation,
    quantize_to_constellation,
    symbols_to_bits,
)


@pytest.mark.parametrize("q", [2, 4, 6, 8, 10])
def test_unit_power_and_alpha(q):
    c = build_constellation(q)
    assert c.points.size == 2 ** q
    assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) < 1e-12
    assert c.alpha == pytest.approx(np.sqrt(6.0 / (2 ** q - 1)), rel=1e-12)


def test_qpsk_points():
    c = build_constellation(2)
    assert c.alpha == pytest.approx(1.41421, abs=1e-5)
    want = {(s1 * 0.7071068, s2 * 0.7071068) for s1 in (-1, 1) for s2 in (-1, 1)}
    got = {(round(p.real, 7), round(p.imag, 7)) for p in c.points}
    assert got == want


def test_256qam_alpha():
    c = build_constellation(8)
    assert c.alpha == pytest.approx(0.15339, abs=1e-5)


@pytest.mark.parametrize("q", [1, 3, 0, 12])
def test_invalid_q_rejected(q):
    with pytest.raises(ValueError):
        build_constellation(q)


def test_bit_convention_qpsk():
    c = build_constellation(2)
    x = bits_to_symbols(c, np.array([1, 1]))
    assert x[0] == pytest.approx(c.alpha / 2 * (1 + 1j))
    x = bits_to_symbols(c, np.array([-1, -1]))
    assert x[0] == pytest.approx(-c.alpha / 2 * (1 + 1j))


def test_wrong_bit_length():
    c = build_constellation(4)
    with pytest.raises(ValueError):
        bits_to_symbols(c, np.ones(6))


def test_all_words_distinct_q4():
    c = build_constellation(4)
    symbols = bits_to_symbols(c, c.bit_table.reshape(-1))
    assert symbols.shape == (16,)
    assert len({(round(p.real, 9), round(p.imag, 9)) for p in symbols}) == 16


@pytest.mark.parametrize("q", [2, 4])
def test_roundtrip_exhaustive(q):
    c = build_constellation(q)
    bits = c.bit_table.reshape(-1)
    assert np.array_equal(symbols_to_bits(c, bits_to_symbols(c, bits)), bits)


def test_roundtrip_random_q8(rng):
    c = build_constellation(8)
    bits = np.where(rng.integers(0, 2, size=4 * 8) == 1, 1, -1)
    assert np.array_equal(symbols_to_bits(c, bits_to_symbols(c, bits)), bits)


def test_symbols_to_bits_rejects_off_grid():
    c = build_constellation(2)
    with pytest.raises(ValueError):
        symbols_to_bits(c, np.array([0.5 + 0.5j]))


def test_quantize_idempotent_and_nearest(rng):
    c = build_constellation(4)
    z = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    q1 = quantize_to_constellation(c, z)
    assert np.array_equal(quantize_to_constellation(c, q1), q1)
    # exhaustive nearest-point oracle, separable per axis
    d_quant = np.abs(z - q1)
    d_best = np.min(np.abs(z[:, None] - c.points[None, :]), axis=1)
    assert np.all(d_quant <= d_best + 1e-12)


def test_quantize_examples():
    c = build_constellation(2)
    got = quantize_to_constellation(c, np.array([0.1 + 0.9j]))
    # oracle: exhaustive nearest point among the 4
    want = c.points[np.argmin(np.abs(0.1 + 0.9j - c.points))]
    assert got[0] == pytest.approx(want)
    assert got[0] == pytest.approx(c.alpha / 2 * (1 + 1j))
    far = quantize_to_constellation(c, np.array([10 + 10j]))
    assert far[0] == pytest.approx(c.alpha / 2 * (1 + 1j))


def test_quantize_tie_rounds_up():
    c = build_constellation(2)
    got = quantize_to_constellation(c, np.array([0.0 + 0.0j]))
    assert got[0] == pytest.approx(c.alpha / 2 * (1 + 1j))


def test_quantize_rejects_non_finite():
    c = build_constellation(2)
    with pytest.raises(ValueError):
        quantize_to_constellation(c, np.array([np.nan + 0j]))


@pytest.mark.parametrize("q", [2, 4, 6])
def test_gray_adjacent_levels(q):
    c = build_constellation(q)
    words = c.level_words
    for a, b in zip(words[:-1], words[1:]):
        assert bin(int(a) ^ int(b)).count("1") == 1
