import numpy as np
import pytest

from plmimo.ldpc import (
    AlistFormatError,
    binary_to_spins,
    bundled_code_path,
    decode,
    encode,
    load_code,
    spins_to_binary,
)


@pytest.fixture(scope="module")
def code96():
    return load_code(bundled_code_path("n96_r12"))


def _gf2_rank(rows):
    h = rows.copy()
    rank = 0
    for col in range(h.shape[1]):
        if rank == h.shape[0]:
            break
        hit = np.flatnonzero(h[rank:, col]) + rank
        if hit.size == 0:
            continue
        if hit[0] != rank:
            h[[rank, hit[0]]] = h[[hit[0], rank]]
        others = np.flatnonzero(h[:, col])
        h[others[others != rank]] ^= h[rank]
        rank += 1
    return rank


def test_n96_shape_and_rank(code96):
    assert (code96.n, code96.k) == (96, 48)
    assert code96.rate == pytest.approx(0.5)
    # independent rank check over GF(2)
    dense = np.zeros((code96.n_checks, code96.n), dtype=np.uint8)
    for c in range(code96.n_checks):
        dense[c, code96.check_var[code96.check_ptr[c]:code96.check_ptr[c + 1]]] = 1
    assert _gf2_rank(dense) == 48


@pytest.mark.parametrize("name,n,k", [("n512_r12", 512, 256), ("n576_r13", 576, 192)])
def test_bundled_codes(name, n, k):
    code = load_code(bundled_code_path(name))
    assert (code.n, code.k) == (n, k)


def test_single_parity_check(tmp_path):
    path = tmp_path / "spc.alist"
    path.write_text("2 1\n1 2\n1 1\n2\n1\n1\n1 2\n")
    code = load_code(path)
    assert (code.n, code.k) == (2, 1)
    assert np.array_equal(encode(code, np.array([1])), [1, 1])
    assert np.array_equal(encode(code, np.array([-1])), [-1, -1])


def test_malformed_column_count(tmp_path):
    path = tmp_path / "bad.alist"
    # column 1 claims degree 2 but lists one check
    path.write_text("2 1\n2 2\n2 1\n2\n1\n1\n1 2\n")
    with pytest.raises(AlistFormatError) as err:
        load_code(path)
    assert "line 5" in str(err.value)


def test_adjacency_consistency_checked(tmp_path):
    path = tmp_path / "mismatch.alist"
    path.write_text("2 1\n1 2\n1 1\n2\n1\n1\n2 2\n")
    with pytest.raises(AlistFormatError):
        load_code(path)


def test_spin_binary_convention():
    spins = np.array([1, -1, 1])
    assert np.array_equal(spins_to_binary(spins), [0, 1, 0])
    assert np.array_equal(binary_to_spins(spins_to_binary(spins)), spins)


def test_zero_info_zero_codeword(code96):
    cw = encode(code96, np.ones(code96.k, dtype=np.int8))
    assert np.all(cw == 1)  # all-zero binary


def test_basis_vectors(code96):
    for i in (0, 7, 31):
        info = np.ones(code96.k, dtype=np.int8)
        info[i] = -1
        cw = encode(code96, info)
        assert np.array_equal(spins_to_binary(cw), code96.generator[i])
        assert code96.parity_ok(cw)


def test_random_codewords_satisfy_parity(code96, rng):
    for _ in range(20):
        info = np.where(rng.integers(0, 2, code96.k) == 1, 1, -1)
        cw = encode(code96, info)
        assert code96.parity_ok(cw)
        assert np.array_equal(cw[code96.info_cols], info)  # systematic


def test_encode_wrong_length(code96):
    with pytest.raises(ValueError):
        encode(code96, np.ones(10))


def test_decode_saturated(code96, rng):
    info = np.where(rng.integers(0, 2, code96.k) == 1, 1, -1)
    cw = encode(code96, info)
    spins, converged, iters = decode(code96, 20.0 * cw.astype(float))
    assert converged and iters == 1
    assert np.array_equal(spins, cw)


def test_decode_single_flip(code96, rng):
    info = np.where(rng.integers(0, 2, code96.k) == 1, 1, -1)
    cw = encode(code96, info)
    llr = 20.0 * cw.astype(float)
    llr[13] = -llr[13]
    spins, converged, _ = decode(code96, llr)
    assert converged
    assert np.array_equal(spins, cw)


def test_decode_all_zero_llrs(code96):
    spins, converged, iters = decode(code96, np.zeros(code96.n), max_iter=5)
    assert not converged
    assert iters == 5


def test_decode_rejects_non_finite(code96):
    llr = np.zeros(code96.n)
    llr[0] = np.inf
    with pytest.raises(ValueError):
        decode(code96, llr)


def test_decode_rejects_bad_args(code96):
    with pytest.raises(ValueError):
        decode(code96, np.zeros(10))
    with pytest.raises(ValueError):
        decode(code96, np.zeros(code96.n), max_iter=0)


@pytest.mark.parametrize("min_sum", [False, True])
def test_converged_implies_parity(code96, min_sum):
    rng = np.random.default_rng(8)
    n_conv = 0
    for _ in range(40):
        info = np.where(rng.integers(0, 2, code96.k) == 1, 1, -1)
        cw = encode(code96, info).astype(float)
        llr = 2.0 * (cw + 0.6 * rng.standard_normal(code96.n)) / 0.36
        spins, converged, _ = decode(code96, llr, min_sum=min_sum)
        if converged:
            n_conv += 1
            assert code96.parity_ok(spins)
    assert n_conv > 10  # the ensemble has plenty of decodable blocks


def test_awgn_correction(code96):
    # moderate-noise codewords decode to the transmitted word
    rng = np.random.default_rng(9)
    ok = 0
    for _ in range(30):
        info = np.where(rng.integers(0, 2, code96.k) == 1, 1, -1)
        cw = encode(code96, info).astype(float)
        sigma = 0.5
        llr = 2.0 * (cw + sigma * rng.standard_normal(code96.n)) / sigma ** 2
        spins, converged, _ = decode(code96, llr)
        ok += converged and np.array_equal(spins, cw)
    assert ok >= 28
