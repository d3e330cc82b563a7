import numpy as np
import pytest
from scipy.stats import kstest

from plmimo.channel import sample_channel, transmit, trial_rng
from plmimo.constellation import bits_to_symbols, build_constellation
from plmimo.linfilter import zf_filter
from plmimo.oracle import exact_max_log_llrs
from plmimo.plm import (
    CandidateSet,
    DemapperParams,
    PerturbationSpec,
    distances_qr,
    full_coverage_deltas,
    generate_candidates,
    max_log_llrs,
    plm_demap,
    sample_perturbations,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(kind="blob")
    with pytest.raises(ValueError):
        PerturbationSpec(r=-1.0)
    with pytest.raises(ValueError):
        PerturbationSpec(kappa=0.0)
    with pytest.raises(ValueError):
        PerturbationSpec(kind="square", k=5)
    with pytest.raises(ValueError):
        DemapperParams(l_max=0.0)


def test_gaussian_zero_radius(rng):
    spec = PerturbationSpec(kind="gaussian", r=0.0, count=10)
    d = sample_perturbations(spec, np.eye(3), rng)
    assert d.shape == (10, 3)
    assert np.all(d == 0)


def test_square_enumeration():
    spec = PerturbationSpec(kind="square", r=1.0, k=4)
    d = sample_perturbations(spec, np.eye(2), alpha=2.0)
    assert d.shape == (8, 2)
    # each perturbation touches exactly one coordinate
    assert np.all(np.count_nonzero(d, axis=1) == 1)
    # per dimension: the 2x2 grid at spacing r*alpha
    vals = {complex(round(v.real, 9), round(v.imag, 9)) for v in d[:4, 0]}
    assert vals == {1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j}
    # deterministic: no rng involved
    assert np.array_equal(d, sample_perturbations(spec, np.eye(2), alpha=2.0))


def test_ellipsoid_radial_distribution():
    m = 3
    spec = PerturbationSpec(kind="ellipsoid", r=1.0, kappa=1.0, count=100000)
    d = sample_perturbations(spec, np.eye(m), np.random.default_rng(5))
    radii = np.linalg.norm(d, axis=1)
    # uniform ball in 2M real dimensions: P(R <= t) = t^(2M)
    stat = kstest(radii, lambda t: np.clip(t, 0, 1) ** (2 * m))
    assert stat.pvalue > 0.01


def test_ellipsoid_kappa_concentrates():
    spec_wide = PerturbationSpec(kind="ellipsoid", kappa=1.0, count=20000)
    spec_tight = PerturbationSpec(kind="ellipsoid", kappa=4.0, count=20000)
    r1 = np.linalg.norm(sample_perturbations(spec_wide, np.eye(2), np.random.default_rng(0)), axis=1)
    r2 = np.linalg.norm(sample_perturbations(spec_tight, np.eye(2), np.random.default_rng(0)), axis=1)
    assert np.median(r2) < np.median(r1)


def test_ellipsoid_inverse_law_heavy_tail():
    spec = PerturbationSpec(kind="ellipsoid", kappa=1.0, count=1000, radial_law="inverse")
    d = sample_perturbations(spec, np.eye(2), np.random.default_rng(1))
    assert np.max(np.linalg.norm(d, axis=1)) > 1.0  # escapes the unit ball


def test_perturbations_require_rng():
    with pytest.raises(ValueError):
        sample_perturbations(PerturbationSpec(kind="gaussian", count=4), np.eye(2))


def test_candidates_babai_only():
    c = build_constellation(2)
    gy = np.zeros(2, dtype=complex)
    cs = generate_candidates(gy, np.zeros((0, 2), dtype=complex), c)
    assert len(cs) == 1
    assert np.allclose(cs.candidates[0], c.alpha / 2 * (1 + 1j) * np.ones(2))


def test_candidates_dedup_bound(rng):
    c = build_constellation(2)
    gy = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    deltas = 0.1 * (rng.standard_normal((40, 2)) + 1j * rng.standard_normal((40, 2)))
    cs = generate_candidates(gy, deltas, c)
    assert 1 <= len(cs) <= 41


def test_candidates_full_coverage():
    c = build_constellation(2)
    gy = np.array([0.2 + 0.1j, -0.3 - 0.4j])
    cs = generate_candidates(gy, full_coverage_deltas(c, 2, gy), c)
    assert len(cs) == 16


def test_bit_views_partition(rng):
    c = build_constellation(4)
    gy = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    deltas = rng.standard_normal((30, 3)) + 1j * rng.standard_normal((30, 3))
    cs = generate_candidates(gy, deltas, c)
    for j in range(3):
        for b in range(4):
            pos = cs.side_indices(j, b, +1)
            neg = cs.side_indices(j, b, -1)
            assert len(pos) + len(neg) == len(cs)
            assert len(np.intersect1d(pos, neg)) == 0


def test_max_log_matches_oracle_small(rng):
    c = build_constellation(2)
    for t in range(50):
        rng_t = trial_rng(21, 0, t)
        h = sample_channel(2, 2, 8.0, rng_t)
        x = c.points[rng_t.integers(0, 4, size=2)]
        y = transmit(h, x, rng_t)
        gy = zf_filter(h).apply(y)
        cs = generate_candidates(gy, full_coverage_deltas(c, 2, gy), c)
        got = max_log_llrs(cs, h, y, l_max=np.inf)
        assert np.max(np.abs(got - exact_max_log_llrs(h, y, c))) <= 1e-9


def test_empty_side_saturates():
    c = build_constellation(2)
    point = c.points[np.argmax(c.points.real + c.points.imag)]  # bits all +1
    cs = generate_candidates(np.array([point]), np.zeros((0, 1), dtype=complex), c)
    llrs = max_log_llrs(cs, np.eye(1, dtype=complex), np.array([point]), l_max=7.0)
    assert np.all(llrs == 7.0)


def test_clip_bound(rng):
    c = build_constellation(2)
    h = sample_channel(2, 2, 20.0, rng)
    y = 10 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    gy = zf_filter(h).apply(y)
    cs = generate_candidates(gy, full_coverage_deltas(c, 2, gy), c)
    llrs = max_log_llrs(cs, h, y, l_max=3.0)
    assert np.all(np.abs(llrs) <= 3.0)


def test_monotone_refinement(rng):
    # growing the candidate set moves max-log LLRs toward the oracle
    c = build_constellation(2)
    h = sample_channel(2, 2, 8.0, rng)
    y = transmit(h, c.points[[0, 3]], rng)
    gy = zf_filter(h).apply(y)
    oracle = exact_max_log_llrs(h, y, c)
    all_deltas = full_coverage_deltas(c, 2, gy)
    few = generate_candidates(gy, all_deltas[:4], c)
    full = generate_candidates(gy, all_deltas, c)
    err_few = np.max(np.abs(max_log_llrs(few, h, y, np.inf) - oracle))
    err_full = np.max(np.abs(max_log_llrs(full, h, y, np.inf) - oracle))
    assert err_full <= err_few + 1e-12
    assert err_full <= 1e-9


def test_order_insensitive(rng):
    c = build_constellation(4)
    h = sample_channel(2, 2, 10.0, rng)
    y = transmit(h, c.points[[3, 7]], rng)
    gy = zf_filter(h).apply(y)
    deltas = rng.standard_normal((64, 2)) + 1j * rng.standard_normal((64, 2))
    a = max_log_llrs(generate_candidates(gy, deltas, c), h, y, 8.0)
    b = max_log_llrs(generate_candidates(gy, deltas[::-1], c), h, y, 8.0)
    assert np.allclose(a, b, atol=1e-12)


def test_qr_distance_agreement(rng):
    for n in (2, 4):
        h = sample_channel(2, n, 9.0, rng)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        cands = (rng.standard_normal((50, 2)) + 1j * rng.standard_normal((50, 2)))
        direct = np.sum(np.abs(y[None, :] - cands @ h.T) ** 2, axis=1)
        assert np.max(np.abs(distances_qr(h, y, cands) - direct)) <= 1e-9


def test_distances_cached():
    c = build_constellation(2)
    cs = generate_candidates(np.zeros(1, dtype=complex), np.zeros((0, 1), dtype=complex), c)
    assert cs.distances is None
    max_log_llrs(cs, np.eye(1, dtype=complex), np.zeros(1, dtype=complex), 8.0)
    assert cs.distances is not None


def test_empty_candidate_set_rejected():
    cs = CandidateSet(candidates=np.zeros((0, 1), dtype=complex),
                      bits=np.zeros((0, 1, 2), dtype=np.int8))
    with pytest.raises(ValueError):
        max_log_llrs(cs, np.eye(1, dtype=complex), np.zeros(1, dtype=complex), 8.0)


def test_plm_demap_full_coverage_equals_oracle():
    # dense constellation-wide perturbations drive the pipeline to exactness
    c = build_constellation(2)
    spec = PerturbationSpec(kind="square", r=2.0, k=4)
    for t in range(20):
        rng_t = trial_rng(31, 0, t)
        h = sample_channel(1, 2, 8.0, rng_t)
        x = c.points[rng_t.integers(0, 4, size=1)]
        y = transmit(h, x, rng_t)
        llrs = plm_demap(h, y, c, spec, DemapperParams(2.0, 1.0, np.inf),
                         use_mmse=False, rng=rng_t)
        assert np.max(np.abs(llrs - exact_max_log_llrs(h, y, c))) <= 1e-9


def test_plm_demap_noiseless_signs():
    c = build_constellation(4)
    spec = PerturbationSpec(kind="gaussian", count=32)
    params = DemapperParams(1.0, 1.0, 8.0)
    for use_lr in (False, True):
        errors = 0
        for t in range(100):
            rng_t = trial_rng(32, int(use_lr), t)
            h = sample_channel(3, 3, 18.0, rng_t)
            bits = np.where(rng_t.integers(0, 2, 12) == 1, 1, -1)
            x = bits_to_symbols(c, bits)
            y = transmit(h, x, rng_t, noiseless=True)
            llrs = plm_demap(h, y, c, spec, params, use_lr=use_lr, use_mmse=False, rng=rng_t)
            errors += np.count_nonzero(np.where(llrs.reshape(-1) >= 0, 1, -1) != bits)
        assert errors == 0


def test_plm_demap_params_override_spec(rng):
    c = build_constellation(2)
    spec = PerturbationSpec(kind="gaussian", r=123.0, count=16)
    h = sample_channel(2, 2, 10.0, rng)
    y = transmit(h, c.points[[0, 1]], rng)
    a = plm_demap(h, y, c, spec, DemapperParams(0.5, 1.0, 8.0), rng=trial_rng(1))
    b = plm_demap(h, y, c, PerturbationSpec(kind="gaussian", r=0.5, count=16),
                  DemapperParams(0.5, 1.0, 8.0), rng=trial_rng(1))
    assert np.array_equal(a, b)
