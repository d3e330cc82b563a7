"""Perturbed-linear demapping: candidate generation around a linear
estimate, per-bit sifting, and max-log LLRs with clipping.

Candidates are ``quantize(G y + delta)`` over a perturbation set that always
includes delta = 0 (the Babai point).  Three perturbation families are
supported: samples in an ellipsoid shaped by the filter matrix, Gaussian
samples shaped the same way, and a deterministic per-dimension square
expansion.  Distances are always evaluated against the original (H, y),
regardless of whether candidates were generated in a lattice-reduced basis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .constellation import Constellation, quantize_level_indices
from .lattice import quantize_reduced, reduce_lattice, remap_to_constellation
from .linfilter import extend_channel, extend_received, mmse_filter, zf_filter

__all__ = [
    "PerturbationSpec",
    "CandidateSet",
    "DemapperParams",
    "sample_perturbations",
    "generate_candidates",
    "full_coverage_deltas",
    "max_log_llrs",
    "plm_demap",
]

KINDS = ("ellipsoid", "gaussian", "square")


@dataclass(frozen=True)
class PerturbationSpec:
    """How to populate the perturbation set around the filtered estimate.

    ``count`` is the number of random draws (ellipsoid/gaussian); ``k`` is
    the per-dimension sub-constellation size of the square family, whose
    grid spacing is ``r * alpha``.  ``radial_law`` selects the ellipsoid
    radius distribution: "ball" gives u**(kappa/(2M)), an exactly uniform
    ball at kappa = 1 with mass concentrating at 0 for kappa > 1;
    "inverse" gives the heavy-tailed u**(-2*M*kappa) alternative.
    """

    kind: str = "gaussian"
    r: float = 1.0
    kappa: float = 1.0
    count: int = 0
    k: int = 4
    radial_law: str = "ball"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.r < 0:
            raise ValueError("radius must be >= 0")
        if self.kappa <= 0:
            raise ValueError("radial weighting must be > 0")
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.kind == "square":
            root = round(self.k ** 0.5)
            if root * root != self.k or self.k < 1:
                raise ValueError("square family needs a perfect-square k")
        if self.radial_law not in ("ball", "inverse"):
            raise ValueError(f"unknown radial law {self.radial_law!r}")


@dataclass(frozen=True)
class DemapperParams:
    """The tunable triple: perturbation scale, radial weighting, LLR clip."""

    r: float = 1.0
    kappa: float = 1.0
    l_max: float = 8.0

    def __post_init__(self):
        if self.l_max <= 0:
            raise ValueError("LLR clip level must be > 0")


@dataclass
class CandidateSet:
    """Deduplicated candidate vectors with their per-bit spin table."""

    candidates: np.ndarray        # (n_cand, M) complex, Babai point first
    bits: np.ndarray              # (n_cand, M, Q) spins
    distances: np.ndarray | None = None  # filled on first LLR evaluation

    def __len__(self) -> int:
        return self.candidates.shape[0]

    def side_indices(self, j: int, b: int, sign: int) -> np.ndarray:
        """Candidate indices whose bit (j, b) equals ``sign``."""
        return np.flatnonzero(self.bits[:, j, b] == sign)


def _complex_normal_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """(count, dim) CN(0, 1) samples from one interleaved real draw."""
    flat = rng.standard_normal((count, 2 * dim))
    return flat.view(np.complex128) / np.sqrt(2.0)


def _square_offsets(spec: PerturbationSpec, alpha: float, m: int) -> np.ndarray:
    side = round(spec.k ** 0.5)
    spacing = spec.r * alpha
    levels = spacing * (np.arange(side) - (side - 1) / 2.0)
    grid = (levels[:, None] + 1j * levels[None, :]).reshape(-1)
    deltas = np.zeros((m * spec.k, m), dtype=np.complex128)
    for i in range(m):
        deltas[i * spec.k : (i + 1) * spec.k, i] = grid
    return deltas


def sample_perturbations(
    spec: PerturbationSpec,
    g: np.ndarray,
    rng: np.random.Generator | None = None,
    alpha: float = 1.0,
) -> np.ndarray:
    """Perturbation vectors (n, M), one per row.

    Ellipsoid: r * G (rho * u_hat) with u_hat uniform on the complex unit
    sphere and rho drawn by the spec's radial law.  Gaussian: r * G g with
    g ~ CN(0, I).  Square: the deterministic one-hot grid q * e_i, q in the
    scaled scalar sub-constellation (alpha supplies the grid spacing unit).
    """
    g = np.asarray(g)
    m = g.shape[0]
    if spec.kind == "square":
        return _square_offsets(spec, alpha, m)
    if rng is None:
        raise ValueError("random perturbation families need an rng")
    if spec.count == 0:
        return np.zeros((0, m), dtype=np.complex128)
    if spec.kind == "gaussian":
        raw = _complex_normal_rows(rng, spec.count, g.shape[1])
    else:
        direction = _complex_normal_rows(rng, spec.count, g.shape[1])
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        u = rng.uniform(size=(spec.count, 1))
        if spec.radial_law == "ball":
            rho = u ** (spec.kappa / (2.0 * m))
        else:
            rho = u ** (-2.0 * m * spec.kappa)
        raw = rho * direction
    return spec.r * (raw @ g.T)


def full_coverage_deltas(c: Constellation, m: int, center: np.ndarray) -> np.ndarray:
    """Offsets hitting every vector of the constellation power set.

    One delta per point of Omega^M, aimed from ``center``; useful to force
    the candidate set to the whole search space in oracle comparisons.
    """
    idx = np.indices((c.size,) * m).reshape(m, -1).T
    return c.points[idx] - np.asarray(center)[None, :]


def generate_candidates(
    gy: np.ndarray,
    deltas: np.ndarray,
    c: Constellation,
    quantizer=None,
    remapper=None,
) -> CandidateSet:
    """Quantize ``gy + delta`` for delta in {0} u deltas, dedup, keep order.

    ``quantizer`` maps raw vectors to lattice points (plain constellation
    rounding by default) and ``remapper`` maps lattice points into the
    constellation box (identity by default, matching the plain quantizer).
    The Babai point (delta = 0) is always first and never dropped.
    """
    gy = np.asarray(gy)
    m = gy.shape[0]
    deltas = np.asarray(deltas).reshape(-1, m)
    raw = np.vstack([gy[None, :], gy[None, :] + deltas])
    if quantizer is not None:
        raw = remapper(quantizer(raw)) if remapper is not None else quantizer(raw)
    # Per-axis level rounding both quantizes (plain path) and recovers exact
    # level indices (points coming out of a quantizer/remapper are on-grid).
    re, im = quantize_level_indices(c, raw)
    half = c.q // 2
    words = (c.level_words[re] << half) | c.level_words[im]

    keys = words @ (c.size ** np.arange(m - 1, -1, -1, dtype=np.int64))
    _, first = np.unique(keys, return_index=True)
    keep = np.sort(first)
    symbols = c.levels[re[keep]] + 1j * c.levels[im[keep]]
    bits = np.ascontiguousarray(c.bit_table[words[keep]])
    return CandidateSet(candidates=np.ascontiguousarray(symbols), bits=bits)


def max_log_llrs(cs: CandidateSet, h: np.ndarray, y: np.ndarray, l_max: float) -> np.ndarray:
    """(M, Q) clipped max-log LLRs from original-domain distances.

    The LLR of bit (j, b) is the smallest ||y - H x||^2 among candidates
    with the bit at -1 minus the smallest among those at +1 (positive LLR
    means +1 is the better hypothesis), an empty side counting as +inf,
    clipped into [-l_max, +l_max].
    """
    if len(cs) == 0:
        raise ValueError("candidate set is empty")
    h = np.ascontiguousarray(h, dtype=np.complex128)
    y = np.ascontiguousarray(y, dtype=np.complex128)
    if cs.distances is None:
        cs.distances = kernels.candidate_distances(h, y, cs.candidates)
    return kernels.maxlog_sift(cs.distances, cs.bits, float(l_max))


def distances_qr(h: np.ndarray, y: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """||y - H x||^2 via a thin QR of H; agrees with the direct form.

    dist = ||Q^H y - R x||^2 + (||y||^2 - ||Q^H y||^2), the second term
    being y's energy outside the column span of H.
    """
    q, r = np.linalg.qr(h)
    qty = q.conj().T @ y
    base = float(np.real(y.conj() @ y) - np.real(qty.conj() @ qty))
    resid = qty[None, :] - cands @ r.T
    return np.sum(resid.real ** 2 + resid.imag ** 2, axis=1) + max(base, 0.0)


def plm_demap(
    h: np.ndarray,
    y: np.ndarray,
    c: Constellation,
    spec: PerturbationSpec,
    params: DemapperParams,
    use_lr: bool = False,
    use_mmse: bool = True,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Full demapping pipeline: filter, perturb, quantize, sift, clip.

    ``params`` overrides the spec's (r, kappa) with the tuned values and
    supplies the clip level.  With ``use_lr`` the working basis (the
    extended channel [H; I] when ``use_mmse``, else H itself) is lattice
    reduced, the filter is the pseudo-inverse of the reduced basis, and
    candidates are quantized on the reduced lattice before being remapped
    (and bounded) back to the constellation; distances always use the
    original (H, y).
    """
    h = np.asarray(h, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    m = h.shape[1]
    spec = replace(spec, r=params.r, kappa=params.kappa)

    h_sys = extend_channel(h) if use_mmse else h
    y_sys = extend_received(y, m) if use_mmse else y
    if use_lr:
        rb = reduce_lattice(h_sys)
        filt = zf_filter(rb.h_reduced)
        quantizer = lambda z: quantize_reduced(z, rb.u, c)
        remapper = lambda z: remap_to_constellation(z.T, rb.u_inv, c).T
    else:
        filt = mmse_filter(h, extended=True) if use_mmse else zf_filter(h)
        quantizer = None
        remapper = None

    gy = filt.g @ y_sys
    deltas = sample_perturbations(spec, filt.g, rng, alpha=c.alpha)
    cs = generate_candidates(gy, deltas, c, quantizer=quantizer, remapper=remapper)
    return max_log_llrs(cs, h, y, params.l_max)
