"""Binary LDPC codes: alist loading, systematic encoding, BP decoding.

Codes are described by parity-check matrices in the plain-text alist
format (dimensions, max degrees, per-node degree lists, 1-indexed
adjacency lists; trailing zero padding tolerated).  A dense systematic
generator is derived at load time by Gaussian elimination over GF(2);
the information positions are the non-pivot columns and are recorded on
the code object.  Bits are spins in {-1, +1} with spin +1 equal to
binary 0, so a positive LLR favors spin +1.

Three desk-scale codes built offline by progressive edge growth ship as
package data: ``n96_r12`` (regular (3,6), k = 48), ``n512_r12`` (regular
(3,6), k = 256) and ``n576_r13`` (column weight 3, rate 1/3, k = 192).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels

__all__ = [
    "LdpcCode",
    "AlistFormatError",
    "load_code",
    "encode",
    "decode",
    "spins_to_binary",
    "binary_to_spins",
    "bundled_code_path",
]

BUNDLED_CODES = ("n96_r12", "n512_r12", "n576_r13")


class AlistFormatError(ValueError):
    """Malformed alist file; the message names the offending line."""


@dataclass(frozen=True)
class LdpcCode:
    n: int                       # codeword length
    k: int                       # information length (n - rank)
    check_ptr: np.ndarray        # (m+1,) CSR pointers over checks
    check_var: np.ndarray        # (E,) variable index per edge
    var_ptr: np.ndarray          # (n+1,) pointers over variables
    var_edge: np.ndarray         # (E,) edge index per variable slot
    generator: np.ndarray = field(repr=False)   # (k, n) over GF(2)
    info_cols: np.ndarray = field(repr=False)   # (k,) positions of info bits

    @property
    def n_checks(self) -> int:
        return self.check_ptr.size - 1

    @property
    def rate(self) -> float:
        return self.k / self.n

    def parity_ok(self, spins: np.ndarray) -> bool:
        """All checks satisfied by a +-1 codeword."""
        bits = spins_to_binary(np.asarray(spins))
        syndrome = np.add.reduceat(bits[self.check_var], self.check_ptr[:-1]) % 2
        return not syndrome.any()


def spins_to_binary(spins: np.ndarray) -> np.ndarray:
    """Spin +1 -> binary 0, spin -1 -> binary 1."""
    return ((1 - np.asarray(spins)) // 2).astype(np.uint8)


def binary_to_spins(bits: np.ndarray) -> np.ndarray:
    return (1 - 2 * np.asarray(bits).astype(np.int64)).astype(np.int8)


def bundled_code_path(name: str) -> Path:
    """Filesystem path of a code shipped with the package."""
    if name not in BUNDLED_CODES:
        raise ValueError(f"unknown bundled code {name!r}; have {BUNDLED_CODES}")
    return Path(resources.files("plmimo.codes") / f"{name}.alist")


def _parse_int_line(lines: list[str], i: int, expected: int | None = None) -> list[int]:
    if i >= len(lines):
        raise AlistFormatError(f"line {i + 1}: unexpected end of file")
    try:
        values = [int(tok) for tok in lines[i].split()]
    except ValueError as exc:
        raise AlistFormatError(f"line {i + 1}: non-integer token ({exc})") from None
    if expected is not None and len(values) != expected:
        raise AlistFormatError(
            f"line {i + 1}: expected {expected} integers, found {len(values)}"
        )
    return values


def _gf2_generator(dense: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Systematic generator and info columns from a dense GF(2) parity matrix."""
    h = dense.copy()
    m, n = h.shape
    pivot_cols: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hit = np.flatnonzero(h[row:, col]) + row
        if hit.size == 0:
            continue
        if hit[0] != row:
            h[[row, hit[0]]] = h[[hit[0], row]]
        others = np.flatnonzero(h[:, col])
        others = others[others != row]
        h[others] ^= h[row]
        pivot_cols.append(col)
        row += 1
    rank = row
    free_cols = np.setdiff1d(np.arange(n), pivot_cols)
    k = n - rank
    gen = np.zeros((k, n), dtype=np.uint8)
    reduced = h[:rank]
    pivots = np.asarray(pivot_cols)
    for i, f in enumerate(free_cols):
        gen[i, f] = 1
        gen[i, pivots] = reduced[:, f]
    return gen, free_cols


def load_code(path: str | Path) -> LdpcCode:
    """Parse an alist file and precompute the decoder graph and generator."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines()]
    n, m = _parse_int_line(lines, 0, 2)
    if n <= 0 or m <= 0:
        raise AlistFormatError("line 1: dimensions must be positive")
    _parse_int_line(lines, 1, 2)  # max degrees; actual lists are authoritative
    col_deg = _parse_int_line(lines, 2, n)
    row_deg = _parse_int_line(lines, 3, m)

    col_adj: list[list[int]] = []
    for v in range(n):
        entries = [e for e in _parse_int_line(lines, 4 + v) if e != 0]
        if len(entries) != col_deg[v]:
            raise AlistFormatError(
                f"line {5 + v}: column {v + 1} lists {len(entries)} checks, "
                f"degree says {col_deg[v]}"
            )
        if any(not 1 <= e <= m for e in entries):
            raise AlistFormatError(f"line {5 + v}: check index out of range")
        col_adj.append([e - 1 for e in entries])

    row_adj: list[list[int]] = []
    for c in range(m):
        entries = [e for e in _parse_int_line(lines, 4 + n + c) if e != 0]
        if len(entries) != row_deg[c]:
            raise AlistFormatError(
                f"line {5 + n + c}: row {c + 1} lists {len(entries)} variables, "
                f"degree says {row_deg[c]}"
            )
        if any(not 1 <= e <= n for e in entries):
            raise AlistFormatError(f"line {5 + n + c}: variable index out of range")
        row_adj.append([e - 1 for e in entries])

    from_cols = {(c, v) for v, checks in enumerate(col_adj) for c in checks}
    from_rows = {(c, v) for c, variables in enumerate(row_adj) for v in variables}
    if from_cols != from_rows:
        raise AlistFormatError("column and row adjacency lists disagree")

    check_ptr = np.zeros(m + 1, dtype=np.int64)
    check_ptr[1:] = np.cumsum(row_deg)
    check_var = np.concatenate([np.sort(vs) for vs in row_adj]).astype(np.int64)

    # Variable -> edge permutation into the check-major edge arrays.
    order = np.argsort(check_var, kind="stable")
    var_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(var_ptr, check_var + 1, 1)
    var_ptr = np.cumsum(var_ptr)
    var_edge = order.astype(np.int64)

    dense = np.zeros((m, n), dtype=np.uint8)
    for c, variables in enumerate(row_adj):
        dense[c, variables] = 1
    generator, info_cols = _gf2_generator(dense)

    return LdpcCode(
        n=n,
        k=generator.shape[0],
        check_ptr=check_ptr,
        check_var=check_var,
        var_ptr=var_ptr,
        var_edge=var_edge,
        generator=generator,
        info_cols=info_cols,
    )


def encode(code: LdpcCode, info_bits: np.ndarray) -> np.ndarray:
    """Systematic codeword (spins) carrying ``info_bits`` at ``info_cols``."""
    info_bits = np.asarray(info_bits)
    if info_bits.shape != (code.k,):
        raise ValueError(f"expected {code.k} information bits, got {info_bits.shape}")
    u = spins_to_binary(info_bits)
    word = (u @ code.generator) % 2
    return binary_to_spins(word)


def decode(
    code: LdpcCode,
    llrs: np.ndarray,
    max_iter: int = 30,
    min_sum: bool = False,
    alpha: float = 0.75,
) -> tuple[np.ndarray, bool, int]:
    """Belief-propagation decoding of channel LLRs.

    Returns (hard spins, converged, iterations).  The default check update
    is the exact tanh rule; ``min_sum`` switches to normalized min-sum with
    scale ``alpha``.
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got {llrs.shape}")
    if not np.all(np.isfinite(llrs)):
        raise ValueError("LLRs must be finite (clip before decoding)")
    if max_iter < 1:
        raise ValueError("need at least one iteration")
    posterior, converged, iterations = kernels.bp_decode(
        llrs, code.check_ptr, code.check_var, code.var_ptr, code.var_edge,
        max_iter, min_sum, alpha,
    )
    spins = np.where(posterior >= 0.0, 1, -1).astype(np.int8)
    return spins, bool(converged), int(iterations)
