#!/usr/bin/env python3
"""Offline generator for the bundled LDPC parity-check files.

Builds column-weight-3 codes by progressive edge growth (each new edge
goes to the most distant check in the current Tanner graph, preferring
low-degree checks under a hard row-degree cap), retries seeds until the
parity matrix has full row rank, and writes the result in alist format.

Run from the repository root:  python3 scripts/make_ldpc_codes.py
"""

from __future__ import annotations

import sys
from collections import deque
from pathlib import Path

import numpy as np

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "plmimo" / "codes"

# name, n, m, column weight
TARGETS = [
    ("n96_r12", 96, 48, 3),
    ("n512_r12", 512, 256, 3),
    ("n576_r13", 576, 384, 3),
]


def gf2_rank(rows: np.ndarray) -> int:
    h = rows.copy()
    m, n = h.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        hit = np.flatnonzero(h[rank:, col]) + rank
        if hit.size == 0:
            continue
        if hit[0] != rank:
            h[[rank, hit[0]]] = h[[hit[0], rank]]
        others = np.flatnonzero(h[:, col])
        others = others[others != rank]
        h[others] ^= h[rank]
        rank += 1
    return rank


def bfs_check_depths(var_adj, check_adj, start_var, n_checks):
    """Depth of each check from a variable in the bipartite graph; -1 if unreached."""
    depth = np.full(n_checks, -1, dtype=np.int64)
    seen_vars = {start_var}
    frontier_checks = set(var_adj[start_var])
    level = 1
    for c in frontier_checks:
        depth[c] = level
    while frontier_checks:
        next_vars = set()
        for c in frontier_checks:
            next_vars.update(check_adj[c])
        next_vars -= seen_vars
        seen_vars |= next_vars
        next_checks = set()
        for v in next_vars:
            next_checks.update(var_adj[v])
        next_checks = {c for c in next_checks if depth[c] < 0}
        level += 2
        for c in next_checks:
            depth[c] = level
        frontier_checks = next_checks
    return depth


def peg_construct(n, m, col_weight, rng):
    var_adj = [[] for _ in range(n)]
    check_adj = [[] for _ in range(m)]
    degree = np.zeros(m, dtype=np.int64)
    cap = -(-n * col_weight // m)  # ceil

    def pick(candidates):
        candidates = [c for c in candidates if degree[c] < cap]
        if not candidates:
            return None
        d_min = min(degree[c] for c in candidates)
        best = [c for c in candidates if degree[c] == d_min]
        return int(best[rng.integers(len(best))])

    for v in range(n):
        for _ in range(col_weight):
            if not var_adj[v]:
                choice = pick(range(m))
            else:
                depth = bfs_check_depths(var_adj, check_adj, v, m)
                unreached = [c for c in range(m) if depth[c] < 0]
                choice = pick(unreached)
                if choice is None:
                    far = np.flatnonzero(depth == depth.max())
                    choice = pick([c for c in far if c not in var_adj[v]])
                if choice is None:
                    choice = pick([c for c in range(m) if c not in var_adj[v]])
            if choice is None:
                raise RuntimeError("degree cap too tight")
            var_adj[v].append(choice)
            check_adj[choice].append(v)
            degree[choice] += 1
    return var_adj, check_adj


def write_alist(path: Path, var_adj, check_adj, n, m):
    col_deg = [len(a) for a in var_adj]
    row_deg = [len(a) for a in check_adj]
    lines = [
        f"{n} {m}",
        f"{max(col_deg)} {max(row_deg)}",
        " ".join(map(str, col_deg)),
        " ".join(map(str, row_deg)),
    ]
    for adj in var_adj:
        lines.append(" ".join(str(c + 1) for c in sorted(adj)))
    for adj in check_adj:
        lines.append(" ".join(str(v + 1) for v in sorted(adj)))
    path.write_text("\n".join(lines) + "\n")


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, n, m, col_weight in TARGETS:
        for seed in range(64):
            rng = np.random.default_rng(seed)
            var_adj, check_adj = peg_construct(n, m, col_weight, rng)
            dense = np.zeros((m, n), dtype=np.uint8)
            for v, checks in enumerate(var_adj):
                dense[checks, v] = 1
            rank = gf2_rank(dense)
            if rank == m:
                write_alist(OUT_DIR / f"{name}.alist", var_adj, check_adj, n, m)
                k = n - rank
                print(f"{name}: n={n} m={m} k={k} rate={k/n:.4f} "
                      f"row degrees {sorted(set(len(a) for a in check_adj))} seed={seed}")
                break
        else:
            print(f"FAILED to reach full rank for {name}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
