"""Thresholded causal graph over embedding columns and the Markov blanket
of the influence variable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CausalGraph:
    adjacency: np.ndarray  # B[i, j] = 1 means i -> j
    y_index: int
    mb: tuple[int, ...]
    threshold: float
    adjusted: bool  # threshold raised above the requested value to break cycles


def find_cycle_free(b: np.ndarray) -> bool:
    """True when the directed graph with adjacency ``b`` has no cycle."""
    k = b.shape[0]
    color = np.zeros(k, dtype=np.int8)  # 0 new, 1 on stack, 2 done
    succ = [np.flatnonzero(b[i]) for i in range(k)]
    for root in range(k):
        if color[root]:
            continue
        stack = [(root, 0)]
        color[root] = 1
        while stack:
            u, pos = stack[-1]
            if pos < len(succ[u]):
                stack[-1] = (u, pos + 1)
                v = succ[u][pos]
                if color[v] == 1:
                    return False
                if color[v] == 0:
                    color[v] = 1
                    stack.append((v, 0))
            else:
                color[u] = 2
                stack.pop()
    return True


def binarize(w: np.ndarray, threshold: float) -> np.ndarray:
    b = (np.abs(w) > threshold).astype(np.int8)
    np.fill_diagonal(b, 0)
    return b


def markov_blanket(b: np.ndarray, y: int) -> tuple[int, ...]:
    parents = set(np.flatnonzero(b[:, y]).tolist())
    children = set(np.flatnonzero(b[y, :]).tolist())
    spouses = set()
    for c in children:
        spouses.update(np.flatnonzero(b[:, c]).tolist())
    return tuple(sorted((parents | children | spouses) - {y}))


def acyclic_threshold(w: np.ndarray, threshold: float) -> float:
    """Smallest threshold >= ``threshold`` whose binarization is acyclic.

    Candidates are the off-diagonal magnitudes above ``threshold``; raising
    the threshold only removes edges, so acyclicity is monotone and a
    bisection over the sorted candidates finds the smallest one.
    """
    if find_cycle_free(binarize(w, threshold)):
        return threshold
    mags = np.abs(w[~np.eye(w.shape[0], dtype=bool)])
    cand = np.unique(mags[mags > threshold])
    lo, hi = 0, cand.size - 1  # binarize(w, cand[-1]) has no edges
    while lo < hi:
        mid = (lo + hi) // 2
        if find_cycle_free(binarize(w, cand[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def extract_mb(w: np.ndarray, threshold: float, y_index: int | None = None) -> CausalGraph:
    """Binarize W (off-diagonal |w| > threshold) and read off MB(y).

    ``y_index`` defaults to the last column, where the influence variable
    is injected.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"W must be square, got {w.shape}")
    y = w.shape[0] - 1 if y_index is None else int(y_index)
    t = acyclic_threshold(w, threshold)
    b = binarize(w, t)
    return CausalGraph(b, y, markov_blanket(b, y), t, t != threshold)
