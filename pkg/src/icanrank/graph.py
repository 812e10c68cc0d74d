"""Simple undirected graphs, edge-list I/O and adjacency views."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed or empty edge-list input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    ``edges`` holds sorted ``(i, j)`` pairs with ``i < j``. Use
    :meth:`from_edges` to build one from arbitrary pairs.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    node_labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        prev = None
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"invalid edge ({i}, {j}) for n={self.n}")
            if prev is not None and (i, j) <= prev:
                raise ValueError("edges must be sorted and unique")
            prev = (i, j)
        if self.node_labels is not None and len(self.node_labels) != self.n:
            raise ValueError("node_labels length must equal n")

    @classmethod
    def from_edges(
        cls,
        n: int,
        pairs: Iterable[tuple[int, int]],
        node_labels: Sequence[str] | None = None,
    ) -> "Graph":
        """Build a graph, dropping self-loops and duplicate/reversed pairs."""
        es = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                continue
            es.add((a, b) if a < b else (b, a))
        labels = tuple(node_labels) if node_labels is not None else None
        return cls(n, tuple(sorted(es)), labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return tuple(tuple(sorted(x)) for x in nbrs)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the symmetric adjacency, neighbors sorted."""
        deg = self.degrees
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.fromiter(
            (v for nb in self.neighbors for v in nb), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.edges:
            e = self.edge_array
            np.add.at(deg, e[:, 0], 1)
            np.add.at(deg, e[:, 1], 1)
        return deg

    def adjacency(self) -> np.ndarray:
        """Dense binary adjacency matrix (float64)."""
        a = np.zeros((self.n, self.n))
        if self.edges:
            e = self.edge_array
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        return a

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``v`` renamed to ``perm[v]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        return Graph.from_edges(self.n, ((perm[i], perm[j]) for i, j in self.edges))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())


@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray
    mean_k: Fraction
    mean_k2: Fraction


def degree_stats(g: Graph) -> DegreeStats:
    """Exact degree moments <k> and <k^2>."""
    if g.n < 1:
        raise ValueError("degree_stats needs at least one node")
    deg = g.degrees.copy()
    s1 = int(deg.sum())
    s2 = int((deg * deg).sum())
    return DegreeStats(deg, Fraction(s1, g.n), Fraction(s2, g.n))


def normalize_adjacency(g: Graph) -> np.ndarray:
    """Symmetric GCN propagation matrix D^-1/2 (A + I) D^-1/2."""
    a = g.adjacency()
    a[np.diag_indices(g.n)] += 1.0
    dinv = 1.0 / np.sqrt(a.sum(axis=1))
    return a * dinv[:, None] * dinv[None, :]


def _order_tokens(tokens: list[str]) -> list[str]:
    try:
        return sorted(tokens, key=int)
    except ValueError:
        return tokens


def parse_edge_list(lines: Iterable[str], source: str = "<input>") -> Graph:
    """Parse whitespace-separated edge lines into a :class:`Graph`.

    Lines starting with ``#`` or ``%`` are comments; a third column (weight)
    is accepted and ignored. Tokens are reindexed to ``0..n-1``: numerically
    when every token is an integer, otherwise in order of first appearance.
    """
    raw: list[tuple[str, str]] = []
    seen: dict[str, None] = {}
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s[0] in "#%":
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"{source}:{lineno}: expected 2 or 3 fields, got {len(parts)}")
        if len(parts) == 3:
            try:
                float(parts[2])
            except ValueError:
                raise GraphFormatError(f"{source}:{lineno}: non-numeric weight {parts[2]!r}") from None
        a, b = parts[0], parts[1]
        raw.append((a, b))
        seen.setdefault(a)
        seen.setdefault(b)
    if not raw:
        raise GraphFormatError(f"{source}: no edges found")
    labels = _order_tokens(list(seen))
    index = {tok: i for i, tok in enumerate(labels)}
    return Graph.from_edges(len(labels), ((index[a], index[b]) for a, b in raw), labels)


def load_edge_list(path: str | os.PathLike, symmetrize: bool = True) -> Graph:
    """Read an edge-list file. Input direction is always discarded.

    ``symmetrize=False`` is rejected: the graph model is undirected only.
    """
    if not symmetrize:
        raise ValueError("directed graphs are not supported; use symmetrize=True")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh, source=os.fspath(path))


def format_edge_list(g: Graph, header: str | None = None) -> str:
    out = []
    if header:
        out.extend(f"# {h}" for h in header.splitlines())
    out.extend(f"{i} {j}" for i, j in g.edges)
    return "\n".join(out) + "\n"


def save_edge_list(g: Graph, path: str | os.PathLike, header: str | None = None) -> None:
    """Write 0-based integer pairs, sorted lexicographically."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g, header))


def karate_club() -> Graph:
    """Zachary's karate club network bundled with the package."""
    from importlib.resources import files

    text = files("icanrank").joinpath("data/karate.edges").read_text(encoding="utf-8")
    return parse_edge_list(text.splitlines(), source="karate.edges")


def from_networkx(nxg) -> Graph:
    nodes = list(nxg.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    return Graph.from_edges(
        len(nodes), ((index[u], index[v]) for u, v in nxg.edges()), [str(v) for v in nodes]
    )
