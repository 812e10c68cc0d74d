"""Score vectors turned into rankings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Ranking:
    """Scores with their induced ranks; larger score means a lower rank number.

    Ties are broken by ascending node index, so ``ranks`` is always a
    bijection on ``[0, n)``.
    """

    scores: np.ndarray
    order: np.ndarray  # node ids, best first
    ranks: np.ndarray  # ranks[order[i]] == i

    @classmethod
    def from_scores(cls, scores) -> "Ranking":
        s = np.asarray(scores, dtype=np.float64).ravel()
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        order = np.lexsort((np.arange(s.size), -s))
        ranks = np.empty(s.size, dtype=np.int64)
        ranks[order] = np.arange(s.size)
        return cls(s, order, ranks)

    @property
    def n(self) -> int:
        return self.scores.size

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]
