from __future__ import annotations

import numpy as np

from ..embed import FeatureMatrix
from ..graph import Graph
from ..ranking import Ranking
from .network import IcanModel, predict_scores, prepare


def rank_nodes(model: IcanModel, g: Graph, x: FeatureMatrix | np.ndarray) -> Ranking:
    """Score every node of ``g`` with a trained model (no influence labels needed)."""
    inputs = prepare(g, x, model.config, dense_adjacency=False)
    return Ranking.from_scores(predict_scores(model, inputs))
