"""Loss terms of the joint objective."""

from __future__ import annotations

import numpy as np

from .. import diffcore as dc

BCE_EPS = 1e-7


def reconstruction_loss(a: np.ndarray, a_hat: dc.Tensor, lambda1: float) -> dc.Tensor:
    """Binary cross-entropy between A and the reconstruction, scaled by lambda1 / n^2."""
    a = np.asarray(a, dtype=np.float64)
    if a.shape != a_hat.shape:
        raise dc.DimensionError(f"reconstruction_loss: {a.shape} vs {a_hat.shape}")
    pc = dc.clip(a_hat, BCE_EPS, 1.0 - BCE_EPS)
    pos = dc.hadamard(dc.constant(a), dc.log(pc))
    neg = dc.hadamard(dc.constant(1.0 - a), dc.log(dc.add_scalar(dc.scalar_mul(pc, -1.0), 1.0)))
    return dc.scalar_mul(dc.sum(dc.add(pos, neg)), -lambda1 / a.size)


def listmle_loss(scores: dc.Tensor, order: np.ndarray) -> dc.Tensor:
    """Negative Plackett-Luce log-likelihood of ``order`` (best first)."""
    s = dc.gather_rows(scores, order)
    # sum_i s_pi(i) is permutation invariant, so subtract the plain sum
    return dc.add(dc.sum(dc.suffix_logsumexp(s)), dc.scalar_mul(dc.sum(scores), -1.0))


causal_listmle_loss = listmle_loss


def plackett_luce_logprob(scores: np.ndarray, order: np.ndarray) -> float:
    s = np.asarray(scores, dtype=np.float64)[np.asarray(order)]
    tail = np.logaddexp.accumulate(s[::-1])[::-1]
    return float(np.sum(s - tail))


def mse_loss(scores: dc.Tensor, y_std: np.ndarray) -> dc.Tensor:
    """Mean squared error against standardized influence scores."""
    y = np.asarray(y_std, dtype=np.float64).reshape(scores.shape)
    diff = dc.add(scores, dc.constant(-y))
    return dc.scalar_mul(dc.frobenius_sq(diff), 1.0 / y.size)


def regularizer(weights, lambda3: float) -> dc.Tensor:
    total = None
    for w in weights:
        f = dc.frobenius_sq(w)
        total = f if total is None else dc.add(total, f)
    if total is None:
        return dc.constant(0.0)
    return dc.scalar_mul(total, lambda3)


def acyclicity_penalty(w: dc.Tensor, alpha: float, rho: float) -> tuple[dc.Tensor, dc.Tensor]:
    """``alpha * h + rho / 2 * h^2`` and ``h`` itself."""
    h = dc.expm_trace(w)
    pen = dc.add(dc.scalar_mul(h, alpha), dc.scalar_mul(dc.hadamard(h, h), 0.5 * rho))
    return pen, h
