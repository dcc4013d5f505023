"""Pure numpy implementation of the fused prior/posterior attention kernel.

Rows are independent.  For row ``n`` with support bound ``g`` (1-based, so the
allowed source positions are ``j = 1..g``) the kernel returns

    beta_j = softmax_{j <= g}(score_j + log_prior_j(p, sigma))

which equals ``alpha_j * G_j / sum_k alpha_k * G_k`` with ``alpha`` the full
softmax of the scores and ``G`` the normalized prior: both softmax
normalizers cancel.  Variant codes: 0 gaussian, 1 laplace, 2 linear, 3 none.
"""

from __future__ import annotations

import numpy as np

GAUSSIAN, LAPLACE, LINEAR, NONE = 0, 1, 2, 3


def _positions(J: int) -> np.ndarray:
    return np.arange(1, J + 1, dtype=np.float64)[None, :]


def log_prior(p, sigma, g, J: int, variant: int) -> np.ndarray:
    """Unnormalized log prior per row, ``-inf`` beyond the support bound."""
    p = np.asarray(p, dtype=np.float64)[:, None]
    sigma = np.asarray(sigma, dtype=np.float64)[:, None]
    g = np.asarray(g, dtype=np.int64)[:, None]
    j = _positions(J)
    d = j - p
    if variant == GAUSSIAN:
        lp = -(d * d) / (2.0 * sigma * sigma)
    elif variant == LAPLACE:
        lp = -np.abs(d) / sigma
    elif variant == LINEAR:
        w = np.maximum(g + 1.0, p)
        with np.errstate(divide="ignore"):
            lp = np.log(np.maximum(1.0 - np.abs(d) / w, 0.0))
    elif variant == NONE:
        lp = np.zeros((p.shape[0], J))
    else:
        raise ValueError(f"unknown prior variant code {variant}")
    return np.where(j <= g, lp, -np.inf)


def posterior_forward(scores, p, sigma, g, variant: int) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    u = scores + log_prior(p, sigma, g, scores.shape[1], variant)
    m = u.max(axis=1, keepdims=True)
    e = np.exp(u - m)
    return e / e.sum(axis=1, keepdims=True)


def posterior_backward(beta, grad_beta, p, sigma, g, variant: int):
    """Return ``(d_scores, d_p, d_sigma)`` given upstream ``d_beta``."""
    beta = np.asarray(beta, dtype=np.float64)
    grad_beta = np.asarray(grad_beta, dtype=np.float64)
    du = beta * (grad_beta - (grad_beta * beta).sum(axis=1, keepdims=True))
    N, J = beta.shape
    p2 = np.asarray(p, dtype=np.float64)[:, None]
    s2 = np.asarray(sigma, dtype=np.float64)[:, None]
    g2 = np.asarray(g, dtype=np.int64)[:, None]
    j = _positions(J)
    d = j - p2
    inside = j <= g2
    if variant == GAUSSIAN:
        dlp_dp = d / (s2 * s2)
        dlp_ds = d * d / (s2 * s2 * s2)
    elif variant == LAPLACE:
        dlp_dp = np.sign(d) / s2
        dlp_ds = np.abs(d) / (s2 * s2)
    elif variant == LINEAR:
        w = np.maximum(g2 + 1.0, p2)
        a = np.abs(d)
        r = np.maximum(1.0 - a / w, 1e-300)
        dw_dp = (p2 > g2 + 1.0).astype(np.float64)
        dlp_dp = (np.sign(d) / w + a / (w * w) * dw_dp) / r
        dlp_ds = np.zeros((N, J))
    elif variant == NONE:
        return du, np.zeros(N), np.zeros(N)
    else:
        raise ValueError(f"unknown prior variant code {variant}")
    dlp_dp = np.where(inside, dlp_dp, 0.0)
    dlp_ds = np.where(inside, dlp_ds, 0.0)
    return du, (du * dlp_dp).sum(axis=1), (du * dlp_ds).sum(axis=1)
