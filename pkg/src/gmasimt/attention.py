"""Gaussian multi-head attention: alignment tracks, priors and posterior attention.

Positions are 1-based fractional source positions.  A *track* is one
predicted alignment sequence ``p_1..p_I``; depending on the sharing mode a
track serves one head, all heads of a layer, one head index across layers, or
every head in the decoder.  Each head truncates its prior at its own track's
bound ``floor(p + delta)``; the decoder as a whole must have read
``max`` over tracks of that bound before writing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import (Tensor, _make, _unbroadcast, absolute, cumsum_lastdim, exp, matmul,
                       relu, scale, softmax_lastdim, tanh)

PRIOR_VARIANTS = ("gaussian", "laplace", "linear", "none")
SIGMA_MODES = {"half": 2.0, "full": 1.0, "third": 3.0, "predicted": None}
SHARING_MODES = ("all_independent", "share_heads", "share_layers", "share_all")
POSITION_MODES = ("incremental", "absolute")

_VARIANT_CODES = {"gaussian": kernels.GAUSSIAN, "laplace": kernels.LAPLACE,
                  "linear": kernels.LINEAR, "none": kernels.NONE}


@dataclass(frozen=True)
class GmaConfig:
    delta: float = 1.0
    prior_variant: str = "gaussian"
    sigma_mode: str = "half"
    sharing_mode: str = "share_heads"
    position_mode: str = "incremental"

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be a finite non-negative number, got {self.delta}")
        for name, allowed in (("prior_variant", PRIOR_VARIANTS), ("sigma_mode", SIGMA_MODES),
                              ("sharing_mode", SHARING_MODES), ("position_mode", POSITION_MODES)):
            value = getattr(self, name)
            if value not in allowed:
                raise ValueError(f"{name} must be one of {sorted(allowed)}, got {value!r}")


@dataclass
class AlignmentState:
    """Per-sentence alignment tracks.  Arrays are indexed ``[track, step]``."""

    delta_p: np.ndarray
    p: np.ndarray
    sigma: np.ndarray
    g_tracks: np.ndarray
    g: np.ndarray
    layout: "TrackLayout"

    def layer_positions(self, layer: int) -> np.ndarray:
        """Mean aligned position over the tracks used by ``layer``'s heads."""
        tracks = np.unique(self.layout.head_track[layer])
        return self.p[tracks].mean(axis=0)


@dataclass
class AttentionMatrices:
    """Soft attention, normalized prior and posterior, each ``[head, step, source]``."""

    alpha: np.ndarray
    prior: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class TrackLayout:
    """Which predictor output feeds which (layer, head).

    ``predictors[l]`` is the number of tracks predicted from layer ``l``'s
    query (0 when that layer reuses tracks predicted lower down) and
    ``first_track[l]`` the index of its first track.
    """

    layers: int
    heads: int
    mode: str
    head_track: np.ndarray = field(repr=False)
    predictors: tuple[int, ...] = ()
    first_track: tuple[int, ...] = ()

    @property
    def n_tracks(self) -> int:
        return int(sum(self.predictors))

    @classmethod
    def build(cls, layers: int, heads: int, mode: str) -> "TrackLayout":
        if layers < 1 or heads < 1:
            raise ValueError("need at least one layer and one head")
        if mode == "all_independent":
            preds = [heads] * layers
            head_track = np.arange(layers * heads).reshape(layers, heads)
        elif mode == "share_heads":
            preds = [1] * layers
            head_track = np.repeat(np.arange(layers)[:, None], heads, axis=1)
        elif mode == "share_layers":
            preds = [heads] + [0] * (layers - 1)
            head_track = np.tile(np.arange(heads)[None, :], (layers, 1))
        elif mode == "share_all":
            preds = [1] + [0] * (layers - 1)
            head_track = np.zeros((layers, heads), dtype=np.int64)
        else:
            raise ValueError(f"unknown sharing mode {mode!r}")
        first = tuple(int(x) for x in np.concatenate([[0], np.cumsum(preds)[:-1]]))
        return cls(layers, heads, mode, head_track.astype(np.int64), tuple(preds), first)


def track_count(layers: int, heads: int, mode: str) -> int:
    return TrackLayout.build(layers, heads, mode).n_tracks


# -- soft attention ---------------------------------------------------------------------

def soft_attention(queries: Tensor, keys: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """``softmax_j(q_i . k_j / sqrt(d_k))`` with optional allowed-entry mask."""
    d_k = queries.shape[-1]
    if d_k < 1:
        raise ValueError("d_k must be positive")
    scores = scale(matmul(queries, keys.transpose(_swap_last(keys.ndim))), 1.0 / math.sqrt(d_k))
    return softmax_lastdim(scores, mask)


def _swap_last(ndim: int) -> tuple[int, ...]:
    axes = list(range(ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return tuple(axes)


# -- alignment prediction ------------------------------------------------------------------

def predict_incremental_step(q_prev: Tensor, W_p: Tensor, V_p: Tensor,
                             bias: Tensor | None = None) -> Tensor:
    """``exp(V_p . tanh(q_prev @ W_p) [+ bias])``; strictly positive.

    Shapes follow matmul broadcasting: ``q_prev (..., d)``, ``W_p (..., d, h)``,
    ``V_p (..., h, 1)``; the trailing unit axis is dropped.
    """
    hidden = tanh(matmul(q_prev, W_p))
    if V_p.ndim == 1:
        V_p = V_p.reshape(V_p.shape[0], 1)
    raw = matmul(hidden, V_p)
    raw = raw.reshape(raw.shape[:-1])
    if bias is not None:
        raw = raw + bias
    return exp(raw)


def aligned_positions(delta_p: Tensor) -> Tensor:
    """``p_i = 1 + sum_{k<=i} delta_p_k`` along the last axis (``p_0 = 1``)."""
    if np.any(delta_p.data <= 0):
        raise ValueError("incremental steps must be strictly positive")
    return cumsum_lastdim(delta_p) + 1.0


def sigma_from_positions(p: Tensor, sigma_mode: str) -> Tensor:
    divisor = SIGMA_MODES[sigma_mode]
    if divisor is None:
        raise ValueError("predicted sigma comes from the predictor, not from p")
    return scale(p, 1.0 / divisor)


def output_positions(p, delta: float, J: int, source_complete: bool = True) -> np.ndarray:
    """Integer output positions ``floor(p + delta)`` along the last axis.

    Lower-clamped to 1 and made non-decreasing.  With ``source_complete`` the
    values are also capped at ``J``; otherwise values above ``J`` mean the
    caller must wait for more source.  ``J`` may be an array broadcastable
    against ``p.shape[:-1]`` (one length per sequence).
    """
    p = np.asarray(p, dtype=np.float64)
    g = np.floor(p + delta).astype(np.int64)
    g = np.maximum(g, 1)
    if source_complete:
        g = np.minimum(g, np.asarray(J)[..., None] if np.ndim(J) else J)
    return np.maximum.accumulate(g, axis=-1)


def share_positions(track_values: np.ndarray, layout: TrackLayout) -> np.ndarray:
    """Spread per-track values ``(..., T, I)`` to ``(..., L, H, I)``."""
    track_values = np.asarray(track_values)
    if track_values.shape[-2] != layout.n_tracks:
        raise ValueError(f"expected {layout.n_tracks} tracks, got {track_values.shape[-2]}")
    return track_values[..., layout.head_track, :]


def overall_output_positions(g_tracks: np.ndarray) -> np.ndarray:
    """Decoder-level ``g(i)``: the furthest bound over tracks, kept non-decreasing."""
    g = np.asarray(g_tracks).max(axis=-2)
    return np.maximum.accumulate(g, axis=-1)


# -- priors and posteriors (reference, one row at a time) -----------------------------------------

def prior_distribution(p_i: float, sigma_i: float, g_i: int, J: int,
                       variant: str = "gaussian") -> np.ndarray:
    """Normalized prior over ``j = 1..J``; exactly zero for ``j > g_i``."""
    if g_i < 1:
        raise ValueError("support bound must be >= 1")
    if variant not in _VARIANT_CODES:
        raise ValueError(f"unknown prior variant {variant!r}")
    g_i = min(int(g_i), J)
    j = np.arange(1, J + 1, dtype=np.float64)
    d = j - p_i
    if variant == "gaussian":
        w = np.exp(-(d * d) / (2.0 * sigma_i * sigma_i))
    elif variant == "laplace":
        w = np.exp(-np.abs(d) / sigma_i)
    elif variant == "linear":
        width = max(g_i + 1.0, p_i)
        w = np.maximum(0.0, 1.0 - np.abs(d) / width)
    else:
        w = np.ones(J)
    w[g_i:] = 0.0
    return w / w.sum()


def posterior_attention(alpha_row, prior_row, g_i: int) -> np.ndarray:
    """``alpha * G`` renormalized over ``j <= g_i``."""
    alpha_row = np.asarray(alpha_row, dtype=np.float64)
    prod = alpha_row * np.asarray(prior_row, dtype=np.float64)
    prod[int(g_i):] = 0.0
    total = prod.sum()
    if not total > 0:
        raise ValueError("degenerate posterior row: no mass within the support bound")
    return prod / total


def gma_context(beta: Tensor, values: Tensor) -> Tensor:
    """Context vectors ``c_i = sum_j beta_ij v_j``."""
    if beta.shape[-1] != values.shape[-2]:
        raise ValueError(f"beta {beta.shape} does not match values {values.shape}")
    return matmul(beta, values)


def attention_matrices(scores, p, sigma, g, variant: str = "gaussian") -> AttentionMatrices:
    """Numpy view of alpha / prior / beta for analysis; arrays are ``(..., I, J)``."""
    scores = np.asarray(scores, dtype=np.float64)
    J = scores.shape[-1]
    lead = scores.shape[:-1]
    flat_s = scores.reshape(-1, J)
    flat_p = np.broadcast_to(p, lead).reshape(-1)
    flat_sig = np.broadcast_to(sigma, lead).reshape(-1)
    flat_g = np.broadcast_to(g, lead).reshape(-1)
    e = np.exp(flat_s - flat_s.max(axis=1, keepdims=True))
    alpha = e / e.sum(axis=1, keepdims=True)
    prior = np.stack([prior_distribution(flat_p[n], flat_sig[n], flat_g[n], J, variant)
                      for n in range(flat_s.shape[0])]) if flat_s.size else np.zeros((0, J))
    beta = kernels.posterior_forward(flat_s, flat_p, flat_sig, np.minimum(flat_g, J),
                                     _VARIANT_CODES[variant])
    return AttentionMatrices(alpha.reshape(scores.shape), prior.reshape(scores.shape),
                             beta.reshape(scores.shape))


# -- differentiable posterior -------------------------------------------------------------------

def gma_posterior(scores: Tensor, p: Tensor, sigma: Tensor, g, variant: str = "gaussian",
                  backend: str | None = None) -> Tensor:
    """Posterior attention from raw scores, fused into one graph node.

    ``scores`` is ``(..., J)``; ``p``, ``sigma`` and the integer bounds ``g``
    are ``(...)``.  ``g`` is a hard mask: no gradient flows through it.
    """
    code = _VARIANT_CODES[variant]
    J = scores.shape[-1]
    lead = scores.shape[:-1]
    g = np.broadcast_to(np.minimum(np.asarray(g, dtype=np.int64), J), lead)
    if np.any(g < 1):
        raise ValueError("support bound must be >= 1")
    flat_s = scores.data.reshape(-1, J)
    flat_p = np.broadcast_to(p.data, lead).reshape(-1)
    flat_sig = np.broadcast_to(sigma.data, lead).reshape(-1)
    flat_g = g.reshape(-1)
    beta = kernels.posterior_forward(flat_s, flat_p, flat_sig, flat_g, code, backend)
    p_shape, s_shape = p.shape, sigma.shape

    def backward(grad):
        d_s, d_p, d_sig = kernels.posterior_backward(beta, grad.reshape(-1, J), flat_p, flat_sig,
                                                     flat_g, code, backend)
        if code == kernels.NONE:
            return d_s.reshape(scores.shape), None, None
        return (d_s.reshape(scores.shape),
                _reduce_to(d_p.reshape(lead), p_shape),
                _reduce_to(d_sig.reshape(lead), s_shape))

    parents = (scores, p, sigma) if code != kernels.NONE else (scores, p.detach(), sigma.detach())
    return _make(beta.reshape(scores.shape), parents, backward, "gma_posterior")


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return _unbroadcast(grad, shape)


def gma_posterior_composed(scores: Tensor, p: Tensor, sigma: Tensor, g,
                           variant: str = "gaussian", key_mask: np.ndarray | None = None) -> Tensor:
    """The same posterior built from primitive ops: full softmax, prior, product, renormalize.

    Slower and numerically naive; kept as an independent route for checking
    :func:`gma_posterior`.
    """
    J = scores.shape[-1]
    lead = scores.shape[:-1]
    g = np.broadcast_to(np.minimum(np.asarray(g, dtype=np.int64), J), lead)
    alpha = softmax_lastdim(scores, key_mask)
    j = np.arange(1, J + 1, dtype=np.float64)
    support = (j <= g[..., None]).astype(np.float64)
    pe = p.reshape(p.shape + (1,))
    d = Tensor(j) - pe
    if variant == "gaussian":
        se = sigma.reshape(sigma.shape + (1,))
        weights = exp(-(d * d) / (se * se * 2.0))
    elif variant == "laplace":
        se = sigma.reshape(sigma.shape + (1,))
        weights = exp(-absolute(d) / se)
    elif variant == "linear":
        bound = Tensor(g[..., None] + 1.0)
        width = bound + relu(pe - bound)
        weights = relu(1.0 - absolute(d) / width)
    elif variant == "none":
        weights = Tensor(np.ones(lead + (J,)))
    else:
        raise ValueError(f"unknown prior variant {variant!r}")
    weights = weights * support
    prior = weights / weights.sum(axis=-1, keepdims=True)
    unnorm = alpha * prior
    return unnorm / unnorm.sum(axis=-1, keepdims=True)
