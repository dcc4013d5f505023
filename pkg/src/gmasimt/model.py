"""Desk-scale transformer with Gaussian multi-head cross-attention.

Pre-norm encoder/decoder with sinusoidal positions.  Every decoder layer owns
alignment predictors: one-hidden-layer MLPs ``exp(V . tanh(W Q(s)) + b)`` giving
the incremental step of each of its tracks.  Heads then attend with the
posterior of their soft attention under the track's prior, truncated at
``floor(p + delta)``.

``predictor_input`` picks ``Q(s)``.  With ``"first_layer"`` (default) every
layer's predictors read the first layer's cross-attention query, which has seen
only the target prefix; positions then do not depend on ``delta`` and ``g`` is
pointwise non-decreasing in ``delta``.  With ``"layer"`` each layer reads its
own query, which already carries source context truncated by lower layers'
bounds, so a larger ``delta`` can move deeper tracks backwards.

Decoder position ``i`` reads ``y_{i-1}`` (``BOS`` at ``i = 1``) and predicts
``y_i``; its query summarizes the target prefix before any source is consulted
for step ``i``, so ``p_i`` can be computed before deciding to read or write.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .attention import (AlignmentState, GmaConfig, TrackLayout, attention_matrices,
                        gma_posterior, overall_output_positions, share_positions,
                        sigma_from_positions)
from .data import BOS, PAD
from .numerics import (Tensor, concat, cross_entropy, cumsum_lastdim, dropout, embedding, exp,
                       layer_norm, matmul, no_grad, relu, scale, softmax_lastdim, tanh)


PREDICTOR_INPUTS = ("first_layer", "layer")


@dataclass(frozen=True)
class ModelConfig:
    src_vocab: int
    tgt_vocab: int
    d_model: int = 32
    d_ff: int = 64
    layers: int = 2
    heads: int = 2
    encoder_layers: int | None = None
    max_positions: int = 64
    dropout: float = 0.0
    seed: int = 0
    encoder_causal: bool = True
    init_step: float = 1.0
    predictor_input: str = "first_layer"
    gma: GmaConfig = field(default_factory=GmaConfig)

    def __post_init__(self):
        if self.layers < 1 or self.heads < 1:
            raise ValueError("layers and heads must be >= 1")
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        if self.src_vocab < 5 or self.tgt_vocab < 5:
            raise ValueError("vocabularies need the 4 specials plus at least one word")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.init_step <= 0:
            raise ValueError("init_step must be positive")
        if self.predictor_input not in PREDICTOR_INPUTS:
            raise ValueError(f"predictor_input must be one of {PREDICTOR_INPUTS}")
        if isinstance(self.gma, dict):
            object.__setattr__(self, "gma", GmaConfig(**self.gma))

    @property
    def d_k(self) -> int:
        return self.d_model // self.heads

    @property
    def n_encoder_layers(self) -> int:
        return self.layers if self.encoder_layers is None else self.encoder_layers

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["gma"] = GmaConfig(**d.get("gma", {}))
        return cls(**d)


@dataclass
class WaitForSource:
    """Returned by :meth:`GmaTransformer.decode_step` when more source words are needed."""

    required: int


@dataclass
class StepOutput:
    logits: np.ndarray         # (V,) for the last target position
    p: np.ndarray              # (T,) aligned positions of the step, per track
    g_tracks: np.ndarray       # (T,)
    g: int                     # source words the step conditions on
    state: AlignmentState      # tracks for every position of the prefix


@dataclass
class ForwardResult:
    loss: Tensor
    logits: Tensor
    delta_p: np.ndarray        # (B, T, I)
    p: np.ndarray              # (B, T, I)
    sigma: np.ndarray          # (B, T, I)
    g_tracks: np.ndarray       # (B, T, I)
    g: np.ndarray              # (B, I)
    beta: list[np.ndarray]     # per layer (B, H, I, J)
    scores: list[np.ndarray]   # per layer (B, H, I, J), raw cross-attention scores
    p_tensor: Tensor | None = None

    def alignment_state(self, b: int, length: int, layout: TrackLayout) -> AlignmentState:
        return AlignmentState(self.delta_p[b, :, :length].copy(), self.p[b, :, :length].copy(),
                              self.sigma[b, :, :length].copy(), self.g_tracks[b, :, :length].copy(),
                              self.g[b, :length].copy(), layout)


def sinusoidal_positions(n: int, d: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    rates = np.exp(-math.log(10000.0) * (np.arange(0, d, 2) / d))
    out = np.zeros((n, d))
    out[:, 0::2] = np.sin(pos * rates)
    out[:, 1::2] = np.cos(pos * rates[: d // 2])
    return out


def _split_heads(x: Tensor, heads: int) -> Tensor:
    B, n, d = x.shape
    return x.reshape(B, n, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: Tensor) -> Tensor:
    B, H, n, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, n, H * dk)


class GmaTransformer:
    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.layout = TrackLayout.build(config.layers, config.heads, config.gma.sharing_mode)
        self.params: dict[str, Tensor] = {}
        init = self._init_params() if params is None else params
        for name, value in init.items():
            self.params[name] = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        expected = self._init_params(shapes_only=True)
        if set(expected) != set(self.params):
            missing = sorted(set(expected) ^ set(self.params))
            raise ValueError(f"parameter names do not match the config: {missing[:5]}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ValueError(f"parameter {name} has shape {self.params[name].shape}, "
                                 f"expected {shape}")
        self._pos = sinusoidal_positions(config.max_positions, config.d_model)
        self._dropout_rng: np.random.Generator | None = None

    # -- parameters ---------------------------------------------------------------------
    def _init_params(self, shapes_only: bool = False) -> dict:
        c = self.config
        rng = np.random.default_rng(c.seed)
        d, ff = c.d_model, c.d_ff
        shapes: dict[str, tuple] = {}
        inits: dict[str, str] = {}

        def add(name, shape, kind="linear"):
            shapes[name] = tuple(shape)
            inits[name] = kind

        add("src_emb", (c.src_vocab, d), "embed")
        add("tgt_emb", (c.tgt_vocab, d), "embed")
        for l in range(c.n_encoder_layers):
            pre = f"enc.{l}"
            for ln in ("ln1", "ln2"):
                add(f"{pre}.{ln}.g", (d,), "ones")
                add(f"{pre}.{ln}.b", (d,), "zeros")
            for w in ("wq", "wk", "wv", "wo"):
                add(f"{pre}.attn.{w}", (d, d))
            self._add_ffn(add, pre, d, ff)
        add("enc.ln.g", (d,), "ones")
        add("enc.ln.b", (d,), "zeros")
        for l in range(c.layers):
            pre = f"dec.{l}"
            for ln in ("ln1", "ln2", "ln3"):
                add(f"{pre}.{ln}.g", (d,), "ones")
                add(f"{pre}.{ln}.b", (d,), "zeros")
            for w in ("wq", "wk", "wv", "wo"):
                add(f"{pre}.self.{w}", (d, d))
                add(f"{pre}.cross.{w}", (d, d))
            self._add_ffn(add, pre, d, ff)
            T = self.layout.predictors[l]
            if T:
                add(f"{pre}.gma.W_p", (T, d, d))
                add(f"{pre}.gma.V_p", (T, d, 1), "zeros")
                add(f"{pre}.gma.b_p", (T, 1), "step_bias")
                if c.gma.sigma_mode == "predicted":
                    add(f"{pre}.gma.V_s", (T, d, 1), "zeros")
                    add(f"{pre}.gma.b_s", (T, 1), "zeros")
        add("dec.ln.g", (d,), "ones")
        add("dec.ln.b", (d,), "zeros")
        add("out.w", (d, c.tgt_vocab))
        add("out.b", (c.tgt_vocab,), "zeros")
        if shapes_only:
            return shapes
        out = {}
        for name, shape in shapes.items():
            kind = inits[name]
            if kind == "zeros":
                out[name] = np.zeros(shape)
            elif kind == "ones":
                out[name] = np.ones(shape)
            elif kind == "step_bias":
                out[name] = np.full(shape, math.log(c.init_step))
            elif kind == "embed":
                out[name] = rng.normal(0.0, d ** -0.5, size=shape)
            else:
                out[name] = rng.normal(0.0, shape[-2] ** -0.5, size=shape)
        return out

    @staticmethod
    def _add_ffn(add, pre, d, ff):
        add(f"{pre}.ffn.w1", (d, ff))
        add(f"{pre}.ffn.b1", (ff,), "zeros")
        add(f"{pre}.ffn.w2", (ff, d))
        add(f"{pre}.ffn.b2", (d,), "zeros")

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self.params):
            raise ValueError("state names do not match the model parameters")
        for k, v in state.items():
            if np.shape(v) != self.params[k].shape:
                raise ValueError(f"parameter {k} has shape {np.shape(v)}, expected {self.params[k].shape}")
            self.params[k].data[...] = v

    def with_delta(self, delta: float) -> "GmaTransformer":
        """A view sharing parameters but using another relaxation offset."""
        other = object.__new__(GmaTransformer)
        other.__dict__.update(self.__dict__)
        other.config = replace(self.config, gma=replace(self.config.gma, delta=float(delta)))
        return other

    def train_mode(self, rng: np.random.Generator | None) -> None:
        self._dropout_rng = rng

    # -- building blocks ----------------------------------------------------------------
    def _ln(self, x: Tensor, name: str) -> Tensor:
        return layer_norm(x, self.params[f"{name}.g"], self.params[f"{name}.b"])

    def _ffn(self, x: Tensor, pre: str) -> Tensor:
        P = self.params
        h = relu(matmul(x, P[f"{pre}.ffn.w1"]) + P[f"{pre}.ffn.b1"])
        return matmul(h, P[f"{pre}.ffn.w2"]) + P[f"{pre}.ffn.b2"]

    def _drop(self, x: Tensor) -> Tensor:
        return dropout(x, self.config.dropout, self._dropout_rng)

    def _self_attention(self, x: Tensor, pre: str, mask: np.ndarray) -> Tensor:
        P, H = self.params, self.config.heads
        q = _split_heads(matmul(x, P[f"{pre}.wq"]), H)
        k = _split_heads(matmul(x, P[f"{pre}.wk"]), H)
        v = _split_heads(matmul(x, P[f"{pre}.wv"]), H)
        scores = scale(matmul(q, k.transpose(0, 1, 3, 2)), 1.0 / math.sqrt(self.config.d_k))
        att = softmax_lastdim(scores, mask)
        return matmul(_merge_heads(matmul(att, v)), P[f"{pre}.wo"])

    # -- encoder ------------------------------------------------------------------------
    def encode_batch(self, src: np.ndarray, src_len: np.ndarray) -> Tensor:
        c = self.config
        src = np.asarray(src, dtype=np.int64)
        B, J = src.shape
        if J > c.max_positions:
            raise ValueError(f"source length {J} exceeds max_positions={c.max_positions}")
        x = scale(embedding(self.params["src_emb"], src), math.sqrt(c.d_model)) + self._pos[:J]
        key_ok = np.arange(J)[None, :] < np.asarray(src_len)[:, None]
        mask = key_ok[:, None, None, :]
        if c.encoder_causal:
            mask = mask & np.tril(np.ones((J, J), dtype=bool))[None, None]
        for l in range(c.n_encoder_layers):
            pre = f"enc.{l}"
            x = x + self._drop(self._self_attention(self._ln(x, f"{pre}.ln1"), f"{pre}.attn", mask))
            x = x + self._drop(self._ffn(self._ln(x, f"{pre}.ln2"), pre))
        return self._ln(x, "enc.ln")

    def encode(self, source_prefix) -> Tensor:
        """Hidden states ``(J', d_model)`` for a non-empty prefix of source ids."""
        ids = np.asarray(source_prefix, dtype=np.int64)
        if ids.ndim != 1 or ids.size == 0:
            raise ValueError("encode needs a non-empty 1-D prefix")
        if ids.min() < 0 or ids.max() >= self.config.src_vocab:
            raise IndexError("unknown source token id")
        with no_grad():
            z = self.encode_batch(ids[None, :], np.array([ids.size]))
        return z.reshape(ids.size, self.config.d_model)

    # -- decoder ------------------------------------------------------------------------
    def _predict_tracks(self, q: Tensor, layer: int):
        """Incremental steps, positions and sigmas of the tracks owned by ``layer``.

        ``q`` is ``(B, I, d)``; results are ``(B, T_l, I)`` tensors.
        """
        c, P = self.config, self.params
        pre = f"dec.{layer}.gma"
        B, I, d = q.shape
        hidden = tanh(matmul(q.reshape(B, 1, I, d), P[f"{pre}.W_p"]))        # (B, T, I, d)
        raw = matmul(hidden, P[f"{pre}.V_p"])                                # (B, T, I, 1)
        raw = raw.reshape(raw.shape[:-1]) + P[f"{pre}.b_p"]
        if c.gma.position_mode == "incremental":
            step = exp(raw)
            p = cumsum_lastdim(step) + 1.0
        else:
            p = exp(raw) + 1.0
            prev = np.concatenate([np.ones(p.shape[:-1] + (1,)), p.data[..., :-1]], axis=-1)
            step = Tensor(p.data - prev)
        if c.gma.sigma_mode == "predicted":
            s_raw = matmul(hidden, P[f"{pre}.V_s"])
            sigma = exp(s_raw.reshape(s_raw.shape[:-1]) + P[f"{pre}.b_s"])
        else:
            sigma = sigma_from_positions(p, c.gma.sigma_mode)
        return step, p, sigma

    def _bounds(self, p: np.ndarray, J_avail: np.ndarray, complete: bool):
        """Integer support bounds for tracks ``(B, T, I)``; also the unclamped last-step need."""
        raw = np.maximum(np.floor(p + self.config.gma.delta).astype(np.int64), 1)
        raw = np.maximum.accumulate(raw, axis=-1)
        g = np.minimum(raw, J_avail[:, None, None])
        need = int(raw[..., -1].max())
        return g, need

    def _decode(self, z: Tensor, J_avail: np.ndarray, tgt_in: np.ndarray, complete: bool,
                stop_on_wait: bool):
        c, P, L, H = self.config, self.params, self.config.layers, self.config.heads
        B, I = tgt_in.shape
        if I > c.max_positions:
            raise ValueError(f"target length {I} exceeds max_positions={c.max_positions}")
        J = z.shape[1]
        h = scale(embedding(P["tgt_emb"], tgt_in), math.sqrt(c.d_model)) + self._pos[:I]
        causal = np.tril(np.ones((I, I), dtype=bool))[None, None]
        steps, ps, sigmas, gs = [], [], [], []
        betas, all_scores = [], []
        for l in range(L):
            pre = f"dec.{l}"
            h = h + self._drop(self._self_attention(self._ln(h, f"{pre}.ln1"), f"{pre}.self", causal))
            s = self._ln(h, f"{pre}.ln2")
            q = matmul(s, P[f"{pre}.cross.wq"])
            if l == 0:
                q_first = q
            if self.layout.predictors[l]:
                q_pred = q_first if c.predictor_input == "first_layer" else q
                step, p, sigma = self._predict_tracks(q_pred, l)
                g_t, need = self._bounds(p.data, J_avail, complete)
                if stop_on_wait and not complete and need > int(J_avail.max()):
                    return WaitForSource(need)
                steps.append(step)
                ps.append(p)
                sigmas.append(sigma)
                gs.append(g_t)
            p_all = ps[0] if len(ps) == 1 else concat(ps, axis=1)
            s_all = sigmas[0] if len(sigmas) == 1 else concat(sigmas, axis=1)
            g_all = gs[0] if len(gs) == 1 else np.concatenate(gs, axis=1)
            tracks = self.layout.head_track[l]
            p_h = p_all[:, tracks]                                            # (B, H, I)
            sig_h = s_all[:, tracks]
            g_h = g_all[:, tracks]
            qh = _split_heads(q, H)
            kh = _split_heads(matmul(z, P[f"{pre}.cross.wk"]), H)
            vh = _split_heads(matmul(z, P[f"{pre}.cross.wv"]), H)
            scores = scale(matmul(qh, kh.transpose(0, 1, 3, 2)), 1.0 / math.sqrt(c.d_k))
            beta = gma_posterior(scores, p_h, sig_h, g_h, c.gma.prior_variant)
            ctx = matmul(_merge_heads(matmul(beta, vh)), P[f"{pre}.cross.wo"])
            h = h + self._drop(ctx)
            h = h + self._drop(self._ffn(self._ln(h, f"{pre}.ln3"), pre))
            betas.append(beta.data)
            all_scores.append(scores.data)
        logits = matmul(self._ln(h, "dec.ln"), P["out.w"]) + P["out.b"]
        step_np = np.concatenate([t.data for t in steps], axis=1)
        p_cat = ps[0] if len(ps) == 1 else concat(ps, axis=1)
        sig_np = np.concatenate([t.data for t in sigmas], axis=1)
        g_tracks = np.concatenate(gs, axis=1)
        g = overall_output_positions(g_tracks)
        return logits, step_np, p_cat, sig_np, g_tracks, g, betas, all_scores

    def forward(self, batch) -> ForwardResult:
        """Teacher-forced pass over a padded :class:`~gmasimt.data.Batch`; full source known."""
        z = self.encode_batch(batch.src, batch.src_len)
        out = self._decode(z, np.asarray(batch.src_len), batch.tgt_in, complete=True,
                           stop_on_wait=False)
        logits, step, p, sigma, g_tracks, g, betas, scores = out
        loss = cross_entropy(logits, batch.tgt_out, batch.tgt_mask)
        return ForwardResult(loss, logits, step, p.data, sigma, g_tracks, g, betas, scores, p)

    def decode_train(self, x, y):
        """Loss, alignment tracks and attention matrices for one sentence pair (teacher forced)."""
        from .data import make_batch

        if len(x) == 0 or len(y) == 0:
            raise ValueError("empty sequence")
        batch = make_batch([list(x)], [list(y)])
        res = self.forward(batch)
        I = batch.tgt_in.shape[1]
        state = res.alignment_state(0, I, self.layout)
        p_h = share_positions(state.p, self.layout)
        s_h = share_positions(state.sigma, self.layout)
        g_h = share_positions(state.g_tracks, self.layout)
        mats = [attention_matrices(res.scores[l][0], p_h[l], s_h[l], g_h[l],
                                   self.config.gma.prior_variant)
                for l in range(self.config.layers)]
        return res.loss, state, mats

    def decode_step(self, source_received, target_prefix, source_complete: bool):
        """One incremental decoding step.

        ``target_prefix`` starts with BOS and holds every token written so far;
        the step predicts the next one.  Returns :class:`WaitForSource` when a
        track needs more source than has been received and the source is still
        streaming, else :class:`StepOutput`.
        """
        src = np.asarray(source_received, dtype=np.int64)
        prefix = np.asarray(target_prefix, dtype=np.int64)
        if prefix.ndim != 1 or prefix.size == 0 or prefix[0] != BOS:
            raise ValueError("target prefix must start with BOS")
        if src.size == 0:
            if source_complete:
                raise ValueError("empty source")
            return WaitForSource(1)
        with no_grad():
            z = self.encode(src).reshape(1, src.size, self.config.d_model)
            out = self._decode(z, np.array([src.size]), prefix[None, :], source_complete,
                               stop_on_wait=True)
        if isinstance(out, WaitForSource):
            return out
        logits, step, p, sigma, g_tracks, g, _, _ = out
        state = AlignmentState(step[0], p.data[0], sigma[0], g_tracks[0], g[0], self.layout)
        return StepOutput(logits.data[0, -1], p.data[0, :, -1], g_tracks[0, :, -1],
                          int(g[0, -1]), state)


def build_model(config: ModelConfig) -> GmaTransformer:
    return GmaTransformer(config)


def teacher_forced_alignment(model: GmaTransformer, x_ids, y_ids) -> AlignmentState:
    with no_grad():
        _, state, _ = model.decode_train(x_ids, y_ids)
    return state


__all__ = ["ModelConfig", "GmaTransformer", "ForwardResult", "StepOutput", "WaitForSource",
           "build_model", "teacher_forced_alignment", "sinusoidal_positions", "PAD"]
