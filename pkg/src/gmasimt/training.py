"""Teacher-forced training with Adam, learning-curve logging and corpus-level evaluation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import metrics
from .data import ParallelCorpus, Vocabulary, batches
from .model import GmaTransformer
from .numerics import no_grad
from .policy import simulate_streaming, teacher_forced_trace

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    clip: float = 1.0
    seed: int = 0
    eval_every: int = 1
    dev_limit: int = 50
    keep_best: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and lr >= 0 required")


class Adam:
    def __init__(self, params: dict, lr: float, beta1: float = 0.9, beta2: float = 0.98,
                 eps: float = 1e-9, clip: float | None = None):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps, self.clip = lr, beta1, beta2, eps, clip
        self.m = {k: np.zeros(p.shape) for k, p in params.items()}
        self.v = {k: np.zeros(p.shape) for k, p in params.items()}
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> float:
        """Apply one update; returns the gradient norm before clipping."""
        self.t += 1
        grads = {k: p.grad for k, p in self.params.items() if p.grad is not None}
        norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        if not math.isfinite(norm):
            raise TrainingDiverged(f"non-finite gradient norm at update {self.t}")
        factor = 1.0
        if self.clip and norm > self.clip:
            factor = self.clip / norm
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            g = g * factor
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            step = self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            self.params[k].data -= step
        return norm


@dataclass
class EpochLog:
    epoch: int
    step: int
    loss: float
    dev_loss: float | None = None
    dev_bleu: float | None = None
    dev_al: float | None = None


@dataclass
class DecodedCorpus:
    hypotheses: list[list[str]]
    traces: list
    references: list[list[str]]

    def report(self) -> dict[str, float]:
        delays = [t.word_delays for t in self.traces]
        lat = metrics.corpus_latency(delays, [t.source_length for t in self.traces])
        lat["bleu"] = metrics.bleu(self.hypotheses, self.references)
        return lat


def decode_corpus(model: GmaTransformer, corpus: ParallelCorpus, src_vocab: Vocabulary,
                  tgt_vocab: Vocabulary, delta: float | None = None,
                  limit: int | None = None) -> DecodedCorpus:
    n = len(corpus) if limit is None else min(limit, len(corpus))
    hyps, traces = [], []
    for k in range(n):
        ids, trace = simulate_streaming(model, src_vocab.encode(corpus.source[k]), delta)
        hyps.append(tgt_vocab.decode(ids))
        traces.append(trace)
    return DecodedCorpus(hyps, traces, corpus.target[:n])


@dataclass
class TeacherForcedStats:
    accuracy: float
    loss: float
    positions: list[np.ndarray] = field(default_factory=list)   # per sentence (T, I)
    delays: list[list[int]] = field(default_factory=list)       # per sentence, words only


def teacher_forced_stats(model: GmaTransformer, corpus: ParallelCorpus, src_vocab: Vocabulary,
                         tgt_vocab: Vocabulary, batch_size: int = 64) -> TeacherForcedStats:
    """Token accuracy (EOS included) and alignment tracks under teacher forcing."""
    correct = total = 0
    loss_sum = 0.0
    positions: list = [None] * len(corpus)
    delays: list = [None] * len(corpus)
    with no_grad():
        for b in batches(corpus, src_vocab, tgt_vocab, batch_size, seed=None):
            res = model.forward(b)
            pred = res.logits.data.argmax(axis=-1)
            mask = b.tgt_mask
            correct += int(((pred == b.tgt_out) & mask).sum())
            total += int(mask.sum())
            loss_sum += res.loss.item() * int(mask.sum())
            for row, k in enumerate(b.indices):
                n_words = len(corpus.target[k])
                positions[k] = res.p[row, :, :n_words]
                delays[k] = [int(v) for v in res.g[row, :n_words]]
    return TeacherForcedStats(correct / total, loss_sum / total, positions, delays)


def train(model: GmaTransformer, corpus: ParallelCorpus, src_vocab: Vocabulary,
          tgt_vocab: Vocabulary, config: TrainConfig, dev: ParallelCorpus | None = None,
          on_epoch: Callable[[EpochLog], None] | None = None) -> list[EpochLog]:
    """Train in place; returns one log row per epoch.

    With a dev corpus and ``keep_best`` the parameters of the epoch with the
    lowest teacher-forced dev loss are restored at the end.  A track that
    drifts below the words it needs cannot recover (no gradient reaches
    unseen source), so late collapses are real and selection guards them.
    """
    opt = Adam(model.params, config.lr, config.beta1, config.beta2, config.eps, config.clip)
    rng = np.random.default_rng(config.seed)
    drop_rng = np.random.default_rng(config.seed + 1) if model.config.dropout > 0 else None
    logs: list[EpochLog] = []
    step = 0
    best: tuple[float, dict] | None = None
    try:
        for epoch in range(1, config.epochs + 1):
            epoch_seed = int(rng.integers(0, 2**31 - 1))
            total = 0.0
            count = 0
            model.train_mode(drop_rng)
            for b in batches(corpus, src_vocab, tgt_vocab, config.batch_size, seed=epoch_seed,
                             max_positions=model.config.max_positions):
                opt.zero_grad()
                res = model.forward(b)
                loss = res.loss.item()
                if not math.isfinite(loss):
                    raise TrainingDiverged(f"non-finite loss at epoch {epoch}, update {step + 1}")
                res.loss.backward()
                opt.step()
                step += 1
                n = int(b.tgt_mask.sum())
                total += loss * n
                count += n
            row = EpochLog(epoch, step, total / max(count, 1))
            if dev is not None:
                model.train_mode(None)
                row.dev_loss = teacher_forced_stats(model, dev, src_vocab, tgt_vocab).loss
                if config.keep_best and (best is None or row.dev_loss < best[0]):
                    best = (row.dev_loss, model.state_dict())
            if dev is not None and config.eval_every and epoch % config.eval_every == 0:
                model.train_mode(None)
                rep = decode_corpus(model, dev, src_vocab, tgt_vocab, limit=config.dev_limit).report()
                row.dev_bleu, row.dev_al = rep["bleu"], rep["al"]
            logs.append(row)
            logger.info("epoch %d step %d loss %.4f dev_loss %s dev_bleu %s dev_al %s", row.epoch,
                        row.step, row.loss, row.dev_loss, row.dev_bleu, row.dev_al)
            if on_epoch is not None:
                on_epoch(row)
    finally:
        model.train_mode(None)
    if best is not None:
        model.load_state_dict(best[1])
    return logs


def effective_positions(p_tracks: np.ndarray) -> np.ndarray:
    """Per-step position that sets ``g``: the furthest track (``(T, I)`` -> ``(I,)``)."""
    return np.maximum.accumulate(np.asarray(p_tracks).max(axis=0))


def mean_position_error(positions: list[np.ndarray], offset: int = 0,
                        J: list[int] | None = None) -> float:
    """Mean ``|p_i - (i + offset)|`` over target words using the effective position.

    With source lengths given, targets and positions are both capped at ``J``
    (an aligned position lies within the source; past ``J`` only the clamped
    ``g`` matters).
    """
    errs = []
    for k, p in enumerate(positions):
        eff = effective_positions(p)
        i = np.arange(1, eff.size + 1) + offset
        if J is not None:
            i = np.minimum(i, J[k])
            eff = np.minimum(eff, J[k])
        errs.append(np.abs(eff - i))
    return float(np.concatenate(errs).mean())


__all__ = ["TrainConfig", "Adam", "EpochLog", "TrainingDiverged", "train", "decode_corpus",
           "teacher_forced_stats", "teacher_forced_trace", "mean_position_error", "effective_positions"]
