"""Latency, quality and alignment metrics.

Delays ``g`` are 1-based counts of source words read before each target word,
with ``g(0) = 0`` implied.  ``J`` is the source length and ``I`` the number of
target words the delays describe (by default ``len(g)``).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _check_delays(g: Sequence[int], J: int) -> np.ndarray:
    g = np.asarray(g, dtype=np.int64)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("delays must be a non-empty 1-D sequence")
    if J < 1:
        raise ValueError("source length must be >= 1")
    return g


def average_lagging(g: Sequence[int], J: int, I: int | None = None) -> float:
    """Mean lag behind the ideal diagonal up to the first step that has read all ``J`` words."""
    g = _check_delays(g, J)
    I = g.size if I is None else I
    full = np.flatnonzero(g >= J)
    tau = int(full[0]) + 1 if full.size else g.size
    i = np.arange(tau)
    return float(np.mean(g[:tau] - i * (J / I)))


def consecutive_wait(g: Sequence[int]) -> float:
    """Average number of source words read per read burst."""
    g = np.asarray(g, dtype=np.int64)
    diffs = np.diff(np.concatenate([[0], g]))
    bursts = int((diffs > 0).sum())
    if bursts == 0:
        raise ValueError("consecutive wait undefined: no source word was ever read")
    return float(diffs.sum() / bursts)


def average_proportion(g: Sequence[int], J: int, I: int | None = None) -> float:
    g = _check_delays(g, J)
    I = g.size if I is None else I
    return float(g.sum() / (J * I))


def differentiable_average_lagging(g: Sequence[int], J: int, I: int | None = None) -> float:
    """Lag with an internal clock that advances at least ``J / I`` per target word."""
    g = _check_delays(g, J)
    I = g.size if I is None else I
    rate = J / I
    total = 0.0
    prev = 0.0
    for i, gi in enumerate(g):
        d = float(gi) if i == 0 else max(float(gi), prev + rate)
        total += d - i * rate
        prev = d
    return total / g.size


LATENCY_COLUMNS = ("cw", "ap", "al", "dal")


def latency_scores(g: Sequence[int], J: int, I: int | None = None) -> dict[str, float]:
    return {"cw": consecutive_wait(g), "ap": average_proportion(g, J, I),
            "al": average_lagging(g, J, I), "dal": differentiable_average_lagging(g, J, I)}


def corpus_latency(delays: Iterable[Sequence[int]], source_lengths: Iterable[int]) -> dict[str, float]:
    """Sentence-level latency metrics averaged over the corpus (sentences without words skipped)."""
    sums = dict.fromkeys(LATENCY_COLUMNS, 0.0)
    n = 0
    for g, J in zip(delays, source_lengths):
        if len(g) == 0:
            continue
        for k, v in latency_scores(g, J).items():
            sums[k] += v
        n += 1
    if n == 0:
        raise ValueError("no sentence with at least one target word")
    return {k: v / n for k, v in sums.items()}


# -- BLEU ------------------------------------------------------------------------------------

@dataclass
class BleuScore:
    score: float
    precisions: list[float]
    bp: float
    hyp_len: int
    ref_len: int


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[k:k + n]) for k in range(len(tokens) - n + 1))


def bleu_details(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                 max_n: int = 4) -> BleuScore:
    """Unsmoothed corpus BLEU over pre-tokenized text, single reference."""
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    c = r = 0
    for hyp, ref in zip(hypotheses, references):
        c += len(hyp)
        r += len(ref)
        for n in range(1, max_n + 1):
            h = _ngrams(hyp, n)
            matches[n - 1] += sum((h & _ngrams(ref, n)).values())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    bp = 1.0 if c > r else (math.exp(1.0 - r / c) if c else 0.0)
    if min(matches) == 0:
        return BleuScore(0.0, precisions, bp, c, r)
    log_p = sum(math.log(p) for p in precisions) / max_n
    return BleuScore(100.0 * bp * math.exp(log_p), precisions, bp, c, r)


def bleu(hypotheses, references, max_n: int = 4) -> float:
    return bleu_details(hypotheses, references, max_n).score


# -- alignments --------------------------------------------------------------------------------

def predicted_links(positions: Sequence[float], J: int) -> frozenset:
    """Link target ``i`` to the source word nearest its aligned position (clamped to 1..J)."""
    out = set()
    for i, p in enumerate(positions, start=1):
        j = int(np.floor(p + 0.5))
        out.add((min(max(j, 1), J), i))
    return frozenset(out)


def aer(predicted: Sequence[frozenset], sure: Sequence[frozenset],
        possible: Sequence[frozenset] | None = None) -> float:
    """Corpus alignment error rate; ``possible`` defaults to ``sure`` and is widened to include it."""
    if len(predicted) != len(sure):
        raise ValueError("predicted and gold alignments cover different sentence counts")
    if possible is None:
        possible = sure
    a_s = a_p = n_a = n_s = 0
    for A, S, P in zip(predicted, sure, possible):
        P = P | S
        a_s += len(A & S)
        a_p += len(A & P)
        n_a += len(A)
        n_s += len(S)
    if n_s == 0:
        raise ValueError("gold alignment set is empty")
    return 1.0 - (a_s + a_p) / (n_a + n_s)


def within_g_fraction(gold: Sequence[frozenset], delays: Sequence[Sequence[int]],
                      strict: bool = True) -> float:
    """Percent of gold links ``(s, t)`` whose source word was read before target ``t`` (s <= g(t)).

    With ``strict=False`` links pointing past the end of a delay sequence are
    ignored instead of raising.
    """
    if len(gold) != len(delays):
        raise ValueError("gold alignments and traces cover different sentence counts")
    hit = total = 0
    for links, g in zip(gold, delays):
        for s, t in links:
            if not 1 <= t <= len(g):
                if strict:
                    raise IndexError(f"gold link target {t} outside trace of length {len(g)}")
                continue
            total += 1
            hit += s <= g[t - 1]
    if total == 0:
        raise ValueError("no gold links to score")
    return 100.0 * hit / total


def _proportions(counts: Counter) -> dict[int, float]:
    n = sum(counts.values())
    return {k: counts[k] / n for k in sorted(counts)} if n else {}


def step_size_histogram(delays: Iterable[Sequence[int]]) -> dict[int, float]:
    """Pooled distribution of ``g(i) - g(i-1)`` (with ``g(0) = 0``), as proportions."""
    counts: Counter = Counter()
    for g in delays:
        prev = 0
        for gi in g:
            counts[int(gi) - prev] += 1
            prev = int(gi)
    return _proportions(counts)


def gold_positions(links: frozenset, I: int) -> list[int | None]:
    """Leftmost linked source position per target word (``None`` when unaligned)."""
    best: dict[int, int] = {}
    for s, t in links:
        if t not in best or s < best[t]:
            best[t] = s
    return [best.get(t) for t in range(1, I + 1)]


@dataclass
class DistanceHistograms:
    non_monotonic: dict[int, float]
    monotonic: dict[int, float]
    skipped: int


def monotonic_distance_histogram(gold: Sequence[frozenset],
                                 target_lengths: Sequence[int] | None = None) -> DistanceHistograms:
    """Distances between consecutive gold positions, plain and monotonic (running-max) versions.

    Unaligned target words are skipped and counted; distances are taken
    between consecutive aligned words.
    """
    non_mono: Counter = Counter()
    mono: Counter = Counter()
    skipped = 0
    for k, links in enumerate(gold):
        I = target_lengths[k] if target_lengths is not None else max((t for _, t in links), default=0)
        pos = gold_positions(links, I)
        skipped += sum(a is None for a in pos)
        seq = [a for a in pos if a is not None]
        for prev, cur, run_max in zip(seq, seq[1:], np.maximum.accumulate(seq)[:-1] if seq else []):
            non_mono[cur - prev] += 1
            mono[max(cur - int(run_max), 0)] += 1
    return DistanceHistograms(_proportions(non_mono), _proportions(mono), skipped)


# -- report ---------------------------------------------------------------------------------------

@dataclass
class MetricsReport:
    bleu: float
    al: float
    ap: float
    cw: float
    dal: float
    aer: float | None = None
    within_g_fraction: float | None = None
    histograms: dict[str, dict[int, float]] = field(default_factory=dict)
    sentences: int = 0
    empty_hypotheses: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("aer", "within_g_fraction"):
            if d[key] is None:
                del d[key]
        if not d["histograms"]:
            del d["histograms"]
        else:
            d["histograms"] = {name: {str(k): v for k, v in h.items()}
                               for name, h in d["histograms"].items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            if k == "histograms":
                for name, h in v.items():
                    lines.append(f"{name}\t" + " ".join(f"{b}:{p:.4f}" for b, p in h.items()))
            elif isinstance(v, float):
                lines.append(f"{k}\t{v:.4f}")
            else:
                lines.append(f"{k}\t{v}")
        return "\n".join(lines)
