"""Corpora, vocabularies, gold alignments, synthetic tasks and batching."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

PAD, UNK, BOS, EOS = 0, 1, 2, 3
SPECIALS = ("<pad>", "<unk>", "<s>", "</s>")

Links = frozenset  # of (source_index, target_index), 1-based


class AlignmentParseError(ValueError):
    pass


@dataclass
class Vocabulary:
    itos: list[str]
    min_freq: int = 1
    stoi: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.itos[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int], strip: bool = True) -> list[str]:
        out = []
        for i in ids:
            if strip and i == EOS:
                break
            if strip and i in (PAD, BOS):
                continue
            out.append(self.itos[i])
        return out

    def to_dict(self) -> dict:
        return {"itos": list(self.itos), "min_freq": self.min_freq}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(list(d["itos"]), int(d.get("min_freq", 1)))


def tokenize(line: str) -> list[str]:
    return line.split()


def build_vocab(sentences: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Ids by descending frequency, ties broken lexicographically; rarer tokens map to UNK."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    n = 0
    for sent in sentences:
        counts.update(sent)
        n += 1
    if n == 0 or not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((tok for tok, c in counts.items() if c >= min_freq and tok not in SPECIALS),
                  key=lambda tok: (-counts[tok], tok))
    return Vocabulary(list(SPECIALS) + kept, min_freq)


@dataclass
class ParallelCorpus:
    source: list[list[str]]
    target: list[list[str]]
    alignments: list[Links] | None = None

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise ValueError(f"{len(self.source)} source vs {len(self.target)} target sentences")
        for k, (s, t) in enumerate(zip(self.source, self.target)):
            if not s or not t:
                raise ValueError(f"sentence pair {k + 1} is empty")
        if self.alignments is not None:
            if len(self.alignments) != len(self.source):
                raise ValueError("alignment count does not match corpus size")
            for k, links in enumerate(self.alignments):
                check_links(links, len(self.source[k]), len(self.target[k]), k + 1)

    def __len__(self) -> int:
        return len(self.source)

    def subset(self, indices: Sequence[int]) -> "ParallelCorpus":
        al = None if self.alignments is None else [self.alignments[i] for i in indices]
        return ParallelCorpus([self.source[i] for i in indices],
                              [self.target[i] for i in indices], al)


def check_links(links: Links, J: int, I: int, sentence: int = 0) -> None:
    for s, t in links:
        if not (1 <= s <= J and 1 <= t <= I):
            raise ValueError(f"sentence {sentence}: link {s}-{t} outside lengths J={J}, I={I}")


def read_lines(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh]


def load_corpus(src_path: str | Path, tgt_path: str | Path,
                align_path: str | Path | None = None) -> ParallelCorpus:
    src, tgt = read_lines(src_path), read_lines(tgt_path)
    al = load_alignments(align_path) if align_path else None
    return ParallelCorpus(src, tgt, al)


def write_corpus(corpus: ParallelCorpus, src_path, tgt_path, align_path=None) -> None:
    Path(src_path).write_text("".join(" ".join(s) + "\n" for s in corpus.source), encoding="utf-8")
    Path(tgt_path).write_text("".join(" ".join(t) + "\n" for t in corpus.target), encoding="utf-8")
    if align_path is not None and corpus.alignments is not None:
        write_alignments(corpus.alignments, align_path)


# -- Pharaoh alignments -------------------------------------------------------------------

def parse_alignment_pairs(line: str, lineno: int = 0) -> tuple[Links, Links]:
    """Sure (``s-t``) and possible (``s?t``) links of one line, 1-based.

    The possible set includes the sure links.
    """
    sure, possible = set(), set()
    for item in line.split():
        sep = "?" if "?" in item else "-"
        parts = item.split(sep)
        if len(parts) != 2 or not parts[0].isdigit() or not parts[1].isdigit():
            raise AlignmentParseError(f"line {lineno}: malformed link {item!r}")
        link = (int(parts[0]) + 1, int(parts[1]) + 1)
        possible.add(link)
        if sep == "-":
            sure.add(link)
    return frozenset(sure), frozenset(possible)


def parse_alignment_line(line: str, lineno: int = 0) -> Links:
    return parse_alignment_pairs(line, lineno)[0]


def load_alignments(path: str | Path, with_possible: bool = False):
    """Read Pharaoh ``s-t`` pairs (0-based in the file) as 1-based link sets.

    Possible links written ``s?t`` are dropped unless ``with_possible``, in
    which case ``(sure, possible)`` lists are returned.
    """
    sure, possible = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s, p = parse_alignment_pairs(line, lineno)
            sure.append(s)
            possible.append(p)
    return (sure, possible) if with_possible else sure


def format_alignment_line(links: Links) -> str:
    return " ".join(f"{s - 1}-{t - 1}" for s, t in sorted(links, key=lambda st: (st[1], st[0])))


def write_alignments(alignments: Sequence[Links], path: str | Path) -> None:
    Path(path).write_text("".join(format_alignment_line(a) + "\n" for a in alignments),
                          encoding="utf-8")


# -- synthetic tasks ------------------------------------------------------------------------

SYNTHETIC_TASKS = ("copy", "shifted_copy", "local_reorder")


def make_synthetic(task: str, vocab_size: int, length_range: tuple[int, int], count: int,
                   seed: int, param: int | None = None) -> ParallelCorpus:
    """Generate a toy parallel corpus with exact gold alignments.

    ``vocab_size`` counts the four special symbols, so content words are
    ``w0 .. w{vocab_size-5}``.

    * ``copy``: target equals source; gold link ``(i, i)``.
    * ``shifted_copy`` (``param`` = d): target word ``i`` is source word
      ``min(i + d, J)``, so emitting it needs ``i + d`` source words; gold
      link ``(min(i + d, J), i)``.
    * ``local_reorder`` (``param`` = w): source reversed inside consecutive
      windows of ``w`` words; gold follows the permutation.
    """
    if task not in SYNTHETIC_TASKS:
        raise ValueError(f"unknown synthetic task {task!r}")
    n_words = vocab_size - len(SPECIALS)
    if n_words < 1:
        raise ValueError("vocab_size must exceed the number of special symbols")
    lo, hi = length_range
    if not (1 <= lo <= hi) or count < 1:
        raise ValueError(f"invalid length range {length_range} or count {count}")
    if task == "shifted_copy":
        param = 1 if param is None else param
    elif task == "local_reorder":
        param = 2 if param is None else param
    if param is not None and param < 1:
        raise ValueError("task parameter must be >= 1")
    rng = np.random.default_rng(seed)
    words = [f"w{k}" for k in range(n_words)]
    src, tgt, gold = [], [], []
    for _ in range(count):
        J = int(rng.integers(lo, hi + 1))
        x = [words[k] for k in rng.integers(0, n_words, size=J)]
        if task == "copy":
            order = list(range(J))
        elif task == "shifted_copy":
            order = [min(i + param, J - 1) for i in range(J)]
        else:
            order = []
            for start in range(0, J, param):
                order.extend(reversed(range(start, min(start + param, J))))
        src.append(x)
        tgt.append([x[k] for k in order])
        gold.append(frozenset((k + 1, i + 1) for i, k in enumerate(order)))
    return ParallelCorpus(src, tgt, gold)


# -- batching ------------------------------------------------------------------------------

@dataclass
class Batch:
    src: np.ndarray          # (B, J) ids, PAD-filled
    src_len: np.ndarray      # (B,)
    tgt_in: np.ndarray       # (B, I) BOS y_1 .. y_n, PAD-filled
    tgt_out: np.ndarray      # (B, I) y_1 .. y_n EOS, PAD-filled
    tgt_mask: np.ndarray     # (B, I) True on real positions
    indices: np.ndarray      # corpus indices of the rows

    def __len__(self) -> int:
        return self.src.shape[0]


def make_batch(src_ids: Sequence[Sequence[int]], tgt_ids: Sequence[Sequence[int]],
               indices: Sequence[int] | None = None) -> Batch:
    B = len(src_ids)
    J = max(len(s) for s in src_ids)
    I = max(len(t) for t in tgt_ids) + 1
    src = np.full((B, J), PAD, dtype=np.int64)
    tin = np.full((B, I), PAD, dtype=np.int64)
    tout = np.full((B, I), PAD, dtype=np.int64)
    for b, (s, t) in enumerate(zip(src_ids, tgt_ids)):
        src[b, :len(s)] = s
        tin[b, 0] = BOS
        tin[b, 1:len(t) + 1] = t
        tout[b, :len(t)] = t
        tout[b, len(t)] = EOS
    lens = np.array([len(s) for s in src_ids], dtype=np.int64)
    mask = np.arange(I)[None, :] <= np.array([len(t) for t in tgt_ids])[:, None]
    idx = np.arange(B) if indices is None else np.asarray(indices)
    return Batch(src, lens, tin, tout, mask, idx)


def batches(corpus: ParallelCorpus, src_vocab: Vocabulary, tgt_vocab: Vocabulary,
            batch_size: int, seed: int | None = None, max_positions: int | None = None,
            stats: dict | None = None) -> list[Batch]:
    """Padded batches; the order is shuffled with ``seed`` (``None`` keeps corpus order).

    Pairs longer than ``max_positions`` (target counted with its EOS) are
    skipped; the count is reported in ``stats["skipped"]``.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    keep = []
    skipped = 0
    for k, (s, t) in enumerate(zip(corpus.source, corpus.target)):
        if max_positions is not None and (len(s) > max_positions or len(t) + 1 > max_positions):
            skipped += 1
            continue
        keep.append(k)
    if skipped:
        logger.warning("skipped %d sentence pairs longer than %s positions", skipped, max_positions)
    if stats is not None:
        stats["skipped"] = skipped
    order = np.array(keep, dtype=np.int64)
    if seed is not None:
        order = np.random.default_rng(seed).permutation(order)
    out = []
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        out.append(make_batch([src_vocab.encode(corpus.source[i]) for i in idx],
                              [tgt_vocab.encode(corpus.target[i]) for i in idx], idx))
    return out
