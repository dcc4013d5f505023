"""Streaming READ/WRITE policy driven by predicted aligned positions, plus fixed baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .data import BOS, EOS, PAD
from .model import GmaTransformer, StepOutput, WaitForSource
from .numerics import no_grad

READ, WRITE = "R", "W"


@dataclass
class PolicyTrace:
    """Delays of every written token (the final EOS included) and the action string."""

    g: list[int]
    actions: str
    source_length: int
    truncated: bool = False
    eos: bool = True
    layer_positions: list[list[float]] | None = None

    @property
    def target_length(self) -> int:
        return len(self.g)

    @property
    def word_delays(self) -> list[int]:
        """Delays of real words, i.e. without the closing EOS write."""
        return self.g[:-1] if self.eos and self.g else list(self.g)

    def to_record(self, hypothesis: list[str] | None = None) -> dict:
        rec = {"g": list(map(int, self.g)), "actions": self.actions,
               "source_length": self.source_length, "eos": self.eos,
               "truncated": self.truncated}
        if hypothesis is not None:
            rec["hypothesis"] = " ".join(hypothesis)
        if self.layer_positions is not None:
            rec["p"] = [[round(float(v), 6) for v in row] for row in self.layer_positions]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PolicyTrace":
        for key in ("g", "actions", "source_length"):
            if key not in rec:
                raise KeyError(f"trace record lacks {key!r}")
        return cls([int(v) for v in rec["g"]], str(rec["actions"]), int(rec["source_length"]),
                   bool(rec.get("truncated", False)), bool(rec.get("eos", True)), rec.get("p"))

    def to_json(self, hypothesis: list[str] | None = None) -> str:
        return json.dumps(self.to_record(hypothesis))


def replay(actions: str) -> list[int]:
    """Number of READs preceding each WRITE."""
    reads = 0
    out = []
    for a in actions:
        if a == READ:
            reads += 1
        elif a == WRITE:
            out.append(reads)
        else:
            raise ValueError(f"unknown action symbol {a!r}")
    return out


def validate_trace(trace: PolicyTrace) -> str | None:
    """``None`` when every trace invariant holds, else a description of the first violation."""
    g, J = trace.g, trace.source_length
    if any(a not in (READ, WRITE) for a in trace.actions):
        return "action string contains symbols other than R and W"
    if not g:
        return "trace has no writes"
    if any(gi < 1 for gi in g):
        return f"causality: write {next(i for i, gi in enumerate(g, 1) if gi < 1)} precedes any read"
    for i in range(1, len(g)):
        if g[i] < g[i - 1]:
            return f"monotonicity: g({i + 1})={g[i]} < g({i})={g[i - 1]}"
    if max(g) > J:
        return f"g exceeds source length {J}"
    if trace.actions.count(READ) > J:
        return f"{trace.actions.count(READ)} reads exceed source length {J}"
    writes = replay(trace.actions)
    if len(writes) != len(g):
        return f"{len(writes)} writes in actions but {len(g)} delays"
    for i, (seen, gi) in enumerate(zip(writes, g), start=1):
        if seen < gi:
            return f"causality: token {i} written after {seen} reads but needs {gi}"
        if seen != gi:
            return f"replay: token {i} written after {seen} reads, trace says {gi}"
    if not trace.truncated and not trace.actions.endswith(WRITE):
        return "actions must end with the final write"
    return None


def actions_from_delays(g: Iterable[int]) -> str:
    out = []
    reads = 0
    for gi in g:
        out.append(READ * (gi - reads))
        reads = max(reads, gi)
        out.append(WRITE)
    return "".join(out)


def wait_k_trace(k: int, J: int, I: int) -> PolicyTrace:
    """Fixed wait-k schedule ``g(i) = min(k + i - 1, J)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    g = [min(k + i - 1, J) for i in range(1, I + 1)]
    return PolicyTrace(g, actions_from_delays(g), J)


# -- streaming state machine -----------------------------------------------------------------

@dataclass
class StreamingTranslator:
    """One sentence of simultaneous decoding.

    Call :meth:`next_action`; on ``READ`` supply a token with :meth:`feed` or
    call :meth:`finish` when the source has ended; on ``WRITE`` the token is
    already recorded.  ``DONE`` ends the sentence.
    """

    model: GmaTransformer
    delta: float | None = None
    max_len: int | None = None
    source: list[int] = field(default_factory=list)
    complete: bool = False
    prefix: list[int] = field(default_factory=lambda: [BOS])
    g: list[int] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)
    truncated: bool = False
    done: bool = False
    last_step: StepOutput | None = None

    def __post_init__(self):
        if self.delta is not None:
            self.model = self.model.with_delta(self.delta)

    def feed(self, token: int) -> None:
        if self.complete:
            raise RuntimeError("source already finished")
        self.source.append(int(token))
        self.actions.append(READ)

    def finish(self) -> None:
        self.complete = True

    def _limit(self) -> int:
        limit = 2 * len(self.source) + 10 if self.max_len is None else self.max_len
        # the prefix fed back (BOS included) must fit the position table
        return min(limit, self.model.config.max_positions - 1)

    def next_action(self) -> tuple[str, int | None]:
        if self.done:
            return "DONE", None
        if len(self.prefix) - 1 >= self._limit():
            self.truncated = True
            self.done = True
            return "DONE", None
        out = self.model.decode_step(self.source, self.prefix, self.complete)
        if isinstance(out, WaitForSource):
            return "READ", out.required
        logits = out.logits.copy()
        logits[[PAD, BOS]] = -np.inf
        if len(self.prefix) == 1:
            logits[EOS] = -np.inf   # at least one word: an empty hypothesis is never written
        token = int(np.argmax(logits))
        self.prefix.append(token)
        self.g.append(out.g)
        self.actions.append(WRITE)
        self.last_step = out
        if token == EOS:
            self.done = True
        return "WRITE", token

    def trace(self) -> PolicyTrace:
        layers = None
        if self.last_step is not None:
            st = self.last_step.state
            layers = [st.layer_positions(l).tolist() for l in range(self.model.config.layers)]
        eos = bool(self.prefix and self.prefix[-1] == EOS and len(self.prefix) > 1)
        return PolicyTrace(list(self.g), "".join(self.actions), len(self.source),
                           self.truncated, eos, layers)

    @property
    def hypothesis(self) -> list[int]:
        out = self.prefix[1:]
        return out[:-1] if out and out[-1] == EOS else out


def simulate_streaming(model: GmaTransformer, source_stream: Iterable[int],
                       delta: float | None = None, max_len: int | None = None):
    """Run the policy over a token stream; returns ``(hypothesis ids, PolicyTrace)``."""
    session = StreamingTranslator(model, delta, max_len)
    stream: Iterator[int] = iter(source_stream)
    with no_grad():
        while True:
            action, _ = session.next_action()
            if action == "DONE":
                break
            if action == "READ":
                try:
                    session.feed(next(stream))
                except StopIteration:
                    if session.complete:
                        raise RuntimeError("policy asked for source after the stream ended")
                    session.finish()
    return session.hypothesis, session.trace()


def teacher_forced_trace(model: GmaTransformer, x_ids, y_ids, delta: float | None = None) -> PolicyTrace:
    """Delays the policy assigns to the reference target (target words plus EOS)."""
    if delta is not None:
        model = model.with_delta(delta)
    with no_grad():
        _, state, _ = model.decode_train(x_ids, y_ids)
    g = [int(v) for v in state.g]
    layers = [state.layer_positions(l).tolist() for l in range(model.config.layers)]
    return PolicyTrace(g, actions_from_delays(g), len(x_ids), False, True, layers)
