"""Command-line entry point: ``gmasimt {train,translate,evaluate,sweep,stats,generate}``.

Data goes to files or stdout, diagnostics to stderr.  Exit status is 0 on
success, 1 on a runtime or data error and 2 on a usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import checkpoint, metrics
from .attention import GmaConfig
from .data import (UNK, Vocabulary, build_vocab, load_alignments, load_corpus, make_synthetic,
                   read_lines, write_corpus)
from .model import GmaTransformer, ModelConfig
from .policy import (PolicyTrace, simulate_streaming, teacher_forced_trace, validate_trace,
                     wait_k_trace)
from .training import TrainConfig, train

log = logging.getLogger("gmasimt")


class UsageError(Exception):
    """Bad configuration or arguments (exit status 2)."""


class DataError(Exception):
    """Unusable input data (exit status 1)."""


# -- run config -------------------------------------------------------------------------------

@dataclass
class RunConfig:
    # data: either parallel files or a synthetic task
    train_src: str | None = None
    train_tgt: str | None = None
    dev_src: str | None = None
    dev_tgt: str | None = None
    synthetic_task: str | None = None
    synthetic_param: int | None = None
    synthetic_vocab: int = 20
    synthetic_min_len: int = 5
    synthetic_max_len: int = 15
    synthetic_pairs: int = 2000
    synthetic_dev_pairs: int = 200
    min_freq: int = 1
    # model
    d_model: int = 32
    d_ff: int = 64
    layers: int = 2
    heads: int = 2
    encoder_layers: int | None = None
    max_positions: int = 64
    dropout: float = 0.0
    encoder_causal: bool = True
    init_step: float = 2.0
    predictor_input: str = "first_layer"
    # alignment / policy
    delta: float = 1.0
    prior_variant: str = "gaussian"
    sigma_mode: str = "half"
    sharing_mode: str = "share_heads"
    position_mode: str = "incremental"
    # training
    epochs: int = 15
    batch_size: int = 32
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    clip: float = 1.0
    eval_every: int = 1
    dev_limit: int = 50
    keep_best: bool = True
    # run
    seed: int = 0
    out: str = "run"

    @classmethod
    def from_dict(cls, d: dict, validate: bool = True) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls()
        for k, v in d.items():
            setattr(cfg, k, _coerce(known[k], v))
        if validate:
            cfg.validate()
        return cfg

    def override(self, key: str, raw: str) -> None:
        known = {f.name: f for f in fields(self)}
        if key not in known:
            raise UsageError(f"unknown config key in override: {key}")
        setattr(self, key, _coerce(known[key], _parse_scalar(raw)))

    def validate(self) -> None:
        files = [self.train_src, self.train_tgt]
        if self.synthetic_task is None and None in files:
            raise UsageError("config needs train_src and train_tgt, or synthetic_task")
        if self.synthetic_task is not None and any(files):
            raise UsageError("give either corpus files or synthetic_task, not both")
        if (self.dev_src is None) != (self.dev_tgt is None):
            raise UsageError("dev_src and dev_tgt go together")
        try:
            self.gma_config()
            self.train_config()
            if self.synthetic_min_len > self.synthetic_max_len or self.synthetic_min_len < 1:
                raise ValueError("synthetic length range is empty")
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def gma_config(self) -> GmaConfig:
        return GmaConfig(delta=self.delta, prior_variant=self.prior_variant,
                         sigma_mode=self.sigma_mode, sharing_mode=self.sharing_mode,
                         position_mode=self.position_mode)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                           beta1=self.beta1, beta2=self.beta2, eps=self.eps, clip=self.clip,
                           seed=self.seed, eval_every=self.eval_every, dev_limit=self.dev_limit,
                           keep_best=self.keep_best)

    def model_config(self, src_vocab: int, tgt_vocab: int) -> ModelConfig:
        return ModelConfig(src_vocab, tgt_vocab, d_model=self.d_model, d_ff=self.d_ff,
                           layers=self.layers, heads=self.heads,
                           encoder_layers=self.encoder_layers, max_positions=self.max_positions,
                           dropout=self.dropout, seed=self.seed,
                           encoder_causal=self.encoder_causal, init_step=self.init_step,
                           predictor_input=self.predictor_input,
                           gma=self.gma_config())


def _parse_scalar(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _coerce(f: dataclasses.Field, v):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    optional = "None" in kind
    if v is None:
        if optional:
            return None
        raise UsageError(f"{f.name} may not be null")
    base = kind.replace("| None", "").strip()
    try:
        if base == "bool":
            if not isinstance(v, bool):
                raise TypeError
            return v
        if base == "int":
            if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                raise TypeError
            return int(v)
        if base == "float":
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if base == "str":
            if not isinstance(v, str):
                raise TypeError
            return v
    except (TypeError, ValueError):
        raise UsageError(f"{f.name} expects {base}, got {v!r}") from None
    return v


def load_run_config(path: str | None, overrides: list[str], seed: int | None,
                    out: str | None, delta: float | None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    cfg = RunConfig.from_dict(data, validate=False)
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        cfg.override(k.strip(), v)
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.out = out
    if delta is not None:
        cfg.delta = delta
    cfg.validate()
    return cfg


# -- helpers ----------------------------------------------------------------------------------

def _require_file(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"missing {what}")
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {path}")
    return p


def _load_ckpt(path: str) -> checkpoint.Checkpoint:
    _require_file(path, "--ckpt")
    try:
        return checkpoint.load(path)
    except checkpoint.CheckpointError as exc:
        raise DataError(f"{path}: {exc}") from None


def _encode_source(vocab: Vocabulary, lines: list[list[str]], allow_unk: bool) -> list[list[int]]:
    out = []
    unknown: dict[str, int] = {}
    for n, toks in enumerate(lines, start=1):
        if not toks:
            raise DataError(f"source line {n} is empty")
        ids = vocab.encode(toks)
        for t, i in zip(toks, ids):
            if i == UNK and t not in vocab.stoi:
                unknown.setdefault(t, n)
        out.append(ids)
    if unknown and not allow_unk:
        first, line = next(iter(unknown.items()))
        raise DataError(f"{len(unknown)} source token types are not in the checkpoint vocabulary "
                        f"(first: {first!r} on line {line}); pass --allow-unk to map them to <unk>")
    return out


def _read_traces(path: str) -> list[PolicyTrace]:
    traces = []
    with open(_require_file(path, "--traces"), encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            try:
                traces.append(PolicyTrace.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: malformed trace on line {n}: {exc}") from None
    return traces


def _write_json(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _fmt(v: float) -> str:
    return f"{v:.4f}"


# -- commands ---------------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_run_config(args.config, args.set or [], args.seed, args.out, args.delta)
    if cfg.synthetic_task is not None:
        lo, hi = cfg.synthetic_min_len, cfg.synthetic_max_len
        try:
            corpus = make_synthetic(cfg.synthetic_task, cfg.synthetic_vocab, (lo, hi),
                                    cfg.synthetic_pairs, cfg.seed, cfg.synthetic_param)
            dev = make_synthetic(cfg.synthetic_task, cfg.synthetic_vocab, (lo, hi),
                                 cfg.synthetic_dev_pairs, cfg.seed + 1, cfg.synthetic_param)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        try:
            corpus = load_corpus(_require_file(cfg.train_src, "train_src"),
                                 _require_file(cfg.train_tgt, "train_tgt"))
            dev = None
            if cfg.dev_src:
                dev = load_corpus(_require_file(cfg.dev_src, "dev_src"),
                                  _require_file(cfg.dev_tgt, "dev_tgt"))
        except ValueError as exc:
            raise DataError(str(exc)) from None
    sv = build_vocab(corpus.source, cfg.min_freq)
    tv = build_vocab(corpus.target, cfg.min_freq)
    try:
        model = GmaTransformer(cfg.model_config(len(sv), len(tv)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    curve = out / "learning_curve.csv"
    with open(curve, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "dev_bleu", "dev_al"])

        def on_epoch(row):
            writer.writerow([row.step, _fmt(row.loss),
                             "" if row.dev_bleu is None else _fmt(row.dev_bleu),
                             "" if row.dev_al is None else _fmt(row.dev_al)])
            fh.flush()

        train(model, corpus, sv, tv, cfg.train_config(), dev=dev, on_epoch=on_epoch)
    ckpt = out / "model.ckpt"
    stored = dataclasses.asdict(cfg)
    del stored["out"]  # where a run is written must not change the checkpoint bytes
    checkpoint.save(ckpt, model, sv, tv, extra={"run_config": stored})
    (out / "config.json").write_text(json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=True)
                                     + "\n", encoding="utf-8")
    log.info("wrote %s and %s", ckpt, curve)
    return 0


def cmd_translate(args) -> int:
    ck = _load_ckpt(args.ckpt)
    lines = read_lines(_require_file(args.src, "--src"))
    sources = _encode_source(ck.src_vocab, lines, args.allow_unk)
    model = ck.model if args.delta is None else ck.model.with_delta(args.delta)
    hyp_lines, records, empty = [], [], []
    for n, ids in enumerate(sources, start=1):
        out_ids, trace = simulate_streaming(model, ids, max_len=args.max_len)
        problem = validate_trace(trace)
        if problem is not None:
            raise DataError(f"line {n}: invalid policy trace: {problem}")
        hyp = ck.tgt_vocab.decode(out_ids)
        if not hyp:
            empty.append(n)
        if trace.truncated:
            log.warning("line %d: hit the length limit before </s>", n)
        hyp_lines.append(" ".join(hyp))
        rec = trace.to_record(hyp)
        rec["empty"] = not hyp
        records.append(rec)
    text = "".join(h + "\n" for h in hyp_lines)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.traces:
        Path(args.traces).write_text("".join(json.dumps(r) + "\n" for r in records),
                                     encoding="utf-8")
    if empty:
        log.warning("%d empty hypotheses (lines %s)", len(empty),
                    ", ".join(map(str, empty[:10])) + (" ..." if len(empty) > 10 else ""))
    return 0


def evaluate_files(hyp_path: str, ref_path: str, traces_path: str, gold_path: str | None = None,
                   layer: int | None = None) -> metrics.MetricsReport:
    hyps = read_lines(_require_file(hyp_path, "--hyp"))
    refs = read_lines(_require_file(ref_path, "--ref"))
    traces = _read_traces(traces_path)
    if not (len(hyps) == len(refs) == len(traces)):
        raise DataError(f"line counts differ: {len(hyps)} hypotheses, {len(refs)} references, "
                        f"{len(traces)} traces")
    if not hyps:
        raise DataError("nothing to evaluate")
    for n, (h, t) in enumerate(zip(hyps, traces), start=1):
        problem = validate_trace(t)
        if problem is not None:
            raise DataError(f"{traces_path}: line {n}: {problem}")
        if len(t.word_delays) != len(h):
            raise DataError(f"line {n}: trace covers {len(t.word_delays)} words, "
                            f"hypothesis has {len(h)}")
    words = [(t.word_delays, t.source_length) for t in traces]
    scored = [w for w in words if w[0]]
    lat = metrics.corpus_latency([g for g, _ in scored], [J for _, J in scored]) if scored else \
        dict.fromkeys(metrics.LATENCY_COLUMNS, float("nan"))
    report = metrics.MetricsReport(bleu=metrics.bleu(hyps, refs), sentences=len(hyps),
                                   empty_hypotheses=len(words) - len(scored), **lat)
    if gold_path is not None:
        if layer is None:
            raise UsageError("--layer is required with --gold (the layer whose positions are scored)")
        gold, possible = load_alignments(_require_file(gold_path, "--gold"), with_possible=True)
        if len(gold) != len(hyps):
            raise DataError(f"{len(gold)} gold alignments for {len(hyps)} sentences")
        predicted = []
        for n, t in enumerate(traces, start=1):
            if t.layer_positions is None:
                raise DataError(f"trace line {n} has no aligned positions (field 'p')")
            if not 0 <= layer < len(t.layer_positions):
                raise UsageError(f"--layer {layer} outside 0..{len(t.layer_positions) - 1}")
            pos = t.layer_positions[layer][:len(hyps[n - 1])]
            predicted.append(metrics.predicted_links(pos, t.source_length))
        report.aer = metrics.aer(predicted, gold, possible)
        try:
            report.within_g_fraction = metrics.within_g_fraction(gold, [g for g, _ in words],
                                                                 strict=False)
        except ValueError as exc:
            log.warning("within-g fraction not reported: %s", exc)
        dist = metrics.monotonic_distance_histogram(gold, [len(h) for h in hyps])
        report.histograms = {"step_size": metrics.step_size_histogram([g for g, _ in words]),
                             "gold_distance_non_monotonic": dist.non_monotonic,
                             "gold_distance_monotonic": dist.monotonic}
    return report


def cmd_evaluate(args) -> int:
    report = evaluate_files(args.hyp, args.ref, args.traces, args.gold, args.layer)
    _write_json(report.to_dict(), args.out)
    return 0


SWEEP_COLUMNS = ["delta", "CW", "AP", "AL", "DAL", "BLEU"]


def cmd_sweep(args) -> int:
    try:
        deltas = [float(x) for x in args.deltas.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--deltas must be comma-separated numbers, got {args.deltas!r}") from None
    if not deltas:
        raise UsageError("--deltas needs at least one value")
    if any(d < 0 for d in deltas):
        raise UsageError("delta must be non-negative")
    src_lines = read_lines(_require_file(args.src, "--src"))
    ref_lines = read_lines(_require_file(args.ref, "--ref"))
    if len(src_lines) != len(ref_lines):
        raise DataError(f"{len(src_lines)} source lines vs {len(ref_lines)} references")
    rows = []
    for path in args.ckpt:
        ck = _load_ckpt(path)
        sources = _encode_source(ck.src_vocab, src_lines, args.allow_unk)
        refs_ids = [ck.tgt_vocab.encode(r) for r in ref_lines]
        for delta in deltas:
            model = ck.model.with_delta(delta)
            hyps, delays, lengths = [], [], []
            for ids, ref in zip(sources, refs_ids):
                out_ids, trace = simulate_streaming(model, ids)
                hyps.append(ck.tgt_vocab.decode(out_ids))
                if args.teacher_forced:
                    trace = teacher_forced_trace(model, ids, ref)
                if trace.word_delays:
                    delays.append(trace.word_delays)
                    lengths.append(trace.source_length)
            lat = metrics.corpus_latency(delays, lengths)
            row = {"delta": delta, "CW": lat["cw"], "AP": lat["ap"], "AL": lat["al"],
                   "DAL": lat["dal"], "BLEU": metrics.bleu(hyps, ref_lines)}
            if len(args.ckpt) > 1:
                row = {"checkpoint": path, **row}
            rows.append(row)
    header = (["checkpoint"] if len(args.ckpt) > 1 else []) + SWEEP_COLUMNS
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[k] if k in ("checkpoint", "delta") else _fmt(row[k]) for k in header])
    finally:
        if args.out:
            fh.close()
    return 0


def _write_histogram(path: Path, columns: list[str], hists: list[dict]) -> None:
    keys = sorted(set().union(*[h.keys() for h in hists]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for k in keys:
            writer.writerow([k] + [f"{h.get(k, 0.0):.6f}" for h in hists])


def cmd_stats(args) -> int:
    if args.traces is None and args.gold is None:
        raise UsageError("stats needs --traces and/or --gold")
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.traces is not None:
        traces = _read_traces(args.traces)
        hist = metrics.step_size_histogram([t.word_delays for t in traces if t.word_delays])
        _write_histogram(out / "step_sizes.csv", ["step", "proportion"], [hist])
        log.info("wrote %s", out / "step_sizes.csv")
    if args.gold is not None:
        gold = load_alignments(_require_file(args.gold, "--gold"))
        lengths = None
        if args.ref is not None:
            lengths = [len(r) for r in read_lines(_require_file(args.ref, "--ref"))]
            if len(lengths) != len(gold):
                raise DataError(f"{len(gold)} gold alignments for {len(lengths)} references")
        dist = metrics.monotonic_distance_histogram(gold, lengths)
        _write_histogram(out / "alignment_distances.csv",
                         ["distance", "non_monotonic", "monotonic"],
                         [dist.non_monotonic, dist.monotonic])
        if dist.skipped:
            log.info("%d unaligned target words skipped", dist.skipped)
        log.info("wrote %s", out / "alignment_distances.csv")
    return 0


def cmd_generate(args) -> int:
    try:
        corpus = make_synthetic(args.task, args.vocab_size, (args.min_len, args.max_len),
                                args.count, args.seed, args.param)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, f"{prefix}.src", f"{prefix}.tgt", f"{prefix}.align")
    return 0


def cmd_waitk(args) -> int:
    src = read_lines(_require_file(args.src, "--src"))
    hyp = read_lines(_require_file(args.hyp, "--hyp"))
    if len(src) != len(hyp):
        raise DataError(f"{len(src)} source lines vs {len(hyp)} hypotheses")
    if args.k < 1:
        raise UsageError("k must be >= 1")
    records = []
    for s, h in zip(src, hyp):
        if not s:
            raise DataError("empty source line")
        records.append(json.dumps(wait_k_trace(args.k, len(s), len(h) + 1).to_record(h)))
    text = "".join(r + "\n" for r in records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# -- parser -----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmasimt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model; writes model.ckpt and learning_curve.csv")
    t.add_argument("--config", help="JSON run config")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="output directory")
    t.add_argument("--delta", type=float, help="relaxation offset used in training")
    t.set_defaults(func=cmd_train)

    tr = sub.add_parser("translate", help="simultaneous greedy decoding of a source file")
    tr.add_argument("--ckpt", required=True)
    tr.add_argument("--src", required=True)
    tr.add_argument("--delta", type=float, help="override the checkpoint's delta")
    tr.add_argument("--out", help="hypothesis file (default stdout)")
    tr.add_argument("--traces", help="JSON-lines trace file")
    tr.add_argument("--max-len", type=int, help="length limit (default 2*J+10)")
    tr.add_argument("--allow-unk", action="store_true")
    tr.set_defaults(func=cmd_translate)

    e = sub.add_parser("evaluate", help="quality, latency and alignment report as JSON")
    e.add_argument("--hyp", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--traces", required=True)
    e.add_argument("--gold", help="Pharaoh gold alignments (source-target)")
    e.add_argument("--layer", type=int, help="decoder layer whose positions are scored for AER")
    e.add_argument("--out", help="also write the JSON report here")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="latency-quality CSV over relaxation offsets")
    s.add_argument("--ckpt", required=True, nargs="+")
    s.add_argument("--src", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--deltas", required=True, help="comma-separated, e.g. 0,0.5,1,2")
    s.add_argument("--teacher-forced", action="store_true",
                   help="latency columns from teacher-forced traces over the references")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--allow-unk", action="store_true")
    s.set_defaults(func=cmd_sweep)

    st = sub.add_parser("stats", help="step-size and gold-distance histograms as CSV")
    st.add_argument("--traces")
    st.add_argument("--gold")
    st.add_argument("--ref", help="references, for target lengths")
    st.add_argument("--out", help="output directory")
    st.set_defaults(func=cmd_stats)

    g = sub.add_parser("generate", help="write a synthetic parallel corpus with gold alignments")
    g.add_argument("--task", required=True, choices=["copy", "shifted_copy", "local_reorder"])
    g.add_argument("--param", type=int)
    g.add_argument("--vocab-size", type=int, default=20)
    g.add_argument("--min-len", type=int, default=5)
    g.add_argument("--max-len", type=int, default=15)
    g.add_argument("--count", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="path prefix; writes .src, .tgt and .align")
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("waitk", help="wait-k baseline traces for existing hypotheses")
    w.add_argument("--k", type=int, required=True)
    w.add_argument("--src", required=True)
    w.add_argument("--hyp", required=True)
    w.add_argument("--out")
    w.set_defaults(func=cmd_waitk)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gmasimt: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, IndexError, OSError) as exc:
        print(f"gmasimt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
