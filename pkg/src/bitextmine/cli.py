"""Command-line front door: preprocess -> embed -> evaluate -> mine -> train.

Every run writes a manifest JSON next to its primary output recording
the subcommand, the fully resolved configuration, SHA-256 digests of all
input files, the toolkit version, wall-clock time, and the seed. When
``xsim`` prints its report to stdout instead of a file, the manifest is
embedded in the printed JSON document.

Exit codes: 0 success, 1 usage error, 2 data error (any toolkit
exception derived from the package's error hierarchy).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import BitextMineError, DataError
from .margin import MARGIN_FUNCTIONS, MarginConfig

_USAGE_EXIT = 1
_DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad flags; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_USAGE_EXIT)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(subcommand: str, config: dict, inputs: dict,
                   seed, started: float) -> dict:
    """Run record: resolved config plus content digests of every input."""
    return {
        "subcommand": subcommand,
        "config": config,
        "inputs": {name: _sha256(path) for name, path in inputs.items()},
        "version": __version__,
        "wall_clock_s": round(time.time() - started, 3),
        "seed": seed,
    }


def _write_manifest(primary_output, manifest: dict) -> Path:
    path = Path(str(primary_output) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _margin_config(args) -> MarginConfig:
    return MarginConfig(k=args.k, fn=args.margin,
                        include_self=not args.exclude_self)


def _add_margin_flags(p: argparse.ArgumentParser, default_fn: str = "distance"):
    p.add_argument("--k", type=int, default=4, help="neighborhood size (default 4)")
    p.add_argument("--margin", choices=MARGIN_FUNCTIONS, default=default_fn,
                   help=f"margin function (default {default_fn})")
    p.add_argument("--exclude-self", action="store_true",
                   help="exclude the candidate itself from the other side's "
                        "neighbor set (ablation)")


# ---------------------------------------------------------------- preprocess

def _cmd_preprocess(args, ctx) -> int:
    from .preprocess import PreprocessConfig, run_pipeline

    cfg = PreprocessConfig(
        max_punct_num_ratio=args.max_ratio,
        allowed_scripts=frozenset(s for s in (args.scripts or "").split(",") if s),
        min_chars=args.min_chars,
        dedup=not args.no_dedup,
    )
    started = time.time()
    kept, report = run_pipeline(_read_lines(args.infile), cfg)
    out = Path(args.out)
    out.write_text("".join(line + "\n" for line in kept), encoding="utf-8")
    report_json = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(report_json, encoding="utf-8")
    else:
        sys.stderr.write(report_json)
    config = {
        "max_punct_num_ratio": cfg.max_punct_num_ratio,
        "allowed_scripts": sorted(cfg.allowed_scripts),
        "min_chars": cfg.min_chars,
        "dedup": cfg.dedup,
        "out": str(out),
        "report": args.report,
    }
    _write_manifest(out, build_manifest(
        "preprocess", config, {"in": args.infile}, ctx["seed"], started))
    if not ctx["quiet"]:
        print(f"kept {report.kept_count} of {report.input_count} lines -> {out}")
    return 0


# --------------------------------------------------------------------- index

def _cmd_index(args, ctx) -> int:
    from .embstore import load_headered, load_ids
    from .knn import topk

    started = time.time()
    queries = load_headered(args.queries)
    targets = load_headered(args.targets)
    qids = load_ids(args.query_ids).ids if args.query_ids else None
    tids = load_ids(args.target_ids).ids if args.target_ids else None
    result = topk(queries, targets, args.k)
    rows = []
    for q in range(queries.count):
        qid = qids[q] if qids else str(q)
        for rank in range(args.k):
            t = int(result.indices[q, rank])
            tid = tids[t] if tids else str(t)
            rows.append(f"{qid}\t{rank + 1}\t{tid}\t{result.scores[q, rank]:.6f}\n")
    out = Path(args.out)
    out.write_text("".join(rows), encoding="utf-8")
    inputs = {"queries": args.queries, "targets": args.targets}
    if args.query_ids:
        inputs["query_ids"] = args.query_ids
    if args.target_ids:
        inputs["target_ids"] = args.target_ids
    _write_manifest(out, build_manifest(
        "index", {"k": args.k, "out": str(out)}, inputs, ctx["seed"], started))
    if not ctx["quiet"]:
        print(f"wrote top-{args.k} of {queries.count} queries -> {out}")
    return 0


# ---------------------------------------------------------------------- xsim

def _cmd_xsim(args, ctx) -> int:
    from .embstore import load_headered
    from .margin import xsim_error_rate

    started = time.time()
    src = load_headered(args.src)
    tgt = load_headered(args.tgt)
    report = xsim_error_rate(src, tgt, _margin_config(args))
    doc = report.to_dict()
    inputs = {"src": args.src, "tgt": args.tgt}
    config = {"k": args.k, "margin": args.margin,
              "include_self": not args.exclude_self}
    manifest = build_manifest("xsim", config, inputs, ctx["seed"], started)
    if args.report:
        Path(args.report).write_text(json.dumps(doc, indent=2) + "\n",
                                     encoding="utf-8")
        _write_manifest(args.report, manifest)
    else:
        doc["manifest"] = manifest
        print(json.dumps(doc, indent=2))
    if not ctx["quiet"]:
        print(f"xsim error rate: {report.error_rate:.2f}% "
              f"(n={report.n}, k={report.k}, margin={report.fn})",
              file=sys.stderr)
    return 0


# ---------------------------------------------------------------------- mine

def _merge_union(fwd, bwd):
    from .mine import MinedPair, _sort_pairs

    best = {}
    for p in list(fwd) + list(bwd):
        key = (p.src_idx, p.tgt_idx)
        if key not in best or p.score > best[key]:
            best[key] = p.score
    return _sort_pairs([MinedPair(s, t, sc) for (s, t), sc in best.items()])


def _cmd_mine(args, ctx) -> int:
    from dataclasses import replace

    from .embstore import load_headered
    from .mine import MineConfig, mine_direction, write_pairs

    started = time.time()
    src = load_headered(args.src)
    tgt = load_headered(args.tgt)
    src_text = _read_lines(args.src_text)
    tgt_text = _read_lines(args.tgt_text)
    cfg = MineConfig(margin=_margin_config(args), threshold=args.threshold,
                     candidates_per_query=args.candidates,
                     direction=args.direction)
    counts = {"forward": None, "backward": None, "union": None}
    if cfg.direction == "union":
        fwd = mine_direction(src, tgt, replace(cfg, direction="forward"))
        bwd = mine_direction(src, tgt, replace(cfg, direction="backward"))
        pairs = _merge_union(fwd, bwd)
        counts = {"forward": len(fwd), "backward": len(bwd), "union": len(pairs)}
    else:
        pairs = mine_direction(src, tgt, cfg)
        counts[cfg.direction] = len(pairs)
    out = Path(args.out)
    write_pairs(pairs, src_text, tgt_text, out)
    config = {
        "k": args.k, "margin": args.margin,
        "include_self": not args.exclude_self,
        "threshold": cfg.resolved_threshold(),
        "candidates_per_query": cfg.candidates_per_query,
        "direction": cfg.direction,
        "counts": counts,
        "out": str(out),
    }
    inputs = {"src": args.src, "tgt": args.tgt,
              "src_text": args.src_text, "tgt_text": args.tgt_text}
    _write_manifest(out, build_manifest("mine", config, inputs,
                                        ctx["seed"], started))
    if not ctx["quiet"]:
        print(f"mined {len(pairs)} pairs -> {out}")
    return 0


# --------------------------------------------------------------------- train

def _parse_parallel(path) -> list[tuple[str, str]]:
    """Accept both ``src \\t tgt`` rows and mined ``score \\t src \\t tgt``."""
    pairs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) == 3:
            try:
                float(cols[0])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: three columns but first is not a score")
            pairs.append((cols[1], cols[2]))
        elif len(cols) == 2:
            pairs.append((cols[0], cols[1]))
        else:
            raise DataError(
                f"{path}:{lineno}: expected 2 or 3 tab-separated columns, "
                f"got {len(cols)}")
    return pairs


def _curriculum_from_step(step: float):
    from .distill import CurriculumSchedule

    if not 0 < step <= 1:
        raise DataError(f"curriculum step must be in (0, 1], got {step}")
    n = round(1.0 / step)
    increments = tuple(round(step * i, 10) for i in range(1, n + 1))
    if increments[-1] != 1.0:
        raise DataError(
            f"curriculum step {step} does not divide 1.0 into equal increments")
    return CurriculumSchedule(increments=increments)


def _cmd_train(args, ctx) -> int:
    from .distill import (
        DistillConfig,
        EncoderConfig,
        PrecomputedTeacher,
        save_student,
        train,
        train_vocab,
    )
    from .embstore import load_headered, load_ids

    started = time.time()
    pairs = _parse_parallel(args.parallel)
    mono = [l for l in _read_lines(args.mono)] if args.mono else None
    teacher = PrecomputedTeacher(load_headered(args.teacher),
                                 load_ids(args.teacher_ids))
    vocab_corpus = [p[0] for p in pairs] + (mono or [])
    vocab = train_vocab(vocab_corpus, args.vocab_size)
    enc_cfg = EncoderConfig(vocab_size=vocab.size, layers=args.layers,
                            width=args.width, heads=args.heads,
                            ffn_mult=args.ffn_mult, max_len=args.max_len)
    curriculum = _curriculum_from_step(args.curriculum) if args.curriculum else None
    cfg = DistillConfig(lr=args.lr, batch_size=args.batch_size,
                        mlm_weight=args.mlm_weight, mask_prob=args.mask_prob,
                        curriculum=curriculum, steps=args.steps,
                        seed=ctx["seed"] or 0, lr_schedule=args.lr_schedule)
    model, metrics = train(pairs, mono, teacher, cfg, encoder_cfg=enc_cfg,
                           vocab=vocab, metrics_path=args.metrics)
    out = Path(args.out)
    meta = {"pairs": len(pairs), "mono": len(mono) if mono else 0,
            "steps": cfg.steps, "seed": cfg.seed}
    save_student(out, model, vocab, meta)
    config = {
        "vocab_size": args.vocab_size, "layers": args.layers,
        "width": args.width, "heads": args.heads, "ffn_mult": args.ffn_mult,
        "max_len": args.max_len, "lr": args.lr, "batch_size": args.batch_size,
        "mlm_weight": args.mlm_weight, "mask_prob": args.mask_prob,
        "curriculum": args.curriculum, "steps": args.steps,
        "lr_schedule": args.lr_schedule, "out": str(out),
        "metrics": args.metrics,
    }
    inputs = {"parallel": args.parallel,
              "teacher": args.teacher, "teacher_ids": args.teacher_ids}
    if args.mono:
        inputs["mono"] = args.mono
    _write_manifest(out, build_manifest("train", config, inputs,
                                        ctx["seed"], started))
    if not ctx["quiet"]:
        final = metrics[-1] if metrics else {}
        print(f"trained {cfg.steps} steps "
              f"(final total loss {final.get('total', float('nan')):.4f}) -> {out}")
    return 0


# ----------------------------------------------------------------- embed-toy

def _cmd_embed_toy(args, ctx) -> int:
    from .distill import encode_batch, load_student
    from .embstore import EmbeddingMatrix, SentenceIndexMap, save, save_ids

    started = time.time()
    model, vocab, _meta = load_student(args.model)
    lines = _read_lines(args.infile)
    max_len = model.cfg.max_len
    token_rows = [vocab.tokenize(line)[:max_len] for line in lines]
    emb = encode_batch(token_rows, model, batch_size=args.batch_size)
    out = Path(args.out)
    save(EmbeddingMatrix.from_array(emb), out)
    if args.ids:
        save_ids(SentenceIndexMap(ids=tuple(lines)), args.ids)
    config = {"model": args.model, "batch_size": args.batch_size,
              "out": str(out), "ids": args.ids}
    _write_manifest(out, build_manifest(
        "embed-toy", config, {"model": args.model, "in": args.infile},
        ctx["seed"], started))
    if not ctx["quiet"]:
        print(f"embedded {len(lines)} lines at dim {emb.shape[1]} -> {out}")
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> _Parser:
    parser = _Parser(prog="bitextmine",
                     description="Margin-based bitext mining, similarity-search "
                                 "evaluation, and toy student distillation.")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS/torch worker threads")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed recorded in manifests and used by train")
    parser.add_argument("--json-errors", action="store_true",
                        help="report data errors as JSON on stderr")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress messages")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("preprocess", help="clean a monolingual corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-ratio", type=float, default=0.20,
                   help="max punctuation+digit fraction (default 0.20)")
    p.add_argument("--scripts", default="",
                   help="comma-separated allowed scripts, e.g. Latn,Ethi")
    p.add_argument("--min-chars", type=int, default=1)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--report", default=None,
                   help="write the filter report JSON here (default: stderr)")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("index", help="debug dump of exact top-k neighbors")
    p.add_argument("--queries", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--query-ids", default=None)
    p.add_argument("--target-ids", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("xsim", help="similarity-search error rate of aligned "
                                    "embedding matrices")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    _add_margin_flags(p)
    p.add_argument("--report", default=None,
                   help="write the JSON report here (default: stdout)")
    p.set_defaults(func=_cmd_xsim)

    p = sub.add_parser("mine", help="extract scored bitext pairs")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--src-text", required=True)
    p.add_argument("--tgt-text", required=True)
    _add_margin_flags(p, default_fn="ratio")
    p.add_argument("--threshold", type=float, default=None,
                   help="score cutoff (default: 1.06 ratio, 0.0 otherwise)")
    p.add_argument("--candidates", type=int, default=1,
                   help="candidates per query (default 1)")
    p.add_argument("--direction", choices=("forward", "backward", "union"),
                   default="union")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("train", help="distill a toy student against a frozen "
                                     "teacher")
    p.add_argument("--parallel", required=True,
                   help="TSV of src/tgt pairs (2 columns, or mined 3-column)")
    p.add_argument("--mono", default=None,
                   help="monolingual student-language lines for the MLM loss")
    p.add_argument("--teacher", required=True, help="teacher embeddings (EMB1)")
    p.add_argument("--teacher-ids", required=True,
                   help="sentence-per-line index aligned with --teacher")
    p.add_argument("--vocab-size", type=int, default=1000)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--ffn-mult", type=int, default=4)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--lr", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--mlm-weight", type=float, default=1.0)
    p.add_argument("--mask-prob", type=float, default=0.15)
    p.add_argument("--curriculum", type=float, default=None,
                   help="increment step, e.g. 0.1 for 10%% prefixes")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--lr-schedule", choices=("constant", "linear"),
                   default="constant")
    p.add_argument("--metrics", default=None,
                   help="stream per-step loss JSON lines here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("embed-toy", help="embed a text file with a trained "
                                         "student")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ids", default=None,
                   help="also write the input lines as a sentence index")
    p.add_argument("--batch-size", type=int, default=256)
    p.set_defaults(func=_cmd_embed_toy)

    return parser


def _apply_threads(n: int) -> None:
    import threadpoolctl

    threadpoolctl.threadpool_limits(limits=n)
    try:
        import torch

        torch.set_num_threads(n)
    except ImportError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return _USAGE_EXIT
    if args.threads is not None:
        _apply_threads(args.threads)
    ctx = {"seed": args.seed, "quiet": args.quiet}
    try:
        return args.func(args, ctx)
    except BitextMineError as e:
        if args.json_errors:
            payload = {"error": type(e).__name__, "message": str(e)}
            print(json.dumps(payload), file=sys.stderr)
        else:
            print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return _DATA_EXIT
    except OSError as e:
        if args.json_errors:
            print(json.dumps({"error": "IOFailure", "message": str(e)}),
                  file=sys.stderr)
        else:
            print(f"error: {e}", file=sys.stderr)
        return _DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
