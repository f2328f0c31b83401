"""Command line front end: one binary, one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import ClusterModel, cluster_corpus, kmedoids
from .experiments import (DEFAULT_APPROACHES, EvalReport, ReportRow, Split, evaluate,
                          experiment_standard_vs_percluster, experiment_true_vs_random_cluster,
                          medoid_comment_baseline)
from .ingest import (SchemaError, TranscriptParseError, build_records, corpus_from_records,
                     corpus_jsonl, frames_jsonl, load_corpus_records, load_frame_records,
                     pair_frames, parse_transcript, PairingSummary)
from .metric import DistanceConfig
from .predictors import PredictorSpec, PredictorSuite, train_suite
from .synth import generate_synthetic_corpus
from .vision import detect_directory, load_spritesheet

EXIT_OK = 0
EXIT_ERROR = 1       # unexpected failure
EXIT_USAGE = 2       # unknown flag, bad flag value, bad config file
EXIT_MISSING = 3     # input file or directory not found
EXIT_SCHEMA = 4      # input exists but violates its format
EXIT_INVALID = 5     # inputs parse but the request cannot be satisfied

EXIT_CODES = f"""exit codes:
  {EXIT_OK}  success
  {EXIT_ERROR}  unexpected internal error
  {EXIT_USAGE}  usage error: unknown flag, bad value, bad --config file
  {EXIT_MISSING}  missing input file or directory
  {EXIT_SCHEMA}  schema or parse error in an input file
  {EXIT_INVALID}  invalid request (e.g. k larger than the corpus)
"""


class UsageError(Exception):
    pass


# -- output ------------------------------------------------------------------

def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def companion(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_suffix(suffix) if p.suffix else p.with_name(p.name + suffix)


def note(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- inputs ------------------------------------------------------------------

def need(path, kind: str = "file") -> Path:
    p = Path(path)
    if kind == "dir" and not p.is_dir():
        raise FileNotFoundError(f"directory not found: {p}")
    if kind == "file" and not p.is_file():
        raise FileNotFoundError(f"file not found: {p}")
    return p


def load_corpus(path, like=None):
    records = load_corpus_records(need(path))
    if not records:
        raise SchemaError(f"{path}: empty corpus")
    if like is None:
        return corpus_from_records(records)
    return corpus_from_records(records, like.sprite_vocab, like.word_vocab)


def load_json(path) -> dict:
    try:
        return json.loads(need(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e.msg})") from None


def load_clusters(path) -> ClusterModel:
    try:
        return ClusterModel.from_dict(load_json(path))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{path}: not a cluster model ({e})") from None


def resolve_seed(args) -> int:
    """Explicit seed, or a fresh 64-bit one that is reported and recorded."""
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (1 << 64))
        note(f"no --seed given; using generated seed {args.seed}")
    return args.seed


def distance_cfg(args) -> DistanceConfig:
    if args.frame_weight is None:
        return DistanceConfig(args.text_weight, 1.0 - args.text_weight)
    return DistanceConfig(args.text_weight, args.frame_weight)


def base_spec(args, seed: int) -> PredictorSpec:
    return PredictorSpec(trees=args.trees, max_depth=args.max_depth, seed=seed,
                         bootstrap=not args.no_bootstrap)


def write_report(report: EvalReport, args) -> None:
    write_atomic(args.out, report.to_csv())
    write_atomic(args.jsonl or companion(args.out, ".jsonl"), report.to_jsonl())


# -- subcommands --------------------------------------------------------------

def cmd_ingest(args) -> int:
    fmt = args.format or Path(args.transcript).suffix.lstrip(".").lower()
    if fmt not in ("srt", "vtt"):
        raise UsageError("cannot infer transcript format; pass --format srt|vtt")
    cues = parse_transcript(need(args.transcript).read_bytes(), fmt)
    frames = load_frame_records(need(args.frames))
    summary = PairingSummary()
    pairs = pair_frames(cues, frames, summary)
    records = build_records(pairs, {f.timestamp_s: f.sprites for f in frames}, args.prefix)
    write_atomic(args.out, corpus_jsonl(records))
    note(f"paired {summary.paired} cues, dropped {summary.dropped}")
    return EXIT_OK


def cmd_detect(args) -> int:
    sheet = load_spritesheet(need(args.spritesheet, "dir"))
    frames = detect_directory(need(args.frames_dir, "dir"), sheet, args.tolerance, args.threads)
    write_atomic(args.out, frames_jsonl(frames))
    note(f"detected sprites in {len(frames)} frames")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = resolve_seed(args)
    train, test = generate_synthetic_corpus(args.topics, args.train_n, args.test_n, seed, args.noise)
    out = Path(args.out_dir)
    write_atomic(out / "train.jsonl", corpus_jsonl(train.records))
    write_atomic(out / "test.jsonl", corpus_jsonl(test.records))
    write_atomic(out / "sprites.vocab", "".join(t + "\n" for t in train.sprite_vocab.tokens))
    write_atomic(out / "words.vocab", "".join(t + "\n" for t in train.word_vocab.tokens))
    write_atomic(out / "synth.json", json.dumps({
        "seed": seed, "topics": args.topics, "train_n": args.train_n, "test_n": args.test_n,
        "noise": args.noise, "fingerprints": {"train": train.fingerprint(), "test": test.fingerprint()},
    }, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_cluster(args) -> int:
    corpus = load_corpus(args.corpus)
    seed = resolve_seed(args)
    cfg = distance_cfg(args)
    if args.k is not None:
        model = kmedoids(corpus.examples, args.k, cfg, seed)
    else:
        model = cluster_corpus(corpus.examples, min(args.kmax, len(corpus)), cfg, seed, args.threshold)
    write_atomic(args.out, model.to_json())
    note(f"k={model.k} sizes={model.sizes()}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    seed = resolve_seed(args)
    clusters = None
    if args.mode == "per-cluster":
        if not args.clusters:
            raise UsageError("--mode per-cluster needs --clusters")
        clusters = load_clusters(args.clusters)
        missing = [e.id for e in corpus if e.id not in clusters.assignment]
        if missing:
            raise SchemaError(f"{args.clusters}: no assignment for corpus example {missing[0]!r}")
    spec = PredictorSpec.parse(args.predictor, trees=args.trees, max_depth=args.max_depth,
                               seed=seed, bootstrap=not args.no_bootstrap)
    suite = train_suite(corpus.examples, clusters, spec, args.threads)
    write_atomic(args.out, json.dumps(suite.to_dict(), separators=(",", ":")) + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    train = load_corpus(args.train)
    test = load_corpus(args.test, like=train)
    try:
        suite = PredictorSuite.from_dict(load_json(args.suite), train.examples)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{args.suite}: not a predictor suite ({e})") from None
    split = Split.make(train, test)
    row = ReportRow(suite.spec.label, suite.mode, split.test.ids, evaluate(suite, split))
    fps = {"train": train.fingerprint(), "test": split.test.fingerprint()}
    write_report(EvalReport([row], suite.spec.seed, fps), args)
    return EXIT_OK


def cmd_experiment(args) -> int:
    train = load_corpus(args.train)
    test = load_corpus(args.test, like=train)
    seed = resolve_seed(args)
    cfg = distance_cfg(args)
    clusters = load_clusters(args.clusters) if args.clusters else None
    if clusters is None:
        clusters = cluster_corpus(train.examples, min(args.kmax, len(train)), cfg, seed, args.threshold)
    approaches = tuple(a.strip() for a in args.predictors.split(",") if a.strip())
    for a in approaches:
        PredictorSpec.parse(a)
    base = base_spec(args, seed)
    if args.table == "table1":
        report = experiment_standard_vs_percluster(train, test, seed, approaches, clusters,
                                                   cfg=cfg, base=base, threads=args.threads)
    elif args.table == "table2":
        report = experiment_true_vs_random_cluster(train, test, seed, approaches, clusters,
                                                   cfg=cfg, base=base, threads=args.threads)
    else:
        report = medoid_comment_baseline(clusters, train, test, seed)
    write_report(report, args)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _common(seeded: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    if seeded:
        g.add_argument("--seed", type=int, default=None,
                       help="64-bit seed; generated and recorded when omitted")
    g.add_argument("--threads", type=int, default=1, help="parallelism cap (output is identical for any N)")
    g.add_argument("--config", metavar="FILE",
                   help="key=value lines mirroring long flags; flags on the command line win")
    return p


def _distance(p):
    g = p.add_argument_group("distance")
    g.add_argument("--text-weight", type=float, default=0.75, help="weight of comment distance (default 0.75)")
    g.add_argument("--frame-weight", type=float, default=None,
                   help="weight of sprite distance (default 1 - text weight)")


def _selection(p):
    g = p.add_argument_group("k selection")
    g.add_argument("--kmax", type=int, default=10, help="largest k tried (default 10)")
    g.add_argument("--threshold", type=float, default=0.85,
                   help="distortion-ratio threshold (default 0.85)")


def _forest(p):
    g = p.add_argument_group("forest")
    g.add_argument("--trees", type=int, default=10, help="trees per forest (default 10)")
    g.add_argument("--max-depth", type=int, default=200, help="tree depth limit (default 200)")
    g.add_argument("--no-bootstrap", action="store_true", help="train every tree on the full set")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(
        prog="letsplay", formatter_class=fmt, epilog=EXIT_CODES,
        description="Cluster paired gameplay/commentary data and predict comments from frames.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, helptext, seeded=True):
        return sub.add_parser(name, help=helptext, description=helptext, parents=[_common(seeded)],
                              formatter_class=fmt, epilog=EXIT_CODES)

    p = add("ingest", "pair a transcript with symbolic frames into a corpus JSONL", seeded=False)
    p.add_argument("--transcript", required=True, help="SRT or WebVTT file")
    p.add_argument("--format", choices=("srt", "vtt"), help="transcript format (default: file suffix)")
    p.add_argument("--frames", required=True, help="symbolic frame JSONL ({'t': s, 'sprites': {...}})")
    p.add_argument("--prefix", default="ex", help="example id prefix (default 'ex')")
    p.add_argument("--out", required=True, help="corpus JSONL to write")
    p.set_defaults(func=cmd_ingest)

    p = add("detect", "detect sprites in a directory of PNG frames", seeded=False)
    p.add_argument("--frames-dir", required=True, help="directory of PNG frames, timestamp in file name")
    p.add_argument("--spritesheet", required=True, help="directory of RGBA PNG sprites, stem = name")
    p.add_argument("--tolerance", type=int, default=0, help="per-channel match tolerance (default 0)")
    p.add_argument("--out", required=True, help="symbolic frame JSONL to write")
    p.set_defaults(func=cmd_detect)

    p = add("synth", "generate planted-topic train/test corpora")
    p.add_argument("--topics", type=int, default=6, help="planted topics (default 6)")
    p.add_argument("--train-n", type=int, default=333, help="training examples (default 333)")
    p.add_argument("--test-n", type=int, default=306, help="test examples (default 306)")
    p.add_argument("--noise", type=float, default=0.1, help="off-topic draw probability (default 0.1)")
    p.add_argument("--out-dir", required=True, help="writes train.jsonl, test.jsonl, *.vocab, synth.json")
    p.set_defaults(func=cmd_synth)

    p = add("cluster", "k-medoids over a corpus, k chosen by distortion ratio")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--k", type=int, default=None, help="fixed k (skips selection)")
    _selection(p)
    _distance(p)
    p.add_argument("--out", required=True, help="cluster model JSON to write")
    p.set_defaults(func=cmd_cluster)

    p = add("train", "train a standard or per-cluster predictor suite")
    p.add_argument("--corpus", required=True, help="training corpus JSONL")
    p.add_argument("--clusters", help="cluster model JSON (per-cluster mode)")
    p.add_argument("--predictor", default="forest", help="random | forest | knnK, e.g. knn5 (default forest)")
    p.add_argument("--mode", choices=("standard", "per-cluster"), default="standard")
    _forest(p)
    p.add_argument("--out", required=True, help="suite JSON to write")
    p.set_defaults(func=cmd_train)

    p = add("evaluate", "score a trained suite on a test corpus", seeded=False)
    p.add_argument("--suite", required=True, help="suite JSON from 'train'")
    p.add_argument("--train", required=True, help="corpus the suite was trained on")
    p.add_argument("--test", required=True, help="test corpus JSONL")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--jsonl", help="per-example JSONL (default: report path with .jsonl)")
    p.set_defaults(func=cmd_evaluate)

    p = add("experiment", "standard vs per-cluster, true vs random cluster, or medoid baseline")
    p.add_argument("table", choices=("table1", "table2", "medoid"))
    p.add_argument("--train", required=True, help="training corpus JSONL")
    p.add_argument("--test", required=True, help="test corpus JSONL")
    p.add_argument("--clusters", help="precomputed cluster model JSON (default: cluster --train)")
    p.add_argument("--predictors", default=",".join(DEFAULT_APPROACHES),
                   help="comma list of approaches (default random,forest,knn5,knn10)")
    _selection(p)
    _distance(p)
    _forest(p)
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--jsonl", help="per-example JSONL (default: report path with .jsonl)")
    p.set_defaults(func=cmd_experiment)
    return parser


def read_config(path) -> dict[str, str]:
    """key=value per line; '#' starts a comment; keys use flag names without dashes."""
    out = {}
    for n, line in enumerate(need(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def _scan(argv: list[str], commands) -> tuple[str | None, str | None]:
    """(subcommand, --config path) found by a plain scan, before strict parsing."""
    cmd = next((a for a in argv if a in commands), None)
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return cmd, argv[i + 1]
        if a.startswith("--config="):
            return cmd, a.split("=", 1)[1]
    return cmd, None


def apply_config(sub: argparse.ArgumentParser, command: str, path) -> None:
    """Install config values as parser defaults, so explicit flags still win."""
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    defaults = {}
    for key, raw in read_config(path).items():
        if key not in actions or key in ("config", "help"):
            raise UsageError(f"{path}: unknown key {key!r} for '{command}'")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}: {key} expects true or false")
            defaults[key] = raw.lower() in ("true", "1", "yes")
            continue
        try:
            val = act.type(raw) if act.type else raw
        except ValueError:
            raise UsageError(f"{path}: bad value {raw!r} for {key}") from None
        if act.choices and val not in act.choices:
            raise UsageError(f"{path}: {key} must be one of {sorted(act.choices)}")
        defaults[key] = val
        act.required = False
    sub.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    subs = parser._subparsers._group_actions[0].choices
    try:
        command, config = _scan(argv, subs)
        if config and command:
            apply_config(subs[command], command, config)
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        note(f"error: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        note(f"error: {e}")
        return EXIT_MISSING
    return run(args)


def run(args) -> int:
    try:
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as e:
        note(f"error: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        note(f"error: {e}")
        return EXIT_MISSING
    except (SchemaError, TranscriptParseError, UnicodeDecodeError) as e:
        note(f"error: {e}")
        return EXIT_SCHEMA
    except ValueError as e:
        note(f"error: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
