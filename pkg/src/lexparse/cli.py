"""Command-line interface: ``lexparse train|parse|eval|inspect``.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from typing import Optional

from . import __version__
from .annotate import PUNCT_TAGS, HeadRuleTable, annotate, default_heads
from .decoder import DEFAULT_BEAM, MAX_UNARY_DEPTH, Decoder, TaggedSentence
from .estimation import (LEVEL_VARS, UNKNOWN_THRESHOLD, Lexicon, ModelFileError,
                         ParameterClass, interpolation_breakdown, load_model,
                         save_model, train_counts)
from .evaluate import TokenMismatchError, evaluate_corpus
from .grammar_core import FrameError, GapError
from .treebank_io import (TreebankSyntaxError, read_trees, read_trees_lenient,
                          write_tree)

log = logging.getLogger("lexparse")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
NOPARSE = "(NOPARSE)"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    """Settings shared by the subcommands; loadable from ``key = value`` files."""
    model: int = 2
    head_rules_path: Optional[str] = None
    unknown_threshold: int = UNKNOWN_THRESHOLD
    beam: Optional[float] = DEFAULT_BEAM
    max_unary_depth: int = MAX_UNARY_DEPTH
    punct_tags: frozenset = field(default=PUNCT_TAGS)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.model not in (1, 2, 3):
            raise UsageError("model must be 1, 2 or 3")
        if self.unknown_threshold < 1:
            raise UsageError("unknown_threshold must be at least 1")
        if self.beam is not None and not self.beam > 0:
            raise UsageError("beam must be positive or 'off'")
        if self.max_unary_depth < 0:
            raise UsageError("max_unary_depth must be >= 0")

    @staticmethod
    def _convert(key, value: str):
        if key in ("model", "unknown_threshold", "max_unary_depth"):
            return int(value)
        if key == "beam":
            return None if value.lower() in ("off", "none", "exact") else float(value)
        if key == "punct_tags":
            return frozenset(value.split())
        if key == "head_rules_path":
            return value or None
        raise KeyError(key)

    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        values = {f.name: getattr(base, f.name) for f in fields(cls)} if base else {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise UsageError("config line %d: expected key = value" % n)
            try:
                values[key] = cls._convert(key, value.strip())
            except KeyError:
                raise UsageError("config line %d: unknown key %r" % (n, key))
            except ValueError as e:
                raise UsageError("config line %d: %s" % (n, e))
        return cls(**values)

    @classmethod
    def from_file(cls, path, base=None) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read(), base)

    def head_table(self) -> HeadRuleTable:
        if self.head_rules_path:
            return HeadRuleTable.from_file(self.head_rules_path)
        return default_heads()


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    for name in ("model", "unknown_threshold", "max_unary_depth"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = v
    if getattr(args, "heads", None):
        over["head_rules_path"] = args.heads
    if getattr(args, "exact", False):
        over["beam"] = None
    elif getattr(args, "beam", None) is not None:
        over["beam"] = args.beam
    for k, v in over.items():
        setattr(cfg, k, v)
    cfg.validate()
    return cfg


def _read(path) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise DataError("cannot read %s: %s" % (path, e.strerror or e))


# -- train ---------------------------------------------------------------

def cmd_train(args, out=sys.stdout) -> int:
    cfg = _config(args)
    try:
        heads = cfg.head_table()
    except (OSError, ValueError) as e:
        raise DataError("head rules: %s" % e)
    raw, bad = [], []
    for path in args.treebank:
        trees, errors = read_trees_lenient(_read(path))
        raw.extend(trees)
        bad.extend("%s: %s" % (path, e) for e in errors)
    if bad and not args.skip_bad:
        raise DataError("malformed tree in " + bad[0] + " (use --skip-bad to skip)")
    annotated = []
    for i, r in enumerate(raw):
        try:
            annotated.append(annotate(r, cfg.model, heads))
        except (ValueError, FrameError, GapError) as e:
            bad.append("tree %d: %s" % (i + 1, e))
    if not annotated:
        raise DataError("no usable trees")
    lexicon = Lexicon.build(annotated, threshold=cfg.unknown_threshold)
    counts, skipped = train_counts(annotated, cfg.model, lexicon)
    for i, msg in skipped:
        bad.append("tree %d: %s" % (i + 1, msg))
    config = {"unknown_threshold": cfg.unknown_threshold}
    if cfg.head_rules_path:
        with open(cfg.head_rules_path, "rb") as f:
            config["head_rules_sha256"] = hashlib.sha256(f.read()).hexdigest()
    digest = save_model(args.out, cfg.model, counts, lexicon, config)
    for msg in bad:
        log.warning("skipped %s", msg)
    print("trees\t%d" % len(raw), file=out)
    print("skipped\t%d" % (len(bad)), file=out)
    for cls in ParameterClass:
        print("events:%s\t%d" % (cls.value, counts.n_events(cls)), file=out)
    print("vocabulary\t%d" % lexicon.vocabulary_size(), file=out)
    print("sha256\t%s" % digest, file=out)
    return EXIT_OK


# -- parse ---------------------------------------------------------------

_WORKER = {}


def _init_worker(model_path, beam, max_unary, pretagged, punct):
    params = load_model(model_path)
    _WORKER.update(decoder=Decoder(params, beam=beam, max_unary=max_unary),
                   lexicon=params.lexicon, pretagged=pretagged, punct=punct)


def _parse_line(line: str) -> str:
    w = _WORKER
    if not line.strip():
        return NOPARSE
    try:
        sent = TaggedSentence.from_line(line, w["lexicon"], w["pretagged"], w["punct"])
    except ValueError:
        return NOPARSE
    res = w["decoder"].parse(sent)
    return write_tree(res.tree) if res.ok else NOPARSE


def cmd_parse(args, out=sys.stdout) -> int:
    cfg = _config(args)
    try:
        params = load_model(args.model_file)
    except OSError as e:
        raise DataError("cannot read model %s: %s" % (args.model_file, e.strerror or e))
    except ModelFileError as e:
        raise DataError("%s: %s" % (args.model_file, e))
    if args.model is not None and args.model != params.model:
        raise DataError("%s holds model %d, not model %d" % (args.model_file, params.model, args.model))
    lines = _read(args.input).splitlines()
    init = (args.model_file, cfg.beam, cfg.max_unary_depth, args.pretagged, cfg.punct_tags)
    if args.jobs > 1 and len(lines) > 1:
        import multiprocessing
        with multiprocessing.Pool(args.jobs, _init_worker, init) as pool:
            results = pool.map(_parse_line, lines, chunksize=max(1, len(lines) // (4 * args.jobs)))
    else:
        _WORKER.update(decoder=Decoder(params, beam=cfg.beam, max_unary=cfg.max_unary_depth),
                       lexicon=params.lexicon, pretagged=args.pretagged, punct=cfg.punct_tags)
        results = [_parse_line(x) for x in lines]
    for i, (line, res) in enumerate(zip(lines, results), 1):
        if res == NOPARSE:
            log.warning("line %d: %s", i, "empty input" if not line.strip() else "no parse")
        out.write(res + "\n")
    return EXIT_OK


# -- eval ----------------------------------------------------------------

def _read_test(text: str) -> list:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line == NOPARSE:
            out.append(None)
            continue
        try:
            trees = read_trees(line)
        except TreebankSyntaxError as e:
            raise DataError("test line %d: %s" % (n, e.reason))
        if len(trees) != 1:
            raise DataError("test line %d: expected one tree" % n)
        out.append(trees[0])
    return out


def cmd_eval(args, out=sys.stdout) -> int:
    try:
        gold = read_trees(_read(args.gold))
    except TreebankSyntaxError as e:
        raise DataError("%s: %s" % (args.gold, e))
    test = _read_test(_read(args.test))
    if len(gold) != len(test):
        raise DataError("gold has %d trees but test has %d lines" % (len(gold), len(test)))
    heads = HeadRuleTable.from_file(args.heads) if args.heads else None
    limits = args.max_length or [None]
    reports = []
    for limit in limits:
        try:
            rep = evaluate_corpus(gold, test, traces=args.traces, max_length=limit, heads=heads)
        except TokenMismatchError as e:
            raise DataError(str(e))
        reports.append((limit, rep))
    for i, (limit, rep) in enumerate(reports):
        if i:
            out.write("\n")
        if args.format == "kv":
            if limit is not None:
                out.write("max_length=%d\n" % limit)
            out.write(rep.format_keyvalue() + "\n")
        else:
            title = ("<= %d words" % limit if limit is not None else "all") + \
                " (%d sentences)" % rep.sentence_count
            out.write(rep.format_table(title) + "\n")
    return EXIT_OK


# -- inspect -------------------------------------------------------------

def cmd_inspect(args, out=sys.stdout) -> int:
    try:
        cls = ParameterClass(args.cls)
    except ValueError:
        raise UsageError("unknown parameter class %r; valid classes: %s"
                         % (args.cls, ", ".join(c.value for c in ParameterClass)))
    names = LEVEL_VARS[cls][0]
    values = args.context.split()
    if len(values) != len(names):
        raise UsageError("context for %s needs %d values (%s), got %d"
                         % (cls.value, len(names), " ".join(names), len(values)))
    try:
        params = load_model(args.model_file)
    except OSError as e:
        raise DataError("cannot read model %s: %s" % (args.model_file, e.strerror or e))
    except ModelFileError as e:
        raise DataError("%s: %s" % (args.model_file, e))
    context = dict(zip(names, values))
    try:
        es, lams, final = interpolation_breakdown(cls, context, args.outcome, params.counts)
    except ValueError as e:
        raise UsageError("bad query: %s" % e)
    print("class\t%s" % cls.value, file=out)
    print("context\t%s" % " ".join("%s=%s" % kv for kv in context.items()), file=out)
    print("outcome\t%s" % args.outcome, file=out)
    for i, (e, lam) in enumerate(zip(es, lams), 1):
        print("level %d\te=%r\tlambda=%r" % (i, e, lam), file=out)
    print("final\t%r" % final, file=out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------

def _positive_float(text):
    v = float(text)
    if not v > 0 or math.isinf(v):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lexparse", description="Lexicalised statistical parser.")
    p.add_argument("--version", action="version", version="%(prog)s " + __version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="estimate a model from treebank files")
    t.add_argument("--model", type=int, choices=(1, 2, 3))
    t.add_argument("--heads", help="head rules file (default: bundled rules)")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--threshold", dest="unknown_threshold", type=int,
                   help="words seen fewer times become UNKNOWN (default 5)")
    t.add_argument("--skip-bad", action="store_true", help="skip malformed trees")
    t.add_argument("--config")
    t.add_argument("treebank", nargs="+")
    t.set_defaults(func=cmd_train)

    q = sub.add_parser("parse", help="parse one sentence per line")
    q.add_argument("--model-file", required=True)
    q.add_argument("--model", type=int, choices=(1, 2, 3),
                   help="fail unless the model file holds this model")
    g = q.add_mutually_exclusive_group()
    g.add_argument("--beam", type=_positive_float)
    g.add_argument("--exact", action="store_true", help="no beam pruning")
    q.add_argument("--max-unary", dest="max_unary_depth", type=int)
    q.add_argument("--pretagged", action="store_true", help="tokens are word_TAG")
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--config")
    q.add_argument("input", nargs="?", default="-")
    q.set_defaults(func=cmd_parse)

    e = sub.add_parser("eval", help="PARSEVAL and trace scores")
    e.add_argument("gold")
    e.add_argument("test")
    e.add_argument("--traces", action="store_true")
    e.add_argument("--max-length", type=int, action="append",
                   help="only sentences of at most N words; repeat for several reports")
    e.add_argument("--heads", help="head rules used to locate trace heads")
    e.add_argument("--format", choices=("table", "kv"), default="table")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="show the back-off terms of one probability")
    i.add_argument("model_file")
    i.add_argument("cls", metavar="CLASS")
    i.add_argument("context", help="space-separated level-1 context values")
    i.add_argument("outcome")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args, out)
    except UsageError as e:
        print("lexparse: error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print("lexparse: error: %s" % e, file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # invariant violations end up here
        log.exception("internal error: %s", e)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
