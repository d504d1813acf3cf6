"""Compare the compiled and pure-Python back-off kernels.

Two measurements on the bundled toy treebank (model 3):

* raw kernel throughput: every (class, keys, outcome) query that training
  produces, plus the same queries with a perturbed outcome (unseen events),
  evaluated with each backend directly;
* end-to-end parse time with each backend, run in a subprocess so the
  backend is chosen at import as in normal use.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import os
import subprocess
import sys
import time
from importlib import resources

from lexparse._ext import _pykernels
from lexparse.annotate import annotate
from lexparse.estimation import LAMBDA_FACTOR, Lexicon, event_observations, train_counts
from lexparse.grammar_core import tree_event_sequence
from lexparse.treebank_io import read_trees

try:
    from lexparse._ext import _ckernels
except ImportError:
    _ckernels = None

PARSE_SNIPPET = r"""
import time
from importlib import resources
from lexparse import _ext
from lexparse.annotate import annotate
from lexparse.decoder import Decoder, TaggedSentence
from lexparse.estimation import Lexicon, ParameterTables, train_counts
from lexparse.treebank_io import read_trees
raw = read_trees(resources.files("lexparse").joinpath("data/toy_treebank.mrg").read_text())
trees = [annotate(r, 3) for r in raw]
lex = Lexicon.build(trees, threshold=1)
counts, _ = train_counts(trees, 3, lex)
best = None
for _ in range(%d):
    params = ParameterTables(3, counts, lex)   # fresh probability cache
    dec = Decoder(params, beam=None)
    t0 = time.perf_counter()
    for t in trees:
        dec.parse(TaggedSentence.from_words([w for w, _ in t.tokens()], lex))
    dt = time.perf_counter() - t0
    best = dt if best is None else min(best, dt)
print(_ext.BACKEND, best)
"""


def queries():
    raw = read_trees(resources.files("lexparse").joinpath("data/toy_treebank.mrg").read_text())
    trees = [annotate(r, 3) for r in raw]
    lex = Lexicon.build(trees, threshold=1)
    counts, _ = train_counts(trees, 3, lex)
    qs = []
    for t in trees:
        for ev in tree_event_sequence(t, 3):
            for cls, keys, outcome in event_observations(ev, lex.map_word):
                tables = (counts.context[cls], counts.diversity[cls], counts.joint[cls])
                qs.append(tables + (keys, outcome))
                qs.append(tables + (keys, outcome + "#"))
    return qs


def time_kernel(fn, qs, repeat):
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        for ctx, div, jnt, keys, outcome in qs:
            fn(ctx, div, jnt, keys, outcome, LAMBDA_FACTOR)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best


def time_parse(pure, repeat):
    env = dict(os.environ)
    env.pop("LEXPARSE_PURE_PYTHON", None)
    if pure:
        env["LEXPARSE_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", PARSE_SNIPPET % repeat], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    qs = queries()
    print("kernel queries: %d" % len(qs))
    t_py = time_kernel(_pykernels.backoff_prob, qs, args.repeat)
    print("  python   %8.2f ms" % (1000 * t_py))
    if _ckernels is None:
        print("  cython   (extension not built)")
    else:
        mismatch = max(abs(_ckernels.backoff_prob(c, d, j, k, o, LAMBDA_FACTOR)
                           - _pykernels.backoff_prob(c, d, j, k, o, LAMBDA_FACTOR))
                       for c, d, j, k, o in qs)
        t_c = time_kernel(_ckernels.backoff_prob, qs, args.repeat)
        print("  cython   %8.2f ms   speedup %.2fx   max |diff| %.1e"
              % (1000 * t_c, t_py / t_c, mismatch))
    print("parse 50 toy sentences, model 3, exact search:")
    for pure in (True, False):
        backend, dt = time_parse(pure, args.repeat)
        print("  %-8s %8.2f ms" % (backend, 1000 * dt))


if __name__ == "__main__":
    main()
