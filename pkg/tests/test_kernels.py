import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexparse._ext import BACKEND, _pykernels

ck = pytest.importorskip("lexparse._ext._ckernels")

counts = st.integers(min_value=0, max_value=50)


@st.composite
def tables(draw):
    """Random consistent back-off tables over a tiny key/outcome space."""
    n = draw(st.integers(1, 4))
    outcomes = ["a", "b", "c"]
    contexts, divs, joints, keys = [], [], [], []
    for i in range(n):
        k = ("k%d" % i,)
        jnt = {}
        for o in outcomes:
            c = draw(counts)
            if c:
                jnt[(k, o)] = c
        tot = sum(jnt.values())
        contexts.append({k: tot} if tot else {})
        divs.append({k: len(jnt)} if tot else {})
        joints.append(jnt)
        keys.append(k)
    return contexts, divs, joints, tuple(keys), draw(st.sampled_from(outcomes + ["z"]))


@settings(max_examples=300, deadline=None)
@given(tables(), st.sampled_from([1.0, 5.0, 0.5]))
def test_backends_agree(tab, factor):
    c, d, j, k, o = tab
    py = _pykernels.backoff_prob(c, d, j, k, o, factor)
    assert ck.backoff_prob(c, d, j, k, o, factor) == py
    es, lams = _pykernels.backoff_terms(c, d, j, k, o, factor)
    assert ck.backoff_terms(c, d, j, k, o, factor) == (es, lams)
    # the fused loop equals the two-step computation
    assert _pykernels.nested_interpolation(es, lams) == pytest.approx(py, rel=1e-12, abs=0)
    assert ck.nested_interpolation(es, lams) == _pykernels.nested_interpolation(es, lams)
    assert 0.0 <= py <= 1.0


def test_nested_interpolation_by_hand():
    assert _pykernels.nested_interpolation([0.5, 0.25, 1.0], [0.5, 0.5, 0.9]) == \
        0.5 * 0.5 + 0.5 * (0.5 * 0.25 + 0.5 * 1.0)


@pytest.mark.skipif(bool(os.environ.get("LEXPARSE_PURE_PYTHON")), reason="forced fallback")
def test_default_backend_is_compiled():
    assert BACKEND == "cython"


def test_env_var_forces_python():
    env = dict(os.environ, LEXPARSE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from lexparse._ext import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
