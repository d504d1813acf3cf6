"""Back-off interpolation kernels.

``backoff_prob`` is called once per (context, outcome) query during decoding
and dominates parse time.  A compiled version is used when the extension is
built; set ``LEXPARSE_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

if os.environ.get("LEXPARSE_PURE_PYTHON"):
    from ._pykernels import backoff_prob, backoff_terms, nested_interpolation
    BACKEND = "python"
else:
    try:
        from ._ckernels import backoff_prob, backoff_terms, nested_interpolation
        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._pykernels import backoff_prob, backoff_terms, nested_interpolation
        BACKEND = "python"

__all__ = ["backoff_prob", "backoff_terms", "nested_interpolation", "BACKEND"]
