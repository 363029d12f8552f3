"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set ``GLAUBERLAB_PURE=1`` to force the pure-numpy backend even when the
compiled extension is importable.  Both backends implement identical
signatures and are cross-checked by the parity tests.
"""

from __future__ import annotations

import os

import numpy as np

from . import _core_py

HAVE_COMPILED = False
_impl = _core_py

if os.environ.get("GLAUBERLAB_PURE") != "1":
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]

        _impl = _compiled
        HAVE_COMPILED = True
    except ImportError:
        pass


def backend_name() -> str:
    return "compiled" if _impl is not _core_py else "numpy"


def _idx(a) -> np.ndarray:
    """Index arrays in the exact layout the compiled views require."""
    return np.ascontiguousarray(a, dtype=np.int64)


def _flt(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def boch1_block(i, jb, jc, jd, w, F, G, acc) -> None:
    _impl.boch1_block(_idx(i), _idx(jb), _idx(jc), _idx(jd), _flt(w), F, G, acc)


def boch2_block(i, jb, jc, jd, w, F, acc) -> None:
    _impl.boch2_block(_idx(i), _idx(jb), _idx(jc), _idx(jd), _flt(w), F, acc)


def gamma_block(i, jb, jc, w, F, LOGF, acc) -> None:
    _impl.gamma_block(_idx(i), _idx(jb), _idx(jc), _flt(w), F, LOGF, acc)
