"""Pure-numpy implementations of the hot triple-sum kernels.

Each ``*_block`` function processes one move-pair block of charged states:
``i`` indexes the base states, ``jb``/``jc``/``jd`` the three other corners
(delta, gamma, delta-after-gamma images), ``w`` the per-state measure weight.
``F``/``G``/``LOGF`` are (B, n_states) batches of state functions; results
accumulate into ``acc`` row-wise per batch member.

The compiled Cython twin (:mod:`glauberlab._core`) implements the same
signatures; :mod:`glauberlab.kernels` selects between them at import time.
"""

from __future__ import annotations

import numpy as np


def boch1_block(
    i: np.ndarray,
    jb: np.ndarray,
    jc: np.ndarray,
    jd: np.ndarray,
    w: np.ndarray,
    F: np.ndarray,
    G: np.ndarray,
    acc: np.ndarray,
) -> None:
    """First-identity terms: acc[:, :] += [lhs, rhs, sum w|lhs|, sum w|rhs|]."""
    fa, fb, fc, fd = F[:, i], F[:, jb], F[:, jc], F[:, jd]
    ga, gb, gc, gd = G[:, i], G[:, jb], G[:, jc], G[:, jd]
    t_l = (fc - fa) * (gb - ga)
    t_r = 0.25 * (fd - fc - fb + fa) * (gd - gc - gb + ga)
    acc[:, 0] += t_l @ w
    acc[:, 1] += t_r @ w
    acc[:, 2] += np.abs(t_l) @ w
    acc[:, 3] += np.abs(t_r) @ w


def boch2_block(
    i: np.ndarray,
    jb: np.ndarray,
    jc: np.ndarray,
    jd: np.ndarray,
    w: np.ndarray,
    F: np.ndarray,
    acc: np.ndarray,
) -> None:
    """Second-identity terms for positive F: acc rows [lhs, rhs, |lhs|, |rhs|]."""
    fa, fb, fc, fd = F[:, i], F[:, jb], F[:, jc], F[:, jd]
    t_l = (fc - fa) * (fb - fa) / fa
    u = (fd - fc) / fd - (fb - fa) / fb
    v = (fd - fc) ** 2 / (fc * fd) - (fb - fa) ** 2 / (fa * fb)
    t_r = 0.25 * (u * (fd - fc - fb + fa) - v * (fc - fa))
    acc[:, 0] += t_l @ w
    acc[:, 1] += t_r @ w
    acc[:, 2] += np.abs(t_l) @ w
    acc[:, 3] += np.abs(t_r) @ w


def gamma_block(
    i: np.ndarray,
    jb: np.ndarray,
    jc: np.ndarray,
    w: np.ndarray,
    F: np.ndarray,
    LOGF: np.ndarray,
    acc: np.ndarray,
) -> None:
    """Quadratic-entropy terms: acc[:, :] += [value, sum w(|t1|+|t2|)]."""
    fa, fb, fc = F[:, i], F[:, jb], F[:, jc]
    t1 = (fc - fa) * (LOGF[:, jb] - LOGF[:, i])
    t2 = (fc - fa) * (fb - fa) / fa
    acc[:, 0] += (t1 + t2) @ w
    acc[:, 1] += (np.abs(t1) + np.abs(t2)) @ w
