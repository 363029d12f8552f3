"""Rate kernels, generator matrices, stationary measures, reversibility.

The generator acts as Qf(eta) = sum_m c(eta, m) (f(m(eta)) - f(eta)) over
birth/death moves m.  Death rates are the occupation numbers; birth rates are
nu(x) on addable sites (exclusion families) or z*e^{-beta * birth energy}
below the occupancy cap (gas families).  Blocked moves carry zero rate in the
stored table, which together with the product-form stationary weights gives
exact detailed balance on the enumerated space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from . import models as _models
from .statespace import StateSpace

DENSIFY_THRESHOLD = 4096


@dataclass
class RateKernel:
    """Move rates on an enumerated space: ``rates[move_id, state]``.

    Move ids follow :func:`glauberlab.statespace.move_id` (2*site + kind).
    Blocked moves have rate 0; the image table maps them to the state itself.
    """

    space: StateSpace
    rates: np.ndarray
    model: _models.Model = field(repr=False)
    _Q: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def n_states(self) -> int:
        return self.space.n_states

    @property
    def n_moves(self) -> int:
        return self.rates.shape[0]

    def images(self) -> np.ndarray:
        return self.space.move_images()

    def matrix(self) -> sp.csr_matrix:
        """The generator matrix for this kernel (cached)."""
        if self._Q is None:
            self._Q = generator_matrix(self)
        return self._Q

    def escape_rates(self) -> np.ndarray:
        """Total rate c(eta, G) per state (finite by construction)."""
        return self.rates.sum(axis=0)


class Assembled(NamedTuple):
    """Everything downstream code needs about a finite model."""

    model: _models.Model
    space: StateSpace
    kernel: RateKernel
    Q: sp.csr_matrix
    pi: np.ndarray


def rate_kernel(model: _models.Model, space: StateSpace | None = None) -> RateKernel:
    """Build the rate table for a model.

    Death(x) at eta has rate eta(x).  Birth(x) has rate nu(x) when eta +
    delta_x stays allowed (exclusion families) and z*e^{-beta*(H(eta +
    delta_x) - H(eta))} below the occupancy cap (gas families); blocked
    births have rate zero.
    """
    if space is None:
        space = StateSpace.build(model)
    counts = space.counts
    img = space.move_images()
    n, k = counts.shape
    idx = np.arange(n, dtype=np.int32)
    rates = np.zeros((2 * k, n))
    if model.family in _models.GAS_FAMILIES:
        grad_h = _models.grad_plus_H_matrix(model, counts)  # (n, k)
    else:
        grad_h = None
    for x in range(k):
        bid, did = 2 * x, 2 * x + 1
        addable = img[bid] != idx
        if grad_h is None:
            rates[bid, addable] = model.intensity[x]
        else:
            rates[bid, addable] = model.intensity[x] * np.exp(
                -model.beta * grad_h[addable, x]
            )
        rates[did] = counts[:, x]
    return RateKernel(space=space, rates=rates, model=model)


def generator_matrix(kernel: RateKernel) -> sp.csr_matrix:
    """Sparse generator Q with off-diagonal move rates and row sums zero."""
    img = kernel.images()
    n = kernel.n_states
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    idx = np.arange(n, dtype=np.int32)
    for mid in range(kernel.n_moves):
        j = img[mid]
        w = kernel.rates[mid]
        active = (j != idx) & (w != 0.0)
        rows.append(idx[active])
        cols.append(j[active])
        vals.append(w[active])
        diag[active] -= w[active]
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    Q = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return Q


def stationary_log_weights(model: _models.Model, space: StateSpace) -> np.ndarray:
    """Unnormalized log stationary weights (product form, times e^{-beta H}
    for gas families)."""
    counts = space.counts.astype(np.int64)
    logw = counts @ np.log(model.intensity) - gammaln(counts + 1.0).sum(axis=1)
    if model.family == "lattice-gas":
        pair = model.pair_matrix()
        c = counts.astype(float)
        h = 0.5 * np.einsum("ni,ij,nj->n", c, pair, c)
        logw = logw - model.beta * h
    elif model.family == "two-site-convex":
        tot = counts.sum(axis=1)
        Kv = np.array([model.K(float(u)) for u in range(int(tot.max()) + 1)])
        logw = logw - model.beta * Kv[tot]
    return logw


def stationary_measure(model: _models.Model, space: StateSpace | None = None) -> np.ndarray:
    """Normalized stationary probability vector over the enumerated states.

    Weights are computed in log space and exponentiated after a max shift,
    so extreme intensities or inverse temperatures cannot underflow the
    normalization.
    """
    if space is None:
        space = StateSpace.build(model)
    logw = stationary_log_weights(model, space)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def check_reversibility(kernel: RateKernel, pi: np.ndarray) -> float:
    """Max detailed-balance violation over non-blocked (state, move) pairs:
    |pi(eta) c(eta, m) - pi(m eta) c(m eta, inverse(m))|."""
    img = kernel.images()
    idx = np.arange(kernel.n_states, dtype=np.int32)
    worst = 0.0
    for mid in range(kernel.n_moves):
        j = img[mid]
        active = j != idx
        if not active.any():
            continue
        lhs = pi[active] * kernel.rates[mid, active]
        rhs = pi[j[active]] * kernel.rates[mid ^ 1, j[active]]
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def assemble(model: _models.Model, max_states: int | None = None) -> Assembled:
    """Enumerate, build rates, generator and stationary measure in one go."""
    if max_states is None:
        space = StateSpace.build(model)
    else:
        space = StateSpace.build(model, max_states=max_states)
    kernel = rate_kernel(model, space)
    Q = kernel.matrix()
    pi = stationary_measure(model, space)
    return Assembled(model=model, space=space, kernel=kernel, Q=Q, pi=pi)


def export_sparse_triplets(Q: sp.spmatrix, path: str) -> None:
    """Write Q as whitespace-separated triplets ``row col value``, one entry
    per line, rows then columns ascending; float values via repr."""
    coo = Q.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {float(coo.data[i])!r}\n")


def export_pi_csv(pi: np.ndarray, counts: np.ndarray, path: str) -> None:
    """Write the stationary measure as CSV with columns
    ``state_index,configuration,pi`` (configuration is space-separated)."""
    with open(path, "w") as fh:
        fh.write("state_index,configuration,pi\n")
        for i, p in enumerate(pi):
            conf = " ".join(str(int(v)) for v in counts[i])
            fh.write(f"{i},{conf},{float(p)!r}\n")
