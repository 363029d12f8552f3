"""Finite configuration spaces: enumeration, birth/death moves, discrete gradients.

A configuration is a vector of nonnegative occupation counts indexed by site.
The allowed set A is assumed *decreasing*: removing a particle from an allowed
configuration stays allowed.  That property is what makes prefix-pruned
lexicographic enumeration exact, and it holds for every model family in
:mod:`glauberlab.models` (exclusion constraints and occupancy caps only ever
forbid *adding* particles).

Moves are site births and deaths.  A move whose target would leave A (or go
negative) acts as the identity; gradients through blocked moves are zero.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

DEFAULT_MAX_STATES = 500_000

COUNT_DTYPE = np.int16


class StateSpaceTooLarge(RuntimeError):
    """Raised when enumeration would exceed the configured state cap."""


class MoveKind(enum.IntEnum):
    BIRTH = 0
    DEATH = 1


@dataclass(frozen=True)
class Move:
    """A single-site move: add (``BIRTH``) or remove (``DEATH``) one particle."""

    kind: MoveKind
    site: int

    def __post_init__(self):
        if self.site < 0:
            raise ValueError(f"move references unknown site {self.site}")


def inverse(m: Move) -> Move:
    """Inverse move: birth(x) <-> death(x).  An involution."""
    return Move(MoveKind(1 - int(m.kind)), m.site)


def move_id(m: Move) -> int:
    """Dense integer id: 2*site + kind.  Inverse flips the low bit."""
    return 2 * m.site + int(m.kind)


def move_from_id(mid: int) -> Move:
    return Move(MoveKind(mid & 1), mid >> 1)


class SiteModel(Protocol):
    """What enumeration needs from a model: sites, per-site caps, membership."""

    @property
    def n_sites(self) -> int: ...

    def site_cap(self, i: int) -> int: ...

    def allowed(self, counts: np.ndarray) -> bool: ...


def enumerate_states(model: SiteModel, max_states: int = DEFAULT_MAX_STATES) -> np.ndarray:
    """All allowed configurations, lexicographically ordered by count vector.

    Returns an ``(n_states, n_sites)`` integer array whose rows are the
    configurations.  Enumeration walks the prefix tree site by site in
    ascending count order; because A is decreasing, a disallowed prefix
    (padded with zeros) has no allowed extension, so the subtree is pruned
    and larger counts at the same site are skipped too.

    Raises
    ------
    StateSpaceTooLarge
        if more than ``max_states`` states would be enumerated.
    """
    k = model.n_sites
    caps = [int(model.site_cap(i)) for i in range(k)]
    if any(c < 0 for c in caps):
        raise ValueError("negative site capacity")
    out: list[np.ndarray] = []
    counts = np.zeros(k, dtype=COUNT_DTYPE)

    def visit(i: int) -> None:
        if i == k:
            if len(out) >= max_states:
                raise StateSpaceTooLarge(
                    f"state space too large: more than {max_states} allowed states"
                )
            out.append(counts.copy())
            return
        for v in range(caps[i] + 1):
            counts[i] = v
            if v > 0 and not model.allowed(counts):
                break  # larger v at this site is a superset: also disallowed
            visit(i + 1)
        counts[i] = 0

    if not model.allowed(counts):
        # the empty configuration is always <= any allowed state; an empty A
        # only happens for a degenerate model
        return np.zeros((0, k), dtype=COUNT_DTYPE)
    visit(0)
    return np.array(out, dtype=COUNT_DTYPE)


def apply_move(model: SiteModel, eta: np.ndarray, m: Move) -> np.ndarray:
    """Apply a move; blocked moves act as the identity.

    A birth is blocked when the target leaves A; a death is blocked when the
    site is empty (for decreasing A a nonempty death never leaves A).
    """
    if m.site >= model.n_sites:
        raise ValueError(
            f"move references unknown site {m.site} (model has {model.n_sites} sites)"
        )
    out = np.array(eta, dtype=COUNT_DTYPE, copy=True)
    if m.kind == MoveKind.BIRTH:
        out[m.site] += 1
        if not model.allowed(out):
            out[m.site] -= 1
    else:
        if out[m.site] > 0:
            out[m.site] -= 1
            if not model.allowed(out):  # pragma: no cover - decreasing A
                out[m.site] += 1
    return out


def discrete_gradient(
    f: Callable[[np.ndarray], float], model: SiteModel, eta: np.ndarray, m: Move
) -> float:
    """f(m(eta)) - f(eta); zero whenever the move is blocked."""
    return float(f(apply_move(model, eta, m))) - float(f(np.asarray(eta)))


@dataclass
class StateSpace:
    """An enumerated state space with move-image tables.

    ``counts`` rows are the configurations in canonical (lexicographic)
    order; ``index`` maps a row's bytes to its ordinal.  ``move_images()``
    gives, for every move id and state, the index of the target state
    (the state itself when the move is blocked).
    """

    model: SiteModel
    counts: np.ndarray
    index: dict[bytes, int] = field(repr=False)
    _images: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, model: SiteModel, max_states: int = DEFAULT_MAX_STATES) -> "StateSpace":
        counts = enumerate_states(model, max_states=max_states)
        index = {counts[i].tobytes(): i for i in range(counts.shape[0])}
        return cls(model=model, counts=counts, index=index)

    @property
    def n_states(self) -> int:
        return self.counts.shape[0]

    @property
    def n_sites(self) -> int:
        return self.counts.shape[1]

    @property
    def n_moves(self) -> int:
        return 2 * self.n_sites

    def state_index(self, eta: np.ndarray) -> int:
        key = np.asarray(eta, dtype=COUNT_DTYPE).tobytes()
        try:
            return self.index[key]
        except KeyError:
            raise KeyError(f"configuration {np.asarray(eta).tolist()} is not an allowed state")

    def move_images(self) -> np.ndarray:
        """(n_moves, n_states) int32 table of move targets; self if blocked.

        Membership in A is decided by lookup in the exhaustive enumeration,
        so no extra allowed() calls are needed.
        """
        if self._images is not None:
            return self._images
        n, k = self.counts.shape
        img = np.empty((2 * k, n), dtype=np.int32)
        self_idx = np.arange(n, dtype=np.int32)
        for x in range(k):
            for kind in (MoveKind.BIRTH, MoveKind.DEATH):
                mid = 2 * x + int(kind)
                cand = self.counts.copy()
                cand[:, x] += 1 if kind == MoveKind.BIRTH else -1
                col = np.empty(n, dtype=np.int32)
                lookup = self.index
                for i in range(n):
                    if cand[i, x] < 0:
                        col[i] = i
                    else:
                        col[i] = lookup.get(cand[i].tobytes(), i)
                img[mid] = col
                del cand
        img.setflags(write=False)
        self_idx = None
        self._images = img
        return img
