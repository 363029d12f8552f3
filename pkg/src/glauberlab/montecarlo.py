"""Stochastic simulation: exact-rate event simulation of the finite-space
chains, thinning-based simulation of the continuum gas in a box, the
small-count quadrature oracle for the continuum stationary law, and
empirical estimators.

Randomness contract: every public entry point takes a seed (or SeedSequence)
and is bit-reproducible; ensembles split one root stream into per-trajectory
child streams, so the set of trajectories is independent of evaluation
order.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import product as _iterproduct

import numpy as np
from scipy.stats import qmc

from .generator import Assembled, assemble
from .models import ContinuumSpec, Model

__all__ = [
    "PointConfiguration",
    "Trajectory",
    "EmpiricalDistribution",
    "OracleResult",
    "simulate_finite",
    "simulate_ensemble",
    "simulate_continuum",
    "simulate_continuum_ensemble",
    "continuum_number_dist_oracle",
    "hardcore_pair_partition",
    "mm_infty_mean",
    "mm_infty_var",
    "empirical_distribution",
    "export_trajectory_csv",
    "export_histogram_csv",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# trajectory containers


@dataclass(frozen=True)
class PointConfiguration:
    """A finite set of points inside the box (tuples keep it hashable)."""

    points: tuple[tuple[float, ...], ...]
    box: tuple[float, ...]

    def __post_init__(self):
        for p in self.points:
            if len(p) != len(self.box):
                raise ValueError("point dimension does not match the box")
            if any(not (0.0 <= c <= side) for c, side in zip(p, self.box)):
                raise ValueError(f"point {p} outside the box {self.box}")
        if len(set(self.points)) != len(self.points):
            raise ValueError("duplicate points in a configuration")

    @property
    def n_points(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.empty((0, len(self.box)))
        return np.asarray(self.points, dtype=float)


@dataclass
class Trajectory:
    """Jump times and the states entered at them; times[0] = 0 holds the
    initial state.  States are state indices (finite models) or
    PointConfigurations (continuum)."""

    times: list[float]
    states: list
    seed: object
    model_id: str
    t_end: float
    absorbed: bool = False

    def validate(self, space=None) -> None:
        if not self.times or self.times[0] != 0.0:
            raise ValueError("trajectory must start at time 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("jump times must be strictly increasing")
        if self.times[-1] > self.t_end:
            raise ValueError("jump beyond the simulated horizon")
        for a, b in zip(self.states, self.states[1:]):
            if isinstance(a, PointConfiguration):
                sa, sb = set(a.points), set(b.points)
                if not (
                    (len(sb - sa) == 1 and len(sa - sb) == 0)
                    or (len(sa - sb) == 1 and len(sb - sa) == 0)
                ):
                    raise ValueError("consecutive configurations must differ by one point")
            elif space is not None:
                diff = np.abs(
                    space.counts[int(b)].astype(int) - space.counts[int(a)].astype(int)
                ).sum()
                if diff != 1:
                    raise ValueError("consecutive states must differ by exactly one move")

    def state_at(self, t: float):
        if t < 0.0 or t > self.t_end:
            raise ValueError(f"time {t} outside the simulated horizon [0, {self.t_end}]")
        return self.states[bisect_right(self.times, t) - 1]

    @property
    def n_jumps(self) -> int:
        return len(self.times) - 1


# ---------------------------------------------------------------------------
# finite-space simulation


def _model_id(model: Model) -> str:
    return f"{model.family}[{model.n_sites} sites]"


def simulate_finite(model, t_end: float, seed, init_state: int = 0) -> Trajectory:
    """Statistically exact trajectory of the finite-space chain.

    Holding times are exponential with the state's total escape rate and the
    next move is drawn proportionally to the move rates.  A state with zero
    total rate ends the trajectory early with ``absorbed=True``.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    asm = model if isinstance(model, Assembled) else assemble(model)
    kernel = asm.kernel
    img = kernel.images()
    esc = kernel.escape_rates()
    rng = np.random.default_rng(seed)
    s = int(init_state)
    if not 0 <= s < kernel.n_states:
        raise ValueError("initial state index out of range")
    times, states = [0.0], [s]
    cum_cache: dict[int, np.ndarray] = {}
    t = 0.0
    absorbed = False
    while True:
        tot = float(esc[s])
        if tot <= 0.0:
            absorbed = True
            break
        t = t + rng.exponential(1.0 / tot)
        if t > t_end:
            break
        cum = cum_cache.get(s)
        if cum is None:
            cum = np.cumsum(kernel.rates[:, s])
            cum_cache[s] = cum
        m = int(np.searchsorted(cum, rng.random() * tot, side="right"))
        m = min(m, kernel.n_moves - 1)
        s = int(img[m, s])
        times.append(t)
        states.append(s)
    traj = Trajectory(
        times=times,
        states=states,
        seed=seed,
        model_id=_model_id(asm.model),
        t_end=float(t_end),
        absorbed=absorbed,
    )
    traj.validate(asm.space)
    return traj


def simulate_ensemble(
    model, t_end: float, n_trajectories: int, seed, init_state: int = 0
) -> list[Trajectory]:
    """Independent trajectories from per-trajectory child streams of one
    root seed; the list order matches the spawn order."""
    asm = model if isinstance(model, Assembled) else assemble(model)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_trajectories)
    return [simulate_finite(asm, t_end, child, init_state) for child in children]


# ---------------------------------------------------------------------------
# continuum simulation (thinning)


class _BucketIndex:
    """Grid-bucket spatial index with cell size >= the interaction range, so
    a point's interaction partners always sit in the 3^d surrounding cells."""

    def __init__(self, box: tuple[float, ...], r_cut: float, periodic: bool):
        self.box = np.asarray(box, dtype=float)
        self.periodic = periodic
        self.n_cells = np.maximum(1, (self.box / r_cut).astype(int))
        # with fewer than 3 cells per axis the 3^d neighborhood wraps onto
        # itself; fall back to brute force over all points
        self.brute = bool((self.n_cells < 3).any())
        self.cell_len = self.box / self.n_cells
        self.buckets: dict[tuple, list[int]] = {}
        self.points: dict[int, np.ndarray] = {}
        self._next = 0

    def _cell(self, x: np.ndarray) -> tuple:
        c = np.minimum((x / self.cell_len).astype(int), self.n_cells - 1)
        return tuple(int(v) for v in c)

    def add(self, x: np.ndarray) -> int:
        i = self._next
        self._next += 1
        self.points[i] = x
        self.buckets.setdefault(self._cell(x), []).append(i)
        return i

    def remove(self, i: int) -> None:
        x = self.points.pop(i)
        self.buckets[self._cell(x)].remove(i)

    def neighbors(self, x: np.ndarray):
        if self.brute:
            yield from self.points.values()
            return
        cx = self._cell(x)
        d = self.box.shape[0]
        for off in _iterproduct((-1, 0, 1), repeat=d):
            cell = tuple(
                (cx[a] + off[a]) % int(self.n_cells[a]) if self.periodic else cx[a] + off[a]
                for a in range(d)
            )
            if not self.periodic and any(
                not 0 <= cell[a] < int(self.n_cells[a]) for a in range(d)
            ):
                continue
            for i in self.buckets.get(cell, ()):
                yield self.points[i]


def _min_image(diff: np.ndarray, box: np.ndarray) -> np.ndarray:
    return diff - box * np.round(diff / box)


def _probe_nonnegative(spec: ContinuumSpec, r_cut: float) -> None:
    rng = np.random.default_rng(1234)
    radii = np.linspace(1e-9, max(r_cut, 1e-6), 128)
    for _ in range(8):
        u = rng.standard_normal(spec.dimension)
        u /= np.linalg.norm(u)
        vals = spec.phi(radii[:, None] * u[None, :])
        if np.any(np.asarray(vals) < 0):
            raise ValueError(
                "pair potential takes negative values: thinning would be invalid"
            )


def simulate_continuum(
    spec: ContinuumSpec,
    t_end: float,
    seed,
    init_points: np.ndarray | None = None,
    cutoff: float | None = None,
) -> Trajectory:
    """Exact continuum dynamics in the box by thinning.

    Deaths occur at rate 1 per particle.  Birth locations arrive as a
    Poisson stream of rate z * volume, uniform over the box, and a proposal
    at x is accepted with probability exp(-beta * sum of phi(x - y)) over
    the current particles and the boundary points; phi >= 0 makes this a
    genuine probability.  Rejected proposals change nothing and are not
    recorded as jumps.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    box = np.asarray(spec.box, dtype=float)
    d = spec.dimension
    interacting = spec.beta > 0
    if spec.periodic and spec.boundary is not None:
        raise ValueError("a periodic box has no outside: boundary points not allowed")
    r_cut = None
    index = None
    if interacting:
        r_cut = spec.support_radius
        if r_cut is None or not math.isfinite(r_cut):
            if cutoff is None:
                raise ValueError(
                    "infinite-range potential needs an explicit interaction cutoff"
                )
            r_cut = float(cutoff)
            log.warning(
                "interaction truncated at cutoff %g: simulated process is the "
                "cutoff dynamics, not the original one", r_cut,
            )
        _probe_nonnegative(spec, r_cut)
        index = _BucketIndex(spec.box, r_cut, spec.periodic)
    tau = spec.boundary if spec.boundary is not None else np.empty((0, d))

    rng = np.random.default_rng(seed)
    ids: list[int] = []
    pos_of: dict[int, int] = {}
    next_plain_id = [0]

    def _add(x: np.ndarray) -> None:
        if index is not None:
            i = index.add(x)
        else:
            i = next_plain_id[0]
            next_plain_id[0] += 1
            plain_points[i] = x
        pos_of[i] = len(ids)
        ids.append(i)

    def _remove_at(k: int) -> np.ndarray:
        i = ids[k]
        last = ids[-1]
        ids[k] = last
        pos_of[last] = k
        ids.pop()
        del pos_of[i]
        if index is not None:
            x = index.points[i]
            index.remove(i)
        else:
            x = plain_points.pop(i)
        return x

    plain_points: dict[int, np.ndarray] = {}
    current: list[tuple[float, ...]] = []
    if init_points is not None:
        for p in np.atleast_2d(np.asarray(init_points, dtype=float)):
            _add(p.copy())
            current.append(tuple(p))
    conf = PointConfiguration(points=tuple(current), box=spec.box)
    times, states = [0.0], [conf]

    rate_birth = spec.z * spec.volume
    t = 0.0
    while True:
        n = len(ids)
        rate_tot = rate_birth + n
        t = t + rng.exponential(1.0 / rate_tot)
        if t > t_end:
            break
        u = rng.random() * rate_tot
        if u < rate_birth:
            x = rng.random(d) * box
            if interacting:
                energy = 0.0
                diffs = []
                for y in index.neighbors(x):
                    dv = x - y
                    diffs.append(_min_image(dv, box) if spec.periodic else dv)
                if tau.shape[0]:
                    diffs.extend(x - tau)
                if diffs:
                    energy = float(np.sum(spec.phi(np.asarray(diffs))))
                p_acc = 0.0 if energy == math.inf else math.exp(-spec.beta * energy)
            else:
                p_acc = 1.0
            if p_acc >= 1.0 or rng.random() < p_acc:
                _add(x)
                conf = PointConfiguration(
                    points=conf.points + (tuple(x),), box=spec.box
                )
                times.append(t)
                states.append(conf)
        else:
            k = min(int(u - rate_birth), n - 1)
            x = _remove_at(k)
            pts = list(conf.points)
            pts.remove(tuple(x))
            conf = PointConfiguration(points=tuple(pts), box=spec.box)
            times.append(t)
            states.append(conf)
    traj = Trajectory(
        times=times,
        states=states,
        seed=seed,
        model_id=spec.potential_name or "continuum",
        t_end=float(t_end),
    )
    traj.validate()
    return traj


def simulate_continuum_ensemble(
    spec: ContinuumSpec,
    t_end: float,
    n_trajectories: int,
    seed,
    init_points: np.ndarray | None = None,
    cutoff: float | None = None,
) -> list[Trajectory]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_trajectories)
    return [
        simulate_continuum(spec, t_end, child, init_points=init_points, cutoff=cutoff)
        for child in children
    ]


# ---------------------------------------------------------------------------
# continuum stationary-count oracle


@dataclass
class OracleResult:
    probs: np.ndarray
    stderr: np.ndarray
    partition_terms: np.ndarray
    tail_bound: float


def _config_energy(X: np.ndarray, spec: ContinuumSpec, box: np.ndarray) -> np.ndarray:
    """Total interaction energy of each row-configuration in X (N, n, d):
    internal pairs plus pairs against the boundary points."""
    N, n, _ = X.shape
    E = np.zeros(N)
    for i in range(n):
        for j in range(i + 1, n):
            dv = X[:, i, :] - X[:, j, :]
            if spec.periodic:
                dv = _min_image(dv, box)
            E += np.asarray(spec.phi(dv), dtype=float)
        if spec.boundary is not None and spec.boundary.shape[0]:
            for b in range(spec.boundary.shape[0]):
                dv = X[:, i, :] - spec.boundary[b][None, :]
                E += np.asarray(spec.phi(dv), dtype=float)
    return E


def continuum_number_dist_oracle(
    spec: ContinuumSpec,
    n_max: int,
    n_points: int = 2**14,
    seed: int = 0,
    tail_tol: float = 1e-2,
) -> OracleResult:
    """Stationary particle-count distribution over {0..n_max} by
    quasi-random quadrature of Z_n = (z^n/n!) * integral of e^{-beta H} over
    the n-fold box.

    phi >= 0 keeps every integrand in [0,1], so the neglected tail is
    bounded by sum_{n > n_max} (z|box|)^n/n!; if that exceeds
    tail_tol * sum Z_n the request fails with "increase n_max".
    """
    if n_max < 0 or n_max > 5:
        raise ValueError("oracle supports 0 <= n_max <= 5 (cost grows as volume^n)")
    V = spec.volume
    box = np.asarray(spec.box, dtype=float)
    Z = np.zeros(n_max + 1)
    se = np.zeros(n_max + 1)
    Z[0] = 1.0
    for n in range(1, n_max + 1):
        sob = qmc.Sobol(d=n * spec.dimension, scramble=True, seed=seed + n)
        U = sob.random(n_points)
        X = (U.reshape(n_points, n, spec.dimension)) * box[None, None, :]
        if spec.beta > 0:
            w = np.exp(-spec.beta * _config_energy(X, spec, box))
        else:
            w = np.ones(n_points)
        coeff = spec.z**n / math.factorial(n)
        integral = V**n * float(w.mean())
        Z[n] = coeff * integral
        se[n] = coeff * V**n * float(w.std(ddof=1)) / math.sqrt(n_points)
    lam = spec.z * V
    term = lam ** (n_max + 1) / math.factorial(n_max + 1)
    tail = 0.0
    k = n_max + 1
    while term > tail * 1e-18 + 1e-300:
        tail += term
        k += 1
        term *= lam / k
        if k > n_max + 400:
            break
    total = float(Z.sum())
    if tail > tail_tol * total:
        raise ValueError(
            f"neglected tail {tail:.3e} above tolerance {tail_tol * total:.3e}: "
            f"increase n_max"
        )
    probs = Z / total
    return OracleResult(probs=probs, stderr=se / total, partition_terms=Z, tail_bound=tail)


def hardcore_pair_partition(spec: ContinuumSpec, R: float) -> float:
    """Closed-form Z_2 for the hardcore gas: (z^2/2)(V^2 - excluded volume).

    Periodic box: every point excludes a full d-ball of radius R, so the
    excluded volume is v_d R^d V (requires 2R <= every side).  Free
    one-dimensional box of length L: the allowed region is (L - R)^2.
    """
    V = spec.volume
    if spec.periodic:
        if any(2 * R > side for side in spec.box):
            raise ValueError("exclusion ball wraps onto itself: need 2R <= each side")
        unit_ball = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
        if spec.dimension not in unit_ball:
            raise ValueError("closed form tabulated for d <= 3 only")
        excluded = unit_ball[spec.dimension] * R**spec.dimension * V
        return 0.5 * spec.z**2 * (V * V - excluded)
    if spec.dimension == 1:
        L = spec.box[0]
        if R >= L:
            return 0.0
        return 0.5 * spec.z**2 * (L - R) ** 2
    raise ValueError("free-boundary closed form available in dimension 1 only")


def mm_infty_mean(n0: int, rate: float, t: float) -> float:
    """Mean count of the no-interaction process (births rate, unit deaths)."""
    return n0 * math.exp(-t) + rate * (1.0 - math.exp(-t))


def mm_infty_var(n0: int, rate: float, t: float) -> float:
    """Count variance of the no-interaction process at time t."""
    e = math.exp(-t)
    return n0 * e * (1.0 - e) + rate * (1.0 - e)


# ---------------------------------------------------------------------------
# empirical estimators


@dataclass
class EmpiricalDistribution:
    freq: np.ndarray
    stderr: np.ndarray
    n_samples: int
    kind: str  # "state" or "count"

    def tv_against(self, pi: np.ndarray) -> float:
        p = np.zeros(max(self.freq.shape[0], pi.shape[0]))
        q = p.copy()
        p[: self.freq.shape[0]] = self.freq
        q[: pi.shape[0]] = pi
        return 0.5 * float(np.abs(p - q).sum())


def empirical_distribution(
    trajectories: list[Trajectory], t: float, n_states: int | None = None
) -> EmpiricalDistribution:
    """Across-trajectory frequencies of the state at time t (finite models)
    or of the particle count (continuum), with CLT error bars."""
    if not trajectories:
        raise ValueError("need at least one trajectory")
    samples = [traj.state_at(t) for traj in trajectories]
    N = len(samples)
    if isinstance(samples[0], PointConfiguration):
        counts = np.array([s.n_points for s in samples])
        hi = int(counts.max()) + 1
        freq = np.bincount(counts, minlength=hi) / N
        kind = "count"
    else:
        hi = n_states if n_states is not None else int(max(samples)) + 1
        freq = np.bincount(np.asarray(samples, dtype=int), minlength=hi) / N
        kind = "state"
    stderr = np.sqrt(freq * (1.0 - freq) / N)
    return EmpiricalDistribution(freq=freq, stderr=stderr, n_samples=N, kind=kind)


# ---------------------------------------------------------------------------
# CSV exports


def export_trajectory_csv(path: str, traj: Trajectory) -> None:
    """Finite: time,state_index rows.  Continuum: time,n_points,points with
    points as semicolon-separated space-separated coordinates."""
    continuum = bool(traj.states) and isinstance(traj.states[0], PointConfiguration)
    if continuum:
        lines = ["time,n_points,points"]
        for t, s in zip(traj.times, traj.states):
            pts = ";".join(" ".join(repr(float(c)) for c in p) for p in s.points)
            lines.append(f"{float(t)!r},{s.n_points},{pts}")
    else:
        lines = ["time,state_index"]
        for t, s in zip(traj.times, traj.states):
            lines.append(f"{float(t)!r},{int(s)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def export_histogram_csv(path: str, emp: EmpiricalDistribution) -> None:
    lines = ["value,frequency,stderr"]
    for v in range(emp.freq.shape[0]):
        lines.append(f"{v},{float(emp.freq[v])!r},{float(emp.stderr[v])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
