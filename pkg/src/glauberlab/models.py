"""Model families: hard exclusion on graphs, loss networks, hard rods,
truncated lattice gases, and the two-site convex-interaction example.

Every family fixes a finite site set, a decreasing allowed set A, per-site
birth intensities, and (for the gas families) a pair interaction.  The module
also computes the closed-form decay-bound ingredients: the interaction
strength eps(beta) for gases, and the exhaustive-scan constants eps0/eps1
with kappa_bound = 1 - eps0 + eps1 for the exclusion families.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .statespace import StateSpace

log = logging.getLogger(__name__)

FAMILIES = (
    "hardcore-graph",
    "loss-network",
    "hard-rods",
    "lattice-gas",
    "two-site-convex",
)

EXCLUSION_FAMILIES = ("hardcore-graph", "loss-network", "hard-rods")
GAS_FAMILIES = ("lattice-gas", "two-site-convex")

DEFAULT_N_MAX = 10


# ---------------------------------------------------------------------------
# model type


@dataclass
class Model:
    """A finite birth/death model.

    ``intensity[i]`` is the birth intensity of site i (nu(x), rho, or z
    depending on family).  Exclusion families carry a symmetric boolean
    ``conflict`` matrix (hard pair exclusion) and/or a loss-network
    ``incidence``/``capacities`` pair; gas families carry a pair-interaction
    table over site coordinates plus an occupancy cap ``n_max``.
    """

    family: str
    site_labels: tuple
    intensity: np.ndarray
    conflict: np.ndarray | None = None  # (k, k) bool, exclusion families
    incidence: np.ndarray | None = None  # (n_links, k) int, loss networks
    capacities: np.ndarray | None = None  # (n_links,) int
    coords: np.ndarray | None = None  # (k, d) int, lattice gas
    h_table: dict[tuple, float] | None = None  # displacement -> h >= 0
    beta: float = 0.0
    n_max: int = DEFAULT_N_MAX
    K: Callable[[float], float] | None = None  # two-site convex interaction
    periodic: bool = False
    shape: tuple | None = None  # lattice shape for the gas
    rod_k: int | None = None  # rod length for the hard-rods family
    _pair: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.intensity.ndim == 0:
            self.intensity = np.full(len(self.site_labels), float(self.intensity))
        if self.intensity.shape != (len(self.site_labels),):
            raise ValueError("intensity must be scalar or one value per site")
        if not np.all(self.intensity > 0):
            raise ValueError("intensity must be strictly positive on all sites")

    # -- site protocol used by statespace ---------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.site_labels)

    def site_cap(self, i: int) -> int:
        if self.family in GAS_FAMILIES:
            return self.n_max
        if self.family == "loss-network":
            links = np.flatnonzero(self.incidence[:, i])
            if links.size == 0:
                return self.n_max  # route through no link: cap by convention
            return int(np.min(self.capacities[links] // self.incidence[links, i]))
        return 1  # hard exclusion

    def allowed(self, counts: np.ndarray) -> bool:
        c = np.asarray(counts)
        if c.min() < 0:
            return False
        if self.family in GAS_FAMILIES:
            return bool(c.max() <= self.n_max)
        if self.family == "loss-network":
            return bool(np.all(self.incidence @ c <= self.capacities))
        if c.max() > 1:
            return False
        occ = c > 0
        return not bool(self.conflict[np.ix_(occ, occ)].any())

    # -- gas interaction ---------------------------------------------------

    def pair_matrix(self) -> np.ndarray:
        """(k, k) matrix h(x - y) between sites; zero diagonal."""
        if self.family != "lattice-gas":
            raise ValueError("pair_matrix is defined for the lattice gas only")
        if self._pair is not None:
            return self._pair
        k = self.n_sites
        out = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                d = self.coords[i] - self.coords[j]
                if self.periodic:
                    s = np.asarray(self.shape)
                    d = (d + s // 2) % s - s // 2
                out[i, j] = self.h_table.get(tuple(int(v) for v in d), 0.0)
        self._pair = out
        return out


# ---------------------------------------------------------------------------
# factories


def _conflict_from_edges(n_vertices: int, edges: Sequence[Sequence[int]]) -> np.ndarray:
    conflict = np.zeros((n_vertices, n_vertices), dtype=bool)
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise ValueError("self-loops are not allowed in the conflict graph")
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise ValueError(f"edge ({u},{v}) references an unknown vertex")
        conflict[u, v] = conflict[v, u] = True
    return conflict


def hardcore_graph_model(
    edges: Sequence[Sequence[int]],
    intensity: float | Sequence[float],
    n_vertices: int | None = None,
) -> Model:
    """Hard exclusion on a graph: at most one particle per vertex, never on
    two adjacent vertices."""
    if n_vertices is None:
        n_vertices = 1 + max((max(e) for e in edges), default=-1)
    conflict = _conflict_from_edges(n_vertices, edges)
    return Model(
        family="hardcore-graph",
        site_labels=tuple(range(n_vertices)),
        intensity=np.asarray(intensity, dtype=float),
        conflict=conflict,
    )


def loss_network_model(
    routes: Sequence[Sequence[int]],
    capacities: Sequence[int],
    intensity: float | Sequence[float],
) -> Model:
    """Loss network: sites are routes (sets of links); a configuration is
    allowed when every link's total load stays within its capacity."""
    capacities = np.asarray(capacities, dtype=int)
    n_links = capacities.shape[0]
    incidence = np.zeros((n_links, len(routes)), dtype=int)
    for r, links in enumerate(routes):
        for l in links:
            if not 0 <= int(l) < n_links:
                raise ValueError(f"route {r} uses unknown link {l}")
            incidence[int(l), r] += 1
    return Model(
        family="loss-network",
        site_labels=tuple(tuple(r) for r in routes),
        intensity=np.asarray(intensity, dtype=float),
        incidence=incidence,
        capacities=capacities,
    )


def build_rods(grid: int, k: int) -> tuple[tuple, list[frozenset]]:
    """All horizontal and vertical rods of length k on a grid x grid vertex
    lattice.  A rod is the set of k+1 consecutive vertices it covers; two
    rods conflict iff they share a vertex.
    """
    if k < 1 or grid < k + 1:
        raise ValueError("grid must hold at least one rod (grid >= k+1)")
    labels = []
    cells = []
    for r in range(grid):
        for c in range(grid - k):
            labels.append(("h", r, c))
            cells.append(frozenset((r, c + j) for j in range(k + 1)))
    for c in range(grid):
        for r in range(grid - k):
            labels.append(("v", r, c))
            cells.append(frozenset((r + j, c) for j in range(k + 1)))
    return tuple(labels), cells


def hard_rods_model(grid: int, k: int, intensity: float | Sequence[float]) -> Model:
    """Hard rods: sites are rods of length k on a square vertex grid;
    two rods exclude each other when they share a vertex."""
    labels, cells = build_rods(grid, k)
    n = len(labels)
    conflict = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if cells[i] & cells[j]:
                conflict[i, j] = conflict[j, i] = True
    return Model(
        family="hard-rods",
        site_labels=labels,
        intensity=np.asarray(intensity, dtype=float),
        conflict=conflict,
        shape=(grid, grid),
        rod_k=k,
    )


def rod_conflict_degrees(grid: int, k: int) -> np.ndarray:
    """Number of conflicting rods per rod, by exhaustive geometric counting.

    On a grid large enough to contain a rod whose cells all sit away from
    the boundary, the maximum equals k^2 + 4k + 1.
    """
    _, cells = build_rods(grid, k)
    n = len(cells)
    deg = np.zeros(n, dtype=int)
    for i in range(n):
        deg[i] = sum(1 for j in range(n) if j != i and cells[i] & cells[j])
    return deg


def _validate_h_table(h_table: dict[tuple, float]) -> dict[tuple, float]:
    out: dict[tuple, float] = {}
    for off, v in h_table.items():
        off = tuple(int(x) for x in (off if isinstance(off, (tuple, list)) else (off,)))
        v = float(v)
        if v < 0:
            raise ValueError("pair interaction must be nonnegative")
        if all(x == 0 for x in off):
            if v != 0.0:
                raise ValueError("pair interaction must vanish at zero displacement")
            continue
        out[off] = v
        neg = tuple(-x for x in off)
        if neg in h_table and float(h_table[neg]) != v:
            raise ValueError(f"pair interaction not symmetric at {off}")
        out[neg] = v
    return out


def lattice_gas_model(
    shape: Sequence[int],
    h_table: dict[tuple, float],
    beta: float,
    z: float,
    n_max: int = DEFAULT_N_MAX,
    periodic: bool = False,
) -> Model:
    """Truncated lattice gas on a d-dimensional box of the given shape.

    ``h_table`` maps integer displacement vectors to interaction values;
    it is symmetrized automatically and must be nonnegative with no
    zero-displacement entry.  Occupancies are capped at ``n_max``.
    """
    shape = tuple(int(s) for s in shape)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    coords = np.stack(
        [idx.ravel() for idx in np.indices(shape)], axis=1
    ).astype(int)
    labels = tuple(tuple(c) for c in coords)
    return Model(
        family="lattice-gas",
        site_labels=labels,
        intensity=float(z),
        coords=coords,
        h_table=_validate_h_table(h_table),
        beta=float(beta),
        n_max=int(n_max),
        periodic=periodic,
        shape=shape,
    )


def square_interaction(u: float) -> float:
    """Default two-site interaction K(u) = u^2 (convex, increasing on N)."""
    return float(u) * float(u)


def two_site_model(
    beta: float,
    z: float = 1.0,
    n_max: int = DEFAULT_N_MAX,
    K: Callable[[float], float] = square_interaction,
) -> Model:
    """Two sites with interaction energy K(eta_1 + eta_2), K convex increasing."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return Model(
        family="two-site-convex",
        site_labels=(0, 1),
        intensity=float(z),
        beta=float(beta),
        n_max=int(n_max),
        K=K,
    )


# -- small graph builders (test/CLI conveniences) ---------------------------


def complete_graph(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def cycle_graph(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)]


def path_graph(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def star_graph(n_leaves: int) -> list[tuple[int, int]]:
    return [(0, i) for i in range(1, n_leaves + 1)]


def petersen_graph() -> list[tuple[int, int]]:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return outer + spokes + inner


# ---------------------------------------------------------------------------
# hamiltonian


def hamiltonian(model: Model, eta: np.ndarray) -> float:
    """Interaction energy of a configuration.

    Lattice gas: (1/2) sum_{x,y} h(x-y) eta(x) eta(y); two-site model:
    K(eta_1 + eta_2).  Exclusion families carry no Hamiltonian (their
    interaction is the exclusion rule) and are rejected.
    """
    eta = np.asarray(eta, dtype=float)
    if model.family == "lattice-gas":
        pair = model.pair_matrix()
        return 0.5 * float(eta @ pair @ eta)
    if model.family == "two-site-convex":
        return float(model.K(float(eta.sum())))
    raise ValueError(f"{model.family} has no Hamiltonian")


def grad_plus_H(model: Model, eta: np.ndarray, x: int) -> float:
    """H(eta + delta_x) - H(eta), in closed form (no cancellation)."""
    eta = np.asarray(eta, dtype=float)
    if model.family == "lattice-gas":
        return float(model.pair_matrix()[x] @ eta)
    if model.family == "two-site-convex":
        n = float(eta.sum())
        return float(model.K(n + 1) - model.K(n))
    raise ValueError(f"{model.family} has no Hamiltonian")


def grad_plus_H_matrix(model: Model, counts: np.ndarray) -> np.ndarray:
    """(n_states, n_sites) table of H(eta + delta_x) - H(eta)."""
    counts = np.asarray(counts, dtype=float)
    if model.family == "lattice-gas":
        return counts @ model.pair_matrix().T
    if model.family == "two-site-convex":
        tot = counts.sum(axis=1)
        Kv = np.array([model.K(float(u)) for u in range(int(tot.max()) + 2)])
        return np.repeat(
            (Kv[tot.astype(int) + 1] - Kv[tot.astype(int)])[:, None],
            counts.shape[1],
            axis=1,
        )
    raise ValueError(f"{model.family} has no Hamiltonian")


# ---------------------------------------------------------------------------
# interaction strength eps(beta)


@dataclass
class ContinuumSpec:
    """A continuum gas in a box: dimension, box sides, activity, inverse
    temperature, nonnegative even pair potential, boundary condition."""

    dimension: int
    box: tuple[float, ...]
    z: float
    beta: float
    phi: Callable[[np.ndarray], np.ndarray]
    support_radius: float | None = None
    boundary: np.ndarray | None = None
    periodic: bool = False
    potential_name: str | None = None

    def __post_init__(self):
        self.box = tuple(float(b) for b in self.box)
        if len(self.box) != self.dimension:
            raise ValueError("box must give one side length per dimension")
        if any(b <= 0 for b in self.box):
            raise ValueError("box volume must be positive")
        if self.z <= 0:
            raise ValueError("activity must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.boundary is not None:
            self.boundary = np.atleast_2d(np.asarray(self.boundary, dtype=float))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box))


class QuadratureTruncation(RuntimeError):
    """Quadrature range does not cover the potential's support."""

    def __init__(self, message: str, tail_estimate: float):
        super().__init__(message)
        self.tail_estimate = tail_estimate


def hardcore_potential(R: float) -> Callable[[np.ndarray], np.ndarray]:
    """phi = +inf inside the ball of radius R (hard repulsion), 0 outside."""

    def phi(x: np.ndarray) -> np.ndarray:
        r2 = np.sum(np.atleast_2d(x) ** 2, axis=-1)
        return np.where(r2 <= R * R, np.inf, 0.0)

    phi.support_radius = float(R)
    return phi


def step_potential(R: float, a: float) -> Callable[[np.ndarray], np.ndarray]:
    """phi = a inside the ball of radius R, 0 outside."""

    def phi(x: np.ndarray) -> np.ndarray:
        r2 = np.sum(np.atleast_2d(x) ** 2, axis=-1)
        return np.where(r2 <= R * R, float(a), 0.0)

    phi.support_radius = float(R)
    return phi


def exponential_potential(a: float, ell: float) -> Callable[[np.ndarray], np.ndarray]:
    """phi = a * exp(-|x|/ell): positive everywhere (unbounded support)."""

    def phi(x: np.ndarray) -> np.ndarray:
        r = np.sqrt(np.sum(np.atleast_2d(x) ** 2, axis=-1))
        return float(a) * np.exp(-r / float(ell))

    phi.support_radius = None
    return phi


def _midpoint_integral(spec: ContinuumSpec, L: float, m: int) -> float:
    """Midpoint rule for int (1 - e^{-beta phi}) over [-L, L]^d with m^d cells."""
    d = spec.dimension
    h = 2.0 * L / m
    axes = [(-L + (np.arange(m) + 0.5) * h) for _ in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    with np.errstate(invalid="ignore"):
        vals = -np.expm1(-spec.beta * np.asarray(spec.phi(pts), dtype=float))
    vals = np.where(np.isnan(vals), 1.0, vals)  # beta*inf -> integrand 1
    return float(vals.sum()) * h**d


def epsilon_beta(
    model_or_spec: Model | ContinuumSpec,
    rtol: float = 1e-6,
    quad_range: float | None = None,
    max_cells_per_axis: int = 4096,
) -> float:
    """Interaction strength eps(beta).

    For a lattice gas this is the finite sum over the potential table,
    sum_x (1 - e^{-beta h(x)}).  For a continuum spec it is the integral
    int (1 - e^{-beta phi(x)}) dx, computed by a midpoint rule on the
    potential's support box with grid doubling until the relative change
    is below ``rtol``, then Richardson-extrapolated.

    Raises
    ------
    QuadratureTruncation
        when the potential's support is not covered by the quadrature box
        (the exception carries a tail estimate).
    """
    if isinstance(model_or_spec, Model):
        model = model_or_spec
        if model.family != "lattice-gas":
            raise ValueError("epsilon_beta needs a lattice gas or a continuum spec")
        if model.beta == 0.0:
            return 0.0
        return float(
            sum(-math.expm1(-model.beta * v) for v in model.h_table.values())
        )

    spec = model_or_spec
    if spec.beta == 0.0:
        return 0.0
    L = quad_range if quad_range is not None else spec.support_radius
    if quad_range is None and L is not None:
        # potentials declare a *closed* support ball; nudge the box outward so
        # the boundary-shell tail probe samples strictly outside it
        L = L * (1.0 + 1e-6)
    if L is None:
        L = 2.0 * max(spec.box)
        log.warning(
            "potential support radius unknown; integrating over [-%g, %g]^%d", L, L, spec.dimension
        )
    L = float(L)

    # tail check: sample the integrand on the box boundary shell
    d = spec.dimension
    probe = np.random.default_rng(0).uniform(-L, L, size=(256, d))
    face = np.random.default_rng(1).integers(0, d, size=256)
    sign = np.random.default_rng(2).choice([-1.0, 1.0], size=256)
    probe[np.arange(256), face] = sign * L
    with np.errstate(invalid="ignore"):
        shell = -np.expm1(-spec.beta * np.asarray(spec.phi(probe), dtype=float))
    shell = np.where(np.isnan(shell), 1.0, shell)
    tail_estimate = float(np.mean(shell)) * (2 * d) * (2.0 * L) ** (d - 1) * L

    m = 16
    prev = _midpoint_integral(spec, L, m)
    cur = prev
    converged = False
    while m * 2 <= max_cells_per_axis:
        m *= 2
        cur, prev = _midpoint_integral(spec, L, m), cur
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            converged = True
            break
    value = cur + (cur - prev) / 3.0  # Richardson step for the O(h^2) rule
    if not converged:
        log.warning(
            "epsilon_beta quadrature stopped at %d^%d cells with relative change %.2e",
            m,
            d,
            abs(cur - prev) / max(abs(cur), 1e-300),
        )
    if tail_estimate > max(rtol * max(abs(value), 1e-300), 1e-15):
        raise QuadratureTruncation(
            f"quadrature truncation: potential extends beyond range {L:g} "
            f"(boundary tail estimate {tail_estimate:.3e}); pass a larger quad_range",
            tail_estimate=tail_estimate,
        )
    return max(float(value), 0.0)


# ---------------------------------------------------------------------------
# bound reports


@dataclass
class BoundReport:
    """Closed-form decay-bound ingredients for a model.

    ``kappa_bound`` is the scan-based constant 1 - eps0 + eps1 for exclusion
    families, or 1 - z*eps(beta) for gases.  ``kappa_family`` carries the
    family's closed-form value when one is known (it can differ from the scan
    on small instances whose geometry does not realize the worst case).
    """

    kappa_bound: float
    applicable: bool
    message: str
    epsilon_beta: float | None = None
    epsilon0: float | None = None
    epsilon1: float | None = None
    kappa_family: float | None = None
    family_formula: str | None = None

    def as_dict(self) -> dict:
        return {
            "kappa_bound": self.kappa_bound,
            "applicable": self.applicable,
            "message": self.message,
            "epsilon_beta": self.epsilon_beta,
            "epsilon0": self.epsilon0,
            "epsilon1": self.epsilon1,
            "kappa_family": self.kappa_family,
            "family_formula": self.family_formula,
        }


def hardcore_bounds(model: Model, space: StateSpace | None = None) -> BoundReport:
    """Exhaustive-scan constants for exclusion families.

    eps0 = sup over (eta, x with eta(x) > 0) of
           sum_{y != x} nu(y) * 1(eta - delta_x + delta_y allowed)
                       * 1(eta + delta_y not allowed),
    eps1 = inf over (eta, x with eta(x) > 0) of nu(x) * 1(eta + delta_x not
    allowed), and kappa_bound = 1 - eps0 + eps1, flagged inapplicable when
    eps0 > 1.
    """
    if model.family not in EXCLUSION_FAMILIES:
        raise ValueError(f"hardcore_bounds applies to exclusion families, not {model.family}")
    if space is None:
        space = StateSpace.build(model)
    counts = space.counts
    img = space.move_images()
    n, k = counts.shape
    idx = np.arange(n, dtype=np.int32)
    # addable[y, i] = birth at y is not blocked at state i
    addable = img[2 * np.arange(k), :] != idx[None, :]
    nu = model.intensity

    eps0 = 0.0
    eps1 = math.inf
    for x in range(k):
        occ = counts[:, x] > 0
        if not occ.any():
            continue
        j = img[2 * x + 1, occ]  # eta - delta_x (never blocked when occupied)
        # sum over y != x of nu(y) * addable[y, j] * (1 - addable[y, i])
        contrib = nu[:, None] * (addable[:, j] & ~addable[:, occ])
        contrib[x, :] = 0.0
        eps0 = max(eps0, float(contrib.sum(axis=0).max()))
        eps1 = min(eps1, float((nu[x] * (~addable[x, occ])).min()))
    if not math.isfinite(eps1):  # no state has an occupied site (empty-only A)
        eps1 = 0.0
    kappa = 1.0 - eps0 + eps1
    applicable = eps0 <= 1.0
    message = "" if applicable else f"requires eps0 <= 1 (scan found eps0 = {eps0:g})"

    kappa_family = None
    formula = None
    if np.ptp(nu) == 0.0:
        rho = float(nu[0])
        if model.family == "hardcore-graph":
            delta = int(model.conflict.sum(axis=1).max())
            kappa_family = 1.0 - rho * (delta - 1)
            formula = "1 - rho*(Delta - 1)"
        elif model.family == "hard-rods" and model.rod_k is not None:
            kk = model.rod_k
            kappa_family = 1.0 - rho * (kk * kk + 4 * kk)
            formula = "1 - rho*(k^2 + 4k)"
    return BoundReport(
        kappa_bound=kappa,
        applicable=applicable,
        message=message,
        epsilon0=eps0,
        epsilon1=eps1,
        kappa_family=kappa_family,
        family_formula=formula,
    )


def glauber_kappa_bound(z: float, eps_beta: float) -> BoundReport:
    """Gas decay bound kappa = 1 - z*eps(beta), valid when z*eps(beta) < 1."""
    if z <= 0:
        raise ValueError("activity must be positive")
    if eps_beta < 0:
        raise ValueError("eps(beta) must be nonnegative")
    prod = z * eps_beta
    return BoundReport(
        kappa_bound=1.0 - prod,
        applicable=prod < 1.0,
        message="" if prod < 1.0 else f"requires z*eps(beta) < 1 (got {prod:g})",
        epsilon_beta=eps_beta,
        kappa_family=1.0 - prod,
        family_formula="1 - z*eps(beta)",
    )


def two_site_bound(model: Model) -> BoundReport:
    """Two-site decay bound: kappa = 1 whenever K is convex on the reachable
    totals (verified by second differences up to 2*n_max)."""
    if model.family != "two-site-convex":
        raise ValueError("two_site_bound needs a two-site model")
    Kv = np.array([model.K(float(u)) for u in range(2 * model.n_max + 3)])
    d2 = Kv[2:] - 2.0 * Kv[1:-1] + Kv[:-2]
    convex = bool((d2 >= -1e-12).all())
    return BoundReport(
        kappa_bound=1.0,
        applicable=convex,
        message="" if convex else "K is not convex on the reachable totals",
        kappa_family=1.0,
        family_formula="1 (convex interaction)",
    )


def bound_for_model(model: Model, space: StateSpace | None = None) -> BoundReport:
    """The family's decay bound: occupancy scan for exclusion families,
    1 - z*eps(beta) for the lattice gas, 1 for the convex two-site model."""
    if model.family in EXCLUSION_FAMILIES:
        return hardcore_bounds(model, space)
    if model.family == "lattice-gas":
        z = float(np.max(model.intensity))
        return glauber_kappa_bound(z, epsilon_beta(model))
    return two_site_bound(model)


# ---------------------------------------------------------------------------
# closed-form oracles (used as test fixtures against the scans)


def hardcore_graph_closed_form(max_degree: int, rho: float) -> tuple[float, float, float]:
    """(eps0, eps1, kappa) for hard exclusion on a graph of max degree Delta."""
    return max_degree * rho, rho, 1.0 - rho * (max_degree - 1)


def hard_rods_closed_form(k: int, rho: float) -> tuple[float, float, float]:
    """(eps0, eps1, kappa) for hard rods of length k (worst-case geometry,
    realized when the grid contains an interior rod)."""
    e0 = rho * (k * k + 4 * k + 1)
    return e0, rho, 1.0 - rho * (k * k + 4 * k)


def check_decreasing(model: Model, counts: np.ndarray, samples: int = 200, seed: int = 0) -> bool:
    """Sample enumerated states and verify A is decreasing: removing one
    particle from an allowed state stays allowed."""
    rng = np.random.default_rng(seed)
    n = counts.shape[0]
    take = rng.integers(0, n, size=min(samples, n))
    for i in take:
        eta = counts[i]
        for x in np.flatnonzero(eta > 0):
            down = eta.copy()
            down[x] -= 1
            if not model.allowed(down):
                return False
    return True


# ---------------------------------------------------------------------------
# configuration parsing


def model_from_config(cfg: dict) -> Model:
    """Build a model from a configuration mapping.

    Schema (see README): ``family`` selects the family; hardcore-graph needs
    ``edges`` (+ optional ``n_vertices``) and ``intensity``; loss-network
    needs ``routes``, ``capacities``, ``intensity``; hard-rods needs
    ``grid``, ``k``, ``intensity``; lattice-gas needs ``shape``, ``h``
    (list of [offset, value] pairs), ``beta``, ``z`` (+ optional ``n_max``,
    ``periodic``); two-site-convex needs ``beta`` (+ optional ``z``,
    ``n_max``, ``K`` naming a built-in interaction, default "square").
    """
    if "family" not in cfg:
        raise KeyError("family")
    family = cfg["family"]
    try:
        if family == "hardcore-graph":
            return hardcore_graph_model(
                edges=cfg["edges"],
                intensity=cfg["intensity"],
                n_vertices=cfg.get("n_vertices"),
            )
        if family == "loss-network":
            return loss_network_model(
                routes=cfg["routes"],
                capacities=cfg["capacities"],
                intensity=cfg["intensity"],
            )
        if family == "hard-rods":
            return hard_rods_model(
                grid=int(cfg["grid"]), k=int(cfg["k"]), intensity=cfg["intensity"]
            )
        if family == "lattice-gas":
            h_entries = cfg["h"]
            h_table = {tuple(off): float(v) for off, v in h_entries}
            return lattice_gas_model(
                shape=cfg["shape"],
                h_table=h_table,
                beta=float(cfg["beta"]),
                z=float(cfg["z"]),
                n_max=int(cfg.get("n_max", DEFAULT_N_MAX)),
                periodic=bool(cfg.get("periodic", False)),
            )
        if family == "two-site-convex":
            k_name = cfg.get("K", "square")
            interactions = {"square": square_interaction}
            if k_name not in interactions:
                raise KeyError("K")
            return two_site_model(
                beta=float(cfg["beta"]),
                z=float(cfg.get("z", 1.0)),
                n_max=int(cfg.get("n_max", DEFAULT_N_MAX)),
                K=interactions[k_name],
            )
    except KeyError as exc:
        raise KeyError(f"model config for family {family!r} is missing key {exc}") from exc
    raise ValueError(f"unknown family {family!r}")
