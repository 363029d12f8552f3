"""Second-order structure of the generators: admissible pair weights r,
their verification, the two summation-by-parts identities, positivity of the
quadratic-entropy form, the key two-variable inequality, and the ratio that
certifies convex entropy decay.

The triple measure R(eta, gamma, delta) = pi(eta) c(eta,gamma) c(eta,delta)
r(eta,gamma,delta) is never materialized: r is evaluated lazily per move-pair
class (its defaults 1, 0 and e^{-beta h} cover almost all triples), and every
sum walks the charged move-pair blocks in a fixed order, so results are
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import kernels as _kernels
from . import models as _models
from .functionals import clamp_log, entropy_production
from .generator import RateKernel
from .statespace import StateSpace

__all__ = [
    "AdmissibleFunction",
    "GammaMeasure",
    "AdmissibilityReport",
    "BochnerResiduals",
    "admissible_r",
    "canonical_r",
    "check_admissibility",
    "bochner_identities",
    "bochner_identities_batch",
    "gamma_positivity",
    "gamma_positivity_batch",
    "gamma_side",
    "gamma_four_terms",
    "key_inequality",
    "final_inequality_ratio",
    "residual_report",
    "multivariate_key_search",
]


# ---------------------------------------------------------------------------
# admissible pair weights


@dataclass
class AdmissibleFunction:
    """Pair weight r(eta, gamma, delta), evaluated lazily per move-pair class.

    ``values(mid_g, mid_d, idx)`` returns r at the given state indices for
    the ordered move pair.  ``admissibility_guaranteed`` is False for the
    generic fallback, which must pass :func:`check_admissibility` before use.
    """

    model: _models.Model
    space: StateSpace
    kind: str = "paper"
    admissibility_guaranteed: bool = True
    kernel: RateKernel | None = field(default=None, repr=False)
    _dd_cache: np.ndarray | None = field(default=None, repr=False)

    def values(self, mid_g: int, mid_d: int, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.kind == "canonical":
            return self._canonical_values(mid_g, mid_d, idx)
        kg, x = mid_g & 1, mid_g >> 1
        kd, y = mid_d & 1, mid_d >> 1
        if kg != kd:  # mixed birth/death
            return np.ones(idx.shape[0])
        if kg == 1:  # death/death
            if x != y:
                return np.ones(idx.shape[0])
            cnt = self.space.counts[idx, x].astype(float)
            return np.where(cnt > 0, (cnt - 1.0) / np.maximum(cnt, 1.0), 0.0)
        # birth/birth
        model = self.model
        if model.family in _models.EXCLUSION_FAMILIES:
            img = self.space.move_images()
            t1 = img[2 * x, idx]
            t2 = img[2 * y, t1]
            return ((t1 != idx) & (t2 != t1)).astype(float)
        if model.family == "lattice-gas":
            val = math.exp(-model.beta * model.pair_matrix()[x, y])
            return np.full(idx.shape[0], val)
        # two-site convex: second difference of K at the current total
        tot = self.space.counts[idx].sum(axis=1).astype(np.int64)
        d2 = self._two_site_second_diff()
        return np.exp(-model.beta * d2[tot])

    def _two_site_second_diff(self) -> np.ndarray:
        if self._dd_cache is None:
            n_hi = 2 * self.model.n_max + 3
            Kv = np.array([self.model.K(float(u)) for u in range(n_hi)])
            self._dd_cache = Kv[2:] - 2.0 * Kv[1:-1] + Kv[:-2]
        return self._dd_cache

    def _canonical_values(self, mid_g: int, mid_d: int, idx: np.ndarray) -> np.ndarray:
        rates = self.kernel.rates
        img = self.space.move_images()
        jg = img[mid_g, idx]
        cd = rates[mid_d, idx]
        cgd = rates[mid_d, jg]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * (cgd / cd + 1.0)
        return np.where(cd > 0, out, 0.0)


def admissible_r(model: _models.Model, space: StateSpace | None = None) -> AdmissibleFunction:
    """The per-family pair weight.

    birth/birth: indicator that both particles can coexist (exclusion
    families) or e^{-beta * second difference of H} (gas families);
    death/death: 1 off-diagonal and (eta(x)-1)/eta(x) on the diagonal;
    mixed pairs: 1.
    """
    if model.family not in _models.FAMILIES:
        raise ValueError(f"unsupported family {model.family!r}")
    if space is None:
        space = StateSpace.build(model)
    return AdmissibleFunction(model=model, space=space, kind="paper")


def canonical_r(kernel: RateKernel) -> AdmissibleFunction:
    """Generic fallback r = (1/2)[c(gamma eta, delta)/c(eta, delta) + 1].

    Admissibility is NOT guaranteed (in particular it need not vanish off
    the commutation set); run it through :func:`check_admissibility` before
    trusting any sum built on it.
    """
    return AdmissibleFunction(
        model=kernel.model,
        space=kernel.space,
        kind="canonical",
        admissibility_guaranteed=False,
        kernel=kernel,
    )


# ---------------------------------------------------------------------------
# the triple measures


@dataclass
class GammaMeasure:
    """R = pi*c*c*r and its complement Gamma = pi*c*c - R on charged triples."""

    kernel: RateKernel
    pi: np.ndarray
    r: AdmissibleFunction
    _charged: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, kernel: RateKernel, pi: np.ndarray, r: AdmissibleFunction | None = None):
        if r is None:
            r = admissible_r(kernel.model, kernel.space)
        return cls(kernel=kernel, pi=np.asarray(pi, dtype=float), r=r)

    def charged_mask(self) -> np.ndarray:
        if self._charged is None:
            self._charged = self.kernel.rates > 0
        return self._charged

    def pcc_values(self, mid_g: int, mid_d: int, idx: np.ndarray) -> np.ndarray:
        rates = self.kernel.rates
        return self.pi[idx] * rates[mid_g, idx] * rates[mid_d, idx]

    def R_values(self, mid_g: int, mid_d: int, idx: np.ndarray) -> np.ndarray:
        return self.pcc_values(mid_g, mid_d, idx) * self.r.values(mid_g, mid_d, idx)

    def gamma_values(self, mid_g: int, mid_d: int, idx: np.ndarray) -> np.ndarray:
        return self.pcc_values(mid_g, mid_d, idx) - self.R_values(mid_g, mid_d, idx)

    def charged_blocks(self) -> Iterator[tuple[int, int, np.ndarray]]:
        """Ordered move pairs (mid_g, mid_d) with the states where both are
        charged, in a fixed deterministic order."""
        mask = self.charged_mask()
        n_moves = self.kernel.n_moves
        per_move = [np.flatnonzero(mask[m]) for m in range(n_moves)]
        for mg in range(n_moves):
            gi = per_move[mg]
            if gi.size == 0:
                continue
            for md in range(n_moves):
                idx = gi[mask[md, gi]]
                if idx.size:
                    yield mg, md, idx


# ---------------------------------------------------------------------------
# admissibility verification


@dataclass
class AdmissibilityReport:
    """Max absolute residuals of the three admissibility conditions.

    ``condition_c`` covers triples away from the occupancy cap; residuals
    produced by the cap are reported separately as ``truncation``.
    """

    condition_a: float
    condition_b: float
    condition_c: float
    truncation: float
    n_triples: int
    n_truncation_triples: int

    def as_dict(self) -> dict:
        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "condition_c": self.condition_c,
            "truncation": self.truncation,
            "n_triples": self.n_triples,
            "n_truncation_triples": self.n_truncation_triples,
        }


def check_admissibility(
    r: AdmissibleFunction, kernel: RateKernel, pi: np.ndarray
) -> AdmissibilityReport:
    """Exhaustively verify the three admissibility conditions.

    a) r vanishes on charged triples whose two moves do not commute;
    b) r is symmetric in the two moves on charged triples;
    c) c(eta,delta) r(eta,gamma,delta) = c(gamma eta,delta) r(gamma eta,
       inverse(gamma), delta) for every charged (eta, gamma) and every move
       delta.

    For gas families, (c)-residuals at the occupancy cap (the boundary the
    finite truncation introduces) are split out as the truncation residual.
    """
    img = kernel.images()
    rates = kernel.rates
    counts = kernel.space.counts
    model = kernel.model
    n_moves = kernel.n_moves
    mask = rates > 0
    gas = model.family in _models.GAS_FAMILIES
    n_max = model.n_max

    res_a = res_b = res_c = res_trunc = 0.0
    n_triples = 0
    n_trunc = 0
    for mg in range(n_moves):
        gi = np.flatnonzero(mask[mg])
        if gi.size == 0:
            continue
        jg = img[mg, gi]
        inv_g = mg ^ 1
        for md in range(n_moves):
            both = gi[mask[md, gi]]
            if both.size:
                r_gd = r.values(mg, md, both)
                t_g = img[mg, both]
                bad = (img[md, t_g] != img[mg, img[md, both]]) & (r_gd != 0.0)
                if bad.any():
                    res_a = max(res_a, float(np.abs(r_gd[bad]).max()))
                res_b = max(
                    res_b, float(np.abs(r_gd - r.values(md, mg, both)).max())
                )
                n_triples += int(both.size)
            lhs = rates[md, gi] * r.values(mg, md, gi)
            rhs = rates[md, jg] * r.values(inv_g, md, jg)
            diff = np.abs(lhs - rhs)
            if gas and (md & 1) == 0:
                y = md >> 1
                at_cap = (counts[gi, y] == n_max) | (counts[jg, y] == n_max)
                n_trunc += int(at_cap.sum())
                if at_cap.any():
                    res_trunc = max(res_trunc, float(diff[at_cap].max()))
                if (~at_cap).any():
                    res_c = max(res_c, float(diff[~at_cap].max()))
            else:
                res_c = max(res_c, float(diff.max()))
    return AdmissibilityReport(
        condition_a=res_a,
        condition_b=res_b,
        condition_c=res_c,
        truncation=res_trunc,
        n_triples=n_triples,
        n_truncation_triples=n_trunc,
    )


# ---------------------------------------------------------------------------
# summation-by-parts identities


@dataclass
class BochnerResiduals:
    boch1: float
    boch2: float
    scale1: float
    scale2: float

    def as_dict(self) -> dict:
        return {
            "boch1": self.boch1,
            "boch2": self.boch2,
            "boch1_scale": self.scale1,
            "boch2_scale": self.scale2,
        }


def _as_batch(f: np.ndarray) -> np.ndarray:
    F = np.ascontiguousarray(np.atleast_2d(np.asarray(f, dtype=float)))
    return F


def bochner_identities_batch(
    gm: GammaMeasure, F: np.ndarray, G: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Residuals of both identities for batches of functions.

    ``F``/``G`` are (B, n_states); returns (res1, scale1, res2, scale2),
    each of shape (B,).  The first identity pairs F with G; the second uses
    F alone and needs F > 0.
    """
    F = _as_batch(F)
    G = _as_batch(G)
    if F.shape != G.shape:
        raise ValueError("F and G must have matching shapes")
    if F.min() <= 0:
        raise ValueError("second identity needs strictly positive f")
    B = F.shape[0]
    acc1 = np.zeros((B, 4))
    acc2 = np.zeros((B, 4))
    img = gm.kernel.images()
    for mg, md, idx in gm.charged_blocks():
        rv = gm.r.values(mg, md, idx)
        nz = rv != 0.0
        if not nz.any():
            continue
        ii = idx[nz]
        w = gm.pcc_values(mg, md, ii) * rv[nz]
        jc = img[mg, ii]
        jb = img[md, ii]
        jd = img[md, jc]
        _kernels.boch1_block(ii, jb, jc, jd, w, F, G, acc1)
        _kernels.boch2_block(ii, jb, jc, jd, w, F, acc2)
    res1 = np.abs(acc1[:, 0] - acc1[:, 1])
    res2 = np.abs(acc2[:, 0] - acc2[:, 1])
    scale1 = np.maximum(np.maximum(acc1[:, 2], acc1[:, 3]), 1e-300)
    scale2 = np.maximum(np.maximum(acc2[:, 2], acc2[:, 3]), 1e-300)
    return res1, scale1, res2, scale2


def bochner_identities(gm: GammaMeasure, f: np.ndarray, g: np.ndarray) -> BochnerResiduals:
    """|LHS - RHS| of both identities by exhaustive summation over R."""
    res1, scale1, res2, scale2 = bochner_identities_batch(gm, f, g)
    return BochnerResiduals(
        boch1=float(res1[0]), boch2=float(res2[0]),
        scale1=float(scale1[0]), scale2=float(scale2[0]),
    )


# ---------------------------------------------------------------------------
# positivity of the quadratic-entropy form


def _gamma_quadratic_batch(gm: GammaMeasure, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(value, abs-scale) per batch member of the R-sum of
    grad_g f * grad_d log f + grad_g f * grad_d f / f."""
    F = _as_batch(F)
    if F.min() <= 0:
        raise ValueError("f must be strictly positive")
    LOGF = np.ascontiguousarray(np.log(F))
    B = F.shape[0]
    acc = np.zeros((B, 2))
    img = gm.kernel.images()
    for mg, md, idx in gm.charged_blocks():
        rv = gm.r.values(mg, md, idx)
        nz = rv != 0.0
        if not nz.any():
            continue
        ii = idx[nz]
        w = gm.pcc_values(mg, md, ii) * rv[nz]
        jc = img[mg, ii]
        jb = img[md, ii]
        _kernels.gamma_block(ii, jb, jc, w, F, LOGF, acc)
    return acc[:, 0], acc[:, 1]


def gamma_positivity(gm: GammaMeasure, f: np.ndarray, tol: float = 1e-12) -> float:
    """The R-sum of grad_gamma f grad_delta log f + grad_gamma f grad_delta
    f / f; guaranteed nonnegative for admissible R, asserted up to
    -tol * scale."""
    value, scale = _gamma_quadratic_batch(gm, f)
    v, s = float(value[0]), float(scale[0])
    if v < -tol * max(s, 1.0):
        raise ArithmeticError(
            f"quadratic-entropy positivity violated: {v:.3e} under scale {s:.3e} "
            f"(is r admissible?)"
        )
    return v


def gamma_positivity_batch(gm: GammaMeasure, F: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Batch version of :func:`gamma_positivity`; one value per row of F,
    each asserted nonnegative up to -tol * its scale."""
    value, scale = _gamma_quadratic_batch(gm, F)
    bad = value < -tol * np.maximum(scale, 1.0)
    if bad.any():
        i = int(np.argmax(bad))
        raise ArithmeticError(
            f"quadratic-entropy positivity violated for function {i}: "
            f"{value[i]:.3e} under scale {scale[i]:.3e}"
        )
    return value


def gamma_four_terms(
    a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four elementary nonnegative summands whose total equals the
    per-triple quadratic-entropy bracket (each of the pattern
    alpha log alpha - alpha log beta + beta - alpha >= 0)."""
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    s1 = d * np.log(d) - d * np.log(b * c / a) + (b * c / a) - d
    s2 = c * np.log(c) - c * np.log(d * a / b) + (d * a / b) - c
    s3 = b * np.log(b) - b * np.log(d * a / c) + (d * a / c) - b
    s4 = a * np.log(a) - a * np.log(b * c / d) + (b * c / d) - a
    return s1, s2, s3, s4


# ---------------------------------------------------------------------------
# the key two-variable inequality


def key_inequality(a, b, tol: float = 1e-12):
    """Both sides of the two-variable inequality and whether it holds.

    lhs = (a-1) log b + (b-1) log a + 2(a-1)(b-1)
    rhs = -[(a-1) log a + (b-1) log b + (a-1)^2/a + (b-1)^2/b]
    holds = lhs >= rhs - tol*scale, scale = max(1, |lhs|, |rhs|).

    Accepts scalars or arrays (elementwise).  Equality holds iff a = b = 1.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError("both arguments must be strictly positive")
    la, lb = np.log(a_arr), np.log(b_arr)
    lhs = (a_arr - 1) * lb + (b_arr - 1) * la + 2.0 * (a_arr - 1) * (b_arr - 1)
    rhs = -((a_arr - 1) * la + (b_arr - 1) * lb
            + (a_arr - 1) ** 2 / a_arr + (b_arr - 1) ** 2 / b_arr)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    holds = lhs >= rhs - tol * scale
    if np.isscalar(a) and np.isscalar(b):
        return float(lhs), float(rhs), bool(holds)
    return lhs, rhs, holds


def multivariate_key_search(
    n_vars: int,
    n_samples: int = 100_000,
    seed: int = 0,
    lo: float = 1e-3,
    hi: float = 1e3,
) -> dict:
    """Search for counterexamples to the naive n-variable extension:

    sum_{i != j} [(a_i - 1) log a_j + (a_i - 1)(a_j - 1)]
      >= -(n-1) sum_i [(a_i - 1) log a_i + (a_i - 1)^2 / a_i].

    For n_vars = 2 this is the two-variable inequality (always true); for
    larger n nothing is asserted — the function reports the worst slack
    found and the argument achieving it.
    """
    if n_vars < 2:
        raise ValueError("need at least two variables")
    rng = np.random.default_rng(seed)
    A = np.exp(rng.uniform(math.log(lo), math.log(hi), size=(n_samples, n_vars)))
    L = np.log(A)
    am1 = A - 1.0
    s_am1, s_log = am1.sum(axis=1), L.sum(axis=1)
    cross_log = am1 * (s_log[:, None] - L)  # sum_{j != i} (a_i-1) log a_j
    cross_prod = am1 * (s_am1[:, None] - am1)
    lhs = cross_log.sum(axis=1) + cross_prod.sum(axis=1)
    diag = (am1 * L + am1**2 / A).sum(axis=1)
    slack = lhs + (n_vars - 1) * diag
    worst = int(np.argmin(slack))
    return {
        "n_vars": n_vars,
        "n_samples": n_samples,
        "min_slack": float(slack[worst]),
        "argmin": A[worst].tolist(),
        "violation_found": bool(slack[worst] < 0),
    }


# ---------------------------------------------------------------------------
# the decay-certifying ratio


def gamma_side(gm: GammaMeasure, f: np.ndarray) -> float:
    """Gamma-sum of grad_gamma f grad_delta log f + grad_gamma f grad_delta
    f / f, evaluated directly from the per-class forms of pi*c*c*(1 - r).

    Mixed pairs and off-diagonal death pairs have r = 1 and drop out; what
    remains is the death diagonal plus the birth-pair block.
    """
    F = _as_batch(f)
    if F.min() <= 0:
        raise ValueError("f must be strictly positive")
    LOGF = np.ascontiguousarray(np.log(F))
    kernel, pi, r = gm.kernel, gm.pi, gm.r
    img = kernel.images()
    counts = kernel.space.counts
    k = kernel.space.n_sites
    B = F.shape[0]
    acc = np.zeros((B, 2))
    # death diagonal: weight pi * eta(x), both corners the death image
    for x in range(k):
        did = 2 * x + 1
        idx = np.flatnonzero(counts[:, x] > 0).astype(np.int64)
        if idx.size == 0:
            continue
        w = pi[idx] * counts[idx, x]
        j = img[did, idx]
        _kernels.gamma_block(idx, j, j, w, F, LOGF, acc)
    # birth pairs: weight pi * c_bx * c_by * (1 - r)
    mask = gm.charged_mask()
    for x in range(k):
        bx = 2 * x
        gi = np.flatnonzero(mask[bx])
        if gi.size == 0:
            continue
        for y in range(k):
            by = 2 * y
            idx = gi[mask[by, gi]]
            if idx.size == 0:
                continue
            one_minus_r = 1.0 - r.values(bx, by, idx)
            nz = one_minus_r != 0.0
            if not nz.any():
                continue
            ii = idx[nz]
            w = gm.pcc_values(bx, by, ii) * one_minus_r[nz]
            jc = img[bx, ii]
            jb = img[by, ii]
            _kernels.gamma_block(ii, jb, jc, w, F, LOGF, acc)
    return float(acc[0, 0])


def final_inequality_ratio(gm: GammaMeasure, f: np.ndarray, M: float | None = None) -> float:
    """Gamma-side divided by E(f, log f); lower-bounds the convexity ratio.

    The denominator is the halved kernel sum E(f, log f) (the target
    inequality's right side is kappa times it).  Rejected for constant f.
    """
    f = clamp_log(np.asarray(f, dtype=float), M)
    den = entropy_production(gm.kernel, gm.pi, f)
    if den <= 0.0 or np.ptp(f) == 0.0:
        raise ValueError("constant f: the certifying ratio is undefined")
    return gamma_side(gm, f) / den


def r_side(gm: GammaMeasure, f: np.ndarray) -> float:
    """The R-sum companion of gamma_side (no positivity assertion)."""
    value, _ = _gamma_quadratic_batch(gm, f)
    return float(value[0])


def residual_report(
    adm: AdmissibilityReport, boch: BochnerResiduals | None = None
) -> dict:
    """Merge residuals into the documented JSON layout (keys condition_a,
    condition_b, condition_c, boch1, boch2, truncation)."""
    out = {
        "condition_a": adm.condition_a,
        "condition_b": adm.condition_b,
        "condition_c": adm.condition_c,
        "truncation": adm.truncation,
        "boch1": None if boch is None else boch.boch1,
        "boch2": None if boch is None else boch.boch2,
    }
    return out
