"""Entropy, relative entropy, Dirichlet forms, and the convexity right-hand
side used by the decay estimates.

Functions taking a positive state function accept anything with strictly
positive entries but work inside the bounded-logarithm class |log f| <= M
(default M = 30): entries outside the cap are clamped, with a warning, so
overflow cannot poison the quadratic forms.
"""

from __future__ import annotations

import logging

import numpy as np

from .generator import RateKernel

log = logging.getLogger(__name__)

DEFAULT_LOG_CAP = 30.0


def _positive(f: np.ndarray, name: str = "f") -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ValueError(f"{name} must be a vector of state values")
    if not np.all(f > 0):
        raise ValueError(f"{name} must be strictly positive")
    return f


def clamp_log(f: np.ndarray, M: float | None = None) -> np.ndarray:
    """Clamp a positive function into the class |log f| <= M."""
    M = DEFAULT_LOG_CAP if M is None else float(M)
    lo, hi = np.exp(-M), np.exp(M)
    if f.min() < lo or f.max() > hi:
        log.warning("state function leaves |log f| <= %g; clamping", M)
        return np.clip(f, lo, hi)
    return f


def entropy(f: np.ndarray, pi: np.ndarray, M: float | None = None) -> float:
    """Ent_pi(f) = pi[f log f] - pi[f] log pi[f], for f > 0.

    Evaluated as pi[f * log(f/mean)] with log1p of the relative deviation,
    which stays accurate for f arbitrarily close to a constant.
    """
    f = clamp_log(_positive(f), M)
    pi = np.asarray(pi, dtype=float)
    if f.shape != pi.shape:
        raise ValueError("f and pi must have matching shapes")
    m = float(pi @ f)
    return float(pi @ (f * np.log1p((f - m) / m)))


def variance(f: np.ndarray, pi: np.ndarray) -> float:
    """var_pi(f) = pi[(f - pi[f])^2]."""
    f = np.asarray(f, dtype=float)
    m = float(pi @ f)
    return float(pi @ (f - m) ** 2)


def relative_entropy(mu: np.ndarray, pi: np.ndarray) -> float:
    """h(mu|pi) = sum mu log(mu/pi); +inf when mu charges a pi-null state."""
    mu = np.asarray(mu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if mu.shape != pi.shape:
        raise ValueError("mu and pi must have matching shapes")
    pos = mu > 0
    if np.any(pi[pos] <= 0):
        return float("inf")
    return float(np.sum(mu[pos] * np.log(mu[pos] / pi[pos])))


def tv_distance(mu: np.ndarray, pi: np.ndarray) -> float:
    """Total variation distance (1/2) sum |mu - pi|, in [0, 1]."""
    mu = np.asarray(mu, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if mu.shape != pi.shape:
        raise ValueError("mu and pi must have matching shapes")
    return 0.5 * float(np.abs(mu - pi).sum())


def dirichlet_form(kernel: RateKernel, pi: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    """E(f,g) = (1/2) sum_{eta,m} pi(eta) c(eta,m) grad_m f grad_m g.

    Computed from the kernel sum (blocked moves contribute zero because
    their gradient vanishes); equality with -pi[g * Qf] is a cross-check,
    not the implementation.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    img = kernel.images()
    total = 0.0
    w = pi[None, :] * kernel.rates
    total = float(np.sum(w * (f[img] - f[None, :]) * (g[img] - g[None, :])))
    return 0.5 * total


def entropy_production(
    kernel: RateKernel, pi: np.ndarray, f: np.ndarray, M: float | None = None
) -> float:
    """E(f, log f) >= 0 from the kernel sum (never via Q log f)."""
    f = clamp_log(_positive(f), M)
    return dirichlet_form(kernel, pi, f, np.log(f))


def mlsi_rhs(kernel: RateKernel, pi: np.ndarray, f: np.ndarray, M: float | None = None) -> float:
    """Right-hand side of the convexity inequality:
    pi[Qf * Q(log f)] + pi[(Qf)^2 / f], for f > 0.

    Degree-1 homogeneous in f, like E(f, log f).
    """
    f = clamp_log(_positive(f), M)
    Q = kernel.matrix()
    qf = Q @ f
    qlogf = Q @ np.log(f)
    return float(pi @ (qf * qlogf) + pi @ (qf * qf / f))
