"""Heavy-tailed time-series simulators with closed-form oracle quantities.

Four model kinds:

- ``burr``: iid with survival (1 + x^c)^(-kappa), tail index alpha = c*kappa.
- ``frechet``: iid Frechet with shape alpha.
- ``armax``: x_t = max(lam * x_{t-1}, (1 - lam^alpha)^(1/alpha) * z_t) with
  unit-Frechet(alpha) innovations, initialized at the exact stationary
  unit-Frechet marginal; extremal index 1 - lam^alpha.
- ``marmax``: the same recursion per coordinate, innovations joined by a
  Gumbel copula with dependence coefficient tau (tau = 1 is independence);
  sampled via a positive-stable frailty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dist
from ._kernels import armax_path
from .errors import PreconditionError
from .series import MultiSeries

__all__ = ["ModelSpec", "OracleFacts", "simulate", "oracle"]

_KINDS = ("burr", "frechet", "armax", "marmax")


@dataclass(frozen=True)
class ModelSpec:
    """Simulator configuration; fields are kind-specific."""

    kind: str
    alpha: float = 4.0
    c: float | None = None
    kappa: float | None = None
    lam: tuple = ()
    tau: float | None = None
    d: int = 1

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in _KINDS:
            raise PreconditionError(f"unknown model kind {self.kind!r}")
        if kind == "burr":
            if self.c is None or self.kappa is None or self.c <= 0 or self.kappa <= 0:
                raise PreconditionError("burr requires shape parameters c, kappa > 0")
            object.__setattr__(self, "alpha", self.c * self.kappa)
        else:
            if self.alpha <= 0:
                raise PreconditionError("alpha must be positive")
        lam = self.lam
        if np.ndim(lam) == 0:
            lam = (float(lam),) * max(self.d, 1)
        lam = tuple(float(v) for v in lam)
        if kind in ("armax", "marmax"):
            if not lam or any(not 0.0 <= v < 1.0 for v in lam):
                raise PreconditionError("lam must lie in [0, 1) per coordinate")
        object.__setattr__(self, "lam", lam)
        if kind == "marmax":
            if self.d < 2:
                raise PreconditionError("marmax requires d >= 2")
            if self.tau is None or not 0.0 < self.tau <= 1.0:
                raise PreconditionError("marmax requires tau in (0, 1]")
            if len(lam) != self.d:
                raise PreconditionError("lam length must match d")
        elif self.d != 1:
            raise PreconditionError(f"{kind} is univariate (d = 1)")


@dataclass(frozen=True)
class OracleFacts:
    """Closed-form facts about a model, for Monte Carlo validation."""

    true_quantile: object  # level in (0,1) -> marginal quantile
    extremal_index: float | None
    m_theoretical: np.ndarray | None
    pairwise_tail_dep: float | None


def _frechet_ppf(alpha):
    return lambda p: (-np.log(p)) ** (-1.0 / alpha)


def _burr_ppf(c, kappa):
    return lambda p: ((1.0 - np.asarray(p)) ** (-1.0 / kappa) - 1.0) ** (1.0 / c)


def _gumbel_copula_frechet(rng, n, d, tau, alpha):
    """n x d unit-Frechet(alpha) innovations with Gumbel copula.

    A positive-stable frailty S with Laplace transform exp(-s^tau) gives
    z_j = (S / E_j)^(tau/alpha) with iid unit exponentials E_j.
    """
    E = rng.exponential(1.0, size=(n, d))
    if tau == 1.0:
        return E ** (-1.0 / alpha)
    scale = math.cos(0.5 * math.pi * tau) ** (1.0 / tau)
    S = dist.sample(dist.StableParams(a=tau, sigma=scale, beta=1.0, mu=0.0),
                    n, seed=rng)
    return (S[:, None] / E) ** (tau / alpha)


def simulate(spec: ModelSpec, n: int, seed=None) -> MultiSeries:
    """Simulate ``n`` observations; deterministic given ``seed``."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    kind = spec.kind
    if kind == "burr":
        u = rng.random(n)
        return MultiSeries(_burr_ppf(spec.c, spec.kappa)(u))
    if kind == "frechet":
        return MultiSeries(rng.exponential(1.0, n) ** (-1.0 / spec.alpha))
    if kind == "armax":
        lam = spec.lam[0]
        x0 = rng.exponential(1.0) ** (-1.0 / spec.alpha)
        z = rng.exponential(1.0, n) ** (-1.0 / spec.alpha)
        coef = (1.0 - lam ** spec.alpha) ** (1.0 / spec.alpha)
        return MultiSeries(armax_path(x0, z, lam, coef))
    # marmax
    z = _gumbel_copula_frechet(rng, n + 1, spec.d, spec.tau, spec.alpha)
    cols = []
    for j in range(spec.d):
        lam = spec.lam[j]
        coef = (1.0 - lam ** spec.alpha) ** (1.0 / spec.alpha)
        cols.append(armax_path(z[0, j], z[1:, j], lam, coef))
    return MultiSeries(np.column_stack(cols))


def oracle(spec: ModelSpec) -> OracleFacts:
    """Closed-form marginal quantile and dependence summaries."""
    kind = spec.kind
    if kind == "burr":
        return OracleFacts(true_quantile=_burr_ppf(spec.c, spec.kappa),
                           extremal_index=1.0, m_theoretical=None,
                           pairwise_tail_dep=None)
    if kind == "frechet":
        return OracleFacts(true_quantile=_frechet_ppf(spec.alpha),
                           extremal_index=1.0, m_theoretical=None,
                           pairwise_tail_dep=None)
    if kind == "armax":
        return OracleFacts(true_quantile=_frechet_ppf(spec.alpha),
                           extremal_index=1.0 - spec.lam[0] ** spec.alpha,
                           m_theoretical=None, pairwise_tail_dep=None)
    thetas = {1.0 - v ** spec.alpha for v in spec.lam}
    return OracleFacts(
        true_quantile=_frechet_ppf(spec.alpha),
        extremal_index=thetas.pop() if len(thetas) == 1 else None,
        m_theoretical=np.full(spec.d, spec.d ** (-spec.tau)),
        pairwise_tail_dep=2.0 - 2.0 ** spec.tau)
