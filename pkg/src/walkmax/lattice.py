"""Lattice increment distributions.

A :class:`LatticePmf` puts mass ``probs[k]`` on the value ``k * span``. Only
finite supports are represented; callers with infinite-support families must
truncate and renormalise first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Optional, Union

import numpy as np

from .errors import (
    DegenerateSupport,
    DriftUnattainable,
    NoConvergence,
    NotNormalized,
    Periodic,
    PositiveDrift,
)

NORMALIZATION_TOL = 1e-12
TILT_TOL = 1e-12
TILT_THETA_MIN = -50.0
TILT_MAX_ITER = 200


@dataclass(frozen=True)
class LatticePmf:
    span: int
    probs: Mapping[int, float] = field(hash=False)

    def __post_init__(self):
        if int(self.span) != self.span or self.span < 1:
            raise ValueError(f"span must be a positive integer, got {self.span!r}")
        probs = {int(k): float(v) for k, v in sorted(self.probs.items())}
        object.__setattr__(self, "span", int(self.span))
        object.__setattr__(self, "probs", probs)

    @property
    def support(self) -> list[int]:
        return [k for k, v in self.probs.items() if v > 0]

    @property
    def kmin(self) -> int:
        return min(self.support)

    @property
    def kmax(self) -> int:
        return max(self.support)

    def to_array(self) -> tuple[int, np.ndarray]:
        """Dense probabilities over ``kmin..kmax``; returns ``(kmin, array)``."""
        lo, hi = self.kmin, self.kmax
        arr = np.zeros(hi - lo + 1)
        for k, v in self.probs.items():
            if v > 0:
                arr[k - lo] = v
        return lo, arr

    def to_dict(self) -> dict:
        return {"span": self.span, "probs": {str(k): v for k, v in self.probs.items()}}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "LatticePmf":
        try:
            span = doc["span"]
            probs = {int(k): float(v) for k, v in doc["probs"].items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed distribution document: {exc}") from exc
        return cls(span=span, probs=probs)


def load_pmf(path) -> LatticePmf:
    with open(path) as fh:
        return LatticePmf.from_dict(json.load(fh))


def validate(pmf: LatticePmf) -> LatticePmf:
    """Return ``pmf`` unchanged if it is a normalised aperiodic two-sided lattice law."""
    if not pmf.probs:
        raise ValueError("empty distribution")
    values = np.fromiter(pmf.probs.values(), dtype=float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise NotNormalized("probabilities must be finite and non-negative")
    total = math.fsum(values)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"probabilities sum to {total!r}, not 1")
    support = pmf.support
    if not any(k > 0 for k in support) or not any(k < 0 for k in support):
        raise DegenerateSupport("support needs at least one positive and one negative offset")
    g = reduce(math.gcd, (k - support[0] for k in support[1:]), 0)
    if g != 1:
        raise Periodic(f"gcd of support differences is {g}")
    return pmf


def moments(pmf: LatticePmf, s: float = 2.0, cutoff: Optional[int] = None):
    """Mean, variance and truncated ``s``-th moment of the positive part.

    The truncated moment sums ``(k*span)**s * p_k`` over ``0 < k <= cutoff``
    (all positive offsets when ``cutoff`` is None).
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    validate(pmf)
    d = pmf.span
    ks = np.array(list(pmf.probs.keys()), dtype=float)
    ps = np.array(list(pmf.probs.values()))
    m1 = math.fsum(ks * ps)
    m2 = math.fsum(ks * ks * ps)
    mean = d * m1
    variance = d * d * m2 - mean * mean
    keep = (ks > 0) if cutoff is None else (ks > 0) & (ks <= cutoff)
    smom = math.fsum((ks[keep] * d) ** s * ps[keep])
    return mean, variance, smom


@dataclass(frozen=True)
class DriftWalkSpec:
    """A validated increment law together with its drift ``a = -E[X]`` and variance."""

    pmf: LatticePmf
    drift_a: float
    sigma2: float
    tilt_theta: Optional[float] = None

    def __post_init__(self):
        mean, var, _ = moments(self.pmf)
        if abs(self.drift_a + mean) > 1e-10:
            raise ValueError(f"drift_a={self.drift_a} inconsistent with mean {mean}")
        if abs(self.sigma2 - var) > 1e-10 or self.sigma2 <= 0:
            raise ValueError(f"sigma2={self.sigma2} inconsistent with variance {var}")
        if self.drift_a < 0:
            raise PositiveDrift(f"walk has positive drift {-self.drift_a}")

    @classmethod
    def from_pmf(cls, pmf: LatticePmf, tilt_theta: Optional[float] = None) -> "DriftWalkSpec":
        mean, var, _ = moments(pmf)
        if mean > 1e-10:
            raise PositiveDrift(f"walk has positive drift {mean}; its maximum is infinite")
        return cls(pmf=pmf, drift_a=max(-mean, 0.0), sigma2=var, tilt_theta=tilt_theta)

    @property
    def span(self) -> int:
        return self.pmf.span


def _tilted(ks: np.ndarray, ps: np.ndarray, theta: float) -> np.ndarray:
    w = np.log(ps) + theta * ks
    w = np.exp(w - w.max())
    return w / w.sum()


def tilt_to_drift(base: LatticePmf, a: float) -> DriftWalkSpec:
    """Exponentially tilt a zero-mean ``base`` so that its mean becomes ``-a``.

    Solves for ``theta <= 0`` in ``p_k ∝ base_k * exp(theta*k)`` by bisection on
    ``[-50, 0]``; the mean is increasing in ``theta``.
    """
    validate(base)
    if a < 0:
        raise ValueError("drift a must be non-negative")
    mean0, _, _ = moments(base)
    if abs(mean0) > 1e-12:
        raise ValueError(f"base distribution must have zero mean, got {mean0}")
    if a == 0:
        return DriftWalkSpec.from_pmf(base, tilt_theta=0.0)
    d = base.span
    if a >= -d * base.kmin:
        raise DriftUnattainable(f"drift {a} not below the attainable bound {-d * base.kmin}")

    items = [(k, v) for k, v in base.probs.items() if v > 0]
    ks = np.array([k for k, _ in items], dtype=float)
    ps = np.array([v for _, v in items])

    def mean_at(theta):
        return d * math.fsum(ks * _tilted(ks, ps, theta))

    lo, hi = TILT_THETA_MIN, 0.0
    if mean_at(lo) > -a:
        raise DriftUnattainable(f"drift {a} needs a tilt below theta={lo}")
    theta = None
    for _ in range(TILT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        m = mean_at(mid)
        if abs(m + a) <= TILT_TOL:
            theta = mid
            break
        if m > -a:
            hi = mid
        else:
            lo = mid
    if theta is None:
        raise NoConvergence(f"tilt bisection did not reach |mean+a| <= {TILT_TOL}")
    probs = dict(zip((int(k) for k in ks), _tilted(ks, ps, theta)))
    pmf = LatticePmf(span=d, probs=probs)
    mean, var, _ = moments(pmf)
    return DriftWalkSpec(pmf=pmf, drift_a=-mean, sigma2=var, tilt_theta=theta)


@dataclass(frozen=True)
class GenFnEval:
    y: int
    z: float
    f_y: float
    mu_y: float


def _probs_of(dist) -> Mapping[int, float]:
    return getattr(dist, "probs", dist)


def truncated_coeffs(dist, y: int) -> list:
    """Coefficients ``f_0..f_n`` of the series truncated at ``min(y, max offset)``."""
    probs = _probs_of(dist)
    n = min(y, max(probs))
    coeffs = [0.0] * (n + 1)
    for k, v in probs.items():
        if k < 0:
            raise ValueError("generating function needs non-negative offsets")
        if k <= n:
            coeffs[k] = v
    return coeffs


def horner(coeffs, z):
    """Evaluate a polynomial and its derivative at ``z``.

    Works with any numeric type supporting ``+`` and ``*`` (floats, mpmath).
    """
    f = coeffs[-1] * 0
    df = f
    for c in reversed(coeffs):
        df = df * z + f
        f = f * z + c
    return f, df


def gen_fn(dist, y: int, z: float) -> GenFnEval:
    """Truncated generating function ``sum_{k<=y} f_k z^k`` and its derivative."""
    if y < 1:
        raise ValueError("truncation level y must be >= 1")
    if z < 1:
        raise ValueError("z must be >= 1")
    f, df = horner(truncated_coeffs(dist, y), z)
    return GenFnEval(y=y, z=z, f_y=f, mu_y=df)


def convolve(p: Union[Mapping[int, float], np.ndarray], q: Union[Mapping[int, float], np.ndarray]):
    """Exact discrete convolution.

    Mappings ``offset -> mass`` give a mapping back; plain arrays are treated as
    indexed from offset 0 and give an array.
    """
    if not isinstance(p, Mapping) or not isinstance(q, Mapping):
        return np.convolve(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    if not p or not q:
        return {}
    plo, qlo = min(p), min(q)
    pa = np.zeros(max(p) - plo + 1)
    qa = np.zeros(max(q) - qlo + 1)
    for k, v in p.items():
        pa[k - plo] = v
    for k, v in q.items():
        qa[k - qlo] = v
    out = np.convolve(pa, qa)
    return {plo + qlo + i: float(v) for i, v in enumerate(out) if v != 0}


def lundberg_exponent(pmf: LatticePmf) -> float:
    """Positive root ``t`` of ``sum_k p_k exp(t*k) = 1``, in lattice units.

    The value-scale Lundberg root is ``t / span`` and the per-level ascent bound
    is ``rho = exp(-t)``, so that ``P(M >= n*span) <= rho**n``.
    """
    lo_k, arr = pmf.to_array()
    ks = np.arange(lo_k, lo_k + arr.size, dtype=float)
    nz = arr > 0
    ks, ps = ks[nz], arr[nz]
    if math.fsum(ks * ps) >= 0:
        raise ValueError("Lundberg root exists only for negative drift")
    logp = np.log(ps)

    def phi(t):
        w = logp + t * ks
        wmax = w.max()
        return wmax + math.log(np.exp(w - wmax).sum())

    kmax = ks.max()
    hi = -math.log(ps[-1]) / kmax
    while phi(hi) <= 0:
        hi *= 2
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if phi(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo
