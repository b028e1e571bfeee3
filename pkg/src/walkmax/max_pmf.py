"""Distribution of the all-time maximum ``M = max_k S_k``.

Three independent exact-or-statistical routes are provided, plus the
heavy-traffic asymptotic formulas they are compared against:

``geometric_sum``
    ``P(M = y) = P(tau_plus = inf) * u(y)`` with ``u`` the renewal sequence
    of the defective ladder height law.
``lindley``
    Stationary law of ``W' = max(0, W + X)`` by fixed-point iteration.
``closed_form``
    Geometric law for walks that move up at most one lattice step.
``monte_carlo``
    Simulated maxima with a Lundberg-certified stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotSkipFree
from .ladder import DEFAULT_TOL, ascending_ladder, conditioned_ladder
from .lattice import DriftWalkSpec, lundberg_exponent
from .renewal import renewal_sequence

METHODS = ("geometric_sum", "lindley", "closed_form", "monte_carlo")
Z99 = 2.5758293035489004
MC_BLOCK = 4096
LINDLEY_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class MaxPmfResult:
    y_max: int
    pi: np.ndarray
    method: str
    err_bound: object  # float, or per-entry array for monte_carlo

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if np.any(self.pi < 0) or self.pi.sum() > 1 + 1e-9:
            raise ValueError("pi is not a sub-probability vector")


def _require_drift(walk: DriftWalkSpec):
    if walk.drift_a <= 0:
        raise ValueError("the maximum is finite only for strictly negative drift")


def pmf_geometric_sum(walk: DriftWalkSpec, y_max: int, tol: float = DEFAULT_TOL) -> MaxPmfResult:
    _require_drift(walk)
    ladder = ascending_ladder(walk, tol)
    A = ladder.total_A
    Z = conditioned_ladder(ladder)
    u = renewal_sequence(Z, A, y_max).u
    pi = (1.0 - A) * np.asarray(u, dtype=float)
    # a ladder-mass deficit eps moves 1-A by eps and (1-A)*u(y) by at most eps
    err = 2.0 * ladder.trunc_error + 1e-15 * (y_max + 1)
    return MaxPmfResult(y_max=y_max, pi=pi, method="geometric_sum", err_bound=err)


def pmf_lindley(walk: DriftWalkSpec, y_max: int, tol: float = DEFAULT_TOL,
                max_iter: int = LINDLEY_MAX_ITER) -> MaxPmfResult:
    """Iterate the Lindley map from ``W = 0`` on states ``0..Y``.

    ``Y`` is large enough that ``rho**Y < tol``; mass above ``Y`` is held at
    ``Y``. Iteration stops once the total-variation change is below
    ``tol/10`` and the geometric extrapolation of the remaining changes is as
    well.
    """
    _require_drift(walk)
    lo, p = walk.pmf.to_array()
    hi = lo + p.size - 1
    rho = math.exp(-lundberg_exponent(walk.pmf))
    Y = max(int(math.ceil(math.log(tol) / math.log(rho))), y_max) + hi + 1
    w = np.zeros(Y + 1)
    w[0] = 1.0
    prev_change = None
    for _ in range(max_iter):
        new = np.convolve(w, p)
        # new[t] sits at level t + lo
        nxt = new[-lo:-lo + Y + 1].copy()
        nxt[0] += new[:-lo].sum()
        nxt[Y] += new[-lo + Y + 1:].sum()
        change = float(np.abs(nxt - w).sum())
        w = nxt
        if change < tol / 10:
            ratio = change / prev_change if prev_change else 0.0
            if ratio < 1 and change * ratio / (1 - ratio) < tol / 10:
                break
        prev_change = change
    else:
        raise NoConvergence(f"Lindley iteration did not settle within {max_iter} sweeps")
    return MaxPmfResult(y_max=y_max, pi=w[:y_max + 1].copy(), method="lindley", err_bound=tol)


def skipfree_ascent_probability(walk: DriftWalkSpec) -> float:
    """Probability ``r`` of ever reaching ``+span`` for a walk that climbs one step at a time.

    ``r`` is the root in ``(0, 1)`` of ``r = sum_k p_k r**(1-k)``.
    """
    if walk.pmf.kmax > 1:
        raise NotSkipFree(f"largest upward step is {walk.pmf.kmax} lattice units")
    _require_drift(walk)
    coeffs = {1 - k: v for k, v in walk.pmf.probs.items() if v > 0}

    def F(r):
        return math.fsum(v * r ** e for e, v in coeffs.items()) - r

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
    r = lo
    for _ in range(3):
        f = F(r)
        df = math.fsum(e * v * r ** (e - 1) for e, v in coeffs.items() if e) - 1.0
        if df == 0:
            break
        r_new = r - f / df
        if not 0 < r_new < 1:
            break
        r = r_new
    return r


def pmf_closed_form_skipfree(walk: DriftWalkSpec, y_max: int) -> MaxPmfResult:
    r = skipfree_ascent_probability(walk)
    pi = (1.0 - r) * r ** np.arange(y_max + 1)
    return MaxPmfResult(y_max=y_max, pi=pi, method="closed_form", err_bound=1e-14)


def _draw_steps(rng, shape, values, cdf):
    u = rng.random(shape)
    steps = np.full(shape, values[0], dtype=np.int32)
    for c, jump in zip(cdf, np.diff(values)):
        mask = (u >= c).view(np.int8)
        if jump == 1:
            np.add(steps, mask, out=steps)
        else:
            steps += jump * mask
    return steps


def _mc_block(rng, n, values, cdf, K, segment):
    out = np.empty(n, dtype=np.int64)
    S = np.zeros(n, dtype=np.int64)
    M = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    while idx.size:
        path = S[idx, None] + np.cumsum(_draw_steps(rng, (idx.size, segment), values, cdf), axis=1, dtype=np.int64)
        runmax = np.maximum.accumulate(np.maximum(path, M[idx, None]), axis=1)
        stop = (runmax - path) >= K
        done = stop.any(axis=1)
        first = stop.argmax(axis=1)
        out[idx[done]] = runmax[done, first[done]]
        S[idx] = path[:, -1]
        M[idx] = runmax[:, -1]
        idx = idx[~done]
    return out


def simulate_max(walk: DriftWalkSpec, n_paths: int, seed: int, tol: float = 1e-6,
                 y_max: int | None = None) -> MaxPmfResult:
    """Monte Carlo estimate of ``P(M = y)``.

    A path stops once it is ``K`` levels below its running maximum, with
    ``rho**K < tol``, so the recorded maximum is wrong with probability below
    ``tol``. Paths are simulated in blocks of ``MC_BLOCK``; block ``b`` draws
    from the Philox stream keyed by ``seed`` and jumped ``b`` times, so the
    output depends only on ``(walk, n_paths, seed, tol)``.
    """
    _require_drift(walk)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    lo, p = walk.pmf.to_array()
    keep = p > 0
    values = np.arange(lo, lo + p.size)[keep]
    cdf = np.cumsum(p[keep])
    cdf /= cdf[-1]
    cdf = cdf[:-1]
    rho = math.exp(-lundberg_exponent(walk.pmf))
    K = max(int(math.ceil(math.log(tol) / math.log(rho))), 1)
    # typical time to fall K levels below the maximum
    segment = int(min(max(K / (walk.drift_a / walk.span), 32), 4096) // 2) + 1
    maxima = np.empty(n_paths, dtype=np.int64)
    root = np.random.Philox(key=seed)
    for b, start in enumerate(range(0, n_paths, MC_BLOCK)):
        n = min(MC_BLOCK, n_paths - start)
        rng = np.random.Generator(root.jumped(b))
        maxima[start:start + n] = _mc_block(rng, n, values, cdf, K, segment)
    if y_max is None:
        y_max = int(maxima.max())
    counts = np.bincount(maxima, minlength=y_max + 1)[:y_max + 1]
    pi = counts / n_paths
    half = Z99 * np.sqrt(pi * (1.0 - pi) / n_paths)
    return MaxPmfResult(y_max=y_max, pi=pi, method="monte_carlo", err_bound=half)


def compute_max_pmf(walk: DriftWalkSpec, y_max: int, method: str = "geometric_sum",
                    tol: float = DEFAULT_TOL, seed: int = 0, n_paths: int = 100_000) -> MaxPmfResult:
    if method == "geometric_sum":
        return pmf_geometric_sum(walk, y_max, tol)
    if method == "lindley":
        return pmf_lindley(walk, y_max, tol)
    if method == "closed_form":
        return pmf_closed_form_skipfree(walk, y_max)
    if method == "monte_carlo":
        return simulate_max(walk, n_paths, seed, tol=max(tol, 1e-12), y_max=y_max)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else v


def asymptotic_local(a: float, sigma2: float, span: int, y) -> float:
    """Heavy-traffic local approximation ``(2a*span/sigma2) * exp(-2a*y*span/sigma2)``."""
    if a <= 0 or sigma2 <= 0:
        raise ValueError("a and sigma2 must be positive")
    rate = 2.0 * a * span / sigma2
    return _scalar_or_array(rate * np.exp(-rate * np.asarray(y, dtype=float)))


def asymptotic_tail(a: float, sigma2: float, span: int, y) -> float:
    """Heavy-traffic tail ``exp(-2a*y*span/sigma2)``."""
    if a <= 0 or sigma2 <= 0:
        raise ValueError("a and sigma2 must be positive")
    rate = 2.0 * a * span / sigma2
    return _scalar_or_array(np.exp(-rate * np.asarray(y, dtype=float)))


def asymptotic_tail_summed(a: float, sigma2: float, span: int, y) -> float:
    """The local approximation summed over ``x >= y`` as a geometric series."""
    rate = 2.0 * a * span / sigma2
    return asymptotic_local(a, sigma2, span, y) / -math.expm1(-rate)


def tail_from_pmf(pi: np.ndarray) -> np.ndarray:
    """``P(M >= y)`` for ``y = 0..len(pi)-1`` from a (possibly truncated) pmf.

    The mass beyond the last entry is taken as ``1 - sum(pi)``.
    """
    pi = np.asarray(pi, dtype=float)
    beyond = max(1.0 - math.fsum(pi), 0.0)
    return np.cumsum(pi[::-1])[::-1] + beyond
