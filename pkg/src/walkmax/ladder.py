"""Ladder heights and ladder epochs of a lattice random walk.

Two computational routes are used:

* for a walk with strictly negative drift, a forward dynamic programme over
  the paths that have not yet left the half-line, with truncation bounds
  certified by the Lundberg inequality ``P(M >= n*span) <= rho**n``;
* at zero drift, where those forward iterations converge only like
  ``n**-0.5``, a banded linear solve for the harmonic functions of the walk
  on a truncated half-line, with the truncation depth doubled until the
  answer stabilises.

Everything is computed in lattice units and rescaled by ``span`` on output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import solve_banded

from .errors import Inconsistent, NoConvergence
from .lattice import DriftWalkSpec, lundberg_exponent

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEPS = 2_000_000
_HARMONIC_MIN_DEPTH = 32
_HARMONIC_MAX_DEPTH = 1 << 16


@dataclass(frozen=True)
class DefectiveLadderPmf:
    """Sub-probability law of the first strict ascending ladder height.

    ``heights[k]`` is ``P(chi = k*span, tau_plus < inf)``; ``trunc_error``
    bounds the ladder mass not captured in ``heights``.
    """

    span: int
    heights: Mapping[int, float] = field(hash=False)
    total_A: float
    trunc_error: float

    def __post_init__(self):
        if not 0 < self.total_A <= 1 + 1e-12:
            raise ValueError(f"total_A={self.total_A} outside (0, 1]")
        if self.trunc_error < 0 or self.total_A + self.trunc_error > 1 + 1e-12:
            raise ValueError("inconsistent truncation error")


@dataclass(frozen=True)
class ConditionedLadderPmf:
    span: int
    probs: Mapping[int, float] = field(hash=False)
    mu: float


@dataclass(frozen=True)
class DescendingLadderStats:
    mean_tau_minus: float
    mean_S_tau_minus: float
    err_tau_minus: float
    err_S_tau_minus: float


def _increments(walk: DriftWalkSpec):
    lo, arr = walk.pmf.to_array()
    return lo, lo + arr.size - 1, arr


def ascending_ladder(walk: DriftWalkSpec, tol: float = DEFAULT_TOL,
                     max_steps: int = DEFAULT_MAX_STEPS) -> DefectiveLadderPmf:
    """Law of the first strict ascending ladder height."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if walk.drift_a > 0:
        return _ascending_dp(walk, tol, max_steps)
    return _ascending_harmonic(walk, tol)


def _ascending_dp(walk, tol, max_steps):
    lo, hi, p = _increments(walk)
    rho = math.exp(-lundberg_exponent(walk.pmf))
    # anything pushed below -L is at least L+2 levels under the target
    depth = max(int(math.ceil(math.log(tol / 2) / math.log(rho))) - 2, -lo)
    # index i <-> position j = i - depth, j in [-depth, 0]
    g = np.zeros(depth + 1)
    g[depth] = 1.0
    weight = rho ** (1.0 - np.arange(-depth, 1))
    captured = np.zeros(hi + 1)
    leak_bound = 0.0
    n_below = -lo
    leak_weight = rho ** (1.0 - np.arange(-depth + lo, -depth))
    for step in range(1, max_steps + 1):
        new = np.convolve(g, p)
        # new[t] sits at position t + lo - depth
        leaked = new[:n_below]
        if leaked.any():
            leak_bound += float(leaked @ leak_weight)
        captured[1:] += new[n_below + depth + 1:]
        g = new[n_below:n_below + depth + 1]
        if step % 16 == 0 or step < 16:
            remaining = float(g @ weight)
            if remaining + leak_bound < tol:
                break
    else:
        raise NoConvergence(
            f"ascending ladder DP did not reach tol={tol} within {max_steps} steps")
    heights = {k: float(captured[k]) for k in range(1, hi + 1) if captured[k] > 0}
    total = math.fsum(heights.values())
    return DefectiveLadderPmf(span=walk.span, heights=heights, total_A=total,
                              trunc_error=remaining + leak_bound)


def _banded(depth, lo, hi, p, clamp_low):
    """Banded ``I - Q`` for the walk killed on leaving a window of ``depth+1`` states.

    With ``clamp_low`` the window is ``[-depth, 0]`` and jumps below the floor
    are clamped onto it; otherwise it is ``[1, depth+1]`` with jumps above the
    ceiling clamped.
    """
    size = depth + 1
    lower, upper = -lo, hi
    ab = np.zeros((lower + upper + 1, size))
    ab[upper, :] = 1.0
    for row in range(size):
        for i in range(lo, hi + 1):
            pi = p[i - lo]
            if pi == 0:
                continue
            col = row + i
            if clamp_low:
                if col > depth:
                    continue
                col = max(col, 0)
            else:
                if col < 0:
                    continue
                col = min(col, depth)
            ab[upper + row - col, col] -= pi
    return ab, (lower, upper)


def _ascending_harmonic(walk, tol):
    lo, hi, p = _increments(walk)
    prev = None
    depth = max(_HARMONIC_MIN_DEPTH, 4 * (hi - lo))
    while depth <= _HARMONIC_MAX_DEPTH:
        ab, bands = _banded(depth, lo, hi, p, clamp_low=True)
        # rhs[row, k-1]: direct jump from position row-depth to height k
        rhs = np.zeros((depth + 1, hi))
        for k in range(1, hi + 1):
            for row in range(max(0, depth + k - hi), depth + 1):
                i = k - (row - depth)
                if lo <= i <= hi:
                    rhs[row, k - 1] = p[i - lo]
        h0 = solve_banded(bands, ab, rhs)[depth]
        if prev is not None:
            diff = float(np.abs(h0 - prev).sum())
            if diff < tol:
                heights = {k: float(h0[k - 1]) for k in range(1, hi + 1) if h0[k - 1] > 0}
                total = math.fsum(heights.values())
                if total > 1:
                    heights = {k: v / total for k, v in heights.items()}
                    total = 1.0
                err = min(diff, 1.0 - total)
                return DefectiveLadderPmf(span=walk.span, heights=heights,
                                          total_A=total, trunc_error=max(err, 0.0))
        prev = h0
        depth *= 2
    raise NoConvergence("harmonic ladder solve did not stabilise")


def conditioned_ladder(d: DefectiveLadderPmf) -> ConditionedLadderPmf:
    """Ladder height conditioned on the ladder epoch being finite."""
    if d.total_A <= 0:
        raise ValueError("total_A must be positive")
    probs = {k: m / d.total_A for k, m in d.heights.items()}
    mu = d.span * math.fsum(k * f for k, f in probs.items())
    return ConditionedLadderPmf(span=d.span, probs=probs, mu=mu)


def descending_stats(walk: DriftWalkSpec, tol: float = DEFAULT_TOL,
                     max_steps: int = DEFAULT_MAX_STEPS) -> DescendingLadderStats:
    """``E[tau_minus]`` and ``E[S_tau_minus]`` for the first weak descending epoch.

    At zero drift ``E[tau_minus]`` is infinite and only the ladder height mean
    is computed.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if walk.drift_a > 0:
        return _descending_dp(walk, tol, max_steps)
    return _descending_harmonic(walk, tol)


def _descending_dp(walk, tol, max_steps):
    lo, hi, p = _increments(walk)
    d = walk.span
    a = walk.drift_a / d
    down = -lo
    rho = math.exp(-lundberg_exponent(walk.pmf))
    ceiling = max(int(math.ceil(math.log(tol * a / 4) / math.log(rho))) + hi, 2 * hi)
    while True:
        result = _descending_dp_window(lo, hi, p, a, down, ceiling, tol, max_steps)
        if result is not None:
            tau, s, err_tau, err_s = result
            return DescendingLadderStats(mean_tau_minus=float(tau), mean_S_tau_minus=float(d * s),
                                         err_tau_minus=float(err_tau),
                                         err_S_tau_minus=float(d * err_s))
        ceiling *= 2


def _descending_dp_window(lo, hi, p, a, down, ceiling, tol, max_steps):
    """One pass of the descending DP on positions ``1..ceiling``.

    Unfinished paths are closed with Wald's identity from their current
    position ``x``: the remaining time lies in ``[x/a, (x+down-1)/a]`` and the
    undershoot in ``[1-down, 0]``. Returns None if mass leaking above the
    ceiling is too large for ``tol``.
    """
    xs = np.arange(1, ceiling + 1, dtype=float)
    g = np.zeros(ceiling)
    tau = s_sum = 0.0
    leak_tau_lo = leak_tau_hi = leak_s_lo = 0.0
    for i in range(lo, hi + 1):
        if i <= 0:
            tau += p[i - lo]
            s_sum += p[i - lo] * i
        else:
            g[i - 1] += p[i - lo]
    absorb_pos = np.arange(lo + 1, 1, dtype=float)
    for step in range(1, max_steps + 1):
        # remaining mass closed off with Wald bounds
        mass = float(g.sum())
        gx = float(g @ xs)
        tau_lo = step * mass + gx / a
        tau_hi = tau_lo + mass * (down - 1) / a
        err_tau = 0.5 * (tau_hi - tau_lo + leak_tau_hi - leak_tau_lo)
        err_s = 0.5 * ((down - 1) * mass - leak_s_lo)
        if err_tau < tol and err_s < tol:
            est_tau = tau + leak_tau_lo + tau_lo + err_tau
            est_s = s_sum + 0.5 * (leak_s_lo + (1 - down) * mass)
            return est_tau, est_s, err_tau, err_s
        new = np.convolve(g, p)
        # new[t] sits at position t + 1 + lo
        absorbed = new[:down]
        tau += (step + 1) * float(absorbed.sum())
        s_sum += float(absorbed @ absorb_pos)
        g = new[down:down + ceiling]
        over = new[down + ceiling:]
        if over.size and over.any():
            ox = np.arange(ceiling + 1, ceiling + 1 + over.size, dtype=float)
            om = float(over.sum())
            leak_tau_lo += (step + 1) * om + float(over @ ox) / a
            leak_tau_hi += (step + 1) * om + float(over @ (ox + down - 1)) / a
            leak_s_lo += (1 - down) * om
            if 0.5 * (leak_tau_hi - leak_tau_lo) > tol / 2:
                return None
    raise NoConvergence(
        f"descending ladder DP did not reach tol={tol} within {max_steps} steps")


def _descending_harmonic(walk, tol):
    lo, hi, p = _increments(walk)
    prev = None
    depth = max(_HARMONIC_MIN_DEPTH, 4 * (hi - lo))
    while depth <= _HARMONIC_MAX_DEPTH:
        ab, bands = _banded(depth, lo, hi, p, clamp_low=False)
        # window row r <-> position r+1; rhs collects undershoot values
        rhs = np.zeros(depth + 1)
        for row in range(min(-lo, depth + 1)):
            x = row + 1
            rhs[row] = sum(p[i - lo] * (x + i) for i in range(lo, 1) if x + i <= 0)
        g = solve_banded(bands, ab, rhs)
        value = sum(p[i - lo] * i for i in range(lo, 1))
        value += sum(p[i - lo] * g[i - 1] for i in range(1, hi + 1))
        if prev is not None and abs(value - prev) < tol:
            return DescendingLadderStats(mean_tau_minus=math.inf,
                                         mean_S_tau_minus=float(walk.span * value),
                                         err_tau_minus=math.inf,
                                         err_S_tau_minus=float(walk.span * abs(value - prev)))
        prev = value
        depth *= 2
    raise NoConvergence("harmonic descending solve did not stabilise")


def prob_tau_plus_infinite(walk: DriftWalkSpec, tol: float = DEFAULT_TOL) -> float:
    """``P(tau_plus = inf) = 1/E[tau_minus]``, checked against ``1 - P(tau_plus < inf)``."""
    if walk.drift_a <= 0:
        raise ValueError("P(tau_plus = inf) is positive only for negative drift")
    desc = descending_stats(walk, tol)
    asc = ascending_ladder(walk, tol)
    e, de = desc.mean_tau_minus, desc.err_tau_minus
    value = 1.0 / e
    err = 1.0 / (e - de) - value if de < e else math.inf
    gap = abs((1.0 - asc.total_A) - value)
    allowed = 2.0 * (asc.trunc_error + err) + 1e-14
    if gap > allowed:
        raise Inconsistent(
            f"1 - A = {1 - asc.total_A!r} and 1/E[tau_minus] = {value!r} differ by {gap:.3e}")
    return value
