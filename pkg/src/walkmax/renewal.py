"""Weighted renewal sequences and their saddle-point leading term.

For a step law ``f`` on ``{1, 2, ...}`` and a weight ``0 < A <= 1`` the
sequence ``u(n) = sum_k A**k f^{*k}(n)`` satisfies the recursion
``u(n) = [n == 0] + A * sum_j f(j) u(n - j)``. Its value at ``n = y`` is
approximated by ``lam**(-y-1) / (A * mu_y(lam))`` where ``lam >= 1`` solves
``A * f_y(lam) = 1`` for the series truncated at degree ``y``.

Routines accept ``dps``: when given, arithmetic is carried out in mpmath at
that many decimal digits. This matters for the remainder, which is a
difference of two nearly equal numbers and for short-range steps can be far
below double-precision rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np

from .errors import NoConvergence, NoRoot
from .lattice import convolve, horner, truncated_coeffs

BRACKET_CAP = 8.0
ROOT_TOL = 1e-13
_BISECT_WIDTH = 1e-10
_NEWTON_ITERS = 5


@dataclass(frozen=True)
class RenewalSequence:
    A: float
    u: Sequence


@dataclass(frozen=True)
class RootSolution:
    y: int
    A: float
    lam: float
    theta: float
    mu_y_at_lambda: float
    leading_term: float
    h_y: float
    lemma3_ok: bool
    residual: float


@dataclass(frozen=True)
class RemainderRow:
    y: int
    A_y: float
    lam: float
    direct: float
    leading: float
    scaled_remainder: float
    lemma3_ok: bool


def _step_law(Z) -> dict:
    probs = getattr(Z, "probs", Z)
    if any(k < 1 for k, v in probs.items() if v != 0):
        raise ValueError("step law must live on offsets >= 1")
    return {k: v for k, v in probs.items() if v != 0}


def _mean_offset(probs) -> float:
    return math.fsum(k * v for k, v in probs.items())


def renewal_sequence(Z, A: float, n_max: int, dps: Optional[int] = None) -> RenewalSequence:
    """``u(0..n_max)`` from the renewal recursion; no truncation is involved."""
    if not 0 < A <= 1:
        raise ValueError("A must lie in (0, 1]")
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    f = _step_law(Z)
    if dps is None:
        fa = np.zeros(n_max + 1)
        for k, v in f.items():
            if k <= n_max:
                fa[k] = v
        kmax = min(max(f), n_max)
        u = np.zeros(n_max + 1)
        u[0] = 1.0
        for n in range(1, n_max + 1):
            j = min(n, kmax)
            # sum_{i=1..j} f(i) u(n-i)
            u[n] = A * float(fa[1:j + 1] @ u[n - 1::-1][:j])
        return RenewalSequence(A=A, u=u)
    with mpmath.workdps(dps):
        Am = mpmath.mpf(A) if not isinstance(A, mpmath.mpf) else +A
        fm = {k: mpmath.mpf(v) for k, v in f.items()}
        u = [mpmath.mpf(1)] + [mpmath.mpf(0)] * n_max
        for n in range(1, n_max + 1):
            acc = mpmath.mpf(0)
            for k, v in fm.items():
                if k <= n:
                    acc += v * u[n - k]
            u[n] = Am * acc
        return RenewalSequence(A=A, u=u)


def brute_force_sum(Z, A: float, n: int, K: int) -> float:
    """``sum_{k=1..K} A**k f^{*k}(n)`` by explicit repeated convolution."""
    if K < n:
        raise ValueError("K must be at least n")
    f = _step_law(Z)
    total = 0.0
    power = dict(f)
    for k in range(1, K + 1):
        if min(power) > n:
            break
        total += A ** k * power.get(n, 0.0)
        power = convolve(power, f)
    return total


def solve_lambda(Z, y: int, A: float, mu0: float, C1: float,
                 dps: Optional[int] = None) -> RootSolution:
    """Real root ``lam >= 1`` of ``A * f_y(z) = 1`` and the leading term at ``y``.

    ``mu0`` is the reference ladder mean in value units and sets
    ``h_y = C1 * span / (mu0 * y)``; the bound ``lam < exp(h_y)`` is recorded in
    ``lemma3_ok``.
    """
    if y < 1:
        raise ValueError("y must be >= 1")
    if not 0 < A <= 1:
        raise ValueError("A must lie in (0, 1]")
    span = getattr(Z, "span", 1)
    coeffs = truncated_coeffs(_step_law(Z), y)
    h_y = C1 * span / (mu0 * y)
    if dps is None:
        lam, resid = _root_float(coeffs, A, h_y)
        f, df = horner(coeffs, lam)
        leading = lam ** (-y - 1) / (A * df)
        return RootSolution(y=y, A=A, lam=lam, theta=math.log(lam), mu_y_at_lambda=df,
                            leading_term=leading, h_y=h_y, lemma3_ok=lam < math.exp(h_y),
                            residual=resid)
    with mpmath.workdps(dps):
        lam, resid = _root_mp(coeffs, A, h_y, dps)
        cm = [mpmath.mpf(c) for c in coeffs]
        f, df = horner(cm, lam)
        Am = mpmath.mpf(A) if not isinstance(A, mpmath.mpf) else +A
        leading = lam ** (-y - 1) / (Am * df)
        return RootSolution(y=y, A=A, lam=lam, theta=mpmath.log(lam), mu_y_at_lambda=df,
                            leading_term=leading, h_y=h_y,
                            lemma3_ok=bool(lam < mpmath.exp(h_y)), residual=resid)


def _upper_bracket(F, h_y, one, cap):
    hi = min(one * math.exp(2 * h_y), cap)
    while F(hi) < 0:
        if hi >= cap:
            raise NoRoot(f"A*f_y(z) < 1 for all z <= {float(cap)}")
        hi = min(one + 2 * (hi - one), cap)
    return hi


def _root_float(coeffs, A, h_y):
    def F(z):
        return A * horner(coeffs, z)[0] - 1.0

    if F(1.0) >= 0:
        if F(1.0) > ROOT_TOL:
            raise ValueError("A * f_y(1) exceeds 1")
        return 1.0, abs(F(1.0))
    lo, hi = 1.0, _upper_bracket(F, h_y, 1.0, BRACKET_CAP)
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if F(mid) < 0:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    for _ in range(_NEWTON_ITERS):
        f, df = horner(coeffs, z)
        step = (A * f - 1.0) / (A * df)
        z -= step
        if abs(step) <= 1e-16 * z:
            break
    resid = abs(F(z))
    if resid > ROOT_TOL:
        raise NoConvergence(f"root residual {resid:.3e} above {ROOT_TOL}")
    return z, resid


def _root_mp(coeffs, A, h_y, dps):
    cm = [mpmath.mpf(c) for c in coeffs]
    Am = mpmath.mpf(A) if not isinstance(A, mpmath.mpf) else +A
    one = mpmath.mpf(1)
    target = mpmath.mpf(10) ** (-(dps - 5))

    def F(z):
        return Am * horner(cm, z)[0] - 1

    if F(one) >= 0:
        if F(one) > target:
            raise ValueError("A * f_y(1) exceeds 1")
        return one, abs(F(one))
    lo, hi = one, _upper_bracket(F, h_y, one, mpmath.mpf(BRACKET_CAP))
    while hi - lo > _BISECT_WIDTH:
        mid = (lo + hi) / 2
        if F(mid) < 0:
            lo = mid
        else:
            hi = mid
    z = (lo + hi) / 2
    # Newton doubles the correct digits per iteration
    for _ in range(int(math.log2(dps)) + 8):
        f, df = horner(cm, z)
        step = (Am * f - 1) / (Am * df)
        z -= step
        if abs(step) <= target * z:
            break
    resid = abs(F(z))
    if resid > target:
        raise NoConvergence(f"root residual {mpmath.nstr(resid, 5)} above 1e-{dps - 5}")
    return z, resid


def default_c1(C: float, mu0: float, mu: float) -> float:
    """Twice the smallest constant allowed in the bound ``lam < exp(h_y)``."""
    return 2.0 * C * mu0 / mu


def remainder_scan(Z, mu0: float, C: float, C1: Optional[float], y_grid: Sequence[int],
                   s: float = 2.0, dps="auto") -> list[RemainderRow]:
    """Compare the exact weighted renewal mass with its leading term along ``y_grid``.

    Each row uses ``A_y = 1 - C/y`` and reports
    ``|direct - leading| * y**min(1, s-1) / ln y``. With ``dps="auto"`` each row
    is computed with ``y + 30`` decimal digits; ``dps=None`` uses doubles.
    """
    if s <= 1:
        raise ValueError("s must exceed 1")
    if C <= 0:
        raise ValueError("C must be positive")
    ys = list(y_grid)
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise ValueError("y_grid must be strictly increasing")
    probs = _step_law(Z)
    span = getattr(Z, "span", 1)
    mu = span * _mean_offset(probs)
    if C1 is None:
        C1 = default_c1(C, mu0, mu)
    rows = []
    for y in ys:
        if y < 2:
            raise ValueError(f"y={y}: the scaling needs y >= 2")
        if C / y >= 1:
            raise ValueError(f"y={y}: A_y = 1 - C/y is not positive")
        digits = (y + 30) if dps == "auto" else dps
        expo = min(1.0, s - 1.0)
        if digits is None:
            A_y = 1.0 - C / y
            direct = renewal_sequence(probs, A_y, y).u[y]
            root = solve_lambda(Z, y, A_y, mu0, C1)
            scaled = abs(direct - root.leading_term) * y ** expo / math.log(y)
            rows.append(RemainderRow(y=y, A_y=A_y, lam=root.lam, direct=float(direct),
                                     leading=root.leading_term, scaled_remainder=scaled,
                                     lemma3_ok=root.lemma3_ok))
            continue
        with mpmath.workdps(digits):
            A_y = 1 - mpmath.mpf(C) / y
            direct = renewal_sequence(probs, A_y, y, dps=digits).u[y]
            root = solve_lambda(Z, y, A_y, mu0, C1, dps=digits)
            scaled = abs(direct - root.leading_term) * mpmath.mpf(y) ** expo / mpmath.log(y)
            rows.append(RemainderRow(y=y, A_y=float(A_y), lam=float(root.lam),
                                     direct=float(direct), leading=float(root.leading_term),
                                     scaled_remainder=float(scaled),
                                     lemma3_ok=root.lemma3_ok))
    return rows
