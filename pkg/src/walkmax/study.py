"""Heavy-traffic sweeps and remainder scans, with CSV output.

Configuration is a JSON document::

    {
      "base_pmf": {"span": 1, "probs": {"-1": 0.25, "0": 0.5, "1": 0.25}},
      "a_grid": [0.1, 0.05, 0.02, 0.01, 0.005],
      "c": 1.0,
      "methods": ["geometric_sum"],
      "tol": 1e-10,
      "seed": 0,
      "n_paths": 100000,
      "C": 1.0,
      "C1": null,
      "s": 2.0,
      "y_grid": [50, 100, 200, 400, 800],
      "z_pmf": {"span": 1, "probs": {"1": 0.5, "2": 0.5}},
      "jobs": 1
    }

Only ``base_pmf`` is required for a sweep; ``z_pmf`` replaces the zero-drift
ladder height law of ``base_pmf`` in the remainder scan.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .ladder import DEFAULT_TOL, ascending_ladder, conditioned_ladder
from .lattice import DriftWalkSpec, LatticePmf, moments, tilt_to_drift, validate
from .max_pmf import asymptotic_local, compute_max_pmf
from .renewal import RemainderRow, remainder_scan

SWEEP_METHODS = ("geometric_sum", "lindley", "monte_carlo")
SWEEP_COLUMNS = ("a", "y", "c", "method", "exact", "asymptotic", "ratio", "err_bound")
REMAINDER_COLUMNS = ("y", "A_y", "lambda", "direct", "leading", "scaled_remainder", "lemma3_ok")


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, str)):
        return str(x)
    return "%.17g" % x


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SweepConfig:
    base_pmf: LatticePmf
    a_grid: tuple = ()
    c: float = 1.0
    methods: tuple = ("geometric_sum",)
    tol: float = DEFAULT_TOL
    seed: int = 0
    n_paths: int = 100_000
    C: float = 1.0
    C1: Optional[float] = None
    s: float = 2.0
    y_grid: tuple = (50, 100, 200, 400, 800)
    z_pmf: Optional[LatticePmf] = field(default=None, hash=False)
    jobs: int = 1

    def __post_init__(self):
        try:
            validate(self.base_pmf)
        except ValueError as exc:
            raise ConfigError(f"base_pmf: {exc}") from exc
        if abs(moments(self.base_pmf)[0]) > 1e-12:
            raise ConfigError("base_pmf must have zero mean")
        grid = list(self.a_grid)
        if any(a <= 0 for a in grid):
            raise ConfigError("a_grid entries must be positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("a_grid must be strictly decreasing")
        if not self.c > 0:
            raise ConfigError("c must be positive")
        for a in grid:
            if round_half_up(self.c / a) < 1:
                raise ConfigError(f"a={a}: y = round(c/a) is 0; need y >= 1")
        bad = [m for m in self.methods if m not in SWEEP_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(SWEEP_METHODS)}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.s > 1:
            raise ConfigError("s must exceed 1")
        if not self.C > 0:
            raise ConfigError("C must be positive")
        if self.n_paths < 1 or self.jobs < 1:
            raise ConfigError("n_paths and jobs must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        if not isinstance(doc, dict) or "base_pmf" not in doc:
            raise ConfigError("config needs a base_pmf entry")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(doc)
        try:
            kw["base_pmf"] = LatticePmf.from_dict(doc["base_pmf"])
            if doc.get("z_pmf") is not None:
                kw["z_pmf"] = LatticePmf.from_dict(doc["z_pmf"])
            for key in ("a_grid", "methods", "y_grid"):
                if key in kw:
                    kw[key] = tuple(kw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class StudyRow:
    a: float
    y: int
    c: float
    method: str
    exact: float
    asymptotic: float
    ratio: float
    err_bound: float

    def values(self):
        return (self.a, self.y, self.c, self.method, self.exact, self.asymptotic,
                self.ratio, self.err_bound)


def _sweep_row(base: LatticePmf, sigma2: float, a: float, method: str, cfg: SweepConfig) -> StudyRow:
    try:
        walk = tilt_to_drift(base, a)
        y = round_half_up(cfg.c / a)
        res = compute_max_pmf(walk, y, method, tol=cfg.tol, seed=cfg.seed, n_paths=cfg.n_paths)
    except Exception as exc:
        raise type(exc)(f"sweep row a={a!r}, method={method}: {exc}") from exc
    exact = float(res.pi[y])
    err = res.err_bound[y] if method == "monte_carlo" else res.err_bound
    asym = asymptotic_local(a, sigma2, base.span, y)
    return StudyRow(a=a, y=y, c=a * y, method=method, exact=exact, asymptotic=asym,
                    ratio=exact / asym, err_bound=float(err))


def run_sweep(cfg: SweepConfig) -> list[StudyRow]:
    """One row per ``(a, method)``: exact ``P(M = y*span)`` at ``y = round(c/a)`` vs the local asymptotic."""
    sigma2 = moments(cfg.base_pmf)[1]
    tasks = [(a, m) for a in cfg.a_grid for m in cfg.methods]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_sweep_row, cfg.base_pmf, sigma2, a, m, cfg) for a, m in tasks]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_row(cfg.base_pmf, sigma2, a, m, cfg) for a, m in tasks]
    return sorted(rows, key=lambda r: (r.a, r.method))


def zero_drift_ladder_law(base: LatticePmf, tol: float = DEFAULT_TOL):
    return conditioned_ladder(ascending_ladder(DriftWalkSpec.from_pmf(base), tol))


def run_remainder_scan(cfg: SweepConfig) -> list[RemainderRow]:
    Z = cfg.z_pmf if cfg.z_pmf is not None else zero_drift_ladder_law(cfg.base_pmf, cfg.tol)
    mu0 = Z.span * math.fsum(k * v for k, v in Z.probs.items())
    return remainder_scan(Z, mu0, cfg.C, cfg.C1, cfg.y_grid, cfg.s)


def write_csv(columns, rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def sweep_csv(rows: list[StudyRow]) -> str:
    buf = io.StringIO()
    write_csv(SWEEP_COLUMNS, (r.values() for r in rows), buf)
    return buf.getvalue()


def parse_sweep_csv(text: str) -> list[StudyRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != SWEEP_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        a, y, c, method, exact, asym, ratio, err = rec
        rows.append(StudyRow(a=float(a), y=int(y), c=float(c), method=method,
                             exact=float(exact), asymptotic=float(asym), ratio=float(ratio),
                             err_bound=float(err)))
    return rows


def remainder_csv(rows: list[RemainderRow]) -> str:
    buf = io.StringIO()
    write_csv(REMAINDER_COLUMNS,
              ((r.y, r.A_y, r.lam, r.direct, r.leading, r.scaled_remainder, r.lemma3_ok)
               for r in rows), buf)
    return buf.getvalue()
