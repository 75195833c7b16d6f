"""Empirical statistics for primes in progressions.

Everything here measures; nothing asserts.  With E(x, q, a) = psi(x; q, a) - psi(x)/phi(q):

* ``gv_variance``: V(x, Q) = sum_{q<=Q} sum_{(a,q)=1} E(x,q,a)^2 against Qx log Q - c x Q
* ``deaveraging_ratio``: sum_{Q/2<q<=Q} E(x,q,1)^2 over the same range of the full inner sum
* ``montgomery_scan``: |E(x,q,1)| (or its (1 - n/x)-weighted analogue) against (x/q)^{1/2}
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .density import prime_table
from .errors import ConfigError, DegenerateFitError
from .primes import PrimeTable, totients
from .special import cfloat


@dataclass
class VarianceSample:
    x: float
    Q: float
    V: float                  # sum over q <= Q
    V1: float                 # class a = 1, Q/2 < q <= Q
    V_half: float             # all coprime classes, Q/2 < q <= Q
    main_term: float          # Qx log Q - c x Q
    per_q: np.ndarray = field(default=None, repr=False)  # inner sums, index q

    @property
    def ratio(self) -> float:
        return self.V / self.main_term if self.main_term else math.nan

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("per_q")
        d["ratio"] = self.ratio
        return d


@dataclass
class ExponentFit:
    tag: str                  # "eta" or "theta"
    grid: list                # (x, q or Q) pairs used
    exponent: float
    slope: float
    intercept: float
    residual_norm: float
    values: list              # per-point statistic
    normalized: list          # per-point normalized statistic
    dropped: int = 0          # zero values left out of the fit
    smoothed: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _table(x: float, table: PrimeTable | None) -> PrimeTable:
    if x < 1:
        raise ConfigError("x must be at least 1")
    return table if table is not None else prime_table(x)


def _class_sums(n: np.ndarray, w: np.ndarray, total: float, q: int, phi: int):
    """(sum over coprime a of E(x,q,a)^2, E(x,q,1)) from one bucketing pass."""
    if q == 1:
        return 0.0, 0.0
    buckets = np.bincount(n % q, weights=w, minlength=q)
    coprime = np.gcd(np.arange(q), q) == 1
    e = buckets[coprime] - total / phi
    return math.fsum(e * e), float(buckets[1] - total / phi)


def _inner_sums(x: float, qs: Iterable[int], table: PrimeTable, smoothed: bool = False,
                workers: int = 1) -> dict:
    k = table.count(x)
    n = table.prime_powers[:k]
    w = table.lam[:k] * (1.0 - n / x) if smoothed else table.lam[:k]
    total = math.fsum(w)
    qs = list(qs)
    phis = totients(max(qs)) if qs else None
    job = lambda q: (q, _class_sums(n, w, total, q, int(phis[q])))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = dict(pool.map(job, qs))
    else:
        out = dict(map(job, qs))
    return out


def gv_main_term(x: float, Q: float) -> float:
    if Q <= 1:
        return 0.0
    return Q * x * math.log(Q) - cfloat("c_gv") * x * Q


def gv_variance(x: float, Q: float, table: PrimeTable | None = None,
                workers: int = 1) -> VarianceSample:
    if Q < 1 or Q > x:
        raise ConfigError(f"need 1 <= Q <= x (got Q={Q}, x={x})")
    table = _table(x, table)
    qmax = int(math.floor(Q))
    sums = _inner_sums(x, range(1, qmax + 1), table, workers=workers)
    per_q = np.zeros(qmax + 1)
    V1 = []
    for q, (full, e1) in sums.items():
        per_q[q] = full
        if q > Q / 2:
            V1.append(e1 * e1)
    upper = per_q[int(math.floor(Q / 2)) + 1:]
    return VarianceSample(x=float(x), Q=float(Q), V=math.fsum(per_q), V1=math.fsum(V1),
                          V_half=math.fsum(upper), main_term=gv_main_term(x, Q), per_q=per_q)


def deaveraging_ratio(x: float, Q: float, table: PrimeTable | None = None,
                      workers: int = 1) -> tuple[float, float]:
    """(ratio, eta_hat) with ratio = V1 / V_half and eta_hat = 1 + log(ratio)/log Q."""
    if Q < 2 or Q > x:
        raise ConfigError(f"need 2 <= Q <= x (got Q={Q}, x={x})")
    table = _table(x, table)
    lo = int(math.floor(Q / 2)) + 1
    sums = _inner_sums(x, range(lo, int(math.floor(Q)) + 1), table, workers=workers)
    num = math.fsum(e1 * e1 for _, e1 in sums.values())
    den = math.fsum(full for full, _ in sums.values())
    if den == 0.0:
        raise ConfigError(f"x = {x} too small: the denominator vanishes for Q = {Q}")
    ratio = num / den
    eta = 1 + math.log(ratio) / math.log(Q) if ratio > 0 else -math.inf
    return ratio, eta


def _ols(X: np.ndarray, y: np.ndarray):
    A = np.column_stack([X, np.ones_like(X)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.linalg.norm(A @ coef - y))
    return float(coef[0]), float(coef[1]), resid


def deaveraging_scan(xs: Sequence[float], Qs: Sequence[float],
                     table: PrimeTable | None = None) -> ExponentFit:
    """Fit log(ratio) = (eta - 1) log Q + c over the (x, Q) grid."""
    grid, vals = [], []
    for x in xs:
        t = _table(x, table)
        for Q in Qs:
            if 2 <= Q <= x:
                grid.append((float(x), float(Q)))
                vals.append(deaveraging_ratio(x, Q, t)[0])
    keep = [i for i, v in enumerate(vals) if v > 0]
    if len(keep) < 3:
        raise DegenerateFitError(f"need at least 3 positive samples, have {len(keep)}")
    X = np.log([grid[i][1] for i in keep])
    y = np.log([vals[i] for i in keep])
    if np.ptp(X) == 0:
        raise DegenerateFitError("all samples share one Q")
    slope, icpt, res = _ols(X, y)
    return ExponentFit("eta", grid, 1 + slope, slope, icpt, res, vals,
                       [1 + math.log(v) / math.log(g[1]) if v > 0 else None
                        for v, g in zip(vals, grid)], len(vals) - len(keep))


def progression_statistic(x: float, q: int, table: PrimeTable, smoothed: bool = False) -> float:
    """E(x, q, 1), or with weights (1 - n/x) when ``smoothed``."""
    return _inner_sums(x, [q], table, smoothed)[q][1]


def montgomery_scan(xs: Sequence[float], qs: Sequence[int], smoothed: bool = False,
                    table: PrimeTable | None = None) -> ExponentFit:
    """Fit log(|stat| / x^{1/2}) = -theta log q + c; q = 1 rows and zeros are dropped."""
    grid, vals, norm = [], [], []
    for x in xs:
        t = _table(x, table)
        for q in qs:
            if q < 2 or q > x or (smoothed and q > math.sqrt(x)):
                continue
            v = progression_statistic(x, q, t, smoothed)
            grid.append((float(x), int(q)))
            vals.append(v)
            norm.append(abs(v) * math.sqrt(q / x))
    keep = [i for i, v in enumerate(vals) if v != 0.0]
    if len(keep) < 3:
        raise DegenerateFitError(f"need at least 3 nonzero samples, have {len(keep)}")
    X = np.log([grid[i][1] for i in keep])
    y = np.log([abs(vals[i]) / math.sqrt(grid[i][0]) for i in keep])
    if np.ptp(X) == 0:
        raise DegenerateFitError("all samples share one q")
    slope, icpt, res = _ols(X, y)
    return ExponentFit("theta", grid, -slope, slope, icpt, res, vals, norm,
                       len(vals) - len(keep), smoothed)


def write_scan_csv(path: str | Path, fit: ExponentFit) -> Path:
    """x, q, class, statistic, normalized value."""
    path = Path(path)
    cls = "1" if fit.tag == "theta" else "1/all"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "q", "class", "statistic", "normalized"])
        for (x, q), v, nv in zip(fit.grid, fit.values, fit.normalized):
            w.writerow([f"{x:.18g}", f"{q:.18g}", cls, f"{v:.18g}",
                        "" if nv is None else f"{nv:.18g}"])
    return path


def write_fit_json(path: str | Path, fit: ExponentFit) -> Path:
    path = Path(path)
    path.write_text(json.dumps(fit.as_dict(), indent=2, sort_keys=True))
    return path
