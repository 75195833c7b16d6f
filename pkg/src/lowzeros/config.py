"""Run configuration: a flat ``key = value`` file, overridable from the command line.

Schema (lists are comma separated, booleans accept 1/0/true/false/yes/no)::

    command      subcommand name
    q            modulus (int)
    Q            scaling / family range upper end (float)
    sources      prediction sources, e.g. thm14,ratios
    family       test-function family: polynomial_bump | tabulated | zero
    sigma        support half-width of the test function
    power        exponent p in (1 - (x/sigma)^2)^p
    tf_path      CSV (u, f) for the tabulated family
    height       zero height T
    limit        prime-table limit X
    quad_tol     quadrature tolerance for the T3 integral
    t4_form      psi | psi2 | sum
    weighted     averaged density weighting
    printed_sign   use the printed sign of the T4-derived correction terms
    kappa, a, M  prediction parameters
    R            scales for the reciprocal-totient sums
    variant      plain | general | halved
    poly         ascending coefficients of P(u)
    x            list of x values
    Qs           list of Q values (variance, deavg)
    qs           list of moduli (montgomery)
    smoothed     use the (1 - n/x) weighted statistic
    out          output directory (default: $LOWZEROS_OUT or ./lowzeros_out)
    cache        zero-cache directory (default: <out>/zero_cache)
    threads      worker count
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .primes import DEFAULT_LIMIT

OUT_ENV = "LOWZEROS_OUT"


def _bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _list(conv):
    def parse(v):
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        return [conv(x) for x in str(v).split(",") if x.strip()]
    return parse


def _num(v) -> float:
    return float(v)


def _int(v) -> int:
    f = float(v)
    if f != int(f):
        raise ConfigError(f"not an integer: {v!r}")
    return int(f)


@dataclass
class RunConfig:
    command: str = ""
    q: int | None = None
    Q: float | None = None
    sources: list = field(default_factory=list)
    family: str = "polynomial_bump"
    sigma: float = 1.0
    power: int = 3
    tf_path: str | None = None
    height: float = 60.0
    limit: int = DEFAULT_LIMIT
    quad_tol: float = 1e-10
    t4_form: str = "psi"
    weighted: bool = True
    printed_sign: bool = False
    kappa: float | None = None
    a: float | None = None
    M: float | None = None
    R: list = field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5])
    variant: str = "plain"
    poly: list = field(default_factory=lambda: [1.0])
    x: list = field(default_factory=list)
    Qs: list = field(default_factory=list)
    qs: list = field(default_factory=list)
    smoothed: bool = False
    out: str | None = None
    cache: str | None = None
    threads: int = 1

    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "lowzeros_out")

    def cache_dir(self) -> Path:
        return Path(self.cache) if self.cache else self.output_dir() / "zero_cache"

    def as_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.limit < 2:
            raise ConfigError("prime-table limit must be at least 2")
        if self.command in ("density", "verify-explicit"):
            Qmax = self.Q if self.Q is not None else self.q
            if Qmax is None:
                raise ConfigError(f"{self.command} needs --q or --range")
            if self.sigma * math.log(Qmax) > math.log(self.limit):
                raise ConfigError(f"Q^sigma = {Qmax ** self.sigma:.4g} exceeds X = {self.limit}")
        if self.command in ("variance", "deavg", "montgomery") and self.x:
            if max(self.x) > self.limit:
                raise ConfigError(f"x = {max(self.x):.4g} exceeds X = {self.limit}")
        return self


PARSERS = {
    "command": str, "q": _int, "Q": _num, "sources": _list(str), "family": str,
    "sigma": _num, "power": _int, "tf_path": str, "height": _num, "limit": _int,
    "quad_tol": _num, "t4_form": str, "weighted": _bool, "printed_sign": _bool,
    "kappa": _num, "a": _num, "M": _num, "R": _list(_num), "variant": str,
    "poly": _list(_num), "x": _list(_num), "Qs": _list(_num), "qs": _list(_int),
    "smoothed": _bool, "out": str, "cache": str, "threads": _int,
}
assert set(PARSERS) == {f.name for f in fields(RunConfig)}


def coerce(key: str, value):
    if key not in PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    if value is None:
        return None
    try:
        return PARSERS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = coerce(k, v)
    return out


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text())


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        if v is None:
            continue
        if isinstance(v, list):
            v = ",".join(f"{x:.18g}" if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = f"{v:.18g}"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def build_config(*layers: dict) -> RunConfig:
    """Merge layers left to right; None values do not override."""
    merged: dict = {}
    for layer in layers:
        for k, v in layer.items():
            if v is not None:
                merged[k] = coerce(k, v)
    return RunConfig(**merged)
