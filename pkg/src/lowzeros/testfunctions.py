"""Even, compactly supported test functions and their Fourier transforms.

The transform convention is  f^(y) = int f(x) e^{-2 pi i x y} dx, which for an
even f reduces to 2 int_0^sigma f(x) cos(2 pi x y) dx.
"""

from __future__ import annotations

import csv
import math
import threading
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConfigError, QuadratureError

FOURIER_TOL = 1e-12
FD_STEP = 1e-6
FD_STEP2 = 1e-4


class TestFunction:
    """Base class.  Subclasses implement ``_eval(x, order)`` on |x| <= sigma."""

    __test__ = False  # keep pytest from collecting this as a test class

    sigma: float
    smoothness = "C2"

    def _eval(self, x: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, order: int = 0):
        if order not in (0, 1, 2):
            raise ValueError("derivative order must be 0, 1 or 2")
        arr = np.asarray(x, dtype=float)
        out = np.zeros_like(arr)
        inside = np.abs(arr) <= self.sigma
        if np.any(inside):
            out[inside] = self._eval(arr[inside], order)
        return out if arr.ndim else float(out)

    def d1(self, x):
        return self.derivative(x, 1)

    def d2(self, x):
        return self.derivative(x, 2)

    @property
    def is_zero(self) -> bool:
        return False

    def taylor_at_zero(self, k: int) -> float:
        raise NotImplementedError

    # -- transform -----------------------------------------------------------------

    def _fourier_scalar(self, y: float) -> float:
        y = abs(float(y))
        f = lambda x: float(self._eval(np.array([x]), 0)[0])
        if y * self.sigma < 0.5:
            v, err = integrate.quad(lambda x: f(x) * math.cos(2 * math.pi * x * y),
                                    0.0, self.sigma, epsabs=FOURIER_TOL, epsrel=1e-12, limit=200)
        else:
            v, err = integrate.quad(f, 0.0, self.sigma, weight="cos", wvar=2 * math.pi * y,
                                    epsabs=FOURIER_TOL, epsrel=1e-12, limit=400)
        if not err < 1e-10:
            raise QuadratureError(f"Fourier transform at y={y} did not converge (err {err:.2e})")
        return 2.0 * v

    def fourier(self, y):
        """f^(y); real and even in y."""
        if self.is_zero:
            return np.zeros_like(np.asarray(y, dtype=float)) if np.ndim(y) else 0.0
        if np.ndim(y) == 0:
            return self._cached_fourier(round(abs(float(y)), 15))
        return np.array([self._cached_fourier(round(abs(float(v)), 15)) for v in np.ravel(y)]
                        ).reshape(np.shape(y))

    def _cached_fourier(self, y: float) -> float:
        cache = self.__dict__.setdefault("_fcache", {})
        if y not in cache:
            cache[y] = self._fourier_scalar(y)
        return cache[y]

    def fourier_grid(self, ymax: float, step: float | None = None) -> Callable:
        """Cubic-spline interpolant of f^ on [0, ymax] for bulk evaluation.

        The default step keeps the interpolation error, 5 step^4 max|f^''''|/384 with
        |f^''''| <= (2 pi sigma)^4 ||f||_1, below 1e-10.
        """
        if step is None:
            bound = (2 * math.pi * self.sigma) ** 4 * self.l1_norm()
            step = min(0.05, (384e-10 / (5 * max(bound, 1e-300))) ** 0.25)
        key = (float(ymax), float(step))
        grids = self.__dict__.setdefault("_grids", {})
        lock = self.__dict__.setdefault("_lock", threading.Lock())
        with lock:
            if key not in grids:
                ys = np.arange(0.0, ymax + 2 * step, step)
                grids[key] = CubicSpline(ys, self.fourier(ys))
        spline = grids[key]
        return lambda y: spline(np.abs(np.asarray(y, dtype=float)))

    # -- norms and decay ------------------------------------------------------------

    def l1_norm(self, order: int = 0) -> float:
        v, _ = integrate.quad(lambda x: abs(float(self._eval(np.array([x]), order)[0])),
                              0.0, self.sigma, limit=200)
        return 2.0 * v

    @property
    def decay_constant(self) -> float:
        """C_f with |f^(y)| <= C_f/(1+y^2).

        |f^| <= ||f||_1 and |f^(y)| <= ||f''||_1/(4 pi^2 y^2); their sum dominates
        min(A, B/y^2)(1+y^2) in both regimes.
        """
        if "_cf" not in self.__dict__:
            self.__dict__["_cf"] = self.l1_norm(0) + self.l1_norm(2) / (4 * math.pi**2)
        return self.__dict__["_cf"]

    def validate_decay(self, ymax: float = 1e3, n: int = 60) -> float:
        """Largest observed |f^(y)|(1+y^2)/C_f on a log grid (should be <= 1)."""
        ys = np.concatenate([[0.0], np.geomspace(1e-2, ymax, n)])
        return float(np.max(np.abs(self.fourier(ys)) * (1 + ys**2)) / self.decay_constant)

    # -- algebra --------------------------------------------------------------------

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return SumFunction(self, other)

    def __mul__(self, c: float) -> "TestFunction":
        return ScaledFunction(self, float(c))

    __rmul__ = __mul__

    def describe(self) -> dict:
        return {"family": type(self).__name__, "sigma": self.sigma}


class PolynomialBump(TestFunction):
    """(1 - (x/sigma)^2)^power on [-sigma, sigma]."""

    def __init__(self, sigma: float = 1.0, power: int = 3):
        if power < 3 or int(power) != power:
            raise ConfigError("power must be an integer >= 3 for a C^2 bump")
        if not sigma > 0:
            raise ConfigError("sigma must be positive")
        self.sigma = float(sigma)
        self.power = int(power)
        self.smoothness = f"C{self.power - 1}"

    def _eval(self, x, order):
        s, p = self.sigma, self.power
        w = 1.0 - (x / s) ** 2
        if order == 0:
            return w**p
        if order == 1:
            return -2 * p * x / s**2 * w ** (p - 1)
        return (-2 * p / s**2) * (w ** (p - 1) - 2 * (p - 1) * (x / s) ** 2 * w ** (p - 2))

    def taylor_at_zero(self, k: int) -> float:
        """f^(k)(0); only even orders are nonzero."""
        if k % 2:
            return 0.0
        j = k // 2
        if j > self.power:
            return 0.0
        return math.comb(self.power, j) * (-1) ** j * math.factorial(k) / self.sigma**k

    def l1_norm(self, order: int = 0) -> float:
        if order == 0:
            # 2 sigma int_0^1 (1-t^2)^p dt = sigma sqrt(pi) Gamma(p+1)/Gamma(p+3/2)
            return self.sigma * math.sqrt(math.pi) * math.gamma(self.power + 1) / math.gamma(self.power + 1.5)
        return super().l1_norm(order)

    def describe(self):
        return {"family": "polynomial_bump", "sigma": self.sigma, "power": self.power}


def make_polynomial_bump(sigma: float = 1.0, power: int = 3) -> PolynomialBump:
    return PolynomialBump(sigma, power)


class SumFunction(TestFunction):
    def __init__(self, f: TestFunction, g: TestFunction):
        self.f, self.g = f, g
        self.sigma = max(f.sigma, g.sigma)

    def _eval(self, x, order):
        return self.f.derivative(x, order) + self.g.derivative(x, order)

    def taylor_at_zero(self, k):
        return self.f.taylor_at_zero(k) + self.g.taylor_at_zero(k)

    @property
    def is_zero(self):
        return self.f.is_zero and self.g.is_zero

    def describe(self):
        return {"family": "sum", "terms": [self.f.describe(), self.g.describe()], "sigma": self.sigma}


class ScaledFunction(TestFunction):
    def __init__(self, f: TestFunction, c: float):
        self.f, self.c = f, c
        self.sigma = f.sigma

    def _eval(self, x, order):
        return self.c * self.f.derivative(x, order)

    def fourier(self, y):
        return self.c * self.f.fourier(y) if self.c else super().fourier(y)

    def taylor_at_zero(self, k):
        return self.c * self.f.taylor_at_zero(k)

    @property
    def is_zero(self):
        return self.c == 0 or self.f.is_zero

    def describe(self):
        return {"family": "scaled", "factor": self.c, "base": self.f.describe(), "sigma": self.sigma}


def zero_function(sigma: float = 1.0) -> TestFunction:
    """The test function identically 0 (with a nominal support)."""
    return ScaledFunction(PolynomialBump(sigma, 3), 0.0)


class CallableFunction(TestFunction):
    """User-supplied even f with derivatives by central differences.

    First derivative: step 1e-6, error ~ h^2 |f'''| + eps/h.  Second derivative:
    step 1e-4, error ~ h^2 |f''''| + eps/h^2, i.e. about 1e-8 for unit-scale f.
    """

    smoothness = "user"

    def __init__(self, func: Callable, sigma: float):
        self.func = func
        self.sigma = float(sigma)

    def _raw(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(np.abs(x) <= self.sigma, np.vectorize(self.func, otypes=[float])(np.abs(x)), 0.0)
        return out

    def _eval(self, x, order):
        if order == 0:
            return self._raw(x)
        if order == 1:
            h = FD_STEP
            return (self._raw(x + h) - self._raw(x - h)) / (2 * h)
        h = FD_STEP2
        return (self._raw(x + h) - 2 * self._raw(x) + self._raw(x - h)) / h**2

    def taylor_at_zero(self, k):
        if k % 2:
            return 0.0
        if k <= 2:
            return float(self._eval(np.array([0.0]), k)[0])
        h = 1e-2
        # k-th central difference at 0
        j = np.arange(k + 1)
        w = np.array([(-1) ** i * math.comb(k, i) for i in j], dtype=float)
        return float(np.dot(w, self._raw((k / 2 - j) * h)) / h**k)


class TabulatedFunction(TestFunction):
    """Even test function from samples (x_i, f(x_i)) on [0, sigma] via a cubic spline."""

    smoothness = "C2-spline"

    def __init__(self, x, fx):
        x = np.asarray(x, dtype=float)
        fx = np.asarray(fx, dtype=float)
        if x.ndim != 1 or x.shape != fx.shape or len(x) < 4:
            raise ConfigError("tabulated test function needs >= 4 matching (x, f) samples")
        order = np.argsort(x)
        x, fx = np.abs(x[order]), fx[order]
        if x[0] != 0.0:
            raise ConfigError("tabulated samples must start at x = 0")
        self.sigma = float(x[-1])
        # even extension: zero slope at the origin; clamp at the edge to keep C^1
        self.spline = CubicSpline(x, fx, bc_type=((1, 0.0), (1, 0.0)))

    def _eval(self, x, order):
        v = self.spline(np.abs(x), order)
        return v * np.sign(x) ** order if order == 1 else v

    def taylor_at_zero(self, k):
        return float(self.spline(0.0, k)) if k <= 3 else 0.0

    @classmethod
    def from_csv(cls, path: str | Path) -> "TabulatedFunction":
        xs, fs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    xs.append(float(row[0]))
                    fs.append(float(row[1]))
                except ValueError:
                    continue  # header
        return cls(xs, fs)

    def describe(self):
        return {"family": "tabulated", "sigma": self.sigma, "points": len(self.spline.x)}


@lru_cache(maxsize=64)
def default_test_function(sigma: float = 1.0, power: int = 3) -> PolynomialBump:
    return PolynomialBump(sigma, power)


def from_spec(family: str = "polynomial_bump", sigma: float = 1.0, power: int = 3,
              path: str | None = None) -> TestFunction:
    if family in ("polynomial_bump", "bump", "default"):
        return PolynomialBump(sigma, power)
    if family in ("tabulated", "csv"):
        if not path:
            raise ConfigError("tabulated test function needs a CSV path")
        return TabulatedFunction.from_csv(path)
    if family == "zero":
        return zero_function(sigma)
    raise ConfigError(f"unknown test-function family {family!r}")
