"""Dirichlet L-functions on the critical line and their low-lying zeros.

L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q), with the Hurwitz zeta function
evaluated by Euler-Maclaurin in double precision.  Zeros are bracketed by sign
changes of the real function

    Z(t) = Re[eps^{-1/2} e^{i theta(t)} L(1/2 + it, chi)],
    theta(t) = (t/2) log(q/pi) + Im log Gamma((1/2 + a + it)/2),

and the number found is checked against the argument principle applied to the
completed function along 1/2 -> 2 -> 2+iT -> 1/2+iT.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .characters import DirichletCharacter, enumerate_characters, root_number, unit_group
from .errors import AccuracyLossError, IncompleteZeroSetError, PoleError
from .testfunctions import TestFunction

ENGINE_VERSION = "1"
EM_ORDER = 10
HURWITZ_TOL = 1e-10
MAX_HEIGHT = 200.0
MAX_REFINEMENTS = 5
# explicit zero-counting envelope |N(T,chi) - (T/pi) log(qT/(2 pi e))| <= A log(qT) + B
COUNT_A = 0.9185
COUNT_B = 5.512

# B_{2k}/(2k)! for k = 1..EM_ORDER+1
_BF = np.array([special.bernoulli(2 * k)[2 * k] / math.factorial(2 * k) for k in range(1, 40)])
_CHUNK = 2_000_000


def _cutoff(smax: float, M: int) -> int:
    # ratio |s+2M|/(2 pi N) <= 1/4 keeps the remainder far below 1e-12
    return max(10, int(math.ceil((smax + 2 * M) / (math.pi / 2))))


def hurwitz_zeta(s, a, N: int | None = None, M: int = EM_ORDER, tol: float = HURWITZ_TOL,
                 check: bool = True):
    """zeta(s, a) for complex s and 0 < a <= 1 (arrays broadcast to shape (len s, len a))."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(s_arr == 1):
        raise PoleError("Hurwitz zeta has a pole at s = 1")
    if np.any(a_arr <= 0):
        raise ValueError("Hurwitz parameter must be positive")
    if N is None:
        N = _cutoff(float(np.max(np.abs(s_arr))), M)
    n = np.arange(N, dtype=float)
    logs = np.log(n[None, :] + a_arr[:, None])  # (A, N)
    w = N + a_arr
    logw = np.log(w)
    out = np.empty((len(s_arr), len(a_arr)), dtype=complex)
    step = max(1, _CHUNK // max(1, len(a_arr) * N))
    for i in range(0, len(s_arr), step):
        ss = s_arr[i:i + step]
        head = np.exp(-ss[:, None, None] * logs[None, :, :]).sum(axis=2)
        sw = np.exp(-ss[:, None] * logw[None, :])  # w^{-s}
        tail = sw * w[None, :] / (ss[:, None] - 1) + sw / 2
        poch = ss.copy()
        wpow = sw / w[None, :]  # w^{-s-1}
        for k in range(1, M + 1):
            tail += _BF[k - 1] * poch[:, None] * wpow
            poch = poch * (ss + 2 * k - 1) * (ss + 2 * k)
            wpow = wpow / (w[None, :] ** 2)
        if check:
            sig = ss.real
            bound = (np.abs(_BF[M] * poch[:, None] * wpow)
                     * (np.abs(ss + 2 * M + 1) / (sig + 2 * M + 1))[:, None])
            scale = np.maximum(np.abs(head + tail), 1.0)
            if np.any(bound > tol * scale):
                raise AccuracyLossError(
                    f"Euler-Maclaurin remainder {float(bound.max()):.2e} exceeds tolerance; "
                    f"raise N (now {N}) or the correction order")
        out[i:i + step] = head + tail
    if np.ndim(s) == 0 and np.ndim(a) == 0:
        return complex(out[0, 0])
    if np.ndim(s) == 0:
        return out[0]
    if np.ndim(a) == 0:
        return out[:, 0]
    return out


def _l_matrix(q: int, s: np.ndarray) -> np.ndarray:
    """q^{-s} zeta(s, a/q) for a = 1..q as an (len s, q) matrix.

    At s = 1 the rows hold -digamma(a/q)/q, the finite part; the poles cancel
    in any combination with sum_a chi(a) = 0.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    a = np.arange(1, q + 1) / q
    pole = s == 1
    out = np.empty((len(s), q), dtype=complex)
    if np.any(~pole):
        out[~pole] = (np.atleast_2d(hurwitz_zeta(s[~pole], a))
                      * np.exp(-s[~pole] * math.log(q))[:, None])
    if np.any(pole):
        out[pole] = -special.digamma(a) / q
    return out


def _char_vector(chi: DirichletCharacter) -> np.ndarray:
    # values at a = 1..q (the a = q column is chi(0))
    v = np.asarray(chi.values)
    return np.roll(v, -1)


def l_value(chi: DirichletCharacter, s) -> complex | np.ndarray:
    """L(s, chi) for any character (imprimitive ones keep their Euler factors)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if chi.is_principal and np.any(s_arr == 1):
        raise PoleError("L(s, chi_0) has a pole at s = 1")
    vals = _l_matrix(chi.modulus, s_arr) @ _char_vector(chi)
    return complex(vals[0]) if np.ndim(s) == 0 else vals


def log_gamma_factor(s, q: int, parity: int):
    """log[(q/pi)^{(s+a)/2} Gamma((s+a)/2)] on the continuous branch."""
    s = np.asarray(s, dtype=complex)
    return (s + parity) / 2 * math.log(q / math.pi) + special.loggamma((s + parity) / 2)


class LSeriesEvaluator:
    """Completed L-function of a primitive character (or zeta for q = 1)."""

    def __init__(self, chi: DirichletCharacter):
        if not (chi.is_primitive or chi.modulus == 1):
            raise ValueError("LSeriesEvaluator needs a primitive character; use chi.inducer()")
        self.chi = chi
        self.q = chi.modulus
        self.parity = chi.parity
        self.eps = 1.0 + 0j if self.q == 1 else root_number(chi)
        # principal square root: phase in (-pi/2, pi/2]
        self.rot = 1 / np.sqrt(self.eps)
        self._vec = _char_vector(chi)
        self._bar = np.conj(self._vec)

    def L(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        v = _l_matrix(self.q, s_arr) @ self._vec
        return complex(v[0]) if np.ndim(s) == 0 else v

    def L_conj(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        v = _l_matrix(self.q, s_arr) @ self._bar
        return complex(v[0]) if np.ndim(s) == 0 else v

    def theta(self, t):
        t = np.asarray(t, dtype=float)
        return (t / 2 * math.log(self.q / math.pi)
                + special.loggamma((0.5 + self.parity + 1j * t) / 2).imag)

    def rotated(self, t, L=None) -> np.ndarray:
        """eps^{-1/2} e^{i theta(t)} L(1/2+it); real up to rounding."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if L is None:
            L = self.L(0.5 + 1j * t)
        return self.rot * np.exp(1j * self.theta(t)) * L

    def Z(self, t):
        v = self.rotated(t).real
        return float(v[0]) if np.ndim(t) == 0 else v

    def fe_residual(self, s) -> np.ndarray:
        """|Lambda(s,chi) - eps Lambda(1-s,chibar)| / |Lambda(s,chi)|, via gamma-factor ratios."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        lhs = self.L(s)
        ratio = np.exp(log_gamma_factor(1 - s, self.q, self.parity)
                       - log_gamma_factor(s, self.q, self.parity))
        rhs = self.eps * ratio * self.L_conj(1 - s)
        return np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)


# -- zero finding ------------------------------------------------------------------

@dataclass
class ZeroSet:
    modulus: int
    chi_index: int
    exponents: tuple
    conductor: int
    parity: int
    height: float
    ordinates: np.ndarray
    expected: int
    found: int
    central_zero: bool = False
    max_residual: float = 0.0
    step: float = 0.0

    @property
    def mismatch(self) -> int:
        return self.expected - self.found

    def __len__(self):
        return len(self.ordinates)


def scan_step(q: int, T: float) -> float:
    arg = q * T / (2 * math.pi)
    if arg <= math.e:
        return 0.05
    return min(0.05, math.pi / (2 * math.log(arg)))


def counting_estimate(q: int, T: float) -> float:
    """(T/pi) log(qT/(2 pi e)): zeros with |gamma| <= T."""
    return T / math.pi * math.log(q * T / (2 * math.pi * math.e))


def _unwrapped_delta(f, path, n0: int = 64, max_depth: int = 30) -> float:
    """Continuous change of arg f along a path [0,1] -> C, refining where the phase jumps."""
    u = list(np.linspace(0.0, 1.0, n0 + 1))
    vals = list(f(np.array([path(x) for x in u])))
    total = 0.0
    i = 0
    depth = {0: 0}
    while i < len(u) - 1:
        d = np.angle(vals[i + 1] / vals[i])
        if abs(d) > math.pi / 4 and depth.get(i, 0) < max_depth:
            mid = (u[i] + u[i + 1]) / 2
            u.insert(i + 1, mid)
            vals.insert(i + 1, complex(f(np.array([path(mid)]))[0]))
            dd = depth.get(i, 0) + 1
            depth = {k + (1 if k > i else 0): v for k, v in depth.items()}
            depth[i] = dd
            depth[i + 1] = dd
            continue
        total += d
        i += 1
    return total


def zero_count(ev: LSeriesEvaluator, T: float, delta: float = 0.0) -> float:
    """Argument-principle count of zeros with delta < gamma < T (not rounded)."""
    L = lambda s: ev.L(s)
    if ev.q == 1:
        # N(T) = theta(T)/pi + 1 + S(T), S from arg zeta along 2 -> 2+iT -> 1/2+iT
        d = _unwrapped_delta(L, lambda u: 2 + 1j * T * u)
        d += _unwrapped_delta(L, lambda u: 2 - 1.5 * u + 1j * T)
        return float(ev.theta(T)) / math.pi + 1 + d / math.pi
    theta_T = float(ev.theta(T))
    theta_0 = float(ev.theta(delta)) if delta else 0.0
    d = _unwrapped_delta(L, lambda u: 0.5 + 1.5 * u + 1j * delta)
    d += _unwrapped_delta(L, lambda u: 2 + 1j * (delta + (T - delta) * u))
    d += _unwrapped_delta(L, lambda u: 2 - 1.5 * u + 1j * T)
    return (theta_T - theta_0 + d) / math.pi


def _bracket_zeros(ev: LSeriesEvaluator, T: float, step: float, lo: float = 0.0):
    n = max(2, int(math.ceil((T - lo) / step)) + 1)
    t = np.linspace(lo, T, n)
    z = ev.Z(t)
    roots = []
    zf = lambda x: ev.Z(float(x))
    for i in range(n - 1):
        a, b = z[i], z[i + 1]
        if a == 0.0 and t[i] > lo:
            roots.append(t[i])
        elif a * b < 0:
            roots.append(optimize.brentq(zf, t[i], t[i + 1], xtol=1e-12, maxiter=200))
    if z[-1] == 0.0:
        roots.append(t[-1])
    return np.array(roots), z


def find_zeros(chi: DirichletCharacter, T: float, step: float | None = None) -> ZeroSet:
    """Ordinates 0 < gamma <= T of L(s, chi*), chi* the primitive character inducing chi."""
    if not 0 < T <= MAX_HEIGHT:
        raise ValueError(f"height must lie in (0, {MAX_HEIGHT}]")
    star = chi if (chi.modulus == 1 or chi.is_primitive) else chi.inducer()
    if star.is_principal:
        star = unit_group(1).principal()
    ev = LSeriesEvaluator(star)
    q = ev.q
    h = step or scan_step(q, T)
    # nudge the count height off a zero
    T_count = T
    zT = abs(ev.Z(T))
    if zT < 1e-6:
        T_count = T + 1e-4
    central = abs(ev.Z(0.0)) < 1e-10
    delta = 1e-6 if central else 0.0
    expected_raw = zero_count(ev, T_count, delta)
    expected = int(round(expected_raw))
    if abs(expected_raw - expected) > 0.25:
        raise IncompleteZeroSetError(
            f"argument-principle count {expected_raw:.3f} is not near an integer",
            gap=(0.0, T), found=0, expected=expected)
    roots = np.array([])
    for _ in range(MAX_REFINEMENTS):
        roots, _ = _bracket_zeros(ev, T_count, h)
        roots = roots[roots > delta]
        if len(roots) == expected:
            break
        h /= 2
    found = len(roots)
    if found != expected:
        gap = _locate_gap(ev, roots, T_count, delta)
        raise IncompleteZeroSetError(
            f"found {found} zeros but the count certificate gives {expected} "
            f"(q={q}, chi index {star.index})", gap=gap, found=found, expected=expected)
    roots = roots[roots <= T]
    res = 0.0
    if found:
        pts = np.concatenate([0.75 + 1j * roots, 0.25 + 1j * roots])
        res = float(np.max(ev.fe_residual(pts)))
    return ZeroSet(chi.modulus, chi.index, star.exponents, q, ev.parity, T, roots,
                   expected, found, central, res, h)


def _locate_gap(ev, roots, T, delta) -> tuple[float, float]:
    """First stretch between located zeros where the certified count runs ahead."""
    edges = [delta] + [float(r) for r in roots] + [T]
    for k in range(1, len(edges)):
        probe = (edges[k] + edges[k + 1]) / 2 if k + 1 < len(edges) else T
        if int(round(zero_count(ev, probe, delta))) > k:
            return (edges[k - 1], probe)
    return (edges[-2], T)


_ZERO_CACHE: dict = {}


def cached_zeros(chi: DirichletCharacter, T: float) -> ZeroSet:
    """Zero sets of the primitive inducer, memoized per (conductor, exponents, T)."""
    star = chi if (chi.modulus == 1 or chi.is_primitive) else chi.inducer()
    key = (star.modulus if not star.is_principal else 1, star.exponents if not star.is_principal else (), float(T))
    if key not in _ZERO_CACHE:
        _ZERO_CACHE[key] = find_zeros(star, T)
    return _ZERO_CACHE[key]


def primitive_zero_sets(q: int, T: float) -> list[ZeroSet]:
    return [find_zeros(chi, T) for chi in enumerate_characters(q) if chi.is_primitive]


# -- family zero sum ---------------------------------------------------------------

def _tail_envelope(conductor: int, T: float, C: float, L: float) -> float:
    """Bound for sum_{|gamma|>T} C/(1+(gamma L/2 pi)^2) over zeros of one L-function.

    With N(t) counting |gamma| <= t and N = M + R, |R(t)| <= E(t):
    sum <= int_T^oo (M'(t) + A/t) g(t) dt + 2 E(T) g(T).
    """
    g = lambda t: C / (1 + (t * L / (2 * math.pi)) ** 2)
    k = max(conductor, 1)
    dens = lambda t: (math.log(k * t / (2 * math.pi)) / math.pi + COUNT_A / t) * g(t)
    integral, _ = integrate.quad(dens, T, np.inf, limit=200)
    E = COUNT_A * math.log(k * T) + COUNT_B
    return integral + 2 * E * g(T)


def family_zero_sum(q: int, tf: TestFunction, Q: float, T: float) -> tuple[float, float]:
    """(1/phi(q)) sum_chi sum_{0<gamma<=T} 2 f^(gamma log Q / 2 pi), plus a tail bound."""
    chars = enumerate_characters(q)
    phi = len(chars)
    if tf.is_zero:
        return 0.0, 0.0
    L = math.log(Q)
    total, tail = [], 0.0
    C = tf.decay_constant
    tails: dict = {}
    for chi in chars:
        zs = cached_zeros(chi, T)
        y = zs.ordinates * L / (2 * math.pi)
        total.append(2.0 * math.fsum(np.atleast_1d(tf.fourier(y))))
        if zs.central_zero:
            total.append(float(tf.fourier(0.0)))
        if zs.conductor not in tails:
            tails[zs.conductor] = _tail_envelope(zs.conductor, T, C, L)
        tail += tails[zs.conductor]
    return math.fsum(total) / phi, tail / phi


# -- zero cache files --------------------------------------------------------------

ZERO_CSV_HEADER = ["q", "chi_index", "conductor", "parity", "ordinate"]


def format_float(x: float) -> str:
    return f"{x:.18g}"


def write_zero_csv(path: str | Path, zero_sets: Iterable[ZeroSet]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ZERO_CSV_HEADER)
        for zs in zero_sets:
            for g in zs.ordinates:
                w.writerow([zs.modulus, zs.chi_index, zs.conductor, zs.parity, format_float(float(g))])
    return path


def read_zero_csv(path: str | Path) -> dict[tuple[int, int], np.ndarray]:
    out: dict[tuple[int, int], list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault((int(row["q"]), int(row["chi_index"])), []).append(float(row["ordinate"]))
    return {k: np.array(v) for k, v in out.items()}


def zero_cache_name(q: int, T: float) -> str:
    return f"zeros_q{q}_T{format_float(T)}_v{ENGINE_VERSION}.csv"
