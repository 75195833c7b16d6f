"""Prime side of the explicit formula for the family of characters mod q.

    D_{1;q}(f^) = T1 + T2 + T3 + T4 + O(1/phi(q))

T1  (f(0)/log Q)(log q - log(8 pi e^gamma) - sum_{p|q} log p/(p-1))
T2  -(2/log Q) sum over p^nu || q, p^e = 1 mod q/p^nu of log p/(phi(p^nu) p^{e/2}) f(e log p/log Q)
T3  int_0^oo (f(0) - f(t))/(Q^{t/2} - Q^{-t/2}) dt
T4  -(2/log Q) (sum_{n = 1 mod q} - (1/phi(q)) sum_n) Lambda(n) n^{-1/2} f(log n/log Q)

T4 in integral form is -2 int (f/2 - f'/log Q) Delta(Q^u) Q^{-u/2} du with
Delta = psi(.;q,1) - psi/phi(q).  Since (f/2 - f'/L) Q^{-u/2} = -(1/L) d/du[f Q^{-u/2}],
each stretch between consecutive prime powers integrates in closed form.
The psi_2 variant is -2 int (3f/4 - 2f'/L + f''/L^2) Delta_2(Q^u) Q^{-u/2} du,
integrated by Gauss-Legendre on the same stretches.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .errors import ConfigError, SupportConditionError, TableLimitError
from .primes import DEFAULT_LIMIT, PrimeTable, euler_phi, factorize, totients
from .special import cfloat, zeta
from .testfunctions import TestFunction

QUAD_TOL = 1e-10
GL_NODES = 12
SOURCES = ("ratios", "thm14", "thm15", "thm17_1", "thm17_2", "thm17_3", "thm41_mu0")

_TABLE: dict = {}


def prime_table(limit: float, max_limit: int = DEFAULT_LIMIT) -> PrimeTable:
    """Shared prime table covering [1, limit]; grown on demand up to max_limit."""
    need = int(math.floor(limit))
    if need > max_limit:
        raise TableLimitError(f"prime table would need X = {need} > {max_limit}")
    t = _TABLE.get("t")
    if t is None or t.limit < need:
        size = min(max_limit, max(need, 10**6, 2 * t.limit if t else 0))
        _TABLE["t"] = PrimeTable(size)
    return _TABLE["t"]


def _log_q(Q: float) -> float:
    if Q <= 1:
        raise ConfigError("scaling parameter Q must exceed 1")
    return math.log(Q)


# -- terms -------------------------------------------------------------------------

def term_T1(q: int, Q: float, tf: TestFunction) -> float:
    if q < 3:
        raise ConfigError("the family needs q >= 3")
    L = _log_q(Q)
    f0 = float(tf(0.0))
    if f0 == 0.0:
        return 0.0
    local = math.fsum(math.log(p) / (p - 1) for p, _ in factorize(q))
    return f0 / L * (math.log(q) - math.log(8 * math.pi) - cfloat("gamma") - local)


def term_T2(q: int, Q: float, tf: TestFunction) -> float:
    if q < 3:
        raise ConfigError("the family needs q >= 3")
    L = _log_q(Q)
    umax = tf.sigma
    terms = []
    for p, nu in factorize(q):
        pnu = p**nu
        m = q // pnu
        phi_pnu = pnu - pnu // p
        e, pe = 1, p
        while e * math.log(p) <= umax * L:
            if pe % m == 1 % m:
                terms.append(math.log(p) / (phi_pnu * p ** (e / 2)) * float(tf(e * math.log(p) / L)))
            e += 1
            pe *= p
    return -2.0 / L * math.fsum(terms)


def term_T3(Q: float, tf: TestFunction) -> float:
    """Quadrature on [0, sigma] plus the closed-form tail f(0) int_sigma^oo dt/(2 sinh(Lt/2))."""
    L = _log_q(Q)
    if tf.is_zero:
        return 0.0
    f0 = float(tf(0.0))
    s = tf.sigma

    def g(t):
        if t == 0.0:
            return 0.0
        return (f0 - float(tf(t))) / (2 * math.sinh(L * t / 2))

    body, err = integrate.quad(g, 0.0, s, epsabs=QUAD_TOL / 10, epsrel=1e-12, limit=400)
    if err > QUAD_TOL:
        from .errors import QuadratureError

        raise QuadratureError(f"T3 quadrature error estimate {err:.2e}")
    tail = -f0 / L * math.log(math.tanh(L * s / 4))
    return body + tail


def term_T3_series(Q: float, tf: TestFunction, K: int = 3) -> float:
    """-sum_{k=1}^K (2^{k+1}-1) zeta(k+1) f^(k)(0) / (log Q)^{k+1}."""
    L = _log_q(Q)
    if tf.is_zero:
        return 0.0
    return -math.fsum((2 ** (k + 1) - 1) * float(zeta(k + 1)) * tf.taylor_at_zero(k) / L ** (k + 1)
                      for k in range(1, K + 1))


def _t4_data(q: int, Q: float, tf: TestFunction, table: PrimeTable | None):
    L = _log_q(Q)
    X = Q**tf.sigma
    table = table or prime_table(X)
    k = table.count(min(X, table.limit)) if X <= table.limit else None
    if k is None:
        raise TableLimitError(f"Q^sigma = {X:.4g} exceeds prime-table limit {table.limit}")
    n = table.prime_powers[:k]
    lam = table.lam[:k]
    c = (n % q == 1 % q).astype(float) - 1.0 / euler_phi(q)
    return L, n, lam, c


def term_T4(q: int, Q: float, tf: TestFunction, form: str = "psi",
            table: PrimeTable | None = None) -> float:
    if tf.is_zero:
        return 0.0
    L, n, lam, c = _t4_data(q, Q, tf, table)
    if len(n) == 0:
        return 0.0
    u = np.log(n.astype(float)) / L
    if form == "psi":
        delta = np.cumsum(c * lam)  # Delta on [u_k, u_{k+1})
        F = tf(u) * np.exp(-u * L / 2)
        F_next = np.append(F[1:], 0.0)  # f vanishes at u = sigma
        return 2.0 / L * math.fsum(delta * (F_next - F))
    if form == "psi2":
        return _t4_psi2(L, n, lam, c, u, tf)
    if form == "sum":
        return -2.0 / L * math.fsum(c * lam * np.exp(-u * L / 2) * tf(u))
    raise ConfigError(f"unknown T4 form {form!r}")


def _t4_psi2(L, n, lam, c, u, tf, chunk: int = 200_000) -> float:
    A = np.cumsum(c * lam)
    B = np.cumsum(c * lam * n.astype(float))
    lo = u
    hi = np.append(u[1:], tf.sigma)
    keep = hi > lo
    A, B, lo, hi = A[keep], B[keep], lo[keep], hi[keep]
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    parts = []
    for i in range(0, len(lo), chunk):
        a, b = lo[i:i + chunk, None], hi[i:i + chunk, None]
        uu = (a + b) / 2 + (b - a) / 2 * x[None, :]
        weight = 0.75 * tf(uu) - 2 * tf.d1(uu) / L + tf.d2(uu) / L**2
        d2 = A[i:i + chunk, None] - B[i:i + chunk, None] * np.exp(-uu * L)
        vals = weight * d2 * np.exp(-uu * L / 2)
        parts.append(np.sum(vals * w[None, :], axis=1) * (b - a)[:, 0] / 2)
    return -2.0 * math.fsum(np.concatenate(parts)) if parts else 0.0


# -- reports -----------------------------------------------------------------------

@dataclass
class DensityReport:
    Q: float
    test_function: dict
    T1: float
    T2: float
    T3: float
    T4: float
    prime_side: float
    envelope: float
    q: int | None = None
    q_range: tuple | None = None
    weighted: bool = True
    t4_form: str = "psi"
    zero_side: float | None = None
    tail_bound: float | None = None
    main_term: float | None = None
    predictions: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    envelopes: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def add_prediction(self, source: str, value: float, envelope: float):
        self.predictions[source] = value
        self.residuals[source] = self.prime_side - value
        self.envelopes[source] = envelope
        self.flags[source] = abs(self.prime_side - value) > envelope

    def add_zero_side(self, value: float, tail: float, slack: float | None = None):
        """Record the zero side; the allowed gap is tail + slack (default: the envelope)."""
        env = tail + (self.envelope if slack is None else slack)
        self.zero_side = value
        self.tail_bound = tail
        self.residuals["zero_side"] = value - self.prime_side
        self.envelopes["zero_side"] = env
        self.flags["zero_side"] = abs(value - self.prime_side) > env

    def rows(self) -> list[dict]:
        key = self.q if self.q is not None else self.Q
        base = {"q_or_Q": key, "term_T1": self.T1, "term_T2": self.T2, "term_T3": self.T3,
                "term_T4": self.T4, "prime_side": self.prime_side,
                "zero_side": self.zero_side, "tail_bound": self.tail_bound}
        out = [dict(base, source="prime_side", prediction=None, residual=None,
                    envelope=self.envelope)]
        if self.zero_side is not None:
            out.append(dict(base, source="zero_side", prediction=self.zero_side,
                            residual=self.residuals["zero_side"],
                            envelope=self.envelopes["zero_side"]))
        for s, v in self.predictions.items():
            out.append(dict(base, source=s, prediction=v, residual=self.residuals[s],
                            envelope=self.envelopes[s]))
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["q_range"] = list(self.q_range) if self.q_range else None
        return d


REPORT_COLUMNS = ["q_or_Q", "source", "term_T1", "term_T2", "term_T3", "term_T4", "prime_side",
                  "zero_side", "tail_bound", "prediction", "residual", "envelope"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v + 0.0:.18g}"
    return str(v)


def write_reports_csv(path: str | Path, reports: list[DensityReport]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            for row in r.rows():
                vals = [_fmt(row.get(c)) for c in REPORT_COLUMNS]
                if row.get("residual") is not None:
                    vals[REPORT_COLUMNS.index("residual")] = f"{row['residual']:.18g} ({row['residual']:.6e})"
                w.writerow(vals)
    return path


def write_reports_json(path: str | Path, reports: list[DensityReport]) -> Path:
    path = Path(path)
    path.write_text(json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True,
                               default=float))
    return path


def density_prime_side(q: int, Q: float | None = None, tf: TestFunction | None = None,
                       form: str = "psi") -> DensityReport:
    from .testfunctions import default_test_function

    tf = tf or default_test_function()
    Q = float(Q if Q is not None else q)
    t1, t2 = term_T1(q, Q, tf), term_T2(q, Q, tf)
    t3, t4 = term_T3(Q, tf), term_T4(q, Q, tf, form)
    return DensityReport(Q=Q, test_function=tf.describe(), T1=t1, T2=t2, T3=t3, T4=t4,
                         prime_side=math.fsum([t1, t2, t3, t4]), envelope=1.0 / euler_phi(q),
                         q=q, t4_form=form)


def averaged_main_term(Q: float, tf: TestFunction) -> float:
    """(f(0)/log Q)(log Q - 1 - gamma - log 4 pi - sum_p log p/(p(p-1)))."""
    L = _log_q(Q)
    return float(tf(0.0)) / L * (L - 1 - cfloat("gamma") - math.log(4 * math.pi)
                                 - cfloat("sum_logp_p_pm1"))


def family_range(Q: float) -> range:
    if Q < 6:
        raise ConfigError("averaged family needs Q >= 6")
    return range(int(math.floor(Q / 2)) + 1, int(math.floor(Q)) + 1)


def density_averaged(Q: float, tf: TestFunction, weighted: bool = True,
                     form: str = "psi") -> DensityReport:
    """Average of the per-q prime sides over Q/2 < q <= Q with common scaling Q.

    Weighted: (1/(Q/2)) sum_q D_{1;q}.  Unweighted: sum_q phi(q) D_{1;q} / ((9/pi^2)(Q/2)^2).
    """
    qs = family_range(Q)
    L = _log_q(Q)
    phis = totients(qs[-1])
    t3 = term_T3(Q, tf)
    T1s, T2s, T4s = [], [], []
    if form == "psi":
        table = prime_table(Q**tf.sigma)
        k = table.count(Q**tf.sigma)
        n, lam = table.prime_powers[:k], table.lam[:k]
        weight = lam * np.exp(-np.log(n.astype(float)) / 2) * tf(np.log(n.astype(float)) / L)
        s_all = math.fsum(weight)
        for q in qs:
            cand = np.arange(q + 1, n[-1] + 1 if len(n) else 0, q, dtype=np.int64)
            idx = np.searchsorted(n, cand)
            idx = idx[idx < len(n)]
            hits = idx[n[idx] == cand[: len(idx)]] if len(idx) else idx
            s1 = math.fsum(weight[hits])
            T4s.append(-2.0 / L * (s1 - s_all / phis[q]))
    else:
        T4s = [term_T4(q, Q, tf, form) for q in qs]
    for q in qs:
        T1s.append(term_T1(q, Q, tf))
        T2s.append(term_T2(q, Q, tf))
    w = np.array([1.0 if weighted else float(phis[q]) for q in qs])
    norm = Q / 2 if weighted else 9 / math.pi**2 * (Q / 2) ** 2
    avg = lambda xs: math.fsum(w * np.asarray(xs)) / norm
    t1, t2, t4 = avg(T1s), avg(T2s), avg(T4s)
    t3_avg = t3 * float(np.sum(w)) / norm
    rep = DensityReport(Q=float(Q), test_function=tf.describe(), T1=t1, T2=t2, T3=t3_avg, T4=t4,
                        prime_side=math.fsum([t1, t2, t3_avg, t4]), envelope=1.0 / Q,
                        q_range=(qs[0], qs[-1]), weighted=weighted, t4_form=form)
    rep.main_term = averaged_main_term(Q, tf)
    return rep


# -- predictions -------------------------------------------------------------------

def _support_zero_on(tf: TestFunction, lo: float, hi: float, step: float = 1e-3) -> bool:
    if hi <= lo:
        return True
    u = np.arange(lo + step, hi, step)
    return bool(np.all(np.abs(tf(u)) <= 1e-14))


def _gate(ok: bool, msg: str):
    if not ok:
        raise SupportConditionError(msg)


def _weighted_exp_integral(Q: float, tf: TestFunction, sign: float) -> float:
    """int_0^1 Q^{sign u/2} (f(u)/2 - f'(u)/log Q) du."""
    L = math.log(Q)
    g = lambda u: math.exp(sign * u * L / 2) * (float(tf(u)) / 2 - float(tf.d1(u)) / L)
    v, _ = integrate.quad(g, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return v


def s_f(Q: float, tf: TestFunction) -> float:
    """The two printed terms of S_f(Q)."""
    L = math.log(Q)
    bracket = (math.sqrt(2) + 4) / 3 - (cfloat("zeta_logderiv_half") - cfloat("sum_logp_pm1_sqrtp_1"))
    return cfloat("S_f_prefactor") * (float(tf(1.0)) + bracket * float(tf.d1(1.0)) / L)


def mu0(a: int, M: float) -> float:
    """Main term mu_0(a, M): a = +-1, a = +-p^e, otherwise."""
    if a == 0:
        raise ConfigError("mu_0 needs a != 0")
    a = abs(a)
    if a == 1:
        return -0.5 * math.log(M) - cfloat("C6_mu0") / 2
    f = factorize(a)
    if len(f) == 1:
        return -0.5 * math.log(f[0][0])
    return 0.0


def predict(source: str, tf: TestFunction | None = None, q: int | None = None,
            Q: float | None = None, kappa: float | None = None, a: float | None = None,
            M: float | None = None, printed_sign: bool = False) -> tuple[float, float]:
    """(prediction, envelope with implied constant 1) for a named source.

    ``printed_sign`` reproduces the printed sign of the terms that come from the
    integral form of T4; the default uses the sign implied by the prime sum.
    """
    if source not in SOURCES:
        raise ConfigError(f"unknown prediction source {source!r}")
    if source == "thm41_mu0":
        if a is None or M is None:
            raise ConfigError("thm41_mu0 needs a and M")
        return mu0(int(a), M), 0.0
    if tf is None:
        raise ConfigError(f"{source} needs a test function")
    sigma = tf.sigma
    s = -1.0 if printed_sign else 1.0  # sign of T4-derived corrections relative to the corrected form
    if source in ("ratios", "thm14", "thm15"):
        if q is None:
            raise ConfigError(f"{source} needs q")
        L = math.log(q)
        base = term_T1(q, q, tf) + term_T3(q, tf)
        if source == "ratios":
            return base, q**-0.5
        if source == "thm15":
            _gate(sigma <= 2, f"thm15 needs sigma <= 2 (got {sigma})")
            return base, math.log(math.log(q)) / L * q ** (sigma / 2 - 1)
        _gate(sigma <= 1, f"thm14 needs sigma <= 1 (got {sigma})")
        corr = 2.0 / euler_phi(q) * _weighted_exp_integral(q, tf, +1)
        return base + term_T2(q, q, tf) + s * corr, q ** (sigma / 2 - 1)
    if Q is None:
        raise ConfigError(f"{source} needs Q")
    L = math.log(Q)
    base = averaged_main_term(Q, tf) + term_T3(Q, tf)
    low = 4 * math.log(2) / Q * cfloat("D1") * _weighted_exp_integral(Q, tf, +1)
    if source == "thm17_1":
        _gate(sigma < 1.5, f"thm17_1 needs sigma < 3/2 (got {sigma})")
        env = Q**-0.5 / L * (math.log(L) / L) ** 2
        return base - s * Q**-0.5 / L * s_f(Q, tf), env
    if source == "thm17_2":
        if kappa is None or kappa <= 0:
            raise ConfigError("thm17_2 needs kappa > 0")
        _gate(sigma < 1.5, f"thm17_2 needs sigma < 3/2 (got {sigma})")
        _gate(_support_zero_on(tf, 1.0, 1.0 + kappa), f"thm17_2 needs f = 0 on (1, 1+{kappa})")
        C6 = cfloat("C6")
        g = lambda u: ((u - 1) * L + C6) * math.exp(-u * L / 2) * (float(tf(u)) / 2 - float(tf.d1(u)) / L)
        mid, _ = integrate.quad(g, 1 + kappa, 4 / 3, epsabs=1e-14, limit=200) if 1 + kappa < 4 / 3 else (0.0, 0)
        env = Q ** (-0.5 - kappa) + Q ** (-2 / 3) * L + Q ** (sigma - 2) * L
        return base + s * (low + mid), env
    # thm17_3
    if a is None or not 1 <= a < 2:
        raise ConfigError("thm17_3 needs 1 <= a < 2")
    _gate(sigma < 2, f"thm17_3 needs sigma < 2 (got {sigma})")
    _gate(_support_zero_on(tf, 1.0, a), f"thm17_3 needs f = 0 on (1, {a})")
    return base + s * low, Q ** (-a / 2) + Q ** (sigma - 2) * L
