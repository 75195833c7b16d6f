"""Command-line driver.

Every command writes CSV + JSON artifacts and a ``manifest_<command>.json``
(config echo, library versions, wall time) into the output directory.
Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 support gate.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import platform
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import density as dens
from .config import RunConfig, build_config, dump_config, load_config
from .errors import ConfigError, IncompleteZeroSetError, LowZerosError

COMMANDS = ("chars", "zeros", "density", "verify-explicit", "lemma24", "constants",
            "variance", "deavg", "montgomery", "replay")


def f18(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v) + 0.0:.18g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f18(v) for v in r])
    return path


def _write_json(path: Path, obj) -> Path:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(type(o).__name__)

    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")
    return path


def versions() -> dict:
    import mpmath
    import scipy
    import sympy

    return {"lowzeros": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "mpmath": mpmath.__version__, "sympy": sympy.__version__}


def _tf(cfg: RunConfig):
    from .testfunctions import from_spec

    return from_spec(cfg.family, cfg.sigma, cfg.power, cfg.tf_path)


# -- commands ------------------------------------------------------------------------

def cmd_chars(cfg: RunConfig, out: Path) -> list[Path]:
    from .characters import enumerate_characters, root_number

    if cfg.q is None:
        raise ConfigError("chars needs q")
    chars = enumerate_characters(cfg.q)
    rows, info = [], []
    for chi in chars:
        eps = root_number(chi) if chi.is_primitive and cfg.q > 1 else None
        rows.append([cfg.q, chi.index, " ".join(map(str, chi.exponents)), chi.order, chi.parity,
                     chi.conductor, int(chi.is_primitive),
                     None if eps is None else float(eps.real), None if eps is None else float(eps.imag)])
        info.append({"index": chi.index, "exponents": list(chi.exponents), "order": chi.order,
                     "parity": chi.parity, "conductor": chi.conductor, "primitive": chi.is_primitive,
                     "numerators": [int(v) for v in chi.numerators]})
    header = ["q", "chi_index", "exponents", "order", "parity", "conductor", "primitive",
              "root_number_re", "root_number_im"]
    return [_write_csv(out / f"chars_q{cfg.q}.csv", header, rows),
            _write_json(out / f"chars_q{cfg.q}.json", {"q": cfg.q, "characters": info})]


def _zeroset_meta(zs) -> dict:
    d = dataclasses.asdict(zs)
    d.pop("ordinates")
    d["exponents"] = list(d["exponents"])
    return d


def zero_sets_for_modulus(q: int, T: float, cache_dir: Path | None = None, threads: int = 1):
    """Zero sets (one per character mod q, relabelled to q), through the on-disk cache."""
    from .characters import enumerate_characters
    from .lfunctions import ZeroSet, cached_zeros, read_zero_csv, zero_cache_name

    chars = enumerate_characters(q)
    if cache_dir is not None:
        csv_path = cache_dir / zero_cache_name(q, T)
        meta_path = csv_path.with_suffix(".json")
        if csv_path.is_file() and meta_path.is_file():
            ords = read_zero_csv(csv_path)
            metas = json.loads(meta_path.read_text())
            return [ZeroSet(**dict(m, exponents=tuple(m["exponents"]),
                                   ordinates=ords.get((q, m["chi_index"]), np.array([]))))
                    for m in metas], True

    def one(chi):
        zs = cached_zeros(chi, T)
        return dataclasses.replace(zs, modulus=q, chi_index=chi.index)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sets = list(pool.map(one, chars))
    else:
        sets = [one(c) for c in chars]
    if cache_dir is not None:
        from .lfunctions import write_zero_csv

        cache_dir.mkdir(parents=True, exist_ok=True)
        write_zero_csv(csv_path, sets)
        meta_path.write_text(json.dumps([_zeroset_meta(z) for z in sets], indent=2) + "\n")
    return sets, False


def cmd_zeros(cfg: RunConfig, out: Path) -> list[Path]:
    from .lfunctions import write_zero_csv

    if cfg.q is None:
        raise ConfigError("zeros needs q")
    sets, hit = zero_sets_for_modulus(cfg.q, cfg.height, cfg.cache_dir(), cfg.threads)
    bad = [z for z in sets if z.mismatch]
    summary = {"q": cfg.q, "height": cfg.height, "cache_hit": hit,
               "characters": [_zeroset_meta(z) | {"count": len(z)} for z in sets]}
    paths = [write_zero_csv(out / f"zeros_q{cfg.q}.csv", sets),
             _write_json(out / f"zeros_q{cfg.q}.json", summary)]
    if bad:
        z = bad[0]
        raise IncompleteZeroSetError(f"chi_index {z.chi_index}: found {z.found}, expected {z.expected}",
                                     found=z.found, expected=z.expected)
    return paths


def _density_reports(cfg: RunConfig) -> list:
    tf = _tf(cfg)
    if cfg.Q is not None:
        rep = dens.density_averaged(cfg.Q, tf, cfg.weighted, cfg.t4_form)
        for s in cfg.sources:
            v, env = dens.predict(s, tf, Q=cfg.Q, kappa=cfg.kappa, a=cfg.a, M=cfg.M,
                                  printed_sign=cfg.printed_sign)
            rep.add_prediction(s, v, env)
        return [rep]
    rep = dens.density_prime_side(cfg.q, cfg.q, tf, cfg.t4_form)
    for s in cfg.sources:
        v, env = dens.predict(s, tf, q=cfg.q, kappa=cfg.kappa, a=cfg.a, M=cfg.M,
                              printed_sign=cfg.printed_sign)
        rep.add_prediction(s, v, env)
    return [rep]


def cmd_density(cfg: RunConfig, out: Path) -> list[Path]:
    reps = _density_reports(cfg)
    tag = f"q{cfg.q}" if cfg.Q is None else f"Q{f18(cfg.Q)}"
    return [dens.write_reports_csv(out / f"density_{tag}.csv", reps),
            dens.write_reports_json(out / f"density_{tag}.json", reps)]


def cmd_verify_explicit(cfg: RunConfig, out: Path) -> list[Path]:
    from .lfunctions import family_zero_sum

    if cfg.q is None:
        raise ConfigError("verify-explicit needs q")
    tf = _tf(cfg)
    rep = dens.density_prime_side(cfg.q, cfg.q, tf, cfg.t4_form)
    value, tail = family_zero_sum(cfg.q, tf, cfg.q, cfg.height)
    rep.add_zero_side(value, tail, slack=3.0 / dens.euler_phi(cfg.q))
    paths = [dens.write_reports_csv(out / f"verify_q{cfg.q}.csv", [rep]),
             dens.write_reports_json(out / f"verify_q{cfg.q}.json", [rep])]
    if rep.flags["zero_side"]:
        from .errors import AccuracyLossError

        raise AccuracyLossError(
            f"explicit formula gap {abs(rep.residuals['zero_side']):.3e} exceeds "
            f"{rep.envelopes['zero_side']:.3e}")
    return paths


def cmd_lemma24(cfg: RunConfig, out: Path) -> list[Path]:
    from .totient import totient_sum_asymptotic, totient_sum_direct

    rows, recs = [], []
    for R in cfg.R:
        d = totient_sum_direct(R, cfg.variant, cfg.poly)
        a = totient_sum_asymptotic(R, cfg.variant, cfg.poly)
        nr = abs(d - a) * math.sqrt(R) / math.log(R)
        rows.append([R, cfg.variant, d, a, d - a, nr])
        recs.append({"R": R, "direct": d, "asymptotic": a, "difference": d - a, "normalized": nr})
    header = ["R", "variant", "direct", "asymptotic", "difference", "normalized_residual"]
    return [_write_csv(out / f"lemma24_{cfg.variant}.csv", header, rows),
            _write_json(out / f"lemma24_{cfg.variant}.json",
                        {"variant": cfg.variant, "poly": cfg.poly, "rows": recs})]


def cmd_constants(cfg: RunConfig, out: Path) -> list[Path]:
    from .special import all_constants

    consts = [c.as_dict() for c in all_constants()]
    rows = [[c["id"], c["value"], c["error"], c["descriptor"]] for c in consts]
    return [_write_csv(out / "constants.csv", ["id", "value", "error", "descriptor"], rows),
            _write_json(out / "constants.json", {c["id"]: c for c in consts})]


def _need_x(cfg: RunConfig):
    if not cfg.x:
        raise ConfigError(f"{cfg.command} needs --x")


def cmd_variance(cfg: RunConfig, out: Path) -> list[Path]:
    from .hypotheses import gv_variance

    _need_x(cfg)
    Qs = cfg.Qs or ([cfg.Q] if cfg.Q else [])
    if not Qs:
        raise ConfigError("variance needs --Q")
    samples = [gv_variance(x, Q, workers=cfg.threads).as_dict() for x in cfg.x for Q in Qs]
    cols = ["x", "Q", "V", "V1", "V_half", "main_term", "ratio"]
    return [_write_csv(out / "variance.csv", cols, [[s[c] for c in cols] for s in samples]),
            _write_json(out / "variance.json", samples)]


def cmd_deavg(cfg: RunConfig, out: Path) -> list[Path]:
    from .hypotheses import deaveraging_ratio

    _need_x(cfg)
    Qs = cfg.Qs or ([cfg.Q] if cfg.Q else [])
    if not Qs:
        raise ConfigError("deavg needs --Q")
    rows = []
    for x in cfg.x:
        for Q in Qs:
            r, eta = deaveraging_ratio(x, Q, workers=cfg.threads)
            rows.append([x, Q, r, eta, int(r <= 1.0)])
    cols = ["x", "Q", "ratio", "eta_hat", "eta1_holds"]
    return [_write_csv(out / "deavg.csv", cols, rows),
            _write_json(out / "deavg.json", [dict(zip(cols, r)) for r in rows])]


def cmd_montgomery(cfg: RunConfig, out: Path) -> list[Path]:
    from .hypotheses import montgomery_scan, write_fit_json, write_scan_csv

    _need_x(cfg)
    if not cfg.qs:
        raise ConfigError("montgomery needs --qs")
    fit = montgomery_scan(cfg.x, cfg.qs, cfg.smoothed)
    return [write_scan_csv(out / "montgomery.csv", fit), write_fit_json(out / "montgomery.json", fit)]


HANDLERS = {
    "chars": cmd_chars, "zeros": cmd_zeros, "density": cmd_density,
    "verify-explicit": cmd_verify_explicit, "lemma24": cmd_lemma24, "constants": cmd_constants,
    "variance": cmd_variance, "deavg": cmd_deavg, "montgomery": cmd_montgomery,
}


# -- orchestration -------------------------------------------------------------------

def run(cfg: RunConfig) -> tuple[int, list[Path]]:
    """Execute one command; returns (exit status, artifacts). Errors leave error JSON behind."""
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    name = cfg.command.replace("-", "_") or "unknown"
    try:
        cfg.validate()
        if cfg.command not in HANDLERS:
            raise ConfigError(f"unknown command {cfg.command!r}")
        dens.QUAD_TOL = cfg.quad_tol
        paths = HANDLERS[cfg.command](cfg, out)
        status, err = 0, None
    except LowZerosError as exc:
        status, paths = exc.exit_code, []
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        for k in ("gap", "found", "expected"):
            if getattr(exc, k, None) is not None:
                err[k] = getattr(exc, k)
    except Exception as exc:  # anything unexpected is a numeric/internal failure
        status, paths = 3, []
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": 3,
               "traceback": traceback.format_exc()}
    wall = time.perf_counter() - t0
    if err is not None:
        paths = [_write_json(out / f"error_{name}.json", err)]
        print(json.dumps(err), file=sys.stderr)
    manifest = {"command": cfg.command, "config": cfg.as_dict(), "versions": versions(),
                "wall_time_s": wall, "exit_status": status, "artifacts": [p.name for p in paths]}
    paths.append(_write_json(out / f"manifest_{name}.json", manifest))
    (out / f"config_{name}.txt").write_text(dump_config(cfg))
    return status, paths


def replay(manifest_path: str | Path, out: str | None = None) -> tuple[int, list[Path]]:
    m = json.loads(Path(manifest_path).read_text())
    layer = dict(m["config"])
    if out is not None:
        layer["out"] = out
    return run(build_config(layer))


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--out", help="output directory (default $LOWZEROS_OUT or ./lowzeros_out)")
    g.add_argument("--cache", help="zero-cache directory")
    g.add_argument("--threads", type=int)
    g.add_argument("--limit", type=float, help="prime-table limit X")
    g.add_argument("--quad-tol", dest="quad_tol", type=float)
    t = p.add_argument_group("test function")
    t.add_argument("--family")
    t.add_argument("--sigma", type=float)
    t.add_argument("--power", type=int)
    t.add_argument("--tf-path", dest="tf_path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lowzeros", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chars", help="enumerate characters mod q")
    p.add_argument("q", type=int)
    _common(p)

    p = sub.add_parser("zeros", help="zeros of L(s, chi) for every chi mod q")
    p.add_argument("q", type=int)
    p.add_argument("--height", type=float)
    _common(p)

    p = sub.add_parser("density", help="prime side of the 1-level density and predictions")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--q", type=int)
    grp.add_argument("--range", dest="Q", type=float, help="average over Q/2 < q <= Q")
    p.add_argument("--sources", help="comma-separated prediction sources")
    p.add_argument("--t4-form", dest="t4_form", choices=["psi", "psi2", "sum"])
    p.add_argument("--unweighted", dest="weighted", action="store_const", const=False)
    p.add_argument("--printed-sign", dest="printed_sign", action="store_const", const=True)
    p.add_argument("--kappa", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--M", type=float)
    _common(p)

    p = sub.add_parser("verify-explicit", help="zero side against prime side for one q")
    p.add_argument("--q", type=int)
    p.add_argument("--height", type=float)
    p.add_argument("--t4-form", dest="t4_form", choices=["psi", "psi2", "sum"])
    _common(p)

    p = sub.add_parser("lemma24", help="reciprocal-totient sums against their expansion")
    p.add_argument("--R", help="comma-separated scales")
    p.add_argument("--variant", choices=["plain", "general", "halved"])
    p.add_argument("--poly", help="ascending coefficients of P(u)")
    _common(p)

    p = sub.add_parser("constants", help="certified constants with error bounds")
    _common(p)

    for name, hlp in (("variance", "Goldston-Vaughan variance"), ("deavg", "de-averaging ratio")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--x", help="comma-separated x values")
        p.add_argument("--Q", dest="Qs", help="comma-separated Q values")
        _common(p)

    p = sub.add_parser("montgomery", help="exponent scan of E(x, q, 1)")
    p.add_argument("--x", help="comma-separated x values")
    p.add_argument("--qs", help="comma-separated moduli")
    p.add_argument("--smoothed", action="store_const", const=True)
    _common(p)

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    if args["command"] == "replay":
        status, paths = replay(args["manifest"], args.get("out"))
    else:
        cli = {k: v for k, v in args.items() if k != "config"}
        if cli.get("limit") is not None:
            cli["limit"] = int(cli["limit"])
        try:
            file_layer = load_config(args["config"]) if args.get("config") else {}
            cfg = build_config(file_layer, cli)
        except ConfigError as exc:
            print(json.dumps({"error": "ConfigError", "message": str(exc), "exit_code": 2}),
                  file=sys.stderr)
            return 2
        status, paths = run(cfg)
    for p in paths:
        print(p)
    return status


if __name__ == "__main__":
    sys.exit(main())
