"""Command-line entry point: ``strongconv <subcommand> ...``.

Output conventions: JSON is UTF-8 with sorted keys, CSV follows RFC 4180 with
a header row, and every randomized output records its seed.  Configuration
files are INI (flat key = value per section); command-line flags win.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import backend_name
from .errors import StrongConvError
from .ncpoly import FreeModel, NCPoly, free_matrix_moment, free_norm_estimate, make_word

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

DEFAULTS = {
    "seed": "20240601",
    "threads": "1",
    "out": "strongconv-out",
}


class InputError(Exception):
    """Bad user input (malformed files, unknown names); exits with status 2."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_csv(path_or_stream, header, rows):
    own = isinstance(path_or_stream, (str, Path))
    fh = open(path_or_stream, "w", newline="", encoding="utf-8") if own else path_or_stream
    try:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow(r)
    finally:
        if own:
            fh.close()


def load_poly(path: str) -> NCPoly:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read polynomial file {path}: {exc.strerror}") from None
    try:
        return NCPoly.from_json(text)
    except (StrongConvError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed polynomial: {exc}") from None


def parse_h(spec: str):
    """h as comma-separated coefficients (lowest degree first) or a Poly JSON file."""
    from .poly import Poly

    if spec is None:
        raise InputError("missing --h")
    if os.path.exists(spec):
        try:
            return Poly.from_json(Path(spec).read_text(encoding="utf-8"))
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{spec}: malformed polynomial h: {exc}") from None
    try:
        return Poly([Fraction(t.strip()) for t in spec.split(",") if t.strip()])
    except ValueError:
        raise InputError(f"bad coefficient list {spec!r}") from None


def parse_ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected a list of integers, got {text!r}") from None


def parse_floats(text) -> list[float]:
    try:
        return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected a list of numbers, got {text!r}") from None


def load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict({"run": DEFAULTS})
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg.read_file(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise InputError(f"config error in {path}: {exc}") from None
    return cfg


def config_hash(cfg: configparser.ConfigParser) -> str:
    flat = {f"{s}.{k}": v for s in cfg.sections() for k, v in sorted(cfg.items(s))}
    return hashlib.sha256(json.dumps(flat, sort_keys=True).encode()).hexdigest()[:16]


def _section(cfg, name: str) -> dict:
    return dict(cfg.items(name)) if cfg.has_section(name) else {}


def _settings(args, cfg) -> tuple[int, int, Path]:
    seed = args.seed if args.seed is not None else cfg.getint("run", "seed")
    threads = args.threads if args.threads is not None else cfg.getint("run", "threads")
    out = Path(args.out if args.out is not None else cfg.get("run", "out"))
    return seed, max(1, threads), out


def emit(args, text: str, name: str | None = None):
    """Print, or write to --out/<name> when --out is given."""
    if args.out and name:
        p = Path(args.out)
        p.mkdir(parents=True, exist_ok=True)
        (p / name).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_moments(args, cfg) -> int:
    from .genus import gse_expectation, word_polynomial
    from .ncpoly import free_haar_moment, free_semicircular_moment
    from .weingarten import orthogonal_word_moment, symplectic_expectation, unitary_word_moment

    try:
        w = make_word(args.word)
    except StrongConvError as exc:
        raise InputError(str(exc)) from None
    ens = args.ensemble.lower()
    out: dict = {"ensemble": ens, "word": args.word}
    if ens in ("gue", "goe"):
        poly = word_polynomial(ens, w).poly
        out["polynomial"] = json.loads(poly.to_json())
        if args.N:
            out["N"] = args.N
            out["value"] = str(poly(Fraction(1, args.N)))
    elif ens in ("free-semi", "semicircular"):
        out["value"] = str(free_semicircular_moment(w))
    elif ens in ("free-haar", "free-unitary"):
        out["value"] = str(free_haar_moment(w))
    else:
        if not args.N:
            raise InputError(f"--N is required for {ens}")
        fn = {"gse": gse_expectation, "haar-u": unitary_word_moment,
              "haar-o": orthogonal_word_moment, "haar-sp": symplectic_expectation}.get(ens)
        if fn is None:
            raise InputError(f"unknown ensemble {args.ensemble!r}")
        out["N"] = args.N
        out["value"] = str(fn(w, args.N))
    emit(args, dumps(out), "moments.json")
    return EXIT_OK


def cmd_psi(args, cfg) -> int:
    from .weingarten import reconstruct_psi, reconstruct_psi_orthogonal

    P = load_poly(args.poly)
    h = parse_h(args.h)
    psi = reconstruct_psi(P, h) if args.group == "unitary" else reconstruct_psi_orthogonal(P, h)
    out = psi.to_dict()
    out["info"] = psi.info
    emit(args, dumps(out), "psi.json")
    return EXIT_OK


def cmd_expand(args, cfg) -> int:
    from .expansion import mu_coeffs, nu_coeffs, nu_smooth
    from .poly import ChebSeries

    P = load_poly(args.poly)
    ens = args.ensemble.lower()
    if args.cheb:
        try:
            data = json.loads(Path(args.cheb).read_text(encoding="utf-8"))
            chi = ChebSeries(float(data["radius"]), np.array(data["coeffs"], dtype=float),
                             float(data.get("truncation_error", 0.0)), float(data.get("noise_floor", 0.0)),
                             np.zeros(0))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{args.cheb}: malformed Chebyshev series: {exc}") from None
        vals = [nu_smooth(ens, P, chi, k) for k in range(args.order)]
        out = {"coeffs": [v.value for v in vals], "errors": [v.error for v in vals], "ensemble": ens}
    else:
        h = parse_h(args.h)
        res = mu_coeffs(P, h, args.order) if ens == "haar-u" else nu_coeffs(ens, P, h, args.order)
        out = res.to_dict()
    emit(args, dumps(out), "expand.json")
    return EXIT_OK


def cmd_interp_check(args, cfg) -> int:
    from .interp import inverse_integer_ratio
    from .poly import Poly

    seed, _, _ = _settings(args, cfg)
    rng = random.Random(seed)
    rows = []
    for q in parse_ints(args.q):
        delta = args.delta if args.delta else 1 / (24 * q)
        worst = 0.0
        for _ in range(args.trials):
            h = Poly([Fraction(rng.uniform(-1, 1)).limit_denominator(10 ** 6) for _ in range(q + 1)])
            worst = max(worst, inverse_integer_ratio(h, delta).ratio)
        rows.append((q, repr(delta), repr(worst), args.trials))
    buf = io.StringIO()
    write_csv(buf, ("q", "delta", "ratio", "trials"), rows)
    emit(args, buf.getvalue(), "interp_check.csv")
    return EXIT_OK


def cmd_sample(args, cfg) -> int:
    from .sampler import EmpiricalStats, SampleSpec, sample_norms, sample_trace_stats

    seed, threads, _ = _settings(args, cfg)
    P = load_poly(args.poly)
    spec = SampleSpec(args.ensemble, args.N, P, args.replicas, seed)
    norms = sample_norms(spec, threads)
    tr2 = sample_trace_stats(spec, lambda ev: ev ** 2, threads)
    rows = []
    for i, (nv, tv) in enumerate(zip(norms, tr2)):
        rows.append((i, args.N, spec.ensemble.value, repr(float(nv)), "tr_x2", repr(float(tv))))
    stats = EmpiricalStats.from_samples(norms, meta={"seed": seed, "N": args.N,
                                                     "ensemble": spec.ensemble.value})
    buf = io.StringIO()
    write_csv(buf, ("replica", "N", "ensemble", "norm", "stat_name", "stat_value"), rows)
    if args.out:
        emit(args, buf.getvalue(), "samples.csv")
        emit(args, dumps(stats.to_dict()), "summary.json")
    else:
        sys.stdout.write(buf.getvalue())
        sys.stdout.write(dumps(stats.to_dict()) + "\n")
    return EXIT_OK


# verify suites ---------------------------------------------------------------


def _random_corpus(seed: int, count: int, r: int = 2, q0: int = 2, q: int = 6, D: int = 3):
    """Random self-adjoint star-free P (degree <= q0, D <= D) with random h (degree <= q)."""
    from .poly import Poly
    from .ncpoly import CMat, NCPoly

    rng = random.Random(seed)
    out = []
    for _ in range(count):
        d = rng.randint(1, D)
        deg0 = rng.randint(1, q0)
        terms: dict = {}
        nterms = rng.randint(1, 3)
        for _ in range(nterms):
            L = rng.randint(0, deg0)
            w = tuple(rng.randint(1, r) for _ in range(L))
            re = np.array([[rng.randint(-2, 2) for _ in range(d)] for _ in range(d)], dtype=np.int64)
            im = np.array([[rng.randint(-2, 2) for _ in range(d)] for _ in range(d)], dtype=np.int64)
            A = CMat(re, im)
            terms[w] = terms[w] + A if w in terms else A
        # symmetrize: P + P*
        P0 = NCPoly(r, d, {make_word(w): A for w, A in terms.items()})
        P = P0 + P0.adjoint(hermitian_letters=True)
        if P.is_zero():
            P = NCPoly.generator(1, r, d)
        qh = rng.randint(1, q)
        h = Poly([rng.randint(-3, 3) for _ in range(qh)] + [rng.choice((-2, -1, 1, 2))])
        out.append((P, h))
    return out


def suite_exact(seed: int) -> dict:
    import itertools

    from .genus import word_polynomial
    from .oracles import entry_wick_expectation

    checked = failures = 0
    for n in range(0, 7):
        for w in itertools.product((1, 2), repeat=n):
            for N in (2, 3):
                for ens in ("gue", "goe"):
                    checked += 1
                    if entry_wick_expectation(ens, list(w), N) != word_polynomial(ens, list(w)).at_N(N):
                        failures += 1
    return {"checked": checked, "failures": failures, "pass": failures == 0}


def suite_parity(seed: int) -> dict:
    from .genus import Ensemble, spectral_statistic_poly

    checked = failures = 0
    for P, h in _random_corpus(seed, 20):
        phi = spectral_statistic_poly(Ensemble.GUE, P, h).poly
        checked += 1
        if not phi.odd_part_is_zero():
            failures += 1
    return {"checked": checked, "failures": failures, "pass": failures == 0}


def suite_duality(seed: int) -> dict:
    from .genus import gse_expectation
    from .sampler import mc_word_moments

    words = ["1,1", "1,1,1,1", "1,2,1,2", "1,1,2,2"]
    N, reps = 10, 4000
    rows = []
    ok = 0
    mc = mc_word_moments("gse", words, N, 2, reps, seed)
    for w, (m, se) in zip(words, mc):
        pred = float(gse_expectation(w, N))
        z = (m.real - pred) / se if se else 0.0
        ok += abs(z) <= 4
        rows.append({"word": w, "predicted": pred, "mc": m.real, "se": se, "z": z})
    return {"rows": rows, "pass": ok == len(words)}


def suite_interp(seed: int) -> dict:
    from .interp import DEFAULT_CAP, inverse_integer_ratio, optimality_example
    from .poly import Poly

    rng = random.Random(seed)
    worst = 0.0
    for q in (5, 10):
        for _ in range(50):
            h = Poly([Fraction(rng.uniform(-1, 1)).limit_denominator(10 ** 6) for _ in range(q + 1)])
            worst = max(worst, inverse_integer_ratio(h, 1 / (24 * q)).ratio)
    bounded = all(abs(optimality_example(q)(Fraction(1, N))) <= 1 for q in (1, 4, 8) for N in range(1, 10 * q + 1))
    return {"max_ratio": worst, "cap": DEFAULT_CAP, "optimality_bounded": bounded,
            "pass": worst <= DEFAULT_CAP and bounded}


def suite_support(seed: int) -> dict:
    from .expansion import support_test

    rep = support_test("gue", NCPoly.generator(1, 1), 0.2, 3)
    return {"report": rep.to_dict(), "pass": rep.passed}


SUITES = {"exact": suite_exact, "parity": suite_parity, "duality": suite_duality,
          "interp": suite_interp, "support": suite_support}


def cmd_verify(args, cfg) -> int:
    seed, _, _ = _settings(args, cfg)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    report = {"seed": seed, "suites": {}}
    for name in names:
        t0 = time.perf_counter()
        res = SUITES[name](seed)
        res["seconds"] = round(time.perf_counter() - t0, 3)
        report["suites"][name] = res
    report["pass"] = all(r["pass"] for r in report["suites"].values())
    emit(args, dumps(report), "verify.json")
    return EXIT_OK if report["pass"] else EXIT_FAIL


# experiments -----------------------------------------------------------------


def _default_poly(name: str) -> NCPoly:
    if name == "x1":
        return NCPoly.generator(1, 1)
    if name == "x1x2+x2x1":
        return NCPoly.from_words(2, 1, [("1,2", 1), ("2,1", 1)])
    if name == "x1+x2":
        return NCPoly.from_words(2, 1, [("1", 1), ("2", 1)])
    raise InputError(f"unknown built-in polynomial {name!r}")


def _experiment_poly(sec: dict, default: str) -> NCPoly:
    if "poly_file" in sec:
        return load_poly(sec["poly_file"])
    return _default_poly(sec.get("poly", default))


def _series(path: Path, xs, ys):
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x!r} {y!r}\n")


def experiment_tail(sec, seed, threads, out: Path) -> list[str]:
    from .expansion import is_vacuous, theorem_bound
    from .sampler import SampleSpec, tail_probability

    P = _experiment_poly(sec, "x1")
    eps = float(sec.get("eps", 0.5))
    Ns = parse_ints(sec.get("n", "50,100,200,400"))
    reps = int(sec.get("replicas", 1000))
    c = float(sec.get("c", 1.0))
    target = free_norm_estimate(P, FreeModel.SEMICIRCULAR).upper
    rows, fx, fy, by = [], [], [], []
    for N in Ns:
        st = tail_probability(SampleSpec(sec.get("ensemble", "gue"), N, P, reps, seed), eps, target, threads)
        (thr, (hits, n, (lo, hi))), = st.tail_counts.items()
        freq = hits / n
        b = theorem_bound("gauss", N, eps, c=c)
        rows.append((N, eps, repr(thr), hits, n, repr(freq), repr(lo), repr(hi),
                     repr(math.log(freq)) if hits else "", repr(b), int(is_vacuous(b)), seed))
        fx.append(N)
        fy.append(hi if hits == 0 else freq)
        by.append(b)
    write_csv(out / "tail.csv", ("N", "eps", "threshold", "hits", "replicas", "freq", "ci_lo", "ci_hi",
                                 "log_freq", "bound", "vacuous", "seed"), rows)
    _series(out / "tail_freq.dat", fx, fy)
    _series(out / "tail_bound.dat", fx, by)
    return ["tail.csv", "tail_freq.dat", "tail_bound.dat"]


def rate_rows(P: NCPoly, Ns, reps: int, seed: int, threads: int, ensemble: str = "gue"):
    from .sampler import SampleSpec, sample_norms

    upper = free_norm_estimate(P, FreeModel.SEMICIRCULAR).upper
    rows = []
    for N in Ns:
        norms = sample_norms(SampleSpec(ensemble, N, P, reps, seed), threads)
        med = float(np.median(norms))
        scale = math.sqrt(math.log(N) / N)
        rows.append({"N": N, "median": med, "upper": upper, "gap": med - upper,
                     "C_fit": abs(med - upper) / scale})
    return rows


def experiment_rate(sec, seed, threads, out: Path) -> list[str]:
    P = _experiment_poly(sec, "x1")
    rows = rate_rows(P, parse_ints(sec.get("n", "50,100,200,400")), int(sec.get("replicas", 200)), seed, threads,
                     sec.get("ensemble", "gue"))
    write_csv(out / "rate.csv", ("N", "median", "upper", "gap", "C_fit", "seed"),
              [(r["N"], repr(r["median"]), repr(r["upper"]), repr(r["gap"]), repr(r["C_fit"]), seed) for r in rows])
    _series(out / "rate_cfit.dat", [r["N"] for r in rows], [r["C_fit"] for r in rows])
    return ["rate.csv", "rate_cfit.dat"]


def experiment_concentration(sec, seed, threads, out: Path) -> list[str]:
    from .sampler import SampleSpec, concentration_probe

    P = _experiment_poly(sec, "x1")
    eps_grid = parse_floats(sec.get("eps", "0.01,0.02,0.03,0.05,0.08"))
    rows = []
    for N in parse_ints(sec.get("n", "50,100,200")):
        rep = concentration_probe(SampleSpec(sec.get("ensemble", "gue"), N, P, int(sec.get("replicas", 1000)), seed),
                                  eps_grid, threads)
        for e, f in zip(rep.eps, rep.frequencies):
            rows.append((N, repr(e), repr(f), repr(rep.median), repr(rep.exponent), repr(rep.exponent_per_N), seed))
    write_csv(out / "concentration.csv", ("N", "eps", "freq", "median", "exponent", "exponent_per_N", "seed"), rows)
    return ["concentration.csv"]


def experiment_hayes(sec, seed, threads, out: Path) -> list[str]:
    from .sampler import SampleSpec, sample_norms

    P = _experiment_poly(sec, "x1+x2")
    N = int(sec.get("n", 40))
    norms = sample_norms(SampleSpec("hayes-gue", N, P, int(sec.get("replicas", 200)), seed), threads)
    hist, edges = np.histogram(norms, bins=int(sec.get("bins", 20)))
    write_csv(out / "hayes_norms.csv", ("replica", "N", "norm", "seed"),
              [(i, N, repr(float(v)), seed) for i, v in enumerate(norms)])
    _series(out / "hayes_hist.dat", [float(e) for e in edges[:-1]], [int(h) for h in hist])
    return ["hayes_norms.csv", "hayes_hist.dat"]


EXPERIMENTS = {"tail": experiment_tail, "rate": experiment_rate,
               "concentration": experiment_concentration, "hayes": experiment_hayes}


def cmd_experiment(args, cfg) -> int:
    seed, threads, out = _settings(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    sec = _section(cfg, f"experiment.{args.name}")
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    status, files, error = "ok", [], None
    try:
        files = EXPERIMENTS[args.name](sec, seed, threads, out)
    except (StrongConvError, MemoryError) as exc:
        status, error = "failed", f"{type(exc).__name__}: {exc}"
    manifest = {
        "config_hash": config_hash(cfg),
        "build": f"strongconv {__version__} ({backend_name()})",
        "seed": seed,
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "steps": [{"name": args.name, "status": status, "error": error}],
        "outputs": files,
    }
    (out / f"manifest_{args.name}.json").write_text(dumps(manifest) + "\n", encoding="utf-8")
    return EXIT_OK if status == "ok" else EXIT_FAIL


def cmd_report(args, cfg) -> int:
    seed, _, out = _settings(args, cfg)
    paths = sorted(out.glob("manifest_*.json"))
    lines = [f"# strongconv report", f"seed: {seed}", ""]
    if not paths:
        lines.append("WARNING: no manifests found; nothing has been run")
    ok = True
    for p in paths:
        man = json.loads(p.read_text(encoding="utf-8"))
        for step in man["steps"]:
            missing = [f for f in man["outputs"] if not (out / f).exists()]
            good = step["status"] == "ok" and not missing
            ok &= good
            lines.append(f"{'PASS' if good else 'FAIL'} {step['name']} (config {man['config_hash']})")
            if missing:
                lines.append(f"  WARNING: missing outputs {', '.join(missing)}")
            if step.get("error"):
                lines.append(f"  error: {step['error']}")
    acc = out / "acceptance.txt"
    if acc.exists():
        lines.append("")
        lines.extend(l for l in acc.read_text(encoding="utf-8").splitlines() if l.startswith(("PASS", "FAIL")))
        ok &= "FAIL" not in acc.read_text(encoding="utf-8")
    verify = out / "verify.json"
    if verify.exists():
        rep = json.loads(verify.read_text(encoding="utf-8"))
        for name, res in sorted(rep["suites"].items()):
            ok &= bool(res["pass"])
            lines.append(f"{'PASS' if res['pass'] else 'FAIL'} verify {name}")
    text = "\n".join(lines) + "\n"
    (out / "report.md").write_text(text, encoding="utf-8") if out.exists() else None
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo")

    p = argparse.ArgumentParser(prog="strongconv", description="Exact and Monte Carlo spectral statistics "
                                "of noncommutative polynomials in random matrices.")
    p.add_argument("--version", action="version", version=f"strongconv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("moments", parents=[common], help="exact word moment")
    s.add_argument("--ensemble", required=True,
                   help="gue, goe, gse, haar-u, haar-o, haar-sp, free-semi or free-haar")
    s.add_argument("--word", required=True, help='word such as "1,1*,2,2*"')
    s.add_argument("--N", type=int)
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("psi", parents=[common], help="rational encoding of a Haar statistic")
    s.add_argument("--poly", required=True)
    s.add_argument("--h", required=True)
    s.add_argument("--group", choices=("unitary", "orthogonal"), default="unitary")
    s.set_defaults(func=cmd_psi)

    s = sub.add_parser("expand", parents=[common], help="expansion coefficients nu_k / mu_k")
    s.add_argument("--ensemble", required=True, help="gue, goe or haar-u")
    s.add_argument("--poly", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--h")
    g.add_argument("--cheb", help="JSON file {radius, coeffs}")
    s.add_argument("--order", type=int, default=3)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("interp-check", parents=[common], help="1/N interpolation ratios")
    s.add_argument("--q", default="5,10,20")
    s.add_argument("--delta", type=float)
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(func=cmd_interp_check)

    s = sub.add_parser("sample", parents=[common], help="Monte Carlo norms and traces")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--poly", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--replicas", type=int, default=100)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", parents=[common], help="run an invariant battery")
    s.add_argument("suite", choices=sorted(SUITES) + ["all"])
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("experiment", parents=[common], help="Monte Carlo experiment pipeline")
    s.add_argument("name", choices=sorted(EXPERIMENTS))
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("report", parents=[common], help="summarize completed runs")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except InputError as exc:
        sys.stderr.write(f"strongconv: error: {exc}\n")
        return EXIT_INPUT
    except StrongConvError as exc:
        sys.stderr.write(f"strongconv: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except (ArithmeticError, RuntimeError, KeyError, ValueError) as exc:
        # library errors derive from these builtins as well
        sys.stderr.write(f"strongconv: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
