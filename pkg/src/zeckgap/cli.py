"""Command-line entry point: ``zeckgap <subcommand> ...``.

Every report starts with a self-describing header (tool version and a hash
of the effective configuration). Exit codes: 0 success, 2 configuration
error, 3 enumeration budget exceeded, 4 a check reported a failing finding.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from zeckgap import __version__
from zeckgap.convergence import METRICS, convergence_profile, decay_fit
from zeckgap.decomposition import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    enumerate_batch,
    greedy_decompose,
    sample_batch,
    verify_uniqueness,
)
from zeckgap.diagnostics import (
    concentration_check,
    diagonal_term,
    factorization_check,
    fit_summand_growth,
    gaussianity_check,
    is_decreasing,
    lemma1_diagnostic,
    lemma2_diagnostic,
    summand_count_stats,
    variance_char,
)
from zeckgap.gapstats import GapMeasure, NoGapsError, average_gap_measure, individual_gap_measure
from zeckgap.sequence import IntervalSpec, SequenceSpec, dominant_root, get_family

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_FINDING = 4

CACHE_ENV = "ZECKGAP_CACHE_DIR"
_SYMBOLS = {"fibonacci": "F", "tribonacci": "T"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- formatting


def fmt_float(x: float) -> str:
    return f"{x:.15g}"


def _num(x: float) -> float:
    return float(fmt_float(x))


def jsonable(obj):
    """Fractions become ``"p/q"``, complex numbers ``{"re", "im"}``, floats 15 significant digits."""
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, complex):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, float):
        return _num(obj) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return jsonable(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------- config


def _config_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "output", "workers", "reproducible"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def config_hash(args: argparse.Namespace) -> str:
    blob = json.dumps(jsonable(_config_dict(args)), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def resolve_family(args: argparse.Namespace) -> SequenceSpec:
    try:
        if args.coefficients:
            coeffs = tuple(int(c) for c in args.coefficients.split(","))
            init = tuple(int(b) for b in (args.initial or "").split(",") if b)
            return SequenceSpec(args.family or "custom", coeffs, init)
        if not args.family:
            raise ConfigError("no family given")
        return get_family(args.family, args.family_file)
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def resolve_interval(args: argparse.Namespace) -> IntervalSpec:
    try:
        return IntervalSpec(args.c1, args.d1, args.c2, args.d2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_n_range(text: str) -> list[int]:
    """``"a:b"`` or ``"a:b:step"`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            a, b = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            values = list(range(a, b + 1, step))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad n range {text!r}") from exc
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"n range {text!r} must be nonempty and ascending")
    return values


def parse_floats(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        out.append(math.pi if part == "pi" else float(part))
    return out


def _header(args: argparse.Namespace) -> str:
    return f"# zeckgap {__version__} {args.command} config={config_hash(args)}"


def _json_report(args: argparse.Namespace, body: dict) -> str:
    report = {
        "tool": "zeckgap",
        "version": __version__,
        "command": args.command,
        "config_hash": config_hash(args),
        "config": _config_dict(args),
        **body,
    }
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


def _csv(args: argparse.Namespace, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_header(args) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _load(args, spec, ispec, n):
    if args.mode == "sample":
        return sample_batch(spec, ispec, n, args.samples, args.seed, args.workers)
    return enumerate_batch(spec, ispec, n, args.budget)


def _reference_measure(args, spec, ispec, n) -> GapMeasure:
    """Average measure at ``n``; cached on disk when ``ZECKGAP_CACHE_DIR`` is set."""
    cache_dir = os.environ.get(CACHE_ENV)
    key = f"{spec.name}-{spec.coefficients}-{spec.initial_terms}-{ispec.c1},{ispec.d1},{ispec.c2},{ispec.d2}-{n}-{args.mode}-{args.samples}-{args.seed}"
    path = None
    if cache_dir:
        digest = hashlib.sha256(key.encode()).hexdigest()[:24]
        path = Path(cache_dir) / f"ref-{digest}.json"
        if path.exists():
            data = json.loads(path.read_text())
            return GapMeasure.from_counts({int(g): c for g, c in data["counts"].items()}, exact=data["exact"])
    m = average_gap_measure(_load(args, spec, ispec, n))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"key": key, "exact": m.exact, "counts": {str(g): c for g, c in m.counts.items()}}))
    return m


# ---------------------------------------------------------------- commands


def cmd_seq(args) -> tuple[str, int]:
    spec = resolve_family(args)
    terms = spec.terms(args.count)
    lam = dominant_root(spec)
    if args.format == "json":
        return _json_report(args, {"family": spec.to_dict(), "dominant_root": lam, "terms": list(terms)}), EXIT_OK
    return _csv(args, ["i", "b_i"], ((i, b) for i, b in enumerate(terms, 1))), EXIT_OK


def _symbol(spec: SequenceSpec) -> str:
    return _SYMBOLS.get(spec.name, "b")


def cmd_decompose(args) -> tuple[str, int]:
    spec = resolve_family(args)
    sym = _symbol(spec)
    results = []
    for z in args.z:
        try:
            results.append(greedy_decompose(spec, z))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.format == "json":
        body = {"decompositions": [{"z": d.value, "k": d.k, "indices": list(d.indices)} for d in results]}
        return _json_report(args, body), EXIT_OK
    lines = []
    for d in results:
        desc = list(reversed(d.indices))
        names = " + ".join(f"{sym}_{i}" for i in desc)
        values = "+".join(str(spec.term(i)) for i in desc)
        lines.append(f"{d.value} = {names} ({values})")
    return "\n".join(lines) + "\n", EXIT_OK


def cmd_dump(args) -> tuple[str, int]:
    spec, ispec = resolve_family(args), resolve_interval(args)
    batch = _load(args, spec, ispec, args.n)
    rows = ((d.value, d.k, ";".join(map(str, d.indices))) for d in batch)
    if args.format == "json":
        body = {"n": args.n, "rows": [{"z": z, "k": k, "indices": idx} for z, k, idx in rows]}
        return _json_report(args, body), EXIT_OK
    return _csv(args, ["z", "k", "indices"], rows), EXIT_OK


def _measure_rows(m: GapMeasure):
    for g, p in m.masses.items():
        count = m.counts.get(g) if m.counts else None
        if isinstance(p, Fraction):
            yield g, count, float(p), p.numerator, p.denominator
        else:
            yield g, count, float(p), "", ""


def cmd_gaps(args) -> tuple[str, int]:
    spec, ispec = resolve_family(args), resolve_interval(args)
    if args.individual is not None:
        try:
            m = individual_gap_measure(greedy_decompose(spec, args.individual))
        except NoGapsError as exc:
            raise ConfigError(str(exc)) from exc
        scope = {"z": args.individual}
    else:
        if args.n is None:
            raise ConfigError("gaps needs --n or --individual")
        m = average_gap_measure(_load(args, spec, ispec, args.n))
        scope = {"n": args.n}
    if args.format == "json":
        rows = [
            {"g": g, "count": c, "probability": p if den == "" else Fraction(num, den)}
            for g, c, p, num, den in _measure_rows(m)
        ]
        return _json_report(args, {**scope, "total_gaps": m.total_gaps, "exact": m.exact, "masses": rows}), EXIT_OK
    return _csv(args, ["g", "count", "probability", "numerator", "denominator"], _measure_rows(m)), EXIT_OK


def cmd_theorem_check(args) -> tuple[str, int]:
    spec, ispec = resolve_family(args), resolve_interval(args)
    if args.format == "csv":
        raise ConfigError("theorem-check only emits JSON")
    n_values = parse_n_range(args.n_range)
    t_grid = parse_floats(args.t_grid)
    ref_n = args.ref_n or n_values[-1]
    P_ref = _reference_measure(args, spec, ispec, ref_n)

    batches = {n: _load(args, spec, ispec, n) for n in n_values}
    stats = [summand_count_stats(batches[n], n) for n in n_values]
    window = [s for s in stats if s.n >= max(10, n_values[-1] - 12)]
    if len(window) < 2:
        window = stats
    c_mean = c_var = resid = None
    if len(window) >= 2:
        fitted = fit_summand_growth(window)[0]
        c_mean, c_var, resid = fitted.c_mean_fit, fitted.c_var_fit, fitted.residual_max

    per_n = []
    for n, s in zip(n_values, stats):
        batch = batches[n]
        row = {
            "n": n,
            "size": s.size,
            "mu_n": s.mu_n,
            "sigma2_n": s.sigma2_n,
            "mu_stderr": s.mu_stderr,
            "histogram": s.histogram,
            "max_k": s.max_k,
            "max_k_over_n": s.max_k / n,
        }
        try:
            row["gaussianity_ks"] = gaussianity_check(s)
        except ValueError:
            row["gaussianity_ks"] = None
        band = concentration_check(s, args.delta, c_var=c_var if c_var and c_var > 0 else None)
        row["concentration"] = {
            "delta": band.delta,
            "lower": band.lower,
            "upper": band.upper,
            "outside_fraction": band.outside_fraction,
            "reference_bound": band.reference_bound,
        }
        chars = []
        for t in t_grid:
            try:
                ev = variance_char(batch, t)
            except NoGapsError:
                continue
            diag, bound = diagonal_term(batch, s, t)
            chars.append(
                {
                    "t": t,
                    "mean_individual": ev.average_value,
                    "pooled": ev.pooled_value,
                    "variance_complex": ev.variance,
                    "variance_modulus": ev.variance_modulus,
                    "lemma1": lemma1_diagnostic(batch, s, t),
                    "lemma2": lemma2_diagnostic(batch, s, t),
                    "diagonal": diag,
                    "diagonal_bound": bound,
                }
            )
        row["char_fn"] = chars
        fact = factorization_check(spec, ispec, n, args.g_max, P_ref, batch=batch)
        row["factorization_error_total"] = fact.error_total
        per_n.append(row)

    verdicts = {
        "gaussianity_ks_decreasing": is_decreasing([r["gaussianity_ks"] or 0.0 for r in per_n], 1),
        "concentration_nonincreasing": all(
            b["concentration"]["outside_fraction"] <= a["concentration"]["outside_fraction"] for a, b in zip(per_n, per_n[1:])
        ),
        "factorization_error_decreasing": is_decreasing([r["factorization_error_total"] for r in per_n], 1),
        "variance_at_zero_is_zero": all(c["variance_modulus"] == 0 for r in per_n for c in r["char_fn"] if c["t"] == 0),
    }
    for t in t_grid:
        if t == 0:
            continue
        for key in ("variance_modulus", "lemma1", "lemma2", "diagonal_bound"):
            series = [c[key] for r in per_n for c in r["char_fn"] if c["t"] == t]
            verdicts[f"{key}_decreasing_t={fmt_float(t)}"] = is_decreasing(series, 1)

    body = {
        "family": spec.to_dict(),
        "interval": {"c1": ispec.c1, "d1": ispec.d1, "c2": ispec.c2, "d2": ispec.d2},
        "reference": f"P_ref = average gap measure at n={ref_n} ({args.mode})",
        "centre": "lemma, factorization and diagonal quantities use mu = mean(k) - 1",
        "notes": ["tail estimate uses the measured sigma_n where the width constant is unspecified"],
        "growth_fit": {"c_mean": c_mean, "c_var": c_var, "mean_residual_max": resid},
        "per_n": per_n,
        "verdicts": verdicts,
    }
    code = EXIT_FINDING if args.strict and not all(verdicts.values()) else EXIT_OK
    return _json_report(args, body), code


def cmd_converge(args) -> tuple[str, int]:
    spec, ispec = resolve_family(args), resolve_interval(args)
    n_values = parse_n_range(args.n_range)
    P_ref = _reference_measure(args, spec, ispec, args.ref_n) if args.ref_n else None
    report = convergence_profile(
        spec,
        ispec,
        n_values,
        epsilon=args.epsilon,
        metric=args.metric,
        mode=args.mode,
        P_ref=P_ref,
        sample_count=args.samples,
        seed=args.seed,
        workers=args.workers,
        budget=args.budget,
    )
    rows = [(r.n, r.count, r.mean, r.median, r.max, r.fraction_above) for r in report.rows]
    cols = ["n", "count", "mean_distance", "median", "max", "fraction_above_epsilon"]
    if args.format == "json":
        body = {"reference": report.reference, "metric": report.metric, "epsilon": report.epsilon, "rows": [dict(zip(cols, r)) for r in rows]}
        return _json_report(args, body), EXIT_OK
    return _csv(args, cols, rows), EXIT_OK


def cmd_decay(args) -> tuple[str, int]:
    spec, ispec = resolve_family(args), resolve_interval(args)
    m = average_gap_measure(_load(args, spec, ispec, args.n))
    lam = dominant_root(spec)
    try:
        fit = decay_fit(m, args.g_min, args.g_max, lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(int(g), float(math.exp(lp)), float(lp), float(r)) for g, lp, r in zip(fit.g, fit.log_p, fit.residuals)]
    summary = {
        "ratio": fit.ratio,
        "r_squared": fit.r_squared,
        "inverse_lambda": fit.inverse_lambda,
        "inverse_lambda_squared": fit.inverse_lambda_squared,
        "g_range": list(fit.g_range),
    }
    cols = ["g", "P(g)", "log P(g)", "residual"]
    if args.format == "json":
        return _json_report(args, {"n": args.n, "fit": summary, "rows": [dict(zip(cols, r)) for r in rows]}), EXIT_OK
    text = _csv(args, cols, rows)
    extra = "# " + " ".join(f"{k}={fmt_float(v) if isinstance(v, float) else v}" for k, v in summary.items() if k != "g_range")
    head, rest = text.split("\n", 1)
    return f"{head}\n{extra}\n{rest}", EXIT_OK


def cmd_verify_uniqueness(args) -> tuple[str, int]:
    spec = resolve_family(args)
    report = verify_uniqueness(spec, args.z_max)
    code = EXIT_OK if report.ok else EXIT_FINDING
    if args.format == "json":
        body = {
            "family": spec.name,
            "z_max": report.z_max,
            "legal_strings": report.legal_strings,
            "violations": report.violations,
            "greedy_mismatches": report.greedy_mismatches,
            "ok": report.ok,
        }
        return _json_report(args, body), code
    rows = [(z, c) for z, c in sorted(report.violations.items())]
    text = _csv(args, ["z", "legal_decompositions"], rows)
    return text + f"# violations={len(report.violations)} greedy_mismatches={len(report.greedy_mismatches)}\n", code


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", default="fibonacci", help="fibonacci, tribonacci, base<B>, or a name from --family-file")
    common.add_argument("--family-file", help="JSON file of custom families")
    common.add_argument("--coefficients", help="inline recurrence coefficients, e.g. 1,1")
    common.add_argument("--initial", help="inline initial terms, e.g. 1,2")
    common.add_argument("--c1", type=int, default=1)
    common.add_argument("--d1", type=int, default=0)
    common.add_argument("--c2", type=int, default=1)
    common.add_argument("--d2", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json"), help="default csv (json for theorem-check)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")
    common.add_argument("--samples", type=int, default=10**5)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    common.add_argument("--reproducible", action="store_true", help="force the single-worker deterministic path")

    parser = argparse.ArgumentParser(prog="zeckgap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"zeckgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seq", parents=[common], help="print sequence terms")
    p.add_argument("--count", type=int, default=20)
    p.set_defaults(func=cmd_seq)

    p = sub.add_parser("decompose", parents=[common], help="greedy decomposition of integers")
    p.add_argument("z", type=int, nargs="+")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("dump", parents=[common], help="stream decompositions of I_n")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("gaps", parents=[common], help="average or individual gap measure")
    p.add_argument("--n", type=int)
    p.add_argument("--individual", type=int, metavar="Z")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("theorem-check", parents=[common], help="JSON report of all convergence diagnostics")
    p.add_argument("--n-range", default="10:20")
    p.add_argument("--t-grid", default="0,0.5,1,2,pi")
    p.add_argument("--g-max", type=int, default=8)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--ref-n", type=int)
    p.add_argument("--strict", action="store_true", help="exit 4 when a trend verdict fails")
    p.set_defaults(func=cmd_theorem_check)

    p = sub.add_parser("converge", parents=[common], help="distances of individual measures from the reference")
    p.add_argument("--n-range", default="10:20:5")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--metric", choices=METRICS, default="l1")
    p.add_argument("--ref-n", type=int)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("decay", parents=[common], help="geometric fit of P_n(g)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--g-min", type=int, default=3)
    p.add_argument("--g-max", type=int, default=10)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("verify-uniqueness", parents=[common], help="exhaustive legality/uniqueness search")
    p.add_argument("--z-max", type=int, default=10**4)
    p.set_defaults(func=cmd_verify_uniqueness)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.reproducible:
        args.workers = 1
    if args.format is None:
        args.format = "json" if args.command == "theorem-check" else "csv"
    if args.samples < 1:
        print("error: --samples must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, code = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
