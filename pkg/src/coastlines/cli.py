"""Command-line entry point: ``coastlines <subcommand> [flags]``.

All outputs are CSV/JSON files written atomically into ``--out``. Failures
print one line ``error: <CODE>: <message>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import correlation as corr
from .distributions import (
    Arcsine,
    Gaussian,
    ModCauchy,
    ModCauchyParams,
    PdfGrid,
    StandardCauchy,
    grid_from_csv,
    grid_to_csv,
    tabulate,
)
from .errors import CoastlineError
from .fitting import fit_modcauchy, report_to_csv, t_half_report
from .geometry import (
    BUILTINS,
    Coastline,
    check_coastline_condition,
    coastline_from_csv,
    coastline_to_csv,
    gencauchy_grid,
    natural_bounds,
    sample_hits,
)
from .inverse import HeuristicConfig, SegmentPlan, plan_segments, round_trip, sine_squared_coastline

PDF_NAMES = (
    "cauchy",
    "gaussian",
    "modcauchy",
    "arcsine",
    "gencauchy-semicircle",
    "gencauchy-line45",
    "gencauchy-line135",
)

# reference decay exponents per category, used as synthetic fixtures
FIXTURE_ALPHAS = {
    "total": 0.45,
    "noon": 0.3,
    "midnight": 0.25,
    "unknown": 0.52,
    "malicious": 0.74,
    "benign": 0.34,
}


class UsageError(CoastlineError):
    code = "USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# helpers


def write_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def parse_range(spec: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise UsageError(f"range must be lo:hi:step, got {spec!r}") from None
    if not (hi > lo and step > 0):
        raise UsageError(f"range needs hi > lo and step > 0, got {spec!r}")
    n = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def load_coastline(name: str) -> Coastline:
    if name in BUILTINS:
        return BUILTINS[name]
    return coastline_from_csv(Path(name).read_text())


def load_pdf(name: str, xs: np.ndarray, y0: float, mc_beta: float = 1.0, mc_alpha: float = 0.75) -> PdfGrid:
    if name == "cauchy":
        return tabulate(StandardCauchy(), xs)
    if name == "gaussian":
        return tabulate(Gaussian(), xs)
    if name == "modcauchy":
        return tabulate(ModCauchy(ModCauchyParams(mc_beta, mc_alpha, (xs[0], xs[-1]))), xs)
    if name == "arcsine":
        return tabulate(Arcsine(), xs)
    if name.startswith("gencauchy-"):
        c = BUILTINS[name.split("-", 1)[1]]
        return gencauchy_grid(c, y0, xs)
    return grid_from_csv(Path(name).read_text())


def _bounds_for(c: Coastline, y0: float):
    if c in BUILTINS.values():
        return natural_bounds(c, y0)
    check = check_coastline_condition(c, y0, c.xs)
    if not check.ok:
        raise CoastlineError(f"coastline condition fails: {check.reason}")
    return check.bounds


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _json(d) -> str:
    return json.dumps(d, indent=2, sort_keys=False) + "\n"


def _roundtrip_summary(rt) -> dict:
    return {"kappa": rt.kappa, "l2": rt.l2, "segments": len(rt.plan)}


# subcommands


def cmd_coastlines(args, out: Path):
    rows = ["name,domain_lo,domain_hi,theta_lo,theta_hi"]
    for name, c in BUILTINS.items():
        b = natural_bounds(c, args.y0)
        rows.append(",".join([name, _fmt(c.domain[0]), _fmt(c.domain[1]), _fmt(b.lo), _fmt(b.hi)]))
    text = "\n".join(rows) + "\n"
    write_atomic(out / "coastlines.csv", text)
    sys.stdout.write(text)


def cmd_forward(args, out: Path):
    c = load_coastline(args.coastline)
    xs = parse_range(args.range) if args.range else getattr(c, "xs", None)
    if xs is None:
        raise UsageError("--range is required for builtin coastlines")
    grid = gencauchy_grid(c, args.y0, xs, _bounds_for(c, args.y0))
    write_atomic(out / "forward.csv", grid_to_csv(grid))


def _pdf_from_args(args):
    xs = parse_range(args.range) if args.range else None
    if xs is None and args.pdf in PDF_NAMES:
        raise UsageError("--range is required for named densities")
    return load_pdf(args.pdf, xs, args.y0, args.mc_beta, args.mc_alpha)


def _plan_from_args(args, pdf):
    if args.plan:
        return SegmentPlan.from_jsonl(Path(args.plan).read_text())
    return plan_segments(pdf, args.y0)


def _kappa(value: str):
    if value == "auto":
        return None
    k = float(value)
    if not k > 0:
        raise UsageError("--kappa must be positive or 'auto'")
    return k


def cmd_inverse(args, out: Path):
    pdf = _pdf_from_args(args)
    kappa = _kappa(args.kappa)
    if args.no_plan:
        if kappa is None:
            raise UsageError("--no-plan needs an explicit --kappa")
        c = sine_squared_coastline(pdf, HeuristicConfig(args.y0, kappa, args.f1))
        write_atomic(out / "coastline.csv", coastline_to_csv(c))
        write_atomic(out / "summary.json", _json({"kappa": kappa}))
        return
    rt = round_trip(pdf, args.y0, plan=_plan_from_args(args, pdf), kappa=kappa, k_steps=args.k_steps)
    write_atomic(out / "coastline.csv", coastline_to_csv(rt.coastline))
    write_atomic(out / "plan.jsonl", rt.plan.to_jsonl())
    write_atomic(out / "summary.json", _json(_roundtrip_summary(rt)))


def cmd_roundtrip(args, out: Path):
    if not args.range and args.pdf in PDF_NAMES:
        args.range = "-5:5:0.01"
    pdf = _pdf_from_args(args)
    rt = round_trip(pdf, args.y0, plan=_plan_from_args(args, pdf), kappa=_kappa(args.kappa), k_steps=args.k_steps)
    write_atomic(out / "roundtrip.csv", rt.to_csv())
    write_atomic(out / "coastline.csv", coastline_to_csv(rt.coastline))
    write_atomic(out / "plan.jsonl", rt.plan.to_jsonl())
    summary = _json(_roundtrip_summary(rt))
    write_atomic(out / "summary.json", summary)
    sys.stdout.write(summary)


def cmd_sample(args, out: Path):
    c = load_coastline(args.coastline)
    b = _bounds_for(c, args.y0)
    xs = sample_hits(c, args.y0, b, args.n, args.seed)
    write_atomic(out / "samples.csv", "x\n" + "".join(_fmt(v) + "\n" for v in xs))


def _read_windows(args):
    return corr.ingest_windows(Path(args.input).read_bytes(), args.format)


def _filtered(windows, degree, category):
    if degree is not None:
        windows = [corr.filter_degree(w, degree) for w in windows]
    if category:
        windows = [corr.filter_category(w, category) for w in windows]
    return windows


def _correlate(windows, ref):
    if ref is None:
        return corr.mean_self_correlation(windows)
    return corr.self_correlation(windows, ref)


def cmd_correlate(args, out: Path):
    windows = _filtered(_read_windows(args), args.degree, args.category)
    series = _correlate(windows, args.ref)
    write_atomic(out / "correlation.csv", series.to_csv())


def cmd_fit(args, out: Path):
    series = corr.CorrelationSeries.from_csv(Path(args.input).read_text())
    fit = fit_modcauchy(series, fix_amplitude=not args.free_amplitude)
    text = fit.to_json() + "\n"
    write_atomic(out / "fit.json", text)
    sys.stdout.write(text)


def cmd_synth(args, out: Path):
    spec = corr.SynthSpec(
        n_sources=args.n,
        alpha_mc=args.alpha,
        beta_mc=args.beta,
        window_spacing=args.spacing,
        n_windows=args.windows,
        symmetric=args.symmetric,
    )
    windows = corr.synth_windows(spec, args.seed)
    write_atomic(out / "windows.jsonl", corr.windows_to_jsonl(windows))


# figure pipelines


def fig1(windows, ref, out: Path):
    fits, labels = [], []
    for tag in corr.QUERYABLE[::-1]:
        sub = [corr.filter_category(w, tag) for w in windows]
        if not any(len(w) for w in sub):
            continue
        series = _correlate(sub, ref)
        write_atomic(out / f"fig1_{tag}_correlation.csv", series.to_csv())
        fit = fit_modcauchy(series)
        write_atomic(out / f"fig1_{tag}_fit.json", fit.to_json() + "\n")
        fits.append(fit)
        labels.append(tag)
    write_atomic(out / "fig1_fits.csv", report_to_csv(t_half_report(fits, labels)))
    return fits, labels


def fig2(windows, ref, out: Path, bands=None):
    if bands is None:
        bands = range(corr.max_degree_band(windows) + 1)
    fits, labels = [], []
    for i in bands:
        sub = [corr.filter_degree(w, i) for w in windows]
        try:
            fit = fit_modcauchy(_correlate(sub, ref))
        except CoastlineError:
            continue
        fits.append(fit)
        labels.append(f"band_{i}")
    write_atomic(out / "fig2_thalf.csv", report_to_csv(t_half_report(fits, labels)))
    return fits, labels


def fig4(params: dict, xs: np.ndarray, out: Path, k_steps=200):
    rows = ["label,alpha,beta,kappa,l2"]
    for label, (alpha, beta) in params.items():
        pdf = tabulate(ModCauchy(ModCauchyParams(beta, alpha, (xs[0], xs[-1]))), xs)
        rt = round_trip(pdf, 1.0, k_steps=k_steps)
        write_atomic(out / f"fig4_{label}_coastline.csv", coastline_to_csv(rt.coastline))
        rows.append(",".join([label, _fmt(alpha), _fmt(beta), _fmt(rt.kappa), _fmt(rt.l2)]))
    write_atomic(out / "fig4_summary.csv", "\n".join(rows) + "\n")


def roundtrip_cases():
    """The six comparison densities with their grids and known coastlines (if any)."""
    wide = np.linspace(-5.0, 5.0, 1001)
    return {
        "gaussian": (tabulate(Gaussian(), wide), None),
        "cauchy": (tabulate(StandardCauchy(), wide), None),
        "modcauchy": (tabulate(ModCauchy(ModCauchyParams(1.0, 0.75, (-5.0, 5.0))), wide), None),
        "semicircle": (gencauchy_grid(BUILTINS["semicircle"], 1.0, np.linspace(-0.9, 0.9, 1001)), BUILTINS["semicircle"]),
        "line45": (gencauchy_grid(BUILTINS["line45"], 1.0, wide), BUILTINS["line45"]),
        "line135": (gencauchy_grid(BUILTINS["line135"], 1.0, wide), BUILTINS["line135"]),
    }


def roundtrip_gallery(out: Path, k_steps=200):
    rows = ["name,kappa,l2,segments"]
    results = {}
    for name, (pdf, known) in roundtrip_cases().items():
        plan = plan_segments(pdf, 1.0)
        if known is not None:
            # start each piece on the true curve, as a split coastline would otherwise jump
            plan = plan.with_f1([float(known.f(s.hi if s.flip else s.lo)) for s in plan])
        rt = round_trip(pdf, 1.0, plan=plan, k_steps=k_steps)
        write_atomic(out / f"appB_{name}_pdf.csv", rt.to_csv())
        write_atomic(out / f"appB_{name}_coastline.csv", coastline_to_csv(rt.coastline))
        rows.append(",".join([name, _fmt(rt.kappa), _fmt(rt.l2), str(len(rt.plan))]))
        results[name] = rt
    write_atomic(out / "appB_summary.csv", "\n".join(rows) + "\n")
    return results


def default_fig1_windows(seed: int, n: int):
    specs = [
        corr.SynthSpec(n, FIXTURE_ALPHAS[tag], 1.0, n_windows=41, category=tag)
        for tag in ("benign", "malicious", "unknown")
    ]
    return corr.synth_population(specs, seed)


DEFAULT_BANDS = {0: (0.45, 1.0), 1: (0.6, 0.5), 2: (0.35, 2.0), 3: (0.3, 1.5), 4: (0.5, 3.0), 5: (0.25, 1.2)}


def default_fig2_windows(seed: int, n: int, bands=None):
    bands = bands or DEFAULT_BANDS
    specs = [corr.SynthSpec(n, a, b, n_windows=41, degree_band=i) for i, (a, b) in sorted(bands.items())]
    return corr.synth_population(specs, seed)


def cmd_figure(args, out: Path):
    if args.kind in ("fig1", "fig2"):
        if args.input:
            windows, ref = _read_windows(args), args.ref
        else:
            maker = default_fig1_windows if args.kind == "fig1" else default_fig2_windows
            windows, ref = maker(args.seed, args.n), 0
        (fig1 if args.kind == "fig1" else fig2)(windows, ref, out)
    elif args.kind == "fig4":
        xs = parse_range(args.range or "-5:5:0.01")
        params = {k: (a, 1.0) for k, a in FIXTURE_ALPHAS.items()}
        if args.input:
            params = {r["label"]: (float(r["alpha"]), float(r["beta"])) for r in _read_param_csv(args.input)}
        fig4(params, xs, out, args.k_steps)
    else:
        roundtrip_gallery(out, args.k_steps)


def _read_param_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# wiring


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coastlines", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, y0=True):
        sp.add_argument("--out", default=".", help="output directory")
        if y0:
            sp.add_argument("--y0", type=float, default=1.0, help="lighthouse height")

    def pdf_flags(sp):
        sp.add_argument("--pdf", required=True, help=f"one of {', '.join(PDF_NAMES)} or an x,p CSV path")
        sp.add_argument("--range", help="lo:hi:step grid for named densities")
        sp.add_argument("--kappa", default="auto", help="heuristic constant or 'auto'")
        sp.add_argument("--k-steps", type=int, default=200, help="kappa candidates for auto selection")
        sp.add_argument("--plan", help="segment plan JSONL (default: split at turning points)")
        sp.add_argument("--mc-beta", type=float, default=1.0)
        sp.add_argument("--mc-alpha", type=float, default=0.75)

    sp = sub.add_parser("coastlines", help="list builtin coastlines")
    common(sp)

    sp = sub.add_parser("forward", help="generalized Cauchy density of a coastline")
    common(sp)
    sp.add_argument("--coastline", required=True)
    sp.add_argument("--range")

    sp = sub.add_parser("inverse", help="coastline for a density via the sine-squared heuristic")
    common(sp)
    pdf_flags(sp)
    sp.add_argument("--f1", type=float, default=0.0, help="starting height with --no-plan")
    sp.add_argument("--no-plan", action="store_true", help="single left-to-right pass, no split")

    sp = sub.add_parser("roundtrip", help="density -> coastline -> density report")
    common(sp)
    pdf_flags(sp)

    sp = sub.add_parser("sample", help="Monte Carlo lighthouse hits")
    common(sp)
    sp.add_argument("--coastline", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("correlate", help="self-correlation of source windows")
    common(sp, y0=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    sp.add_argument("--ref", type=int, help="reference t (default: mean over all windows)")
    sp.add_argument("--degree", type=int)
    sp.add_argument("--category", choices=corr.QUERYABLE)

    sp = sub.add_parser("fit", help="fit the modified Cauchy model to a correlation CSV")
    common(sp, y0=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--free-amplitude", action="store_true")

    sp = sub.add_parser("synth", help="synthetic source windows")
    common(sp, y0=False)
    sp.add_argument("--n", type=int, default=100000)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--spacing", type=int, default=1)
    sp.add_argument("--windows", type=int, default=21)
    sp.add_argument("--symmetric", action="store_true")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("figure", help="figure data pipelines")
    common(sp, y0=False)
    sp.add_argument("--kind", choices=("fig1", "fig2", "fig4", "appB"), required=True)
    sp.add_argument("--input", help="windows file (fig1/fig2) or label,alpha,beta CSV (fig4)")
    sp.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    sp.add_argument("--ref", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=100000, help="synthetic sources per group")
    sp.add_argument("--range")
    sp.add_argument("--k-steps", type=int, default=200)
    return p


COMMANDS = {
    "coastlines": cmd_coastlines,
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "roundtrip": cmd_roundtrip,
    "sample": cmd_sample,
    "correlate": cmd_correlate,
    "fit": cmd_fit,
    "synth": cmd_synth,
    "figure": cmd_figure,
}


def _join_ranges(argv):
    # "--range -5:5:0.01" would otherwise read the value as a flag
    argv = list(argv)
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--range" and i + 1 < len(argv) and ":" in argv[i + 1]:
            out.append(f"--range={argv[i + 1]}")
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_join_ranges(argv))
        COMMANDS[args.command](args, Path(args.out))
    except CoastlineError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1 if exc.code != "USAGE" else 2
    except FileNotFoundError as exc:
        print(f"error: MISSING_FILE: {exc.filename}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__.upper()}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
