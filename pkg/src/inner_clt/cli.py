"""Command-line entry point: ``inner-clt {verify,simulate,rate,bound,transfer}``.

Exit status is 0 on success, 1 when a verification fails and 2 for
configuration or I/O problems.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .errors import InnerCLTError
from .experiments import (
    ExperimentConfig,
    clt_experiment,
    load_config,
    rate_fit,
    read_results_csv,
    tail_clt_experiment,
    weak_law_experiment,
)
from .transfer import lindeberg_ratios, read_coefficients_csv, transfer
from .verify import run_all


class UsageError(Exception):
    pass


def _config(path) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def _fmt(x: float) -> str:
    return format(x, ".6e")


def cmd_verify(args) -> int:
    cfg = _config(args.config)
    checks = run_all(cfg.f, seed=cfg.seed % 2**32)
    width = max(len(c.name) for c in checks)
    print(f"{'suite':<9} {'check':<{width}} {'residual':>13} {'tol':>9}  status")
    for c in checks:
        status = "ok" if c.ok else "FAIL"
        print(f"{c.suite:<9} {c.name:<{width}} {c.residual:>13.3e} {c.tol:>9.0e}  {status}")
    failed = [c for c in checks if not c.ok]
    if failed:
        print(f"{len(failed)} check(s) failed", file=sys.stderr)
        return 1
    return 0


def _write_plot(report, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "inner-clt"
    N = report.column("N")
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(N, report.column("ks_sup"), "o-", label="measured sup KS")
    floor = report.metadata.get("noise_floor")
    if floor:
        ax.axhline(floor, color="grey", ls=":", label="noise floor")
    if report.fitted_exponent is not None:
        ax.set_title(f"fitted exponent {report.fitted_exponent:.3f}")
    ax.set_xlabel("N")
    ax.set_ylabel("Cramer-Wold KS discrepancy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    outdir = Path(args.out)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = clt_experiment(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.weak_law:
        report.metadata["weak_law"] = weak_law_experiment(cfg)
    if args.tail:
        report.metadata["tail"] = tail_clt_experiment(cfg)
    csv_path, meta_path = report.write(outdir)
    _write_plot(report, outdir / "ks_vs_N.svg")
    print(f"wrote {csv_path}, {meta_path}, {outdir / 'ks_vs_N.svg'}")
    return 0


def cmd_rate(args) -> int:
    path = Path(args.inp)
    rows = read_results_csv(path)
    samples = None
    meta = path.with_name("metadata.json")
    if meta.exists():
        samples = json.loads(meta.read_text()).get("config", {}).get("samples")
    fit = rate_fit(rows, samples)
    print(f"exponent {fit['exponent']:.6f} +- {fit['stderr']:.6f} ({fit['points']} points)")
    return 0


def cmd_bound(args) -> int:
    cfg = _config(args.config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = clt_experiment(cfg)
    print(f"{'N':>8} {'rhs_bound':>14} {'ks_sup':>14} {'ks/rhs':>10}")
    for r in report.rows:
        print(f"{r['N']:>8d} {_fmt(r['rhs_bound']):>14} {_fmt(r['ks_sup']):>14} "
              f"{r['ks_sup'] / r['rhs_bound']:>10.4f}")
    return 0


def _parse_lambda(text: str) -> complex:
    parts = text.split(",")
    if len(parts) > 2:
        raise UsageError("--lambda expects re,im")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad --lambda value {text!r}") from None
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def cmd_transfer(args) -> int:
    a = read_coefficients_csv(args.coeffs)
    lam = _parse_lambda(args.lam)
    tr = transfer(a, lam)
    print("n,re_b,im_b")
    for n, b in enumerate(tr.values, start=1):
        print(f"{n},{b.real:.17g},{b.imag:.17g}")
    ratios = lindeberg_ratios(a)
    print(f"rho_N = {tr.rho_N!r}")
    print(f"sigma_N = {tr.sigma_N!r}")
    print(f"sigma_N^2 = {tr.sigma2!r}")
    print(f"last_ratio = {ratios['last_ratio']!r}")
    print(f"max_ratio = {ratios['max_ratio']!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inner-clt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity suites")
    v.add_argument("--config")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="Monte Carlo CLT experiment")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--weak-law", action="store_true", help="also run the weak-law check")
    s.add_argument("--tail", action="store_true",
                   help="also run the tail experiment (needs tail_start, truncation)")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("rate", help="fit the log-log decay exponent")
    r.add_argument("--in", dest="inp", required=True)
    r.set_defaults(func=cmd_rate)

    b = sub.add_parser("bound", help="bound vs measured discrepancy")
    b.add_argument("--config")
    b.set_defaults(func=cmd_bound)

    t = sub.add_parser("transfer", help="transfer a coefficient file")
    t.add_argument("--coeffs", required=True)
    t.add_argument("--lambda", dest="lam", required=True)
    t.set_defaults(func=cmd_transfer)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InnerCLTError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
