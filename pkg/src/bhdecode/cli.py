"""Command-line entry point: ``bhdecode {sweep,fit,metrics,oracle-check,resume}``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .anneal import AnnealConfig, SNAPSHOT_FORMAT, load_checkpoint, resume_train

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sweep_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sweep configuration (overrides --config and --profile)")
    g.add_argument("--profile", choices=sorted(harness.PROFILES), help="preset sizes (default desk)")
    g.add_argument("--config", type=Path, help="JSON file mirroring SweepConfig")
    g.add_argument("--n", type=int)
    g.add_argument("--na", type=int, dest="n_a")
    g.add_argument("--nc", type=int, dest="n_c")
    g.add_argument("--t-min", type=int)
    g.add_argument("--t-max", type=int)
    g.add_argument("--t-step", type=int, help="spacing of the t grid (default 1)")
    g.add_argument("--realizations", type=int)
    g.add_argument("--beta", type=float)
    g.add_argument("--tmax-factor", type=float)
    g.add_argument("--gates-per-layer", type=int)
    g.add_argument("--ansatz", choices=["clifford", "doped"])
    g.add_argument("--acceptance", choices=["standard", "literal"])
    g.add_argument("--teleport", action="store_true", default=None)
    g.add_argument("--psi", choices=["haar", "zero"], dest="psi_source")
    g.add_argument("--seed", type=int)
    g.add_argument("--jobs", type=int)
    g.add_argument("--no-timing", action="store_true", help="leave wall_s empty (byte-reproducible CSV)")


def build_config(args) -> harness.SweepConfig:
    base = dict(harness.PROFILES[args.profile or "desk"])
    if args.config is not None:
        try:
            base.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    anneal = base.pop("anneal", {})
    if isinstance(anneal, AnnealConfig):
        anneal = anneal.to_dict()
    for key in ("n", "n_a", "n_c", "realizations", "gates_per_layer", "teleport", "psi_source", "seed", "jobs"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    if args.t_min is not None or args.t_max is not None or args.t_step is not None:
        ts = base.get("t_values", (0,))
        lo = args.t_min if args.t_min is not None else min(ts)
        hi = args.t_max if args.t_max is not None else max(ts)
        base["t_values"] = tuple(range(lo, hi + 1, args.t_step or 1))
    if args.no_timing:
        base["timing"] = False
    for flag, key in (("beta", "beta"), ("tmax_factor", "t_max_factor"), ("ansatz", "ansatz"), ("acceptance", "acceptance")):
        val = getattr(args, flag)
        if val is not None:
            anneal[key] = val
    try:
        return harness.SweepConfig(**base, anneal=AnnealConfig(**anneal))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _report(table: harness.RunTable, out: Path, fmt: str, plot: bool) -> None:
    path = harness.export_table(table, out / f"runs.{fmt}", fmt)
    print(f"wrote {path}")
    stats = table.stats()
    print("t  mean_F  stderr  count")
    for t, m, s, k in stats:
        print(f"{t:<2d} {m:.4f}  {s:.4f}  {k}")
    fit = None
    if len(stats) >= 3:
        try:
            fit = harness.fit_table(table)
        except harness.FitError as exc:
            print(f"fit failed: {exc}", file=sys.stderr)
    if fit is not None:
        (out / "fit.json").write_text(json.dumps(fit.to_dict(), indent=1) + "\n")
        print(f"fit: a={fit.a:.4f} alpha={fit.alpha:.4f} b={fit.b:.4f} (a+b={fit.a_plus_b:.4f})")
    for p in harness.emit_plot_data(table, fit, out, figure=plot).values():
        print(f"wrote {p}")
    if table.config is not None and table.config.teleport and table.stats("teleport_fidelity"):
        fit_psi = None
        if len(table.stats("teleport_fidelity")) >= 3:
            fit_psi = harness.fit_table(table, "teleport_fidelity")
        harness.emit_plot_data(table, fit_psi, out, stem="teleport", column="teleport_fidelity", figure=plot)


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    out = args.out or Path("sweep_out")
    table = harness.run_sweep(cfg, out)
    expected = len(cfg.t_values) * cfg.realizations
    _report(table, out, args.format, not args.no_plot)
    if len(table) < expected:
        print(f"{expected - len(table)} runs failed; see {out / harness.FAILURES_FILE}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_resume(args) -> int:
    path = Path(args.path)
    if path.is_file():
        snap = load_checkpoint(path)
        if snap.get("format") != SNAPSHOT_FORMAT:
            raise UsageError(f"{path} is not an annealing checkpoint")
        res = resume_train(snap, checkpoint_path=path)
        print(json.dumps(res.summary(), indent=1))
        return EXIT_OK
    if not path.is_dir():
        raise UsageError(f"{path} does not exist")
    table = harness.resume_sweep(path, jobs=args.jobs)
    _report(table, args.out or path, args.format, not args.no_plot)
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        table = harness.import_table(args.table)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read {args.table}: {exc}") from exc
    fit = harness.fit_table(table, args.column)
    d = fit.to_dict()
    print(json.dumps({k: d[k] for k in ("a", "alpha", "b", "a_plus_b", "residual_norm", "degenerate")}, indent=1))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "fit.json").write_text(json.dumps(d, indent=1) + "\n")
        harness.emit_plot_data(table, fit, args.out, column=args.column, figure=not args.no_plot)
    return EXIT_OK


def cmd_metrics(args) -> int:
    from .circuit import sample_doped_circuit, synthesize_dense
    from .metrics import (
        Partition,
        delta_omega_estimate,
        fluctuation_decay_ratio,
        omega_exact,
        predicted_fluctuation,
        scrambling_plateau,
    )

    try:
        part = Partition(args.n, args.n_a, args.n_c)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = np.random.default_rng(args.seed)
    if args.kind == "omega":
        vals = [omega_exact(synthesize_dense(sample_doped_circuit(args.n, args.t, rng)), part) for _ in range(args.samples)]
        print(json.dumps({"t": args.t, "omega_mean": float(np.mean(vals)), "omega_std": float(np.std(vals)),
                          "plateau": scrambling_plateau(part)}, indent=1))
        return EXIT_OK
    ts = list(range(args.t_min, args.t_max + 1))
    rows = []
    for t in ts:
        est = delta_omega_estimate(t, args.n, part, args.samples, rng)
        rows.append((t, est.mean, est.variance, est.se_variance, predicted_fluctuation(part, t)))
        print(f"t={t} mean={est.mean:.6g} var={est.variance:.4g} +- {est.se_variance:.2g} "
              f"predicted={rows[-1][-1]:.4g}")
    ratio, _ = fluctuation_decay_ratio(ts, [r[2] for r in rows])
    print(f"decay ratio per T gate: {ratio:.4f}")
    if args.out is not None:
        from .plotting import plot_fluctuations

        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "fluctuations.csv", "w") as fh:
            fh.write("t,omega_mean,variance,variance_se,predicted\n")
            for r in rows:
                fh.write(",".join(repr(float(x)) if i else str(x) for i, x in enumerate(r)) + "\n")
        if not args.no_plot:
            plot_fluctuations(ts, [r[2] for r in rows], [r[4] for r in rows], args.out / "fluctuations.png")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .oracle import cross_check

    res = cross_check(args.pairs, np.random.default_rng(args.seed))
    print(f"pairs={res.pairs} max|F-F_oracle|={res.max_fidelity_error:.3e} "
          f"max|F_psi-F_psi_oracle|={res.max_teleport_error:.3e}")
    ok = max(res.max_fidelity_error, res.max_teleport_error) <= args.tol
    print("PASS" if ok else f"FAIL (tolerance {args.tol:g}); worst cases {res.worst}")
    return EXIT_OK if ok else EXIT_RUNTIME


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bhdecode", description="Learn black-hole decoders for t-doped Clifford scramblers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="train decoders over a t range and fit the decay")
    _sweep_flags(s)
    s.add_argument("--out", type=Path, help="output directory (default ./sweep_out)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("resume", help="continue a sweep directory or an annealing checkpoint")
    r.add_argument("path")
    r.add_argument("--jobs", type=int)
    r.add_argument("--out", type=Path)
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    r.add_argument("--no-plot", action="store_true")
    r.set_defaults(func=cmd_resume)

    f = sub.add_parser("fit", help="fit a exp(-alpha t) + b to a run table")
    f.add_argument("table", type=Path)
    f.add_argument("--column", default="final_fidelity", choices=["final_fidelity", "teleport_fidelity"])
    f.add_argument("--out", type=Path)
    f.add_argument("--no-plot", action="store_true")
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("metrics", help="Omega(U) statistics and the fluctuation law")
    m.add_argument("kind", choices=["omega", "fluctuations"])
    m.add_argument("--n", type=int, default=6)
    m.add_argument("--na", type=int, dest="n_a", default=1)
    m.add_argument("--nc", type=int, dest="n_c", default=1)
    m.add_argument("--t", type=int, default=0)
    m.add_argument("--t-min", type=int, default=0)
    m.add_argument("--t-max", type=int, default=6)
    m.add_argument("--samples", type=int, default=300)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", type=Path)
    m.add_argument("--no-plot", action="store_true")
    m.set_defaults(func=cmd_metrics)

    o = sub.add_parser("oracle-check", help="closed-form fidelities against the statevector oracle")
    o.add_argument("--pairs", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--tol", type=float, default=1e-9)
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bhdecode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"bhdecode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
