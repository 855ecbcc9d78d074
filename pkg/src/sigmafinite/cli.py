"""Command line: regenerate every figure and headline number as CSV.

Each run writes its CSV to ``--out`` plus ``<out>.manifest.json`` recording
the subcommand and every resolved parameter; ``--manifest FILE`` replays a
run from such a file.  Summaries that do not fit a table go to
``<out>.diagnostics.json``.  Exit status: 0 on success, 1 on a numerical
failure, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import gibbsdemo, igmrf, qvague, stone
from .exceptions import SigmaFiniteError, UnknownCase
from .numerics import Domain1D

log = logging.getLogger("sigmafinite")

QV_INDICES = (10, 100, 1000, 10000)
QV_CASES = ("hM", "gauss_flat", "lindley_prior")
PLOTTABLE = ("stone-figure", "gibbs")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sidecar(out: Path, kind: str) -> Path:
    return out.with_name(out.name + f".{kind}.json")


def _prior_theta(name: str):
    if name == "exp":
        return stone.exponential_prior(), False
    if name == "inverse":
        return stone.inverse_prior(), True
    raise UnknownCase(f"unknown prior {name!r}")


def cmd_stone_figure(z=1.0, M=500.0, x=(1.0, 0.001), prior="exp"):
    """Truncated-prior posteriors at each ``x`` with the flat-``h`` and ``1/phi`` curves."""
    pi, _ = _prior_theta(prior)
    fig = stone.stone_figure(z, M, tuple(x), pi)
    header = ["theta"] + [f"dens_xM_x{i}" for i in range(1, len(x) + 1)] + ["dens_cross", "dens_DD"]
    cols = [fig.theta] + [fig.truncated[float(v)] for v in x] + [fig.cross, fig.dd]
    summary = {
        "sup_distance_to_cross": {repr(float(v)): float(np.max(np.abs(fig.truncated[float(v)] - fig.cross))) for v in x},
        "sup_distance_DD_to_cross": float(np.max(np.abs(fig.dd - fig.cross))),
    }
    return header, list(zip(*cols)), summary


def cmd_gibbs(y=0.0, iters=10_000, seed=0, prior="flat", tau2=None, kappa2=None):
    """Gibbs trace plus drift and KS diagnostics."""
    if prior == "flat":
        gp = None
    elif prior == "gaussian":
        if tau2 is None or kappa2 is None:
            raise ValueError("--prior gaussian needs --tau2 and --kappa2")
        gp = gibbsdemo.GaussianPrior(tau2, kappa2)
    else:
        raise UnknownCase(f"unknown prior {prior!r}")
    trace = gibbsdemo.run_gibbs(gibbsdemo.GibbsConfig(y=y, n_iter=iters, seed=seed, prior=gp))
    ks = gibbsdemo.embedded_delta_test(trace)
    summary = {"ks_statistic": ks.statistic, "ks_pvalue": ks.pvalue, "ks_passed": ks.passed}
    window = min(50, iters // 4)
    if window >= 2:
        d = gibbsdemo.drift_diagnostic(trace, window)
        summary.update(drift_window=window, drift_slope=d.slope, drift_flagged=d.flagged)
    rows = ((t, a, b, c) for t, (a, b, c) in enumerate(zip(trace.theta1, trace.theta2, trace.delta), start=1))
    return ["t", "theta1", "theta2", "delta"], list(rows), summary


def cmd_lindley(x=(0.0, 1.0, 2.0), n=(1.0, 10.0, 100.0, 1000.0, 10000.0)):
    """Posterior mass at 0 under the proper mixture priors and under the improper limit."""
    rows = []
    for xv in x:
        improper = float(qvague.lindley_posterior_improper(xv))
        for nv in n:
            rows.append((float(xv), float(nv), float(qvague.lindley_posterior_proper(xv, nv)), improper))
    return ["x", "n", "posterior_proper", "posterior_improper_limit"], rows, {}


def _qv_runs(case: str):
    if case == "hM":
        fam = qvague.TestFunctionFamily.half_line()
        seq = lambda M: qvague.MixedMeasure.from_kernel(stone.truncated_h(M))  # noqa: E731
        return fam, seq, [qvague.lebesgue_measure(Domain1D.half_line())]
    if case == "gauss_flat":
        fam = qvague.TestFunctionFamily.real_line()
        seq = lambda n: qvague.MixedMeasure.from_kernel(qvague.normal_kernel(n))  # noqa: E731
        return fam, seq, [qvague.lebesgue_measure()]
    if case == "lindley_prior":
        fam = qvague.TestFunctionFamily.real_line()
        leb = qvague.lebesgue_measure().ac_part
        naive = qvague.MixedMeasure(((0.0, 0.5),), leb, "1/2 delta_0 + Lebesgue")
        return fam, qvague.lindley_prior, [qvague.dirac(0.0), naive]
    raise UnknownCase(f"unknown case {case!r}; choose from {', '.join(QV_CASES)}")


def cmd_qvague_demo(case="hM"):
    """Worst bump error and scale at each index, one block per candidate limit."""
    fam, seq, candidates = _qv_runs(case)
    rows, verdicts = [], {}
    for cand in candidates:
        v = qvague.check_qvague(seq, cand, fam, QV_INDICES)
        for idx, a, err in zip(v.indices, v.scale_sequence, v.errors):
            rows.append((cand.label, idx, a, err))
        verdicts[cand.label] = {"converges": v.converges, "worst_error": v.worst_error, "reference": v.reference}
    return ["candidate", "index", "scale", "worst_error"], rows, {"case": case, "verdicts": verdicts}


def cmd_igmrf(n=100, kappa=1.0, mu=0.0, samples=10, seed=0):
    """Long-format samples given the mean, with a quadratic-form summary."""
    X = igmrf.sample_given_mean(n, kappa, mu, seed=seed, size=samples)
    q = igmrf.quad_form(X)
    summary = {
        "max_abs_mean_minus_mu": float(np.max(np.abs(X.mean(axis=1) - mu))),
        "mean_quad_form": float(q.mean()),
        "expected_quad_form": (n - 1) / kappa,
    }
    rows = ((s, i, X[s, i]) for s in range(X.shape[0]) for i in range(X.shape[1]))
    return ["sample_id", "i", "x_i"], list(rows), summary


COMMANDS = {
    "stone-figure": (cmd_stone_figure, ("z", "M", "x", "prior")),
    "gibbs": (cmd_gibbs, ("y", "iters", "seed", "prior", "tau2", "kappa2")),
    "lindley": (cmd_lindley, ("x", "n")),
    "qvague-demo": (cmd_qvague_demo, ("case",)),
    "igmrf": (cmd_igmrf, ("n", "kappa", "mu", "samples", "seed")),
}


def _plot(subcommand: str, header, rows, out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.array(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    if subcommand == "stone-figure":
        for j, name in enumerate(header[1:], start=1):
            ax.plot(data[:, 0], data[:, j], label=name)
        ax.set_xlabel("theta")
        ax.legend()
    else:
        for j, name in enumerate(header[1:], start=1):
            ax.plot(data[:, 0], data[:, j], lw=0.5, label=name)
        ax.set_xlabel("sweep")
        ax.legend()
    fig.savefig(out.with_suffix(".png"), dpi=120, bbox_inches="tight")
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigmafinite", description=__doc__.splitlines()[0])
    p.add_argument("--manifest", type=Path, help="replay the run recorded in this manifest file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand")

    def common(sp, default_out):
        sp.add_argument("--out", type=Path, default=Path(default_out), help=f"CSV output path (default {default_out})")
        sp.add_argument("--plot", action="store_true", help="also render a PNG next to the CSV (needs matplotlib)")

    s = sub.add_parser("stone-figure", help="posterior curves of the marginalization paradox example")
    s.add_argument("--z", type=float, default=1.0, help="observed z (default 1)")
    s.add_argument("--M", type=float, default=500.0, help="truncation point of h (default 500)")
    s.add_argument("--x", type=float, nargs="+", default=[1.0, 0.001], help="x values (default 1 0.001)")
    s.add_argument("--prior", choices=("exp", "inverse"), default="exp", help="pi(theta): exp(-theta) or 1/theta")
    common(s, "stone_figure.csv")

    s = sub.add_parser("gibbs", help="Gibbs chain for y ~ N(theta1 + theta2, 1)")
    s.add_argument("--y", type=float, default=0.0)
    s.add_argument("--iters", type=int, default=10_000, help="sweeps (default 10000, an artifact choice)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--prior", choices=("flat", "gaussian"), default="flat")
    s.add_argument("--tau2", type=float, default=None, help="prior variance of theta1 (gaussian prior)")
    s.add_argument("--kappa2", type=float, default=None, help="prior variance of theta2 (gaussian prior)")
    common(s, "gibbs.csv")

    s = sub.add_parser("lindley", help="posterior mass at 0 under the point-mass mixture prior")
    s.add_argument("--x", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    s.add_argument("--n", type=float, nargs="+", default=[1.0, 10.0, 100.0, 1000.0, 10000.0], help="prior sd values")
    common(s, "lindley.csv")

    s = sub.add_parser("qvague-demo", help="q-vague convergence battery")
    s.add_argument("--case", choices=QV_CASES, default="hM")
    common(s, "qvague.csv")

    s = sub.add_parser("igmrf", help="RW1 samples given the mean")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--kappa", type=float, default=1.0)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    common(s, "igmrf.csv")
    return p


def _resolve(args, parser):
    """Return ``(subcommand, params, out, plot)`` from the flags or a manifest."""
    if args.manifest is not None:
        try:
            m = json.loads(args.manifest.read_text(encoding="utf-8"))
            subcommand, params = m["subcommand"], dict(m["parameters"])
        except (OSError, ValueError, KeyError) as exc:
            parser.error(f"cannot read manifest {args.manifest}: {exc}")
        if subcommand not in COMMANDS:
            parser.error(f"manifest names unknown subcommand {subcommand!r}")
        out = getattr(args, "out", None) if args.subcommand == subcommand else None
        return subcommand, params, Path(out or m["output_path"]), bool(m.get("plot", False))
    if args.subcommand is None:
        parser.error("a subcommand (or --manifest) is required")
    _, names = COMMANDS[args.subcommand]
    params = {k: getattr(args, k) for k in names}
    return args.subcommand, params, args.out, args.plot


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    subcommand, params, out, plot = _resolve(args, parser)
    if plot and subcommand not in PLOTTABLE:
        parser.error(f"--plot is not available for {subcommand}")
    fn, _ = COMMANDS[subcommand]
    try:
        header, rows, summary = fn(**params)
    except ValueError as exc:
        print(f"sigmafinite: error: {exc}", file=sys.stderr)
        return 2
    except SigmaFiniteError as exc:
        print(f"sigmafinite: numerical failure: {exc}", file=sys.stderr)
        return 1
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, header, rows)
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "output_path": str(out),
        "seed": params.get("seed"),
        "plot": plot,
    }
    write_json(_sidecar(out, "manifest"), manifest)
    if summary:
        write_json(_sidecar(out, "diagnostics"), summary)
    if plot:
        try:
            _plot(subcommand, header, rows, out)
        except ImportError:
            print("sigmafinite: error: --plot needs matplotlib", file=sys.stderr)
            return 2
    if subcommand == "qvague-demo":
        for label, v in summary["verdicts"].items():
            print(f"{label}: converges={str(v['converges']).lower()} worst_error={v['worst_error']:.3g}")
    log.info("wrote %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
