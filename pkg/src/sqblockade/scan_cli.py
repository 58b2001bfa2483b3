"""Command-line entry point: ``sqblockade {point,scan,g2tau,ep,figure}``.

Exit codes: 0 success, 1 configuration error, 2 at least one grid point failed.
"""
import argparse
import os
import sys
from importlib import resources

import numpy as np

from . import dynamics
from .errors import ConfigError, SqBlockadeError
from .fock import TOL_TRUNC, GaussianParams, state_dsts
from .gaussian_analytics import critical_r0
from .nonclassicality import entanglement_potential, ep_dsts_closed_form, two_mode_budget
from .scan import format_cell, load_config, parse_config, run_point, run_scan

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2

FIGURES = {
    "2": ["fig02a", "fig02b", "fig02c"],
    "3": ["fig03"],
    "4": ["fig04"],
    "5": ["fig05"],
    "6": ["fig06a", "fig06b"],
    "7": ["fig07a", "fig07b"],
    "8": ["fig08a", "fig08b"],
    "9": ["fig09a", "fig09b"],
    "10": ["fig10a", "fig10b", "fig10c"],
    "11": ["fig11a", "fig11b"],
    "12": ["fig12"],
}


def preset_names():
    return sorted(p for names in FIGURES.values() for p in names)


def preset_text(name):
    try:
        return resources.files("sqblockade").joinpath("presets", f"{name}.ini").read_text("utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no preset named {name!r}") from None


def figure_presets(fig_id):
    key = str(fig_id).lower().removeprefix("fig").lstrip("0")
    if key in FIGURES:
        return FIGURES[key]
    name = f"fig{key.zfill(3) if key[-1].isalpha() else key.zfill(2)}"
    if name in preset_names():
        return [name]
    raise ConfigError(f"unknown figure {fig_id!r}; known: {', '.join(sorted(FIGURES, key=int))}")


def _print_report(report, out):
    for k, v in report.items():
        if isinstance(v, dict):
            v = ", ".join(f"{kk}={format_cell(vv)}" for kk, vv in v.items())
        elif isinstance(v, np.ndarray):
            v = f"<{len(v)} values>"
        else:
            v = format_cell(v)
        print(f"{k} = {v}", file=out)


def _write_svg(result, path, column=None):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cfg = result.config
    fig, ax = plt.subplots(figsize=(5, 4))
    if cfg.mode == "tau_curve":
        col = column or "g2_tau"
        other = [a.name for a in cfg.axes]
        keys = sorted({tuple(r.get(n) for n in other) for r in result.rows})
        for key in keys:
            sel = [r for r in result.rows if tuple(r.get(n) for n in other) == key]
            ax.plot([r["tau"] for r in sel], [r.get(col) for r in sel],
                    label=", ".join(f"{n}={v:g}" for n, v in zip(other, key)))
        ax.set_xlabel("tau")
        ax.set_ylabel(col)
        ax.legend(fontsize=7)
    elif len(cfg.axes) == 1 or (len(cfg.axes) == 2 and len(cfg.axes[1].values) <= 8):
        col = column or {"ep_curve": "ep_numeric"}.get(cfg.mode, "g2")
        x = cfg.axes[0]
        groups = cfg.axes[1].values if len(cfg.axes) == 2 else [None]
        for g in groups:
            sel = [r for r in result.rows if g is None or r[cfg.axes[1].name] == g]
            ax.plot([r[x.name] for r in sel], [np.nan if r.get(col) is None else r[col] for r in sel],
                    label=None if g is None else f"{cfg.axes[1].name}={g:g}")
        ax.set_xlabel(x.name)
        ax.set_ylabel(col)
        if len(groups) > 1:
            ax.legend(fontsize=7)
    else:
        col = column or "table2_panel"
        vals = result.column(col)
        if col == "table2_panel":
            data = np.array(["abcdef-".find(v) if v else -1 for v in vals], float)
        else:
            data = np.array([np.nan if v is None else float(v) for v in vals])
        data = data.reshape(cfg.shape[:2])
        x, y = cfg.axes[0], cfg.axes[1]
        mesh = ax.pcolormesh(x.values, y.values, data.T, shading="nearest")
        fig.colorbar(mesh, ax=ax, label=col)
        ax.set_xlabel(x.name)
        ax.set_ylabel(y.name)
    ax.set_title(cfg.title or cfg.mode, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _finish_scan(result, output, svg, svg_column, out):
    if output:
        result.write_csv(output)
        print(f"wrote {len(result.rows)} rows to {output}", file=out)
    else:
        out.write(result.to_csv())
    if svg:
        _write_svg(result, svg, svg_column)
    if result.n_failed:
        print(f"{result.n_failed} point(s) failed; see the error column", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_scan(args, out):
    cfg = load_config(args.config, args.set)
    if args.points:
        cfg = cfg.with_points(args.points)
    if cfg.mode == "point_eval":
        report = run_point(cfg, tau=args.tau)
        _print_report(report, out)
        return EXIT_FAILED if report["error"] else EXIT_OK
    result = run_scan(cfg, workers=args.workers)
    return _finish_scan(result, args.output or cfg.output, args.svg, args.svg_column, out)


def _point_config(args):
    if args.config:
        return load_config(args.config, args.set)
    if args.model == "reservoir":
        keys = {"delta": args.delta, "epsilon": args.epsilon, "gamma": args.gamma,
                "n_res": args.n_res, "m_phase": args.m_phase}
        if args.m_frac is not None and args.m_res is not None:
            raise ConfigError("give --m-res or --m-frac, not both")
        if args.m_frac is not None:
            keys["m_frac"] = args.m_frac
        else:
            keys["m_res"] = args.m_res or 0.0
    else:
        keys = {"alpha": args.alpha, "phi": args.phi, "r": args.r, "theta": args.theta,
                "n_th": args.n_th}
    lines = ["[scan]", "mode = point_eval", f"model = {args.model}", "[fixed]"]
    lines += [f"{k} = {v!r}" for k, v in keys.items()]
    lines += ["[truncation]", f"dim = {args.dim if args.dim else 'auto'}", f"tol = {args.tol!r}"]
    lines += ["[tau]", f"tau_max = {args.tau_max!r}", f"points = {args.tau_points}"]
    return parse_config("\n".join(lines), args.set)


def cmd_point(args, out):
    cfg = _point_config(args)
    report = run_point(cfg, tau=args.tau)
    _print_report(report, out)
    return EXIT_FAILED if report["error"] else EXIT_OK


def cmd_g2tau(args, out):
    if args.m_frac is not None and args.m_res is not None:
        raise ConfigError("give --m-res or --m-frac, not both")
    m = f"m_frac = {args.m_frac!r}" if args.m_frac is not None else f"m_res = {(args.m_res or 0.0)!r}"
    # epsilon goes on a one-value axis so the CSV layout matches tau_curve scans
    lines = ["[scan]", "mode = tau_curve",
             "[axis.epsilon]", f"values = {args.epsilon!r}",
             "[fixed]", f"delta = {args.delta!r}", f"gamma = {args.gamma!r}",
             f"n_res = {args.n_res!r}", f"m_phase = {args.m_phase!r}", m,
             "[truncation]", f"dim = {args.dim if args.dim else 'auto'}",
             "[tau]", f"tau_max = {args.tau_max!r}", f"points = {args.tau_points}"]
    cfg = parse_config("\n".join(lines), args.set)
    result = run_scan(cfg, workers=1)
    return _finish_scan(result, args.output, args.svg, None, out)


def cmd_ep(args, out):
    p = GaussianParams(alpha_mag=args.alpha, alpha_phase=args.phi, sq_mag=args.r,
                       sq_phase=args.theta, n_th=args.n_th)
    if args.dim:
        d, tol = args.dim, args.tol
    else:
        d, tol = two_mode_budget(p, min(TOL_TRUNC, args.tol), max(args.max_tol or 0, args.tol))
    rho = state_dsts(d, p, tol)
    ep = entanglement_potential(rho, tol)
    print(f"ep_numeric = {format_cell(ep)}", file=out)
    print(f"ep_closed = {format_cell(ep_dsts_closed_form(args.r, args.n_th))}", file=out)
    print(f"r0 = {format_cell(critical_r0(args.n_th))}", file=out)
    print(f"dim = {rho.dim}", file=out)
    print(f"tol = {format_cell(tol)}", file=out)
    print(f"trace_loss = {format_cell(rho.trace_loss)}", file=out)
    return EXIT_OK


def cmd_figure(args, out):
    if args.id is None:
        if not args.list:
            raise ConfigError("figure needs an id (or --list)")
        names = sorted(preset_names())
    else:
        names = figure_presets(args.id)
    if args.list:
        for n in names:
            print(n, file=out)
        return EXIT_OK
    os.makedirs(args.outdir, exist_ok=True)
    code = EXIT_OK
    for name in names:
        cfg = parse_config(preset_text(name), args.set)
        if args.points:
            cfg = cfg.with_points(args.points)
        result = run_scan(cfg, workers=args.workers)
        csv_path = os.path.join(args.outdir, f"{name}.csv")
        svg_path = os.path.join(args.outdir, f"{name}.svg") if args.svg else None
        code = max(code, _finish_scan(result, csv_path, svg_path, None, out))
    return code


def _add_reservoir_args(p):
    p.add_argument("--delta", type=float, default=0.0, help="detuning (units of gamma)")
    p.add_argument("--epsilon", type=float, default=0.0, help="drive strength")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n-res", type=float, default=0.0, help="reservoir mean photon number")
    p.add_argument("--m-res", type=float, default=None, help="|M|")
    p.add_argument("--m-frac", type=float, default=None, help="|M| as a fraction of sqrt(n(n+1))")
    p.add_argument("--m-phase", type=float, default=0.0, help="theta in M = |M| exp(-i theta)")


def _add_gaussian_args(p):
    p.add_argument("--alpha", type=float, default=0.0, help="displacement amplitude")
    p.add_argument("--phi", type=float, default=0.0, help="displacement phase")
    p.add_argument("--r", type=float, default=0.0, help="squeezing amplitude")
    p.add_argument("--theta", type=float, default=0.0, help="squeezing phase")
    p.add_argument("--n-th", type=float, default=0.0, help="thermal photons")


def build_parser():
    ap = argparse.ArgumentParser(prog="sqblockade",
                                 description="Photon blockade with squeezed light: sweeps and checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    set_help = "override a config entry, e.g. --set fixed.n_res=0.02 (repeatable)"

    p = sub.add_parser("point", help="evaluate one parameter point")
    p.add_argument("--model", choices=("reservoir", "gaussian"), default="reservoir")
    p.add_argument("--config", help="point_eval INI file (other parameter flags are ignored)")
    _add_reservoir_args(p)
    _add_gaussian_args(p)
    p.add_argument("--dim", type=int, default=0, help="Fock truncation (0 = automatic)")
    p.add_argument("--tol", type=float, default=TOL_TRUNC)
    p.add_argument("--tau", action="store_true", help="also compute g2(tau)")
    p.add_argument("--tau-max", type=float, default=dynamics.TAU_MAX)
    p.add_argument("--tau-points", type=int, default=dynamics.TAU_POINTS)
    p.add_argument("--set", action="append", default=[], help=set_help)
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("scan", help="run a sweep from an INI config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="CSV path (default: [scan] output, else stdout)")
    p.add_argument("--set", action="append", default=[], help=set_help)
    p.add_argument("--points", type=int, help="resample every min/max axis to this many points")
    p.add_argument("--workers", type=int, help="worker processes (default: env or CPU count)")
    p.add_argument("--svg", help="also write an SVG plot to this path")
    p.add_argument("--svg-column", help="column to plot")
    p.add_argument("--tau", action="store_true", help="point_eval: include g2(tau)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("g2tau", help="two-time correlation g2(tau) for one reservoir point")
    _add_reservoir_args(p)
    p.add_argument("--dim", type=int, default=0)
    p.add_argument("--tau-max", type=float, default=dynamics.TAU_MAX)
    p.add_argument("--tau-points", type=int, default=dynamics.TAU_POINTS)
    p.add_argument("-o", "--output")
    p.add_argument("--svg")
    p.add_argument("--set", action="append", default=[], help=set_help)
    p.set_defaults(func=cmd_g2tau)

    p = sub.add_parser("ep", help="entanglement potential of a displaced squeezed thermal state")
    _add_gaussian_args(p)
    p.add_argument("--dim", type=int, default=0)
    p.add_argument("--tol", type=float, default=TOL_TRUNC, help="truncation budget")
    p.add_argument("--max-tol", type=float, default=None,
                   help="loosest budget allowed when --tol would exceed the two-mode cap")
    p.set_defaults(func=cmd_ep)

    p = sub.add_parser("figure", help="regenerate the data behind a figure from its preset")
    p.add_argument("id", nargs="?", help="figure number (2-12) or a preset name such as fig09b")
    p.add_argument("-o", "--outdir", default=".")
    p.add_argument("--points", type=int, help="resample axes (presets default to 200)")
    p.add_argument("--workers", type=int)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--list", action="store_true", help="only list the presets")
    p.add_argument("--set", action="append", default=[], help=set_help)
    p.set_defaults(func=cmd_figure)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse reports bad flags with status 2; those are configuration errors here
        return EXIT_OK if not e.code else EXIT_CONFIG
    try:
        return args.func(args, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SqBlockadeError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
