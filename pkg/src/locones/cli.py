"""Command-line interface.

Subcommands: params, classify, orbit, crossings, volumes, stability,
portrait, sweep.  Exit codes: 0 success, 2 invalid domain input, 1 numerical
failure.  Option values come from flags, then from ``--config FILE``
(``key = value`` lines), then from built-in defaults.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

from . import __version__
from .errors import LomseDomainError, NumericalError
from .lomse import LomseParams, hopf_partners, link_volume_argmax, validate_lomse
from .orbit import (
    OrbitTerminal,
    detect_crossings,
    launch_unstable_orbit,
    orbit_to_graph,
    rescaled_graphs,
    write_crossings_csv,
    write_curve_csv,
    write_orbit_csv,
)
from .phase import ConeType, FixedPointKind, classify_fixed_points
from .quotient import QuotientMetric, cone_deficit, cone_volume, jacobi_stability, volume_monotonicity

# Convergence threshold used when crossings are wanted: spirals at P can
# shrink by ~1e-10 per half turn, so the default 1e-8 would hide them.
DEEP_CONVERGE_TOL = 1e-60
VOLUME_TOL = 1e-13


@dataclass
class RunConfig:
    n: int | None = None
    p: int | None = None
    k: int | None = None
    lambda_sq: float | None = None
    eps: float = 1e-6
    tol: float = 1e-10
    t_max: float = 200.0
    converge_tol: float | None = None
    max_events: int | None = None
    format: str = "csv"
    out: str | None = None
    figure: str | None = None

    def validate(self) -> None:
        if self.n is None or self.p is None:
            raise LomseDomainError("both -n and -p are required")
        if (self.k is None) == (self.lambda_sq is None):
            raise LomseDomainError("give exactly one of -k and --lambda-sq")
        if not 1e-14 <= self.tol <= 1e-4:
            raise LomseDomainError(f"--tol must lie in [1e-14, 1e-4], got {self.tol}")
        if self.format not in ("csv", "json"):
            raise LomseDomainError(f"--format must be csv or json, got {self.format}")

    def lomse(self) -> LomseParams:
        self.validate()
        if self.k is not None:
            return LomseParams.from_npk(self.n, self.p, self.k)
        return LomseParams.from_lambda(self.n, self.p, self.lambda_sq)


_CASTS = {"n": int, "p": int, "k": int, "lambda_sq": float, "eps": float, "tol": float,
          "t_max": float, "converge_tol": float, "max_events": int, "format": str,
          "out": str, "figure": str}


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise LomseDomainError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in _CASTS:
                raise LomseDomainError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CASTS[key](value)
            except ValueError:
                raise LomseDomainError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def build_config(args: argparse.Namespace, **overrides) -> RunConfig:
    """Merge defaults < overrides < config file < flags."""
    cfg = RunConfig(**overrides)
    layered = read_config_file(args.config) if getattr(args, "config", None) else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
        elif f.name in layered:
            setattr(cfg, f.name, layered[f.name])
    return cfg


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(obj, path) -> None:
    with _output(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit_rows(header, rows, path) -> None:
    with _output(path) as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def cmd_params(args) -> int:
    cfg = build_config(args)
    P = cfg.lomse()
    if P.k is not None:
        for w in validate_lomse(P.n, P.p, P.k):
            _warn(w)
    report = {
        "n": P.n,
        "p": P.p,
        "k": P.k,
        "lambda_sq": P.lambda_sq,
        "cos2_theta": P.cos2_theta,
        "tan_theta": P.phi0,
        "sigma0": P.sigma0,
        "alpha_max": link_volume_argmax(P),
    }
    if cfg.format == "json":
        _emit_json(report, cfg.out)
    else:
        _emit_rows(["quantity", "value"], [(key, "" if v is None else v) for key, v in report.items()], cfg.out)
    return 0


def _triples(ns, ps, ks, hopf: bool):
    for n in ns:
        pairs = hopf_partners(n) if hopf else [p for p in ps if 1 <= p < n]
        for p, k in itertools.product(pairs, ks):
            yield n, p, k


def classify_row(n: int, p: int, k: int) -> dict:
    P = LomseParams.from_npk(n, p, k)
    _, cone = classify_fixed_points(P)
    if cone.kind is FixedPointKind.DEGENERATE:
        kind = "Degenerate"
    else:
        kind = (ConeType.TYPE_I if cone.kind is FixedPointKind.STABLE_NODE else ConeType.TYPE_II).value
    return {"n": n, "p": p, "k": k, "lambda_sq": P.lambda_sq, "phi0": P.phi0,
            "discriminant": cone.discriminant, "type": kind}


CLASSIFY_COLUMNS = ["n", "p", "k", "lambda_sq", "phi0", "discriminant", "type"]


def cmd_classify(args) -> int:
    rows = [classify_row(*t) for t in _triples(args.n or [], args.p or [], args.k or [], args.hopf)]
    if args.format == "json":
        _emit_json(rows, args.out)
    else:
        _emit_rows(CLASSIFY_COLUMNS, [[r[c] for c in CLASSIFY_COLUMNS] for r in rows], args.out)
    return 0


def _orbit(cfg: RunConfig, P: LomseParams, converge_tol: float):
    orbit = launch_unstable_orbit(P, eps=cfg.eps, tol=cfg.tol, t_max=cfg.t_max, converge_tol=converge_tol)
    if orbit.terminal is not OrbitTerminal.CONVERGED_TO_P:
        raise NumericalError(f"orbit did not converge to P: {orbit.terminal.value}")
    return orbit


def cmd_orbit(args) -> int:
    cfg = build_config(args)
    P = cfg.lomse()
    orbit = launch_unstable_orbit(P, eps=cfg.eps, tol=cfg.tol, t_max=cfg.t_max,
                                  converge_tol=cfg.converge_tol or 1e-8)
    if orbit.terminal is OrbitTerminal.DIVERGED:
        raise NumericalError("orbit diverged")
    if cfg.format == "json":
        _emit_json({
            "params": P.to_dict(), "terminal": orbit.terminal.value, "epsilon": orbit.launch_epsilon,
            "tol": orbit.tol, "t": orbit.t.tolist(), "phi": orbit.phi.tolist(), "psi": orbit.psi.tolist(),
        }, cfg.out)
    else:
        with _output(cfg.out) as fh:
            if args.curve:
                write_curve_csv(orbit_to_graph(orbit), fh)
            else:
                write_orbit_csv(orbit, fh)
    if cfg.figure:
        from .plotting import figure_style, phase_portrait, save_svg

        with figure_style():
            ax = phase_portrait(P, orbit)
            save_svg(ax.figure, cfg.figure)
    return 0


def cmd_crossings(args) -> int:
    cfg = build_config(args)
    P = cfg.lomse()
    orbit = _orbit(cfg, P, cfg.converge_tol or DEEP_CONVERGE_TOL)
    events = detect_crossings(orbit, cfg.max_events if cfg.max_events is not None else 50)
    print(f"resolved {len(events)} crossing(s) of phi = phi0", file=sys.stderr)
    if cfg.format == "json":
        _emit_json([{"i": e.index, "t_i": e.t, "r_i": e.r} for e in events], cfg.out)
    else:
        with _output(cfg.out) as fh:
            write_crossings_csv(events, fh)
    if cfg.figure:
        from .plotting import figure_style, profile_plot, save_svg

        with figure_style():
            ax = profile_plot(P, orbit_to_graph(orbit), events)
            save_svg(ax.figure, cfg.figure)
    return 0


def volume_table(cfg: RunConfig, P: LomseParams):
    """Resolved rescaled-graph volumes, their deficits and the cone volume."""
    metric = QuotientMetric(P)
    orbit = _orbit(cfg, P, cfg.converge_tol or DEEP_CONVERGE_TOL)
    events = detect_crossings(orbit, cfg.max_events if cfg.max_events is not None else 5)
    if not events:
        return [], [], events
    curves = rescaled_graphs(orbit_to_graph(orbit), events)
    top = cone_volume(P)
    deficits = []
    for c in curves:
        d = cone_deficit(c, metric)
        if not d.resolved or not top - d.value < top:
            break
        if deficits and not d.value < deficits[-1].value:
            break
        deficits.append(d)
    volumes = volume_monotonicity(curves[: len(deficits)], metric) if deficits else [top]
    return volumes, deficits, events


def cmd_volumes(args) -> int:
    cfg = build_config(args, tol=VOLUME_TOL)
    P = cfg.lomse()
    volumes, deficits, events = volume_table(cfg, P)
    print(f"resolved {len(deficits)} of {len(events)} crossing volume(s) above noise", file=sys.stderr)
    top = cone_volume(P)
    rows = [(i, volumes[i - 1], top, d.value) for i, d in enumerate(deficits, start=1)]
    if cfg.format == "json":
        _emit_json([dict(zip(("i", "volume", "cone_volume", "deficit"), r)) for r in rows], cfg.out)
    else:
        _emit_rows(["i", "volume", "cone_volume", "deficit"], rows, cfg.out)
    if cfg.figure and deficits:
        from .plotting import deficit_plot, figure_style, save_svg

        with figure_style():
            ax = deficit_plot(P, deficits)
            save_svg(ax.figure, cfg.figure)
    return 0


def cmd_stability(args) -> int:
    cfg = build_config(args)
    if not 1e-8 <= cfg.eps <= 1e-3:
        raise LomseDomainError("--eps for stability must lie in [1e-8, 1e-3]")
    P = cfg.lomse()
    report = jacobi_stability(QuotientMetric(P), eps=cfg.eps, rtol=cfg.tol)
    if cfg.format == "csv":
        d = report.to_json_dict()
        _emit_rows(["n", "p", "k", "lambda_sq", "L", "s_star", "verdict", "epsilon"],
                   [(P.n, P.p, "" if P.k is None else P.k, P.lambda_sq, d["L"],
                     "" if d["s_star"] is None else d["s_star"], d["verdict"], d["epsilon"])], cfg.out)
    else:
        _emit_json(report.to_json_dict(), cfg.out)
    return 0


def cmd_portrait(args) -> int:
    cfg = build_config(args, out="portrait.svg")
    P = cfg.lomse()
    from .plotting import figure_style, phase_portrait, profile_plot, save_svg

    orbit = _orbit(cfg, P, cfg.converge_tol or DEEP_CONVERGE_TOL)
    with figure_style():
        if args.profile:
            events = detect_crossings(orbit, 10)
            ax = profile_plot(P, orbit_to_graph(orbit), events)
        else:
            ax = phase_portrait(P, orbit)
        save_svg(ax.figure, cfg.out)
    print(f"wrote {cfg.out}", file=sys.stderr)
    return 0


def sweep_row(n: int, p: int, k: int, eps: float, tol: float, t_max: float) -> dict:
    row = classify_row(n, p, k)
    P = LomseParams.from_npk(n, p, k)
    orbit = launch_unstable_orbit(P, eps=eps, tol=tol, t_max=t_max, converge_tol=DEEP_CONVERGE_TOL)
    if orbit.terminal is OrbitTerminal.CONVERGED_TO_P:
        row["crossings"] = len(detect_crossings(orbit, 50))
    else:
        row["crossings"] = ""
    row["terminal"] = orbit.terminal.value
    row["stability"] = jacobi_stability(QuotientMetric(P)).verdict.value
    return row


SWEEP_COLUMNS = CLASSIFY_COLUMNS + ["terminal", "crossings", "stability"]


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    triples = list(_triples(args.n or [], args.p or [], args.k or [], args.hopf))
    jobs = [(n, p, k, cfg.eps, cfg.tol, cfg.t_max) for n, p, k in triples]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(sweep_row, *zip(*jobs)))
    else:
        rows = [sweep_row(*j) for j in jobs]
    if cfg.format == "json":
        _emit_json(rows, cfg.out)
    else:
        _emit_rows(SWEEP_COLUMNS, [[r[c] for c in SWEEP_COLUMNS] for r in rows], cfg.out)
    return 0


def _single_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("cone parameters")
    g.add_argument("-n", type=int, help="dimension of the domain sphere S^n")
    g.add_argument("-p", type=int, help="multiplicity of the nonzero singular value")
    g.add_argument("-k", type=int, help="polynomial degree (sets lambda^2 = k(k+n-1)/p)")
    g.add_argument("--lambda-sq", type=float, dest="lambda_sq", help="lambda^2 given directly")
    parent.add_argument("--eps", type=float, help="launch offset (orbit) or truncation radius (stability)")
    parent.add_argument("--tol", type=float, help="integrator relative tolerance")
    parent.add_argument("--t-max", type=float, dest="t_max", help="integration horizon in t = log r")
    parent.add_argument("--converge-tol", type=float, dest="converge_tol",
                        help="stop once within this distance of P")
    parent.add_argument("--max-events", type=int, dest="max_events", help="maximum number of crossings")
    parent.add_argument("--format", choices=("csv", "json"), help="output format")
    parent.add_argument("--out", help="output file (default: stdout)")
    parent.add_argument("--figure", help="also render an SVG figure to this path")
    parent.add_argument("--config", help="key = value file with option values")
    return parent


def _range_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-n", type=int, nargs="*", help="values of n")
    parent.add_argument("-p", type=int, nargs="*", help="values of p (ignored with --hopf)")
    parent.add_argument("-k", type=int, nargs="*", help="values of k")
    parent.add_argument("--hopf", action="store_true", help="pair each n with its Hopf-type p values")
    parent.add_argument("--format", choices=("csv", "json"), default="csv")
    parent.add_argument("--out")
    return parent


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locones", description=__doc__.split("\n", 1)[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    single = _single_parent()
    ranged = _range_parent()

    sub.add_parser("params", parents=[single], help="cone parameters and warnings").set_defaults(func=cmd_params)
    sub.add_parser("classify", parents=[ranged], help="Type I/II table").set_defaults(func=cmd_classify)
    p_orbit = sub.add_parser("orbit", parents=[single], help="orbit from the origin")
    p_orbit.add_argument("--curve", action="store_true", help="write the r-rho profile instead of t-phi-psi")
    p_orbit.set_defaults(func=cmd_orbit)
    sub.add_parser("crossings", parents=[single], help="crossings of phi = phi0").set_defaults(func=cmd_crossings)
    sub.add_parser("volumes", parents=[single], help="rescaled-graph volumes").set_defaults(func=cmd_volumes)
    sub.add_parser("stability", parents=[single], help="Jacobi stability of 0Q").set_defaults(func=cmd_stability)
    p_portrait = sub.add_parser("portrait", parents=[single], help="SVG phase portrait or profile")
    p_portrait.add_argument("--profile", action="store_true", help="r-rho profile instead of phase plane")
    p_portrait.set_defaults(func=cmd_portrait)
    p_sweep = sub.add_parser("sweep", parents=[ranged], help="classification, crossings and stability")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    for name in ("eps", "tol", "t_max", "config"):
        p_sweep.set_defaults(**{name: None})
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LomseDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
