"""Command-line front end: `multihelix <command> [options]`.

Exit codes: 0 success, 2 usage error, 3 infeasible input, 4 solver failure.
Tables go to stdout (aligned text, --csv or --json); progress goes to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import __version__
from .constraint_geometry import DEFAULT_VERTICES
from .errors import InfeasibleError, SolverError

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4
OUTDIR_ENV = "MULTIHELIX_OUTDIR"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a command needs; the defaults reproduce the acceptance suite."""
    command: str = ""
    vertices: int = DEFAULT_VERTICES
    jobs: int = 1
    output_format: str = "table"
    outdir: Path = field(default_factory=lambda: Path(os.environ.get(OUTDIR_ENV, ".")))
    svg: bool = False
    timestamp: bool = True
    p: int = 3
    rule: str = "minimal"
    verts_per_turn: int = 200
    overlap_tol: float = 2e-3
    params: dict = field(default_factory=dict)


def parse_int_range(text: str) -> list[int]:
    """'5' -> [5], '2..10' -> [2, ..., 10], '3,5,8' -> [3, 5, 8]."""
    out: list[int] = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if ".." in part:
                a, b = part.split("..", 1)
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise UsageError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            elif part:
                out.append(int(part))
    except ValueError as exc:
        raise UsageError(f"bad integer range {text!r}") from exc
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def read_config_file(path: str | Path) -> dict[str, str]:
    """key = value lines; '#' starts a comment."""
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


# ---------------------------------------------------------------------------
# output


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return format(v, ".10g")
    return str(v)


def emit(rows: list[dict], cfg: RunConfig, stream=None, meta: dict | None = None) -> None:
    stream = stream or sys.stdout
    if cfg.output_format == "json":
        doc = {"command": cfg.command, "version": __version__, "rows": rows}
        if meta:
            doc.update(meta)
        if cfg.timestamp:
            doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        stream.write(json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n")
        return
    if not rows:
        return
    cols = list(rows[0])
    if cfg.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt_cell(r.get(c, "")) for c in cols])
        stream.write(buf.getvalue())
        return
    cells = [[_fmt_cell(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    stream.write("  ".join(c.rjust(w) for c, w in zip(cols, widths)) + "\n")
    for row in cells:
        stream.write("  ".join(v.rjust(w) for v, w in zip(row, widths)) + "\n")
    if meta:
        for k, v in meta.items():
            stream.write(f"# {k}: {_fmt_cell(v)}\n")


def progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def save_svg(cfg: RunConfig, name: str, series: dict[str, tuple[Sequence[float], Sequence[float]]],
             xlabel: str, ylabel: str, logx: bool = False, logy: bool = False) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "multihelix"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        ax.plot(x, y, "o-", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    path = cfg.outdir / f"{name}.svg"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    progress(f"wrote {path}")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_ideal(args, cfg: RunConfig) -> int:
    from .helix_core import ideal_helix

    ns = parse_int_range(args.n)
    if min(ns) < 2:
        raise UsageError("ideal needs n >= 2")
    rows = []
    for n in ns:
        p = ideal_helix(n)
        rows.append({"n": n, "phi": p.phi, "radius": p.radius, "height": p.height,
                     "length": p.length_per_twist, "length_per_crossing": p.length_per_crossing})
    emit(rows, cfg)
    if cfg.svg:
        save_svg(cfg, "ideal", {"L/C": ([r["n"] for r in rows], [r["length_per_crossing"] for r in rows])},
                 "n", "length per crossing")
    return EXIT_OK


def cmd_search(args, cfg: RunConfig) -> int:
    from .shell_optimizer import exhaustive_search

    qs = parse_int_range(args.q)
    if min(qs) < 2:
        raise UsageError("search needs q >= 2")
    window = parse_int_range(args.window) if args.window else None
    rows = []
    for q in qs:
        t0 = time.perf_counter()
        ranked = exhaustive_search(q - 1, window, vertices=cfg.vertices, jobs=cfg.jobs,
                                   progress=progress if len(qs) > 1 or q > 15 else None)
        if not ranked:
            raise InfeasibleError(f"no feasible arrangement for q={q} in the window")
        for rank, c in enumerate(ranked[:args.top], 1):
            rec = c.to_record()
            if args.top > 1:
                rec = {"rank": rank, **rec}
            rows.append(rec)
        progress(f"q={q}: {ranked[0].arrangement.label()} {ranked[0].total_length:.4f} "
                 f"({time.perf_counter() - t0:.1f} s)")
    emit(rows, cfg)
    if cfg.svg:
        best = [r for r in rows if r.get("rank", 1) == 1]
        save_svg(cfg, "search", {"L/C": ([r["q"] for r in best], [r["length_per_crossing"] for r in best])},
                 "Q", "length per crossing")
    return EXIT_OK


def cmd_optimize(args, cfg: RunConfig) -> int:
    from .shell_optimizer import Arrangement, optimize_geometry

    try:
        arr = Arrangement.parse(args.arrangement)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    c = optimize_geometry(arr, vertices=cfg.vertices)
    rec = c.to_record()
    rec["shell_radii"] = " ".join(format(r, ".10g") for r in c.shell_radii)
    emit([rec], cfg)
    return EXIT_OK


def cmd_table3(args, cfg: RunConfig) -> int:
    from .shell_optimizer import exhaustive_search
    from .torus_closure import close_link

    rows = []
    for q in parse_int_range(args.q):
        if q < 2:
            raise UsageError("table3 needs q >= 2")
        best = exhaustive_search(q - 1, vertices=cfg.vertices, jobs=cfg.jobs, progress=progress)[0]
        rec = {"q": q, "length": best.total_length, "length_per_crossing": best.length_per_crossing}
        if args.close:
            rec["ratio"] = close_link(best, cfg.p, cfg.rule, cfg.verts_per_turn, "circular").report.ratio
        rec["arrangement"] = best.arrangement.label()
        rows.append(rec)
    emit(rows, cfg)
    if cfg.svg:
        save_svg(cfg, "table3", {"L/C": ([r["q"] for r in rows], [r["length_per_crossing"] for r in rows])},
                 "Q", "length per crossing")
    return EXIT_OK


def _construct_rows(args, cfg: RunConfig) -> tuple[list[dict], dict]:
    from . import scalable_constructions as sc

    kind = args.kind
    meta: dict = {}
    if kind == "incremental":
        ts = parse_int_range(args.t) if args.t else [1, 2, 4, 8, 16, 32, 64, 128, 256, 632]
        rows = [sc.incremental_report(args.k, t).to_record() for t in ts]
        meta["asymptote"] = sc.incremental_asymptote(args.k)
        return rows, meta
    if kind == "equal":
        if args.n is None:
            raise UsageError("construct equal needs --n (helices around the rod)")
        if args.sweep_t:
            rows = []
            for t, c in sc.equal_sweep(args.n, args.mode, cfg.vertices):
                rec = sc.config_report("equal_per_shell", c).to_record()
                rec.update(n_per_shell=args.n // t, inner_radius=c.inner_radius, height=c.height,
                           approximate=c.approximate)
                rows.append(rec)
            best = min(rows, key=lambda r: r["length"])
            meta["best_t"] = best["t"]
            return rows, meta
        if args.t is None:
            raise UsageError("construct equal needs --t or --sweep-t")
        t = parse_int_range(args.t)[0]
        if args.n % t:
            raise UsageError(f"{t} shells do not divide {args.n} helices")
        c = sc.construct_equal(args.n // t, t, args.mode, cfg.vertices)
        return [sc.config_report("equal_per_shell", c).to_record()], meta
    if kind in ("gamma", "infill"):
        if args.n is None and args.q is None:
            raise UsageError(f"construct {kind} needs --n or --q")
        if kind == "gamma":
            qs = parse_int_range(args.q) if args.q else [args.n + 1]
            return [sc.config_report("gamma", sc.gamma_config(q)).to_record() for q in qs], meta
        return _infill_rows(args, cfg)
    raise UsageError(f"unknown construction {kind!r}")


def _infill_rows(args, cfg: RunConfig) -> tuple[list[dict], dict]:
    from . import scalable_constructions as sc

    if args.q and args.n is None:
        q = parse_int_range(args.q)[0]
        base = sc.gamma_config(q)
    else:
        sweep = sc.equal_sweep(args.n, "ideal", cfg.vertices)
        _, base = min(sweep, key=lambda tc: tc[1].total_length)
    rows = [{"stage": "base", "shell_count": base.arrangement.shell_count,
             "length": base.total_length, "height": base.height, "feasible": not base.approximate}]
    filled = sc.infill(base, cfg.vertices)
    rows.append({"stage": "infill", "shell_count": filled.config.arrangement.shell_count,
                 "length": filled.config.total_length, "height": filled.config.height,
                 "feasible": filled.feasible})
    meta = {"moved": filled.moved, "interior_shells": filled.interior_shells}
    final = filled.config
    if args.jenga:
        j = sc.reverse_jenga(filled.config, vertices=cfg.vertices)
        final = j.config
        rows.append({"stage": "jenga", "shell_count": final.arrangement.shell_count,
                     "length": final.total_length, "height": final.height, "feasible": not final.approximate})
        meta["jenga_moves"] = j.moves
    meta["arrangement"] = final.arrangement.label()
    return rows, meta


def cmd_construct(args, cfg: RunConfig) -> int:
    rows, meta = _construct_rows(args, cfg)
    emit(rows, cfg, meta=meta)
    if cfg.svg and rows and "length_per_crossing" in rows[0]:
        key = "t" if args.kind == "equal" and args.sweep_t else "q"
        save_svg(cfg, f"construct_{args.kind}", {args.kind: ([r[key] for r in rows],
                                                             [r["length_per_crossing"] for r in rows])},
                 key, "length per crossing", logx=key == "q", logy=key == "q")
    return EXIT_OK


def cmd_close(args, cfg: RunConfig) -> int:
    from .shell_optimizer import Arrangement, exhaustive_search, optimize_geometry
    from .torus_closure import close_link, export_geometry, verify_no_overlap

    if cfg.p < 2:
        raise UsageError("close needs p >= 2")
    if args.arrangement:
        try:
            arrs = [Arrangement.parse(args.arrangement)]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        configs = [optimize_geometry(a, vertices=cfg.vertices) for a in arrs]
    elif args.q:
        configs = [exhaustive_search(q - 1, vertices=cfg.vertices, jobs=cfg.jobs)[0] for q in parse_int_range(args.q)]
    else:
        raise UsageError("close needs --arrangement or --q")
    rows = []
    for c in configs:
        link = close_link(c, cfg.p, cfg.rule, cfg.verts_per_turn, args.lower_bound, args.major_radius)
        rec = link.report.to_record()
        if args.export or args.check:
            comps = link.components
            rep = verify_no_overlap(comps, tol=cfg.overlap_tol)
            rec.update(min_distance=rep.min_distance, overlap_pass=rep.passed,
                       polyline_length=sum(p.length for p in comps))
            if args.export:
                cfg.outdir.mkdir(parents=True, exist_ok=True)
                name = f"T{link.report.p * link.report.q}_{link.report.q}.{args.export}"
                path = export_geometry(comps, cfg.outdir / name, args.export)
                rec["file"] = str(path)
                progress(f"wrote {path}")
        rows.append(rec)
    emit(rows, cfg)
    if cfg.svg and len(rows) > 1:
        save_svg(cfg, "close", {"ratio": ([r["q"] for r in rows], [r["ratio"] for r in rows])},
                 "Q", "L / C^(3/4)")
    return EXIT_OK


def cmd_bounds(args, cfg: RunConfig) -> int:
    from .torus_closure import lower_bound_link

    rows = []
    for q in parse_int_range(args.q):
        if q < 2:
            raise UsageError("bounds needs q >= 2")
        lb = lower_bound_link(q, cfg.p, args.mode)
        rows.append({"q": q, "p": cfg.p, "crossings": cfg.p * q * (q - 1), "length": lb.length,
                     "ratio": lb.ratio, "kind": lb.kind, "conjectural": lb.conjectural, "fallback": lb.fallback})
    emit(rows, cfg)
    if cfg.svg:
        save_svg(cfg, "bounds", {args.mode: ([r["q"] for r in rows], [r["ratio"] for r in rows])},
                 "Q", "lower bound on L / C^(3/4)")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    from .acceptance import run_all

    numbers = parse_int_range(args.criteria) if args.criteria else None
    results = run_all(numbers, progress=progress)
    rows = [{"criterion": r.number, "status": "PASS" if r.passed else "FAIL", "title": r.title,
             "checks_passed": sum(c.passed for c in r.checks), "checks": len(r.checks),
             "seconds": round(r.seconds, 1)} for r in results]
    emit(rows, cfg)
    if args.details:
        for r in results:
            for c in r.checks:
                print(f"  [{r.number}] {'ok  ' if c.passed else 'FAIL'} {c.label}: {c.measured} (target {c.target})")
    return EXIT_OK if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--vertices", type=int, help="vertices per helix turn in distance checks (default 500)")
    common.add_argument("--jobs", type=int, help="worker processes for searches")
    common.add_argument("--csv", action="store_const", const="csv", dest="output_format")
    common.add_argument("--json", action="store_const", const="json", dest="output_format")
    common.add_argument("--svg", action="store_true", default=None, help="also write an SVG plot to the output dir")
    common.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or .)")
    common.add_argument("--no-timestamp", action="store_false", dest="timestamp", default=None)
    common.add_argument("--config", help="key = value file overriding defaults")

    parser = argparse.ArgumentParser(prog="multihelix", description="Concentric multihelix ropelength toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ideal", parents=[common], help="single-shell optimum for n strands")
    p.add_argument("--n", required=True, help="n or range a..b")
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("search", parents=[common], help="best arrangement for Q strands")
    p.add_argument("--q", required=True, help="Q or range a..b (Q counts the rod)")
    p.add_argument("--window", help="shell counts to search, e.g. 5..6")
    p.add_argument("--top", type=int, default=1, help="rows per Q")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("table3", parents=[common], help="best arrangement table over a Q range")
    p.add_argument("--q", default="2..39")
    p.add_argument("--close", action="store_true", help="add the closed-link ratio (p=3, minimal rule)")
    p.add_argument("--p", type=int)
    p.set_defaults(func=cmd_table3)

    p = sub.add_parser("optimize", parents=[common], help="optimize one arrangement such as 1,4,5,2")
    p.add_argument("--arrangement", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("construct", parents=[common], help="scalable constructions")
    p.add_argument("kind", choices=["incremental", "equal", "gamma", "infill"])
    p.add_argument("--k", type=int, default=5, help="incremental step (>= 5)")
    p.add_argument("--t", help="shell count(s)")
    p.add_argument("--n", type=int, help="helices around the rod")
    p.add_argument("--q", help="total strands, for gamma or infill")
    p.add_argument("--mode", default="ideal", choices=["ideal", "approx", "optimized"])
    p.add_argument("--sweep-t", action="store_true", help="equal: try every divisor shell count")
    p.add_argument("--jenga", action="store_true", help="infill: follow with reverse Jenga")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("close", parents=[common], help="close a multihelix into a torus link")
    p.add_argument("--arrangement")
    p.add_argument("--q", help="use the best arrangement for these Q")
    p.add_argument("--p", type=int, help="repeats around the torus (default 3)")
    p.add_argument("--rule", choices=["minimal", "uniform", "outer"])
    p.add_argument("--major-radius", type=float)
    p.add_argument("--verts", type=int, dest="verts_per_turn", help="polyline vertices per strand turn")
    p.add_argument("--tol", type=float, dest="overlap_tol", help="relative overlap tolerance for --check")
    p.add_argument("--export", choices=["vect", "obj"])
    p.add_argument("--check", action="store_true", help="run the segment overlap check")
    p.add_argument("--lower-bound", default="tabulated", choices=["tabulated", "circular"])
    p.set_defaults(func=cmd_close)

    p = sub.add_parser("bounds", parents=[common], help="conjectural link lower bounds")
    p.add_argument("--q", required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--mode", default="tabulated", choices=["tabulated", "circular"])
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    p.add_argument("--criteria", help="subset such as 1..5")
    p.add_argument("--details", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


_COERCE = {"vertices": int, "jobs": int, "p": int, "verts_per_turn": int, "overlap_tol": float,
           "outdir": Path, "rule": str, "output_format": str}


def make_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        for key, val in read_config_file(args.config).items():
            if key in ("timestamp", "svg"):
                setattr(cfg, key, val.lower() in ("1", "true", "yes", "on"))
            elif key in _COERCE:
                try:
                    setattr(cfg, key, _COERCE[key](val))
                except ValueError as exc:
                    raise UsageError(f"bad value for {key}: {val!r}") from exc
            else:
                cfg.params[key] = val
    names = {f.name for f in fields(RunConfig)}
    for key, val in vars(args).items():
        if key in names and key != "command" and val is not None:
            setattr(cfg, key, Path(val) if key == "outdir" else val)
    if cfg.vertices < 8 or cfg.jobs < 1 or cfg.verts_per_turn < 8:
        raise UsageError("vertices, verts and jobs must be positive (vertices >= 8)")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = make_run_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"multihelix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"multihelix: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"multihelix: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"multihelix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"multihelix: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
