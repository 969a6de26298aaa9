"""Command-line entry point.

Every subcommand reads an ensemble description with ``--spec`` and writes a
table to stdout or ``--out``. Metadata (inputs, defaults, tolerances) is
echoed as ``# key=value`` comment lines ahead of CSV output and under
``"meta"`` in JSON output. Exit status: 0 on success, 1 when a computation
precondition fails or a verification does not match, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__, _kernels
from .errors import DomainError

# Central table of numeric defaults; every one is echoed in output metadata.
DEFAULTS: Dict[str, object] = {
    "term_budget": 20_000_000,
    "graph_budget": 10_000_000,
    "samples": 100_000,
    "seed": 0,
    "growth_tol": 1e-10,
    "de_tol": 1e-4,
    "zero_threshold": 1e-12,
    "change_threshold": 1e-15,
    "max_iters": 100_000,
    "se_factor": 3.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _grid(text: str) -> List[float]:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"grid must be START:STOP:STEP, got {text!r}")
    if step <= 0 or b < a:
        raise UsageError("grid needs STEP > 0 and STOP >= START")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def emit(meta: Dict[str, object], header: Sequence[str], rows: Iterable[Sequence], fmt: str, out) -> None:
    """Write a table deterministically as CSV (comment-prefixed metadata) or JSON."""
    rows = [list(r) for r in rows]
    if fmt == "json":
        doc = {"meta": _jsonable(meta), "rows": [_jsonable(dict(zip(header, r))) for r in rows]}
        out.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
        return
    for key, val in meta.items():
        out.write(f"# {key}={_fmt(val) if not isinstance(val, (list, tuple)) else ' '.join(map(_fmt, val))}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])


def _base_meta(args, cmd: str) -> Dict[str, object]:
    return {"command": cmd, "spec": args.spec, "version": __version__, "backend": _kernels.get_backend()}


# --- subcommands ---------------------------------------------------------------


def _load(args):
    from .ensemble import load_spec

    try:
        return load_spec(args.spec)
    except OSError as exc:
        raise DomainError(f"cannot read spec file: {exc}")


def cmd_info(args, out):
    from .ensemble import counts_table, describe, instantiate, smallest_n

    spec = _load(args)
    info = describe(spec)
    n = args.n if args.n is not None else smallest_n(spec)
    counts = instantiate(spec, n)
    table = counts_table(counts)
    meta = _base_meta(args, "info")
    meta.update(
        edge_types=spec.k,
        design_rate=info["design_rate"],
        smallest_n=info["smallest_n"],
        edge_balance="exact",
        unpunctured=int(spec.unpunctured),
        n=n,
        E=list(table["edge_counts"]),
        ensemble_size=table["ensemble_size"],
    )
    rows = []
    for t, c in zip(spec.var_terms, counts.var_counts):
        rows.append(["var", str(t.coeff), f"{t.channel[0]}{t.channel[1]}", " ".join(map(str, t.d)), c])
    for t, c in zip(spec.chk_terms, counts.chk_counts):
        rows.append(["chk", str(t.coeff), "", " ".join(map(str, t.d)), c])
    emit(meta, ["side", "coeff", "b", "d", "count"], rows, args.format, out)
    return 0


def cmd_spectrum(args, out):
    from .ensemble import instantiate
    from .spectrum import CSV_HEADER, average_weight_distribution

    spec = _load(args)
    counts = instantiate(spec, args.n)
    ws = average_weight_distribution(counts, args.ell_max, budget=args.term_budget)
    meta = _base_meta(args, "spectrum")
    meta.update(n=args.n, ell_max=ws.ell_max, term_budget=args.term_budget, E=list(counts.edge_counts))
    if args.format == "json":
        rows = [[ell, v, float(v), lg] for ell, (v, lg) in enumerate(zip(ws.values, ws.log_over_n()))]
        emit(meta, ["ell", "A_exact", "A_float", "log_A_over_n"], rows, "json", out)
    else:
        emit(meta, CSV_HEADER, ws.rows(), "csv", out)
    return 0


def cmd_growth(args, out):
    from .growth import csv_header, growth_curve

    spec = _load(args)
    grid = _grid(args.omega)
    curve = growth_curve(spec, grid, tol=args.tol)
    meta = _base_meta(args, "growth")
    meta.update(omega=args.omega, tol=args.tol, points=len(curve.points), failures=len(curve.failures))
    for w, msg in curve.failures:
        meta[f"failed_{w!r}"] = msg
    emit(meta, csv_header(spec.k), [p.row() for p in curve.points], args.format, out)
    return 0 if not curve.failures else 1


def cmd_smallweight(args, out):
    from .de import stability_check
    from .smallweight import report_json, report_text, small_weight_report

    spec = _load(args)
    rep = small_weight_report(spec)
    meta = _base_meta(args, "smallweight")
    if args.format == "json":
        doc = {"meta": meta, "report": report_json(rep)}
        if args.epsilon is not None:
            radius, stable = stability_check(spec, args.epsilon)
            doc["stability"] = {"epsilon": args.epsilon, "radius": radius, "stable": stable}
        out.write(json.dumps(_jsonable(doc), indent=2) + "\n")
        return 0
    for key, val in meta.items():
        out.write(f"# {key}={val}\n")
    out.write(report_text(rep))
    if args.epsilon is not None:
        radius, stable = stability_check(spec, args.epsilon)
        out.write(f"epsilon = {args.epsilon!r}\nstability_radius = {radius!r}\nstable = {stable}\n")
    return 0


def cmd_stability(args, out):
    from .de import stability_check

    spec = _load(args)
    radius, stable = stability_check(spec, args.epsilon)
    meta = _base_meta(args, "stability")
    emit(meta, ["epsilon", "radius", "stable"], [[args.epsilon, radius, stable]], args.format, out)
    return 0


def cmd_threshold(args, out):
    from .de import CSV_HEADER, stability_threshold, sweep, threshold

    spec = _load(args)
    kw = dict(max_iters=args.max_iters, zero_threshold=args.zero_threshold, change_threshold=args.change_threshold)
    meta = _base_meta(args, "threshold")
    meta.update(tol=args.tol, **kw)
    if args.sweep:
        emit(meta, CSV_HEADER, sweep(spec, _grid(args.sweep), **kw), args.format, out)
        return 0
    th = threshold(spec, args.tol, **kw)
    stab, exact, linear = stability_threshold(spec)
    meta.update(degenerate=int(th.degenerate), radius_linear_in_epsilon=int(linear))
    stab_out = exact if exact is not None else stab
    if math.isinf(stab):
        meta["stability"] = "unconditionally stable"
    emit(meta, ["epsilon_star", "epsilon_stab"], [[th.epsilon_star, stab_out]], args.format, out)
    return 0


def cmd_verify(args, out):
    from .ensemble import instantiate
    from .oracle import CSV_HEADER, comparison_rows, oracle_spectrum
    from .spectrum import average_weight_distribution

    spec = _load(args)
    counts = instantiate(spec, args.n)
    max_w = args.ell_max
    orc = oracle_spectrum(counts, args.mode, args.samples, args.seed, max_w, args.graph_budget)
    ws = average_weight_distribution(counts, len(orc.values) - 1, budget=args.term_budget)
    rows = comparison_rows(orc, ws.values)
    meta = _base_meta(args, "verify")
    meta.update(n=args.n, mode=args.mode, graphs=orc.graphs, E=list(counts.edge_counts))
    if args.mode == "exhaustive":
        ok = all(o == f for o, f in zip(orc.values, ws.values))
        meta["verdict"] = "EXACT MATCH" if ok else "MISMATCH"
    else:
        meta.update(samples=args.samples, seed=args.seed, se_factor=DEFAULTS["se_factor"])
        bad = []
        for ell, (o, se, f) in enumerate(zip(orc.values, orc.stderr, ws.values)):
            if abs(o - float(f)) > DEFAULTS["se_factor"] * se and not (se == 0 and o == float(f)):
                bad.append(ell)
        ok = not bad
        meta["verdict"] = "WITHIN 3 SE" if ok else "OUTSIDE 3 SE at ell=" + ",".join(map(str, bad))
    emit(meta, CSV_HEADER, rows, args.format, out)
    return 0 if ok else 1


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="metldpc", description="Weight distributions and density evolution for MET-LDPC ensembles.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, fmt="csv", choices=("csv", "json")):
        sp.add_argument("--spec", required=True, help="ensemble description file")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=choices, default=fmt)
        sp.add_argument("--threads", type=int, default=0, help="worker cap (default: all cores)")
        sp.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend override")

    sp = sub.add_parser("info", help="node-type table, edge counts, design rate")
    common(sp)
    sp.add_argument("--n", type=int, help="length to instantiate (default: smallest valid)")

    sp = sub.add_parser("spectrum", help="exact average weight distribution")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--ell-max", type=int)
    sp.add_argument("--term-budget", type=int, default=DEFAULTS["term_budget"])

    sp = sub.add_parser("growth", help="asymptotic growth rate over an omega grid")
    common(sp)
    sp.add_argument("--omega", required=True, help="START:STOP:STEP")
    sp.add_argument("--tol", type=float, default=DEFAULTS["growth_tol"])

    sp = sub.add_parser("smallweight", help="Lambda, P, spectral radius and slope")
    common(sp, fmt="text", choices=("text", "json"))
    sp.add_argument("--epsilon", type=float)

    sp = sub.add_parser("stability", help="spectral radius of Lambda(1, eps) P")
    common(sp)
    sp.add_argument("--epsilon", type=float, required=True)

    sp = sub.add_parser("threshold", help="density-evolution threshold and stability bound")
    common(sp)
    sp.add_argument("--tol", type=float, default=DEFAULTS["de_tol"])
    sp.add_argument("--zero-threshold", type=float, default=DEFAULTS["zero_threshold"])
    sp.add_argument("--change-threshold", type=float, default=DEFAULTS["change_threshold"])
    sp.add_argument("--max-iters", type=int, default=DEFAULTS["max_iters"])
    sp.add_argument("--sweep", help="START:STOP:STEP epsilon grid; prints per-epsilon DE outcomes")

    sp = sub.add_parser("verify", help="compare the formula with the graph oracle")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    sp.add_argument("--samples", type=int, default=DEFAULTS["samples"])
    sp.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    sp.add_argument("--ell-max", type=int)
    sp.add_argument("--graph-budget", type=int, default=DEFAULTS["graph_budget"])
    sp.add_argument("--term-budget", type=int, default=DEFAULTS["term_budget"])
    return p


COMMANDS = {
    "info": cmd_info,
    "spectrum": cmd_spectrum,
    "growth": cmd_growth,
    "smallweight": cmd_smallweight,
    "stability": cmd_stability,
    "threshold": cmd_threshold,
    "verify": cmd_verify,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        stderr.write(f"metldpc: usage error: {exc}\n")
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.backend:
        _kernels.set_backend(args.backend)
    if args.threads:
        _kernels.set_threads(args.threads)
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except UsageError as exc:
        stderr.write(f"metldpc: usage error: {exc}\n")
        return 2
    except DomainError as exc:
        stderr.write(f"metldpc: {type(exc).__name__}: {exc}\n")
        return 1
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
