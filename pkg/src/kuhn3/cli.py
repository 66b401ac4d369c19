"""Command-line front end.

Exit codes: 0 success, 1 numeric failure, 2 bad flags or arguments,
3 malformed config file.  Output files land in ``--out``; without it,
tabular results go to ``$KUHN3_OUT_DIR/<default name>`` when that
variable is set and to stdout otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import csvio
from .equilibrium import (
    equilibrium_families_full,
    maxmin_restricted,
    pstar,
    skp_equilibrium_expectations,
    skp_solutions,
    support_enumeration,
)
from .game_core import FullStrategy, SkpStrategy, expectation_full, expectation_skp

OUT_DIR_ENV = "KUHN3_OUT_DIR"

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class NumericError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# argument helpers


def parse_pot(text: str):
    """Accept ``9``, ``6.9``, ``69/10`` (kept exact) or ``pstar``."""
    t = text.strip().lower()
    if t in ("pstar", "p*"):
        return pstar()
    try:
        P = Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse P from {text!r}") from None
    if P <= 0:
        raise UsageError("P must be positive")
    return P


def _floats(text: str, n: int | None = None, name: str = "value") -> list[float]:
    try:
        vals = [float(Fraction(x)) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse {name} from {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name} needs {n} comma-separated numbers")
    return vals


def parse_grid(text: str) -> list[Fraction]:
    """``start:stop:step`` with exact steps; ``stop`` is included when hit."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (parse_pot(x) for x in parts)
    n = int((stop - start) / step) + 1 if stop >= start else 0
    if n < 1:
        raise UsageError("grid is empty")
    return [start + i * step for i in range(n)]


def _ints(text: str, name: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {name} from {text!r}") from None


def fmt(x, exact: bool = False) -> str:
    if isinstance(x, Fraction) and exact:
        return str(x)
    if isinstance(x, (int, Fraction, float, np.floating, np.integer)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return str(x)


def _json_value(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, np.ndarray):
        return [_json_value(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _json_value(v) for k, v in x.items()}
    return x


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: _json_value(v) for k, v in vars(args).items() if k not in skip}


def _target(args, default_name: str) -> Path | None:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env) / default_name
    return None


def _emit_table(args, columns: dict, default_stem: str, extra: dict | None = None) -> None:
    """Write columns as CSV or JSON to the chosen target (stdout if none)."""
    if args.format == "json":
        doc = {"command": args.command, "config": _config_echo(args)}
        if extra:
            doc.update(_json_value(extra))
        doc["columns"] = {k: _json_value(np.asarray(v) if not isinstance(v, list) else v)
                          for k, v in columns.items()}
        text = json.dumps(doc, indent=1) + "\n"
        name = default_stem + ".json"
    else:
        text = csvio.to_csv_text(columns)
        name = default_stem + ".csv"
    path = _target(args, name)
    if path is None:
        sys.stdout.write(text)
    else:
        csvio.atomic_write_text(path, text)
        print(f"wrote {path}")


def _emit_doc(args, doc: dict, lines: list[str], default_stem: str) -> None:
    """Human-readable lines on stdout; JSON document when ``--format json``."""
    if args.format == "json":
        full = {"command": args.command, "config": _config_echo(args), **_json_value(doc)}
        text = json.dumps(full, indent=1) + "\n"
        path = _target(args, default_stem + ".json") if args.out else None
        if path is None:
            sys.stdout.write(text)
        else:
            csvio.atomic_write_text(path, text)
            print(f"wrote {path}")
        return
    print("\n".join(lines))


# --------------------------------------------------------------------------
# subcommands


def _equilibria_table(args) -> int:
    full = args.variant == "full"
    names = FullStrategy.names() if full else SkpStrategy.names()
    cols = {"P": [], "family" if full else "solution": [], "vertex": []}
    cols.update({n: [] for n in names})
    cols.update({"E1": [], "E2": [], "E3": []})
    label = "family" if full else "solution"
    for P in args.P_grid:
        if full:
            rows = [(fam.label, j, v, expectation_full(v, P))
                    for fam in equilibrium_families_full(P) for j, v in enumerate(fam.vertices)]
        elif P > 5:
            rows = [(i, 0, s, skp_equilibrium_expectations(P, i)) for i, s in skp_solutions(P)]
        else:
            continue
        for lab, j, strat, e in rows:
            cols["P"].append(float(P))
            cols[label].append(lab)
            cols["vertex"].append(j)
            for n, x in zip(names, strat.as_tuple()):
                cols[n].append(float(x))
            for k, x in zip(("E1", "E2", "E3"), e):
                cols[k].append(float(x))
    _emit_table(args, cols, f"equilibria_{args.variant}_grid")
    return EXIT_OK


def cmd_equilibria(args) -> int:
    if args.P_grid is not None:
        if args.P is not None:
            raise UsageError("give either --P or --P-grid")
        return _equilibria_table(args)
    if args.P is None:
        raise UsageError("--P is required (or --P-grid)")
    P = args.P
    if args.variant == "skp":
        try:
            sols = skp_solutions(P)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        lines = [f"simplified game, P = {fmt(P, args.exact)}: {len(sols)} solution(s)"]
        rows = []
        for i, s in sols:
            e = skp_equilibrium_expectations(P, i)
            lines.append(f"Solution {i}: b_J={fmt(s.b_j, args.exact)} c_K={fmt(s.c_k, args.exact)} "
                         f"d_Q={fmt(s.d_q, args.exact)}  E=({', '.join(fmt(x, args.exact) for x in e)})")
            rows.append({"solution": i, "strategy": dict(zip(s.names(), s.as_tuple())),
                         "expectations": list(e)})
        _emit_doc(args, {"solutions": rows}, lines, "equilibria")
        return EXIT_OK
    fams = equilibrium_families_full(P)
    lines = [f"full game, P = {fmt(P, args.exact)}"]
    rows = []
    for fam in fams:
        lines.append(f"[{fam.label}] free: {', '.join(fam.free) or '-'}" + (f"  ({fam.note})" if fam.note else ""))
        verts = []
        for v in fam.vertices:
            e = expectation_full(v, P)
            lines.append("  " + " ".join(f"{n}={fmt(x, args.exact)}" for n, x in zip(v.names(), v.as_tuple()))
                         + f"  E=({', '.join(fmt(x, args.exact) for x in e)})")
            verts.append({"strategy": dict(zip(v.names(), v.as_tuple())), "expectations": list(e)})
        rows.append({"label": fam.label, "free": list(fam.free), "note": fam.note, "vertices": verts})
    _emit_doc(args, {"families": rows}, lines, "equilibria")
    return EXIT_OK


def cmd_expectations(args) -> int:
    P = args.P
    if args.exact:
        try:
            vals = [Fraction(x) for x in args.strategy.split(",")]
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse strategy from {args.strategy!r}") from None
    else:
        vals = _floats(args.strategy, name="strategy")
    try:
        if args.variant == "skp":
            if len(vals) != 3:
                raise UsageError("simplified strategy needs b_J,c_K,d_Q")
            s = SkpStrategy(*vals)
            e = expectation_skp(s, P if args.exact else float(P))
        else:
            if len(vals) != 7:
                raise UsageError("full strategy needs b_J,b_Q,c_Q,c_K,d_Q,d_K,o_K")
            s = FullStrategy(*vals)
            e = expectation_full(s, P if args.exact else float(P))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = [" ".join(f"E{i + 1}={fmt(x, args.exact)}" for i, x in enumerate(e))]
    _emit_doc(args, {"expectations": list(e)}, lines, "expectations")
    return EXIT_OK


def cmd_scan(args) -> int:
    try:
        rep = support_enumeration(args.variant, args.P, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    names = SkpStrategy.names() if args.variant == "skp" else FullStrategy.names()
    lines = [f"{args.variant} scan at P = {fmt(args.P)}: {len(rep.items)} item(s)"
             + (" (closed form at a bifurcation value)" if rep.routed else "")]
    items = []
    for it in rep.items:
        desc = {"kind": it.kind, "family": it.family, "point": it.point.tolist(),
                "end": None if it.end is None else it.end.tolist()}
        items.append(desc)
        pt = " ".join(f"{n}={fmt(x)}" for n, x in zip(names, it.point))
        line = f"{it.kind:8s} {it.family or '?':12s} {pt}"
        if it.kind == "segment":
            line += "  ->  " + " ".join(f"{n}={fmt(x)}" for n, x in zip(names, it.end))
        lines.append(line)
    if rep.nonconverged:
        lines.append(f"branch combinations with no solution: {len(rep.nonconverged)}")
    _emit_doc(args, {"items": items, "nonconverged": rep.nonconverged}, lines, "scan")
    return EXIT_OK


def cmd_maxmin(args) -> int:
    try:
        res = maxmin_restricted(args.P)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = [f"restricted maxmin at P = {fmt(args.P, args.exact)}"]
    lines.append("player  " + "  ".join(f"Sol{i:<14d}" for i in (1, 2, 3)) + "choice")
    for p in (1, 2, 3):
        cells = []
        for i in (1, 2, 3):
            v = res.table.get((p, i))
            cells.append(f"{fmt(v, args.exact) if v is not None else '-':17s}")
        tie = f"  (tie: {', '.join(f'Sol{i}' for i in res.ties[p - 1])})" if len(res.ties[p - 1]) > 1 else ""
        lines.append(f"{p:<8d}" + " ".join(cells) + f" Sol{res.choice[p - 1]}{tie}")
    lines.append("choices: (" + ", ".join(f"Sol{i}" for i in res.choice) + ")")
    doc = {"choice": list(res.choice), "worst": list(res.worst), "ties": [list(t) for t in res.ties],
           "table": {f"{p},{i}": v for (p, i), v in res.table.items()}}
    _emit_doc(args, doc, lines, "maxmin")
    return EXIT_OK


def _gains(args):
    from .ode_dynamics import Gains

    k = _floats(args.k, 3, "k")
    try:
        return Gains(*k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _trajectory_columns(tr, P):
    from .ode_dynamics import cumulative_expectations

    cumulative_expectations(tr, P)
    return tr.columns()


def cmd_ode(args) -> int:
    from .ode_dynamics import IntegrationError, integrate

    k = _gains(args)
    y0 = _floats(args.init, 3, "init")
    try:
        tr = integrate(y0, float(args.P), k, args.t_end, args.rtol, args.atol, args.samples)
    except IntegrationError as exc:
        raise NumericError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit_table(args, _trajectory_columns(tr, float(args.P)), f"ode_P{fmt(args.P)}",
                {"stats": tr.stats})
    return EXIT_OK


def cmd_manifold(args) -> int:
    from .ode_dynamics import IntegrationError, stable_manifold_trace

    k = _gains(args)
    try:
        tr = stable_manifold_trace(args.P, k, args.eps, args.t_back, args.rtol, args.atol, args.samples)
    except IntegrationError as exc:
        raise NumericError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    # report forward time order
    tr.t, tr.y = tr.t[::-1].copy(), tr.y[::-1].copy()
    _emit_table(args, _trajectory_columns(tr, float(args.P)), f"manifold_P{fmt(args.P)}")
    return EXIT_OK


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def cmd_sim(args) -> int:
    from .repeated_sim import SimConfig, run

    data = _load_config(args.config) if args.config else {}
    if args.P is not None:
        data["P"] = float(args.P)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.record_every is not None:
        data["record_every"] = args.record_every
    if args.rounds is not None:
        data["rounds"] = args.rounds
    try:
        cfg = SimConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad simulation config: {exc}") from None
    res = run(cfg)
    stem = f"sim_P{fmt(cfg.P)}_L{cfg.L1}-{cfg.L2}-{cfg.L3}_seed{cfg.seed}"
    _emit_table(args, res.columns(), stem, {"sim_config": cfg.to_dict()})
    m = res.final_mean_ex
    print(f"mean ex-showdown after {cfg.rounds} rounds: ({fmt(m[0])}, {fmt(m[1])}, {fmt(m[2])})",
          file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .repeated_sim import calibrate_estimators

    data = _load_config(args.config) if args.config else {}
    allowed = {"P", "seed", "rounds", "warmup", "L_values", "init_b", "init_c", "init_d"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown calibration keys: {sorted(unknown)}")
    P = float(args.P) if args.P is not None else data.get("P")
    if P is None:
        raise UsageError("--P is required (or give P in the config)")
    if args.freqs:
        freqs = _floats(args.freqs, 3, "freqs")
    elif all(k in data for k in ("init_b", "init_c", "init_d")):
        freqs = [data["init_b"], data["init_c"], data["init_d"]]
    else:
        try:
            sols = dict(skp_solutions(P))
            freqs = [float(x) for x in sols[args.solution].as_tuple()]
        except (ValueError, KeyError):
            raise UsageError(f"Solution {args.solution} does not exist at P={P}") from None
    L_values = _ints(args.L, "L") if args.L else data.get("L_values", [6, 12, 24, 48, 96, 192])
    rounds = args.rounds or data.get("rounds", 1_000_000)
    seed = args.seed if args.seed is not None else data.get("seed", 0)
    warmup = data.get("warmup")
    try:
        rows = calibrate_estimators(P, freqs, L_values, warmup, int(rounds), int(seed))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad calibration settings: {exc}") from None
    cols = {
        "L": [r.L for r in rows],
        "estimator": [r.estimator for r in rows],
        "mean": [r.mean for r in rows],
        "std": [r.std for r in rows],
        "samples": [r.samples for r in rows],
    }
    extra = {"calibration_config": {"P": P, "frequencies": freqs, "L_values": L_values,
                                    "rounds": rounds, "seed": seed, "warmup": warmup}}
    _emit_table(args, cols, f"calibrate_P{fmt(P)}", extra)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: $%s/<name> or stdout)" % OUT_DIR_ENV)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--exact", action="store_true", help="print rational results as fractions")

    pot = _Parser(add_help=False)
    pot.add_argument("--P", type=parse_pot, required=True, help="pot size, e.g. 9, 6.9, 69/10 or pstar")

    pot_opt = _Parser(add_help=False)
    pot_opt.add_argument("--P", type=parse_pot, default=None)

    p = _Parser(prog="kuhn3", description="Three-player one-third-street Kuhn poker laboratory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("equilibria", parents=[common, pot_opt], help="closed-form equilibria")
    s.add_argument("--variant", choices=("full", "skp"), default="full")
    s.add_argument("--P-grid", dest="P_grid", type=parse_grid, default=None,
                   help="start:stop:step sweep written as one table (instead of --P)")
    s.set_defaults(func=cmd_equilibria)

    s = sub.add_parser("expectations", parents=[common, pot], help="expectations of a strategy")
    s.add_argument("--variant", choices=("full", "skp"), default="skp")
    s.add_argument("--strategy", required=True,
                   help="comma-separated frequencies (skp: b_J,c_K,d_Q; full: all seven)")
    s.set_defaults(func=cmd_expectations)

    s = sub.add_parser("scan", parents=[common, pot], help="numeric support enumeration")
    s.add_argument("--variant", choices=("full", "skp"), default="skp")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("maxmin", parents=[common, pot], help="restricted maxmin table")
    s.set_defaults(func=cmd_maxmin)

    def ode_flags(s, rtol, atol):
        s.add_argument("--k", default="1,1,1", help="gains k1,k2,k3")
        s.add_argument("--rtol", type=float, default=rtol)
        s.add_argument("--atol", type=float, default=atol)
        s.add_argument("--samples", type=int, default=2001, help="output grid size")

    s = sub.add_parser("ode", parents=[common, pot], help="integrate the frequency dynamics")
    s.add_argument("--init", required=True, help="b,c,d")
    s.add_argument("--t-end", type=float, default=1000.0)
    ode_flags(s, 1e-8, 1e-10)
    s.set_defaults(func=cmd_ode)

    s = sub.add_parser("manifold", parents=[common, pot], help="backward trace of S3's stable manifold")
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--t-back", type=float, default=2500.0)
    ode_flags(s, 1e-10, 1e-12)
    s.set_defaults(func=cmd_manifold)

    s = sub.add_parser("sim", parents=[common, pot_opt], help="repeated play with adaptation")
    s.add_argument("--config", help="JSON simulation config")
    s.add_argument("--rounds", type=int, default=None)
    s.add_argument("--record-every", type=int, default=None)
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("calibrate", parents=[common, pot_opt], help="estimator mean/std versus window length")
    s.add_argument("--config", help="JSON calibration config")
    s.add_argument("--freqs", help="fixed b,c,d (default: the chosen solution)")
    s.add_argument("--solution", type=int, default=3)
    s.add_argument("--L", help="comma-separated window lengths")
    s.add_argument("--rounds", type=int, default=None)
    s.set_defaults(func=cmd_calibrate)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
