"""Command-line entry point: single-point reports, parameter sweeps and the identity suite.

Exit codes: 0 success, 2 configuration error, 3 quadrature failure,
4 identity-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, SweepAxis, load_config, validate
from .currents import CurrentReport, ness_report
from .spectral_integrals import QuadratureError, build_kernel_table, resolved_spec
from .verify import run_identity_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_QUADRATURE = 3
EXIT_IDENTITY = 4

# First-order bath injection and dissipation inherit the cutoff dependence of
# their zeroth-order counterparts; only inter-site currents are cutoff-free.
FIRST_ORDER_CUTOFF_DEPENDENT = ("p_xi", "p_gamma")


def fmt(x: float) -> str:
    # Adding 0.0 folds negative zero into zero so signs of exact zeros never differ.
    return format(float(x) + 0.0, ".17g")


def _list(a: np.ndarray) -> Any:
    return np.asarray(a, dtype=float).tolist()


def report_to_dict(cfg: RunConfig, rep: CurrentReport, table_json: str | None = None) -> dict[str, Any]:
    z, f = rep.zeroth, rep.first_order
    out: dict[str, Any] = {
        "provenance": {
            "library_version": __version__,
            "units": "hbar = k_B = mass = 1",
            "config": cfg.to_dict(),
            "cutoff": z.cutoff,
            "cutoff_kind": cfg.cutoff_kind,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "max_subdivisions": cfg.max_subdivisions,
            "reference_bond": list(rep.reference_bond),
            "sign_convention": "p_inter[n][v] is the power flowing into site n from site v; site 0 is hot",
        },
        "zeroth_order": {
            "p_xi": _list(z.p_xi),
            "p_gamma": _list(z.p_gamma),
            "p_inter": _list(z.p_inter),
            "balance_residual": _list(z.balance_residual),
            "quadrature_error": {k: _list(v) for k, v in sorted(z.error.items())},
            "converged": z.converged,
            "cutoff_dependent": list(z.cutoff_dependent),
        },
        "first_order": {
            "p_xi": _list(f.p_xi),
            "p_gamma": _list(f.p_gamma),
            "p_inter2": _list(f.p_inter2),
            "p_inter4": _list(f.p_inter4),
            "p_inter": _list(f.p_inter),
            "balance_residual": _list(rep.balance_residual_first),
            "analytic_zero": f.analytic_zero,
            "cutoff_dependent": list(FIRST_ORDER_CUTOFF_DEPENDENT),
        },
        "nonlinearity": {"kind": rep.nonlinearity.kind.value, "strength": rep.nonlinearity.strength},
        "ratio": rep.ratio,
        "perturbative_validity": rep.perturbative_validity,
    }
    if table_json is not None:
        out["kernel_table"] = json.loads(table_json)
    return out


def report_to_csv(cfg: RunConfig, rep: CurrentReport) -> str:
    """Long format: one row per scalar with its order, quantity and site indices."""
    rows: list[list[str]] = []
    z, f = rep.zeroth, rep.first_order
    n = cfg.n_sites

    def add(order: str, name: str, arr: np.ndarray) -> None:
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            for i in range(n):
                rows.append([order, name, str(i), "", fmt(arr[i])])
        else:
            for i, j in itertools.product(range(n), repeat=2):
                if abs(i - j) == 1:
                    rows.append([order, name, str(i), str(j), fmt(arr[i, j])])

    add("0", "p_xi", z.p_xi)
    add("0", "p_gamma", z.p_gamma)
    add("0", "p_inter", z.p_inter)
    add("0", "balance_residual", z.balance_residual)
    add("1", "p_xi", f.p_xi)
    add("1", "p_gamma", f.p_gamma)
    add("1", "p_inter2", f.p_inter2)
    add("1", "p_inter4", f.p_inter4)
    add("1", "balance_residual", rep.balance_residual_first)
    rows.append(["", "ratio", "", "", fmt(rep.ratio)])
    rows.append(["", "perturbative_validity", "", "", str(rep.perturbative_validity).lower()])
    rows.append(["", "cutoff", "", "", fmt(z.cutoff)])
    return _csv_text(["order", "quantity", "site", "neighbor", "value"], rows)


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_point(cfg: RunConfig) -> CurrentReport:
    model = cfg.model()
    return ness_report(model, cfg.baths(model), cfg.nonlinearity_spec(), cfg.quadrature())


def cmd_currents(cfg: RunConfig) -> int:
    rep = run_point(cfg)
    if cfg.format == "csv":
        text = report_to_csv(cfg, rep)
    else:
        table_json = None
        if cfg.dump_kernel_table:
            model = cfg.model()
            baths = cfg.baths(model)
            table_json = build_kernel_table(model, baths, resolved_spec(model, baths, cfg.quadrature())).to_json()
        text = json.dumps(report_to_dict(cfg, rep, table_json), indent=2, sort_keys=True) + "\n"
    _write(text, cfg.output)
    return EXIT_OK


def sweep_header(cfg: RunConfig) -> list[str]:
    n = cfg.n_sites
    cols = [a.var for a in cfg.sweep]
    cols += ["p0_inter", "p0_balance_rel"]
    cols += [f"p1_xi_{i}" for i in range(n)] + [f"p1_gamma_{i}" for i in range(n)]
    cols += ["p1_inter2", "p1_inter4", "p1_inter", "ratio", "perturbative_validity", "p1_balance_rel", "cutoff", "error"]
    return cols


def sweep_points(cfg: RunConfig) -> list[dict[str, float]]:
    """Grid in lexicographic order, first axis slowest."""
    grids = [[(a.var, float(v)) for v in a.values()] for a in cfg.sweep]
    return [dict(p) for p in itertools.product(*grids)]


def _sweep_row(args: tuple[RunConfig, dict[str, float]]) -> list[str]:
    base, point = args
    cfg = replace(base, **point)
    n = cfg.n_sites
    lead = [fmt(point[a.var]) for a in base.sweep]
    n_num = len(sweep_header(base)) - len(lead) - 1
    try:
        validate(cfg)
        rep = run_point(cfg)
    except (ConfigError, QuadratureError, ValueError, np.linalg.LinAlgError) as exc:
        msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        return lead + ["nan"] * n_num + [msg]
    z, f = rep.zeroth, rep.first_order
    bond = rep.reference_bond
    p0 = float(z.p_inter[bond])
    scale = abs(p0) if p0 != 0 else 1.0
    cells = [fmt(p0), fmt(float(np.max(z.balance_residual)) / scale)]
    cells += [fmt(x) for x in f.p_xi] + [fmt(x) for x in f.p_gamma]
    cells += [fmt(f.p_inter2[bond]), fmt(f.p_inter4[bond]), fmt(f.p_inter[bond]), fmt(rep.ratio)]
    cells += [str(rep.perturbative_validity).lower(), fmt(float(np.max(rep.balance_residual_first)) / scale)]
    cells.append(fmt(z.cutoff))
    assert len(cells) == n_num and n == len(f.p_xi)
    return lead + cells + [""]


def worker_count() -> int:
    raw = os.environ.get("NESS_CHAIN_THREADS", "")
    cap = os.cpu_count() or 1
    if raw.strip():
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise ConfigError(f"NESS_CHAIN_THREADS must be an integer, got {raw!r}") from None
    return cap


def run_sweep(cfg: RunConfig, workers: int | None = None) -> str:
    if not cfg.sweep:
        raise ConfigError("sweep needs at least one --var")
    points = sweep_points(cfg)
    workers = min(workers or worker_count(), len(points))
    jobs = [(cfg, p) for p in points]
    if workers <= 1:
        rows = [_sweep_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    return _csv_text(sweep_header(cfg), rows)


def cmd_sweep(cfg: RunConfig) -> int:
    _write(run_sweep(cfg), cfg.output)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    model = cfg.model()
    checks = run_identity_suite(model, cfg.baths(model), cfg.strength, cfg.quadrature())
    lines = [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} identities passed")
    _write("\n".join(lines) + "\n", cfg.output)
    return EXIT_OK if failed == 0 else EXIT_IDENTITY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ness-chain", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", required=True, help="flat JSON configuration file")
        sp.add_argument("--out", help="output path (default stdout)")

    c = sub.add_parser("currents", help="zeroth- and first-order currents at one point")
    common(c)
    c.add_argument("--format", choices=("json", "csv"))
    c.add_argument("--dump-table", action="store_true", help="include the kernel table in JSON output")

    s = sub.add_parser("sweep", help="CSV table over one or two swept variables")
    common(s)
    s.add_argument("--var", action="append", default=[], help="variable to sweep (repeat for a second axis)")
    s.add_argument("--from", dest="start", action="append", type=float, default=[])
    s.add_argument("--to", dest="stop", action="append", type=float, default=[])
    s.add_argument("--steps", action="append", type=int, default=[], help="number of intervals")

    v = sub.add_parser("verify", help="run the identity suite")
    common(v)
    return p


def _apply_args(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    kw: dict[str, Any] = {}
    if args.out is not None:
        kw["output"] = args.out
    if getattr(args, "format", None):
        kw["format"] = args.format
    if getattr(args, "dump_table", False):
        kw["dump_kernel_table"] = True
    if args.command == "sweep" and args.var:
        counts = {len(args.var), len(args.start), len(args.stop), len(args.steps)}
        if len(counts) != 1:
            raise ConfigError("each --var needs its own --from, --to and --steps")
        kw["sweep"] = [SweepAxis(*t) for t in zip(args.var, args.start, args.stop, args.steps)]
    cfg = replace(cfg, **kw)
    validate(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_args(load_config(args.config), args)
        if args.command == "currents":
            return cmd_currents(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_verify(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE


if __name__ == "__main__":
    sys.exit(main())
