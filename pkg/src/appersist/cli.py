"""Command-line front end.

Exit codes: 0 success, 1 usage or I/O error, 2 hypothesis validation failure,
3 uncertain verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import ConfigError, load_system
from .integrator import InitialHistory, integrate
from .lyapunov import T_CAP, block_exponents, characteristic_root
from .model import ValidationError, validate
from .persistence import MARGIN_TOL, UNCERTAIN, ClassifyOptions, classify, default_histories, empirical_check
from .robustness import RECURRENCE_TOL, hull_demo, recurrence_scan
from .signals import conley_miller
from .structure import structure_of

log = logging.getLogger("appersist")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_UNCERTAIN = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    system: Path | None = None
    overrides: dict = field(default_factory=dict)
    out: Path | None = None
    emit_json: bool = False
    strict: bool = False

    def __post_init__(self):
        for key in ("h", "T", "T_cap", "margin_tol", "slope_tol", "tol", "renorm_period",
                    "grid_step", "horizon", "W"):
            v = self.overrides.get(key)
            if v is not None and not v > 0:
                raise UsageError(f"--{key.replace('_', '-')} must be positive")


def _write_json(path: Path, record) -> None:
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])


def _emit(cfg: RunConfig, record: dict, text: str) -> None:
    if cfg.emit_json:
        print(json.dumps(record, indent=2, sort_keys=True))
    else:
        print(text)
    if cfg.out is not None:
        _write_json(cfg.out / f"{cfg.subcommand}.json", record)


def _fmt_set(s) -> str:
    return "{" + ", ".join(str(j + 1) for j in sorted(s)) + "}"


def _check_valid(cfg, system) -> int | None:
    report = validate(system, cfg.overrides.get("grid_step") or 0.01, cfg.overrides.get("horizon") or 1000.0)
    if report.ok:
        return None
    for c in report.failures():
        where = f" patch {c.index + 1}" if c.index is not None else ""
        print(f"({c.name}) fails{where}: witness t = {c.witness_t}, value = {c.witness_value}", file=sys.stderr)
    return EXIT_INVALID


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig) -> int:
    system = load_system(cfg.system)
    report = validate(system, cfg.overrides.get("grid_step") or 0.01, cfg.overrides.get("horizon") or 1000.0)
    lines = [f"system: {cfg.system}  n = {system.n}"]
    for c in report.checks:
        where = f" patch {c.index + 1}" if c.index is not None else ""
        status = "pass" if c.passed else "FAIL"
        extra = "" if c.passed else f"  witness t = {c.witness_t:.6g}, value = {c.witness_value:.6g}"
        lines.append(f"  ({c.name}){where}: {status}  [{c.note}]{extra}")
    lines.append(f"d0 = {report.d0}  c0 = {report.c0}")
    lines.append("all hypotheses hold" if report.ok else "hypotheses violated")
    _emit(cfg, report.to_dict(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_structure(cfg: RunConfig) -> int:
    system = load_system(cfg.system)
    code = _check_valid(cfg, system)
    if code is not None:
        return code
    pattern, b = structure_of(system)
    text = "\n".join([
        f"permutation: {[p + 1 for p in b.permutation]}",
        f"blocks ({b.k}): " + ", ".join(_fmt_set(blk) for blk in b.blocks),
        f"I = {_fmt_set(b.I)}  J = {_fmt_set(b.J)}  (block numbers)",
    ])
    record = b.to_dict()
    record["nonzero"] = [list(r) for r in pattern.nonzero]
    _emit(cfg, record, text)
    return EXIT_OK


def _exponent_kwargs(cfg):
    o = cfg.overrides
    return dict(
        T=o.get("T") or None,
        T_cap=o.get("T_cap") or T_CAP,
        h=o.get("h"),
        renorm_period=o.get("renorm_period"),
        slope_tol=o.get("slope_tol") or 1e-3,
    )


def cmd_exponents(cfg: RunConfig) -> int:
    system = load_system(cfg.system)
    code = _check_valid(cfg, system)
    if code is not None:
        return code
    _, b = structure_of(system)
    kw = _exponent_kwargs(cfg)
    T = kw.pop("T") or max(1000.0, 100.0 * max(system.delays))
    exps = block_exponents(system, T=T, structure=b, **kw)
    lines = []
    for j, e in exps.items():
        lines.append(
            f"block {j + 1} {_fmt_set(b.blocks[j])}: lambda = {e.value:.6g}  status = {e.status}"
            f"  dispersion = {e.dispersion:.3g}  T = {e.horizon:g}  renorms = {e.renorm_count}")
    record = {"blocks": [list(blk) for blk in b.blocks],
              "exponents": {str(j): e.to_dict() for j, e in exps.items()}}
    _emit(cfg, record, "\n".join(lines))
    if cfg.out is not None:
        _write_csv(cfg.out / "exponents.csv", ["block", "value", "status", "dispersion", "T", "renorm_count"],
                   [[j + 1, e.value, e.status, e.dispersion, e.horizon, e.renorm_count] for j, e in exps.items()])
        _write_csv(cfg.out / "window_slopes.csv", ["block", "window", "slope"],
                   [[j + 1, q, s] for j, e in exps.items() for q, s in enumerate(e.window_slopes)])
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    system = load_system(cfg.system)
    code = _check_valid(cfg, system)
    if code is not None:
        return code
    kw = _exponent_kwargs(cfg)
    opts = ClassifyOptions(margin_tol=cfg.overrides.get("margin_tol") or MARGIN_TOL, **kw)
    v = classify(system, opts)
    lines = ["blocks: " + ", ".join(_fmt_set(blk) for blk in v.structure.blocks),
             f"I = {_fmt_set(v.I)}  J = {_fmt_set(v.J)}"]
    for j, e in sorted(v.exponents.items()):
        lines.append(f"  block {j + 1}: lambda = {e.value:.6g} ({e.status})")
    lines.append(f"verdict: u0={v.u0} s0={v.s0}  margin = {v.margin:.3g} (block {v.decisive_block + 1})")
    _emit(cfg, v.to_dict(), "\n".join(lines))
    if cfg.out is not None:
        _write_csv(cfg.out / "exponents.csv", ["block", "value", "status", "dispersion", "T", "renorm_count"],
                   [[j + 1, e.value, e.status, e.dispersion, e.horizon, e.renorm_count]
                    for j, e in sorted(v.exponents.items())])
    if cfg.strict and UNCERTAIN in (v.u0, v.s0):
        return EXIT_UNCERTAIN
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    system = load_system(cfg.system)
    code = _check_valid(cfg, system)
    if code is not None:
        return code
    o = cfg.overrides
    T = o.get("T") or 200.0
    consts = o.get("history")
    if consts:
        histories = [(f"const {v:g}", InitialHistory.constant([v] * system.n)) for v in consts]
    else:
        histories = default_histories(system)
    report = empirical_check(system, histories, T=T, W=o.get("W"), h=o.get("h"))
    lines = [f"T = {report.T:g}, tail window W = {report.W:g}"]
    for out in report.outcomes:
        lines.append(f"  {out.label}: tail min = {[round(x, 6) for x in out.tail_min]}"
                     f"  u0 witness = {out.u0_witness:.6g}  s0 witness = {out.s0_witness:.6g}"
                     f"  clamps = {out.clamp_events}")
    _emit(cfg, report.to_dict(), "\n".join(lines))
    if cfg.out is not None:
        for k, (label, hist) in enumerate(histories):
            integrate(system, hist, T, o.get("h")).to_csv(cfg.out / f"trajectory_{k}.csv")
    return EXIT_OK


def cmd_hull_demo(cfg: RunConfig) -> int:
    o = cfg.overrides
    N, T, tol = o.get("N") or 6, o.get("T") or 1e4, o.get("tol") or RECURRENCE_TOL
    if o.get("scan"):
        num, seed = o["scan"]
        f = conley_miller(N)
        scan = recurrence_scan(f, T, int(num), int(seed), tol)
        shifts = list(scan.shifts)
    else:
        shifts = o.get("shifts") or [0.0]
    rep = hull_demo(N, T, shifts, tol)
    lines = [
        f"f = conley_miller({N}), T = {T:g}, tol = {tol:g}, grid step = {rep.step:g}",
        f"base: min F over [1, T] = {rep.base_min_after_one:.6g}, F(T) = {rep.base_F[-1]:.6g}",
        f"translates: {len(rep.translates)}, recurrent fraction = {rep.recurrent_fraction:.4g}",
        "(finite-horizon approximation of recurrence at infinity)",
    ]
    _emit(cfg, rep.to_dict(), "\n".join(lines))
    if cfg.out is not None:
        _write_csv(cfg.out / "hull_demo.csv", ["shift", "minF_secondhalf", "recurrent"],
                   [[r.shift, r.min_F, int(r.recurrent)] for r in rep.translates])
        _write_csv(cfg.out / "base_F.csv", ["t", "F"], list(zip(rep.base_times, rep.base_F)))
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    d, beta, tau = cfg.overrides["args"]
    root = characteristic_root(d, beta, tau)
    _emit(cfg, {"d": d, "beta": beta, "tau": tau, "root": root}, f"{root:.10g}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "structure": cmd_structure,
    "exponents": cmd_exponents,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "hull-demo": cmd_hull_demo,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, help="directory for JSON records and CSV files")
    common.add_argument("--json", action="store_true", help="print the machine-readable record")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    numeric = _Parser(add_help=False)
    numeric.add_argument("--T", type=float)
    numeric.add_argument("--h", type=float)
    numeric.add_argument("--T-cap", dest="T_cap", type=float)
    numeric.add_argument("--renorm-period", type=float)
    numeric.add_argument("--slope-tol", type=float)
    numeric.add_argument("--margin-tol", type=float)
    numeric.add_argument("--grid-step", type=float)
    numeric.add_argument("--horizon", type=float)

    p = _Parser(prog="appersist", description="Persistence at 0 for almost periodic Nicholson systems.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in ("validate", "structure", "exponents"):
        sp = sub.add_parser(name, parents=[common, numeric])
        sp.add_argument("system", type=Path)
    sp = sub.add_parser("classify", parents=[common, numeric])
    sp.add_argument("system", type=Path)
    sp.add_argument("--strict", action="store_true", help="exit 3 when a verdict is uncertain")
    sp = sub.add_parser("simulate", parents=[common, numeric])
    sp.add_argument("system", type=Path)
    sp.add_argument("--history", type=float, nargs="+", help="constant initial values (default set if omitted)")
    sp.add_argument("--W", type=float, help="tail window length")
    sp = sub.add_parser("hull-demo", parents=[common])
    sp.add_argument("--N", type=int, default=6)
    sp.add_argument("--T", type=float, default=1e4)
    sp.add_argument("--tol", type=float, default=RECURRENCE_TOL)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--shifts", type=float, nargs="+")
    g.add_argument("--scan", type=int, nargs=2, metavar=("NUM", "SEED"))
    sp = sub.add_parser("oracle", parents=[common])
    sp.add_argument("which", choices=["char-root"])
    sp.add_argument("args", type=float, nargs=3, metavar=("D", "BETA", "TAU"))
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    skip = {"subcommand", "system", "out", "json", "strict", "verbose", "which"}
    overrides = {k: v for k, v in vars(ns).items() if k not in skip}
    if ns.subcommand == "hull-demo" and ns.N < 1:
        raise UsageError("--N must be >= 1")
    return RunConfig(ns.subcommand, getattr(ns, "system", None), overrides, ns.out, ns.json,
                     getattr(ns, "strict", False))


def run(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING)
    try:
        if cfg.out is not None:
            cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[cfg.subcommand](cfg)
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, OSError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
