"""Command line front end: JSON-configured runs that write a report and CSV artifacts.

Exit codes: 0 all checks pass, 1 some check failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import arcflat, suite, trilap
from ._poly import RealPoly2, RealPoly3
from .almansi2d import almansi_decompose, almansi_reconstruct
from .schwarz import meromorphy_report, rational_boundary_residual
from .suite import Check, exact

SCHEMA = "1"

# allowed config fields per subcommand (all optional)
CONFIG_FIELDS = {
    "factorize3d": set(),
    "almansi": {"count", "degree", "max_N", "profile", "poly", "N"},
    "kernel-verify": {"grid_n", "step"},
    "schwarz": {"a", "b", "steps", "map", "c"},
    "quadcheck": {"map", "c", "nodes"},
    "arcflat": {"map", "c", "arc", "atoms", "solution"},
    "x1field": {"u", "profile"},
    "suite": {"only"},
}


class InputError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


def load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as e:
        raise InputError(f"cannot read config: {e}", "--config")
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}", "--config")
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object", "/")
    unknown = sorted(set(cfg) - CONFIG_FIELDS[command])
    if unknown:
        raise InputError(f"unknown config field {unknown[0]!r} for {command}", f"/{unknown[0]}")
    return cfg


def parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects name=value, got {item!r}", "--tol")
        try:
            out[name] = float(val)
        except ValueError:
            raise InputError(f"--tol value for {name!r} is not a number", "--tol")
    return out


def _field(cfg, key, kind, default=None):
    if key not in cfg:
        return default
    val = cfg[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise InputError(f"field {key!r} must be {kind.__name__}", f"/{key}")
    return val


def _pair(cfg, key):
    val = cfg.get(key)
    if val is None:
        return None
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(x, (int, float)) for x in val)):
        raise InputError(f"field {key!r} must be [re, im]", f"/{key}")
    return val


def _map(cfg):
    try:
        return suite.map_from_config(cfg.get("map"), _pair(cfg, "c"))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad map: {e}", "/map")


def _poly(cfg, key, cls):
    val = cfg[key]
    try:
        return cls.from_json(val)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad polynomial: {e}", f"/{key}")


# -- subcommands: each returns (checks, payload, artifacts{name: text}) ---------

def run_factorize3d(args, cfg):
    checks, products = suite.factorize3d()
    return checks, {}, {"products.json": json.dumps(products, sort_keys=True, indent=2)}


def run_almansi(args, cfg):
    if args.dim == 3:
        profile = _field(cfg, "profile", str, "canonical")
        if profile not in trilap.POISSON_PROFILES:
            raise InputError(f"profile must be one of {trilap.POISSON_PROFILES}", "/profile")
        if "poly" in cfg:
            u = _poly(cfg, "poly", RealPoly3)
            try:
                s = trilap.almansi3(u, profile)
            except trilap.NotBiharmonicError as e:
                raise InputError(str(e), "/poly")
            checks = [exact("reconstruction", s.v + trilap.X1 * s.w == u)]
            return checks, {"v": s.v.to_json(), "w": s.w.to_json()}, {}
        checks = suite.almansi3_suite(args.seed, _field(cfg, "count", int, 50),
                                      _field(cfg, "degree", int, 8), profile)
        return checks, {}, {}
    if "poly" in cfg:
        u = _poly(cfg, "poly", RealPoly2)
        N = _field(cfg, "N", int, 2)
        try:
            stack = almansi_decompose(u, N)
        except ValueError as e:
            raise InputError(str(e), "/poly")
        return [exact("reconstruction", almansi_reconstruct(stack) == u)], stack.to_json(), {}
    checks = suite.almansi2_suite(args.seed, _field(cfg, "count", int, 50),
                                  _field(cfg, "max_N", int, 4), _field(cfg, "degree", int, 12))
    return checks, {}, {}


def run_kernel(args, cfg):
    checks, rep = suite.kernel_checks(_field(cfg, "grid_n", int, 20), _field(cfg, "step", float, 1e-2))
    return checks, {"decay": rep.summary()}, {"kernel_decay.csv": rep.to_csv()}


def run_schwarz(args, cfg):
    if args.kind == "ellipse":
        a, b = _field(cfg, "a", float, 2.0), _field(cfg, "b", float, 1.0)
        try:
            checks = suite.ellipse_checks(a, b, _field(cfg, "steps", int, 720))
        except ValueError as e:
            raise InputError(str(e), "/a")
        return checks, {}, {}
    phi = _map(cfg)
    try:
        report = meromorphy_report(phi)
    except ValueError as e:
        raise InputError(str(e), "/map")
    checks = [Check("boundary_residual", rational_boundary_residual(phi), 1e-10)]
    return checks, {"meromorphy": report}, {}


def run_quadcheck(args, cfg):
    nodes = cfg.get("nodes")
    if nodes is not None:
        nodes = [complex(*_pair({"n": n}, "n")) for n in nodes]
    try:
        checks, data = suite.quad_checks(_map(cfg), nodes)
    except ValueError as e:
        raise InputError(str(e), "/nodes")
    return checks, {"quadrature": data}, {}


def run_arcflat(args, cfg):
    if args.action == "verify":
        path = _field(cfg, "solution", str)
        if path is None:
            raise InputError("verify needs a 'solution' path", "/solution")
        try:
            sol = arcflat.ArcFlatSolution.from_json(Path(path).read_text())
        except (OSError, KeyError, ValueError) as e:
            raise InputError(f"cannot load solution: {e}", "/solution")
        checks = [Check(k, v["measured"], v["tolerance"], v["relation"]) for k, v in sol.verify().items()]
        return checks, {}, {"decay.csv": sol.decay.to_csv()}
    arc = cfg.get("arc", {"theta0": suite.DISK_ARC[0], "theta1": suite.DISK_ARC[1]})
    try:
        arc = arcflat.ArcSpec(float(arc["theta0"]), float(arc["theta1"]))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad arc: {e}", "/arc")
    atoms = _field(cfg, "atoms", int)
    try:
        checks, sol = suite.arcflat_checks(_map(cfg), arc, atoms)
    except (ValueError, arcflat.InfeasibleMeasureError) as e:
        raise InputError(str(e), "/atoms" if "atom" in str(e) else "/map")
    return checks, {"solution": sol.to_json()}, {"solution.json": sol.dumps(), "decay.csv": sol.decay.to_csv()}


PRESETS = {"x1^3": RealPoly3({(3, 0, 0): 1}), "x1^3*x2": RealPoly3({(3, 1, 0): 1})}


def run_x1field(args, cfg):
    profile = _field(cfg, "profile", str, "canonical")
    if profile not in trilap.POISSON_PROFILES:
        raise InputError(f"profile must be one of {trilap.POISSON_PROFILES}", "/profile")
    if "u" not in cfg:
        checks, payload = suite.x1field_checks()
        return checks, payload, {}
    u = cfg["u"]
    if isinstance(u, str):
        if u not in PRESETS:
            raise InputError(f"unknown preset {u!r}; choose from {sorted(PRESETS)}", "/u")
        u = PRESETS[u]
    else:
        u = _poly(cfg, "u", RealPoly3)
    try:
        checks, payload = suite.x1field_checks(u, profile)
    except trilap.NotBiharmonicError as e:
        raise InputError(str(e), "/u")
    return checks, payload, {}


def run_suite(args, cfg):
    only = cfg.get("only", list(range(1, 11)))
    if not (isinstance(only, list) and all(isinstance(k, int) and 1 <= k <= 10 for k in only)):
        raise InputError("'only' must list criterion numbers 1..10", "/only")
    runs = suite.criterion_runs(args.seed)
    checks = []
    for k in sorted(set(only)):
        checks += [Check(f"criterion{k}:{c.name}", c.measured, c.tolerance, c.relation) for c in runs[k]()]
    return checks, {}, {}


COMMANDS = {"factorize3d": run_factorize3d, "almansi": run_almansi, "kernel-verify": run_kernel,
            "schwarz": run_schwarz, "quadcheck": run_quadcheck, "arcflat": run_arcflat,
            "x1field": run_x1field, "suite": run_suite}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with subcommand inputs")
    common.add_argument("--out", default=".", help="output directory for report.json and artifacts")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a check tolerance")
    p = argparse.ArgumentParser(prog="holmgren", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("factorize3d", parents=[common])
    a = sub.add_parser("almansi", parents=[common])
    a.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sub.add_parser("kernel-verify", parents=[common])
    s = sub.add_parser("schwarz", parents=[common])
    s.add_argument("kind", choices=("ellipse", "rational"))
    sub.add_parser("quadcheck", parents=[common])
    f = sub.add_parser("arcflat", parents=[common])
    f.add_argument("action", choices=("build", "verify"))
    sub.add_parser("x1field", parents=[common])
    sub.add_parser("suite", parents=[common])
    return p


def _label(args) -> str:
    extra = getattr(args, "kind", None) or getattr(args, "action", None)
    if args.command == "almansi":
        extra = f"dim{args.dim}"
    return f"{args.command} {extra}" if extra else args.command


def write_report(out: Path, report: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    out = Path(args.out)
    t0 = time.perf_counter()
    report = {"schema": SCHEMA, "subcommand": _label(args), "seed": args.seed}
    try:
        cfg = load_config(args.config, args.command)
        tol = parse_tol(args.tol)
        checks, payload, artifacts = COMMANDS[args.command](args, cfg)
    except InputError as e:
        report.update(passed=False, checks=[], artifacts=[], wall_time=round(time.perf_counter() - t0, 3),
                      error={"message": str(e), "field": e.field})
        write_report(out, report)
        print(f"holmgren: invalid input at {e.field}: {e}", file=sys.stderr)
        return 2
    suite.apply_overrides(checks, tol)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in sorted(artifacts.items()):
        (out / name).write_text(text if text.endswith("\n") else text + "\n")
        paths.append(str(out / name))
    passed = all(c.passed for c in checks)
    records, timings = [], {}
    for c in checks:
        rec = c.to_json()
        if c.name.endswith("runtime_s"):
            # seconds live under wall_time so the rest of the report is reproducible
            timings[c.name] = rec["measured"]
            rec["measured"] = None
        records.append(rec)
    report.update(passed=passed, checks=records, artifacts=paths,
                  wall_time={"total": round(time.perf_counter() - t0, 3), **timings})
    if payload:
        report["result"] = payload
    write_report(out, report)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.measured} {c.relation} {c.tolerance}")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"holmgren: failed checks: {', '.join(failed)}", file=sys.stderr)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
