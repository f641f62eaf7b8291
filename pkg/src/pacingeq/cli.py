"""Command-line entry point: generate, solve, check, simulate, export.

Exit codes: 0 success, 1 invalid input, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any

from .auctions import AuctionFormat, revenue_equivalence_report
from .equilibrium import (
    SolveOptions,
    check_budgets,
    check_colinear_pacing,
    check_monotonicity,
    solve_equilibrium,
)
from .instance import (
    AuctionInstance,
    InstanceError,
    PacingProfile,
    gen_arc_instance,
    gen_grid_instance,
    validate_instance,
)

log = logging.getLogger("pacingeq")

EXPORT_KINDS = ("paced-vectors", "shading-surface", "revenue")
CSV_HEADERS = {
    "paced-vectors": ["w1", "w2", "B", "t", "pw1", "pw2"],
    "shading-surface": ["w1", "w2", "factor"],
    "revenue": ["format", "type", "analytic", "mc", "se"],
}


class UsageError(Exception):
    """Malformed command line."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def instance_digest(instance: AuctionInstance) -> str:
    """SHA-256 of the canonical JSON form; unchanged by re-serialization."""
    canon = json.dumps(instance.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    instance_digest: str | None = None
    options: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    version: str = field(default_factory=_version)
    duration_s: float = 0.0
    outcome: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InstanceError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc


def _read_instance(path: str) -> AuctionInstance:
    data = _read_json(path)
    # reports embed their instance
    if isinstance(data, dict) and "instance" in data and "buyers" not in data:
        data = data["instance"]
    return validate_instance(data)


def _read_profile(path: str, instance: AuctionInstance) -> tuple[PacingProfile, float]:
    """Profile plus the multiplier resolution its solve report recorded (0 for bare lists)."""
    data = _read_json(path)
    resolution = 0.0
    if isinstance(data, dict):
        report = data.get("report", data)
        resolution = float(report.get("diagnostics", {}).get("budget_resolution", 0.0))
        data = report.get("profile")
    if not isinstance(data, list):
        raise InstanceError(f"{path}: no profile found")
    try:
        return PacingProfile(data).check(instance), resolution
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc


def _write_json(obj: Any, path: str | None) -> None:
    text = json.dumps(obj, indent=1)
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def export_results(document: dict[str, Any], path: str, kind: str) -> int:
    """Write figure data from a saved document as CSV; returns the row count."""
    if kind not in EXPORT_KINDS:
        raise InstanceError(f"unknown export kind {kind!r}")
    rows: list[list[Any]] = []
    instance = document.get("instance")
    if kind in ("paced-vectors", "shading-surface") and instance and "report" in document:
        profile = document["report"]["profile"]
        for buyer, t in zip(instance["buyers"], profile):
            w = buyer["weights"]
            factor = 1.0 / (1.0 + t)
            if kind == "paced-vectors":
                rows.append([w[0], w[1], buyer["budget"], t, w[0] * factor, w[1] * factor])
            else:
                rows.append([w[0], w[1], factor])
    elif kind == "revenue" and "revenue" in document:
        rev = document["revenue"]
        for fmt, pays in rev["per_type"].items():
            for i, pay in enumerate(pays):
                rows.append([fmt, i, pay, "", ""])
            sim = rev["simulated"].get(fmt)
            rows.append([fmt, "total", rev["analytic_total"][fmt],
                         sim["mean"] if sim else "", sim["std_error"] if sim else ""])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADERS[kind])
        writer.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    return len(rows)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pacingeq", description="Pacing equilibria of budget-constrained auctions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate an instance")
    gen_kind = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    arc = gen_kind.add_parser("arc", help="quarter-annulus example, two basis items")
    arc.add_argument("--a", type=float, default=2.0)
    arc.add_argument("--b", type=float, default=3.0)
    arc.add_argument("--count", type=int, default=320)
    arc.add_argument("--out", required=True)
    grid = gen_kind.add_parser("grid", help="10x10 weight grid, 10 simplex items, n=3")
    grid.add_argument("--points", type=int, default=10)
    grid.add_argument("--budget", type=float, default=0.6)
    grid.add_argument("--n", type=int, default=3)
    grid.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="run damped best-response dynamics")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--damping", type=float, default=SolveOptions.damping)
    solve.add_argument("--max-rounds", type=int, default=SolveOptions.max_rounds)
    solve.add_argument("--tol", type=float, default=SolveOptions.fixpoint_tol)
    solve.add_argument("--budget-tol", type=float, default=SolveOptions.budget_tol)
    solve.add_argument("--out")

    check = sub.add_parser("check", help="structural checks on a profile")
    check.add_argument("what", choices=["budgets", "monotone", "colinear"])
    check.add_argument("--instance", required=True)
    check.add_argument("--profile", required=True, help="solve report or JSON list of multipliers")
    check.add_argument("--resolution", type=float,
                       help="budgets only: multiplier uncertainty (default: the report's solver resolution)")
    check.add_argument("--out")

    sim = sub.add_parser("simulate", help="Monte Carlo revenue against the analytic total")
    sim.add_argument("--instance", required=True)
    sim.add_argument("--profile", required=True)
    sim.add_argument("--format", choices=[f.value for f in AuctionFormat], default="fp")
    sim.add_argument("--samples", type=int, default=100_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out")

    exp = sub.add_parser("export", help="CSV figure data from a saved report")
    exp.add_argument("--report", required=True)
    exp.add_argument("--kind", choices=EXPORT_KINDS, required=True)
    exp.add_argument("--out", required=True)
    return parser


def _cmd_gen(args) -> dict[str, Any]:
    if args.kind == "arc":
        instance = gen_arc_instance(args.a, args.b, args.count)
        opts = {"a": args.a, "b": args.b, "count": args.count}
    else:
        instance = gen_grid_instance(args.points, args.budget, args.n)
        opts = {"points": args.points, "budget": args.budget, "n": args.n}
    Path(args.out).write_text(json.dumps(instance.to_dict(), indent=1) + "\n")
    return {"instance": instance, "options": opts, "outcome": {"buyers": instance.num_buyers}}


def _cmd_solve(args) -> dict[str, Any]:
    instance = _read_instance(args.instance)
    try:
        options = SolveOptions(args.damping, args.max_rounds, args.tol, args.budget_tol)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc
    report = solve_equilibrium(instance, options)
    if not report.converged:
        print(f"warning: not converged after {report.rounds} rounds "
              f"(residual {report.linf_residual:.3g})", file=sys.stderr)
    return {
        "instance": instance,
        "options": asdict(options),
        "document": {"instance": instance.to_dict(), "report": report.to_dict()},
        "outcome": {"converged": report.converged, "rounds": report.rounds,
                    "max_budget_violation": report.max_budget_violation},
    }


def _cmd_check(args) -> dict[str, Any]:
    instance = _read_instance(args.instance)
    profile, resolution = _read_profile(args.profile, instance)
    if args.resolution is not None:
        if args.resolution < 0:
            raise InstanceError("resolution must be nonnegative")
        resolution = args.resolution
    options: dict[str, Any] = {"check": args.what}
    if args.what == "budgets":
        rows = check_budgets(instance, profile, resolution=resolution)
        result: dict[str, Any] = {"types": rows, "resolution": resolution,
                                  "max_violation": max((r["violation"] / r["budget"] for r in rows), default=0.0)}
        summary = {"max_violation": result["max_violation"]}
        options["resolution"] = resolution
    elif args.what == "monotone":
        result = check_monotonicity(instance, profile)
        summary = {"violations": result["count"], "vacuous": result["vacuous"]}
    else:
        result = check_colinear_pacing(instance, profile)
        summary = {"max_deviation": result["max_deviation"]}
    return {"instance": instance, "options": options,
            "document": {"check": args.what, "result": result}, "outcome": summary}


def _cmd_simulate(args) -> dict[str, Any]:
    if args.samples < 1:
        raise InstanceError("samples must be >= 1")
    instance = _read_instance(args.instance)
    profile, _ = _read_profile(args.profile, instance)
    try:
        rev = revenue_equivalence_report(instance, profile, [args.format], args.samples, args.seed)
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc
    sim = rev.simulated[args.format]
    return {
        "instance": instance,
        "seed": args.seed,
        "options": {"format": args.format, "samples": args.samples},
        "document": {"instance": instance.to_dict(), "revenue": rev.to_dict()},
        "outcome": {"analytic": rev.analytic_total[args.format], "mc": sim.mean,
                    "se": sim.std_error, "flags": rev.flags},
    }


def _cmd_export(args) -> dict[str, Any]:
    document = _read_json(args.report)
    if not isinstance(document, dict):
        raise InstanceError(f"{args.report}: not a report")
    count = export_results(document, args.out, args.kind)
    return {"options": {"kind": args.kind}, "outcome": {"rows": count}}


COMMANDS = {"gen": _cmd_gen, "solve": _cmd_solve, "check": _cmd_check,
            "simulate": _cmd_simulate, "export": _cmd_export}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage() + str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](args)
    except (InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    instance = result.get("instance")
    manifest = RunManifest(
        command=" ".join([args.command] + ([args.kind] if args.command == "gen" else [])
                         + ([args.what] if args.command == "check" else [])),
        instance_digest=instance_digest(instance) if instance is not None else None,
        options=result.get("options", {}),
        seed=result.get("seed"),
        duration_s=time.perf_counter() - start,
        outcome=result.get("outcome", {}),
    )
    out = getattr(args, "out", None)
    document = result.get("document")
    try:
        if document is not None:
            _write_json(document, out)
        if out:
            # timing lives beside the report so reports stay bit-reproducible
            _write_json(manifest.to_dict(), f"{out}.manifest.json")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if out or document is None:
        print(json.dumps(manifest.to_dict()))
    return 0


def main() -> None:
    sys.exit(run_cli())
