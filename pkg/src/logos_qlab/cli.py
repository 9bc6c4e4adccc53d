"""Command-line entry point.

Every command prints one JSON report (or a text rendering of it)::

    {"command": ..., "inputs_digest": ..., "verdict": ..., "details": {...}}

The exit status reports whether the tool ran, not the mathematical verdict:
a proven non-existence is a successful run. Reports are byte-identical for
identical inputs, seed and tolerance; wall time is only included with
``--timing``.
"""

from __future__ import annotations

import argparse
import json
import hashlib
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .arrangements import (
    arrangement_knowledge,
    basis_invariance_trial,
    build_arrangement,
    check_factorization,
    derive_subarrangement,
    factorization_invariance_trial,
    factorizations,
    power_effect,
)
from .contextuality import (
    flat_enumeration,
    intensive_certificate,
    search_binary_valuation,
    verify_instance,
)
from .errors import IncompleteSetError, QLabError
from .graph import build_power_graph, enumerate_contexts, export_graph, to_adjacency
from .individuals import (
    atomist_contrast,
    find_minimal_individual,
    reconstruct,
)
from .linalg import DEFAULT_TOL, check_tol
from .valuation import GivTable, make_giv, potentia, random_state, validate_isa

TOL_ENV = "LOGOS_QLAB_TOL"
INVARIANCE_THRESHOLD = 1e-10


class CliError(Exception):
    """Input problem that should end the run with a nonzero exit code."""


@dataclass
class RunConfig:
    tolerance: float = DEFAULT_TOL
    seed: int = 0
    format: str = "json"
    output_path: str | None = None
    timing: bool = False


class Inputs:
    """Reads input files once and hashes their bytes for the report digest."""

    def __init__(self):
        self._seen: dict[str, bytes] = {}

    def read(self, flag: str, path: str) -> bytes:
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {flag} {path}: {exc.strerror}") from None
        self._seen[flag] = data
        return data

    def note(self, flag: str, value: str) -> None:
        self._seen[flag] = value.encode()

    def digest(self) -> str:
        h = hashlib.sha256()
        for flag in sorted(self._seen):
            h.update(flag.encode() + b"\0" + self._seen[flag] + b"\0")
        return h.hexdigest()


def _parse(fn, flag: str, data: bytes, *args):
    try:
        return fn(data, *args)
    except QLabError as exc:
        raise CliError(f"{flag}: {exc}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _instance(args, inputs: Inputs):
    if args.instance:
        return _parse(formats.parse_instance, "--instance", inputs.read("--instance", args.instance))
    inputs.note("--instance", "bundled:cabello18")
    return formats.bundled_instance()


# --------------------------------------------------------------------------- #
# Commands. Each returns (verdict, details).
# --------------------------------------------------------------------------- #

def cmd_validate(args, cfg: RunConfig, inputs: Inputs):
    if not (args.state or args.pool or args.instance):
        raise CliError("validate needs at least one of --state, --pool, --instance")
    details = {}
    ok = True
    if args.state:
        data = inputs.read("--state", args.state)
        try:
            st = formats.parse_state(data, cfg.tolerance)
            details["state"] = {"passed": True, "dim": st.dim, "purity": st.purity}
        except formats.SchemaError as exc:
            raise CliError(f"--state: {exc}") from None
        except QLabError as exc:
            details["state"] = {"passed": False, "error": str(exc)}
            ok = False
    if args.pool:
        data = inputs.read("--pool", args.pool)
        try:
            pool = formats.parse_pool(data, cfg.tolerance)
            g = build_power_graph(pool, cfg.tolerance)
            details["pool"] = {
                "passed": True,
                "dim": g.dim,
                "powers": len(pool),
                "edges": len(g.edges),
                "contexts": len(enumerate_contexts(g)),
            }
        except formats.SchemaError as exc:
            raise CliError(f"--pool: {exc}") from None
        except QLabError as exc:
            details["pool"] = {"passed": False, "error": str(exc)}
            ok = False
    if args.instance:
        inst = _instance(args, inputs)
        rep = verify_instance(inst, cfg.tolerance)
        details["instance"] = rep.to_dict()
        ok = ok and rep.passed
    return ("pass" if ok else "fail"), details


def cmd_graph(args, cfg, inputs):
    pool = _parse(formats.parse_pool, "--pool", inputs.read("--pool", args.pool), cfg.tolerance)
    g = _lib(build_power_graph, pool, cfg.tolerance)
    contexts = enumerate_contexts(g)
    if args.dot:
        Path(args.dot).write_text(export_graph(g, "dot"), encoding="utf-8")
    return "pass", {
        "vertex_count": len(g.powers),
        "edge_count": len(g.edges),
        "contexts": [list(c) for c in contexts],
        "adjacency": to_adjacency(g),
        "dot": export_graph(g, "dot") if args.export == "dot" else None,
    }


def cmd_isa_check(args, cfg, inputs):
    pool = _parse(formats.parse_pool, "--pool", inputs.read("--pool", args.pool), cfg.tolerance)
    g = _lib(build_power_graph, pool, cfg.tolerance)
    contexts = enumerate_contexts(g)
    families = []
    if args.values:
        doc = _parse(formats.load_json, "--values", inputs.read("--values", args.values),
                     formats.VALUES_SCHEMA)
        table = _lib(GivTable, g, tuple(doc["values"]))
        families = doc.get("families", [])
        source = "table"
    elif args.state:
        st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
        table = _lib(make_giv, st, g, cfg.tolerance)
        source = "state"
    else:
        raise CliError("isa-check needs --state or --values")
    rep = _lib(validate_isa, table, contexts, cfg.tolerance, families)
    details = rep.to_dict()
    details.update(source=source, values=list(table.values))
    return ("pass" if rep.passed else "fail"), details


def cmd_ks(args, cfg, inputs):
    inst = _instance(args, inputs)
    rep = verify_instance(inst, cfg.tolerance)
    if not rep.passed:
        raise CliError(f"--instance failed verification: {rep.failures[:3]}")
    val, stats = search_binary_valuation(inst, cfg.tolerance)
    details = {
        "vectors": len(inst),
        "contexts": len(rep.info["contexts"]),
        "found": val is not None,
        "assignment": None if val is None else list(val.assignment),
        "nodes": stats.nodes,
        "searches": stats.searches,
    }
    if cfg.timing:
        details["search_wall_time_ms"] = round(stats.wall_time_ms, 3)
    if args.cross_check:
        total, valid = flat_enumeration(inst, rep.info["contexts"], cfg.tolerance)
        details["flat_enumeration"] = {"candidates": total, "valid": valid}
        if (valid > 0) != (val is not None):
            raise CliError("backtracking and flat enumeration disagree")
    return ("found" if val is not None else "not-found"), details


def cmd_certify(args, cfg, inputs):
    inst = _instance(args, inputs)
    if args.state:
        states = [_parse(formats.parse_state, "--state", inputs.read("--state", args.state),
                         cfg.tolerance)]
    else:
        inputs.note("--random", str(args.random))
        states = [random_state(inst.dim, "pure", cfg.seed + k) for k in range(args.random)]
    certs = [_lib(intensive_certificate, st, inst, cfg.tolerance) for st in states]
    worst = max(c.max_deviation for c in certs)
    details = {"states": len(certs), "max_deviation": worst,
               "passed": all(c.passed for c in certs)}
    if len(certs) == 1:
        details.update(certs[0].to_dict())
    return ("pass" if details["passed"] else "fail"), details


def cmd_arrange(args, cfg, inputs):
    st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
    dims = args.factors or [st.dim]
    inputs.note("--factors", ",".join(map(str, dims)))
    bases = None
    if args.bases:
        bases = _parse(formats.parse_bases, "--bases", inputs.read("--bases", args.bases), dims)
    ea = _lib(build_arrangement, st, dims, bases, cfg.tolerance)
    if args.keep is not None:
        inputs.note("--keep", ",".join(map(str, args.keep)))
        ea = _lib(derive_subarrangement, ea, args.keep)
    effects = {"".join(map(str, mi)): power_effect(ea, mi, cfg.tolerance) for mi in ea.multi_indices()}
    return "pass", {
        "arrangement": formats.dump_arrangement(ea),
        "power_effects": effects,
        "knowledge": arrangement_knowledge(ea).to_dict(),
    }


def cmd_invariance(args, cfg, inputs):
    st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
    if args.factors:
        facts = [tuple(_lib(check_factorization, args.factors, st.dim))]
        inputs.note("--factors", ",".join(map(str, args.factors)))
    else:
        facts = factorizations(st.dim)
    inputs.note("--trials", str(args.trials))
    rng = np.random.default_rng(cfg.seed)
    per = []
    for f in facts:
        b = [basis_invariance_trial(st, f, rng) for _ in range(args.trials)]
        s = [factorization_invariance_trial(st, f, rng) for _ in range(args.trials)]
        per.append({
            "factor_dims": list(f),
            "basis_max_deviation": max(t["max_deviation"] for t in b),
            "basis_degree_changes": sum(t["degree_before"] != t["degree_after"] for t in b),
            "factorization_max_deviation": max(t["max_deviation"] for t in s),
            "alpha_max_hermiticity": max(t["alpha_hermiticity"] for t in b + s),
            "alpha_max_trace_deviation": max(t["alpha_trace_deviation"] for t in b + s),
        })
    worst = max(max(p["basis_max_deviation"], p["factorization_max_deviation"]) for p in per)
    ok = worst <= INVARIANCE_THRESHOLD and all(p["basis_degree_changes"] == 0 for p in per)
    return ("pass" if ok else "fail"), {
        "trials": args.trials,
        "threshold": INVARIANCE_THRESHOLD,
        "max_deviation": worst,
        "factorizations": per,
    }


def cmd_individual(args, cfg, inputs):
    pool = _parse(formats.parse_pool, "--pool", inputs.read("--pool", args.pool), cfg.tolerance)
    dim = pool[0].dim if pool else 0
    st = None
    if args.state:
        st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
    try:
        ind = find_minimal_individual(pool, dim, st, cfg.tolerance)
    except IncompleteSetError as exc:
        return "not-found", {"rank": exc.rank, "required": exc.required, "complete": False}
    except QLabError as exc:
        raise CliError(str(exc)) from None
    details = {"individual": formats.dump_individual(ind), "size": len(ind),
               "rank": ind.rank, "complete": ind.complete}
    if st is not None:
        rec = reconstruct(ind.powers, ind.potentia, dim, cfg.tolerance)
        details["reconstruction"] = rec.to_dict()
        details["reconstruction"]["frobenius_error"] = float(np.linalg.norm(rec.rho_hat - st.rho))
    return "found", details


def cmd_potentia(args, cfg, inputs):
    st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
    p = _parse(formats.parse_power, "--power", inputs.read("--power", args.power), cfg.tolerance)
    return "pass", {"label": p.label, "potentia": _lib(potentia, st, p, cfg.tolerance)}


def cmd_contrast(args, cfg, inputs):
    st = _parse(formats.parse_state, "--state", inputs.read("--state", args.state), cfg.tolerance)
    inputs.note("--site-dim", str(args.site_dim))
    inputs.note("--sites", str(args.sites))
    rep = _lib(atomist_contrast, args.site_dim, args.sites, st, cfg.tolerance)
    ok = rep.locally_indistinguishable and rep.jointly_distinguished
    return ("pass" if ok else "fail"), rep.to_dict()


def _lib(fn, *args):
    try:
        return fn(*args)
    except QLabError as exc:
        raise CliError(str(exc)) from None


COMMANDS = {
    "validate": cmd_validate,
    "graph": cmd_graph,
    "isa-check": cmd_isa_check,
    "ks": cmd_ks,
    "certify": cmd_certify,
    "arrange": cmd_arrange,
    "invariance": cmd_invariance,
    "individual": cmd_individual,
    "potentia": cmd_potentia,
    "contrast": cmd_contrast,
}


def _default_tol() -> float:
    env = os.environ.get(TOL_ENV)
    if env is None:
        return DEFAULT_TOL
    try:
        return check_tol(float(env))
    except (ValueError, QLabError):
        raise CliError(f"{TOL_ENV}={env!r} is not a tolerance in (0, 1)") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help=f"validation tolerance (default 1e-9, or ${TOL_ENV})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall-clock times")

    p = argparse.ArgumentParser(
        prog="logos-qlab",
        description="Intensive valuations of projector families: graphs, KS search, arrangements, individuals.",
    )
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    s = sub.add_parser("validate", parents=[common], help="check state / pool / instance files")
    s.add_argument("--state")
    s.add_argument("--pool")
    s.add_argument("--instance")

    s = sub.add_parser("graph", parents=[common], help="build the graph of powers of a pool")
    s.add_argument("--pool", required=True)
    s.add_argument("--export", choices=["dot", "adjacency-json"], default="adjacency-json")
    s.add_argument("--dot", help="also write the DOT rendering to this path")

    s = sub.add_parser("isa-check", parents=[common], help="check a valuation table against the axioms")
    s.add_argument("--pool", required=True)
    s.add_argument("--state")
    s.add_argument("--values")

    s = sub.add_parser("ks", parents=[common], help="search for a binary valuation")
    s.add_argument("--instance", help="KS instance JSON (default: bundled 18-vector set)")
    s.add_argument("--cross-check", action="store_true", help="also run flat enumeration")

    s = sub.add_parser("certify", parents=[common], help="intensive valuation certificate")
    s.add_argument("--instance")
    s.add_argument("--state")
    s.add_argument("--random", type=int, default=1, help="number of seeded random pure states")

    s = sub.add_parser("arrange", parents=[common], help="build an experimental arrangement")
    s.add_argument("--state", required=True)
    s.add_argument("--factors", type=_int_list)
    s.add_argument("--bases")
    s.add_argument("--keep", type=_int_list, help="screens to keep (0-based)")

    s = sub.add_parser("invariance", parents=[common], help="basis / factorization invariance trials")
    s.add_argument("--state", required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--factors", type=_int_list)

    s = sub.add_parser("individual", parents=[common], help="minimal quantum individual of a pool")
    s.add_argument("--pool", required=True)
    s.add_argument("--state")

    s = sub.add_parser("potentia", parents=[common], help="evaluate a power on a state")
    s.add_argument("--state", required=True)
    s.add_argument("--power", required=True)

    s = sub.add_parser("contrast", parents=[common], help="local vs joint determination")
    s.add_argument("--state", required=True)
    s.add_argument("--site-dim", type=int, default=2)
    s.add_argument("--sites", type=int, default=2)
    return p


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}", f"verdict: {report['verdict']}",
             f"inputs_digest: {report['inputs_digest']}"]
    if "wall_time_ms" in report:
        lines.append(f"wall_time_ms: {report['wall_time_ms']}")
    for key in sorted(report["details"]):
        val = report["details"][key]
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True, separators=(",", ":"))
        lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"


def run(argv: list[str] | None = None) -> tuple[dict | None, int]:
    """Parse ``argv``, execute the command, emit the report; returns (report, exit code)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return None, int(exc.code or 0)
    try:
        tol = _default_tol() if args.tol is None else check_tol(args.tol)
        if getattr(args, "trials", 1) < 1:
            raise CliError("--trials must be positive")
        cfg = RunConfig(tol, args.seed, args.format, args.output, args.timing)
        inputs = Inputs()
        start = time.perf_counter()
        verdict, details = COMMANDS[args.command](args, cfg, inputs)
        elapsed = time.perf_counter() - start
    except (CliError, QLabError) as exc:
        print(f"logos-qlab {args.command}: error: {exc}", file=sys.stderr)
        return None, 1
    report = {
        "command": args.command,
        "inputs_digest": inputs.digest(),
        "verdict": verdict,
        "config": {"tolerance": cfg.tolerance, "seed": cfg.seed},
        "details": details,
    }
    if cfg.timing:
        report["wall_time_ms"] = int(round(elapsed * 1000))
    text = formats.dumps(report) if cfg.format == "json" else render_text(report)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report, 0


def main(argv: list[str] | None = None) -> int:
    return run(argv)[1]


if __name__ == "__main__":
    sys.exit(main())
