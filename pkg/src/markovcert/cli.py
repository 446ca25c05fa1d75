"""Batch command-line interface.

Exit codes: 0 success, 2 parse or validation error, 3 coverage or
consistency error, 4 non-convergence. Reports are JSON; entropies are
stored in nats and ``--unit bits`` only changes the ``summary`` block.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

from . import io
from .entropy import entropy_report
from .errors import ConsistencyError, CoverageError, MarkovCertError
from .markov import assign_rdms, certificate
from .planner import generate_plan, load_grid_model, plan_from_ordering, plan_report
from .recovery import reconstruct
from .state import Region, SystemLayout, Tolerances
from .tomo import MeasurementPlan, find_consistent_state, simulate, verify

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_COVERAGE = 3
EXIT_NO_CONVERGENCE = 4


@dataclass
class RunConfig:
    command: str
    seed: int | None
    tol: Tolerances
    unit: str
    repair: bool
    output: str | None

    @property
    def scale(self) -> float:
        return 1.0 / math.log(2) if self.unit == "bits" else 1.0

    def read_kw(self):
        return {"repair": self.repair, "tol": self.tol}


def parse_sites(text: str) -> tuple[int, ...]:
    """``"0,2,3"`` -> ``(0, 2, 3)``; the empty string is the empty region."""
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad site list {text!r}") from None


def parse_groups(text: str) -> list[tuple[int, ...]]:
    """Colon-separated site groups: ``"0:1,2:3"`` -> ``[(0,), (1, 2), (3,)]``."""
    return [parse_sites(g) for g in text.split(":")]


def _groups(n: int):
    def parse(text):
        groups = parse_groups(text)
        if len(groups) != n:
            raise argparse.ArgumentTypeError(f"expected {n} ':'-separated groups, got {text!r}")
        return groups

    return parse


# -- commands ---------------------------------------------------------------


def cmd_entropy(args, cfg: RunConfig):
    state = io.read_state(args.state, **cfg.read_kw())
    quantities = []
    for kind in ("cond", "mi", "cmi", "wm"):
        quantities += [(kind, *g) for g in getattr(args, kind) or ()]
    regions = args.region or []
    if not regions and not quantities:
        regions = [tuple(state.sites.sites)]
    report = entropy_report(state, regions, quantities).to_dict()
    report["summary"] = {
        "unit": cfg.unit,
        "regions": [{"sites": r["sites"], "entropy": r["entropy_nats"] * cfg.scale} for r in report["regions"]],
        "quantities": [{"kind": q["kind"], "value": q["value"] * cfg.scale} for q in report["quantities"]],
    }
    return report, EXIT_OK


def _bundle_for(plan, path, cfg, need_forward=True):
    states = io.read_bundle(path, **cfg.read_kw())
    return assign_rdms(states, plan, "bundle", need_forward=need_forward)


def cmd_certify(args, cfg: RunConfig):
    plan = io.read_plan(args.plan)
    rdms = _bundle_for(plan, args.bundle, cfg)
    eps = io.read_epsilons(args.epsilons) if args.epsilons else None
    report = certificate(rdms, plan, eps).to_dict()
    report["summary"] = {
        "unit": cfg.unit,
        "term_sum": report["term_sum"] * cfg.scale,
        "correction_sum": report["correction_sum"] * cfg.scale,
        "bound": report["bound"],
    }
    return report, EXIT_OK


def cmd_reconstruct(args, cfg: RunConfig):
    plan = io.read_plan(args.plan)
    states = io.read_bundle(args.bundle, **cfg.read_kw())
    try:
        rdms = assign_rdms(states, plan, "bundle")
    except CoverageError:
        # backward shields suffice; the certificate is then skipped
        rdms = assign_rdms(states, plan, "bundle", need_forward=False)
    reference = io.read_state(args.reference, **cfg.read_kw()) if args.reference else None
    trace = reconstruct(rdms, plan, reference)
    if args.state_out:
        io.write_state(trace.state, args.state_out)
    return trace.to_dict(), EXIT_OK


def cmd_plan(args, cfg: RunConfig):
    d = io.load_json(args.grid_model)
    grid, model = load_grid_model(d)
    radius = int(d.get("radius", 1))
    if "ordering" in d:
        plan = plan_from_ordering(grid, [int(k) for k in d["ordering"]], radius)
    else:
        plan = generate_plan(grid, radius, d.get("order", "row"))
    report = plan_report(plan, model, grid)
    report["summary"] = {"unit": cfg.unit, "predicted_bound": report["predicted_bound"]}
    return report, EXIT_OK


def cmd_simulate(args, cfg: RunConfig):
    state = io.read_state(args.state, **cfg.read_kw())
    d = io.load_json(args.measurement_plan)
    if cfg.seed is not None:
        d = {**d, "seed": cfg.seed}
    mplan = MeasurementPlan.from_dict(d)
    measured = simulate(state, mplan)
    return io.bundle_to_dict(measured.values()), EXIT_OK


def cmd_verify(args, cfg: RunConfig):
    plan = io.read_plan(args.plan)
    measured = io.read_bundle(args.bundle, **cfg.read_kw())
    target = io.read_bundle(args.target, **cfg.read_kw())
    if len(target) == 1 and plan.sites.issubset(target[0].sites):
        target = target[0]
    verdict = verify(measured, target, plan)
    out = verdict.to_dict()
    out["summary"] = {"unit": cfg.unit, "verdict": verdict.verdict}
    return out, EXIT_OK


def cmd_consistent(args, cfg: RunConfig):
    states = io.read_bundle(args.bundle, **cfg.read_kw())
    full = Region().union(*(s.sites for s in states))
    dims = {}
    for s in states:
        for site, dim in zip(s.sites.sites, s.dims):
            dims[site] = dim
    layout = SystemLayout.from_dims([dims[k] for k in full.sites], sites=full.sites)
    tol = args.target_tol
    res = find_consistent_state(states, layout, max_iters=args.max_iters, tol=tol, sites=full)
    if args.state_out:
        io.write_state(res.state, args.state_out)
    out = {
        "converged": res.converged,
        "iterations": res.iterations,
        "max_residual": res.max_residual,
        "residuals": [{"sites": list(k), "distance": v} for k, v in res.residuals.items()],
    }
    return out, EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def add_globals(parser, default):
        # subparsers use SUPPRESS so a flag given before the command is not reset
        d = (lambda v: v) if default else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(None), help="override the RNG seed")
        parser.add_argument("--tol", type=float, default=d(None), help="hermiticity/trace/PSD tolerance for inputs")
        parser.add_argument("--unit", choices=("nats", "bits"), default=d("nats"), help="unit of the summary block")
        parser.add_argument("--repair", action="store_true", default=d(False), help="project slightly invalid input states")
        parser.add_argument("--output", "-o", default=d(None), help="write the JSON report here instead of stdout")

    p = argparse.ArgumentParser(prog="markovcert", description="Local-marginal certificates for quantum states.")
    add_globals(p, True)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, False)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entropy", parents=[common], help="entropies and derived quantities of a state")
    e.add_argument("state")
    e.add_argument("--region", action="append", type=parse_sites, help="sites, e.g. 0,1")
    e.add_argument("--cond", action="append", type=_groups(2), help="A:B for S(A|B)")
    e.add_argument("--mi", action="append", type=_groups(2), help="A:B for I(A:B)")
    e.add_argument("--cmi", action="append", type=_groups(3), help="A:B:C for I(A:C|B)")
    e.add_argument("--wm", action="append", type=_groups(3), help="A:B:C for S(A|B)+S(A|C)")
    e.set_defaults(func=cmd_entropy)

    c = sub.add_parser("certify", parents=[common], help="trace-distance certificate from an RDM bundle")
    c.add_argument("bundle")
    c.add_argument("plan")
    c.add_argument("--epsilons", default=None)
    c.set_defaults(func=cmd_certify)

    r = sub.add_parser("reconstruct", parents=[common], help="Petz reconstruction along a plan")
    r.add_argument("bundle")
    r.add_argument("plan")
    r.add_argument("--reference", default=None)
    r.add_argument("--state-out", default=None)
    r.set_defaults(func=cmd_reconstruct)

    g = sub.add_parser("plan", parents=[common], help="shield plan and predicted bound for a lattice model")
    g.add_argument("grid_model")
    g.set_defaults(func=cmd_plan)

    s = sub.add_parser("simulate", parents=[common], help="simulated local tomography")
    s.add_argument("state")
    s.add_argument("measurement_plan")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="certify closeness of measured RDMs to a target")
    v.add_argument("bundle")
    v.add_argument("target", help="target state or RDM bundle")
    v.add_argument("plan")
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("consistent", parents=[common], help="search for a global state matching an RDM bundle")
    k.add_argument("bundle")
    k.add_argument("--max-iters", type=int, default=2000)
    k.add_argument("--target-tol", type=float, default=1e-6)
    k.add_argument("--state-out", default=None)
    k.set_defaults(func=cmd_consistent)
    return p


def _error(code: int, msg: str) -> int:
    print(f"markovcert: error: {msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    tol = Tolerances(args.tol, args.tol, args.tol) if args.tol is not None else Tolerances()
    cfg = RunConfig(args.command, args.seed, tol, args.unit, args.repair, args.output)
    try:
        out, code = args.func(args, cfg)
    except (CoverageError, ConsistencyError) as exc:
        return _error(EXIT_COVERAGE, str(exc))
    except (MarkovCertError, ValueError, OSError) as exc:
        return _error(EXIT_INVALID, str(exc))
    text = io.dump_json(out, cfg.output)
    if cfg.output is None:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
