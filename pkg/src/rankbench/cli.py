"""Command-line interface: ``rankbench <subcommand> ...``.

Exit codes: 0 success, 1 failed runs, 2 usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections import Counter
from pathlib import Path

from . import harness
from .car import (
    DESCRIPTIONS,
    CarModel,
    build_reference_model,
    generate_cases,
    load_cases,
    save_cases,
    scale_priors,
)
from .errors import ContradictoryEvidenceError, DomainError, RankbenchError, ValidationError
from .inference import posterior_marginals
from .kappa import ConversionPolicy, convert_network, kappa_as_probability, plausible_set
from .model import PRESENT, RankNetwork, check_evidence
from .netio import load_network, save_network

log = logging.getLogger("rankbench")

EXIT_OK, EXIT_FAILED_RUNS, EXIT_USAGE = 0, 1, 2


def _epsilon(text):
    try:
        eps = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilon must be a number, got {text!r}") from None
    if not 0.0 < eps < 1.0:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1), got {text}")
    return eps


def _factor(text):
    try:
        f = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"odds factor must be a number, got {text!r}") from None
    if not f > 0.0 or math.isinf(f):
        raise argparse.ArgumentTypeError(f"odds factor must be positive, got {text}")
    return int(f) if f.is_integer() else f


def _assignment(text):
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise argparse.ArgumentTypeError(f"evidence must look like name=value, got {text!r}")
    return name.strip(), value.strip()


def _load_model(args) -> CarModel:
    if getattr(args, "network", None):
        net = load_network(args.network)
        if isinstance(net, RankNetwork):
            raise ValidationError("this subcommand needs a probability network, not a rank network")
        model = CarModel.from_network(net)
    else:
        model = build_reference_model(getattr(args, "priors", None))
    return model


def _single(values, default, flag):
    if not values:
        return default
    if len(values) > 1:
        raise DomainError(f"{flag} takes a single value here")
    return values[0]


def _engine_network(model: CarModel, engine: str, epsilon: float, base: float = harness.EMBED_BASE):
    if engine == "numeric":
        return model.network
    ranks = convert_network(model.network, ConversionPolicy(epsilon))
    return ranks if engine == "kappa" else kappa_as_probability(ranks, base)


def render_listing(net, diagnoses, evidence: dict, engine: str, epsilon: float | None) -> str:
    """Posterior of every diagnosis (probability or rank), plus the plausible set for ranks."""
    post = posterior_marginals(net, evidence, diagnoses)
    values = {d: post[d][PRESENT] for d in diagnoses}
    shown = ", ".join(f"{k}={v}" for k, v in evidence.items()) or "(none)"
    label = engine if epsilon is None or engine == "numeric" else f"{engine} (epsilon={epsilon:g})"
    lines = [f"engine: {label}", f"evidence: {shown}"]
    column = "kappa" if isinstance(net, RankNetwork) else "P(present)"
    width = max(len(d) for d in diagnoses)
    lines.append(f"  {'diagnosis'.ljust(width)}  {column}")
    for d in diagnoses:
        v = values[d]
        text = ("inf" if math.isinf(v) else str(v)) if isinstance(net, RankNetwork) else f"{v:.6g}"
        lines.append(f"  {d.ljust(width)}  {text}")
    if isinstance(net, RankNetwork):
        phi = plausible_set(values)
        lines.append(f"plausible set (size {len(phi)}, min rank {phi.min_rank}): {', '.join(phi.members)}")
    return "\n".join(lines) + "\n"


def cmd_export(args) -> int:
    model = build_reference_model(args.priors)
    factor = _single(args.odds_factor, 1, "--odds-factor")
    model = scale_priors(model, factor)
    out = args.out or "car-network.json"
    save_network(model.network, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_convert(args) -> int:
    eps = _single(args.epsilon, None, "--epsilon")
    if eps is None:
        raise DomainError("convert needs --epsilon")
    net = load_network(args.network) if args.network else build_reference_model().network
    if isinstance(net, RankNetwork):
        raise ValidationError("input is already a rank network")
    ranks = convert_network(net, ConversionPolicy(eps, mode=args.mode))
    out = args.out or "rank-network.json"
    save_network(ranks, out)
    counts = Counter(x for name in ranks.variables for x in ranks.table(name).ravel().tolist())
    print(f"wrote {out} (epsilon={eps:g})")
    print("kappa  entries")
    for k in sorted(counts):
        print(f"{'inf' if math.isinf(k) else int(k):>5}  {counts[k]}")
    return EXIT_OK


def cmd_infer(args) -> int:
    engine = _single(args.engine, "numeric", "--engine")
    eps = _single(args.epsilon, harness.SELECTED_EPSILON, "--epsilon")
    evidence = dict(args.evidence or [])
    if len(evidence) != len(args.evidence or []):
        raise DomainError("a variable appears more than once in the evidence")
    if args.network:
        net = load_network(args.network)
        diagnoses = list(net.diagnoses) or [n for n in net.roots() if net.card(n) == 2]
        if isinstance(net, RankNetwork):
            if engine != "kappa":
                raise DomainError("a rank network can only be queried with --engine kappa")
            eps = None
            target_net = net
        else:
            target_net = _engine_network(CarModel(net, tuple(diagnoses), tuple(net.findings)), engine, eps)
    else:
        model = scale_priors(build_reference_model(args.priors), _single(args.odds_factor, 1, "--odds-factor"))
        diagnoses = list(model.faults)
        target_net = _engine_network(model, engine, eps)
    check_evidence(target_net, evidence)
    sys.stdout.write(render_listing(target_net, diagnoses, evidence, engine, eps))
    return EXIT_OK


def cmd_cases(args) -> int:
    model = _load_model(args)
    cases = generate_cases(model)
    out = args.out or "cases.json"
    save_cases(cases, out)
    print(f"wrote {len(cases)} cases to {out}")
    return EXIT_OK


def _read_subset(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        ids = json.loads(text)
    except json.JSONDecodeError:
        ids = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
        raise ValidationError("subset file must be a JSON list of case ids or one id per line")
    return ids


def cmd_run(args) -> int:
    model = _load_model(args)
    cases = load_cases(args.cases) if args.cases else generate_cases(model)
    if args.subset:
        wanted = _read_subset(args.subset)
        known = {c.case_id for c in cases}
        missing = [i for i in wanted if i not in known]
        if missing:
            raise ValidationError(f"subset names unknown cases: {missing[:5]}")
        keep = set(wanted)
        cases = [c for c in cases if c.case_id in keep]
    for c in cases:
        check_evidence(model.network, c.evidence)
        if c.true_fault not in model.faults:
            raise ValidationError(f"case {c.case_id}: unknown true fault {c.true_fault!r}")

    engines = args.engine or list(harness.DEFAULT_ENGINES)
    epsilons = args.epsilon or list(harness.DEFAULT_EPSILONS)
    factors = args.odds_factor or list(harness.DEFAULT_FACTORS)
    records = harness.run_grid(model, cases, factors, epsilons, engines)
    out = Path(args.out or "results")
    selected = harness.SELECTED_EPSILON if harness.SELECTED_EPSILON in epsilons else epsilons[0]
    harness.report(records, out, "all", selected_epsilon=selected, model=model)
    manifest = {"cases": len(cases), "engines": list(engines), "epsilons": list(epsilons),
                "odds_factors": list(factors), "seed": args.seed, "records": len(records),
                "failed": sum(not r.ok for r in records)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    counts = Counter(r.engine for r in records)
    print(f"{len(records)} runs over {len(cases)} cases: " + ", ".join(f"{e}={n}" for e, n in sorted(counts.items())))
    print(f"numeric posteriors: {sum(len(r.posteriors) for r in records if r.engine == 'numeric')}")
    failed = [r for r in records if not r.ok]
    if failed:
        print(f"{len(failed)} failed run(s):", file=sys.stderr)
        for r in failed:
            print(f"  {r.case_id} factor={r.odds_factor:g} engine={r.engine} epsilon={r.epsilon}: {r.status}",
                  file=sys.stderr)
        return EXIT_FAILED_RUNS
    print(f"results written to {out}/")
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.results:
        raise DomainError("report needs --results")
    try:
        records = harness.read_results(args.results)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read results: {exc}") from exc
    eps = _single(args.epsilon, harness.SELECTED_EPSILON, "--epsilon")
    written = harness.report(records, args.out or "report", "plot-data", selected_epsilon=eps)
    for p in written:
        print(f"wrote {p}")
    return EXIT_FAILED_RUNS if any(not r.ok for r in records) else EXIT_OK


HELP = """Enter a value for the prompted finding, or name=value for any finding.
Commands: skip (next finding), undo (retract last), show, help, quit."""


def diagnose_session(model: CarModel, epsilon: float, stdin=None, stdout=None) -> list[tuple[str, str]]:
    """Interactive troubleshooting loop; returns the final list of assertions."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    numeric = model.network
    ranks = convert_network(numeric, ConversionPolicy(epsilon))
    findings = list(model.findings)
    asserted: list[tuple[str, str]] = []
    skipped: set[str] = set()

    def show():
        ev = dict(asserted)
        stdout.write(render_listing(numeric, list(model.faults), ev, "numeric", None))
        stdout.write(render_listing(ranks, list(model.faults), ev, "kappa", epsilon))
        stdout.write("\n")

    stdout.write(f"Troubleshooting: why does the car not start? (epsilon={epsilon:g})\n{HELP}\n")
    while True:
        done = {n for n, _ in asserted}
        pending = [f for f in findings if f not in done and f not in skipped]
        current = pending[0] if pending else None
        if current:
            var = numeric.variables[current]
            stdout.write(f"{current} ({DESCRIPTIONS.get(current, current)}) [{'/'.join(var.domain)}] > ")
        else:
            stdout.write("> ")
        stdout.flush()
        line = stdin.readline()
        if not line:
            stdout.write("\n")
            break
        cmd = line.strip()
        if not cmd:
            continue
        if cmd in ("quit", "exit", "q"):
            break
        if cmd == "help":
            stdout.write(HELP + "\n")
            continue
        if cmd == "show":
            show()
            continue
        if cmd == "skip":
            if current:
                skipped.add(current)
            continue
        if cmd == "undo":
            if not asserted:
                stdout.write("nothing to undo\n")
                continue
            name, _ = asserted.pop()
            skipped.discard(name)
            show()
            continue
        name, sep, value = cmd.partition("=")
        name, value = (name.strip(), value.strip()) if sep else (current, cmd)
        if name is None or name not in findings or value not in numeric.variables[name].domain:
            stdout.write(f"unknown finding or value: {cmd!r}\n")
            continue
        if name in done:
            stdout.write(f"{name} is already asserted; undo first\n")
            continue
        asserted.append((name, value))
        try:
            posterior_marginals(numeric, dict(asserted), [])
            show()
        except ContradictoryEvidenceError as exc:
            asserted.pop()
            stdout.write(f"{exc}; assertion discarded\n")
    return asserted


def cmd_diagnose(args) -> int:
    model = _load_model(args)
    model = scale_priors(model, _single(args.odds_factor, 1, "--odds-factor"))
    eps = _single(args.epsilon, harness.SELECTED_EPSILON, "--epsilon")
    diagnose_session(model, eps)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankbench",
                                     description="Numeric vs kappa-rank diagnosis on the car-start network.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        if "network" in flags:
            p.add_argument("--network", help="network JSON file (default: built-in car network)")
        if "priors" in flags:
            p.add_argument("--priors", help="prior-override JSON file for the built-in network")
        if "epsilon" in flags:
            p.add_argument("--epsilon", type=_epsilon, action="append", help="threshold in (0,1); repeatable")
        if "factor" in flags:
            p.add_argument("--odds-factor", type=_factor, action="append", help="prior odds multiplier; repeatable")
        if "engine" in flags:
            p.add_argument("--engine", choices=harness.ENGINES, action="append", help="repeatable")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, default=0, help="recorded in run manifests; all runs are deterministic")

    p = sub.add_parser("export", help="write the built-in car network as JSON")
    common(p, "priors", "factor")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("convert", help="convert a network to kappa ranks")
    common(p, "network", "epsilon")
    p.add_argument("--mode", choices=("entries", "parameters"), default="entries")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("infer", help="posterior of every diagnosis for some evidence")
    common(p, "network", "priors", "epsilon", "factor", "engine")
    p.add_argument("-e", "--evidence", type=_assignment, action="append", help="finding=value; repeatable")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("cases", help="generate the nested test-case file")
    common(p, "network", "priors")
    p.set_defaults(func=cmd_cases)

    p = sub.add_parser("run", help="run the comparison grid and write results + figure tables")
    common(p, "network", "priors", "epsilon", "factor", "engine")
    p.add_argument("--cases", help="case file (default: generated)")
    p.add_argument("--subset", help="file listing case ids to run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="rebuild figure tables from a results.csv")
    common(p, "epsilon")
    p.add_argument("--results", help="results.csv written by run")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("diagnose", help="interactive troubleshooting session")
    common(p, "network", "priors", "epsilon", "factor")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ContradictoryEvidenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RankbenchError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
