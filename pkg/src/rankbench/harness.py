"""Comparison grid: engines x epsilons x odds factors x cases.

Engines:

``numeric``        exact posteriors on the numeric network; score = P(true fault | e)
``kappa``          posteriors ranks after converting at epsilon; score = 1/|plausible set|
                   if the true fault is plausible, else 0
``kappa-as-prob``  ranks from the epsilon conversion turned back into base**k
                   probabilities and run through the numeric engine
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .car import PRIOR_TABLE, CarModel, TestCase, prior_summary, scale_priors
from .errors import DomainError
from .inference import posterior_marginals
from .kappa import ConversionPolicy, convert_network, kappa_as_probability, plausible_set, probability_score
from .model import PRESENT

log = logging.getLogger(__name__)

ENGINES = ("numeric", "kappa", "kappa-as-prob")
DEFAULT_ENGINES = ("numeric", "kappa")
DEFAULT_EPSILONS = (0.1, 0.01, 0.001)
DEFAULT_FACTORS = tuple(PRIOR_TABLE)
SELECTED_EPSILON = 0.1
EMBED_BASE = 0.01

RESULT_COLUMNS = ("case_id", "true_fault", "n_findings", "odds_factor", "engine", "epsilon", "posterior_true",
                  "plausible_set_size", "rank_of_true", "score", "status")
AGGREGATE_COLUMNS = ("axis", "key", "engine", "epsilon", "mean_score", "mean_plausible_set_size", "run_count",
                     "failed_count")
AXES = ("epsilon", "n-findings", "prior-magnitude")


@dataclass(frozen=True)
class RunRecord:
    case_id: str
    true_fault: str
    n_findings: int
    odds_factor: float
    engine: str
    epsilon: float | None
    posterior_true: float
    plausible_set_size: int | None
    rank_of_true: int | None
    score: float
    status: str = "ok"
    posteriors: tuple[tuple[str, float], ...] = field(default=(), compare=False, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def sort_key(self):
        eps = -1.0 if self.epsilon is None else self.epsilon
        return (self.case_id, self.odds_factor, ENGINES.index(self.engine) if self.engine in ENGINES else 99, eps)


@dataclass(frozen=True)
class AggregateRow:
    axis: str
    key: float | None
    engine: str
    epsilon: float | None
    mean_score: float
    mean_plausible_set_size: float | None
    run_count: int
    failed_count: int = 0


def _rank_of(values: dict[str, float], target: str, descending: bool) -> int:
    """1-based position of ``target``, placed after every tie."""
    v = values[target]
    if descending:
        return sum(1 for x in values.values() if x >= v)
    return sum(1 for x in values.values() if x <= v)


def _failed(case: TestCase, factor, engine, eps, exc) -> RunRecord:
    return RunRecord(case.case_id, case.true_fault, case.n_findings, factor, engine, eps, math.nan, None, None,
                     math.nan, f"failed: {type(exc).__name__}: {exc}")


def _run_block(model: CarModel, cases: Sequence[TestCase], factor: float, engine: str, eps: float | None,
               base: float = EMBED_BASE) -> list[RunRecord]:
    factor = float(factor)
    scaled = scale_priors(model, factor)
    faults = list(scaled.faults)
    if engine == "numeric":
        net = scaled.network
    elif engine == "kappa":
        net = convert_network(scaled.network, ConversionPolicy(eps))
    elif engine == "kappa-as-prob":
        net = kappa_as_probability(convert_network(scaled.network, ConversionPolicy(eps)), base)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    out = []
    for case in cases:
        try:
            post = posterior_marginals(net, case.evidence, faults)
            values = {j: post[j][PRESENT] for j in faults}
            if engine == "kappa":
                phi = plausible_set(values)
                score = probability_score(phi, case.true_fault)
                rec = RunRecord(case.case_id, case.true_fault, case.n_findings, factor, engine, eps, score, len(phi),
                                _rank_of(values, case.true_fault, descending=False), score,
                                posteriors=tuple(values.items()))
            else:
                p = values[case.true_fault]
                rec = RunRecord(case.case_id, case.true_fault, case.n_findings, factor, engine, eps, p, None,
                                _rank_of(values, case.true_fault, descending=True), p,
                                posteriors=tuple(values.items()))
        except Exception as exc:  # noqa: BLE001 - one bad case must not sink the grid
            log.warning("run failed: case %s, factor %s, engine %s: %s", case.case_id, factor, engine, exc)
            rec = _failed(case, factor, engine, eps, exc)
        out.append(rec)
    return out


def grid_blocks(factors: Iterable[float], epsilons: Iterable[float], engines: Iterable[str]):
    epsilons = list(epsilons)
    for engine in engines:
        if engine not in ENGINES:
            raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")
        for factor in factors:
            if engine == "numeric":
                yield factor, engine, None
            else:
                for eps in epsilons:
                    yield factor, engine, eps


def run_grid(model: CarModel, cases: Sequence[TestCase], factors: Iterable[float] = DEFAULT_FACTORS,
             epsilons: Iterable[float] = DEFAULT_EPSILONS, engines: Iterable[str] = DEFAULT_ENGINES,
             threads: int | None = None, base: float = EMBED_BASE) -> list[RunRecord]:
    """One record per (engine configuration, odds factor, case), sorted.

    ``threads`` (default: ``RANKBENCH_THREADS`` or 1) caps worker processes.
    """
    cases = list(cases)
    blocks = list(grid_blocks(factors, epsilons, engines))
    if not cases or not blocks:
        return []
    if threads is None:
        threads = int(os.environ.get("RANKBENCH_THREADS", "1") or 1)
    records: list[RunRecord] = []
    if threads > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(blocks))) as pool:
            futures = [pool.submit(_run_block, model, cases, f, e, eps, base) for f, e, eps in blocks]
            for fut in futures:
                records.extend(fut.result())
    else:
        for f, e, eps in blocks:
            records.extend(_run_block(model, cases, f, e, eps, base))
    records.sort(key=RunRecord.sort_key)
    return records


def mean_prior_label(factor: float, model: CarModel | None = None) -> float:
    """Mean prior shown for an odds factor: the reference value when tabulated."""
    if factor in PRIOR_TABLE:
        return PRIOR_TABLE[factor][1]
    from .car import build_reference_model

    return prior_summary(scale_priors(model or build_reference_model(), factor))[1]


def aggregate(records: Sequence[RunRecord], axis: str, model: CarModel | None = None) -> list[AggregateRow]:
    """Arithmetic means grouped by ``axis`` and engine configuration.

    Failed runs are excluded from the means and counted separately.
    """
    if axis not in AXES:
        raise DomainError(f"unknown axis {axis!r}; choose from {AXES}")
    groups: dict[tuple, list[RunRecord]] = defaultdict(list)
    labels: dict[float, float] = {}
    for r in records:
        if axis == "epsilon":
            key = r.epsilon
        elif axis == "n-findings":
            key = r.n_findings
        else:
            if r.odds_factor not in labels:
                labels[r.odds_factor] = mean_prior_label(r.odds_factor, model)
            key = labels[r.odds_factor]
        groups[(key, r.engine, r.epsilon)].append(r)

    rows = []
    for (key, engine, eps), rs in groups.items():
        good = [r for r in rs if r.ok]
        sizes = [r.plausible_set_size for r in good if r.plausible_set_size is not None]
        rows.append(AggregateRow(
            axis, key, engine, eps,
            math.fsum(r.score for r in good) / len(good) if good else math.nan,
            math.fsum(sizes) / len(sizes) if sizes else None,
            len(good), len(rs) - len(good),
        ))
    rows.sort(key=lambda a: (-1.0 if a.key is None else a.key, ENGINES.index(a.engine),
                             -1.0 if a.epsilon is None else a.epsilon))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def results_csv(records: Sequence[RunRecord]) -> str:
    return _csv_text(RESULT_COLUMNS, ([getattr(r, c) for c in RESULT_COLUMNS] for r in records))


def posteriors_csv(records: Sequence[RunRecord]) -> str:
    cols = ("case_id", "odds_factor", "engine", "epsilon", "fault", "value")
    return _csv_text(cols, ((r.case_id, r.odds_factor, r.engine, r.epsilon, j, v)
                            for r in records for j, v in r.posteriors))


def aggregate_csv(rows: Sequence[AggregateRow]) -> str:
    return _csv_text(AGGREGATE_COLUMNS, ([getattr(a, c) for c in AGGREGATE_COLUMNS] for a in rows))


def figure_tables(records: Sequence[RunRecord], selected_epsilon: float = SELECTED_EPSILON,
                  model: CarModel | None = None) -> dict[str, list[AggregateRow]]:
    """Aggregates behind the four summary plots.

    fig3: kappa score by epsilon at odds factor 1.
    fig4: kappa plausible-set size by number of findings (selected epsilon, factor 1).
    fig5: numeric and kappa score by number of findings (selected epsilon, factor 1).
    fig6: numeric and kappa score by mean prior across odds factors (selected epsilon).
    """
    base = [r for r in records if r.odds_factor == 1]
    kappa = [r for r in base if r.engine == "kappa"]
    chosen = lambda r: r.engine == "numeric" or (r.engine == "kappa" and r.epsilon == selected_epsilon)  # noqa: E731
    return {
        "fig3": aggregate(kappa, "epsilon") if kappa else [],
        "fig4": aggregate([r for r in kappa if r.epsilon == selected_epsilon], "n-findings") if kappa else [],
        "fig5": aggregate([r for r in base if chosen(r)], "n-findings") if base else [],
        "fig6": aggregate([r for r in records if chosen(r)], "prior-magnitude", model) if records else [],
    }


def report(records: Sequence[RunRecord], out_dir, fmt: str = "all", selected_epsilon: float = SELECTED_EPSILON,
           model: CarModel | None = None) -> list[Path]:
    """Write results.csv / posteriors.csv (``csv``) and fig3..fig6.csv (``plot-data``)."""
    if fmt not in ("csv", "plot-data", "all"):
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "all"):
        for name, text in (("results.csv", results_csv(records)), ("posteriors.csv", posteriors_csv(records))):
            (out / name).write_text(text, encoding="utf-8")
            written.append(out / name)
    if fmt in ("plot-data", "all"):
        for name, rows in figure_tables(records, selected_epsilon, model).items():
            path = out / f"{name}.csv"
            path.write_text(aggregate_csv(rows), encoding="utf-8")
            written.append(path)
    return written


def _parse(x: str, kind):
    if x == "":
        return None
    if kind is float:
        return float(x)
    return kind(x)


def read_results(path) -> list[RunRecord]:
    """Load records back from a results.csv (per-fault posteriors are not kept)."""
    types = dict(case_id=str, true_fault=str, n_findings=int, odds_factor=float, engine=str, epsilon=float,
                 posterior_true=float, plausible_set_size=int, rank_of_true=int, score=float, status=str)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"results file lacks columns {sorted(missing)}")
        return [RunRecord(**{c: _parse(row[c], types[c]) for c in RESULT_COLUMNS}) for row in reader]


def record_dict(r: RunRecord) -> dict:
    d = asdict(r)
    d.pop("posteriors")
    return d
