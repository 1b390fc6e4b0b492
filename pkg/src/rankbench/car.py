"""Car-won't-start diagnosis network, prior scaling and test-case generation.

The structure follows the troubleshooting domain: nine faults and three leak
events are source variables, ten findings are observable. Causal strengths
are a documented reconstruction (see ``data/PROVENANCE.md``); the prior
probabilities were fitted so that odds-factor scaling reproduces the
reference min/mean/max prior table (``PRIOR_TABLE``) exactly at five decimals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .errors import DomainError, ValidationError
from .inference import posterior_marginals
from .model import ABSENT, PRESENT, Network, NoisyMax, NoisyOr, Prior, Variable, ensure_valid

FAULTS = (
    "spark-plugs",
    "distributor",
    "fuel-line",
    "fuel-pump",
    "gas-tank",
    "starter",
    "battery",
    "fan-belt",
    "alternator",
)
LEAKS = ("engine-start-other", "engine-turn-over-other", "charging-system-other")
DIAGNOSES = FAULTS + LEAKS

# Cheapest to most expensive to test.
FINDINGS = (
    "engine-start",
    "gas-gauge",
    "engine-turn-over",
    "lights",
    "radio",
    "fan-belt",
    "battery-age",
    "distributor",
    "spark-plugs",
    "alternator",
)

DESCRIPTIONS = {
    "spark-plugs": "spark plugs bad",
    "distributor": "distributor bad",
    "fuel-line": "fuel line bad",
    "fuel-pump": "fuel pump bad",
    "gas-tank": "gas tank empty",
    "starter": "starter bad",
    "battery": "battery bad",
    "fan-belt": "fan belt loose",
    "alternator": "alternator bad",
    "engine-start-other": "engine start, other cause",
    "engine-turn-over-other": "engine turn over, other cause",
    "charging-system-other": "charging system, other cause",
    "engine-start": "engine starts",
    "gas-gauge": "gas gauge shows fuel",
    "engine-turn-over": "engine turns over",
    "lights": "lights work",
    "radio": "radio works",
    "battery-age": "battery is old",
    "charging": "charging system failed",
    "battery-charge": "battery charge level",
}

REFERENCE_PRIORS = {
    "spark-plugs": 0.000661,
    "distributor": 0.0000823,
    "fuel-line": 0.0000685,
    "fuel-pump": 0.000965,
    "gas-tank": 0.000965,
    "starter": 0.000135,
    "battery": 0.00099999,
    "fan-belt": 0.000135,
    "alternator": 0.000204,
    "engine-start-other": 0.0000823,
    "engine-turn-over-other": 0.0000514,
    "charging-system-other": 0.00001027,
}

# Reference prior summary per odds factor: (minimum, mean, maximum), five decimals.
PRIOR_TABLE = {
    1: (0.00001, 0.00036, 0.00100),
    10: (0.00010, 0.00361, 0.00991),
    50: (0.00051, 0.01750, 0.04766),
    100: (0.00103, 0.03376, 0.09099),
    300: (0.00307, 0.08900, 0.23095),
    1000: (0.01017, 0.21364, 0.50025),
}
ODDS_FACTORS = tuple(PRIOR_TABLE)

CHARGE = ("none", "low", "high")


@dataclass(frozen=True)
class CarModel:
    network: Network
    faults: tuple[str, ...] = DIAGNOSES
    findings: tuple[str, ...] = FINDINGS
    odds_factor: float = 1.0

    @property
    def overlap(self) -> tuple[str, ...]:
        return tuple(f for f in self.faults if f in self.findings)

    def prior(self, fault: str) -> float:
        return self.network.specs[fault].probabilities[1]

    def priors(self) -> dict[str, float]:
        return {f: self.prior(f) for f in self.faults}

    @classmethod
    def from_network(cls, net: Network) -> "CarModel":
        if not net.diagnoses or not net.findings:
            raise ValidationError("network file must list its diagnoses and findings")
        return cls(net, tuple(net.diagnoses), tuple(net.findings))


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting this class

    case_id: str
    true_fault: str
    evidence: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_findings(self) -> int:
        return len(self.evidence)


def _structure(priors: Mapping[str, float]) -> Network:
    variables = [Variable(d) for d in DIAGNOSES]
    variables += [Variable("charging"), Variable("battery-charge", CHARGE)]
    variables += [Variable(f) for f in FINDINGS if f not in DIAGNOSES]

    ok = (0.0, 1.0)
    high = (0.0, 0.0, 1.0)
    parents = {
        "charging": ("fan-belt", "alternator", "charging-system-other"),
        "battery-charge": ("battery", "charging"),
        "engine-turn-over": ("battery-charge", "starter", "engine-turn-over-other"),
        "engine-start": ("engine-turn-over", "spark-plugs", "distributor", "fuel-line", "fuel-pump", "gas-tank",
                         "engine-start-other"),
        "gas-gauge": ("gas-tank", "battery-charge"),
        "lights": ("battery-charge",),
        "radio": ("battery-charge",),
        "battery-age": ("battery",),
    }
    specs = {d: Prior((1.0 - priors[d], priors[d])) for d in DIAGNOSES}
    specs["charging"] = NoisyOr((0.9, 0.95, 1.0), leak=0.0)
    specs["battery-charge"] = NoisyMax(
        strengths=(
            (high, (0.7, 0.25, 0.05)),
            (high, (0.1, 0.85, 0.05)),
        ),
        leak=high,
        severity=("high", "low", "none"),
    )
    # For findings "present" is the normal observation, so failures are "absent".
    down = (PRESENT, ABSENT)
    specs["engine-turn-over"] = NoisyMax(
        strengths=(
            ((0.98, 0.02), (0.6, 0.4), ok),
            (ok, (0.95, 0.05)),
            (ok, (1.0, 0.0)),
        ),
        leak=ok,
        severity=down,
    )
    specs["engine-start"] = NoisyOr(
        (1.0, 0.9, 0.9, 0.95, 0.95, 1.0, 1.0),
        leak=0.0,
        active=ABSENT,
        parent_active=(ABSENT,) + (PRESENT,) * 6,
    )
    specs["gas-gauge"] = NoisyMax(
        strengths=(
            (ok, (0.99, 0.01)),
            ((0.95, 0.05), (0.05, 0.95), ok),
        ),
        leak=ok,
        severity=down,
    )
    specs["lights"] = NoisyMax(strengths=(((0.99, 0.01), (0.5, 0.5), ok),), leak=ok, severity=down)
    specs["radio"] = NoisyMax(strengths=(((0.99, 0.01), (0.3, 0.7), ok),), leak=ok, severity=down)
    specs["battery-age"] = NoisyOr((0.9,), leak=0.2)
    return Network(variables, parents, specs, diagnoses=DIAGNOSES, findings=FINDINGS)


def load_priors(path) -> dict[str, float]:
    """Read a prior-override file: a JSON object mapping diagnosis -> probability."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read prior file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("prior file must hold a JSON object")
    return doc


def build_reference_model(priors=None) -> CarModel:
    """The reconstructed car network, optionally with overridden priors.

    ``priors`` may be a mapping or a path to a prior-override file; it may
    name any subset of the twelve diagnoses.
    """
    table = dict(REFERENCE_PRIORS)
    if priors is not None:
        override = load_priors(priors) if isinstance(priors, (str, Path)) else dict(priors)
        unknown = set(override) - set(DIAGNOSES)
        if unknown:
            raise ValidationError(f"prior file names unknown diagnoses {sorted(unknown)}")
        for k, p in override.items():
            if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 < p < 1.0:
                raise ValidationError(f"prior for {k} must be a probability in (0, 1), got {p!r}")
        table.update({k: float(p) for k, p in override.items()})
    return CarModel(ensure_valid(_structure(table)))


def scale_odds(p: float, factor: float) -> float:
    """Multiply the odds p/(1-p) by ``factor`` and convert back."""
    if not factor > 0:
        raise DomainError(f"odds factor must be positive, got {factor!r}")
    if not 0.0 <= p < 1.0:
        raise DomainError(f"cannot scale the odds of p = {p!r}")
    if factor == 1:
        return p
    odds = factor * p / (1.0 - p)
    return odds / (1.0 + odds)


def scale_priors(model: CarModel, factor: float) -> CarModel:
    """Same model with every diagnosis prior's odds multiplied by ``factor``."""
    updates = {}
    for f in model.faults:
        p = scale_odds(model.prior(f), factor)
        updates[f] = Prior((1.0 - p, p))
    return replace(model, network=model.network.with_specs(updates), odds_factor=model.odds_factor * factor)


def prior_summary(model: CarModel) -> tuple[float, float, float]:
    ps = list(model.priors().values())
    return min(ps), sum(ps) / len(ps), max(ps)


def modal_findings(model: CarModel, fault: str) -> dict[str, str]:
    """Most likely value of each finding given ``fault`` present.

    Other diagnoses stay at their priors; ties go to the earlier domain value.
    """
    if fault not in model.faults:
        raise DomainError(f"unknown fault {fault!r}")
    post = posterior_marginals(model.network, {fault: PRESENT}, model.findings)
    out = {}
    for finding in model.findings:
        dist = post[finding]
        out[finding] = max(dist, key=lambda v: (dist[v], -list(dist).index(v)))
    return out


def generate_cases(model: CarModel) -> list[TestCase]:
    """Nested evidence series, one per diagnosis.

    The first case of a series observes every finding at its modal value
    (except the fault itself when it is observable); each following case
    drops the most expensive remaining finding. The cheapest finding, that
    the engine does not start, is never dropped.
    """
    cases = []
    for fault in model.faults:
        modal = modal_findings(model, fault)
        base = [f for f in model.findings if f != fault]
        for n in range(len(base), 0, -1):
            evidence = {f: modal[f] for f in base[:n]}
            cases.append(TestCase(f"{fault}/{n:02d}", fault, evidence))
    return cases


def cases_to_json(cases) -> str:
    doc = [{"case-id": c.case_id, "true-fault": c.true_fault, "n-findings": c.n_findings,
            "evidence": dict(c.evidence)} for c in cases]
    return json.dumps(doc, indent=2) + "\n"


def save_cases(cases, path) -> None:
    Path(path).write_text(cases_to_json(cases), encoding="utf-8")


def load_cases(path) -> list[TestCase]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        cases = [TestCase(r["case-id"], r["true-fault"], dict(r["evidence"])) for r in doc]
        for r, c in zip(doc, cases):
            if "n-findings" in r and r["n-findings"] != c.n_findings:
                raise ValidationError(f"case {c.case_id}: n-findings does not match its evidence")
    except ValidationError:
        raise
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read case file {path}: {exc!r}") from exc
    return cases
