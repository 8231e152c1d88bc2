"""Result records and their JSON / table renderings.

The JSON rendering is byte-stable: records are sorted, key order is fixed,
and rationals are rendered exactly (``"num/den"``) next to a 12-significant
-digit decimal (banker's rounding), so identical runs produce identical
bytes and downstream diffs are meaningful.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Context, Decimal, ROUND_HALF_EVEN
from fractions import Fraction
from typing import Optional

from .model import Fact

_TWELVE = Context(prec=12, rounding=ROUND_HALF_EVEN)


def rational_string(value: Fraction) -> str:
    """Canonical exact form, e.g. ``-2/35`` or ``0``; round-trips through
    ``Fraction``."""
    return str(value)


def decimal_string(value: Fraction) -> str:
    """12 significant digits, round-half-even."""
    return str(_TWELVE.divide(Decimal(value.numerator),
                              Decimal(value.denominator)))


@dataclass
class FactRecord:
    relation: str
    args: tuple[str, ...]
    provenance: str
    value: Optional[Fraction] = None

    @classmethod
    def for_fact(cls, fact: Fact,
                 value: Optional[Fraction] = None) -> "FactRecord":
        return cls(fact.relation.name, fact.args, fact.provenance.value,
                   value)

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "args": list(self.args),
            "provenance": self.provenance,
            "value": None if self.value is None else rational_string(self.value),
            "decimal": None if self.value is None else decimal_string(self.value),
        }


@dataclass
class Report:
    """One command's result.  ``extra`` holds command-specific sections
    (relevance verdicts, probabilities, rewrite traces) appended after the
    common keys."""

    method: str
    query: str
    facts: list[FactRecord] = field(default_factory=list)
    classification: Optional[list[dict]] = None
    seed: Optional[int] = None
    samples: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def sorted_facts(self) -> list[FactRecord]:
        return sorted(self.facts, key=lambda r: (r.relation, r.args))

    def to_json(self) -> dict:
        payload = {
            "method": self.method,
            "query": self.query,
            "facts": [r.to_json() for r in self.sorted_facts()],
            "classification": self.classification,
            "seed": self.seed,
            "samples": self.samples,
        }
        payload.update(self.extra)
        return payload


def render_json(report: Report) -> str:
    return json.dumps(report.to_json(), indent=2) + "\n"


def render_table(report: Report) -> str:
    lines = [f"method: {report.method}"]
    for qline in report.query.splitlines():
        lines.append(f"query:  {qline}")
    records = report.sorted_facts()
    if records:
        names = [f"{r.relation}({', '.join(r.args)})" for r in records]
        width = max(len(n) for n in names)
        lines.append("")
        for r, name in zip(records, names):
            value = "" if r.value is None else rational_string(r.value)
            dec = "" if r.value is None else f"  {decimal_string(r.value)}"
            lines.append(f"  {name:<{width}}  {r.provenance:<4} "
                         f"{value:>12}{dec}")
    if report.classification is not None:
        lines.append("")
        for i, verdict in enumerate(report.classification, start=1):
            text = verdict["kind"]
            witness = verdict.get("witness")
            if witness:
                parts = ", ".join(witness["atoms"])
                text += f"  [witness: {parts}"
                if "path" in witness:
                    text += f"; path {'-'.join(witness['path'])}"
                text += "]"
            lines.append(f"  rule {i}: {text}")
    for key, value in report.extra.items():
        lines.append("")
        lines.append(f"{key}: {json.dumps(value, indent=2)}")
    if report.samples is not None:
        lines.append("")
        lines.append(f"samples: {report.samples}  seed: {report.seed}")
    return "\n".join(lines) + "\n"
