"""Blind expert-review sessions: mixing, rating capture, aggregation.

A session mixes model-generated impressions with original human-written
ones in a seeded random order. Raters never see which is which: the origin
field exists only server-side and is excluded from every rater-facing
payload. Ratings append to a per-session event log before they are
acknowledged; summaries are always derived from the log, never stored.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from .errors import ReviewError

DIMENSIONS = ("clearance", "completeness", "human_likeness", "conciseness", "coherence")
OVERALL_LABELS = ("positive", "neutral", "negative")
SCALE_MIN, SCALE_MAX = 1, 5


class UnknownEntityError(ReviewError):
    """Item, rater, or session not part of this review."""


class DuplicateRatingError(ReviewError):
    """This rater already rated this item and replacement is not enabled."""


class SessionClosedError(ReviewError):
    """The session no longer accepts ratings."""


@dataclass(frozen=True)
class ReviewItem:
    item_id: str
    report_id: str
    shown_impression: str
    origin: str  # "generated" | "original"; never serialized rater-facing
    position: int
    findings: str = ""

    def rater_view(self) -> dict:
        """Rater-facing payload; deliberately omits the origin field."""
        return {
            "item_id": self.item_id,
            "position": self.position,
            "findings": self.findings,
            "shown_impression": self.shown_impression,
        }


@dataclass(frozen=True)
class RatingRecord:
    item_id: str
    rater_id: str
    overall: str
    dimensions: dict[str, int]
    timestamp: float

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "rater_id": self.rater_id,
            "overall": self.overall,
            "dimensions": dict(self.dimensions),
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class RatingSummary:
    counts: dict[str, int]  # generated items only
    excluded: int
    analyzed: int
    acceptable_fraction: Fraction
    dimension_means: dict[str, dict[str, float]]  # label -> dimension -> mean
    generated_total: int

    def to_dict(self) -> dict:
        return {
            "counts": dict(self.counts),
            "excluded": self.excluded,
            "analyzed": self.analyzed,
            "acceptable_fraction": float(self.acceptable_fraction),
            "acceptable_fraction_exact": f"{self.acceptable_fraction.numerator}"
            f"/{self.acceptable_fraction.denominator}",
            "dimension_means": {
                label: dict(means) for label, means in self.dimension_means.items()
            },
            "generated_total": self.generated_total,
        }


ConsensusRule = Callable[[Sequence[str]], str | None]


def default_consensus(labels: Sequence[str]) -> str | None:
    """Unanimity, else strict majority; a positive-vs-negative standoff is
    excluded (None); splits that only touch neutral resolve to neutral."""
    if not labels:
        return None
    distinct = set(labels)
    if len(distinct) == 1:
        return labels[0]
    counts = {label: labels.count(label) for label in distinct}
    best = max(counts, key=lambda lab: counts[lab])
    if counts[best] * 2 > len(labels):
        return best
    if "positive" in distinct and "negative" in distinct:
        return None
    return "neutral"


def validate_rating(
    overall: str, dimensions: dict[str, int]
) -> None:
    if overall not in OVERALL_LABELS:
        raise ReviewError(
            f"overall verdict {overall!r} not one of {OVERALL_LABELS}"
        )
    for dim in DIMENSIONS:
        if dim not in dimensions:
            raise ReviewError(f"rating missing dimension {dim!r}")
    extra = set(dimensions) - set(DIMENSIONS)
    if extra:
        raise ReviewError(f"rating has unknown dimensions: {sorted(extra)}")
    for dim, value in dimensions.items():
        if not isinstance(value, int) or isinstance(value, bool) or not (
            SCALE_MIN <= value <= SCALE_MAX
        ):
            raise ReviewError(
                f"dimension {dim!r} must be an integer in "
                f"[{SCALE_MIN}, {SCALE_MAX}], got {value!r}"
            )


class ReviewSession:
    """One blind session; all mutation goes through the append-only log."""

    def __init__(
        self,
        session_id: str,
        items: list[ReviewItem],
        rater_ids: list[str],
        seed: int,
        allow_replacement: bool = False,
        log_path: str | Path | None = None,
    ) -> None:
        self.session_id = session_id
        self.items = {item.item_id: item for item in items}
        self.order = sorted(items, key=lambda item: item.position)
        self.rater_ids = list(rater_ids)
        self.seed = seed
        self.allow_replacement = allow_replacement
        self.log_path = Path(log_path) if log_path else None
        self.closed = False
        self._ratings: dict[tuple[str, str], RatingRecord] = {}
        self._lock = threading.Lock()

    # -- construction ------------------------------------------------------

    @classmethod
    def create(
        cls,
        generated: Sequence[tuple[str, str]],
        originals: Sequence[tuple[str, str]],
        rater_ids: Sequence[str],
        seed: int,
        findings_by_report: dict[str, str] | None = None,
        session_id: str = "session",
        allow_replacement: bool = False,
        log_path: str | Path | None = None,
    ) -> "ReviewSession":
        """Mix generated and original impressions into a seeded blind order."""
        import random

        if not generated or not originals:
            raise ReviewError("need at least one generated and one original item")
        if not rater_ids:
            raise ReviewError("need at least one rater id")
        overlap = {rid for rid, _ in generated} & {rid for rid, _ in originals}
        if overlap:
            raise ReviewError(
                f"report(s) appear in both generated and original lists: {sorted(overlap)}"
            )
        findings_by_report = findings_by_report or {}
        pool = [(rid, text, "generated") for rid, text in generated] + [
            (rid, text, "original") for rid, text in originals
        ]
        rng = random.Random(seed)
        rng.shuffle(pool)
        items = [
            ReviewItem(
                item_id=f"item-{position:04d}",
                report_id=report_id,
                shown_impression=text,
                origin=origin,
                position=position,
                findings=findings_by_report.get(report_id, ""),
            )
            for position, (report_id, text, origin) in enumerate(pool)
        ]
        session = cls(
            session_id=session_id,
            items=items,
            rater_ids=list(rater_ids),
            seed=seed,
            allow_replacement=allow_replacement,
            log_path=log_path,
        )
        session._append_event(
            {
                "event": "session_created",
                "session_id": session_id,
                "seed": seed,
                "rater_ids": list(rater_ids),
                "allow_replacement": allow_replacement,
                "items": [
                    {
                        "item_id": item.item_id,
                        "report_id": item.report_id,
                        "shown_impression": item.shown_impression,
                        "origin": item.origin,
                        "position": item.position,
                        "findings": item.findings,
                    }
                    for item in session.order
                ],
            }
        )
        return session

    @classmethod
    def load(cls, log_path: str | Path) -> "ReviewSession":
        """Rebuild a session by replaying its event log."""
        log_path = Path(log_path)
        if not log_path.exists():
            raise UnknownEntityError(f"no session log at {log_path}")
        session: ReviewSession | None = None
        with log_path.open(encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                kind = event.get("event")
                if kind == "session_created":
                    items = [
                        ReviewItem(
                            item_id=e["item_id"],
                            report_id=e["report_id"],
                            shown_impression=e["shown_impression"],
                            origin=e["origin"],
                            position=e["position"],
                            findings=e.get("findings", ""),
                        )
                        for e in event["items"]
                    ]
                    session = cls(
                        session_id=event["session_id"],
                        items=items,
                        rater_ids=event["rater_ids"],
                        seed=event["seed"],
                        allow_replacement=event.get("allow_replacement", False),
                        log_path=None,  # do not re-append while replaying
                    )
                elif kind == "rating_submitted":
                    if session is None:
                        raise ReviewError(f"{log_path}: rating before session_created")
                    record = RatingRecord(
                        item_id=event["item_id"],
                        rater_id=event["rater_id"],
                        overall=event["overall"],
                        dimensions={k: int(v) for k, v in event["dimensions"].items()},
                        timestamp=event["timestamp"],
                    )
                    session._ratings[(record.item_id, record.rater_id)] = record
                elif kind == "session_closed":
                    if session is not None:
                        session.closed = True
        if session is None:
            raise ReviewError(f"{log_path}: no session_created event")
        session.log_path = log_path
        return session

    # -- event log ---------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        if self.log_path is None:
            return
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    # -- rating flow -------------------------------------------------------

    def submit(
        self,
        item_id: str,
        rater_id: str,
        overall: str,
        dimensions: dict[str, int],
        timestamp: float | None = None,
    ) -> dict:
        """Validate, persist, then acknowledge one rating."""
        with self._lock:
            if self.closed:
                raise SessionClosedError(f"session {self.session_id!r} is closed")
            if item_id not in self.items:
                raise UnknownEntityError(f"unknown item {item_id!r}")
            if rater_id not in self.rater_ids:
                raise UnknownEntityError(f"unknown rater {rater_id!r}")
            validate_rating(overall, dimensions)
            key = (item_id, rater_id)
            replaced = key in self._ratings
            if replaced and not self.allow_replacement:
                raise DuplicateRatingError(
                    f"duplicate rating for item {item_id!r} by rater {rater_id!r}"
                )
            record = RatingRecord(
                item_id=item_id,
                rater_id=rater_id,
                overall=overall,
                dimensions=dict(dimensions),
                timestamp=time.time() if timestamp is None else timestamp,
            )
            self._append_event({"event": "rating_submitted", **record.to_dict()})
            self._ratings[key] = record
            return {
                "status": "accepted",
                "item_id": item_id,
                "rater_id": rater_id,
                "replaced": replaced,
            }

    def rating(self, item_id: str, rater_id: str) -> RatingRecord | None:
        return self._ratings.get((item_id, rater_id))

    def next_unrated(self, rater_id: str) -> ReviewItem | None:
        """First item (by blind position) this rater has not rated yet."""
        if rater_id not in self.rater_ids:
            raise UnknownEntityError(f"unknown rater {rater_id!r}")
        with self._lock:
            for item in self.order:
                if (item.item_id, rater_id) not in self._ratings:
                    return item
        return None

    def progress(self) -> dict:
        with self._lock:
            total = len(self.order)
            per_rater = {
                rater: sum(
                    1 for item in self.order if (item.item_id, rater) in self._ratings
                )
                for rater in self.rater_ids
            }
            return {
                "session_id": self.session_id,
                "total": total,
                "rated": sum(per_rater.values()),
                "per_rater": per_rater,
                "complete": all(count == total for count in per_rater.values()),
            }

    def close(self) -> None:
        with self._lock:
            if not self.closed:
                self._append_event({"event": "session_closed"})
                self.closed = True

    # -- aggregation -------------------------------------------------------

    def aggregate(self, rule: ConsensusRule = default_consensus) -> RatingSummary:
        """Consensus counts, exclusions, and dimension means over a snapshot."""
        with self._lock:
            ratings = list(self._ratings.values())
        by_item: dict[str, list[RatingRecord]] = {}
        for record in ratings:
            by_item.setdefault(record.item_id, []).append(record)

        min_raters = 1 if len(self.rater_ids) == 1 else 2
        generated_items = [i for i in self.order if i.origin == "generated"]
        underrated = [
            item.item_id
            for item in generated_items
            if len(by_item.get(item.item_id, [])) < min_raters
        ]
        if underrated:
            raise ReviewError(
                "generated items lack the required "
                f"{min_raters} rating(s): {underrated}"
            )

        counts = {label: 0 for label in OVERALL_LABELS}
        excluded = 0
        dim_sums: dict[str, dict[str, float]] = {}
        dim_ns: dict[str, int] = {}
        for item in self.order:
            records = sorted(
                by_item.get(item.item_id, []), key=lambda r: r.rater_id
            )
            if not records:
                continue  # unrated original: nothing to aggregate
            consensus = rule([r.overall for r in records])
            if consensus is None:
                if item.origin == "generated":
                    excluded += 1
                continue
            if item.origin == "generated":
                counts[consensus] += 1
            sums = dim_sums.setdefault(
                consensus, {dim: 0.0 for dim in DIMENSIONS}
            )
            for record in records:
                for dim in DIMENSIONS:
                    sums[dim] += record.dimensions[dim]
            dim_ns[consensus] = dim_ns.get(consensus, 0) + len(records)

        dimension_means = {
            label: {dim: sums[dim] / dim_ns[label] for dim in DIMENSIONS}
            for label, sums in dim_sums.items()
        }
        generated_total = len(generated_items)
        acceptable = Fraction(
            counts["positive"] + counts["neutral"], generated_total
        )
        return RatingSummary(
            counts=counts,
            excluded=excluded,
            analyzed=len(self.order) - excluded,
            acceptable_fraction=acceptable,
            dimension_means=dimension_means,
            generated_total=generated_total,
        )


def create_session(
    generated: Sequence[tuple[str, str]],
    originals: Sequence[tuple[str, str]],
    rater_ids: Sequence[str],
    seed: int,
    **kwargs,
) -> ReviewSession:
    """Module-level alias for :meth:`ReviewSession.create`."""
    return ReviewSession.create(generated, originals, rater_ids, seed, **kwargs)


def render_summary(summary: RatingSummary, format: str = "plain") -> str:
    """Human-readable or delimited rendering of a rating summary."""
    data = summary.to_dict()
    if format == "delimited":
        import csv as _csv
        import io as _io

        out = _io.StringIO()
        writer = _csv.writer(out, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for label in OVERALL_LABELS:
            writer.writerow([f"count_{label}", data["counts"][label]])
        writer.writerow(["excluded", data["excluded"]])
        writer.writerow(["analyzed", data["analyzed"]])
        writer.writerow(["generated_total", data["generated_total"]])
        writer.writerow(["acceptable_fraction", f"{data['acceptable_fraction']:.4f}"])
        return out.getvalue()
    lines = [
        f"generated items: {data['generated_total']}",
        "counts: "
        + ", ".join(f"{label}={data['counts'][label]}" for label in OVERALL_LABELS),
        f"excluded: {data['excluded']}",
        f"analyzed: {data['analyzed']}",
        f"acceptable fraction: {data['acceptable_fraction']:.4f}"
        f" ({data['acceptable_fraction_exact']})",
    ]
    for label, means in data["dimension_means"].items():
        rendered = ", ".join(f"{dim}={means[dim]:.2f}" for dim in DIMENSIONS)
        lines.append(f"dimension means [{label}]: {rendered}")
    if format == "markdown":
        return "\n".join(f"- {line}" for line in lines) + "\n"
    return "\n".join(lines) + "\n"
