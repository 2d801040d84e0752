"""Datasets of three-column radiology reports: load, validate, summarize, split.

A report carries three text columns (clinical information, findings,
impression) plus optional demographics. Two file formats are supported and
round-trip losslessly:

* ``delimited-table`` — CSV with a header row; exact column names
  ``clinical_information, findings, impression, gender, age, id``; extra
  columns are ignored.
* ``record-lines`` — one JSON object per line with the same keys; optional
  keys are simply absent.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataFormatError, StratumError
from .text import TokenizerConfig, DEFAULT_TOKENIZER, count_tokens

GENDERS = ("female", "male", "other", "unknown")
SOURCES = ("internal", "external")

REQUIRED_COLUMNS = ("clinical_information", "findings", "impression", "id")
ALL_COLUMNS = ("clinical_information", "findings", "impression", "gender", "age", "id")

STRATA_FIELDS = ("gender", "age_bucket")


@dataclass(frozen=True)
class Report:
    """One clinical record."""

    id: str
    clinical_information: str
    findings: str
    impression: str
    gender: str | None = None
    age_years: int | None = None
    source: str = "internal"

    def __post_init__(self) -> None:
        if not self.id:
            raise DataFormatError("report id must be non-empty")
        if not self.findings.strip():
            raise DataFormatError(f"report {self.id!r}: findings must be non-empty")
        if self.gender is not None and self.gender not in GENDERS:
            raise DataFormatError(
                f"report {self.id!r}: gender {self.gender!r} not one of {GENDERS}"
            )
        if self.age_years is not None and self.age_years < 0:
            raise DataFormatError(f"report {self.id!r}: age_years must be non-negative")
        if self.source not in SOURCES:
            raise DataFormatError(
                f"report {self.id!r}: source {self.source!r} not one of {SOURCES}"
            )

    def age_bucket(self) -> str:
        """Decade bucket: 0-9, 10-19, ..., 80-89, 90+; 'unknown' when absent."""
        if self.age_years is None:
            return "unknown"
        if self.age_years >= 90:
            return "90+"
        lo = (self.age_years // 10) * 10
        return f"{lo}-{lo + 9}"

    def stratum_value(self, field_name: str) -> str:
        if field_name == "gender":
            return self.gender if self.gender is not None else "unknown"
        if field_name == "age_bucket":
            return self.age_bucket()
        raise StratumError(
            f"unknown stratum field {field_name!r}; expected one of {STRATA_FIELDS}"
        )


@dataclass
class Dataset:
    """Ordered list of reports with unique ids."""

    name: str
    reports: list[Report] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for idx, report in enumerate(self.reports):
            if report.id in seen:
                raise DataFormatError(
                    f"duplicate report id {report.id!r} at record index {idx}"
                )
            seen.add(report.id)

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self):
        return iter(self.reports)

    def by_id(self, report_id: str) -> Report:
        for report in self.reports:
            if report.id == report_id:
                return report
        raise KeyError(report_id)


@dataclass(frozen=True)
class CorpusStats:
    report_count: int
    mean_tokens_per_report: float
    total_tokens: int
    mean_findings_to_impression_token_ratio: float


def _report_from_record(
    record: dict, index: int, source: str, require_impression: bool
) -> Report:
    for column in REQUIRED_COLUMNS:
        if record.get(column) in (None, ""):
            if column == "impression" and not require_impression:
                continue
            raise DataFormatError(
                f"record index {index}: missing required column {column!r}"
            )
    gender_raw = record.get("gender")
    gender = None
    if gender_raw not in (None, ""):
        gender = str(gender_raw).strip().lower()
        if gender not in GENDERS:
            raise DataFormatError(
                f"record index {index}: gender {gender_raw!r} not one of {GENDERS}"
            )
    age_raw = record.get("age")
    age = None
    if age_raw not in (None, ""):
        try:
            age = int(age_raw)
        except (TypeError, ValueError):
            raise DataFormatError(
                f"record index {index}: age {age_raw!r} is not an integer"
            ) from None
        if age < 0:
            raise DataFormatError(f"record index {index}: age must be non-negative")
    try:
        return Report(
            id=str(record["id"]),
            clinical_information=str(record.get("clinical_information") or ""),
            findings=str(record["findings"]),
            impression=str(record.get("impression") or ""),
            gender=gender,
            age_years=age,
            source=source,
        )
    except DataFormatError as exc:
        raise DataFormatError(f"record index {index}: {exc}") from None


def load_dataset(
    path: str | Path,
    format: str = "delimited-table",
    name: str | None = None,
    column_map: dict[str, str] | None = None,
    source: str = "internal",
    require_impression: bool = True,
) -> Dataset:
    """Load a dataset file into one Report per record.

    ``column_map`` maps canonical column names to the names used in the file
    (the import adapter for externally sourced tables). Missing optional
    fields become absent; errors carry the offending record index.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"dataset file not found: {path}")
    if format == "delimited-table":
        records = _read_delimited(path, column_map)
    elif format == "record-lines":
        records = _read_record_lines(path, column_map)
    else:
        raise DataFormatError(
            f"unknown dataset format {format!r}; expected 'delimited-table' or 'record-lines'"
        )
    reports = [
        _report_from_record(record, idx, source, require_impression)
        for idx, record in enumerate(records)
    ]
    dataset = Dataset(name=name or path.stem, reports=reports)
    return dataset


def _apply_column_map(record: dict, column_map: dict[str, str] | None) -> dict:
    if not column_map:
        return record
    mapped = dict(record)
    for canonical, actual in column_map.items():
        if actual in record:
            mapped[canonical] = record[actual]
    return mapped


def _read_delimited(path: Path, column_map: dict[str, str] | None) -> list[dict]:
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            expected = set(REQUIRED_COLUMNS)
            if column_map:
                expected = {column_map.get(col, col) for col in REQUIRED_COLUMNS}
            missing = sorted(expected - set(header))
            if missing:
                raise DataFormatError(
                    f"{path}: missing required column(s): {', '.join(missing)}"
                )
            return [_apply_column_map(row, column_map) for row in reader]
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"unreadable dataset file {path}: {exc}") from exc


def _read_record_lines(path: Path, column_map: dict[str, str] | None) -> list[dict]:
    records = []
    try:
        with path.open(encoding="utf-8") as handle:
            for idx, line in enumerate(handle):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataFormatError(
                        f"record index {idx}: invalid record line: {exc}"
                    ) from None
                if not isinstance(record, dict):
                    raise DataFormatError(
                        f"record index {idx}: record line is not an object"
                    )
                records.append(_apply_column_map(record, column_map))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"unreadable dataset file {path}: {exc}") from exc
    return records


def save_dataset(dataset: Dataset, path: str | Path, format: str = "delimited-table") -> None:
    """Write a dataset back to disk; inverse of :func:`load_dataset`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "delimited-table":
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(ALL_COLUMNS))
            writer.writeheader()
            for report in dataset:
                writer.writerow(
                    {
                        "clinical_information": report.clinical_information,
                        "findings": report.findings,
                        "impression": report.impression,
                        "gender": report.gender or "",
                        "age": "" if report.age_years is None else report.age_years,
                        "id": report.id,
                    }
                )
    elif format == "record-lines":
        with path.open("w", encoding="utf-8") as handle:
            for report in dataset:
                record: dict = {
                    "id": report.id,
                    "clinical_information": report.clinical_information,
                    "findings": report.findings,
                    "impression": report.impression,
                }
                if report.gender is not None:
                    record["gender"] = report.gender
                if report.age_years is not None:
                    record["age"] = report.age_years
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        raise DataFormatError(f"unknown dataset format {format!r}")


def dataset_stats(
    dataset: Dataset, tok: TokenizerConfig = DEFAULT_TOKENIZER
) -> CorpusStats:
    """Token statistics over a dataset.

    The findings/impression ratio is the arithmetic mean over reports of
    (findings token count / impression token count); a zero-token impression
    is an error naming the report.
    """
    if len(dataset) == 0:
        raise DataFormatError(f"empty dataset {dataset.name!r}")
    total = 0
    ratios = []
    for report in dataset:
        findings_tokens = count_tokens(report.findings, tok)
        impression_tokens = count_tokens(report.impression, tok)
        info_tokens = count_tokens(report.clinical_information, tok)
        total += findings_tokens + impression_tokens + info_tokens
        if impression_tokens == 0:
            raise DataFormatError(
                f"report {report.id!r}: impression has zero tokens; ratio undefined"
            )
        ratios.append(findings_tokens / impression_tokens)
    return CorpusStats(
        report_count=len(dataset),
        mean_tokens_per_report=total / len(dataset),
        total_tokens=total,
        mean_findings_to_impression_token_ratio=sum(ratios) / len(ratios),
    )


def _largest_remainder(ideals: list[float], total: int) -> list[int]:
    """Integer allocation summing to ``total``, each within 1 of its ideal.

    Floors first, then hands out the remainder by descending fractional part
    (ties broken by list position, which callers keep deterministic).
    """
    floors = [math.floor(v) for v in ideals]
    remainder = total - sum(floors)
    order = sorted(
        range(len(ideals)), key=lambda i: (-(ideals[i] - floors[i]), i)
    )
    for i in order[:remainder]:
        floors[i] += 1
    return floors


def stratified_split(
    dataset: Dataset,
    train_n: int,
    test_n: int,
    strata: Sequence[str],
    seed: int,
) -> tuple[Dataset, Dataset]:
    """Deterministic stratified train/test split with exact output sizes.

    Within every stratum the train share matches the global train:test
    proportion within one report. Outputs are disjoint, preserve the input
    order, and are bit-identical across runs for a fixed seed.
    """
    if train_n < 0 or test_n < 0:
        raise StratumError("train_n and test_n must be non-negative")
    if train_n + test_n > len(dataset):
        raise StratumError(
            f"requested {train_n}+{test_n} reports but dataset has {len(dataset)}"
        )
    for field_name in strata:
        if field_name not in STRATA_FIELDS:
            raise StratumError(
                f"unknown stratum field {field_name!r}; expected one of {STRATA_FIELDS}"
            )

    groups: dict[tuple[str, ...], list[int]] = {}
    for idx, report in enumerate(dataset):
        key = tuple(report.stratum_value(f) for f in strata)
        groups.setdefault(key, []).append(idx)
    keys = sorted(groups)

    total_take = train_n + test_n
    n = len(dataset)
    take_per_stratum = _largest_remainder(
        [total_take * len(groups[k]) / n for k in keys], total_take
    )
    train_share = train_n / total_take if total_take else 0.0
    train_per_stratum = _largest_remainder(
        [take * train_share for take in take_per_stratum], train_n
    )

    rng = random.Random(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for key, take, take_train in zip(keys, take_per_stratum, train_per_stratum):
        members = list(groups[key])
        if take > len(members):
            raise StratumError(
                f"stratum {key!r} has {len(members)} reports but needs {take}"
            )
        rng.shuffle(members)
        selected = members[:take]
        train_idx.extend(selected[:take_train])
        test_idx.extend(selected[take_train:])

    train_idx.sort()
    test_idx.sort()
    train = Dataset(
        name=f"{dataset.name}-train",
        reports=[dataset.reports[i] for i in train_idx],
    )
    test = Dataset(
        name=f"{dataset.name}-test",
        reports=[dataset.reports[i] for i in test_idx],
    )
    return train, test


def with_findings(dataset: Dataset, findings_by_id: dict[str, str]) -> Dataset:
    """Copy of the dataset with findings replaced per report id (noise runs)."""
    reports = [
        replace(r, findings=findings_by_id.get(r.id, r.findings)) for r in dataset
    ]
    return Dataset(name=dataset.name, reports=reports)


def concat(name: str, parts: Iterable[Dataset]) -> Dataset:
    reports: list[Report] = []
    for part in parts:
        reports.extend(part.reports)
    return Dataset(name=name, reports=reports)
