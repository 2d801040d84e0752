from __future__ import annotations

import random

import pytest

from radsum.corpus import Dataset, Report
from radsum.providers import HashEmbedding, OverlapNli
from radsum.review import DIMENSIONS

BODY_PARTS = ("chest", "abdomen", "pelvis", "spine", "knee", "shoulder")
OBSERVATIONS = (
    "no acute abnormality",
    "mild degenerative change",
    "small pleural effusion",
    "stable postsurgical appearance",
    "patchy airspace opacity",
    "no displaced fracture",
)


def make_report(i: int, rng: random.Random, n_sentences: int = 4) -> Report:
    part = BODY_PARTS[i % len(BODY_PARTS)]
    sentences = []
    for s in range(n_sentences):
        obs = OBSERVATIONS[(i + s) % len(OBSERVATIONS)]
        sentences.append(f"Series {i} image {s} of the {part} shows {obs}.")
    findings = " ".join(sentences)
    impression = sentences[0]
    return Report(
        id=f"R{i:05d}",
        clinical_information=f"Follow-up of the {part}.",
        findings=findings,
        impression=impression,
        gender=rng.choice(["female", "male"]),
        age_years=rng.randint(1, 99),
    )


def make_dataset(n: int, seed: int = 0, name: str = "synthetic",
                 n_sentences: int = 4) -> Dataset:
    rng = random.Random(seed)
    return Dataset(name=name, reports=[make_report(i, rng, n_sentences) for i in range(n)])


def extractive_dataset(n: int, impression_sentences: int = 1, seed: int = 0,
                       name: str = "extractive") -> Dataset:
    """Reports whose impression equals the first k findings sentences."""
    rng = random.Random(seed)
    reports = []
    for i in range(n):
        base = make_report(i, rng)
        sentences = base.findings.split(". ")
        sentences = [s if s.endswith(".") else s + "." for s in sentences]
        impression = " ".join(sentences[:impression_sentences])
        reports.append(
            Report(
                id=base.id,
                clinical_information=base.clinical_information,
                findings=base.findings,
                impression=impression,
                gender=base.gender,
                age_years=base.age_years,
            )
        )
    return Dataset(name=name, reports=reports)


def full_dimensions(value: int = 3) -> dict[str, int]:
    return {dim: value for dim in DIMENSIONS}


@pytest.fixture
def small_dataset() -> Dataset:
    return make_dataset(5, seed=11, name="small")


@pytest.fixture
def hash_embedding() -> HashEmbedding:
    return HashEmbedding(dimension=48, seed=7)


@pytest.fixture
def overlap_nli() -> OverlapNli:
    return OverlapNli()
