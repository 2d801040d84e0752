"""Coarse-to-fine impression generation.

Stage one renders a base summarization prompt over the report and asks the
backend for a preliminary draft. Stage two re-prompts with the audience
style (role, shots, audience, length directive) to refine the draft into
the final impression. Templates are versioned resource files and every
prompt is content-addressed by its digest, so runs are reproducible.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, replace
from importlib import resources

from . import providers as prov
from .corpus import Report
from .errors import PipelineError, ProviderError
from .text import count_tokens, split_sentences, truncate_tokens

TIERS = ("base", "detailed", "expert")
STYLES = ("brief", "bullet", "comprehensive")

_PLACEHOLDER_RE = re.compile(
    r"\{(id|clinical_information|findings|draft|shots|audience|role|length)\}"
)


@dataclass(frozen=True)
class StyleTier:
    """Prompt configuration: tier fixes which guidance blocks exist, style
    picks the fine-stage instruction wording."""

    tier: str = "base"
    style: str = "brief"
    role_description: str | None = None
    audience: str | None = None
    length_target_tokens: int | None = None
    shots: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.tier not in TIERS:
            raise PipelineError(f"unknown tier {self.tier!r}; expected one of {TIERS}")
        if self.style not in STYLES:
            raise PipelineError(f"unknown style {self.style!r}; expected one of {STYLES}")
        if len(self.shots) not in (0, 3):
            raise PipelineError("shots must contain exactly 0 or 3 example pairs")
        if self.length_target_tokens is not None and self.length_target_tokens < 1:
            raise PipelineError("length_target_tokens must be >= 1 when set")
        if self.tier == "base":
            if self.role_description or self.audience or self.shots:
                raise PipelineError(
                    "base tier takes no role description, audience, or shots"
                )
        elif self.tier == "detailed":
            if not self.role_description or len(self.shots) != 3:
                raise PipelineError(
                    "detailed tier requires a role description and exactly 3 shots"
                )
            if self.audience:
                raise PipelineError("detailed tier takes no audience statement")
        else:  # expert
            if not (self.role_description and self.audience and len(self.shots) == 3):
                raise PipelineError(
                    "expert tier requires role description, audience, and 3 shots"
                )

    @classmethod
    def from_dict(cls, data: dict) -> "StyleTier":
        return cls(
            tier=data.get("tier", "base"),
            style=data.get("style", "brief"),
            role_description=data.get("role_description"),
            audience=data.get("audience"),
            length_target_tokens=data.get("length_target_tokens"),
            shots=tuple((f, i) for f, i in data.get("shots", ())),
        )

    def to_dict(self) -> dict:
        return {
            "tier": self.tier,
            "style": self.style,
            "role_description": self.role_description,
            "audience": self.audience,
            "length_target_tokens": self.length_target_tokens,
            "shots": [list(pair) for pair in self.shots],
        }


@dataclass(frozen=True)
class GeneratedImpression:
    report_id: str
    coarse_draft: str
    final_text: str
    style: StyleTier
    backend_id: str
    prompt_hashes: tuple[str, str]  # (coarse digest, fine digest)

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "coarse_draft": self.coarse_draft,
            "final_text": self.final_text,
            "style": self.style.to_dict(),
            "backend_id": self.backend_id,
            "prompt_hashes": list(self.prompt_hashes),
        }


@dataclass(frozen=True)
class PipelineConfig:
    include_clinical_information: bool = True
    refine_rounds: int = 1
    max_output_tokens: int = 256
    temperature: float = 0.0
    retries: int = 2
    backoff_s: float = 0.25

    def __post_init__(self) -> None:
        if self.refine_rounds < 1:
            raise PipelineError("refine_rounds must be >= 1")

    def to_dict(self) -> dict:
        return {
            "include_clinical_information": self.include_clinical_information,
            "refine_rounds": self.refine_rounds,
            "max_output_tokens": self.max_output_tokens,
            "temperature": self.temperature,
        }


DEFAULT_PIPELINE = PipelineConfig()


def _template(name: str) -> str:
    return (
        resources.files("radsum.pipeline_templates").joinpath(name).read_text("utf-8")
    )


def _fill(template: str, values: dict[str, str]) -> str:
    # Plain {name} substitution that leaves any braces inside clinical text alone.
    return _PLACEHOLDER_RE.sub(lambda match: values[match.group(1)], template)


def _shots_block(style: StyleTier) -> str:
    parts = [
        f"Example findings:\n{shot_findings}\nExample impression:\n{shot_impression}\n\n"
        for shot_findings, shot_impression in style.shots
    ]
    return "".join(parts)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def render_prompt(
    stage: str,
    report: Report,
    style: StyleTier,
    draft: str | None = None,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
) -> str:
    """Byte-deterministic template expansion for one stage."""
    if stage == "coarse":
        clinical = ""
        if cfg.include_clinical_information and report.clinical_information.strip():
            clinical = f"Clinical information:\n{report.clinical_information}\n\n"
        return _fill(
            _template("coarse.txt"),
            {
                "id": report.id,
                "clinical_information": clinical,
                "findings": report.findings,
            },
        )
    if stage == "fine":
        if draft is None:
            raise PipelineError("fine stage requires a draft")
        role = f"Role: {style.role_description}\n\n" if style.role_description else ""
        audience = f"Audience: {style.audience}\n\n" if style.audience else ""
        length = (
            f"\nTarget length: about {style.length_target_tokens} tokens.\n"
            if style.length_target_tokens is not None
            else ""
        )
        return _fill(
            _template(f"fine_{style.style}.txt"),
            {
                "id": report.id,
                "role": role,
                "audience": audience,
                "shots": _shots_block(style),
                "draft": draft,
                "length": length,
            },
        )
    raise PipelineError(f"unknown stage {stage!r}; expected 'coarse' or 'fine'")


def _call_backend(
    prompt: str,
    report: Report,
    backend: prov.GenerationBackend,
    cfg: PipelineConfig,
    stage: str,
) -> str:
    request = prov.GenerationRequest(
        prompt=prompt,
        max_output_tokens=cfg.max_output_tokens,
        temperature=cfg.temperature,
        metadata={"report_id": report.id},
    )
    try:
        response = prov.generate(
            request, backend, retries=cfg.retries, backoff_s=cfg.backoff_s
        )
    except ProviderError as exc:
        raise PipelineError(f"{stage}: report {report.id!r}: {exc}") from exc
    return response.text.strip()


def coarse_generate(
    report: Report,
    backend: prov.GenerationBackend,
    style: StyleTier,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
) -> str:
    """Preliminary draft from the base summarization prompt."""
    if not report.findings.strip():
        raise PipelineError(f"coarse: report {report.id!r}: findings are empty")
    prompt = render_prompt("coarse", report, style, cfg=cfg)
    return _call_backend(prompt, report, backend, cfg, "coarse")


def normalize_bullets(text: str) -> str:
    """Force every non-empty line to start with the bullet marker. Idempotent."""
    lines = []
    for line in text.split("\n"):
        stripped = line.strip()
        if not stripped:
            lines.append("")
        elif stripped.startswith("- "):
            lines.append(stripped)
        else:
            lines.append(f"- {stripped}")
    return "\n".join(lines)


def enforce_length(text: str, target_tokens: int, joiner: str = " ") -> str:
    """Cap the token count at ceil(1.1 * target), cutting at sentence bounds.

    Falls back to a whitespace-level cut when even the first sentence blows
    the budget, so the cap is absolute.
    """
    budget = math.ceil(1.1 * target_tokens)
    if count_tokens(text) <= budget:
        return text
    kept: list[str] = []
    used = 0
    for sentence in split_sentences(text):
        sentence_tokens = count_tokens(sentence)
        if used + sentence_tokens > budget:
            break
        kept.append(sentence)
        used += sentence_tokens
    if not kept:
        capped, _ = truncate_tokens(text, budget)
        return capped
    return joiner.join(kept)


def refine(
    report: Report,
    draft: str,
    backend: prov.GenerationBackend,
    style: StyleTier,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
    coarse_prompt_digest: str | None = None,
) -> GeneratedImpression:
    """One fine-stage pass: audience-styled rewrite of the draft.

    Bullet style output is normalized so every non-empty line carries the
    bullet marker; a configured length target is enforced with 10% slack.
    """
    if not draft.strip():
        raise PipelineError(f"fine: report {report.id!r}: draft is empty")
    fine_prompt = render_prompt("fine", report, style, draft=draft, cfg=cfg)
    final = _call_backend(fine_prompt, report, backend, cfg, "fine")
    if style.style == "bullet":
        final = normalize_bullets(final)
    if style.length_target_tokens is not None:
        joiner = "\n" if style.style == "bullet" else " "
        final = enforce_length(final, style.length_target_tokens, joiner)
    if not final.strip():
        raise PipelineError(f"fine: report {report.id!r}: empty refinement")
    if coarse_prompt_digest is None:
        coarse_prompt_digest = prompt_hash(render_prompt("coarse", report, style, cfg=cfg))
    return GeneratedImpression(
        report_id=report.id,
        coarse_draft=draft,
        final_text=final,
        style=style,
        backend_id=backend.backend_id,
        prompt_hashes=(coarse_prompt_digest, prompt_hash(fine_prompt)),
    )


def generate(
    report: Report,
    backend: prov.GenerationBackend,
    style: StyleTier,
    cfg: PipelineConfig = DEFAULT_PIPELINE,
) -> GeneratedImpression:
    """Full coarse-to-fine run for one report."""
    draft = coarse_generate(report, backend, style, cfg)
    coarse_digest = prompt_hash(render_prompt("coarse", report, style, cfg=cfg))
    result = refine(report, draft, backend, style, cfg, coarse_digest)
    for _ in range(cfg.refine_rounds - 1):
        result = refine(report, result.final_text, backend, style, cfg, coarse_digest)
    # Provenance keeps the stage-one draft even when refinement iterates.
    return replace(result, coarse_draft=draft)
