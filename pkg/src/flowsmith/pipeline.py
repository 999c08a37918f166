"""Generate-critique-refine orchestration.

One run turns a process description into an activity diagram.  The baseline
variant is a single generation call.  Loop variants generate a candidate and
then cycle critique -> refine: a candidate is accepted on the first empty
critique; after five rejected candidates the attempt is discarded and the
variant restarts once from generation; a second failed attempt returns the
last candidate unaccepted, with a warning.

Structural findings come either from the algorithmic checker or from an LLM
call, depending on the variant; alignment findings always come from an LLM
call when the variant enables them.  When both constraint families are
LLM-checked they share a single combined call.  Candidates travel through
prompts as raw CSV text.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from . import codec
from .backend import (
    STEP_CRITIQUE_ALIGNMENT,
    STEP_CRITIQUE_COMBINED,
    STEP_CRITIQUE_STRUCTURAL,
    STEP_GENERATE,
    STEP_REFINE,
    ChatRequest,
    LlmBackend,
    Usage,
    extract_csv_candidates,
)
from .constraints import ALIGNMENT_RULES, STRUCTURAL_RULES
from .critique import (
    PARSE_ISSUE,
    SOURCE_ALGORITHMIC,
    SOURCE_LLM,
    Critique,
    CritiqueItem,
    merge,
)
from .diagram import ActivityDiagram
from .validation import render_critique, validate


class PromptError(ValueError):
    pass


_CRITIQUE_STEPS = frozenset(
    {STEP_CRITIQUE_STRUCTURAL, STEP_CRITIQUE_ALIGNMENT, STEP_CRITIQUE_COMBINED}
)


class Variant(Enum):
    BASELINE = "baseline"
    STRUCT_LLM_ALIGN_LLM = "struct-llm-align-llm"
    STRUCT_ALG_ALIGN_LLM = "struct-alg-align-llm"
    STRUCT_LLM_ALIGN_NA = "struct-llm-align-na"
    STRUCT_ALG_ALIGN_NA = "struct-alg-align-na"

    @property
    def has_loop(self) -> bool:
        return self is not Variant.BASELINE

    @property
    def llm_structural(self) -> bool:
        return self in (Variant.STRUCT_LLM_ALIGN_LLM, Variant.STRUCT_LLM_ALIGN_NA)

    @property
    def algorithmic_structural(self) -> bool:
        return self in (Variant.STRUCT_ALG_ALIGN_LLM, Variant.STRUCT_ALG_ALIGN_NA)

    @property
    def llm_alignment(self) -> bool:
        return self in (Variant.STRUCT_LLM_ALIGN_LLM, Variant.STRUCT_ALG_ALIGN_LLM)


@dataclass
class PromptTemplates:
    role_generate: str
    role_critique: str
    role_refine: str
    format_definition: str
    one_shot_example: str

    @classmethod
    def default(cls) -> "PromptTemplates":
        def read(name: str) -> str:
            return (
                resources.files("flowsmith.prompts")
                .joinpath(name)
                .read_text(encoding="utf-8")
                .strip()
            )

        return cls(
            role_generate=read("role_generate.txt"),
            role_critique=read("role_critique.txt"),
            role_refine=read("role_refine.txt"),
            format_definition=read("format_definition.txt"),
            one_shot_example=read("one_shot_example.txt"),
        )

    @classmethod
    def from_paths(cls, paths: dict[str, str]) -> "PromptTemplates":
        """Defaults with per-template overrides read from files."""
        templates = cls.default()
        for name, path in paths.items():
            if name not in templates.__dict__:
                raise PromptError(f"unknown prompt template '{name}'")
            setattr(templates, name, Path(path).read_text(encoding="utf-8").strip())
        return templates


@dataclass
class PipelineConfig:
    iteration_cap: int = 5
    restart_limit: int = 1
    templates: PromptTemplates | None = None

    def resolved_templates(self) -> PromptTemplates:
        return self.templates or PromptTemplates.default()


@dataclass
class CostLedger:
    calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    reasoning_tokens: int = 0

    def add(self, usage: Usage) -> None:
        self.calls += 1
        self.input_tokens += usage.input_tokens
        self.output_tokens += usage.output_tokens
        self.reasoning_tokens += usage.reasoning_tokens


@dataclass(frozen=True)
class Candidate:
    """One diagram proposal: the raw text plus its parse, when it has one."""

    text: str
    diagram: ActivityDiagram | None
    parse_error: str | None = None


@dataclass
class RunRecord:
    variant: Variant
    candidate_history: list[Candidate] = field(default_factory=list)
    critiques: list[Critique] = field(default_factory=list)
    final: ActivityDiagram | None = None
    final_text: str = ""
    accepted: bool = False
    restarted: bool = False
    cost: CostLedger = field(default_factory=CostLedger)
    warnings: list[str] = field(default_factory=list)


# -- prompt assembly ----------------------------------------------------------

def assemble_prompt(
    step: str,
    templates: PromptTemplates,
    description: str,
    candidate_text: str | None = None,
    history: tuple[str, ...] = (),
    critique_text: str | None = None,
) -> ChatRequest:
    """Deterministic prompt text for one pipeline step.

    Element order is fixed: constraints, process description, output format,
    one-shot example, candidate, rejected-candidate history, critique.  The
    generation and refinement prompts always list both constraint families; a
    critique prompt lists only the families the LLM is being asked to check.
    """
    if not description:
        raise PromptError("process description is required")

    critique_steps = _CRITIQUE_STEPS
    if step not in critique_steps | {STEP_GENERATE, STEP_REFINE}:
        raise PromptError(f"unknown pipeline step '{step}'")

    sections: list[str] = []
    structural = step not in critique_steps or step in (
        STEP_CRITIQUE_STRUCTURAL,
        STEP_CRITIQUE_COMBINED,
    )
    alignment = step not in critique_steps or step in (
        STEP_CRITIQUE_ALIGNMENT,
        STEP_CRITIQUE_COMBINED,
    )
    rule_lines = []
    if structural:
        rule_lines.extend(f"{cid}. {text}" for cid, text in STRUCTURAL_RULES.items())
    if alignment:
        rule_lines.extend(f"{cid}. {text}" for cid, text in ALIGNMENT_RULES.items())
    sections.append("## Constraints\n" + "\n".join(rule_lines))
    sections.append("## Process Description\n" + description)

    if step in (STEP_GENERATE, STEP_REFINE):
        sections.append("## Output Format\n" + templates.format_definition)
        sections.append("## Example\n" + templates.one_shot_example)

    if step in critique_steps or step == STEP_REFINE:
        if candidate_text is None:
            raise PromptError(f"step '{step}' requires a candidate diagram")
        sections.append("## Candidate Diagram\n" + candidate_text)

    if step == STEP_REFINE:
        rendered_history = "\n\n".join(history) if history else "(none)"
        sections.append("## Previously Rejected Candidates\n" + rendered_history)
        if critique_text is None:
            raise PromptError("the refine step requires a critique")
        sections.append("## Critique\n" + critique_text)

    roles = {
        STEP_GENERATE: templates.role_generate,
        STEP_REFINE: templates.role_refine,
        STEP_CRITIQUE_STRUCTURAL: templates.role_critique,
        STEP_CRITIQUE_ALIGNMENT: templates.role_critique,
        STEP_CRITIQUE_COMBINED: templates.role_critique,
    }
    return ChatRequest(
        role_definition=roles[step], body="\n\n".join(sections), step=step
    )


_ITEM_TAG = re.compile(
    r"^\s*(?:[-*]\s*)?(?:\d+[.):]\s*)?(SC[1-6]|AC[1-5])\b[\s:.\-]*(.*)$"
)
_NO_ISSUES = re.compile(r"^\s*(?:no\s+issues?\.?)\s*$", re.IGNORECASE)


def parse_critique_text(text: str) -> Critique:
    """LLM critique text -> items; tagged lines keep their constraint id."""
    if _NO_ISSUES.match(text.strip()):
        return Critique()
    items: list[CritiqueItem] = []
    for line in text.splitlines():
        if not line.strip() or _NO_ISSUES.match(line):
            continue
        tag = _ITEM_TAG.match(line)
        if tag:
            message = tag.group(2).strip() or line.strip()
            items.append(CritiqueItem(tag.group(1), SOURCE_LLM, message))
        else:
            items.append(CritiqueItem(None, SOURCE_LLM, line.strip()))
    if not items and text.strip():
        items.append(CritiqueItem(None, SOURCE_LLM, text.strip()))
    return Critique(tuple(items))


# -- the run itself -----------------------------------------------------------

class Pipeline:
    def __init__(
        self,
        variant: Variant,
        backend: LlmBackend,
        config: PipelineConfig | None = None,
    ):
        self.variant = variant
        self.backend = backend
        self.config = config or PipelineConfig()
        self.templates = self.config.resolved_templates()

    def run(self, description: str) -> RunRecord:
        if not description:
            raise PromptError("process description is required")
        record = RunRecord(variant=self.variant)

        if not self.variant.has_loop:
            candidate = self._generate(description, record)
            record.final = candidate.diagram
            record.final_text = candidate.text
            record.accepted = candidate.diagram is not None
            if not record.accepted:
                record.warnings.append(
                    f"baseline output not parseable: {candidate.parse_error}"
                )
            return record

        candidate: Candidate | None = None
        for attempt in range(self.config.restart_limit + 1):
            record.restarted = attempt > 0
            candidate = self._generate(description, record)
            attempt_history: list[Candidate] = []
            for iteration in range(1, self.config.iteration_cap + 1):
                critique = self._critique(description, candidate, record)
                record.critiques.append(critique)
                if critique.empty:
                    record.final = candidate.diagram
                    record.final_text = candidate.text
                    record.accepted = True
                    return record
                record.candidate_history.append(candidate)
                if iteration == self.config.iteration_cap:
                    break
                refined = self._refine(
                    description, candidate, attempt_history, critique, record
                )
                attempt_history.append(candidate)
                candidate = refined

        record.final = candidate.diagram if candidate else None
        record.final_text = candidate.text if candidate else ""
        record.accepted = False
        record.warnings.append(
            "no candidate passed the critique within the configured attempts"
        )
        return record

    # -- steps ---------------------------------------------------------------

    def _call(self, request: ChatRequest, record: RunRecord):
        response = self.backend.complete(request)
        record.cost.add(response.usage)
        if response.usage_warning:
            record.warnings.append(f"usage missing or malformed on a {request.step} call")
        return response

    def _generate(self, description: str, record: RunRecord) -> Candidate:
        request = assemble_prompt(STEP_GENERATE, self.templates, description)
        return self._to_candidate(self._call(request, record).text)

    def _refine(
        self,
        description: str,
        candidate: Candidate,
        history: list[Candidate],
        critique: Critique,
        record: RunRecord,
    ) -> Candidate:
        request = assemble_prompt(
            STEP_REFINE,
            self.templates,
            description,
            candidate_text=candidate.text,
            history=tuple(c.text for c in history),
            critique_text=critique.to_text(),
        )
        return self._to_candidate(self._call(request, record).text)

    def _critique(
        self, description: str, candidate: Candidate, record: RunRecord
    ) -> Critique:
        if candidate.diagram is None:
            return Critique(
                (
                    CritiqueItem(
                        PARSE_ISSUE,
                        SOURCE_ALGORITHMIC,
                        f"output not parseable: {candidate.parse_error}",
                    ),
                )
            )
        return merge(*self._critique_parts(description, candidate, record))

    def _critique_parts(self, description, candidate, record) -> list[Critique]:
        if self.variant.llm_structural and self.variant.llm_alignment:
            return [
                self._llm_critique(
                    STEP_CRITIQUE_COMBINED, description, candidate, record
                )
            ]
        parts: list[Critique] = []
        if self.variant.algorithmic_structural:
            parts.append(render_critique(validate(candidate.diagram)))
        elif self.variant.llm_structural:
            parts.append(
                self._llm_critique(
                    STEP_CRITIQUE_STRUCTURAL, description, candidate, record
                )
            )
        if self.variant.llm_alignment:
            parts.append(
                self._llm_critique(
                    STEP_CRITIQUE_ALIGNMENT, description, candidate, record
                )
            )
        return parts

    def _llm_critique(self, step, description, candidate, record) -> Critique:
        request = assemble_prompt(
            step, self.templates, description, candidate_text=candidate.text
        )
        return parse_critique_text(self._call(request, record).text)

    def _to_candidate(self, response_text: str) -> Candidate:
        error = "empty response"
        for block in extract_csv_candidates(response_text):
            try:
                return Candidate(block, codec.parse(block))
            except codec.ParseError as exc:
                error = str(exc)
        return Candidate(response_text, None, error)


def run(
    variant: Variant,
    description: str,
    backend: LlmBackend,
    config: PipelineConfig | None = None,
) -> RunRecord:
    return Pipeline(variant, backend, config).run(description)


# -- persistence ---------------------------------------------------------------

def save_run_record(record: RunRecord, directory: str | Path) -> Path:
    """Write a run to disk: candidates and the final diagram as CSV files,
    critiques as tab-separated text, the rest as a JSON summary."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, candidate in enumerate(record.candidate_history, 1):
        (directory / f"candidate_{index:02d}.csv").write_text(
            candidate.text + "\n", encoding="utf-8"
        )
    for index, critique in enumerate(record.critiques, 1):
        lines = [
            f"{item.constraint or '-'}\t{item.source}\t{item.message}"
            for item in critique.items
        ]
        (directory / f"critique_{index:02d}.txt").write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
        )
    if record.final is not None:
        (directory / "final.csv").write_text(
            codec.serialize(record.final), encoding="utf-8"
        )
    elif record.final_text:
        (directory / "final_unparsed.txt").write_text(
            record.final_text + "\n", encoding="utf-8"
        )
    summary = {
        "variant": record.variant.value,
        "accepted": record.accepted,
        "restarted": record.restarted,
        "warnings": record.warnings,
        "candidates": len(record.candidate_history),
        "critiques": len(record.critiques),
        "cost": {
            "calls": record.cost.calls,
            "input_tokens": record.cost.input_tokens,
            "output_tokens": record.cost.output_tokens,
            "reasoning_tokens": record.cost.reasoning_tokens,
        },
    }
    (directory / "record.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return directory
