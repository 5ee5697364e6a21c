"""Prompt template library.

Templates are versioned data, not code: they load from JSON, declare their
slots, and render by pure substitution. Rendering never uses str.format, so
braces in user text cannot inject anything. The (template_id, bindings) pair
fully determines the rendered prompt, which is what makes LLM traffic
replayable and regression-testable.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

PLACEHOLDER_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")

PROMPTS_SCHEMA_VERSION = 1


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    slots: tuple[str, ...]
    text: str

    def __post_init__(self) -> None:
        found = set(PLACEHOLDER_RE.findall(self.text))
        declared = set(self.slots)
        if len(self.slots) != len(declared):
            raise PromptError(f"{self.template_id}: duplicate slot names")
        undeclared = found - declared
        if undeclared:
            raise PromptError(f"{self.template_id}: undeclared placeholders {sorted(undeclared)}")
        unused = declared - found
        if unused:
            raise PromptError(f"{self.template_id}: slots never used {sorted(unused)}")


@dataclass(frozen=True)
class PromptLibrary:
    templates: dict[str, PromptTemplate]

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self.templates[template_id]
        except KeyError:
            raise PromptError(f"unknown template {template_id!r}") from None


def prompt_library_from_json_obj(obj: dict) -> PromptLibrary:
    if obj.get("schema") != PROMPTS_SCHEMA_VERSION:
        raise PromptError(f"unsupported prompts schema {obj.get('schema')!r}")
    templates: dict[str, PromptTemplate] = {}
    for raw in obj["templates"]:
        template = PromptTemplate(str(raw["template_id"]), tuple(raw["slots"]), str(raw["text"]))
        if template.template_id in templates:
            raise PromptError(f"duplicate template id {template.template_id!r}")
        templates[template.template_id] = template
    return PromptLibrary(templates)


def load_prompt_library(path: Path | None = None) -> PromptLibrary:
    if path is None:
        text = resources.files("taskguide.services").joinpath("data/prompts.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PromptError(f"prompts file is not valid JSON: {exc}") from exc
    return prompt_library_from_json_obj(obj)


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    extra = set(bindings) - set(template.slots)
    if extra:
        raise PromptError(f"{template.template_id}: unknown bindings {sorted(extra)}")
    missing = set(template.slots) - set(bindings)
    if missing:
        raise PromptError(f"{template.template_id}: missing bindings {sorted(missing)}")
    for name, value in bindings.items():
        if not isinstance(value, str):
            raise PromptError(f"{template.template_id}: binding {name!r} must be a string")
    return PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], template.text)


def bindings_hash(bindings: dict[str, str]) -> str:
    canonical = json.dumps(bindings, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def fixture_key(template_id: str, bindings: dict[str, str]) -> str:
    return f"{template_id}:{bindings_hash(bindings)}"
