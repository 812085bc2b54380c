"""Prompt templates stored as text assets next to the package."""

from __future__ import annotations

from enum import Enum
from importlib import resources
from string import Template
from typing import Mapping


class Role(str, Enum):
    QUESTION_GENERATION = "question_generation"
    QUESTION_ANSWERING = "question_answering"
    DECOMPOSITION = "decomposition"
    NATOP_QUERY = "natop_query"


class TemplateError(KeyError):
    pass


DEFAULT_VERSION = "v1"
_cache: dict[tuple[str, str], Template] = {}


def load_template(role: Role | str, version: str = DEFAULT_VERSION) -> Template:
    try:
        role = Role(role)
    except ValueError:
        raise TemplateError(f"unknown role {role!r}") from None
    key = (role.value, version)
    if key not in _cache:
        path = resources.files("tablenli") / "templates" / f"{role.value}.{version}.txt"
        if not path.is_file():
            raise TemplateError(f"no template for {role.value} version {version}")
        _cache[key] = Template(path.read_text(encoding="utf-8"))
    return _cache[key]


def render_prompt(role: Role | str, fields: Mapping[str, object], version: str = DEFAULT_VERSION) -> str:
    template = load_template(role, version)
    try:
        return template.substitute({k: str(v) for k, v in fields.items()})
    except KeyError as exc:
        raise TemplateError(f"template {Role(role).value} needs field {exc.args[0]!r}") from None
