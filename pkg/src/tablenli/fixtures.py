"""Mock fixtures built from the bundled worked-example transcripts.

Transcripts store model outputs keyed by their semantic inputs (claim,
question, span pair). Prompts are rendered here with the live templates, so
editing a template and rebuilding keeps the fixtures in step.

    python3 -m tablenli.fixtures            # rewrite the bundled fixture file
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .gateway import Gateway, MockBackend, prompt_hash
from .gateway.prompts import Role
from .tables import Table, table_from_dict

FIXTURE_FILE = "worked_traces.json"


def load_transcripts() -> list[dict]:
    text = (resources.files("tablenli") / "data" / "transcripts.json").read_text(encoding="utf-8")
    return json.loads(text)


def case_tables(case: Mapping) -> list[Table]:
    return [table_from_dict(t, source_id=case["id"]) for t in case["tables"]]


def build_entries(cases: Sequence[Mapping], gateway: Gateway | None = None) -> list[dict]:
    gw = gateway or Gateway(MockBackend())
    entries: list[dict] = []

    def add(role: Role, prompt: str, response: str) -> None:
        entries.append({"role": role.value, "prompt_sha256": prompt_hash(prompt),
                        "prompt": prompt, "response": response})

    for case in cases:
        tables = case_tables(case)
        if case.get("decomposition"):
            add(Role.DECOMPOSITION, gw.prompt_for(Role.DECOMPOSITION, claim=case["claim"]),
                case["decomposition"])
        for unit in case["units"]:
            text = unit["text"]
            add(Role.QUESTION_GENERATION,
                gw.prompt_for(Role.QUESTION_GENERATION, claim=text, tables=tables), unit["qg"])
            for question, output in unit["qa"].items():
                add(Role.QUESTION_ANSWERING,
                    gw.prompt_for(Role.QUESTION_ANSWERING, claim=text, question=question,
                                  tables=tables), output)
        for q in case.get("natop", []):
            add(Role.NATOP_QUERY,
                gw.prompt_for(Role.NATOP_QUERY, claim_span=q["claim_span"],
                              evidence_span=q["evidence"]), q["answer"])
    return entries


def render_fixture_file(entries: Sequence[Mapping]) -> str:
    return json.dumps({"entries": list(entries)}, ensure_ascii=False, indent=1) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    out_dir = Path(argv[0]) if argv else Path(str(resources.files("tablenli") / "data" / "fixtures"))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / FIXTURE_FILE
    path.write_text(render_fixture_file(build_entries(load_transcripts())), encoding="utf-8")
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
