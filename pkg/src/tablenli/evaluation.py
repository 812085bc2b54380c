"""Dataset loading, metrics and the evaluation loop."""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .natlog import Verdict
from .numerals import find_quantities
from .pipeline import Engine, Subclaim, UsageError, VerdictReport, degraded_proof
from .tables import Table, TableError, parse_table, table_from_dict

log = logging.getLogger(__name__)

NOT_SUPPORTED = "NOT_SUPPORTED"


class LabelSpace(str, Enum):
    THREE_WAY = "three_way"
    TWO_WAY = "two_way"


_LABELS = {
    "SUPPORTS": "SUPPORTS", "SUPPORTED": "SUPPORTS", "1": "SUPPORTS", "TRUE": "SUPPORTS",
    "REFUTES": "REFUTES", "REFUTED": "REFUTES", "0": "REFUTES", "FALSE": "REFUTES",
    "S": "SUPPORTS", "R": "REFUTES", "N": "NEI",
    "NEI": "NEI", "NOT ENOUGH INFO": "NEI", "NOT_ENOUGH_INFO": "NEI",
    "NOT_SUPPORTED": NOT_SUPPORTED, "NOT SUPPORTED": NOT_SUPPORTED,
}


def normalize_label(label) -> str:
    if isinstance(label, Verdict):
        return label.value
    key = str(label).strip().upper()
    if key not in _LABELS:
        raise UsageError(f"unknown label {label!r}")
    return _LABELS[key]


def project_label(label, space: LabelSpace | str) -> str:
    lab = normalize_label(label)
    if LabelSpace(space) is LabelSpace.TWO_WAY and lab in ("REFUTES", "NEI"):
        return NOT_SUPPORTED
    return lab


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    n: int
    accuracy: float | None
    macro_f1: float | None
    execution_found: float | None
    per_label: dict[str, LabelScores]
    subset: str = "full"
    label_space: str = LabelSpace.THREE_WAY.value
    subset_source: str | None = None

    @property
    def undefined(self) -> bool:
        return self.n == 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "execution_found": self.execution_found,
            "per_label": {k: vars(v) for k, v in self.per_label.items()},
            "subset": self.subset,
            "subset_source": self.subset_source,
            "label_space": self.label_space,
            "undefined": self.undefined,
        }


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def compute_metrics(preds: Sequence, golds: Sequence, label_space: LabelSpace | str = LabelSpace.THREE_WAY,
                    execution_found: Sequence[bool] | None = None, subset: str = "full",
                    subset_source: str | None = None) -> MetricsReport:
    """Accuracy and macro-F1, averaged over labels present in the gold set."""
    if len(preds) != len(golds):
        raise UsageError(f"{len(preds)} predictions vs {len(golds)} gold labels")
    if execution_found is not None and len(execution_found) != len(preds):
        raise UsageError("execution_found must align with predictions")
    space = LabelSpace(label_space)
    p = [project_label(x, space) for x in preds]
    g = [project_label(x, space) for x in golds]
    n = len(g)
    if n == 0:
        return MetricsReport(0, None, None, None, {}, subset, space.value, subset_source)
    per_label = {}
    for lab in sorted(set(g)):
        tp = sum(a == lab and b == lab for a, b in zip(p, g))
        pred_n = sum(a == lab for a in p)
        gold_n = sum(b == lab for b in g)
        prec, rec = _ratio(tp, pred_n), _ratio(tp, gold_n)
        f1 = _ratio(2 * tp, pred_n + gold_n)
        per_label[lab] = LabelScores(prec, rec, f1, gold_n)
    acc = sum(a == b for a, b in zip(p, g)) / n
    macro = sum(s.f1 for s in per_label.values()) / len(per_label)
    ef = None if execution_found is None else sum(map(bool, execution_found)) / n
    return MetricsReport(n, acc, macro, ef, per_label, subset, space.value, subset_source)


# -- datasets

FORMATS = ("feverous-jsonl", "tabfact-jsonl")


@dataclass
class Instance:
    id: str
    claim: str
    label: str | None
    tables: list[Table]
    numerical: bool | None = None
    raw: dict = field(default_factory=dict, repr=False)


@dataclass
class Dataset:
    instances: list[Instance]
    format: str
    label_space: LabelSpace
    skipped: int = 0


def _numerical_flag(rec: Mapping) -> bool | None:
    if "numerical" in rec:
        return bool(rec["numerical"])
    challenge = rec.get("challenge")
    if challenge is not None:
        return "numer" in str(challenge).lower()
    return None


def parse_record(rec: Mapping, fmt: str, lineno: int = 0) -> Instance:
    if not isinstance(rec, Mapping):
        raise UsageError("record is not an object")
    claim = rec["claim"]
    if not isinstance(claim, str) or not claim.strip():
        raise UsageError("claim must be non-empty text")
    ident = str(rec.get("id", lineno))
    if fmt == "tabfact-jsonl":
        raw_tables = rec["tables"] if "tables" in rec else [rec["table"]]
        tables = []
        for t in raw_tables:
            if isinstance(t, Mapping):
                tables.append(table_from_dict(t, ident, header_row_count=1))
            else:
                tables.append(parse_table(t, rec.get("caption", ""), 1, ident))
    else:
        tables = [table_from_dict(t, ident) for t in rec["tables"]]
    if not tables:
        raise UsageError("no tables")
    label = rec.get("label")
    return Instance(ident, claim, None if label is None else normalize_label(label), tables,
                    _numerical_flag(rec), dict(rec))


def load_dataset(path: str | Path, fmt: str = "feverous-jsonl") -> Dataset:
    """Read a JSONL dataset; malformed lines are skipped with a warning."""
    if fmt not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}")
    instances, skipped = [], 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                instances.append(parse_record(json.loads(line), fmt, lineno))
            except (json.JSONDecodeError, KeyError, TypeError, UsageError, TableError) as exc:
                skipped += 1
                log.warning("%s:%d skipped: %s", path, lineno, exc)
    space = LabelSpace.TWO_WAY if fmt == "tabfact-jsonl" else LabelSpace.THREE_WAY
    return Dataset(instances, fmt, space, skipped)


def numerical_subset(instances: Sequence[Instance]) -> tuple[list[Instance], str]:
    """Instances needing numerical reasoning, and which criterion picked them."""
    if any(i.numerical is not None for i in instances):
        return [i for i in instances if i.numerical], "flag"
    return [i for i in instances if find_quantities(i.claim)], "numeral-detection"


# -- evaluation loop

def _read_done(path: Path) -> dict[str, dict]:
    done: dict[str, dict] = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                rec = json.loads(line)
                done[str(rec["id"])] = rec
            except (json.JSONDecodeError, KeyError, TypeError):
                log.warning("ignoring unreadable line in %s", path)
    return done


Verifier = Callable[[Instance], Mapping]


def engine_verifier(engine: Engine) -> Verifier:
    def verify(inst: Instance) -> dict:
        return engine.verify_claim(inst.claim, inst.tables, claim_id=inst.id).to_dict(
            with_diagnostics=False)
    return verify


def _verify_safely(verifier: Verifier, inst: Instance) -> dict:
    try:
        return dict(verifier(inst))
    except Exception as exc:  # one bad instance never stops the run
        log.exception("instance %s failed", inst.id)
        proof = degraded_proof(inst.claim, f"pipeline error: {exc}")
        return VerdictReport(inst.id, inst.claim, [Subclaim(inst.claim, 0, inst.id)], [proof],
                             Verdict.NEI, False, decomposed=False).to_dict(with_diagnostics=False)


@dataclass
class EvalResult:
    metrics: MetricsReport
    records: list[dict]


def run_eval(instances: Sequence[Instance], verifier: Engine | Verifier, output: str | Path | None = None, *,
             resume: bool = False, subset: str = "full",
             label_space: LabelSpace | str = LabelSpace.THREE_WAY,
             parallel: int | None = None) -> EvalResult:
    """Verify every instance, streaming reports to ``output`` as JSONL."""
    if isinstance(verifier, Engine):
        parallel = parallel or verifier.config.parallel
        verifier = engine_verifier(verifier)
    source = None
    if subset == "numerical":
        instances, source = numerical_subset(instances)
    out_path = Path(output) if output else None
    done = _read_done(out_path) if (out_path and resume) else {}
    if out_path and not resume and out_path.exists():
        out_path.unlink()
    todo = [i for i in instances if i.id not in done]
    lock = threading.Lock()
    fresh: dict[str, dict] = {}

    def work(inst: Instance) -> None:
        rec = _verify_safely(verifier, inst)
        rec["gold"] = inst.label
        with lock:
            fresh[inst.id] = rec
            if out_path:
                with open(out_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    workers = max(1, parallel or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, todo))
    else:
        for inst in todo:
            work(inst)

    records = [done.get(i.id) or fresh[i.id] for i in instances]
    scored = [r for r in records if r.get("gold") is not None]
    metrics = compute_metrics([r["verdict"] for r in scored], [r["gold"] for r in scored],
                              label_space, [r["execution_found"] for r in scored],
                              subset=subset, subset_source=source)
    return EvalResult(metrics, records)
