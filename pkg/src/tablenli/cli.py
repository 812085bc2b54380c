"""Command-line client. Runs the engine in-process, or talks to a server with --server."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO

import httpx

from .config import load_config
from .evaluation import FORMATS, Instance, LabelSpace, load_dataset, run_eval
from .pipeline import Engine, UsageError
from .service import api
from .service import schemas as s

log = logging.getLogger("tablenli")

EXIT_USAGE = 2
EXIT_FAILURE = 1


class LocalClient:
    def __init__(self, engine_factory):
        self._factory = engine_factory
        self._engine: Engine | None = None

    @property
    def engine(self) -> Engine:
        # built lazily so pure commands never touch fixtures or the network
        if self._engine is None:
            self._engine = self._factory()
        return self._engine

    def verify(self, req: s.VerifyRequest) -> dict:
        return api.verify(self.engine, req).model_dump(exclude_none=True)

    def decompose(self, req: s.DecomposeRequest) -> dict:
        return api.decompose(self.engine, req).model_dump()

    def execute(self, req: s.ExecuteProofRequest) -> dict:
        return api.execute(req).model_dump(exclude_none=True)

    def probe_gen(self, req: s.ProbeGenRequest) -> dict:
        return api.probe_gen(req).model_dump()

    def probe_score(self, req: s.ProbeScoreRequest) -> dict:
        return api.probe_score(req).model_dump()

    def metrics(self, req: s.MetricsRequest) -> dict:
        return api.metrics(req).model_dump()


class RemoteClient:
    def __init__(self, base_url: str, transport: httpx.BaseTransport | None = None, timeout: float = 300.0):
        self.http = httpx.Client(base_url=base_url.rstrip("/"), transport=transport, timeout=timeout)

    def _post(self, path: str, body) -> dict:
        resp = self.http.post(path, json=body.model_dump(exclude_none=True))
        if resp.status_code == 422:
            raise UsageError(str(resp.json().get("detail")))
        resp.raise_for_status()
        return resp.json()

    def verify(self, req):
        return self._post("/verify", req)

    def decompose(self, req):
        return self._post("/decompose", req)

    def execute(self, req):
        return self._post("/execute-proof", req)

    def probe_gen(self, req):
        return self._post("/probe/generate", req)

    def probe_score(self, req):
        return self._post("/probe/score", req)

    def metrics(self, req):
        return self._post("/eval/metrics", req)


# -- io helpers

def read_jsonl(path: str) -> list[dict]:
    fh = sys.stdin if path == "-" else open(path, encoding="utf-8")
    try:
        return [json.loads(line) for line in fh if line.strip()]
    finally:
        if fh is not sys.stdin:
            fh.close()


def read_json_or_jsonl(path: str) -> list[dict]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return data if isinstance(data, list) else [data]


def open_out(path: str | None) -> TextIO:
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")


def write_jsonl(records: Iterable[dict], out: TextIO) -> None:
    for rec in records:
        out.write(json.dumps(rec, ensure_ascii=False) + "\n")
        out.flush()


def _verify_request(inst: Instance, decompose: bool, diagnostics: bool) -> s.VerifyRequest:
    tables = [s.TableIn(caption=t.caption, rows=t.raw_grid(), header_row_count=t.header_row_count)
              for t in inst.tables]
    return s.VerifyRequest(claim=inst.claim, tables=tables, id=inst.id,
                           decompose=decompose, diagnostics=diagnostics)


# -- commands

def cmd_verify(args, client) -> int:
    ds = load_dataset(args.input, args.format)
    out = open_out(args.output)
    try:
        for inst in ds.instances:
            write_jsonl([client.verify(_verify_request(inst, not args.no_decompose, args.diagnostics))], out)
    finally:
        if out is not sys.stdout:
            out.close()
    if ds.skipped:
        log.warning("%d malformed input lines skipped", ds.skipped)
    return 0


def cmd_decompose(args, client) -> int:
    claims = [args.claim] if args.claim else [r["claim"] for r in read_jsonl(args.input)]
    out = open_out(args.output)
    for claim in claims:
        write_jsonl([{"claim": claim, **client.decompose(s.DecomposeRequest(claim=claim))}], out)
    return 0


def cmd_execute_proof(args, client) -> int:
    if args.ops:
        result = client.execute(s.ExecuteProofRequest(ops=args.ops.replace(",", " ").split()))
        print(json.dumps(result, ensure_ascii=False))
        return 0
    if not args.input:
        raise UsageError("execute-proof needs --ops or --input")
    mismatches = 0
    for rec in read_json_or_jsonl(args.input):
        proofs = rec["proofs"] if "proofs" in rec else [rec]
        result = client.execute(s.ExecuteProofRequest(proofs=proofs))
        stated = rec.get("verdict") if "proofs" in rec else None
        line = {"id": rec.get("id"), "verdict": result["verdict"]}
        if stated is not None:
            line["stated"] = stated
            line["consistent"] = stated == result["verdict"]
            mismatches += not line["consistent"]
        print(json.dumps(line, ensure_ascii=False))
    return EXIT_FAILURE if mismatches else 0


def cmd_probe_gen(args, client) -> int:
    ds = load_dataset(args.input, args.format)
    instances = [{**inst.raw, "id": inst.id, "label": inst.label} for inst in ds.instances]
    result = client.probe_gen(s.ProbeGenRequest(instances=instances))
    out = open_out(args.output)
    try:
        write_jsonl(result["records"], out)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("%d base claims, %d probe instances", result["base_count"], len(result["records"]))
    return 0


def cmd_probe_score(args, client) -> int:
    reports = read_jsonl(args.reports)
    probe = {str(r["id"]): r for r in read_jsonl(args.probe)} if args.probe else {}
    preds = []
    for rep in reports:
        meta = probe.get(str(rep.get("id")), rep)
        if "base_id" not in meta or "kind" not in meta:
            raise UsageError(f"report {rep.get('id')!r} has no probe metadata; pass --probe")
        preds.append(s.ProbePrediction(base_id=str(meta["base_id"]), kind=int(meta["kind"]),
                                       verdict=rep.get("verdict")))
    print(json.dumps(client.probe_score(s.ProbeScoreRequest(predictions=preds)), ensure_ascii=False, indent=2))
    return 0


def cmd_eval(args, client) -> int:
    ds = load_dataset(args.input, args.format)
    space = args.label_space or ds.label_space.value

    def verify(inst: Instance) -> dict:
        return client.verify(_verify_request(inst, not args.no_decompose, False))

    result = run_eval(ds.instances, verify, args.output, resume=args.resume, subset=args.subset,
                      label_space=space, parallel=args.parallel)
    report = result.metrics.to_dict()
    report["skipped_lines"] = ds.skipped
    print(json.dumps(report, ensure_ascii=False, indent=2))
    return 0


def cmd_serve(args, engine_factory) -> int:
    import uvicorn

    from .service.app import create_app
    uvicorn.run(create_app(engine_factory()), host=args.host, port=args.port)
    return 0


# -- wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tablenli", description="Natural-logic fact verification over tables.")
    p.add_argument("--config", help="TOML or JSON engine config")
    p.add_argument("--backend", choices=["mock", "live"], help="override the configured backend")
    p.add_argument("--fixtures", help="mock fixture directory (defaults to the bundled traces)")
    p.add_argument("--seed", type=int, help="recorded with the run; generation is greedy")
    p.add_argument("--parallel", type=int, help="worker count for subclaims and eval instances")
    p.add_argument("--server", help="base URL of a running tablenli server")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify claims from a JSONL file")
    v.add_argument("--input", required=True)
    v.add_argument("--output")
    v.add_argument("--format", choices=FORMATS, default="feverous-jsonl")
    v.add_argument("--no-decompose", action="store_true")
    v.add_argument("--diagnostics", action="store_true", help="include generation traces")

    d = sub.add_parser("decompose", help="split claims into subclaims")
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--claim")
    g.add_argument("--input")
    d.add_argument("--output")

    x = sub.add_parser("execute-proof", help="re-execute serialized proofs through the automaton")
    x.add_argument("--input", help="proof JSON, or VerdictReport JSON/JSONL")
    x.add_argument("--ops", help="op sequence, e.g. 'EQ,ALT,FE'")

    pg = sub.add_parser("probe-gen", help="build the reading-of-numerals probe")
    pg.add_argument("--input", required=True)
    pg.add_argument("--output")
    pg.add_argument("--format", choices=FORMATS, default="feverous-jsonl")

    ps = sub.add_parser("probe-score", help="retention per variation class")
    ps.add_argument("--reports", required=True, help="VerdictReport JSONL")
    ps.add_argument("--probe", help="probe JSONL from probe-gen (joins on id)")

    e = sub.add_parser("eval", help="verify a labelled dataset and report metrics")
    e.add_argument("--input", required=True)
    e.add_argument("--format", choices=FORMATS, default="feverous-jsonl")
    e.add_argument("--output", help="append-only JSONL of VerdictReports")
    e.add_argument("--resume", action="store_true")
    e.add_argument("--subset", choices=["full", "numerical"], default="full")
    e.add_argument("--label-space", choices=[m.value for m in LabelSpace])
    e.add_argument("--no-decompose", action="store_true")

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    return p


def _engine_factory(args):
    def make() -> Engine:
        cfg = load_config(args.config)
        overrides: dict[str, Any] = {}
        if args.parallel is not None:
            overrides["parallel"] = args.parallel
        if args.seed is not None:
            overrides["seed"] = args.seed
        backend = cfg.backend
        if args.backend:
            backend = dataclasses.replace(backend, kind=args.backend)
        if args.fixtures:
            backend = dataclasses.replace(backend, fixtures=args.fixtures)
        return Engine(dataclasses.replace(cfg, backend=backend, **overrides))
    return make


COMMANDS = {
    "verify": cmd_verify,
    "decompose": cmd_decompose,
    "execute-proof": cmd_execute_proof,
    "probe-gen": cmd_probe_gen,
    "probe-score": cmd_probe_score,
    "eval": cmd_eval,
}


def main(argv: Sequence[str] | None = None, transport: httpx.BaseTransport | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    factory = _engine_factory(args)
    try:
        if args.command == "serve":
            return cmd_serve(args, factory)
        client = RemoteClient(args.server, transport) if args.server else LocalClient(factory)
        return COMMANDS[args.command](args, client)
    except (ValueError, FileNotFoundError, KeyError) as exc:  # usage, config, json, validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except httpx.HTTPError as exc:
        print(f"error: server request failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
