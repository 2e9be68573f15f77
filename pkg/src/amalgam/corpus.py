"""Corpus runs: a list of CLI invocations with expected verdicts.

Spec file: {"entries": [{"name": str, "argv": [str, ...], "expect": str}]}
where ``expect`` is PASS, FAIL, SAT, UNSAT or an exit code such as "exit:2".
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import AmalgamError
from .report import RunReport

SHIPPED = "acceptance_corpus.json"


class CorpusSpecError(AmalgamError):
    pass


def shipped_spec_text() -> str:
    return resources.files("amalgam").joinpath("data", SHIPPED).read_text()


def parse_spec(text: str) -> list:
    if not text.strip():
        return []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusSpecError(f"corpus spec is not JSON: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("entries", []), list):
        raise CorpusSpecError("corpus spec must be an object with an 'entries' list")
    entries = []
    for i, e in enumerate(data.get("entries", [])):
        if not isinstance(e, dict) or not isinstance(e.get("argv"), list) or "expect" not in e:
            raise CorpusSpecError(f"entry {i} needs 'argv' (list) and 'expect'")
        if e["argv"] and e["argv"][0] == "corpus":
            raise CorpusSpecError(f"entry {i} would run a nested corpus")
        entries.append({"name": str(e.get("name", f"entry-{i}")), "argv": [str(a) for a in e["argv"]],
                        "expect": str(e["expect"])})
    return entries


def _outcome(code: int, report: RunReport) -> str:
    if code in (0, 1) and report.verdicts:
        return report.verdicts[-1].get("status", f"exit:{code}")
    return f"exit:{code}"


def run_entries(entries: list) -> tuple[list, list]:
    """Run entries in index order; returns (rows, names of mismatched entries)."""
    from .cli import run

    rows, bad = [], []
    for e in entries:
        code, rep, _ = run(e["argv"])
        got = _outcome(code, rep)
        ok = got == e["expect"] or f"exit:{code}" == e["expect"]
        rows.append({"check": "corpus-entry", "name": e["name"], "argv": e["argv"], "expect": e["expect"],
                     "got": got, "exit_code": code, "match": ok, "status": "PASS" if ok else "FAIL",
                     "verdicts": rep.verdicts, "error": rep.error})
        if not ok:
            bad.append(e["name"])
    return rows, bad


def run_corpus(spec_path: str | None, report: RunReport) -> int:
    if spec_path is None:
        text = shipped_spec_text()
    else:
        try:
            text = Path(spec_path).read_text()
        except OSError as exc:
            raise CorpusSpecError(f"cannot read corpus spec {spec_path}: {exc}") from None
    rows, bad = run_entries(parse_spec(text))
    for row in rows:
        report.add(row)
    report.add({"check": "corpus", "status": "FAIL" if bad else "PASS",
                "details": {"entries": len(rows), "matched": len(rows) - len(bad), "mismatched": bad}})
    if bad:
        report.error = "expectation mismatch: " + ", ".join(bad)
        return 1
    return 0
