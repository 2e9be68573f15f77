"""Run reports with canonical, byte-stable JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass
class RunReport:
    command: list
    seed: int
    exit_code: int = 0
    verdicts: list = field(default_factory=list)
    buffer: int | None = None
    budget: int | None = None
    error: str | None = None
    timing: dict | None = None

    def add(self, verdict: dict) -> None:
        # normalize tuples and non-string keys so parse(serialize(r)) == r
        self.verdicts.append(json.loads(canonical_json(verdict)))

    def to_json(self) -> dict:
        out = {"command": list(self.command), "seed": self.seed, "exit_code": self.exit_code,
               "verdicts": list(self.verdicts), "buffer": self.buffer, "budget": self.budget}
        if self.error is not None:
            out["error"] = self.error
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    def serialize(self) -> str:
        return canonical_json(self.to_json())

    @classmethod
    def parse(cls, text: str) -> RunReport:
        data = json.loads(text)
        return cls(command=data["command"], seed=data["seed"], exit_code=data["exit_code"],
                   verdicts=data["verdicts"], buffer=data.get("buffer"), budget=data.get("budget"),
                   error=data.get("error"), timing=data.get("timing"))
