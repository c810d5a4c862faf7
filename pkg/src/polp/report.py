"""Serializable run reports (JSON schema 1, text, CSV)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1

TIMING_KEYS = ("ground_ms", "compile_ms", "reorder_ms", "extract_ms", "solve_ms")


@dataclass
class RunReport:
    program: str
    query: str
    status: str
    assignment: dict
    objective_value: float
    query_probability: float
    timings: dict
    polynomial: str
    bdd_stats: dict
    direction: str = "minimize"
    objective: str = ""
    constraints: list = field(default_factory=list)
    query_probs: dict = field(default_factory=dict)
    iterations: int = 0
    kkt_residual: float = 0.0
    max_violation: float = 0.0
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_result(cls, result, program_path=""):
        sol = result.solution
        pb = result.problem
        return cls(
            program=str(program_path),
            query=str(pb.query),
            status=sol.status,
            assignment=dict(sol.assignment),
            objective_value=sol.objective_value,
            query_probability=result.query_probability,
            timings={k: max(0.0, result.timings.get(k, 0.0)) for k in TIMING_KEYS},
            polynomial=result.query_polynomial.pretty(),
            bdd_stats=result.stats(),
            direction=pb.direction,
            objective=str(pb.objective),
            constraints=[str(c) for c in pb.constraints],
            query_probs=dict(sol.query_probs),
            iterations=sol.iterations,
            kkt_residual=sol.kkt_residual,
            max_violation=sol.max_violation,
        )

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(**data)

    def to_text(self):
        lines = [
            f"program:      {self.program}",
            f"query:        {self.query}",
            f"status:       {self.status}",
            f"{self.direction + ':':<14}{self.objective}" if self.objective else None,
            f"objective:    {self.objective_value:.6f}",
            f"P(query):     {self.query_probability:.6f}",
            "assignment:",
        ]
        lines = [ln for ln in lines if ln is not None]
        width = max((len(k) for k in self.assignment), default=0)
        for atom, value in self.assignment.items():
            lines.append(f"  {atom:<{width}}  {value:.6f}")
        lines.append(f"equation:     {self.polynomial}")
        s = self.bdd_stats
        lines.append(f"bdd:          {s.get('nodes')} nodes, {s.get('path_terms')} paths, "
                     f"{s.get('monomials')} monomials")
        lines.append("timings (ms): " + ", ".join(f"{k[:-3]} {self.timings[k]:.2f}"
                                                   for k in TIMING_KEYS if k in self.timings))
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        cols = ["program", "query", "status", "objective_value", "query_probability",
                "assignment", *TIMING_KEYS, "nodes", "path_terms", "monomials"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerow([self.program, self.query, self.status, repr(self.objective_value),
                    repr(self.query_probability),
                    ";".join(f"{k}={v!r}" for k, v in self.assignment.items()),
                    *(f"{self.timings.get(k, 0.0):.3f}" for k in TIMING_KEYS),
                    self.bdd_stats.get("nodes"), self.bdd_stats.get("path_terms"),
                    self.bdd_stats.get("monomials")])
        return buf.getvalue()

    def render(self, fmt):
        if fmt == "json":
            return self.to_json()
        if fmt == "text":
            return self.to_text()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")
