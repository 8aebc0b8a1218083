from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .objective import Candidate


@dataclass
class SolverReport:
    """Outcome of one solver run, in the (r0, course, speed) form."""

    solver: str
    estimate: Candidate
    cost: float
    fevals: int
    details: dict[str, Any] = field(default_factory=dict)
