"""Plain records shared by strategies, the executor and the harness."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Recommendation:
    arm: int
    round_stopped: int


@dataclass(frozen=True)
class RoundRecord:
    """One round of a batched strategy.

    ``plan`` holds ``(arm, pulls)`` pairs for arms pulled this round and
    ``snapshot`` holds ``(arm, cumulative pulls, empirical mean)`` for
    the same arms after the round's observations.
    """

    round: int
    plan: tuple
    eliminated: tuple
    survivors_after: tuple
    cumulative_cost: int
    snapshot: tuple = ()

    @property
    def pulls(self) -> dict:
        return dict(self.plan)


@dataclass
class RunTrace:
    strategy: str
    rounds: list = field(default_factory=list)
    recommendation: Recommendation | None = None
    total_cost: int = 0
    success: bool | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)
    capped: bool = False
    error: str | None = None

    @property
    def cumulative_costs(self) -> list:
        return [r.cumulative_cost for r in self.rounds]

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "total_cost": self.total_cost,
            "success": self.success,
            "recommendation": None if self.recommendation is None else self.recommendation.arm,
            "round_stopped": None if self.recommendation is None else self.recommendation.round_stopped,
            "cumulative_costs": self.cumulative_costs,
            "capped": self.capped,
            "error": self.error,
        }


class RunAborted(RuntimeError):
    """Raised when a sampler fails mid-run; carries the partial trace."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace
