"""Simulated-annealing search over instruction schedules.

Each iteration samples one move, prices the mutated schedule, and accepts
it outright when it is faster or with probability exp(-dE/T) when slower.
Energy is runtime normalized by the baseline measurement, so temperatures
are dimensionless.  The temperature divides by the cooling factor every
iteration; the iteration budget is fixed up front as
ceil(log(t_max/t_min) / log(cooling)).
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable

from .backends import MeasurementFailed
from .deps import build_depgraph
from .ir import Kernel
from .perturb import Action, MoveRejected, NoCandidatesError, apply_action, candidates, sample_action


class InvalidBaseline(Exception):
    """Baseline runtime must be strictly positive to normalize energies."""


def feedback(t0: float, t_prev: float, t_curr: float) -> float:
    """Per-step improvement signal: (t_prev - t_curr) / t0.

    Positive when the move reduced runtime, zero for no change, negative
    for a regression; discarded candidates are logged with feedback 0.
    """
    if t0 <= 0:
        raise InvalidBaseline(f"baseline {t0} is not positive")
    return (t_prev - t_curr) / t0


def accept_move(delta_e: float, temperature: float, rng: random.Random) -> bool:
    """Metropolis rule: always take improvements, otherwise draw against
    exp(-dE/T)."""
    if delta_e < 0:
        return True
    return rng.random() < math.exp(-delta_e / temperature)


@dataclass(frozen=True)
class AnnealConfig:
    t_max: float = 1.0
    t_min: float = 0.01
    cooling: float = 1.05
    seed: int = 0
    measure_reps: int = 5
    tests_per_step: int = 0
    unsafe_moves: bool = False

    def __post_init__(self) -> None:
        if self.t_min <= 0 or self.t_max <= 0:
            raise ValueError("temperatures must be positive")
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")
        if self.cooling <= 1.0:
            raise ValueError("cooling factor must be > 1")
        if self.measure_reps < 3:
            raise ValueError("measure_reps must be >= 3")
        if self.tests_per_step < 0:
            raise ValueError("tests_per_step must be >= 0")

    @property
    def iteration_budget(self) -> int:
        if self.t_max == self.t_min:
            return 0
        return math.ceil(math.log(self.t_max / self.t_min) / math.log(self.cooling))


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    candidate: int
    direction: str
    energy: float | None      # candidate energy when measured, else null
    feedback: float
    accepted: bool
    temperature: float
    rejected: str | None = None  # boundary | dependency | test-failure | measurement

    def to_json(self) -> str:
        return json.dumps(
            {
                "iteration": self.iteration,
                "action": {"candidate": self.candidate, "direction": self.direction},
                "energy": self.energy,
                "feedback": self.feedback,
                "accepted": self.accepted,
                "temperature": self.temperature,
                "rejected": self.rejected,
            },
            sort_keys=True,
        )


@dataclass
class AnnealState:
    """Search outcome: the best schedule seen plus the full iteration log."""

    best: Kernel
    best_energy: float
    current: Kernel
    current_energy: float
    baseline: float
    unit: str
    iterations: int
    history: list[HistoryRecord] = field(default_factory=list)

    @property
    def best_time(self) -> float:
        return self.best_energy * self.baseline

    def history_jsonl(self) -> str:
        return "".join(rec.to_json() + "\n" for rec in self.history)


def anneal(
    kernel: Kernel,
    backend,
    config: AnnealConfig | None = None,
    *,
    tester: Callable[[Kernel], bool] | None = None,
) -> AnnealState:
    """Run one annealing chain on the kernel.

    backend must expose measure(kernel, reps) -> CostSample.  tester, when
    given, vets each mutated schedule before it is priced: a failing
    candidate is discarded with feedback 0.  The baseline measurement (t0)
    happens exactly once and normalizes every later energy.
    """
    cfg = config or AnnealConfig()
    if len(candidates(kernel)) == 0:
        raise NoCandidatesError("no global-memory instructions to move")

    t0 = backend.measure(kernel, cfg.measure_reps).value
    if t0 <= 0:
        raise InvalidBaseline(f"baseline measurement {t0} is not positive")

    rng = random.Random(cfg.seed)
    x = kernel
    graph = build_depgraph(x)
    e_x = 1.0
    t_prev = t0
    best, e_best = x, e_x
    temperature = cfg.t_max
    history: list[HistoryRecord] = []
    budget = cfg.iteration_budget

    for iteration in range(budget):
        action: Action = sample_action(candidates(x), rng)

        def log(energy, fb, accepted, rejected=None):
            history.append(
                HistoryRecord(
                    iteration=iteration,
                    candidate=action.candidate,
                    direction=action.direction.value,
                    energy=energy,
                    feedback=fb,
                    accepted=accepted,
                    temperature=temperature,
                    rejected=rejected,
                )
            )

        try:
            candidate = apply_action(x, graph, action, unsafe=cfg.unsafe_moves)
        except MoveRejected as exc:
            log(None, 0.0, False, rejected=exc.reason)
            temperature /= cfg.cooling
            continue

        if tester is not None and not tester(candidate):
            log(None, 0.0, False, rejected="test-failure")
            temperature /= cfg.cooling
            continue

        try:
            t_curr = backend.measure(candidate, cfg.measure_reps).value
        except MeasurementFailed:
            log(None, 0.0, False, rejected="measurement")
            temperature /= cfg.cooling
            continue

        e_cand = t_curr / t0
        delta_e = e_cand - e_x
        fb = feedback(t0, t_prev, t_curr)

        accepted = accept_move(delta_e, temperature, rng)
        if accepted:
            x, e_x, t_prev = candidate, e_cand, t_curr
            graph = build_depgraph(x)
            if delta_e < 0 and e_cand < e_best:
                best, e_best = candidate, e_cand
        log(e_cand, fb, accepted)
        temperature /= cfg.cooling

    return AnnealState(
        best=best,
        best_energy=e_best,
        current=x,
        current_energy=e_x,
        baseline=t0,
        unit=getattr(backend, "unit", ""),
        iterations=budget,
        history=history,
    )
