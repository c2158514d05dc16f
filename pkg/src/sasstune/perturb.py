"""Schedule mutations: one candidate instruction moves one slot up or down.

Only global-memory traffic (loads, stores, global-to-shared async copies)
is worth moving, so the action space is candidates x {up, down}.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .deps import DepGraph, swap_legal
from .ir import GLOBAL_CLASSES, Kernel


class Direction(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class Action:
    candidate: int  # index into CandidateSet.positions
    direction: Direction


@dataclass(frozen=True)
class CandidateSet:
    positions: tuple[int, ...]  # schedule indices, ascending

    def __len__(self) -> int:
        return len(self.positions)


class NoCandidatesError(Exception):
    """The kernel contains no movable global-memory instruction."""


class MoveRejected(Exception):
    """A sampled move cannot apply; reason is "boundary" or "dependency"."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


def candidates(kernel: Kernel) -> CandidateSet:
    return CandidateSet(
        positions=tuple(
            i for i, ins in enumerate(kernel.schedule) if ins.klass in GLOBAL_CLASSES
        )
    )


def sample_action(cset: CandidateSet, rng: random.Random) -> Action:
    """Draw uniformly over the action space with a single rng call."""
    if not cset.positions:
        raise NoCandidatesError("no global-memory instructions to move")
    cell = rng.randrange(2 * len(cset.positions))
    return Action(candidate=cell >> 1, direction=Direction.UP if cell & 1 == 0 else Direction.DOWN)


def apply_action(
    kernel: Kernel,
    graph: DepGraph,
    action: Action,
    *,
    unsafe: bool = False,
) -> Kernel:
    """Apply one move and return the permuted kernel.

    Raises MoveRejected("boundary") at schedule ends and block cuts, and
    MoveRejected("dependency") when an ordering edge joins the two slots
    (skipped when unsafe, for measurement-backed exploration).
    """
    cset = candidates(kernel)
    if not 0 <= action.candidate < len(cset.positions):
        raise MoveRejected("boundary", f"candidate {action.candidate} out of range")
    pos = cset.positions[action.candidate]
    lo = pos - 1 if action.direction is Direction.UP else pos
    if lo < 0 or lo + 1 >= len(kernel.schedule):
        raise MoveRejected("boundary", "schedule edge")
    if (lo + 1) in kernel.block_boundaries:
        raise MoveRejected("boundary", f"block cut at {lo + 1}")
    if not unsafe and graph.connected(lo, lo + 1):
        raise MoveRejected("dependency", f"edge between {lo} and {lo + 1}")
    schedule = list(kernel.schedule)
    schedule[lo], schedule[lo + 1] = schedule[lo + 1], schedule[lo]
    return kernel.with_schedule(tuple(schedule))
