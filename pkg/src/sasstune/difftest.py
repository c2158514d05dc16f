"""Probabilistic equivalence testing between a reference schedule and mutants.

There is no practical formal semantics to check against, so candidate
schedules are vetted by executing both kernels on seeded random inputs and
comparing the designated output buffer bit for bit.  Sample index s of a
plan is the same inputs for every kernel tested under that plan, which
makes pass counts comparable across mutants and budgets.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .ir import Kernel
from .machine import CompiledKernel, OutOfBoundsAccess, UninitializedRead, UnsupportedInstruction

_CELL_SIZE = {"int8": 1, "int16": 2, "int32": 4}
_DISTRIBUTIONS = ("uniform", "small", "zero")


@dataclass(frozen=True)
class BufferSpec:
    """One kernel argument buffer: index, element count, kind, distribution."""

    arg: int
    length: int
    kind: str = "int32"
    dist: str = "uniform"

    def __post_init__(self) -> None:
        if self.kind not in _CELL_SIZE:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.dist not in _DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.dist!r}")
        if self.length < 1:
            raise ValueError("length must be >= 1")

    @property
    def nbytes(self) -> int:
        return self.length * _CELL_SIZE[self.kind]


@dataclass(frozen=True)
class TestPlan:
    __test__ = False  # not a pytest class, despite the name

    ret_ptr: int
    buffers: tuple[BufferSpec, ...]
    samples: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        args = [b.arg for b in self.buffers]
        if len(set(args)) != len(args):
            raise ValueError("duplicate argument indices in buffer specs")
        if self.ret_ptr not in args:
            raise ValueError(f"ret_ptr {self.ret_ptr} has no buffer spec")
        object.__setattr__(self, "buffers", tuple(self.buffers))

    @property
    def ret_spec(self) -> BufferSpec:
        return next(b for b in self.buffers if b.arg == self.ret_ptr)

    @classmethod
    def from_dict(cls, data: Mapping) -> "TestPlan":
        buffers = tuple(
            BufferSpec(
                arg=int(b["arg"]),
                length=int(b["length"]),
                kind=b.get("kind", "int32"),
                dist=b.get("dist", "uniform"),
            )
            for b in data["buffers"]
        )
        return cls(
            ret_ptr=int(data["ret_ptr"]),
            buffers=buffers,
            samples=int(data.get("samples", 64)),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class FailureDetail:
    sample: int
    cell: int               # -1 when the mutant crashed instead of mismatching
    expected: int | None
    actual: int | None
    note: str = ""


@dataclass(frozen=True)
class TestVerdict:
    __test__ = False  # not a pytest class, despite the name

    passed: int
    failed: int
    first_failure: FailureDetail | None = None
    inconclusive: str | None = None

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.inconclusive is None

    def to_dict(self) -> dict:
        detail = None
        if self.first_failure is not None:
            detail = {
                "sample": self.first_failure.sample,
                "cell": self.first_failure.cell,
                "expected": self.first_failure.expected,
                "actual": self.first_failure.actual,
                "note": self.first_failure.note,
            }
        return {
            "passed": self.passed,
            "failed": self.failed,
            "first_failure": detail,
            "inconclusive": self.inconclusive,
        }


def sample_inputs(plan: TestPlan, index: int) -> dict[int, bytes]:
    """Inputs for sample `index`: a pure, stable function of (seed, index)."""
    rng = random.Random(f"{plan.seed}:{index}")
    out: dict[int, bytes] = {}
    for spec in plan.buffers:
        n = spec.nbytes
        if spec.dist == "zero":
            out[spec.arg] = bytes(n)
        elif spec.dist == "small":
            cell = _CELL_SIZE[spec.kind]
            raw = rng.getrandbits(8 * spec.length).to_bytes(spec.length, "little")
            buf = bytearray(n)
            for i, b in enumerate(raw):
                buf[i * cell] = b & 0x0F
            out[spec.arg] = bytes(buf)
        else:
            out[spec.arg] = rng.getrandbits(8 * n).to_bytes(n, "little")
    return out


def _first_cell_mismatch(expected: bytes, actual: bytes, cell_size: int) -> tuple[int, int, int]:
    n = min(len(expected), len(actual))
    for off in range(0, n, cell_size):
        a = expected[off : off + cell_size]
        b = actual[off : off + cell_size]
        if a != b:
            return (
                off // cell_size,
                int.from_bytes(a, "little", signed=True),
                int.from_bytes(b, "little", signed=True),
            )
    return (-1, 0, 0)


def run_tests(
    reference: Kernel,
    mutant: Kernel,
    plan: TestPlan,
    *,
    fail_fast: bool = False,
) -> TestVerdict:
    """Execute both kernels over the plan's sample stream and compare the
    ret_ptr buffer bit-exactly.  Verdicts satisfy passed + failed ==
    samples executed; kernels outside the interpretable subset yield an
    inconclusive verdict instead of pass/fail counts."""
    try:
        ref = CompiledKernel(reference)
        mut = CompiledKernel(mutant)
    except UnsupportedInstruction as exc:
        return TestVerdict(0, 0, inconclusive=f"uninterpretable instruction: {exc}")

    cell = _CELL_SIZE[plan.ret_spec.kind]
    passed = failed = 0
    first: FailureDetail | None = None
    for s in range(plan.samples):
        inputs = sample_inputs(plan, s)
        try:
            expected = ref.run(inputs, plan.ret_ptr)
        except (OutOfBoundsAccess, UninitializedRead, UnsupportedInstruction) as exc:
            return TestVerdict(
                passed, failed, first, inconclusive=f"reference execution failed: {exc}"
            )
        try:
            actual = mut.run(inputs, plan.ret_ptr)
        except (OutOfBoundsAccess, UninitializedRead, UnsupportedInstruction) as exc:
            failed += 1
            if first is None:
                first = FailureDetail(s, -1, None, None, note=f"mutant crashed: {exc}")
            if fail_fast:
                break
            continue
        if expected == actual:
            passed += 1
            continue
        failed += 1
        if first is None:
            idx, want, got = _first_cell_mismatch(expected, actual, cell)
            first = FailureDetail(s, idx, want, got)
        if fail_fast:
            break
    return TestVerdict(passed, failed, first)


def first_failure_index(
    reference: CompiledKernel,
    mutant: Kernel,
    plan: TestPlan,
    max_samples: int,
    ref_cache: list[bytes] | None = None,
    input_cache: list[dict[int, bytes]] | None = None,
) -> int | None:
    """Index of the first sample a mutant fails, or None within budget."""
    try:
        mut = CompiledKernel(mutant)
    except UnsupportedInstruction:
        return 0
    cache = ref_cache if ref_cache is not None else []
    inputs_seen = input_cache if input_cache is not None else []
    for s in range(max_samples):
        if s < len(inputs_seen):
            inputs = inputs_seen[s]
        else:
            inputs = sample_inputs(plan, s)
            inputs_seen.append(inputs)
        if s < len(cache):
            expected = cache[s]
        else:
            expected = reference.run(inputs, plan.ret_ptr)
            cache.append(expected)
        try:
            actual = mut.run(inputs, plan.ret_ptr)
        except (OutOfBoundsAccess, UninitializedRead, UnsupportedInstruction):
            return s
        if actual != expected:
            return s
    return None


def pass_curve(
    reference: Kernel,
    mutants: Sequence[Kernel],
    budgets: Sequence[int],
    plan: TestPlan,
) -> list[tuple[int, int]]:
    """(budget, passing mutant count) for each budget, over one shared
    sample stream; the curve is monotone non-increasing in the budget."""
    ref = CompiledKernel(reference)
    max_budget = max(budgets, default=0)
    ref_cache: list[bytes] = []
    input_cache: list[dict[int, bytes]] = []
    first_fail = [
        first_failure_index(ref, m, plan, max_budget, ref_cache, input_cache)
        for m in mutants
    ]
    curve = []
    for b in budgets:
        passing = sum(1 for ff in first_fail if ff is None or ff >= b)
        curve.append((b, passing))
    return curve
