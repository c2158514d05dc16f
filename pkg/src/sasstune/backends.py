"""Cost backends: where candidate schedules get their runtime numbers.

The simulator backend prices a schedule with the deterministic scoreboard
model.  The external backend shells out to any measurement adapter that
speaks a one-line protocol: given the schedule file path, print exactly
one stdout line of the form {"time_ms": <nonnegative float>} and exit 0.
"""
from __future__ import annotations

import re
import shlex
import statistics
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .ir import Kernel
from .machine import MachineConfig, simulate
from .sasstext import serialize_kernel

SCHEDULE_PLACEHOLDER = "{schedule_file}"

# The protocol line, matched byte for byte (no extra keys, no sign, no nan).
TIME_LINE_RE = re.compile(r'^\{"time_ms":\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*\}$')


class MeasurementFailed(Exception):
    """The backend could not produce a valid measurement."""


@dataclass(frozen=True)
class CostSample:
    """One aggregated measurement (median over reps)."""

    value: float
    unit: str
    reps: int
    raw: tuple[float, ...]


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # "simulator" | "external"
    command: str | None = None
    timeout_s: float = 60.0
    workdir: str | None = None
    concurrency_safe: bool = False


class SimulatorBackend:
    """Prices schedules in cycles via the scoreboard model; exact, so a
    single rep suffices regardless of the requested rep count."""

    unit = "cycles"

    def __init__(self, machine: MachineConfig | None = None):
        self.machine = machine or MachineConfig()
        self.descriptor = BackendDescriptor(kind="simulator", concurrency_safe=True)

    def measure(self, kernel: Kernel, reps: int = 1) -> CostSample:
        cycles = float(simulate(kernel, self.machine).total_cycles)
        return CostSample(value=cycles, unit=self.unit, reps=1, raw=(cycles,))


class ExternalCommandBackend:
    """Runs a measurement command once per rep on a private copy of the
    schedule and aggregates the median."""

    unit = "ms"

    def __init__(self, command: str, *, timeout_s: float = 60.0, workdir: str | None = None):
        if SCHEDULE_PLACEHOLDER not in command:
            raise ValueError(f"command template must contain {SCHEDULE_PLACEHOLDER}")
        self.descriptor = BackendDescriptor(
            kind="external", command=command, timeout_s=timeout_s, workdir=workdir
        )

    def _run_once(self, schedule_path: str) -> float:
        argv = [
            arg.replace(SCHEDULE_PLACEHOLDER, schedule_path)
            for arg in shlex.split(self.descriptor.command or "")
        ]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=self.descriptor.timeout_s,
                cwd=self.descriptor.workdir,
            )
        except subprocess.TimeoutExpired as exc:
            raise MeasurementFailed(f"timeout after {self.descriptor.timeout_s}s: {argv}") from exc
        except OSError as exc:
            raise MeasurementFailed(f"cannot run {argv}: {exc}") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or "").strip().splitlines()[-3:]
            raise MeasurementFailed(f"exit code {proc.returncode}: {' | '.join(tail)}")
        matches = [
            m for m in (TIME_LINE_RE.match(line.strip()) for line in proc.stdout.splitlines()) if m
        ]
        if len(matches) != 1:
            raise MeasurementFailed(
                f"expected exactly one time line on stdout, found {len(matches)}"
            )
        return float(matches[0].group(1))

    def measure(self, kernel: Kernel, reps: int = 1) -> CostSample:
        if reps < 1:
            raise ValueError("reps must be >= 1")
        text = serialize_kernel(kernel)
        with tempfile.TemporaryDirectory(prefix="sasstune-") as tmp:
            path = Path(tmp) / "schedule.sass"
            path.write_text(text)
            raw = tuple(self._run_once(str(path)) for _ in range(reps))
        return CostSample(value=float(statistics.median(raw)), unit=self.unit, reps=reps, raw=raw)


def make_backend(
    spec: str,
    *,
    machine: MachineConfig | None = None,
    timeout_s: float = 60.0,
    workdir: str | None = None,
):
    """Build a backend from a CLI-style spec: "sim" or "external:<command>"."""
    if spec == "sim" or spec == "simulator":
        return SimulatorBackend(machine)
    if spec.startswith("external:"):
        command = spec.split(":", 1)[1]
        return ExternalCommandBackend(command, timeout_s=timeout_s, workdir=workdir)
    raise ValueError(f"unknown backend spec {spec!r} (want 'sim' or 'external:<cmd>')")
