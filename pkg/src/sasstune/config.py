"""Run configuration: one JSON file covering search, machine, tests, backend.

Schema (all sections optional, keys shown with defaults):

    {
      "anneal":  {"t_max": 1.0, "t_min": 0.01, "cooling": 1.05, "seed": 0,
                  "measure_reps": 5, "tests_per_step": 0, "unsafe_moves": false},
      "machine": {"global_mem_latency": 400,
                  "cpi": {"FFMA": 4, "IMAD": 5, "POPC": 15},
                  "class_cpi": {"Compute": 4, "SharedLoad": 30, ...},
                  "shared_size": 65536},
      "tests":   {"ret_ptr": 1, "samples": 64, "seed": 0,
                  "buffers": [{"arg": 0, "length": 64,
                               "kind": "int32", "dist": "uniform"}]},
      "backend": {"kind": "simulator"}                    -- or --
                 {"kind": "external", "command": "run_it {schedule_file}",
                  "timeout_s": 60, "workdir": null}
    }

Command-line flags override file values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .anneal import AnnealConfig
from .difftest import TestPlan
from .machine import MachineConfig


@dataclass
class RunConfig:
    anneal: AnnealConfig
    machine: MachineConfig
    plan: TestPlan | None
    backend_spec: str
    timeout_s: float = 60.0
    workdir: str | None = None


def _backend_spec(section: dict) -> tuple[str, float, str | None]:
    kind = section.get("kind", "simulator")
    if kind in ("sim", "simulator"):
        return "sim", 60.0, None
    if kind == "external":
        command = section.get("command")
        if not command:
            raise ValueError("external backend needs a 'command' template")
        return (
            f"external:{command}",
            float(section.get("timeout_s", 60.0)),
            section.get("workdir"),
        )
    raise ValueError(f"unknown backend kind {kind!r}")


def load_config(path: str | Path | None) -> RunConfig:
    data: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError("config root must be a JSON object")
    anneal = AnnealConfig(**data.get("anneal", {}))
    machine = MachineConfig.from_dict(data.get("machine", {}))
    plan = TestPlan.from_dict(data["tests"]) if "tests" in data else None
    backend_spec, timeout_s, workdir = _backend_spec(data.get("backend", {}))
    return RunConfig(
        anneal=anneal,
        machine=machine,
        plan=plan,
        backend_spec=backend_spec,
        timeout_s=timeout_s,
        workdir=workdir,
    )
