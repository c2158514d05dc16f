"""Multi-chain search orchestration shared by the CLI and the estimator.

Chains are independent annealing runs with consecutive seeds.  Each
chain's best schedule is verified against the full test plan (when one is
configured); passing candidates are ranked by measured time and the winner
becomes the run's best.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .anneal import AnnealConfig, AnnealState, anneal
from .difftest import TestPlan, TestVerdict, run_tests
from .ir import Kernel
from .perturb import candidates
from .sasstext import serialize_kernel
from .store import ResultStore, input_hash


@dataclass
class ChainOutcome:
    seed: int
    state: AnnealState
    verdict: TestVerdict | None

    @property
    def passed(self) -> bool:
        return self.verdict.ok if self.verdict is not None else True


@dataclass
class SearchReport:
    kernel: Kernel
    input_digest: str
    baseline: float
    unit: str
    chains: list[ChainOutcome]
    best: ChainOutcome | None
    candidate_count: int = 0

    @property
    def best_time(self) -> float | None:
        return self.best.state.best_time if self.best is not None else None

    @property
    def improvement_pct(self) -> float | None:
        if self.best is None or self.baseline <= 0:
            return None
        return (self.baseline - self.best.state.best_time) / self.baseline * 100.0


def run_search(
    kernel: Kernel,
    backend,
    anneal_cfg: AnnealConfig,
    *,
    chains: int = 1,
    plan: TestPlan | None = None,
    store: ResultStore | None = None,
) -> SearchReport:
    if chains < 1:
        raise ValueError("chains must be >= 1")
    digest = input_hash(serialize_kernel(kernel))

    tester = None
    if plan is not None and anneal_cfg.tests_per_step > 0:
        step_plan = replace(plan, samples=anneal_cfg.tests_per_step)
        tester = lambda cand: run_tests(kernel, cand, step_plan, fail_fast=True).ok

    outcomes: list[ChainOutcome] = []
    baseline = 0.0
    unit = getattr(backend, "unit", "")
    for c in range(chains):
        cfg = replace(anneal_cfg, seed=anneal_cfg.seed + c)
        state = anneal(kernel, backend, cfg, tester=tester)
        baseline = state.baseline
        unit = state.unit
        verdict = run_tests(kernel, state.best, plan) if plan is not None else None
        outcomes.append(ChainOutcome(seed=cfg.seed, state=state, verdict=verdict))

    ranked = sorted(
        (o for o in outcomes if o.passed),
        key=lambda o: (o.state.best_time, o.seed),
    )
    best = ranked[0] if ranked else None

    if store is not None:
        entries = []
        for o in outcomes:
            verdict_dict = o.verdict.to_dict() if o.verdict is not None else {"skipped": True}
            store.write_chain(
                digest,
                o.seed,
                serialize_kernel(o.state.best),
                o.state.history_jsonl(),
                verdict_dict,
            )
            entries.append(
                {
                    "seed": o.seed,
                    "time": o.state.best_time,
                    "passed": o.passed,
                    "iterations": o.state.iterations,
                }
            )
        store.update_manifest(digest, baseline=baseline, unit=unit, entries=entries)

    return SearchReport(
        kernel=kernel,
        input_digest=digest,
        baseline=baseline,
        unit=unit,
        chains=outcomes,
        best=best,
        candidate_count=len(candidates(kernel)),
    )
