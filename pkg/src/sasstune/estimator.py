"""Estimator-style facade over the schedule search.

ScheduleTuner wraps the annealing driver in the familiar fit/transform
shape: fit(X) searches for a faster legal ordering of the kernel text X,
transform(X) returns the best text found. Hyperparameters are plain
constructor arguments so get_params/set_params/clone work unchanged.
"""
from __future__ import annotations

from typing import Any

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .anneal import AnnealConfig
from .backends import make_backend
from .difftest import TestPlan
from .driver import run_search
from .ir import Kernel
from .machine import MachineConfig
from .sasstext import parse_kernel, serialize_kernel
from .store import input_hash


def as_kernel(X: Any, name: str = "kernel") -> Kernel:
    """Coerce estimator input to a Kernel.

    Accepts a Kernel, a SASS text string, or a length-1 list/tuple holding
    either. Anything else is a usage error, reported the sklearn way.
    """
    if isinstance(X, (list, tuple)):
        if len(X) != 1:
            raise ValueError(
                f"expected a single kernel, got a sequence of length {len(X)}"
            )
        X = X[0]
    if isinstance(X, Kernel):
        return X
    if isinstance(X, str):
        return parse_kernel(X, name=name)
    if isinstance(X, bytes):
        return parse_kernel(X.decode(), name=name)
    raise TypeError(f"cannot interpret {type(X).__name__} as a kernel schedule")


class ScheduleTuner(TransformerMixin, BaseEstimator):
    """Search for a faster instruction order of one kernel.

    Parameters mirror the annealing and backend configuration. `backend`
    is either "sim" or "external:<command>" where the command contains a
    {schedule_file} placeholder. `test_plan` is an optional dict in the
    config-file "tests" shape; when given, per-step vetting uses
    `tests_per_step` samples and the final champion is re-verified on the
    full plan.
    """

    def __init__(
        self,
        t_max: float = 1.0,
        t_min: float = 0.01,
        cooling: float = 1.05,
        seed: int = 0,
        chains: int = 1,
        measure_reps: int = 5,
        tests_per_step: int = 0,
        backend: str = "sim",
        global_mem_latency: int = 400,
        test_plan: dict | None = None,
        unsafe_moves: bool = False,
    ):
        self.t_max = t_max
        self.t_min = t_min
        self.cooling = cooling
        self.seed = seed
        self.chains = chains
        self.measure_reps = measure_reps
        self.tests_per_step = tests_per_step
        self.backend = backend
        self.global_mem_latency = global_mem_latency
        self.test_plan = test_plan
        self.unsafe_moves = unsafe_moves

    def _anneal_config(self) -> AnnealConfig:
        return AnnealConfig(
            t_max=self.t_max,
            t_min=self.t_min,
            cooling=self.cooling,
            seed=self.seed,
            measure_reps=self.measure_reps,
            tests_per_step=self.tests_per_step,
            unsafe_moves=self.unsafe_moves,
        )

    def fit(self, X, y=None):
        kernel = as_kernel(X)
        machine = MachineConfig(global_mem_latency=self.global_mem_latency)
        backend = make_backend(self.backend, machine=machine)
        plan = TestPlan.from_dict(self.test_plan) if self.test_plan else None
        report = run_search(
            kernel,
            backend,
            self._anneal_config(),
            chains=self.chains,
            plan=plan,
        )
        self.report_ = report
        self.input_digest_ = report.input_digest
        self.baseline_ = report.baseline
        self.unit_ = report.unit
        self.best_time_ = report.best_time
        self.improvement_ = report.improvement_pct
        best = report.best.state.best if report.best is not None else kernel
        self.best_kernel_ = best
        self.n_iterations_ = sum(o.state.iterations for o in report.chains)
        return self

    def transform(self, X):
        check_is_fitted(self, "report_")
        kernel = as_kernel(X)
        digest = input_hash(serialize_kernel(kernel))
        if digest != self.input_digest_:
            raise ValueError(
                "transform input differs from the fitted kernel; "
                "this tuner optimizes one schedule, refit on the new input"
            )
        return serialize_kernel(self.best_kernel_)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y).transform(X)
