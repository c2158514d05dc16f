"""Release gate: the seven behavioral criteria this package must satisfy.

Each test is one criterion, run at its stated tolerance and budget, and
contributes exactly one PASS/FAIL line to the terminal summary (see the
acceptance marker hook in conftest).  Expected values come from the
independent oracles in kernels.py, never from the implementation.
"""
import math
import random
import struct
import time

import pytest

from sasstune import (
    AnnealConfig,
    MachineConfig,
    SimulatorBackend,
    accept_move,
    anneal,
    feedback,
    interpret,
    parse_kernel,
    pass_curve,
    serialize_kernel,
    simulate,
)
from sasstune.deps import build_depgraph, swap_legal
from sasstune.perturb import (
    Action,
    Direction,
    MoveRejected,
    apply_action,
    candidates,
    sample_action,
)
from sasstune.sasstext import normalize_newlines
from sasstune.difftest import BufferSpec, TestPlan

import kernels


@pytest.mark.acceptance("criterion 1  round-trip fidelity")
def test_round_trip_fidelity(corpus_paths):
    assert corpus_paths, "corpus is missing"
    started = time.perf_counter()
    clean = 0
    for path in corpus_paths:
        raw = path.read_text()
        kernel = parse_kernel(raw, name=path.stem)
        assert serialize_kernel(kernel) == normalize_newlines(raw), path.name
        clean += 1
    elapsed = time.perf_counter() - started
    assert clean == len(corpus_paths)  # 100%, no exceptions
    assert elapsed < 1.0, f"round-trip took {elapsed:.3f}s"


@pytest.mark.acceptance("criterion 2  improvement feedback values")
def test_improvement_feedback_values():
    assert feedback(100, 100, 90) == 0.10
    assert feedback(100, 90, 90) == 0.0
    assert feedback(200, 180, 190) == -0.05


@pytest.mark.acceptance("criterion 3  annealing mechanics")
def test_annealing_mechanics():
    backend = SimulatorBackend()
    kernel = parse_kernel(kernels.hiding_kernel(pads=4, pad_stall=8, load_at=4))

    # (a) the iteration count is the closed-form cooling budget, exactly
    for t_max, t_min, cooling in [(1.0, 0.01, 1.05), (2.0, 0.5, 1.1), (1.0, 0.001, 1.3)]:
        cfg = AnnealConfig(t_max=t_max, t_min=t_min, cooling=cooling)
        state = anneal(kernel, backend, cfg)
        assert state.iterations == math.ceil(math.log(t_max / t_min) / math.log(cooling))
        assert len(state.history) == state.iterations

    # (b) empirical acceptance of a constant uphill move tracks the
    # Boltzmann factor within three points over >= 10^4 trials
    for delta_e, temperature in [(0.3, 0.5), (0.1, 0.05), (1.0, 0.7)]:
        rng = random.Random(424242)
        trials = 20_000
        rate = sum(accept_move(delta_e, temperature, rng) for _ in range(trials)) / trials
        assert abs(rate - math.exp(-delta_e / temperature)) <= 0.03

    # (c) the champion's energy never increases within any run
    for seed in range(10):
        state = anneal(kernel, backend, AnnealConfig(seed=seed))
        running = 1.0
        for record in state.history:
            previous = running
            if record.accepted and record.energy is not None:
                running = min(running, record.energy)
            assert running <= previous
        assert state.best_energy == running


@pytest.mark.acceptance("criterion 4  desk-scale optimality")
def test_desk_scale_optimality():
    started = time.perf_counter()
    machine = MachineConfig(global_mem_latency=100)
    backend = SimulatorBackend(machine)

    def energy(k):
        return simulate(k, machine).total_cycles

    def neighbors(k):
        graph = build_depgraph(k)
        for rank in range(len(candidates(k).positions)):
            for direction in Direction:
                try:
                    yield apply_action(k, graph, Action(rank, direction))
                except MoveRejected:
                    continue

    rng = random.Random(2024)
    shapes = [
        [(rng.choice([2, 3]), rng.randrange(10, 16)) for _ in range(rng.choice([3, 4]))]
        for _ in range(20)
    ]

    runs = successes = 0
    for corridors in shapes:
        kernel = parse_kernel(kernels.corridor_kernel(corridors))
        movable = candidates(kernel).positions
        assert len(kernel) <= 40
        assert len(movable) <= 7
        optimum, _ = kernels.brute_force_min(
            kernel, energy, neighbors, window=3, movable=movable
        )
        baseline = energy(kernel)
        assert optimum < baseline  # the family always has headroom
        for seed in range(3):
            state = anneal(kernel, backend, AnnealConfig(seed=seed))
            runs += 1
            if state.best_time <= optimum * 1.05:
                successes += 1

    elapsed = time.perf_counter() - started
    assert runs == 60
    assert successes >= math.ceil(0.9 * runs), f"{successes}/{runs} within 5% of optimum"
    assert elapsed < 120.0, f"optimality suite took {elapsed:.1f}s"


@pytest.mark.acceptance("criterion 5  latency-hiding deltas")
def test_latency_hiding_deltas():
    inputs = [7, 0, 0xFFFFFFFF]
    for pads in (1, 2, 4, 8):
        for stall in (2, 8, 15):
            texts = [kernels.interp_hiding_kernel(pads, stall, p) for p in range(pads + 1)]
            parsed = [parse_kernel(t) for t in texts]
            totals = [simulate(k).total_cycles for k in parsed]

            for p in range(pads + 1):
                assert totals[p] == kernels.interp_hiding_total(p, stall)

            # hoisting the load past one pad is legal and saves exactly
            # one pad stall, every time
            for p in range(1, pads + 1):
                load_pos = 4 + p
                graph = build_depgraph(parsed[p])
                assert swap_legal(graph, parsed[p], load_pos - 1)
                assert totals[p] - totals[p - 1] == stall

            # and the computed result never moves a bit
            for x in inputs:
                buffers = {0: struct.pack("<I", x), 1: b"\x00" * 4}
                outs = {interpret(k, buffers, ret_ptr=1) for k in parsed}
                assert len(outs) == 1
                assert outs.pop() == struct.pack("<I", (x + 1) & 0xFFFFFFFF)


@pytest.mark.acceptance("criterion 6  mutation soundness")
def test_mutation_soundness():
    programs = []
    for seed in range(25):
        text, _ = kernels.random_program(seed)
        kernel = parse_kernel(text)
        cases = []
        for j in range(3):
            gen = random.Random(f"case:{seed}:{j}")
            buffers = {
                0: struct.pack("<4I", *(gen.getrandbits(32) for _ in range(4))),
                1: b"\x00" * 16,
            }
            cases.append((buffers, interpret(kernel, buffers, ret_ptr=1)))
        programs.append((kernel, cases))

    sequences = 1000
    applied_total = 0
    failures = []
    for i in range(sequences):
        kernel, cases = programs[i % len(programs)]
        rng = random.Random(10_000 + i)
        mutant = kernel
        graph = build_depgraph(mutant)
        for _ in range(2 + i % 6):
            action = sample_action(candidates(mutant), rng)
            try:
                mutant = apply_action(mutant, graph, action)
            except MoveRejected:
                continue
            graph = build_depgraph(mutant)
            applied_total += 1
        for buffers, expected in cases:
            if interpret(mutant, buffers, ret_ptr=1) != expected:
                failures.append(i)
                break

    assert applied_total >= sequences  # the walks genuinely move instructions
    assert failures == [], f"{len(failures)} sequences changed outputs: {failures[:5]}"


@pytest.mark.acceptance("criterion 7  detection curve")
def test_detection_curve():
    started = time.perf_counter()
    plan = TestPlan(ret_ptr=1, buffers=(BufferSpec(0, 2), BufferSpec(1, 4)), seed=0)
    reference = parse_kernel(kernels.BASE_DETECT)
    equivalents = [parse_kernel(t) for t in kernels.detect_equivalents()]
    violators = [parse_kernel(t) for t, _ in kernels.detect_violators()]
    assert len(equivalents) == 10 and len(violators) == 10

    budgets = [1, 10, 100, 1_000, 10_000, 100_000]
    curve = pass_curve(reference, equivalents + violators, budgets, plan)
    elapsed = time.perf_counter() - started

    counts = [n for _, n in curve]
    assert counts == sorted(counts, reverse=True)  # monotone non-increasing
    # stabilizes at exactly the number of equivalent mutants: every
    # violator is caught within the largest budget, no equivalent ever is
    assert counts[-1] == len(equivalents)
    assert all(n >= len(equivalents) for n in counts)
    assert elapsed < 60.0, f"detection curve took {elapsed:.1f}s"
