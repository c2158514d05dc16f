"""Dependence analysis over instruction schedules.

Edges are ordering constraints between schedule positions (src < dst).
A single-position swap is legal exactly when no edge of any kind connects
the two neighbors and no block boundary separates them.  The analysis is
deliberately conservative: unknown instruction shapes contribute their
registers to both the read and write sets, and memory references alias
unless they provably cannot.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .ir import (
    GLOBAL_CLASSES,
    Instruction,
    InstrClass,
    Kernel,
    Operand,
    OperandKind,
)


class DepKind(Enum):
    REG_RAW = "RegRAW"
    REG_WAR = "RegWAR"
    REG_WAW = "RegWAW"
    BARRIER_PAIR = "BarrierPair"
    MEM_ORDER = "MemOrder"
    BLOCK_FENCE = "BlockFence"


@dataclass(frozen=True)
class DepEdge:
    src: int
    dst: int
    kind: DepKind
    detail: str = ""


@dataclass(frozen=True)
class DepGraph:
    node_count: int
    edges: tuple[DepEdge, ...]
    pairs: frozenset[tuple[int, int]]

    def connected(self, a: int, b: int) -> bool:
        if a > b:
            a, b = b, a
        return (a, b) in self.pairs

    def edges_between(self, a: int, b: int) -> tuple[DepEdge, ...]:
        return tuple(e for e in self.edges if {e.src, e.dst} == {a, b})


# Architectural constants carry no dependence.
_NULL_REGS = frozenset({"RZ", "URZ", "PT", "UPT"})

_SETP_BASES = frozenset({"ISETP", "FSETP", "DSETP", "PSETP", "UISETP", "HSETP2"})
_ATOM_BASES = frozenset({"ATOM", "ATOMG", "ATOMS"})
_STORE_BASES = frozenset({"STG", "ST", "STS", "STL", "RED"})
_REG_TOKEN_RE = re.compile(r"\b(U?R\d+|U?P\d+)\b")


def _width_regs(ins: Instruction) -> int:
    """Register count moved by a memory access, from the size modifier."""
    for mod in ins.modifiers:
        if mod == "128":
            return 4
        if mod == "64":
            return 2
        if mod in ("32", "U8", "S8", "U16", "S16", "8", "16"):
            return 1
    return 1


def _width_bytes(ins: Instruction) -> int:
    for mod in ins.modifiers:
        if mod == "128":
            return 16
        if mod == "64":
            return 8
        if mod in ("U16", "S16", "16"):
            return 2
        if mod in ("U8", "S8", "8"):
            return 1
    return 4


def _expand(name: str, count: int) -> list[str]:
    m = re.match(r"^(U?R)(\d+)$", name)
    if not m or count <= 1:
        return [name]
    prefix, num = m.group(1), int(m.group(2))
    return [f"{prefix}{num + k}" for k in range(count)]


def _operand_regs(op: Operand) -> list[str]:
    regs = list(op.registers())
    if op.base_pair and op.reg is not None:
        regs.extend(_expand(op.reg, 2)[1:])
    if op.kind is OperandKind.OPAQUE:
        regs.extend(_REG_TOKEN_RE.findall(op.text))
    return regs


def _dest_slots(ins: Instruction) -> set[int]:
    base = ins.base_mnemonic
    klass = ins.klass
    if klass in (InstrClass.CONTROL_FLOW, InstrClass.BARRIER):
        return set()
    if klass is InstrClass.GLOBAL_ASYNC_COPY:
        return set()
    if base in _ATOM_BASES:
        return {0}
    if base in _STORE_BASES or klass in (InstrClass.GLOBAL_STORE, InstrClass.SHARED_STORE):
        return set()
    if base in _SETP_BASES:
        return {0, 1}
    if ins.operands and ins.operands[0].kind in (
        OperandKind.REGISTER,
        OperandKind.UREGISTER,
        OperandKind.PREDICATE,
    ):
        return {0}
    return set()


@lru_cache(maxsize=65536)
def reads_writes(ins: Instruction) -> tuple[frozenset[str], frozenset[str]]:
    """Register identities read and written by one instruction.

    Wide shapes expand to register pairs: a ".64" tag on a memory base adds
    the next register, load/store data registers follow the size modifier,
    and the IMAD.WIDE family widens both the destination and the
    accumulator operand.
    """
    reads: set[str] = set()
    writes: set[str] = set()
    if ins.predicate:
        reads.add(ins.predicate)

    if ins.klass is InstrClass.OTHER:
        # Unknown shape: every register named anywhere lands in both sets.
        for op in ins.operands:
            for r in _operand_regs(op):
                reads.add(r)
                writes.add(r)
        return frozenset(reads - _NULL_REGS), frozenset(writes - _NULL_REGS)

    dests = _dest_slots(ins)
    wide_imad = ins.base_mnemonic in ("IMAD", "UIMAD") and "WIDE" in ins.modifiers
    mem_regs = _width_regs(ins)
    last_reg_slot = max(
        (
            i
            for i, op in enumerate(ins.operands)
            if op.kind in (OperandKind.REGISTER, OperandKind.UREGISTER)
        ),
        default=None,
    )

    for idx, op in enumerate(ins.operands):
        if op.kind in (OperandKind.MEMORY, OperandKind.DESCRIPTOR):
            reads.update(_operand_regs(op))  # address terms are always read
            continue
        if op.kind in (OperandKind.REGISTER, OperandKind.UREGISTER):
            count = 1
            if idx in dests and ins.klass in (
                InstrClass.GLOBAL_LOAD,
                InstrClass.SHARED_LOAD,
            ):
                count = mem_regs
            elif idx not in dests and ins.klass in (
                InstrClass.GLOBAL_STORE,
                InstrClass.SHARED_STORE,
            ):
                count = mem_regs  # store data operand
            elif wide_imad and (idx in dests or idx == last_reg_slot):
                count = 2
            names = set()
            for r in _operand_regs(op):
                names.update(_expand(r, count) if r == op.reg else [r])
            (writes if idx in dests else reads).update(names)
            continue
        if op.kind is OperandKind.PREDICATE:
            (writes if idx in dests else reads).add(op.reg or "")
            continue
        if op.kind is OperandKind.OPAQUE:
            for r in _REG_TOKEN_RE.findall(op.text):
                reads.add(r)
                writes.add(r)

    reads.discard("")
    writes.discard("")
    return frozenset(reads - _NULL_REGS), frozenset(writes - _NULL_REGS)


@dataclass(frozen=True)
class MemRef:
    space: str  # "global" | "shared" | "local" | "unknown"
    base: str | None
    offset: int
    size: int
    write: bool


def _ref_from_operand(op: Operand, space: str, size: int, write: bool) -> MemRef:
    return MemRef(space=space, base=op.reg, offset=op.offset, size=size, write=write)


@lru_cache(maxsize=65536)
def mem_refs(ins: Instruction) -> tuple[MemRef, ...]:
    """Memory references made by one instruction, with address-space tags."""
    base = ins.base_mnemonic
    klass = ins.klass
    size = _width_bytes(ins)
    mem_ops = [op for op in ins.operands if op.kind in (OperandKind.MEMORY, OperandKind.DESCRIPTOR)]
    if not mem_ops:
        return ()
    if klass is InstrClass.GLOBAL_ASYNC_COPY:
        refs = [_ref_from_operand(mem_ops[0], "shared", size, write=True)]
        if len(mem_ops) > 1:
            refs.append(_ref_from_operand(mem_ops[1], "global", size, write=False))
        return tuple(refs)
    space = {
        "LDG": "global",
        "STG": "global",
        "RED": "global",
        "ATOM": "global",
        "ATOMG": "global",
        "LDS": "shared",
        "LDSM": "shared",
        "STS": "shared",
        "ATOMS": "shared",
        "LDL": "local",
        "STL": "local",
    }.get(base, "unknown")
    is_write = (
        klass in (InstrClass.GLOBAL_STORE, InstrClass.SHARED_STORE)
        or base in _ATOM_BASES
        or base in ("RED", "STL", "ST")
        or klass is InstrClass.OTHER  # unknown direction: assume it may write
    )
    return tuple(_ref_from_operand(op, space, size, write=is_write) for op in mem_ops)


def refs_alias(a: MemRef, b: MemRef) -> bool:
    """Conservative may-alias: distinct only by known space or by provably
    disjoint constant offset ranges off the same base register."""
    if a.space != "unknown" and b.space != "unknown" and a.space != b.space:
        return False
    if a.base is None or b.base is None:
        return True
    if a.base != b.base:
        return True
    return not (a.offset + a.size <= b.offset or b.offset + b.size <= a.offset)


def _mem_edge_needed(i_ins: Instruction, j_ins: Instruction) -> str | None:
    refs_i, refs_j = mem_refs(i_ins), mem_refs(j_ins)
    if not refs_i or not refs_j:
        return None
    both_global = i_ins.klass in GLOBAL_CLASSES and j_ins.klass in GLOBAL_CLASSES
    for ra in refs_i:
        for rb in refs_j:
            if not refs_alias(ra, rb):
                continue
            if ra.write or rb.write:
                return f"{ra.space}/{rb.space}"
            if both_global:
                return f"{ra.space}/{rb.space}"
    return None


def build_depgraph(kernel: Kernel) -> DepGraph:
    """Construct every ordering edge for the schedule in one forward pass
    (register and barrier families) plus a pairwise pass over the memory
    instructions."""
    n = len(kernel.schedule)
    edges: list[DepEdge] = []
    seen: set[tuple[int, int, DepKind]] = set()

    def add(src: int, dst: int, kind: DepKind, detail: str) -> None:
        key = (src, dst, kind)
        if src != dst and key not in seen:
            seen.add(key)
            edges.append(DepEdge(src, dst, kind, detail))

    last_writer: dict[str, int] = {}
    readers_since: dict[str, list[int]] = {}
    last_setter: dict[int, int] = {}
    waiters_since: dict[int, list[int]] = {}

    for j, ins in enumerate(kernel.schedule):
        reads, writes = reads_writes(ins)
        for r in reads:
            if r in last_writer:
                add(last_writer[r], j, DepKind.REG_RAW, r)
        for w in writes:
            for reader in readers_since.get(w, ()):
                add(reader, j, DepKind.REG_WAR, w)
            if w in last_writer:
                add(last_writer[w], j, DepKind.REG_WAW, w)
        for w in writes:
            last_writer[w] = j
            readers_since[w] = []
        for r in reads:
            readers_since.setdefault(r, []).append(j)

        ctrl = ins.control
        if ctrl is not None:
            for b in sorted(ctrl.wait_mask):
                if b in last_setter:
                    add(last_setter[b], j, DepKind.BARRIER_PAIR, f"B{b}")
                waiters_since.setdefault(b, []).append(j)
            for b in (ctrl.read_barrier, ctrl.write_barrier):
                if b is None:
                    continue
                for w in waiters_since.get(b, ()):
                    add(w, j, DepKind.BARRIER_PAIR, f"B{b}")
                waiters_since[b] = []
                last_setter[b] = j

    mem_idx = [i for i, ins in enumerate(kernel.schedule) if mem_refs(ins)]
    for a_pos in range(len(mem_idx)):
        for b_pos in range(a_pos + 1, len(mem_idx)):
            i, j = mem_idx[a_pos], mem_idx[b_pos]
            detail = _mem_edge_needed(kernel.schedule[i], kernel.schedule[j])
            if detail is not None:
                add(i, j, DepKind.MEM_ORDER, detail)

    for i, ins in enumerate(kernel.schedule):
        if ins.klass in (InstrClass.BARRIER, InstrClass.CONTROL_FLOW):
            start, end = kernel.block_of(i)
            for j in range(start, end):
                if j < i:
                    add(j, i, DepKind.BLOCK_FENCE, ins.base_mnemonic)
                elif j > i:
                    add(i, j, DepKind.BLOCK_FENCE, ins.base_mnemonic)

    return DepGraph(
        node_count=n,
        edges=tuple(edges),
        pairs=frozenset((e.src, e.dst) for e in edges),
    )


def swap_legal(graph: DepGraph, kernel: Kernel, pos: int) -> bool:
    """True when schedule[pos] and schedule[pos+1] may exchange places."""
    if not 0 <= pos < len(kernel.schedule) - 1:
        return False
    if (pos + 1) in kernel.block_boundaries:
        return False
    return not graph.connected(pos, pos + 1)


_DOT_COLORS = {
    DepKind.REG_RAW: "black",
    DepKind.REG_WAR: "gray40",
    DepKind.REG_WAW: "gray60",
    DepKind.BARRIER_PAIR: "red",
    DepKind.MEM_ORDER: "blue",
    DepKind.BLOCK_FENCE: "green4",
}


def to_dot(graph: DepGraph, kernel: Kernel) -> str:
    """Render the dependence graph in DOT format for debugging."""
    lines = ["digraph deps {", "  rankdir=TB;", "  node [shape=box, fontname=monospace];"]
    for i, ins in enumerate(kernel.schedule):
        ops = ", ".join(op.text for op in ins.operands)
        label = f"{i}: {ins.mnemonic} {ops}".strip().replace('"', "'")
        lines.append(f'  n{i} [label="{label}"];')
    for e in graph.edges:
        color = _DOT_COLORS[e.kind]
        label = f"{e.kind.value}:{e.detail}" if e.detail else e.kind.value
        lines.append(f'  n{e.src} -> n{e.dst} [color={color}, label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
