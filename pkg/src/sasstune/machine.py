"""Deterministic machine model: issue-timing simulation and functional execution.

The two halves are strictly separated: simulate() reads only control codes,
mnemonics, and instruction classes (never data values); interpret() reads
only operands and data (never control codes).  Both are pure functions of
their inputs.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .ir import (
    BARRIER_SLOTS,
    GLOBAL_CLASSES,
    Instruction,
    InstrClass,
    Kernel,
    Operand,
    OperandKind,
)

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF

# Client buffers are mapped at deterministic, guard-separated base addresses.
_BUFFER_BASE = 0x10000
_BUFFER_ALIGN = 256
_PARAM_BANK_BASE = 0x160  # 64-bit kernel argument pointers, 8 bytes apart

DEFAULT_CPI = {"FFMA": 4, "IMAD": 5, "POPC": 15}
DEFAULT_CLASS_CPI = {
    InstrClass.COMPUTE: 4,
    InstrClass.SHARED_LOAD: 30,
    InstrClass.SHARED_STORE: 30,
    InstrClass.BARRIER: 1,
    InstrClass.CONTROL_FLOW: 1,
    InstrClass.OTHER: 4,
}


@dataclass(frozen=True)
class MachineConfig:
    """Timing parameters for the scoreboard simulator.

    global_mem_latency is a free parameter of the model (cycles until a
    barrier set by a global-memory instruction clears).  cpi_table maps
    mnemonic prefixes to issue-to-result latencies with longest-prefix
    match; anything unmatched falls back to its class default.  The yield
    control field is parsed upstream but has no timing effect here.
    """

    global_mem_latency: int = 400
    barrier_count: int = BARRIER_SLOTS
    issue_width: int = 1
    cpi_table: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_CPI))
    class_cpi: Mapping[InstrClass, int] = field(default_factory=lambda: dict(DEFAULT_CLASS_CPI))
    shared_size: int = 64 * 1024

    def __post_init__(self) -> None:
        if self.issue_width != 1:
            raise ValueError("only issue_width 1 is modeled")
        if self.global_mem_latency < 1:
            raise ValueError("global_mem_latency must be >= 1")
        for k, v in self.cpi_table.items():
            if v < 1:
                raise ValueError(f"cpi for {k!r} must be >= 1")

    def latency_of(self, ins: Instruction) -> int:
        if ins.klass in GLOBAL_CLASSES:
            return self.global_mem_latency
        mn = ins.mnemonic.upper()
        best: str | None = None
        for key in self.cpi_table:
            if mn.startswith(key) and (best is None or len(key) > len(best)):
                best = key
        if best is not None:
            return self.cpi_table[best]
        return self.class_cpi.get(ins.klass, 4)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MachineConfig":
        kwargs = dict(data)
        if "cpi" in kwargs:
            kwargs["cpi_table"] = {str(k).upper(): int(v) for k, v in kwargs.pop("cpi").items()}
        if "class_cpi" in kwargs:
            kwargs["class_cpi"] = {
                InstrClass(k): int(v) for k, v in kwargs.pop("class_cpi").items()
            }
        return cls(**kwargs)


@dataclass(frozen=True)
class SimReport:
    """Outcome of one scoreboard run."""

    total_cycles: int
    instruction_count: int
    stalls: tuple[tuple[int, int], ...]  # (schedule index, cycles waited)
    barrier_waits: Mapping[int, int]     # barrier index -> total cycles waited on it

    def to_json(self) -> str:
        return json.dumps(
            {
                "total_cycles": self.total_cycles,
                "instruction_count": self.instruction_count,
                "stalls": [list(s) for s in self.stalls],
                "barrier_waits": {str(k): v for k, v in sorted(self.barrier_waits.items())},
            },
            sort_keys=True,
        )


def simulate(kernel: Kernel, config: MachineConfig | None = None) -> SimReport:
    """Single-warp in-order issue model.

    The issue pointer advances by max(1, stall_cycles) after each
    instruction; issue additionally waits for every barrier in the wait
    mask.  An instruction with a read or write barrier sets that barrier
    busy until issue + latency.  Total time is the completion horizon:
    the latest of any result-ready time and the final issue pointer.
    """
    cfg = config or MachineConfig()
    barrier_clear = [0] * cfg.barrier_count
    pointer = 0
    finish = 0
    stalls: list[tuple[int, int]] = []
    barrier_waits: dict[int, int] = {}

    for idx, ins in enumerate(kernel.schedule):
        ctrl = ins.control
        wait_until = pointer
        binding = None
        if ctrl is not None:
            for b in ctrl.wait_mask:
                if barrier_clear[b] > wait_until:
                    wait_until = barrier_clear[b]
                    binding = b
        waited = wait_until - pointer
        stalls.append((idx, waited))
        if waited and binding is not None:
            barrier_waits[binding] = barrier_waits.get(binding, 0) + waited
        issue = wait_until
        latency = cfg.latency_of(ins)
        if ctrl is not None:
            for b in (ctrl.read_barrier, ctrl.write_barrier):
                if b is not None:
                    barrier_clear[b] = issue + latency
        finish = max(finish, issue + latency)
        stall = ctrl.stall_cycles if ctrl is not None else 1
        pointer = issue + max(1, stall)

    total = max(finish, pointer) if kernel.schedule else 0
    return SimReport(
        total_cycles=total,
        instruction_count=len(kernel.schedule),
        stalls=tuple(stalls),
        barrier_waits=barrier_waits,
    )


# --------------------------------------------------------------------------
# Functional interpreter
# --------------------------------------------------------------------------


class UnsupportedInstruction(Exception):
    """Instruction outside the interpretable subset (timing-only kernels)."""


class OutOfBoundsAccess(Exception):
    """A memory access fell outside every bound buffer."""


class UninitializedRead(Exception):
    """Strict mode: a register was read before any write."""


class _Halt(Exception):
    pass


def _s32(v: int) -> int:
    return v - 0x100000000 if v & 0x80000000 else v


def _s64(v: int) -> int:
    return v - 0x10000000000000000 if v & 0x8000000000000000 else v


class _State:
    __slots__ = ("regs", "preds", "segments", "shared", "cbank", "strict")

    def __init__(self, segments, shared, cbank, strict):
        self.regs: dict[str, int] = {}
        self.preds: dict[str, bool] = {}
        self.segments = segments  # list of (base, bytearray), ascending
        self.shared = shared
        self.cbank = cbank
        self.strict = strict

    def locate(self, addr: int, size: int):
        for base, buf in self.segments:
            off = addr - base
            if 0 <= off and off + size <= len(buf):
                return buf, off
        raise OutOfBoundsAccess(f"global access at {addr:#x} size {size}")


_NEXT_RE = re.compile(r"^(U?R)(\d+)$")


def _next_reg(name: str) -> str:
    m = _NEXT_RE.match(name)
    return f"{m.group(1)}{int(m.group(2)) + 1}" if m else name


def _reg_reader(name: str) -> Callable[[_State], int]:
    if name in ("RZ", "URZ"):
        return lambda st: 0
    def read(st: _State) -> int:
        try:
            return st.regs[name]
        except KeyError:
            if st.strict:
                raise UninitializedRead(name) from None
            return 0
    return read


def _pred_reader(name: str, negated: bool) -> Callable[[_State], bool]:
    if name in ("PT", "UPT"):
        const = not negated
        return lambda st: const
    def read(st: _State) -> bool:
        val = st.preds.get(name, False)
        return not val if negated else val
    return read


def _cbank_reader(bank: int, addr: int) -> Callable[[_State], int]:
    def read(st: _State) -> int:
        if bank != 0:
            if st.strict:
                raise UninitializedRead(f"c[{bank:#x}][{addr:#x}]")
            return 0
        val = st.cbank.get(addr)
        if val is None:
            if st.strict:
                raise UninitializedRead(f"c[0x0][{addr:#x}]")
            return 0
        return val
    return read


def _src_u32(op: Operand, ins: Instruction) -> Callable[[_State], int]:
    """Compile one scalar source operand to a value closure."""
    if op.kind is OperandKind.IMMEDIATE:
        if not isinstance(op.value, int):
            raise UnsupportedInstruction(f"{ins.mnemonic}: non-integer immediate {op.text}")
        const = op.value & M32
        return lambda st: const
    if op.kind in (OperandKind.REGISTER, OperandKind.UREGISTER):
        base = _reg_reader(op.reg or "RZ")
        if op.modifier == "-":
            return lambda st: (-base(st)) & M32
        if op.modifier == "~":
            return lambda st: (~base(st)) & M32
        if op.modifier == "|":
            return lambda st: abs(_s32(base(st))) & M32
        return base
    if op.kind is OperandKind.CONSTANT:
        return _cbank_reader(op.bank or 0, op.addr or 0)
    if op.kind is OperandKind.SPECIAL:
        return lambda st: 0  # single-thread model: every special register reads 0
    raise UnsupportedInstruction(f"{ins.mnemonic}: unsupported operand {op.text!r}")


def _addr_fn(op: Operand, ins: Instruction) -> Callable[[_State], int]:
    if op.aux_regs:
        raise UnsupportedInstruction(f"{ins.mnemonic}: composite address {op.text!r}")
    offset = op.offset
    if op.reg is None:
        return lambda st: offset
    lo = _reg_reader(op.reg)
    if op.base_pair:
        hi = _reg_reader(_next_reg(op.reg))
        return lambda st: (lo(st) | (hi(st) << 32)) + offset
    return lambda st: lo(st) + offset


def _mem_size(ins: Instruction) -> int:
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


def _load_bytes(st: _State, space: str, addr: int, size: int) -> bytes:
    if space == "shared":
        if addr < 0 or addr + size > len(st.shared):
            raise OutOfBoundsAccess(f"shared access at {addr:#x} size {size}")
        return bytes(st.shared[addr : addr + size])
    buf, off = st.locate(addr, size)
    return bytes(buf[off : off + size])


def _store_bytes(st: _State, space: str, addr: int, size: int, data: bytes) -> None:
    if space == "shared":
        if addr < 0 or addr + size > len(st.shared):
            raise OutOfBoundsAccess(f"shared access at {addr:#x} size {size}")
        st.shared[addr : addr + size] = data
        return
    buf, off = st.locate(addr, size)
    buf[off : off + size] = data


def _compile_load(ins: Instruction, space: str) -> Callable[[_State], None]:
    if len(ins.operands) != 2 or ins.operands[0].kind not in (
        OperandKind.REGISTER,
        OperandKind.UREGISTER,
    ):
        raise UnsupportedInstruction(f"{ins.mnemonic}: unsupported load shape")
    rd = ins.operands[0].reg or "RZ"
    addr = _addr_fn(ins.operands[1], ins)
    size = _mem_size(ins)
    signed = any(m in ("S8", "S16") for m in ins.modifiers)

    if size >= 4:
        names = [rd]
        for _ in range(size // 4 - 1):
            names.append(_next_reg(names[-1]))
        def step(st: _State) -> None:
            data = _load_bytes(st, space, addr(st), size)
            for k, name in enumerate(names):
                if name not in ("RZ", "URZ"):
                    st.regs[name] = int.from_bytes(data[4 * k : 4 * k + 4], "little")
        return step

    def step_narrow(st: _State) -> None:
        data = _load_bytes(st, space, addr(st), size)
        val = int.from_bytes(data, "little", signed=signed) & M32
        if rd not in ("RZ", "URZ"):
            st.regs[rd] = val
    return step_narrow


def _compile_store(ins: Instruction, space: str) -> Callable[[_State], None]:
    if len(ins.operands) != 2 or ins.operands[0].kind is not OperandKind.MEMORY:
        raise UnsupportedInstruction(f"{ins.mnemonic}: unsupported store shape")
    addr = _addr_fn(ins.operands[0], ins)
    size = _mem_size(ins)
    src = ins.operands[1]
    if src.kind not in (OperandKind.REGISTER, OperandKind.UREGISTER):
        raise UnsupportedInstruction(f"{ins.mnemonic}: store data must be a register")
    names = [src.reg or "RZ"]
    for _ in range(max(1, size // 4) - 1):
        names.append(_next_reg(names[-1]))
    readers = [_reg_reader(n) for n in names]

    def step(st: _State) -> None:
        if size >= 4:
            data = b"".join(r(st).to_bytes(4, "little") for r in readers)
        else:
            data = (readers[0](st) & ((1 << (8 * size)) - 1)).to_bytes(size, "little")
        _store_bytes(st, space, addr(st), size, data)
    return step


def _compile_ldgsts(ins: Instruction) -> Callable[[_State], None]:
    mem_ops = [op for op in ins.operands if op.kind is OperandKind.MEMORY]
    if len(mem_ops) != 2 or len(ins.operands) != 2:
        raise UnsupportedInstruction(f"{ins.mnemonic}: only plain two-address copies execute")
    dst = _addr_fn(mem_ops[0], ins)
    src = _addr_fn(mem_ops[1], ins)
    size = _mem_size(ins)

    def step(st: _State) -> None:
        data = _load_bytes(st, "global", src(st), size)
        _store_bytes(st, "shared", dst(st), size, data)
    return step


_CMP_FNS = {
    "EQ": lambda a, b: a == b,
    "NE": lambda a, b: a != b,
    "LT": lambda a, b: a < b,
    "LE": lambda a, b: a <= b,
    "GT": lambda a, b: a > b,
    "GE": lambda a, b: a >= b,
}
_COMBINE_FNS = {
    "AND": lambda a, b: a and b,
    "OR": lambda a, b: a or b,
    "XOR": lambda a, b: a != b,
}


def _compile_alu(ins: Instruction) -> Callable[[_State], None]:
    base = ins.base_mnemonic
    mods = set(ins.modifiers)
    ops = ins.operands

    def dest(slot: int = 0) -> str:
        op = ops[slot]
        if op.kind not in (OperandKind.REGISTER, OperandKind.UREGISTER):
            raise UnsupportedInstruction(f"{ins.mnemonic}: destination must be a register")
        return op.reg or "RZ"

    def write_u32(st: _State, name: str, val: int) -> None:
        if name not in ("RZ", "URZ"):
            st.regs[name] = val & M32

    if base in ("MOV", "MOV32I", "UMOV"):
        if len(ops) == 3 and not (
            ops[2].kind is OperandKind.IMMEDIATE and ops[2].value == 0xF
        ):
            raise UnsupportedInstruction(f"{ins.mnemonic}: partial lane mask")
        if len(ops) not in (2, 3):
            raise UnsupportedInstruction(f"{ins.mnemonic}: operand count")
        rd, src = dest(), _src_u32(ops[1], ins)
        return lambda st: write_u32(st, rd, src(st))

    if base in ("S2R", "S2UR", "CS2R"):
        rd = dest()
        return lambda st: write_u32(st, rd, 0)

    if base == "LDC" or base == "ULDC":
        if len(ops) != 2 or ops[1].kind is not OperandKind.CONSTANT:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd = dest()
        words = 2 if "64" in mods else 1
        lo = _cbank_reader(ops[1].bank or 0, ops[1].addr or 0)
        hi = _cbank_reader(ops[1].bank or 0, (ops[1].addr or 0) + 4)
        rd2 = _next_reg(rd)
        def step(st: _State) -> None:
            write_u32(st, rd, lo(st))
            if words == 2:
                write_u32(st, rd2, hi(st))
        return step

    if base in ("IMAD", "UIMAD"):
        if any(m in mods for m in ("HI", "X")):
            raise UnsupportedInstruction(f"{ins.mnemonic}: carry/high forms")
        if len(ops) != 4:
            raise UnsupportedInstruction(f"{ins.mnemonic}: operand count")
        if "WIDE" in mods:
            rd = dest()
            rd_hi = _next_reg(rd)
            unsigned = "U32" in mods
            a, b = _src_u32(ops[1], ins), _src_u32(ops[2], ins)
            acc = ops[3]
            if acc.kind in (OperandKind.REGISTER, OperandKind.UREGISTER):
                if acc.modifier:
                    raise UnsupportedInstruction(f"{ins.mnemonic}: modified accumulator")
                c_lo = _reg_reader(acc.reg or "RZ")
                c_hi = _reg_reader(_next_reg(acc.reg or "RZ")) if acc.reg not in ("RZ", "URZ") else (lambda st: 0)
                c64 = lambda st: c_lo(st) | (c_hi(st) << 32)
            elif acc.kind is OperandKind.IMMEDIATE and isinstance(acc.value, int):
                cval = acc.value & M64
                c64 = lambda st: cval
            else:
                raise UnsupportedInstruction(f"{ins.mnemonic}: accumulator {acc.text!r}")
            def step(st: _State) -> None:
                av, bv = a(st), b(st)
                prod = (av * bv) if unsigned else (_s32(av) * _s32(bv))
                total = (prod + _s64(c64(st))) & M64
                write_u32(st, rd, total & M32)
                write_u32(st, rd_hi, total >> 32)
            return step
        rd = dest()
        a, b, c = (_src_u32(ops[k], ins) for k in (1, 2, 3))
        return lambda st: write_u32(st, rd, a(st) * b(st) + c(st))

    if base in ("IADD3", "UIADD3"):
        if len(ops) != 4 or any(op.kind is OperandKind.PREDICATE for op in ops):
            raise UnsupportedInstruction(f"{ins.mnemonic}: carry-predicate form")
        rd = dest()
        a, b, c = (_src_u32(ops[k], ins) for k in (1, 2, 3))
        return lambda st: write_u32(st, rd, a(st) + b(st) + c(st))

    if base in ("LEA", "ULEA"):
        if mods - {"U32"}:
            raise UnsupportedInstruction(f"{ins.mnemonic}: mods {sorted(mods)}")
        if len(ops) == 3:
            shift = 0
        elif len(ops) == 4 and ops[3].kind is OperandKind.IMMEDIATE and isinstance(ops[3].value, int):
            shift = ops[3].value & 31
        else:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd = dest()
        a, b = _src_u32(ops[1], ins), _src_u32(ops[2], ins)
        return lambda st: write_u32(st, rd, b(st) + (a(st) << shift))

    if base in ("LOP3", "ULOP3"):
        if "LUT" not in mods or len(ops) < 5:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        if len(ops) == 6:
            tail = ops[5]
            if not (tail.kind is OperandKind.PREDICATE and tail.reg in ("PT", "UPT")):
                raise UnsupportedInstruction(f"{ins.mnemonic}: predicate output")
        elif len(ops) != 5:
            raise UnsupportedInstruction(f"{ins.mnemonic}: operand count")
        lut_op = ops[4]
        if not (lut_op.kind is OperandKind.IMMEDIATE and isinstance(lut_op.value, int)):
            raise UnsupportedInstruction(f"{ins.mnemonic}: LUT immediate")
        lut = lut_op.value & 0xFF
        rd = dest()
        a, b, c = (_src_u32(ops[k], ins) for k in (1, 2, 3))
        def step(st: _State) -> None:
            av, bv, cv = a(st), b(st), c(st)
            out = 0
            for minterm in range(8):
                if not (lut >> minterm) & 1:
                    continue
                term = av if minterm & 4 else ~av
                term &= bv if minterm & 2 else ~bv
                term &= cv if minterm & 1 else ~cv
                out |= term
            write_u32(st, rd, out)
        return step

    if base in ("SHF", "USHF"):
        left = "L" in mods
        right = "R" in mods
        if left == right or not mods & {"U32", "S32"}:
            raise UnsupportedInstruction(f"{ins.mnemonic}: form")
        arithmetic = "S32" in mods
        hi = "HI" in mods
        if len(ops) != 4:
            raise UnsupportedInstruction(f"{ins.mnemonic}: operand count")
        rd = dest()
        a, s, c = _src_u32(ops[1], ins), _src_u32(ops[2], ins), _src_u32(ops[3], ins)
        def step(st: _State) -> None:
            lo_v, sh, hi_v = a(st), s(st) & 63, c(st)
            concat = (hi_v << 32) | lo_v
            if left:
                shifted = concat << sh
            else:
                concat_s = _s64(concat) if arithmetic else concat
                shifted = concat_s >> sh
            word = (shifted >> 32) if hi else shifted
            write_u32(st, rd, word & M32)
        return step

    if base == "SEL" or base == "USEL":
        if len(ops) != 4 or ops[3].kind is not OperandKind.PREDICATE:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd = dest()
        a, b = _src_u32(ops[1], ins), _src_u32(ops[2], ins)
        p = _pred_reader(ops[3].reg or "PT", ops[3].modifier == "!")
        return lambda st: write_u32(st, rd, a(st) if p(st) else b(st))

    if base in ("ISETP", "UISETP"):
        cmp_name = next((m for m in ins.modifiers if m in _CMP_FNS), None)
        comb_name = next((m for m in ins.modifiers if m in _COMBINE_FNS), None)
        if cmp_name is None or comb_name is None or "EX" in mods:
            raise UnsupportedInstruction(f"{ins.mnemonic}: form")
        if len(ops) != 5 or ops[0].kind is not OperandKind.PREDICATE:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        if not (ops[1].kind is OperandKind.PREDICATE and ops[1].reg in ("PT", "UPT")):
            raise UnsupportedInstruction(f"{ins.mnemonic}: dual predicate outputs")
        pd = ops[0].reg or "PT"
        unsigned = "U32" in mods
        cmp_fn, comb_fn = _CMP_FNS[cmp_name], _COMBINE_FNS[comb_name]
        a, b = _src_u32(ops[2], ins), _src_u32(ops[3], ins)
        pin = _pred_reader(ops[4].reg or "PT", ops[4].modifier == "!")
        def step(st: _State) -> None:
            av, bv = a(st), b(st)
            if not unsigned:
                av, bv = _s32(av), _s32(bv)
            if pd not in ("PT", "UPT"):
                st.preds[pd] = bool(comb_fn(cmp_fn(av, bv), pin(st)))
        return step

    if base == "IMNMX":
        if len(ops) != 4 or ops[3].kind is not OperandKind.PREDICATE:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd = dest()
        unsigned = "U32" in mods
        a, b = _src_u32(ops[1], ins), _src_u32(ops[2], ins)
        p = _pred_reader(ops[3].reg or "PT", ops[3].modifier == "!")
        def step(st: _State) -> None:
            av, bv = a(st), b(st)
            if not unsigned:
                key_a, key_b = _s32(av), _s32(bv)
            else:
                key_a, key_b = av, bv
            take_min = p(st)
            pick = min((key_a, av), (key_b, bv)) if take_min else max((key_a, av), (key_b, bv))
            write_u32(st, rd, pick[1])
        return step

    if base == "IABS":
        if len(ops) != 2:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd, a = dest(), _src_u32(ops[1], ins)
        return lambda st: write_u32(st, rd, abs(_s32(a(st))))

    if base in ("POPC", "UPOPC"):
        if len(ops) != 2:
            raise UnsupportedInstruction(f"{ins.mnemonic}: shape")
        rd, a = dest(), _src_u32(ops[1], ins)
        return lambda st: write_u32(st, rd, bin(a(st)).count("1"))

    raise UnsupportedInstruction(ins.mnemonic)


def _compile_instruction(ins: Instruction) -> Callable[[_State], None] | None:
    """Compile one instruction to a state-transition closure (None = no-op)."""
    klass = ins.klass
    base = ins.base_mnemonic

    if base == "NOP":
        return None
    if base == "EXIT":
        def halt(st: _State) -> None:
            raise _Halt
        step = halt
    elif klass is InstrClass.BARRIER:
        return None  # synchronization has no single-thread dataflow effect
    elif klass is InstrClass.CONTROL_FLOW:
        raise UnsupportedInstruction(f"{ins.mnemonic}: control flow")
    elif klass is InstrClass.GLOBAL_ASYNC_COPY:
        step = _compile_ldgsts(ins)
    elif klass in (InstrClass.GLOBAL_LOAD, InstrClass.SHARED_LOAD):
        step = _compile_load(ins, "shared" if klass is InstrClass.SHARED_LOAD else "global")
    elif klass in (InstrClass.GLOBAL_STORE, InstrClass.SHARED_STORE):
        if base in ("RED", "ATOM", "ATOMG", "ATOMS"):
            raise UnsupportedInstruction(ins.mnemonic)
        step = _compile_store(ins, "shared" if klass is InstrClass.SHARED_STORE else "global")
    elif klass is InstrClass.COMPUTE:
        step = _compile_alu(ins)
    else:
        raise UnsupportedInstruction(ins.mnemonic)

    if ins.predicate and ins.predicate not in ("PT", "UPT"):
        guard = _pred_reader(ins.predicate, ins.predicate_negated)
        inner = step
        def gated(st: _State) -> None:
            if guard(st):
                inner(st)
        return gated
    if ins.predicate and ins.predicate_negated:  # @!PT never executes
        return None
    return step


def buffer_bases(lengths: Mapping[int, int]) -> dict[int, int]:
    """Deterministic, guard-separated base address for each argument index."""
    bases: dict[int, int] = {}
    base = _BUFFER_BASE
    for arg in sorted(lengths):
        bases[arg] = base
        span = max(lengths[arg], 1)
        base += (span + _BUFFER_ALIGN - 1) // _BUFFER_ALIGN * _BUFFER_ALIGN + _BUFFER_ALIGN
    return bases


class CompiledKernel:
    """Kernel compiled to closures; run() executes one input binding."""

    def __init__(self, kernel: Kernel, *, strict: bool = False, shared_size: int = 64 * 1024):
        self.kernel = kernel
        self.strict = strict
        self.steps = [_compile_instruction(ins) for ins in kernel.schedule]
        # shared memory is only materialized for kernels that can touch it
        touches_shared = any(
            ins.klass
            in (InstrClass.SHARED_LOAD, InstrClass.SHARED_STORE, InstrClass.GLOBAL_ASYNC_COPY)
            for ins in kernel.schedule
        )
        self.shared_size = shared_size if touches_shared else 0
        self._bases_cache: tuple[tuple[tuple[int, int], ...], dict[int, int], dict[int, int]] | None = None

    def _layout(self, buffers: Mapping[int, bytes | bytearray]):
        sizes = tuple(sorted((a, len(b)) for a, b in buffers.items()))
        cached = self._bases_cache
        if cached is not None and cached[0] == sizes:
            return cached[1], cached[2]
        bases = buffer_bases(dict(sizes))
        cbank: dict[int, int] = {}
        for arg, addr in bases.items():
            slot = _PARAM_BANK_BASE + 8 * arg
            cbank[slot] = addr & M32
            cbank[slot + 4] = (addr >> 32) & M32
        self._bases_cache = (sizes, bases, cbank)
        return bases, cbank

    def run(self, buffers: Mapping[int, bytes | bytearray], ret_ptr: int) -> bytes:
        if ret_ptr not in buffers:
            raise ValueError(f"ret_ptr {ret_ptr} is not a bound buffer")
        bases, cbank = self._layout(buffers)
        work = {a: bytearray(b) for a, b in buffers.items()}
        segments = sorted((bases[a], work[a]) for a in work)
        st = _State(segments, bytearray(self.shared_size), cbank, self.strict)
        try:
            for step in self.steps:
                if step is not None:
                    step(st)
        except _Halt:
            pass
        return bytes(work[ret_ptr])


def interpret(
    kernel: Kernel,
    buffers: Mapping[int, bytes | bytearray],
    ret_ptr: int,
    *,
    strict: bool = False,
) -> bytes:
    """Execute the kernel on the given argument buffers; returns the bytes
    of the ret_ptr buffer after execution.  Input buffers are not mutated."""
    return CompiledKernel(kernel, strict=strict).run(buffers, ret_ptr)
