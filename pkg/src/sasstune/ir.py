"""Instruction-level model for GPU native assembly (SASS-style) schedules.

A kernel is held as an ordered schedule of instructions plus every
non-instruction line of the original dump, so that serialization can
reproduce the input byte for byte and mutations only permute whole lines.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Mapping

BARRIER_SLOTS = 6       # scoreboard barriers 0..5
STALL_MAX = 15          # stall field is 4 bits


class InstrClass(Enum):
    GLOBAL_LOAD = "GlobalLoad"
    GLOBAL_STORE = "GlobalStore"
    GLOBAL_ASYNC_COPY = "GlobalAsyncCopy"
    SHARED_LOAD = "SharedLoad"
    SHARED_STORE = "SharedStore"
    COMPUTE = "Compute"
    BARRIER = "Barrier"
    CONTROL_FLOW = "ControlFlow"
    OTHER = "Other"


GLOBAL_CLASSES = frozenset(
    {InstrClass.GLOBAL_LOAD, InstrClass.GLOBAL_STORE, InstrClass.GLOBAL_ASYNC_COPY}
)

# Classification is an exact-match table on the base mnemonic token (the part
# before the first '.').  Unknown tokens fall through to OTHER, never to a
# memory class, which keeps unrecognized instructions out of the movable set.
_CLASS_TABLE: dict[str, InstrClass] = {}


def _cls(names: str, klass: InstrClass) -> None:
    for n in names.split():
        _CLASS_TABLE[n] = klass


_cls("LDGSTS", InstrClass.GLOBAL_ASYNC_COPY)
_cls("LDG LD", InstrClass.GLOBAL_LOAD)
_cls("STG ST RED ATOM ATOMG", InstrClass.GLOBAL_STORE)
_cls("LDS LDSM", InstrClass.SHARED_LOAD)
_cls("STS ATOMS", InstrClass.SHARED_STORE)
_cls("BAR DEPBAR LDGDEPBAR MEMBAR ERRBAR", InstrClass.BARRIER)
_cls(
    "BRA BRX JMP JMX CALL CAL JCAL RET EXIT BSSY BSYNC BREAK KILL RTT BPT "
    "WARPSYNC YIELD NANOSLEEP",
    InstrClass.CONTROL_FLOW,
)
_cls(
    "MOV MOV32I UMOV SEL USEL SHFL "
    "IADD IADD3 UIADD3 IMAD UIMAD IMNMX IABS ISCADD ISET ISETP UISETP ICMP "
    "LEA ULEA LOP LOP3 ULOP3 PLOP3 UPLOP3 SHF USHF SHL SHR BFE BFI PRMT UPRMT "
    "POPC UPOPC FLO UFLO BREV BMSK SGXT "
    "FADD FMUL FFMA FSET FSETP FSEL FMNMX FCHK MUFU RRO "
    "DADD DMUL DFMA DSETP "
    "HADD2 HMUL2 HFMA2 HSET2 HSETP2 HMNMX2 "
    "HMMA IMMA BMMA DMMA "
    "I2I I2F F2I F2F I2IP F2FP FRND "
    "S2R S2UR CS2R R2UR UR2UP P2R R2P VOTE VOTEU PSETP CSMTEST "
    "LDC ULDC XMAD VIADD VABSDIFF VABSDIFF4 NOP",
    InstrClass.COMPUTE,
)


@lru_cache(maxsize=4096)
def classify(mnemonic: str) -> InstrClass:
    """Map a full dotted mnemonic to its instruction class (total function)."""
    base = mnemonic.split(".", 1)[0].upper()
    return _CLASS_TABLE.get(base, InstrClass.OTHER)


class ControlError(ValueError):
    """Raised for control-code fields outside their encodable range."""


@dataclass(frozen=True)
class ControlCode:
    """Scheduling side-band of one instruction.

    wait_mask     barriers this instruction blocks on before issue
    read_barrier  barrier signalled when source operands are consumed
    write_barrier barrier signalled when the result is ready
    yield_flag    scheduler yield hint; parsed and preserved, not simulated
    stall_cycles  issue-slot stall after this instruction (0..15)
    """

    wait_mask: frozenset[int] = frozenset()
    read_barrier: int | None = None
    write_barrier: int | None = None
    yield_flag: bool = False
    stall_cycles: int = 1

    def __post_init__(self) -> None:
        for b in self.wait_mask:
            if not 0 <= b < BARRIER_SLOTS:
                raise ControlError(f"wait barrier {b} out of range 0..{BARRIER_SLOTS - 1}")
        for name in ("read_barrier", "write_barrier"):
            b = getattr(self, name)
            if b is not None and not 0 <= b < BARRIER_SLOTS:
                raise ControlError(f"{name} {b} out of range 0..{BARRIER_SLOTS - 1}")
        if not 0 <= self.stall_cycles <= STALL_MAX:
            raise ControlError(f"stall count {self.stall_cycles} out of range 0..{STALL_MAX}")
        object.__setattr__(self, "wait_mask", frozenset(self.wait_mask))

    def to_text(self) -> str:
        """Render the bracketed five-field text as it appears in dumps."""
        wait = "".join(str(i) if i in self.wait_mask else "-" for i in range(BARRIER_SLOTS))
        rd = "-" if self.read_barrier is None else str(self.read_barrier)
        wr = "-" if self.write_barrier is None else str(self.write_barrier)
        yld = "Y" if self.yield_flag else "-"
        return f"[B{wait}:R{rd}:W{wr}:{yld}:S{self.stall_cycles:02d}]"


class OperandKind(Enum):
    REGISTER = "reg"        # R0..R255, RZ
    UREGISTER = "ureg"      # UR0.., URZ
    PREDICATE = "pred"      # P0..P6, PT, UP0.., UPT
    SPECIAL = "special"     # SR_TID.X, SR_LANEID, ...
    IMMEDIATE = "imm"       # 0x80, 42, -5
    CONSTANT = "const"      # c[0x0][0x160]
    MEMORY = "mem"          # [R2.64+0x10], [R219+UR4+0x4000]
    DESCRIPTOR = "desc"     # desc[UR16][R10.64]
    OPAQUE = "opaque"       # anything we could not parse; kept verbatim


@dataclass(frozen=True)
class Operand:
    """One operand, with enough structure for dependence and execution.

    text        exact source text (authoritative for serialization)
    reg         primary register identity ("R10", "UR16", "P0", ...)
    aux_regs    further register identities (extra address terms, descriptor)
    value       literal value for immediates
    offset      constant byte offset for memory references
    base_pair   memory base register carries a .64 tag (register pair)
    bank/addr   constant-bank coordinates for CONSTANT operands
    modifier    source modifier prefix: '-', '~', '!', or '|' (abs)
    """

    kind: OperandKind
    text: str
    reg: str | None = None
    aux_regs: tuple[str, ...] = ()
    value: int | float | None = None
    offset: int = 0
    base_pair: bool = False
    bank: int | None = None
    addr: int | None = None
    modifier: str = ""

    def registers(self) -> tuple[str, ...]:
        regs = []
        if self.reg is not None:
            regs.append(self.reg)
        regs.extend(self.aux_regs)
        return tuple(regs)


@dataclass(frozen=True)
class Instruction:
    """One schedule slot: mnemonic, operands, optional control code.

    source_text keeps the verbatim dump line (control block included) so a
    reordered schedule still serializes losslessly; it never participates in
    structural equality.
    """

    mnemonic: str
    operands: tuple[Operand, ...] = ()
    control: ControlCode | None = None
    predicate: str | None = None
    predicate_negated: bool = False
    source_text: str | None = field(default=None, compare=False)
    line_no: int | None = field(default=None, compare=False)

    @property
    def klass(self) -> InstrClass:
        return classify(self.mnemonic)

    @property
    def base_mnemonic(self) -> str:
        return self.mnemonic.split(".", 1)[0].upper()

    @property
    def modifiers(self) -> tuple[str, ...]:
        return tuple(self.mnemonic.split(".")[1:])


@dataclass(frozen=True)
class Kernel:
    """Parsed kernel: instruction schedule plus preserved interleaved lines.

    interleaved maps gap index g (0..len(schedule)) to the verbatim
    non-instruction lines sitting before schedule[g] (g == len(schedule)
    collects trailing lines).  block_boundaries holds cut positions p:
    a cut at p forbids exchanging schedule[p-1] and schedule[p]; cuts come
    from labels and from control-flow instructions.  Instances are treated
    as immutable; mutations build new kernels via with_schedule.
    """

    name: str
    schedule: tuple[Instruction, ...]
    interleaved: Mapping[int, tuple[str, ...]] = field(default_factory=dict)
    block_boundaries: tuple[int, ...] = ()
    trailing_newline: bool = True
    diagnostics: tuple = field(default=(), compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.schedule)

    def with_schedule(self, schedule: tuple[Instruction, ...]) -> "Kernel":
        if len(schedule) != len(self.schedule):
            raise ValueError("schedule length must be preserved")
        return replace(self, schedule=tuple(schedule))

    def block_of(self, pos: int) -> tuple[int, int]:
        """Return the [start, end) block interval containing schedule index pos."""
        start, end = 0, len(self.schedule)
        for cut in self.block_boundaries:
            if cut <= pos:
                start = max(start, cut)
            else:
                end = min(end, cut)
        return start, end
