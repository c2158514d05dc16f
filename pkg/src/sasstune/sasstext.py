"""Lossless text form for SASS-style kernel dumps.

parse_kernel keeps every byte of the input: instruction lines are stored
verbatim on each Instruction, everything else lands in Kernel.interleaved.
serialize_kernel re-emits those lines, so parse -> serialize is the identity
on LF-normalized input and a mutated kernel differs only by line order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .ir import (
    BARRIER_SLOTS,
    STALL_MAX,
    ControlCode,
    Instruction,
    InstrClass,
    Kernel,
    Operand,
    OperandKind,
)

# Control block: B<6 wait slots>:R<d|->:W<d|->:<-|Y>:S<2 digits>
CTRL_RE = re.compile(
    r"^B(?P<wait>[0-5-]{6}):R(?P<rd>[0-5-]):W(?P<wr>[0-5-]):(?P<yld>[-Y]):S(?P<stall>\d{2})$"
)

INST_RE = re.compile(
    r"""^\s*
        (?:\[(?P<ctrl>[^\]]*)\]\s*)?                 # optional control block
        (?:@(?P<pneg>!)?(?P<pred>U?P(?:T|\d+))\s+)?  # optional guard predicate
        (?P<mn>[A-Za-z][A-Za-z0-9._]*)               # mnemonic
        (?P<ops>[^;]*)
        ;\s*$""",
    re.VERBOSE,
)

LABEL_RE = re.compile(r"^\s*\.?[A-Za-z_$][\w$.@]*:\s*(?://.*)?$")
BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)

REG_RE = re.compile(r"^R(?:Z|\d+)$")
UREG_RE = re.compile(r"^UR(?:Z|\d+)$")
PRED_RE = re.compile(r"^U?P(?:T|\d+)$")
CONST_RE = re.compile(r"^c\[(?P<bank>0x[0-9a-fA-F]+|\d+)\]\s*\[(?P<addr>0x[0-9a-fA-F]+|\d+)\]$")
DESC_RE = re.compile(r"^desc\[(?P<ur>UR\d+|URZ)\]\s*(?P<mem>\[.*\])$", re.IGNORECASE)
IMM_RE = re.compile(r"^[+-]?(?:0x[0-9a-fA-F]+|\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)$")
SPECIAL_RE = re.compile(r"^SR_[\w.]+$")


@dataclass(frozen=True)
class ParseDiagnostic:
    """One parser message, tied to a 1-based input line."""

    line: int
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message}"


class ParseError(ValueError):
    """Parse failed; carries every diagnostic collected before giving up."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(str(d) for d in diagnostics if d.severity == "error"))


def normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def parse_control(text: str) -> ControlCode:
    """Parse a control block, with or without the surrounding brackets."""
    inner = text.strip()
    if inner.startswith("[") and inner.endswith("]"):
        inner = inner[1:-1]
    m = CTRL_RE.match(inner)
    if not m:
        raise ValueError(f"malformed control block {text!r}")
    wait = set()
    for i, ch in enumerate(m.group("wait")):
        if ch == "-":
            continue
        if int(ch) != i:
            raise ValueError(f"wait slot {i} holds {ch!r}; expected {i} or '-'")
        wait.add(i)
    rd = None if m.group("rd") == "-" else int(m.group("rd"))
    wr = None if m.group("wr") == "-" else int(m.group("wr"))
    stall = int(m.group("stall"), 10)
    if stall > STALL_MAX:
        raise ValueError(f"stall count {stall} out of range 0..{STALL_MAX}")
    return ControlCode(
        wait_mask=frozenset(wait),
        read_barrier=rd,
        write_barrier=wr,
        yield_flag=m.group("yld") == "Y",
        stall_cycles=stall,
    )


def _split_operands(text: str) -> list[str]:
    """Split an operand list on top-level commas (brackets and braces nest)."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[{(":
            depth += 1
        elif ch in "]})":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def _parse_int(tok: str) -> int | float | None:
    tok = tok.strip()
    sign = 1
    if tok.startswith(("+", "-")):
        sign = -1 if tok[0] == "-" else 1
        tok = tok[1:]
    try:
        if tok.lower().startswith("0x"):
            return sign * int(tok, 16)
        if "." in tok or "e" in tok.lower():
            return sign * float(tok)
        return sign * int(tok, 10)
    except ValueError:
        return None


def _parse_mem_body(body: str) -> dict | None:
    """Decompose '[R2.64+UR4+0x10]' into base register, extra terms, offset."""
    inner = body.strip()
    if not (inner.startswith("[") and inner.endswith("]")):
        return None
    base: str | None = None
    base_pair = False
    aux: list[str] = []
    offset = 0
    terms = re.split(r"(?=[+-])", inner[1:-1].strip())
    for term in terms:
        term = term.strip()
        if not term:
            continue
        neg = term.startswith("-")
        tok = term.lstrip("+-").strip()
        if not tok:
            continue
        pair = False
        if tok.upper().endswith(".64"):
            pair = True
            tok = tok[:-3]
        elif tok.upper().endswith(".X4") or tok.upper().endswith(".X8") or tok.upper().endswith(".X16"):
            tok = tok.rsplit(".", 1)[0]  # index-scaling tags carry no extra register
        if REG_RE.match(tok):
            if base is None:
                base, base_pair = tok, pair
            else:
                aux.append(tok)
                if pair:
                    aux.append(_next_reg(tok))
            continue
        if UREG_RE.match(tok):
            aux.append(tok)
            if pair:
                aux.append(_next_reg(tok))
            continue
        val = _parse_int(tok)
        if val is None or isinstance(val, float):
            return None
        offset += -val if neg else val
    return {"base": base, "base_pair": base_pair, "aux": tuple(aux), "offset": offset}


def _next_reg(name: str) -> str:
    m = re.match(r"^(U?R)(\d+)$", name)
    if not m:
        return name
    return f"{m.group(1)}{int(m.group(2)) + 1}"


def parse_operand(text: str) -> Operand:
    """Parse one operand; unparseable text degrades to an OPAQUE operand."""
    raw = text.strip()
    tok = raw
    modifier = ""
    if tok and tok[0] in "-~!":
        modifier, tok = tok[0], tok[1:].strip()
    elif tok.startswith("|") and tok.endswith("|") and len(tok) > 2:
        modifier, tok = "|", tok[1:-1].strip()

    reuse_split = tok.split(".reuse")
    core = reuse_split[0].strip() if len(reuse_split) > 1 else tok

    if REG_RE.match(core):
        return Operand(OperandKind.REGISTER, raw, reg=core, modifier=modifier)
    if UREG_RE.match(core):
        return Operand(OperandKind.UREGISTER, raw, reg=core, modifier=modifier)
    if PRED_RE.match(core):
        return Operand(OperandKind.PREDICATE, raw, reg=core, modifier=modifier)
    if SPECIAL_RE.match(core):
        return Operand(OperandKind.SPECIAL, raw, reg=core, modifier=modifier)

    m = CONST_RE.match(core)
    if m:
        bank = _parse_int(m.group("bank"))
        addr = _parse_int(m.group("addr"))
        if isinstance(bank, int) and isinstance(addr, int):
            return Operand(OperandKind.CONSTANT, raw, bank=bank, addr=addr, modifier=modifier)

    m = DESC_RE.match(core)
    if m:
        mem = _parse_mem_body(m.group("mem"))
        if mem is not None:
            ur = m.group("ur")
            aux = list(mem["aux"])
            if not ur.upper().endswith("Z"):
                aux.extend([ur, _next_reg(ur)])  # descriptors are 64-bit UR pairs
            return Operand(
                OperandKind.DESCRIPTOR,
                raw,
                reg=mem["base"],
                aux_regs=tuple(aux),
                offset=mem["offset"],
                base_pair=mem["base_pair"],
                modifier=modifier,
            )

    if core.startswith("["):
        mem = _parse_mem_body(core)
        if mem is not None:
            return Operand(
                OperandKind.MEMORY,
                raw,
                reg=mem["base"],
                aux_regs=mem["aux"],
                offset=mem["offset"],
                base_pair=mem["base_pair"],
                modifier=modifier,
            )

    if IMM_RE.match(core):
        val = _parse_int(core)
        if val is not None:
            if modifier == "-" and isinstance(val, (int, float)):
                val, modifier = -val, ""
            return Operand(OperandKind.IMMEDIATE, raw, value=val, modifier=modifier)

    # Register with an operand-level tag we do not model, e.g. "R4.H1".
    head = core.split(".", 1)[0]
    if REG_RE.match(head) or UREG_RE.match(head):
        kind = OperandKind.REGISTER if REG_RE.match(head) else OperandKind.UREGISTER
        return Operand(kind, raw, reg=head, modifier=modifier)

    return Operand(OperandKind.OPAQUE, raw)


def _strip_comments(line: str) -> str:
    line = BLOCK_COMMENT_RE.sub(" ", line)
    cut = line.find("//")
    if cut >= 0:
        line = line[:cut]
    return line


def parse_kernel(text: str, name: str = "kernel") -> Kernel:
    """Parse a kernel dump.

    Raises ParseError when any line produces an error-severity diagnostic;
    warnings (e.g. opaque operands) ride on Kernel.diagnostics.
    """
    normalized = normalize_newlines(text)
    diags: list[ParseDiagnostic] = []
    schedule: list[Instruction] = []
    interleaved: dict[int, list[str]] = {}
    cuts: set[int] = set()

    def stash(raw_line: str) -> None:
        interleaved.setdefault(len(schedule), []).append(raw_line)

    for line_no, raw in enumerate(normalized.split("\n"), 1):
        stripped = _strip_comments(raw)
        if not stripped.strip():
            stash(raw)
            continue
        if LABEL_RE.match(stripped):
            stash(raw)
            cuts.add(len(schedule))
            continue
        m = INST_RE.match(stripped)
        if m:
            control = None
            if m.group("ctrl") is not None:
                try:
                    control = parse_control(m.group("ctrl"))
                except ValueError as exc:
                    diags.append(ParseDiagnostic(line_no, "error", str(exc)))
                    continue
            operands = []
            for op_text in _split_operands(m.group("ops")):
                op = parse_operand(op_text)
                if op.kind is OperandKind.OPAQUE:
                    diags.append(
                        ParseDiagnostic(line_no, "warning", f"opaque operand {op_text!r}")
                    )
                operands.append(op)
            ins = Instruction(
                mnemonic=m.group("mn"),
                operands=tuple(operands),
                control=control,
                predicate=m.group("pred"),
                predicate_negated=m.group("pneg") == "!",
                source_text=raw,
                line_no=line_no,
            )
            if ins.klass is InstrClass.CONTROL_FLOW:
                cuts.add(len(schedule))
                cuts.add(len(schedule) + 1)
            schedule.append(ins)
            continue
        if stripped.strip().startswith("."):
            stash(raw)  # assembler directive
            continue
        if ";" in stripped:
            diags.append(
                ParseDiagnostic(line_no, "error", f"unrecognized instruction line {raw.strip()!r}")
            )
            continue
        stash(raw)  # free-form header text

    if any(d.severity == "error" for d in diags):
        raise ParseError(diags)

    trailing_nl = normalized.endswith("\n")
    if trailing_nl:
        # split("\n") turns the final newline into one empty trailing entry;
        # drop it so serialization does not double the newline.
        tail = interleaved.get(len(schedule))
        if tail and tail[-1] == "":
            tail.pop()
            if not tail:
                del interleaved[len(schedule)]

    return Kernel(
        name=name,
        schedule=tuple(schedule),
        interleaved={g: tuple(lines) for g, lines in interleaved.items()},
        block_boundaries=tuple(sorted(c for c in cuts if 0 < c < len(schedule))),
        trailing_newline=trailing_nl,
        diagnostics=tuple(diags),
    )


def render_instruction(ins: Instruction) -> str:
    """Canonical rendering for instructions built in code (no source line)."""
    parts = []
    if ins.control is not None:
        parts.append(ins.control.to_text())
    if ins.predicate:
        parts.append(f"@{'!' if ins.predicate_negated else ''}{ins.predicate}")
    head = ins.mnemonic
    if ins.operands:
        head += " " + ", ".join(op.text for op in ins.operands)
    parts.append(head)
    return " ".join(parts) + " ;"


def serialize_kernel(kernel: Kernel) -> str:
    """Emit the kernel as text; inverse of parse_kernel up to LF normalization."""
    lines: list[str] = []
    for gap in range(len(kernel.schedule) + 1):
        lines.extend(kernel.interleaved.get(gap, ()))
        if gap < len(kernel.schedule):
            ins = kernel.schedule[gap]
            lines.append(ins.source_text if ins.source_text is not None else render_instruction(ins))
    text = "\n".join(lines)
    if kernel.trailing_newline:
        text += "\n"
    return text
