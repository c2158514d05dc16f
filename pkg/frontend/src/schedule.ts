/**
 * schedule.ts - a minimal read-only view of schedule dump text.
 *
 * The adapter never parses operands or rewrites anything; it only needs
 * per-instruction scheduling metadata (wait mask, stall count) and the
 * opcode to drive the deterministic mock cost model.  The authoritative
 * parser lives on the tuner side of the protocol boundary.
 */

const CTRL = /^\s*\[B([0-5-]{6}):R([0-5-]):W([0-5-]):([Y-]):S(\d{2})\]\s*(.*)$/;

export interface ScheduleLine {
  /** barrier slots this instruction waits on before issuing */
  waits: number[];
  /** stall cycles encoded after issue */
  stall: number;
  /** opcode mnemonic with modifiers, e.g. "LDG.E" */
  opcode: string;
  /** position among instruction lines, 0-based */
  index: number;
}

/** Pull out every line that carries a control block; everything else
 * (blank lines, headers, comments) is ignored. */
export function readSchedule(text: string): ScheduleLine[] {
  const out: ScheduleLine[] = [];
  for (const raw of text.split("\n")) {
    const m = CTRL.exec(raw);
    if (!m) continue;
    const waits: number[] = [];
    for (const ch of m[1]) {
      if (ch !== "-") waits.push(Number(ch));
    }
    const body = m[6].replace(/^@!?U?P[0-9T]+\s+/, "");
    out.push({
      waits,
      stall: Number(m[5]),
      opcode: body.split(/[\s,;]/, 1)[0] ?? "",
      index: out.length,
    });
  }
  return out;
}
