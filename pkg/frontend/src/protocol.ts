/**
 * protocol.ts - the wire format between the tuner and measurement adapters.
 *
 * The tuner runs an adapter command once per repetition with the candidate
 * schedule's file path substituted into the command line.  It then scans
 * the adapter's stdout for exactly one line of the form
 *
 *     {"time_ms": <number>}
 *
 * where the number is a nonnegative decimal with optional fraction and
 * exponent (no sign, no NaN, no extra keys).  Every other stdout line is
 * ignored, so adapters may log freely as long as exactly one line matches.
 */

/** The tuner-side grammar, mirrored verbatim. Lines are trimmed first. */
export const TIME_LINE = /^\{"time_ms":\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*\}$/;

/** Render one protocol line for a measurement in milliseconds. */
export function formatTimeLine(timeMs: number): string {
  if (!Number.isFinite(timeMs) || timeMs < 0) {
    throw new RangeError(`time_ms must be finite and nonnegative, got ${timeMs}`);
  }
  const line = `{"time_ms": ${timeMs.toString()}}`;
  // Number.toString can only fall outside the grammar for the values
  // rejected above, but a self-check here is cheap insurance.
  if (!TIME_LINE.test(line)) {
    throw new RangeError(`unrepresentable time_ms: ${timeMs}`);
  }
  return line;
}

/**
 * Extract the measurement from captured adapter output, enforcing the
 * exactly-one-line rule the tuner applies.  Throws when zero or several
 * lines match.
 */
export function extractTime(stdout: string): number {
  const hits = stdout
    .split("\n")
    .map((line) => TIME_LINE.exec(line.trim()))
    .filter((m): m is RegExpExecArray => m !== null);
  if (hits.length !== 1) {
    throw new Error(`expected exactly one time line, found ${hits.length}`);
  }
  return Number(hits[0][1]);
}
