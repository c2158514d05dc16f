/**
 * measure.ts - measurement strategies behind the adapter CLI.
 *
 * Real hardware timing (assemble the schedule back into a binary, launch,
 * read device timer events) is deliberately a pluggable step: wire your
 * own Measurer in.  What ships here are the two deterministic modes used
 * for integration testing, so no part of the toolchain ever needs a GPU:
 *
 *   constantMeasurer   - always reports the configured value
 *   stallModelMeasurer - a toy cost model derived from the schedule text,
 *                        so reordering actually changes the reported time
 */

import { readSchedule } from "./schedule.js";

/** Produces one timing sample, in milliseconds, for a schedule dump. */
export type Measurer = (scheduleText: string) => number;

export function constantMeasurer(timeMs: number): Measurer {
  if (!Number.isFinite(timeMs) || timeMs < 0) {
    throw new RangeError(`constant time must be finite and nonnegative, got ${timeMs}`);
  }
  return () => timeMs;
}

export interface StallModelOptions {
  /** cost added per barrier slot an instruction waits on */
  waitPenalty?: number;
  /** cost added per position index of each global load opcode; rewards
   * hoisting loads toward the top, which is the point of the exercise */
  loadWeight?: number;
}

export function stallModelMeasurer(options: StallModelOptions = {}): Measurer {
  const waitPenalty = options.waitPenalty ?? 40;
  const loadWeight = options.loadWeight ?? 1;
  return (text) => {
    let cost = 0;
    for (const line of readSchedule(text)) {
      cost += line.stall + waitPenalty * line.waits.length;
      if (line.opcode.startsWith("LDG")) {
        cost += loadWeight * line.index;
      }
    }
    return cost;
  };
}

export function median(samples: number[]): number {
  if (samples.length === 0) {
    throw new RangeError("median of zero samples");
  }
  const sorted = [...samples].sort((a, b) => a - b);
  const mid = sorted.length >> 1;
  return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

export interface MeasureOptions {
  /** timed iterations aggregated into the reported median; must be >= 1 */
  iters: number;
  /** discarded leading iterations */
  warmup: number;
}

/** Run warmup iterations, then timed ones, and report their median. */
export function measureSchedule(
  measurer: Measurer,
  scheduleText: string,
  options: MeasureOptions,
): number {
  if (options.iters < 1) {
    throw new RangeError(`iters must be >= 1, got ${options.iters}`);
  }
  if (options.warmup < 0) {
    throw new RangeError(`warmup must be >= 0, got ${options.warmup}`);
  }
  for (let i = 0; i < options.warmup; i++) {
    measurer(scheduleText);
  }
  const samples: number[] = [];
  for (let i = 0; i < options.iters; i++) {
    samples.push(measurer(scheduleText));
  }
  return median(samples);
}
