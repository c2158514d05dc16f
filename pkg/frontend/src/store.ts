/**
 * store.ts - read side of the tuner's result store.
 *
 * The tuner records every search under <store>/<hash16>/ keyed by the
 * SHA-256 of the newline-normalized input dump, with a manifest.json
 * whose "best" pointer names the fastest candidate that passed its
 * equivalence tests.  Deployment is then a pure file lookup: hash the
 * kernel you are about to launch, read back the tuned schedule.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { join } from "node:path";

export function normalizeNewlines(text: string): string {
  return text.replace(/\r\n/g, "\n").replace(/\r/g, "\n");
}

/** Hex SHA-256 of the normalized dump; identical to the tuner's hashing. */
export function inputHash(text: string): string {
  return createHash("sha256").update(normalizeNewlines(text), "utf8").digest("hex");
}

export interface ManifestEntry {
  seed: number;
  time: number | null;
  passed: boolean;
  [extra: string]: unknown;
}

export interface Manifest {
  input_sha256: string;
  unit: string;
  baseline: number;
  entries: ManifestEntry[];
  best: { seed: number; time: number; path: string } | null;
}

export function runDir(storeRoot: string, digest: string): string {
  return join(storeRoot, digest.slice(0, 16));
}

export function loadManifest(storeRoot: string, digest: string): Manifest | null {
  try {
    const raw = readFileSync(join(runDir(storeRoot, digest), "manifest.json"), "utf8");
    return JSON.parse(raw) as Manifest;
  } catch (err) {
    if ((err as NodeJS.ErrnoException).code === "ENOENT") return null;
    throw err;
  }
}

export interface BestCandidate {
  seed: number;
  time: number;
  unit: string;
  /** absolute path of the stored schedule */
  path: string;
  /** the schedule text itself */
  text: string;
}

/** Look up the tuned schedule for a kernel dump, or null when the store
 * holds no passing candidate for it. */
export function bestSchedule(storeRoot: string, kernelText: string): BestCandidate | null {
  const digest = inputHash(kernelText);
  const manifest = loadManifest(storeRoot, digest);
  if (manifest === null || manifest.best === null) return null;
  const path = join(runDir(storeRoot, digest), manifest.best.path);
  return {
    seed: manifest.best.seed,
    time: manifest.best.time,
    unit: manifest.unit,
    path,
    text: readFileSync(path, "utf8"),
  };
}
