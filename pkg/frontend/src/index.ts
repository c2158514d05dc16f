export { TIME_LINE, formatTimeLine, extractTime } from "./protocol.js";
export { readSchedule, type ScheduleLine } from "./schedule.js";
export {
  constantMeasurer,
  stallModelMeasurer,
  measureSchedule,
  median,
  type Measurer,
  type MeasureOptions,
  type StallModelOptions,
} from "./measure.js";
export {
  inputHash,
  normalizeNewlines,
  runDir,
  loadManifest,
  bestSchedule,
  type Manifest,
  type ManifestEntry,
  type BestCandidate,
} from "./store.js";
