#!/usr/bin/env node
/**
 * cli.ts - the adapter executable.
 *
 *   sasstune-adapter measure <schedule.sass> [--time-ms X | --model stalls]
 *                    [--iters N] [--warmup N] [--wait-penalty N] [--load-weight N]
 *   sasstune-adapter best <store-dir> <kernel.sass> [--print text|path|time]
 *
 * `measure` prints exactly one protocol line on stdout and logs to stderr,
 * so it can be handed to the tuner as
 *
 *     --backend "external:sasstune-adapter measure {schedule_file} --model stalls"
 *
 * `best` retrieves the tuned schedule recorded for a kernel dump.
 * Exit codes: 0 ok, 1 lookup miss or measurement failure, 2 usage.
 */

import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { formatTimeLine } from "./protocol.js";
import {
  constantMeasurer,
  measureSchedule,
  stallModelMeasurer,
  type Measurer,
} from "./measure.js";
import { bestSchedule } from "./store.js";

function usage(message: string): never {
  process.stderr.write(`${message}\n`);
  process.exit(2);
}

function cmdMeasure(argv: string[]): number {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      "time-ms": { type: "string" },
      model: { type: "string" },
      iters: { type: "string", default: "1" },
      warmup: { type: "string", default: "0" },
      "wait-penalty": { type: "string" },
      "load-weight": { type: "string" },
    },
  });
  if (positionals.length !== 1) {
    usage("measure: expected exactly one schedule file");
  }
  if (values["time-ms"] !== undefined && values.model !== undefined) {
    usage("measure: --time-ms and --model are mutually exclusive");
  }

  let measurer: Measurer;
  if (values["time-ms"] !== undefined) {
    measurer = constantMeasurer(Number(values["time-ms"]));
  } else if (values.model === "stalls" || values.model === undefined) {
    measurer = stallModelMeasurer({
      waitPenalty: values["wait-penalty"] === undefined ? undefined : Number(values["wait-penalty"]),
      loadWeight: values["load-weight"] === undefined ? undefined : Number(values["load-weight"]),
    });
  } else {
    usage(`measure: unknown model ${JSON.stringify(values.model)} (want "stalls")`);
  }

  const text = readFileSync(positionals[0], "utf8");
  const iters = Number(values.iters);
  const warmup = Number(values.warmup);
  const timeMs = measureSchedule(measurer, text, { iters, warmup });
  process.stderr.write(`measured ${positionals[0]} over ${iters} iteration(s)\n`);
  process.stdout.write(formatTimeLine(timeMs) + "\n");
  return 0;
}

function cmdBest(argv: string[]): number {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      print: { type: "string", default: "text" },
    },
  });
  if (positionals.length !== 2) {
    usage("best: expected <store-dir> <kernel.sass>");
  }
  const [storeRoot, kernelPath] = positionals;
  const found = bestSchedule(storeRoot, readFileSync(kernelPath, "utf8"));
  if (found === null) {
    process.stderr.write(`no tuned schedule stored for ${kernelPath}\n`);
    return 1;
  }
  switch (values.print) {
    case "text":
      process.stdout.write(found.text);
      break;
    case "path":
      process.stdout.write(found.path + "\n");
      break;
    case "time":
      process.stdout.write(`${found.time} ${found.unit} (seed ${found.seed})\n`);
      break;
    default:
      usage(`best: unknown --print mode ${JSON.stringify(values.print)}`);
  }
  return 0;
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "measure":
        return cmdMeasure(rest);
      case "best":
        return cmdBest(rest);
      default:
        usage("usage: sasstune-adapter <measure|best> ...");
    }
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    const code = (err as NodeJS.ErrnoException).code ?? "";
    return code.startsWith("ERR_PARSE_ARGS") ? 2 : 1;
  }
}

process.exit(main(process.argv.slice(2)));
