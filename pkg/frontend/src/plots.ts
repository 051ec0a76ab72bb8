#!/usr/bin/env node
/**
 * Batch figure CLI: `node dist/plots.js --job <json>` renders every figure
 * listed in the job file. Exit codes: 0 on success, 2 for job or input
 * schema problems, 3 for unexpected runtime failures.
 */

import { parseArgs } from "node:util";
import { SchemaError } from "./csv.js";
import { JobError, runJob } from "./plot.js";

export function main(argv: string[]): number {
  let jobPath: string | undefined;
  try {
    const { values } = parseArgs({
      args: argv,
      options: { job: { type: "string" } },
      allowPositionals: false,
    });
    jobPath = values.job;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  if (jobPath === undefined) {
    process.stderr.write("usage: plots --job <json>\n");
    return 2;
  }
  try {
    for (const out of runJob(jobPath)) {
      process.stdout.write(`wrote ${out}\n`);
    }
    return 0;
  } catch (err) {
    if (err instanceof JobError || err instanceof SchemaError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    process.stderr.write(`error: ${err instanceof Error ? (err.stack ?? err.message) : err}\n`);
    return 3;
  }
}

process.exitCode = main(process.argv.slice(2));
