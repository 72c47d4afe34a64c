#!/usr/bin/env node
/** report <run_dir...> --out <dir> */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { render } from "./render.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: { out: { type: "string" } },
    });
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 2;
  }
  const dirs = parsed.positionals;
  const out = parsed.values.out;
  if (dirs.length === 0 || !out) {
    process.stderr.write("usage: mvlab-report <run_dir...> --out <dir>\n");
    return 2;
  }
  try {
    const names = render(dirs, out);
    process.stdout.write(`wrote ${names.join(", ")} to ${out}\n`);
    return 0;
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? "").href) {
  process.exitCode = main(process.argv.slice(2));
}
