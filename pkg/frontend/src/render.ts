/**
 * Report composition.  Input: one or more run directories produced by the
 * simulation CLI.  Output: report.md plus SVG figures in the chosen
 * directory.  Rendering is read-only over the inputs and deterministic, so
 * re-rendering an unchanged run is byte-identical.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";

import { RunArtifacts, loadRunArtifacts, runDt } from "./artifacts.js";
import {
  gateWord, heading, jsonToken, lowerMedianToken, maxToken, mdTable,
} from "./markdown.js";
import { ForestRow, LogPoint, Series, decayLines, forestPlot, logLogScatter } from "./svg.js";

function cell(row: Record<string, string>, col: string): string {
  const v = row[col];
  if (v === undefined) throw new Error(`missing column ${col}`);
  return v;
}

function runLabel(i: number): string {
  return `run${i}`;
}

function overviewSection(runs: RunArtifacts[]): string {
  const rows = runs.map((run, i) => {
    const sim = run.manifest.config.sim;
    return [
      runLabel(i),
      basename(run.dir),
      run.manifest.config.scenario.name,
      String(sim.n_particles),
      String(sim.n_steps),
      jsonToken(run.manifestRaw, ["config", "sim", "horizon"]),
      String(run.manifest.config.ensemble.n_members),
      String(run.manifest.config.seed),
      gateWord(run.hierarchy.passed),
    ];
  });
  return heading(2, "Runs") + "\n" + mdTable(
    ["run", "directory", "scenario", "N", "steps", "horizon", "members",
     "seed", "passed"], rows);
}

function gatesSection(runs: RunArtifacts[]): string {
  const names = [...new Set(runs.flatMap(
    r => Object.keys(r.hierarchy.summary.gates)))].sort();
  const rows = names.map(name => [
    name,
    ...runs.map(r => {
      const v = r.hierarchy.summary.gates[name];
      return v === undefined ? "n/a" : gateWord(v);
    }),
  ]);
  rows.push(["martingale pass rate", ...runs.map(r => {
    const tok = jsonToken(r.hierarchyRaw, ["summary", "martingale", "pass_rate"]);
    return tok === "null" ? "n/a" : tok;
  })]);
  rows.push(["qv max relative gap", ...runs.map(r =>
    r.hierarchy.qv === null
      ? "n/a" : jsonToken(r.hierarchyRaw, ["qv", "max_relative_gap"]))]);
  return heading(2, "Hierarchy gates") + "\n" + mdTable(
    ["gate", ...runs.map((_, i) => runLabel(i))], rows);
}

function kindsOf(rows: Record<string, string>[]): string[] {
  return [...new Set(rows.map(r => cell(r, "kind")))].sort();
}

function residualSection(runs: RunArtifacts[]): string {
  const rows: string[][] = [];
  runs.forEach((run, i) => {
    for (const kind of kindsOf(run.residuals.rows)) {
      const toks = run.residuals.rows
        .filter(r => cell(r, "kind") === kind)
        .map(r => cell(r, "normalized"));
      rows.push([runLabel(i), kind, String(toks.length),
                 lowerMedianToken(toks), maxToken(toks)]);
    }
  });
  return heading(2, "Residual summary") + "\n" + mdTable(
    ["run", "kind", "count", "median (lower)", "max"], rows);
}

function worstResidualSection(runs: RunArtifacts[]): string {
  const rows: string[][] = [];
  runs.forEach((run, i) => {
    const sorted = [...run.residuals.rows].sort((a, b) => {
      const d = parseFloat(cell(b, "normalized")) - parseFloat(cell(a, "normalized"));
      return d !== 0 ? d : cell(a, "test_id").localeCompare(cell(b, "test_id"));
    });
    for (const r of sorted.slice(0, 3)) {
      rows.push([runLabel(i), cell(r, "test_id"), cell(r, "kind"),
                 cell(r, "normalized")]);
    }
  });
  return heading(2, "Largest normalized residuals") + "\n" + mdTable(
    ["run", "test_id", "kind", "normalized"], rows);
}

function martingaleSection(run: RunArtifacts, i: number,
                           files: Map<string, string>): string {
  const rows = run.martingale.rows;
  let body = heading(3, `Martingale checks, ${runLabel(i)}`) + "\n";
  if (rows.length === 0) {
    return body + "No martingale configurations in this run.\n";
  }
  const passed = rows.filter(r => cell(r, "passes") === "1").length;
  body += `${passed} of ${rows.length} configurations within 3 standard errors.\n\n`;
  const failing = rows.filter(r => cell(r, "passes") !== "1");
  if (failing.length > 0) {
    body += mdTable(["test_id", "estimate", "stderr"],
      failing.map(r => [cell(r, "test_id"), cell(r, "estimate"),
                        cell(r, "stderr")])) + "\n";
  }
  const forest: ForestRow[] = rows.slice(0, 24).map(r => {
    const est = parseFloat(cell(r, "estimate"));
    const sd = parseFloat(cell(r, "stderr"));
    return {
      label: cell(r, "test_id"),
      estimate: est,
      lo: est - 3 * sd,
      hi: est + 3 * sd,
      passes: cell(r, "passes") === "1",
    };
  });
  const name = `${runLabel(i)}_martingale.svg`;
  files.set(name, forestPlot(forest,
    `martingale estimates +/- 3 stderr (${runLabel(i)})`));
  body += `![martingale forest ${runLabel(i)}](${name})\n`;
  return body;
}

function metricsSection(run: RunArtifacts, i: number,
                        files: Map<string, string>): string {
  const rows = run.metrics.rows;
  const series: Series[] = kindsOf(rows).map(kind => ({
    kind,
    points: rows
      .filter(r => cell(r, "kind") === kind)
      .map(r => ({ t: parseFloat(cell(r, "t")), v: parseFloat(cell(r, "value")) }))
      .sort((a, b) => a.t - b.t),
  }));
  const table = kindsOf(rows).map(kind => {
    const ordered = rows
      .filter(r => cell(r, "kind") === kind)
      .sort((a, b) => parseFloat(cell(a, "t")) - parseFloat(cell(b, "t")));
    const first = ordered[0] as Record<string, string>;
    const last = ordered[ordered.length - 1] as Record<string, string>;
    return [kind, cell(first, "value"), cell(last, "value")];
  });
  const name = `${runLabel(i)}_metrics.svg`;
  files.set(name, decayLines(series, `distance to final time (${runLabel(i)})`));
  let body = heading(3, `Metric decay, ${runLabel(i)}`) + "\n";
  body += mdTable(["kind", "initial", "final"], table) + "\n";
  body += `![metric decay ${runLabel(i)}](${name})\n`;
  return body;
}

function kfpMedianToken(run: RunArtifacts): string {
  const toks = run.residuals.rows
    .filter(r => cell(r, "kind") === "kfp")
    .map(r => cell(r, "normalized"));
  return lowerMedianToken(toks);
}

function refinementSection(runs: RunArtifacts[],
                           files: Map<string, string>): string {
  const withKfp = runs.filter(
    r => r.residuals.rows.some(row => cell(row, "kind") === "kfp"));
  let body = heading(2, "Residual refinement") + "\n";
  if (withKfp.length === 0) {
    return body + "No weak-form residual rows found.\n";
  }
  const rows = withKfp.map(run => [
    runLabel(runs.indexOf(run)),
    String(run.manifest.config.sim.n_particles),
    String(run.manifest.config.sim.n_steps),
    kfpMedianToken(run),
  ]);
  body += mdTable(["run", "N", "steps", "median kfp residual (lower)"], rows)
    + "\n";
  const points: LogPoint[] = withKfp
    .map(run => ({
      x: run.manifest.config.sim.n_particles,
      y: parseFloat(kfpMedianToken(run)),
      label: `N=${run.manifest.config.sim.n_particles}, dt=${runDt(run).toExponential(1)}`,
    }))
    .sort((a, b) => a.x - b.x);
  files.set("refinement.svg", logLogScatter(points, "n_particles",
    "median normalized residual", "weak-form residual refinement"));
  body += "![residual refinement](refinement.svg)\n";
  return body;
}

/** Build every output file in memory; keys are file names under out dir. */
export function renderReport(runs: RunArtifacts[]): Map<string, string> {
  if (runs.length === 0) {
    throw new Error("renderReport: no runs given");
  }
  const files = new Map<string, string>();
  const parts: string[] = [heading(1, "Random-measure hierarchy report"), ""];
  parts.push(overviewSection(runs), "");
  parts.push(gatesSection(runs), "");
  parts.push(residualSection(runs), "");
  parts.push(worstResidualSection(runs), "");
  parts.push(heading(2, "Martingale checks"), "");
  runs.forEach((run, i) => parts.push(martingaleSection(run, i, files), ""));
  parts.push(heading(2, "Metric decay"), "");
  runs.forEach((run, i) => parts.push(metricsSection(run, i, files), ""));
  parts.push(refinementSection(runs, files));
  files.set("report.md", parts.join("\n"));
  return files;
}

/** Load runs, render, and write report.md plus figures into outDir. */
export function render(runDirs: string[], outDir: string): string[] {
  const runs = runDirs.map(loadRunArtifacts);
  const files = renderReport(runs);
  mkdirSync(outDir, { recursive: true });
  const names = [...files.keys()].sort();
  for (const name of names) {
    writeFileSync(join(outDir, name), files.get(name) as string, "utf-8");
  }
  return names;
}
