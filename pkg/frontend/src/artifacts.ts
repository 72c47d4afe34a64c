import { readFileSync } from "node:fs";
import { join } from "node:path";

import { ArtifactCsv, parseArtifactCsv } from "./csv.js";

/** Schema versions this renderer understands. */
export const SUPPORTED = {
  "run_manifest.json": "manifest-v1",
  "residuals.csv": "residuals-v1",
  "martingale.csv": "martingale-v1",
  "metrics.csv": "metrics-v1",
  "hierarchy_summary.json": "hierarchy-v1",
} as const;

export interface ManifestConfig {
  scenario: { name: string; params: Record<string, number> };
  sim: { n_particles: number; horizon: number; n_steps: number };
  ensemble: { n_members: number };
  seed: number;
}

export interface RunManifest {
  schema: string;
  config: ManifestConfig;
  config_hash: string;
  artifacts: Record<string, string>;
}

export interface HierarchySummary {
  schema: string;
  config_hash: string;
  passed: boolean;
  qv: {
    count: number; max_relative_gap: number; rel_max: number; ok: boolean;
  } | null;
  summary: {
    n_members: number;
    n_nodes: number;
    exact_identities: boolean;
    kfp_residuals: Record<string, number>;
    rm_residuals: Record<string, number>;
    martingale: { count: number; pass_rate: number | null; rate_min: number };
    integrability: Record<string, number>;
    rm_vs_kfp_factor: number;
    gates: Record<string, boolean | null>;
    passed: boolean;
  };
}

export interface RunArtifacts {
  dir: string;
  manifest: RunManifest;
  /* raw JSON texts kept so reports can quote numeric tokens verbatim */
  manifestRaw: string;
  residuals: ArtifactCsv;
  martingale: ArtifactCsv;
  metrics: ArtifactCsv;
  hierarchy: HierarchySummary;
  hierarchyRaw: string;
}

function checkSchema(file: string, got: unknown, want: string): void {
  if (got !== want) {
    throw new Error(
      `${file}: unsupported schema ${JSON.stringify(got)}, expected "${want}"`);
  }
}

function readText(dir: string, name: string): string {
  try {
    return readFileSync(join(dir, name), "utf-8");
  } catch (e) {
    throw new Error(`${dir}: missing artifact ${name} (${(e as Error).message})`);
  }
}

function loadCsv(dir: string, name: keyof typeof SUPPORTED): ArtifactCsv {
  const parsed = parseArtifactCsv(readText(dir, name), name);
  checkSchema(name, parsed.schema, SUPPORTED[name]);
  return parsed;
}

export function loadRunArtifacts(dir: string): RunArtifacts {
  const manifestRaw = readText(dir, "run_manifest.json");
  const manifest = JSON.parse(manifestRaw) as RunManifest;
  checkSchema("run_manifest.json", manifest.schema, SUPPORTED["run_manifest.json"]);
  const hierarchyRaw = readText(dir, "hierarchy_summary.json");
  const hierarchy = JSON.parse(hierarchyRaw) as HierarchySummary;
  checkSchema("hierarchy_summary.json", hierarchy.schema,
    SUPPORTED["hierarchy_summary.json"]);
  return {
    dir,
    manifest,
    manifestRaw,
    residuals: loadCsv(dir, "residuals.csv"),
    martingale: loadCsv(dir, "martingale.csv"),
    metrics: loadCsv(dir, "metrics.csv"),
    hierarchy,
    hierarchyRaw,
  };
}

/** Time step of the run, from the resolved config. */
export function runDt(run: RunArtifacts): number {
  const sim = run.manifest.config.sim;
  return sim.horizon / sim.n_steps;
}
