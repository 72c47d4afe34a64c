export { parseArtifactCsv } from "./csv.js";
export type { ArtifactCsv } from "./csv.js";
export {
  SUPPORTED, loadRunArtifacts, runDt,
} from "./artifacts.js";
export type {
  HierarchySummary, ManifestConfig, RunArtifacts, RunManifest,
} from "./artifacts.js";
export {
  gateWord, heading, jsonToken, lowerMedianToken, maxToken, mdTable,
} from "./markdown.js";
export { decayLines, forestPlot, logLogScatter } from "./svg.js";
export { render, renderReport } from "./render.js";
