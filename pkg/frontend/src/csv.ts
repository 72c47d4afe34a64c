/** Artifact CSVs: a `# schema=<name>` comment line, a header row, data rows.
 *
 * Cell values stay strings end to end. Reports must reproduce the file's
 * numbers to all printed digits, so nothing here round-trips through float
 * formatting; geometry code parses on its own where it needs coordinates.
 */

export interface ArtifactCsv {
  schema: string;
  header: string[];
  rows: Record<string, string>[];
}

export function parseCsvBody(text: string): string[][] {
  const out: string[][] = [];
  let row: string[] = [];
  let cur = "";
  let inQuotes = false;
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') { cur += '"'; i++; }
        else inQuotes = false;
      } else cur += ch;
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      row.push(cur); cur = "";
    } else if (ch === "\n" || ch === "\r") {
      if (ch === "\r" && text[i + 1] === "\n") i++;
      row.push(cur); cur = ""; out.push(row); row = [];
    } else {
      cur += ch;
    }
  }
  if (cur.length > 0 || row.length > 0) { row.push(cur); out.push(row); }
  return out.filter(r => !(r.length === 1 && r[0] === ""));
}

export function parseArtifactCsv(text: string, file: string): ArtifactCsv {
  const nl = text.indexOf("\n");
  const first = nl < 0 ? text : text.slice(0, nl);
  const m = first.match(/^# schema=(\S+)\s*$/);
  if (!m || m[1] === undefined) {
    throw new Error(`${file}: missing "# schema=..." comment on line 1`);
  }
  const cells = parseCsvBody(nl < 0 ? "" : text.slice(nl + 1));
  const header = cells[0];
  if (!header) throw new Error(`${file}: missing header row`);
  const rows = cells.slice(1).map((r, i) => {
    if (r.length !== header.length) {
      throw new Error(`${file}: row ${i + 1} has ${r.length} cells, `
        + `header has ${header.length}`);
    }
    const rec: Record<string, string> = {};
    header.forEach((name, j) => { rec[name] = r[j] as string; });
    return rec;
  });
  return { schema: m[1], header, rows };
}
