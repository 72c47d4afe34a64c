/**
 * Markdown building blocks with a strict fidelity rule: numeric cells are
 * passed through as the exact strings found in the source artifacts.  No
 * float is ever parsed and re-rendered for display, so every printed digit
 * can be grepped back to a CSV cell or a JSON token.
 */

function escapeCell(s: string): string {
  return s.replace(/\|/g, "\\|");
}

export function mdTable(header: string[], rows: string[][]): string {
  const head = `| ${header.map(escapeCell).join(" | ")} |`;
  const rule = `|${header.map(() => " --- ").join("|")}|`;
  const body = rows.map(r => `| ${r.map(escapeCell).join(" | ")} |`);
  return [head, rule, ...body].join("\n") + "\n";
}

export function heading(level: number, text: string): string {
  return `${"#".repeat(level)} ${text}\n`;
}

/**
 * Lower median: the element at rank floor((n-1)/2) under numeric order.
 * Unlike the midpoint-averaged median this is always one of the inputs,
 * so the returned string stays a verbatim source token.
 */
export function lowerMedianToken(tokens: string[]): string {
  if (tokens.length === 0) {
    throw new Error("lowerMedianToken: empty input");
  }
  const sorted = [...tokens].sort((a, b) => parseFloat(a) - parseFloat(b));
  return sorted[Math.floor((sorted.length - 1) / 2)] as string;
}

export function maxToken(tokens: string[]): string {
  if (tokens.length === 0) {
    throw new Error("maxToken: empty input");
  }
  let best = tokens[0] as string;
  for (const t of tokens) {
    if (parseFloat(t) > parseFloat(best)) best = t;
  }
  return best;
}

/**
 * Verbatim scalar token at a key path in a raw JSON text.  Each path step
 * narrows to the first occurrence of the quoted key, which is unambiguous
 * for the artifact documents (sorted keys, two-space indentation).
 */
export function jsonToken(raw: string, path: string[]): string {
  let s = raw;
  for (const key of path.slice(0, -1)) {
    const i = s.indexOf(`"${key}"`);
    if (i < 0) throw new Error(`jsonToken: missing key ${key}`);
    s = s.slice(i);
  }
  const last = path[path.length - 1];
  const m = new RegExp(
    `"${last}"\\s*:\\s*(-?[0-9][0-9eE+.\\-]*|null|true|false)`).exec(s);
  if (!m) throw new Error(`jsonToken: no scalar at ${path.join(".")}`);
  return m[1] as string;
}

/** Render a tri-state gate value for humans; not a fidelity-bearing cell. */
export function gateWord(v: boolean | null): string {
  if (v === null) return "n/a";
  return v ? "pass" : "FAIL";
}
