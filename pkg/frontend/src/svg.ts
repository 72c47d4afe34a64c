/** Hand-rolled SVG: deterministic output, fixed-precision coordinates. */

const FONT = `font-family="monospace" font-size="11"`;

function fmt(v: number): string {
  return v.toFixed(2);
}

export interface LogPoint {
  x: number;
  y: number;
  label: string;
}

/** Log-log scatter with decade gridlines; zeros are clamped to the floor. */
export function logLogScatter(points: LogPoint[], xLabel: string,
                              yLabel: string, title: string): string {
  const w = 460, h = 300, m = { l: 64, r: 16, t: 28, b: 40 };
  const floor = 1e-17;
  const xs = points.map(p => Math.log10(Math.max(p.x, floor)));
  const ys = points.map(p => Math.log10(Math.max(p.y, floor)));
  const pad = (lo: number, hi: number): [number, number] =>
    lo === hi ? [lo - 1, hi + 1] : [Math.floor(lo), Math.ceil(hi)];
  const [x0, x1] = pad(Math.min(...xs), Math.max(...xs));
  const [y0, y1] = pad(Math.min(...ys), Math.max(...ys));
  const px = (lx: number) => m.l + (lx - x0) / (x1 - x0) * (w - m.l - m.r);
  const py = (ly: number) => h - m.b - (ly - y0) / (y1 - y0) * (h - m.t - m.b);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">`);
  parts.push(`<rect width="${w}" height="${h}" fill="white"/>`);
  parts.push(`<text x="${fmt(w / 2)}" y="16" text-anchor="middle" ${FONT}>${title}</text>`);
  for (let d = Math.ceil(x0); d <= Math.floor(x1); d++) {
    const x = fmt(px(d));
    parts.push(`<line x1="${x}" y1="${m.t}" x2="${x}" y2="${h - m.b}" stroke="#ddd"/>`);
    parts.push(`<text x="${x}" y="${h - m.b + 14}" text-anchor="middle" ${FONT}>1e${d}</text>`);
  }
  for (let d = Math.ceil(y0); d <= Math.floor(y1); d++) {
    const y = fmt(py(d));
    parts.push(`<line x1="${m.l}" y1="${y}" x2="${w - m.r}" y2="${y}" stroke="#ddd"/>`);
    parts.push(`<text x="${m.l - 6}" y="${y}" text-anchor="end" dominant-baseline="middle" ${FONT}>1e${d}</text>`);
  }
  parts.push(`<rect x="${m.l}" y="${m.t}" width="${w - m.l - m.r}" height="${h - m.t - m.b}" fill="none" stroke="#444"/>`);
  parts.push(`<text x="${fmt(w / 2)}" y="${h - 8}" text-anchor="middle" ${FONT}>${xLabel}</text>`);
  parts.push(`<text x="14" y="${fmt(h / 2)}" text-anchor="middle" ${FONT} transform="rotate(-90 14 ${fmt(h / 2)})">${yLabel}</text>`);
  const line = points
    .map((_, i) => `${fmt(px(xs[i] as number))},${fmt(py(ys[i] as number))}`)
    .join(" ");
  if (points.length > 1) {
    parts.push(`<polyline points="${line}" fill="none" stroke="#1f77b4"/>`);
  }
  points.forEach((p, i) => {
    const cx = fmt(px(xs[i] as number)), cy = fmt(py(ys[i] as number));
    parts.push(`<circle cx="${cx}" cy="${cy}" r="4" fill="#1f77b4"/>`);
    parts.push(`<text x="${cx}" y="${fmt(parseFloat(cy) - 8)}" text-anchor="middle" ${FONT}>${p.label}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export interface ForestRow {
  label: string;
  estimate: number;
  lo: number;
  hi: number;
  passes: boolean;
}

/** One horizontal estimate +/- band per row with a zero reference line. */
export function forestPlot(rows: ForestRow[], title: string): string {
  const w = 560, m = { l: 210, r: 16, t: 28, b: 24 };
  const rowH = 16;
  const h = m.t + m.b + rowH * Math.max(rows.length, 1);
  const span = Math.max(1e-300, ...rows.map(r => Math.max(Math.abs(r.lo), Math.abs(r.hi))));
  const px = (v: number) => m.l + (v / span + 1) / 2 * (w - m.l - m.r);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">`);
  parts.push(`<rect width="${w}" height="${h}" fill="white"/>`);
  parts.push(`<text x="${fmt(w / 2)}" y="16" text-anchor="middle" ${FONT}>${title}</text>`);
  const zx = fmt(px(0));
  parts.push(`<line x1="${zx}" y1="${m.t}" x2="${zx}" y2="${h - m.b}" stroke="#888" stroke-dasharray="4 3"/>`);
  rows.forEach((r, i) => {
    const y = fmt(m.t + rowH * (i + 0.5));
    const color = r.passes ? "#2ca02c" : "#d62728";
    parts.push(`<text x="${m.l - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ${FONT}>${r.label}</text>`);
    parts.push(`<line x1="${fmt(px(r.lo))}" y1="${y}" x2="${fmt(px(r.hi))}" y2="${y}" stroke="${color}"/>`);
    parts.push(`<circle cx="${fmt(px(r.estimate))}" cy="${y}" r="3" fill="${color}"/>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export interface Series {
  kind: string;
  points: { t: number; v: number }[];
}

const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

/** Metric decay curves on linear axes with a small legend. */
export function decayLines(series: Series[], title: string): string {
  const w = 460, h = 300, m = { l: 64, r: 16, t: 28, b: 40 };
  const all = series.flatMap(s => s.points);
  const tMax = Math.max(1e-300, ...all.map(p => p.t));
  const vMax = Math.max(1e-300, ...all.map(p => p.v));
  const px = (t: number) => m.l + t / tMax * (w - m.l - m.r);
  const py = (v: number) => h - m.b - v / vMax * (h - m.t - m.b);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">`);
  parts.push(`<rect width="${w}" height="${h}" fill="white"/>`);
  parts.push(`<text x="${fmt(w / 2)}" y="16" text-anchor="middle" ${FONT}>${title}</text>`);
  parts.push(`<rect x="${m.l}" y="${m.t}" width="${w - m.l - m.r}" height="${h - m.t - m.b}" fill="none" stroke="#444"/>`);
  parts.push(`<text x="${fmt(w / 2)}" y="${h - 8}" text-anchor="middle" ${FONT}>t</text>`);
  parts.push(`<text x="${m.l - 6}" y="${fmt(py(vMax))}" text-anchor="end" dominant-baseline="middle" ${FONT}>${vMax.toExponential(1)}</text>`);
  parts.push(`<text x="${m.l - 6}" y="${fmt(py(0))}" text-anchor="end" dominant-baseline="middle" ${FONT}>0</text>`);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = s.points.map(p => `${fmt(px(p.t))},${fmt(py(p.v))}`).join(" ");
    parts.push(`<polyline points="${pts}" fill="none" stroke="${color}"/>`);
    const ly = fmt(m.t + 14 * (i + 1));
    parts.push(`<line x1="${w - m.r - 110}" y1="${ly}" x2="${w - m.r - 90}" y2="${ly}" stroke="${color}"/>`);
    parts.push(`<text x="${w - m.r - 84}" y="${ly}" dominant-baseline="middle" ${FONT}>${s.kind}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
