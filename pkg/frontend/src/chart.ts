import { scaleLinear, scaleLog } from "d3-scale";
import { line } from "d3-shape";

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY?: boolean;
  /** Canvas size in inches; pixels follow from dpi (default 6.4 x 4.8 at 150). */
  widthIn?: number;
  heightIn?: number;
  dpi?: number;
}

// matplotlib's default cycle; fixed so identical inputs render identically
const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const FONT = "DejaVu Sans, sans-serif";

function fmt(v: number): string {
  return Number(v.toPrecision(6)).toString();
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function cleanSeries(s: Series, logY: boolean): { x: number[]; y: number[] } {
  const x: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < s.x.length; i++) {
    const xv = s.x[i];
    const yv = s.y[i];
    if (!Number.isFinite(xv) || !Number.isFinite(yv)) continue;
    if (logY && yv <= 0) continue;
    x.push(xv);
    y.push(yv);
  }
  return { x, y };
}

/**
 * Assemble a standalone SVG line chart.  The output string is a pure
 * function of the spec: fixed palette, fixed tick policy, fixed number
 * formatting, no generated ids or timestamps.
 */
export function renderChartSvg(spec: ChartSpec): string {
  const dpi = spec.dpi ?? 150;
  const width = Math.round((spec.widthIn ?? 6.4) * dpi);
  const height = Math.round((spec.heightIn ?? 4.8) * dpi);
  const scaleUi = dpi / 100; // keep fonts/strokes proportional to resolution
  const margin = {
    top: 42 * scaleUi,
    right: 20 * scaleUi,
    bottom: 52 * scaleUi,
    left: 72 * scaleUi,
  };
  const innerW = width - margin.left - margin.right;
  const innerH = height - margin.top - margin.bottom;

  const logY = spec.logY ?? false;
  const cleaned = spec.series.map((s) => cleanSeries(s, logY));
  const xs = cleaned.flatMap((s) => s.x);
  const ys = cleaned.flatMap((s) => s.y);
  if (xs.length === 0) {
    throw new Error("nothing to plot: no finite data points");
  }
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);

  const xScale = scaleLinear()
    .domain(xMin === xMax ? [xMin - 1, xMax + 1] : [xMin, xMax])
    .range([0, innerW])
    .nice();
  const yScale = logY
    ? scaleLog().domain([yMin, yMax === yMin ? yMin * 10 : yMax]).range([innerH, 0]).nice()
    : scaleLinear()
        .domain(yMin === yMax ? [yMin - 1, yMax + 1] : [yMin, yMax])
        .range([innerH, 0])
        .nice();

  const baseFont = 11 * scaleUi;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<g transform="translate(${fmt(margin.left)},${fmt(margin.top)})">`);

  // grid and ticks
  const xTicks = xScale.ticks(8);
  const yTicks = logY ? (yScale as ReturnType<typeof scaleLog>).ticks(6) : yScale.ticks(8);
  for (const t of xTicks) {
    const px = xScale(t);
    parts.push(
      `<line x1="${fmt(px)}" y1="0" x2="${fmt(px)}" y2="${fmt(innerH)}" ` +
        `stroke="#dddddd" stroke-width="${fmt(0.8 * scaleUi)}"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(innerH + 16 * scaleUi)}" text-anchor="middle" ` +
        `font-family="${FONT}" font-size="${fmt(baseFont)}">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const py = yScale(t);
    parts.push(
      `<line x1="0" y1="${fmt(py)}" x2="${fmt(innerW)}" y2="${fmt(py)}" ` +
        `stroke="#dddddd" stroke-width="${fmt(0.8 * scaleUi)}"/>`,
    );
    parts.push(
      `<text x="${fmt(-6 * scaleUi)}" y="${fmt(py + 4 * scaleUi)}" text-anchor="end" ` +
        `font-family="${FONT}" font-size="${fmt(baseFont)}">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="0" y="0" width="${fmt(innerW)}" height="${fmt(innerH)}" fill="none" ` +
      `stroke="#333333" stroke-width="${fmt(scaleUi)}"/>`,
  );

  // data
  cleaned.forEach((data, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    if (data.x.length >= 2) {
      const gen = line<[number, number]>()
        .x((d) => xScale(d[0]))
        .y((d) => yScale(d[1]));
      const pts: [number, number][] = data.x.map((xv, i) => [xv, data.y[i]]);
      parts.push(
        `<path d="${gen(pts) ?? ""}" fill="none" stroke="${color}" ` +
          `stroke-width="${fmt(1.8 * scaleUi)}"/>`,
      );
    }
    if (data.x.length <= 2) {
      // sparse series get explicit markers so single rows stay visible
      for (let i = 0; i < data.x.length; i++) {
        parts.push(
          `<circle cx="${fmt(xScale(data.x[i]))}" cy="${fmt(yScale(data.y[i]))}" ` +
            `r="${fmt(3.5 * scaleUi)}" fill="${color}"/>`,
        );
      }
    }
  });

  // legend (top-left corner of the axes)
  const legendX = 10 * scaleUi;
  let legendY = 10 * scaleUi;
  spec.series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    parts.push(
      `<line x1="${fmt(legendX)}" y1="${fmt(legendY + 4 * scaleUi)}" ` +
        `x2="${fmt(legendX + 22 * scaleUi)}" y2="${fmt(legendY + 4 * scaleUi)}" ` +
        `stroke="${color}" stroke-width="${fmt(2 * scaleUi)}"/>`,
    );
    parts.push(
      `<text x="${fmt(legendX + 28 * scaleUi)}" y="${fmt(legendY + 8 * scaleUi)}" ` +
        `font-family="${FONT}" font-size="${fmt(baseFont)}">${esc(s.label)}</text>`,
    );
    legendY += 16 * scaleUi;
  });

  // axis labels and title
  parts.push(
    `<text x="${fmt(innerW / 2)}" y="${fmt(innerH + 38 * scaleUi)}" text-anchor="middle" ` +
      `font-family="${FONT}" font-size="${fmt(12 * scaleUi)}">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="${fmt(-innerH / 2)}" y="${fmt(-52 * scaleUi)}" text-anchor="middle" ` +
      `transform="rotate(-90)" font-family="${FONT}" ` +
      `font-size="${fmt(12 * scaleUi)}">${esc(spec.yLabel)}</text>`,
  );
  parts.push(
    `<text x="${fmt(innerW / 2)}" y="${fmt(-14 * scaleUi)}" text-anchor="middle" ` +
      `font-family="${FONT}" font-size="${fmt(14 * scaleUi)}">${esc(spec.title)}</text>`,
  );
  parts.push("</g></svg>");
  return parts.join("\n");
}
